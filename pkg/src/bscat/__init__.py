"""Numerical study of the quadratic backscattering operator on a periodic
3-d grid: wave propagators, weighted Sobolev norms, sphere quadrature,
radial kernel oracles, and empirical boundedness probes."""

__version__ = "0.1.0"

from .grid import (
    GridMismatchError,
    GridSpec,
    ScalarField,
    Space,
    SpaceTagError,
    SpaceTimeField,
    SupportViolationWarning,
    TruncationWarning,
    WrapContaminationWarning,
    effective_radius,
    forward_transform,
    frequency_as_position,
    gaussian_transform,
    inner_product,
    inverse_transform,
    l2_norm,
    pairing,
    read_field,
    sample_gaussian,
    translate,
    write_field,
)
from .spectral import (
    DyadicPartition,
    SobolevIndex,
    bessel_multiplier,
    commutator_growth_probe,
    cosine_evolution,
    cosine_propagator,
    dyadic_decompose,
    dyadic_norm,
    sine_propagator,
    sobolev_norm,
    spatial_weight,
)
from .sphere import (
    SphereQuadrature,
    bilinear_spherical_mean,
    cap_measure_mc,
    default_quadrature,
    load_quadrature,
    product_quadrature,
    sample_offgrid,
    save_quadrature,
    spherical_mean_at_point,
    spherical_pairing,
)
from .kernels import (
    RadialProfile,
    TailPolynomial,
    hardy_transform,
    tail_operator,
    tail_polynomial,
    ultrahyperbolic_pairing_direct,
    ultrahyperbolic_pairing_wave,
    wave_kernel_grid_pairing,
    wave_kernel_radial_pairing,
)
from .backscatter import (
    TrilinearReport,
    backscatter_quadratic,
    bilinear_wave_transform,
    fourier_route_check,
    nonradial_energy_fraction,
    spacetime_weighted_norm,
    support_fraction,
    time_grid,
    trilinear_form,
)
from .normprobe import (
    ExponentTuple,
    GaussianParams,
    PipelineOptions,
    RatioReport,
    WitnessFamily,
    dilate_family,
    in_main_region,
    in_spherical_region,
    in_wave_region,
    modulate_family,
    ratio_sweep,
    region_scan,
    translate_family,
)
