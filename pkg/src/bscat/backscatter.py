"""The bilinear wave transform, the quadratic backscattering operator, and
the trilinear form, each reachable by two independent routes.

Time route (dimension 3, where the tail polynomial vanishes):

    A(f, g)(., t_k) = S(f, g)(., t_k) / (4 pi) + tail,
    B2(f, g) = -4 sum_k w_k cos(t_k |D|) A(f, g)(., t_k),

with trapezoid weights w_k on the aligned time grid t_k = k h.  The cosine
propagator acting on the slices (rather than on the test function) is the
adjoint reading of the duality that defines B2; the trilinear form evaluates
both readings and reports their difference, which is a pure re-association
check.  The frequency route compares the space-time transform of A against
the spherical mean of the transformed inputs at half coordinates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.fft as _fft

from .grid import (
    GridSpec,
    ScalarField,
    Space,
    SpaceTimeField,
    TruncationWarning,
    _radius_sq,
    effective_radius,
    fft_workers,
    forward_transform,
    frequency_as_position,
    pairing,
    shell_index,
)
from .kernels import tail_operator
from .sphere import (
    SphereQuadrature,
    _SpectralShifter,
    bilinear_spherical_mean,
    sample_offgrid,
    spherical_mean_at_point,
    wrap_guard,
)

__all__ = [
    "time_grid",
    "default_steps",
    "bilinear_wave_transform",
    "backscatter_quadratic",
    "trilinear_form",
    "TrilinearReport",
    "fourier_route_check",
    "support_fraction",
    "nonradial_energy_fraction",
    "spacetime_weighted_norm",
]

_M3_PREFACTOR = 1.0 / (4.0 * math.pi)  # pi (2 pi)^-2, the n=3 leading constant


def time_grid(spec: GridSpec, steps: int) -> np.ndarray:
    """t_k = k h, k = 0..steps, aligned with the grid spacing."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    return spec.spacing * np.arange(steps + 1)


def default_steps(spec: GridSpec, r1: float, r2: float) -> int:
    """Horizon rule: cover 1.2 x the interaction radius sum."""
    return max(2, int(math.ceil(1.2 * (r1 + r2) / spec.spacing)))


def _slice_generator(f, g, tgrid, quad):
    """Yield (k, A slice values) streaming over the time grid."""
    sf = _SpectralShifter(f)
    sg = sf if g is f or np.array_equal(g.values, f.values) else _SpectralShifter(g)
    n = f.spec.npts
    for k, t in enumerate(tgrid):
        if t == 0.0:
            yield k, np.zeros((n, n, n), dtype=np.complex128)
            continue
        s_slice = bilinear_spherical_mean(f, g, t, quad, _shifters=(sf, sg), _guard=False)
        yield k, _M3_PREFACTOR * s_slice.values


def _check_pair(f: ScalarField, g: ScalarField) -> None:
    f.require(Space.POSITION)
    g.require(Space.POSITION)
    if f.spec != g.spec:
        raise ValueError("fields must share a grid")


def _horizon_check(f, g, tgrid, r1, r2):
    t_end = tgrid[-1]
    if t_end < r1 + r2:
        warnings.warn(
            f"time horizon {t_end:.3g} is below the interaction radius sum "
            f"{r1 + r2:.3g}; the slice integral may be truncated",
            TruncationWarning,
            stacklevel=3,
        )


def bilinear_wave_transform(
    f: ScalarField, g: ScalarField, steps: int, quad: SphereQuadrature
) -> SpaceTimeField:
    """A(f, g) on the time grid: the scaled spherical mean plus the tail term.

    In dimension 3 the tail polynomial vanishes and the tail term is an exact
    zero stack; the code path still assembles both pieces so the general-n
    structure stays exercised.
    """
    _check_pair(f, g)
    tgrid = time_grid(f.spec, steps)
    r1, r2 = effective_radius(f), effective_radius(g)
    wrap_guard(f, g, float(tgrid[-1]), support_radius=0.5 * (r1 + r2))
    main = [vals for _, vals in _slice_generator(f, g, tgrid, quad)]
    sphere_stack = SpaceTimeField(
        f.spec,
        tgrid,
        tuple(ScalarField(f.spec, v / _M3_PREFACTOR, Space.POSITION) for v in main),
    )
    tail = tail_operator(sphere_stack, n=3)  # exact zero stack in dimension 3
    slices = tuple(
        ScalarField(f.spec, v + t.values, Space.POSITION)
        for v, t in zip(main, tail.slices)
    )
    return SpaceTimeField(f.spec, tgrid, slices)


def _cos_multiplier(spec: GridSpec, t: float) -> np.ndarray:
    h = spec.spacing
    xi = 2 * np.pi * _fft.fftfreq(spec.npts, d=h)
    r = np.sqrt(xi[:, None, None] ** 2 + xi[None, :, None] ** 2 + xi[None, None, :] ** 2)
    return np.cos(t * r)


def backscatter_quadratic(
    f: ScalarField, g: ScalarField, steps: int, quad: SphereQuadrature
) -> ScalarField:
    """B2(f, g) by accumulating cosine-propagated wave-transform slices."""
    _check_pair(f, g)
    tgrid = time_grid(f.spec, steps)
    r1, r2 = effective_radius(f), effective_radius(g)
    wrap_guard(f, g, float(tgrid[-1]), support_radius=0.5 * (r1 + r2))
    _horizon_check(f, g, tgrid, r1, r2)
    dt = f.spec.spacing
    w = np.full(len(tgrid), dt)
    w[0] = w[-1] = dt / 2.0
    acc = np.zeros((f.spec.npts,) * 3, dtype=np.complex128)
    workers = fft_workers()
    for k, vals in _slice_generator(f, g, tgrid, quad):
        if tgrid[k] == 0.0:
            continue
        acc += w[k] * _cos_multiplier(f.spec, tgrid[k]) * _fft.fftn(vals, workers=workers)
    out = -4.0 * _fft.ifftn(acc, workers=workers)
    return ScalarField(f.spec, out, Space.POSITION)


@dataclass(frozen=True)
class TrilinearReport:
    """Both evaluations of the trilinear form and their relative difference."""

    value_route_i: complex
    value_route_ii: complex
    npts: int
    half_width: float
    steps: int
    degree: int

    @property
    def rel_diff(self) -> float:
        scale = max(abs(self.value_route_i), abs(self.value_route_ii))
        if scale == 0.0:
            return 0.0
        return abs(self.value_route_i - self.value_route_ii) / scale

    def as_dict(self) -> dict:
        return {
            "N": self.npts,
            "L": self.half_width,
            "K": self.steps,
            "degree": self.degree,
            "value_route_i": [self.value_route_i.real, self.value_route_i.imag],
            "value_route_ii": [self.value_route_ii.real, self.value_route_ii.imag],
            "rel_diff": self.rel_diff,
        }


def trilinear_form(
    f: ScalarField, g: ScalarField, h: ScalarField, steps: int, quad: SphereQuadrature
) -> TrilinearReport:
    """Q(f, g, h) two ways: pairing h against B2(f, g), and the space-time
    double integral with the propagator moved onto h."""
    _check_pair(f, g)
    h.require(Space.POSITION)
    if h.spec != f.spec:
        raise ValueError("fields must share a grid")
    tgrid = time_grid(f.spec, steps)
    r1, r2 = effective_radius(f), effective_radius(g)
    wrap_guard(f, g, float(tgrid[-1]), support_radius=0.5 * (r1 + r2))
    _horizon_check(f, g, tgrid, r1, r2)
    dt = f.spec.spacing
    wts = np.full(len(tgrid), dt)
    wts[0] = wts[-1] = dt / 2.0
    workers = fft_workers()
    n = f.spec.npts
    dv = f.spec.spacing ** 3
    hhat = _fft.fftn(h.values, workers=workers)
    acc = np.zeros((n, n, n), dtype=np.complex128)
    route_ii = 0.0j
    for k, vals in _slice_generator(f, g, tgrid, quad):
        if tgrid[k] == 0.0:
            continue
        cosm = _cos_multiplier(f.spec, tgrid[k])
        acc += wts[k] * cosm * _fft.fftn(vals, workers=workers)
        cos_h = _fft.ifftn(cosm * hhat, workers=workers)
        route_ii += wts[k] * dv * np.sum(vals * cos_h)
    b2 = ScalarField(f.spec, -4.0 * _fft.ifftn(acc, workers=workers), Space.POSITION)
    qi = pairing(h, b2)
    qii = -4.0 * route_ii
    return TrilinearReport(
        complex(qi), complex(qii), f.spec.npts, f.spec.half_width, steps, quad.degree
    )


def fourier_route_check(
    f: ScalarField,
    g: ScalarField,
    testpoints,
    quad: SphereQuadrature,
    steps: int,
    order: int = 3,
) -> list:
    """Compare the space-time transform of A against the half-coordinate
    spherical mean of the transformed inputs at selected (xi, tau) points.

    The left side sine-transforms the (odd in t) slice stack; the right side
    is S(fhat, ghat)(xi/2, tau/2) / (8 i (2 pi)^2) sampled by interpolation
    of order `order` on the frequency grid.
    """
    _check_pair(f, g)
    tgrid = time_grid(f.spec, steps)
    band = np.pi / f.spec.spacing
    pts = [(np.asarray(xi, dtype=float), float(tau)) for xi, tau in testpoints]
    for xi, tau in pts:
        if abs(tau) > band:
            raise ValueError(f"tau={tau} beyond the resolvable band |tau| <= {band:.6g}")
        if np.any(np.abs(xi) > f.spec.freq_half_width):
            raise ValueError(f"xi={xi} outside the frequency box")
    wts = np.full(len(tgrid), f.spec.spacing)
    wts[0] = wts[-1] = f.spec.spacing / 2.0
    fhat_pos = frequency_as_position(forward_transform(f))
    ghat_pos = frequency_as_position(forward_transform(g))
    lhs = np.zeros(len(pts), dtype=np.complex128)
    xi_mat = np.array([xi for xi, _ in pts])
    taus = np.array([tau for _, tau in pts])
    for k, vals in _slice_generator(f, g, tgrid, quad):
        t = tgrid[k]
        if t == 0.0:
            continue
        a_hat = forward_transform(ScalarField(f.spec, vals, Space.POSITION))
        samples = sample_offgrid(frequency_as_position(a_hat), xi_mat, order=order)
        lhs += -2j * wts[k] * np.sin(t * taus) * samples
    rows = []
    const = 1.0 / (8j * (2 * np.pi) ** 2)
    for (xi, tau), lv in zip(pts, lhs):
        rv = const * spherical_mean_at_point(
            fhat_pos, ghat_pos, xi / 2.0, abs(tau) / 2.0, quad, order=order
        )
        if tau < 0:
            rv = -rv  # the transform of A is odd in tau
        scale = max(abs(lv), abs(rv))
        rows.append(
            {
                "xi": tuple(xi),
                "tau": tau,
                "lhs": complex(lv),
                "rhs": complex(rv),
                "rel_err": float(abs(lv - rv) / scale) if scale > 0 else 0.0,
            }
        )
    return rows


def support_fraction(field: ScalarField, r1: float, r2: float) -> float:
    """Energy fraction outside the ball of radius sqrt(r1^2+r2^2) + 3h."""
    field.require(Space.POSITION)
    radius = math.sqrt(r1**2 + r2**2) + 3.0 * field.spec.spacing
    ids, radii = shell_index(field.spec)
    energy = np.bincount(ids, weights=np.abs(field.values.ravel()) ** 2)
    total = energy.sum()
    if total == 0.0:
        return 0.0
    return float(energy[radii > radius].sum() / total)


def nonradial_energy_fraction(field: ScalarField) -> float:
    """Energy fraction left after projecting onto exact radial shells."""
    field.require(Space.POSITION)
    ids, _ = shell_index(field.spec)
    flat = field.values.ravel()
    counts = np.bincount(ids)
    mean_re = np.bincount(ids, weights=flat.real) / counts
    mean_im = np.bincount(ids, weights=flat.imag) / counts
    resid = flat - (mean_re[ids] + 1j * mean_im[ids])
    total = np.sum(np.abs(flat) ** 2)
    if total == 0.0:
        return 0.0
    return float(np.sum(np.abs(resid) ** 2) / total)


def spacetime_weighted_norm(series: SpaceTimeField, a: float) -> float:
    """|(1+|x|^2+t^2)^(a/2) u|_L2 over the box and the (half-line) time grid."""
    r2 = _radius_sq(series.spec)
    dv = series.spec.spacing ** 3
    w = series.time_weights()
    total = 0.0
    for wk, t, s in zip(w, series.tgrid, series.slices):
        weight = (1.0 + r2 + t * t) ** a
        total += wk * dv * float(np.sum(weight * np.abs(s.values) ** 2))
    return math.sqrt(total)
