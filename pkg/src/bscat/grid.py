"""Periodic computational domain: grids, complex scalar fields, Fourier
transforms with continuous normalization, and discrete L2 geometry.

The box is the cube [-L, L)^3 sampled at N points per axis (N even), node
coordinates x_i = -L + i*h with h = 2L/N.  The matching frequency nodes are
the DFT frequencies xi_k = pi*k/L, k = -N/2 .. N/2-1, stored in ascending
order.  The forward transform approximates

    fhat(xi) = integral f(x) exp(-i x.xi) dx

by the h^3-scaled DFT; the inverse carries the (2 pi)^-3.
"""

from __future__ import annotations

import enum
import json
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.fft as _fft

__all__ = [
    "Space",
    "GridSpec",
    "ScalarField",
    "SpaceTimeField",
    "SpaceTagError",
    "GridMismatchError",
    "SupportViolationWarning",
    "WrapContaminationWarning",
    "TruncationWarning",
    "forward_transform",
    "inverse_transform",
    "frequency_as_position",
    "sample_gaussian",
    "gaussian_transform",
    "l2_norm",
    "inner_product",
    "pairing",
    "translate",
    "effective_radius",
    "shell_index",
    "read_field",
    "write_field",
    "fft_workers",
    "set_fft_workers",
]

_FFT_WORKERS = -1  # scipy.fft workers; -1 = all cores, results are worker-count independent


def fft_workers() -> int:
    return _FFT_WORKERS


def set_fft_workers(n: int) -> None:
    global _FFT_WORKERS
    _FFT_WORKERS = int(n)


class Space(enum.Enum):
    POSITION = "position"
    FREQUENCY = "frequency"


class SpaceTagError(ValueError):
    """Operation applied to a field with the wrong space tag."""


class GridMismatchError(ValueError):
    """Operands live on different grids."""


class SupportViolationWarning(UserWarning):
    """Sampled bump does not fit inside the box with its 6-sigma ball."""


class WrapContaminationWarning(UserWarning):
    """Periodic wrap-around may pollute a propagated or sphere-sampled field."""


class TruncationWarning(UserWarning):
    """A time or radial integral was cut before the integrand decayed."""


@dataclass(frozen=True)
class GridSpec:
    """Cubic periodic grid: N points per axis on [-L, L), spacing h = 2L/N."""

    npts: int
    half_width: float

    def __post_init__(self):
        if self.npts % 2 != 0 or self.npts < 16:
            raise ValueError(f"npts must be even and >= 16, got {self.npts}")
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.npts

    @property
    def freq_spacing(self) -> float:
        return np.pi / self.half_width

    @property
    def freq_half_width(self) -> float:
        """Half-width of the frequency box; xi nodes run over [-pi/h, pi/h)."""
        return np.pi * self.npts / (2.0 * self.half_width)

    def axis(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.npts)

    def freq_axis(self) -> np.ndarray:
        return self.freq_spacing * (np.arange(self.npts) - self.npts // 2)

    def origin_index(self) -> int:
        return self.npts // 2

    def freq_grid(self) -> GridSpec:
        """The frequency nodes relabeled as a position grid (exact duality)."""
        return GridSpec(self.npts, self.freq_half_width)


@lru_cache(maxsize=32)
def _radius_sq(spec: GridSpec) -> np.ndarray:
    ax2 = spec.axis() ** 2
    return ax2[:, None, None] + ax2[None, :, None] + ax2[None, None, :]


@lru_cache(maxsize=32)
def _freq_radius(spec: GridSpec) -> np.ndarray:
    """|xi| on the natural-order frequency grid."""
    ax2 = spec.freq_axis() ** 2
    return np.sqrt(ax2[:, None, None] + ax2[None, :, None] + ax2[None, None, :])


@lru_cache(maxsize=32)
def shell_index(spec: GridSpec):
    """Group grid points by exact |x|^2: returns (flat shell ids, shell radii).

    Two nodes share an id iff they have identical squared distance to the
    origin node, which makes shell averages an exact radial projection.
    """
    n = spec.npts
    k = np.arange(n) - n // 2
    s = (k**2)[:, None, None] + (k**2)[None, :, None] + (k**2)[None, None, :]
    flat = s.ravel()
    radii = spec.spacing * np.sqrt(np.arange(flat.max() + 1, dtype=float))
    return flat, radii


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Complex samples of a function on a GridSpec, tagged by representation.

    Values are stored in natural axis order (coordinates ascending) for both
    space tags; fields are treated as immutable after construction.
    """

    spec: GridSpec
    values: np.ndarray
    space: Space = Space.POSITION

    def __post_init__(self):
        n = self.spec.npts
        if self.values.shape != (n, n, n):
            raise ValueError(f"values shape {self.values.shape} != {(n, n, n)}")
        if self.values.dtype != np.complex128:
            object.__setattr__(self, "values", self.values.astype(np.complex128))
        if not np.all(np.isfinite(self.values.view(np.float64))):
            raise ValueError("field values must be finite")

    def require(self, space: Space) -> None:
        if self.space is not space:
            raise SpaceTagError(f"expected {space.value}-space field, got {self.space.value}")

    def with_values(self, values: np.ndarray) -> ScalarField:
        return ScalarField(self.spec, values, self.space)

    def __add__(self, other: ScalarField) -> ScalarField:
        _check_same(self, other)
        return ScalarField(self.spec, self.values + other.values, self.space)

    def __sub__(self, other: ScalarField) -> ScalarField:
        _check_same(self, other)
        return ScalarField(self.spec, self.values - other.values, self.space)

    def __mul__(self, c) -> ScalarField:
        return ScalarField(self.spec, self.values * complex(c), self.space)

    __rmul__ = __mul__

    def __neg__(self) -> ScalarField:
        return ScalarField(self.spec, -self.values, self.space)


def _check_same(f: ScalarField, g: ScalarField) -> None:
    if f.spec != g.spec:
        raise GridMismatchError(f"grids differ: {f.spec} vs {g.spec}")
    if f.space is not g.space:
        raise SpaceTagError(f"space tags differ: {f.space.value} vs {g.space.value}")


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """A time-indexed stack of position-space slices on a shared grid.

    The time grid is t_k = k*h aligned with the spatial spacing, so wave
    propagation and sphere radii land on commensurate scales.
    """

    spec: GridSpec
    tgrid: np.ndarray
    slices: tuple

    def __post_init__(self):
        if len(self.slices) != len(self.tgrid):
            raise ValueError("one slice per time node required")
        for s in self.slices:
            if s.spec != self.spec:
                raise GridMismatchError("all slices must share the grid")

    @property
    def steps(self) -> int:
        return len(self.tgrid) - 1

    def slice_norms(self) -> np.ndarray:
        return np.array([l2_norm(s) for s in self.slices])

    def time_weights(self) -> np.ndarray:
        """Trapezoid weights on the (uniform) time grid."""
        dt = self.tgrid[1] - self.tgrid[0] if len(self.tgrid) > 1 else 1.0
        w = np.full(len(self.tgrid), dt)
        w[0] = w[-1] = dt / 2.0
        return w


def _shift3(v: np.ndarray) -> np.ndarray:
    return _fft.fftshift(v)


def _ishift3(v: np.ndarray) -> np.ndarray:
    return _fft.ifftshift(v)


def forward_transform(f: ScalarField) -> ScalarField:
    """Continuous-transform approximation fhat(xi_k) on the frequency nodes."""
    f.require(Space.POSITION)
    h = f.spec.spacing
    vals = h**3 * _shift3(_fft.fftn(_ishift3(f.values), workers=_FFT_WORKERS))
    return ScalarField(f.spec, vals, Space.FREQUENCY)


def inverse_transform(F: ScalarField) -> ScalarField:
    """Inverse of forward_transform, including the (2 pi)^-3 factor."""
    F.require(Space.FREQUENCY)
    h = F.spec.spacing
    vals = _shift3(_fft.ifftn(_ishift3(F.values), workers=_FFT_WORKERS)) / h**3
    return ScalarField(F.spec, vals, Space.POSITION)


def frequency_as_position(F: ScalarField) -> ScalarField:
    """Relabel a frequency-space field as a position-space field on the xi grid.

    The frequency nodes of a grid are exactly the position nodes of its dual
    grid, so this is a pure retag; it is what lets weighted norms be taken on
    transforms.
    """
    F.require(Space.FREQUENCY)
    return ScalarField(F.spec.freq_grid(), F.values, Space.POSITION)


def sample_gaussian(
    spec: GridSpec,
    center=(0.0, 0.0, 0.0),
    width: float = 1.0,
    modulation=(0.0, 0.0, 0.0),
    amplitude: complex = 1.0,
) -> ScalarField:
    """amplitude * exp(-|x-c|^2/(2 w^2)) * exp(i k.x) sampled on the grid.

    Warns when the 6-sigma ball around the center pokes out of the box; such
    a field is not safely "compactly supported" for the support-based tests.
    """
    if width <= 0:
        raise ValueError("width must be positive")
    center = np.asarray(center, dtype=float)
    modulation = np.asarray(modulation, dtype=float)
    if np.linalg.norm(center) + 6.0 * width >= spec.half_width:
        warnings.warn(
            f"gaussian 6-sigma ball (|c|={np.linalg.norm(center):.3g}, w={width:.3g}) "
            f"exceeds the box half-width {spec.half_width:.3g}",
            SupportViolationWarning,
            stacklevel=2,
        )
    ax = spec.axis()
    sq = [(ax - c) ** 2 for c in center]
    r2 = sq[0][:, None, None] + sq[1][None, :, None] + sq[2][None, None, :]
    vals = np.exp(-r2 / (2.0 * width**2)).astype(np.complex128)
    if np.any(modulation != 0.0):
        ph = [np.exp(1j * k * ax) for k in modulation]
        vals *= ph[0][:, None, None] * ph[1][None, :, None] * ph[2][None, None, :]
    return ScalarField(spec, complex(amplitude) * vals, Space.POSITION)


def gaussian_transform(
    spec: GridSpec,
    center=(0.0, 0.0, 0.0),
    width: float = 1.0,
    modulation=(0.0, 0.0, 0.0),
    amplitude: complex = 1.0,
) -> ScalarField:
    """Closed-form transform of sample_gaussian on the frequency nodes."""
    center = np.asarray(center, dtype=float)
    modulation = np.asarray(modulation, dtype=float)
    xi = spec.freq_axis()
    sq = [(xi - k) ** 2 for k in modulation]
    r2 = sq[0][:, None, None] + sq[1][None, :, None] + sq[2][None, None, :]
    vals = (2 * np.pi) ** 1.5 * width**3 * np.exp(-(width**2) * r2 / 2.0)
    vals = vals.astype(np.complex128)
    if np.any(center != 0.0):
        ph = [np.exp(-1j * c * (xi - k)) for c, k in zip(center, modulation)]
        vals *= ph[0][:, None, None] * ph[1][None, :, None] * ph[2][None, None, :]
    return ScalarField(spec, complex(amplitude) * vals, Space.FREQUENCY)


def _volume_element(f: ScalarField) -> float:
    if f.space is Space.POSITION:
        return f.spec.spacing ** 3
    return f.spec.freq_spacing ** 3


def l2_norm(f: ScalarField) -> float:
    """Discrete L2 norm with the volume element of the field's space."""
    dv = _volume_element(f)
    return float(np.sqrt(dv * np.sum(np.abs(f.values) ** 2)))


def inner_product(f: ScalarField, g: ScalarField) -> complex:
    """Sesquilinear product <f, g> = integral f conj(g); <f,f> = |f|^2."""
    _check_same(f, g)
    dv = _volume_element(f)
    return complex(dv * np.sum(f.values * np.conj(g.values)))


def pairing(f: ScalarField, g: ScalarField) -> complex:
    """Real-bilinear pairing integral f*g (no conjugation)."""
    _check_same(f, g)
    dv = _volume_element(f)
    return complex(dv * np.sum(f.values * g.values))


def translate(f: ScalarField, v) -> ScalarField:
    """Exact periodic shift x -> x - v via a frequency-side phase."""
    f.require(Space.POSITION)
    v = np.asarray(v, dtype=float)
    h = f.spec.spacing
    xi = 2 * np.pi * _fft.fftfreq(f.spec.npts, d=h)
    F = _fft.fftn(f.values, workers=_FFT_WORKERS)
    ph = (
        np.exp(-1j * v[0] * xi)[:, None, None]
        * np.exp(-1j * v[1] * xi)[None, :, None]
        * np.exp(-1j * v[2] * xi)[None, None, :]
    )
    vals = _fft.ifftn(F * ph, workers=_FFT_WORKERS)
    return ScalarField(f.spec, vals, Space.POSITION)


def effective_radius(f: ScalarField, tail: float = 1e-9) -> float:
    """Smallest shell radius containing all but `tail` of the field's energy.

    For a sampled gaussian this sits near the 5-sigma ball; it is the working
    notion of compact support for the guard rules and support tests.
    """
    f.require(Space.POSITION)
    ids, radii = shell_index(f.spec)
    e = np.bincount(ids, weights=np.abs(f.values.ravel()) ** 2)
    total = e.sum()
    if total == 0.0:
        return 0.0
    below = np.cumsum(e) >= (1.0 - tail) * total
    return float(radii[int(np.argmax(below))])


# ---------------------------------------------------------------------------
# Field file format: JSON header + raw interleaved little-endian complex128.

_HEADER_KEYS = {"n", "N", "L", "space", "dtype", "layout"}


def write_field(basename, f: ScalarField) -> tuple:
    """Write <basename>.json / <basename>.bin; returns the two paths."""
    base = Path(basename)
    jpath = base.with_suffix(".json")
    bpath = base.with_suffix(".bin")
    header = {
        "n": 3,
        "N": f.spec.npts,
        "L": f.spec.half_width,
        "space": f.space.value,
        "dtype": "c128",
        "layout": "row-major z-fastest",
    }
    jpath.write_text(json.dumps(header, indent=2) + "\n")
    bpath.write_bytes(np.ascontiguousarray(f.values).astype("<c16").tobytes())
    return jpath, bpath


def read_field(basename) -> ScalarField:
    base = Path(basename)
    jpath = base.with_suffix(".json")
    bpath = base.with_suffix(".bin")
    header = json.loads(jpath.read_text())
    missing = _HEADER_KEYS - set(header)
    if missing:
        raise ValueError(f"field header missing keys: {sorted(missing)}")
    if header["n"] != 3 or header["dtype"] != "c128":
        raise ValueError(f"unsupported field header: {header}")
    n = int(header["N"])
    vals = np.frombuffer(bpath.read_bytes(), dtype="<c16").astype(np.complex128)
    if vals.size != n**3:
        raise ValueError(f"binary payload has {vals.size} values, expected {n**3}")
    spec = GridSpec(n, float(header["L"]))
    return ScalarField(spec, vals.reshape(n, n, n), Space(header["space"]))
