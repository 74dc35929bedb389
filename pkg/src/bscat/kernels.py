"""One-dimensional and symbolic oracles for the radial wave kernels.

Everything here works on radial reductions.  With m = (n-3)/2 and

    profile(t) = integral over S^(n-1) of phi(t w) dw,

the pairing of the m-fold time primitive of the sine-propagator kernel with
phi is

    pi (2 pi)^(-(n+1)/2) t^(m+1) profile(t)
        + integral_t^inf p(t/r) r^m profile(r) dr,

where p(s) = (-d/ds)^(m+1) (1-s^2)^m / (m! (4 pi)^(m+1)).  In dimension 3
the polynomial vanishes and the pairing collapses to t*profile(t)/(4 pi),
which is also what the sine propagator evaluates to at the origin.  These
reductions turn the distributional kernels (including the antisymmetric
ultra-hyperbolic fundamental solution) into well-posed 1-d quadratures.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .grid import (
    ScalarField,
    Space,
    SpaceTimeField,
    TruncationWarning,
)
from .spectral import sine_propagator
from .sphere import SphereQuadrature, spherical_pairing

__all__ = [
    "TailPolynomial",
    "tail_polynomial",
    "RadialProfile",
    "wave_kernel_radial_pairing",
    "wave_kernel_grid_pairing",
    "ultrahyperbolic_pairing_direct",
    "ultrahyperbolic_pairing_wave",
    "hardy_transform",
    "tail_weight_matrix",
    "tail_apply",
    "tail_operator",
]


@dataclass(frozen=True)
class TailPolynomial:
    """p(s) = (-d/ds)^(m+1) (1-s^2)^m / (m! (4 pi)^(m+1)) in odd dimension n.

    coeffs[k] is the exact rational coefficient of s^k; the true coefficient
    carries an extra pi^-(m+1).  Degree is m-1 (p == 0 when m = 0) and the
    parity alternates: odd in s for even m, even for odd m.
    """

    n: int
    m: int
    coeffs: tuple

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    @property
    def degree(self) -> int:
        for k in range(len(self.coeffs) - 1, -1, -1):
            if self.coeffs[k] != 0:
                return k
        return -1

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        scale = math.pi ** (-(self.m + 1))
        for k in range(len(self.coeffs) - 1, -1, -1):
            out = out * s + float(self.coeffs[k])
        return out * scale

    def pretty(self) -> str:
        if self.is_zero:
            return "0"
        parts = []
        for k, c in enumerate(self.coeffs):
            if c == 0:
                continue
            term = f"({c})/pi^{self.m + 1}"
            if k == 1:
                term += "*s"
            elif k > 1:
                term += f"*s^{k}"
            parts.append(term)
        return " + ".join(parts)


def tail_polynomial(n: int) -> TailPolynomial:
    """Exact coefficients by binomial expansion and repeated differentiation."""
    if n < 3 or n % 2 == 0:
        raise ValueError(f"n must be odd and >= 3, got {n}")
    m = (n - 3) // 2
    # (1 - s^2)^m as exact coefficients of s^k
    coeffs = [Fraction(0)] * (2 * m + 1)
    for j in range(m + 1):
        coeffs[2 * j] = Fraction((-1) ** j * math.comb(m, j))
    # apply (-d/ds) m+1 times
    for _ in range(m + 1):
        coeffs = [Fraction(-(k + 1)) * coeffs[k + 1] for k in range(len(coeffs) - 1)]
        if not coeffs:
            coeffs = [Fraction(0)]
    scale = Fraction(1, math.factorial(m) * 4 ** (m + 1))
    coeffs = [c * scale for c in coeffs]
    # sanity: degree <= m-1 and parity (odd in s iff m even), i.e. nonzero
    # coefficients only at exponents k with k+m odd
    for k, c in enumerate(coeffs):
        if c != 0 and (k > m - 1 or (k + m) % 2 == 0):
            raise AssertionError("tail polynomial degree/parity invariant violated")
    width = max(m, 1)
    coeffs = (coeffs + [Fraction(0)] * width)[:width]
    return TailPolynomial(n, m, tuple(coeffs))


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Sphere-averaged samples profile(t_k) = integral phi(t_k w) dw, t_k = k dt."""

    dt: float
    values: np.ndarray

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        vals = np.asarray(self.values, dtype=np.complex128)
        if not np.all(np.isfinite(vals.view(np.float64))):
            raise ValueError("profile values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def tmax(self) -> float:
        return self.dt * (len(self.values) - 1)

    def tgrid(self) -> np.ndarray:
        return self.dt * np.arange(len(self.values))

    def at(self, t: float) -> complex:
        """Linear interpolation between profile nodes."""
        if t < 0 or t > self.tmax:
            raise ValueError(f"t={t} outside profile range [0, {self.tmax}]")
        grid = self.tgrid()
        return complex(
            np.interp(t, grid, self.values.real) + 1j * np.interp(t, grid, self.values.imag)
        )

    @classmethod
    def from_callable(cls, fn, dt: float, tmax: float) -> RadialProfile:
        t = dt * np.arange(int(round(tmax / dt)) + 1)
        return cls(dt, np.asarray(fn(t), dtype=np.complex128))

    @classmethod
    def from_radial_callable(cls, fn, dt: float, tmax: float) -> RadialProfile:
        """Profile of a radial function phi(|x|) = fn(|x|): 4 pi fn(t)."""
        t = dt * np.arange(int(round(tmax / dt)) + 1)
        return cls(dt, 4.0 * np.pi * np.asarray(fn(t), dtype=np.complex128))

    @classmethod
    def from_field(
        cls, f: ScalarField, quad: SphereQuadrature, dt: float | None = None, tmax: float | None = None
    ) -> RadialProfile:
        """Profile of a grid field, one sphere quadrature per radius node.

        The default radius step is a quarter of the grid spacing: pairing
        formulas interpolate the profile linearly between nodes, and the
        1-percent route-agreement targets need the interpolation below that.
        """
        if dt is None:
            dt = f.spec.spacing / 4.0
        if tmax is None:
            tmax = f.spec.half_width - 3.0 * f.spec.spacing
        t = dt * np.arange(int(round(tmax / dt)) + 1)
        vals = np.array([spherical_pairing(f, tk, quad) for tk in t])
        return cls(dt, vals)


def wave_kernel_radial_pairing(profile: RadialProfile, t: float, n: int = 3) -> complex:
    """The two-term radial pairing formula evaluated by 1-d trapezoid."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t > profile.tmax:
        raise ValueError(f"t={t} beyond profile range {profile.tmax}")
    m = (n - 3) // 2
    lead = math.pi * (2.0 * math.pi) ** (-(n + 1) / 2.0) * t ** (m + 1) * profile.at(t)
    poly = tail_polynomial(n)
    if poly.is_zero:
        return complex(lead)
    grid = profile.tgrid()
    j0 = int(np.searchsorted(grid, t, side="right"))
    rs = np.concatenate(([t], grid[j0:]))
    vals = np.concatenate(([profile.at(t)], profile.values[j0:]))
    # r = 0 can only appear when t = 0; there r^m kills the integrand (m >= 1
    # whenever the polynomial is nonzero)
    ratio = np.divide(t, rs, out=np.zeros_like(rs), where=rs > 0)
    integrand = poly(ratio) * rs**m * vals
    tail = np.trapezoid(integrand, rs)
    return complex(lead + tail)


def wave_kernel_grid_pairing(phi: ScalarField, t: float) -> complex:
    """Multiplier-route pairing: sine propagator of the reflected field at 0.

    This is the grid-side counterpart of wave_kernel_radial_pairing for n=3,
    where the kernel equals its own primitive.
    """
    phi.require(Space.POSITION)
    if t < 0:
        raise ValueError("t must be nonnegative")
    refl = phi.values
    for ax in range(3):
        refl = np.roll(np.flip(refl, axis=ax), 1, axis=ax)
    out = sine_propagator(phi.with_values(refl), t)
    i0 = phi.spec.origin_index()
    return complex(out.values[i0, i0, i0])


def _d_dt(vals: np.ndarray, dt: float) -> np.ndarray:
    """Centered differences, one-sided at the ends."""
    return np.gradient(vals, dt, edge_order=1)


def ultrahyperbolic_pairing_direct(phi: RadialProfile, psi: RadialProfile) -> complex:
    """<E, phi x psi> for n=3 via the reduced quadrature
    (1/(16 pi^2)) integral (t phi~)' (t psi~) dt."""
    if phi.dt != psi.dt or len(phi.values) != len(psi.values):
        raise ValueError("profiles must share their grid")
    t = phi.tgrid()
    left = _d_dt(t * phi.values, phi.dt)
    right = t * psi.values
    return complex(np.trapezoid(left * right, dx=phi.dt) / (16.0 * math.pi**2))


def ultrahyperbolic_pairing_wave(phi: RadialProfile, psi: RadialProfile) -> complex:
    """Same pairing through the wave-kernel factorization:
    -(1/(16 pi^2)) integral (t phi~) d/dt (t psi~) dt."""
    if phi.dt != psi.dt or len(phi.values) != len(psi.values):
        raise ValueError("profiles must share their grid")
    t = phi.tgrid()
    left = t * phi.values
    right = _d_dt(t * psi.values, psi.dt)
    return complex(-np.trapezoid(left * right, dx=phi.dt) / (16.0 * math.pi**2))


def hardy_transform(h: np.ndarray, dt: float):
    """H(t) = integral_t^T h(r)/r dr by reverse cumulative trapezoid.

    Returns (H samples, integral H^2 / integral h^2).  The node at r=0 uses
    the constant extension h(0)/dt of the integrand, which undercounts the
    log-divergent cell; callers wanting tight integrals should sample with a
    small dt.  Warns when h has not decayed at the right endpoint.
    """
    h = np.asarray(h, dtype=float)
    if h.ndim != 1 or h.size < 3:
        raise ValueError("h must be a 1-d array with at least 3 samples")
    if np.any(h < 0):
        raise ValueError("h must be nonnegative")
    hmax = h.max()
    if hmax > 0 and h[-1] > 1e-8 * hmax:
        warnings.warn(
            "h has a non-negligible tail at the end of its grid; "
            "the transform is truncated there",
            TruncationWarning,
            stacklevel=2,
        )
    r = dt * np.arange(h.size)
    g = np.empty_like(h)
    g[1:] = h[1:] / r[1:]
    g[0] = g[1]
    cum = cumulative_trapezoid(g, dx=dt, initial=0.0)
    H = cum[-1] - cum
    num = np.trapezoid(H**2, dx=dt)
    den = np.trapezoid(h**2, dx=dt)
    ratio = 0.0 if den == 0.0 else float(num / den)
    return H, ratio


def tail_weight_matrix(tgrid: np.ndarray, n: int) -> np.ndarray:
    """W[k, j] with (T u)(t_k) = sum_j W[k, j] u(t_j), the trapezoid rule for
    integral_{t_k}^inf p(t_k/r) u(r) / r dr applied to spherical-mean samples
    u(t_j).  The r = 0 node never contributes: u carries a t^(m+1) factor and
    the polynomial is only nonzero for m >= 1."""
    tgrid = np.asarray(tgrid, dtype=float)
    kk = len(tgrid)
    poly = tail_polynomial(n)
    w = np.zeros((kk, kk))
    if poly.is_zero or kk < 2:
        return w
    dt = tgrid[1] - tgrid[0]
    for k in range(kk):
        js = np.arange(k, kk)
        rs = tgrid[js]
        ratio = np.divide(tgrid[k], rs, out=np.zeros_like(rs), where=rs > 0)
        coef = poly(ratio) * np.divide(1.0, rs, out=np.zeros_like(rs), where=rs > 0)
        trap = np.full(js.size, dt)
        if js.size >= 2:
            trap[0] = trap[-1] = dt / 2.0
        else:
            trap[:] = 0.0
        w[k, js] = coef * trap
    return w


def tail_apply(values: np.ndarray, tgrid: np.ndarray, n: int) -> np.ndarray:
    """Apply the tail operator along the last axis of `values`."""
    w = tail_weight_matrix(tgrid, n)
    return np.tensordot(values, w, axes=([-1], [1]))


def tail_operator(series: SpaceTimeField, n: int = 3) -> SpaceTimeField:
    """Tail operator on a slice stack; identically zero in dimension 3."""
    poly = tail_polynomial(n)
    kk = len(series.tgrid)
    if poly.is_zero:
        zero = np.zeros((series.spec.npts,) * 3, dtype=np.complex128)
        slices = tuple(
            ScalarField(series.spec, zero.copy(), Space.POSITION) for _ in range(kk)
        )
        return SpaceTimeField(series.spec, series.tgrid, slices)
    stack = np.stack([s.values for s in series.slices], axis=-1)
    out = tail_apply(stack, series.tgrid, n)
    slices = tuple(
        ScalarField(series.spec, np.ascontiguousarray(out[..., k]), Space.POSITION)
        for k in range(kk)
    )
    return SpaceTimeField(series.spec, series.tgrid, slices)
