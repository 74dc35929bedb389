"""Fourier multipliers, wave propagators, weighted Sobolev norms, the dyadic
spatial partition, and the commutator growth probe.

The weighted space with index (a, b) carries the norm |<x>^a <D>^b u|_L2,
where <x> = (1+|x|^2)^(1/2) and <D> multiplies the transform by <xi>.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as _fft

from .grid import (
    GridSpec,
    ScalarField,
    Space,
    SpaceTimeField,
    SpaceTagError,
    _freq_radius,
    _radius_sq,
    fft_workers,
    l2_norm,
)

__all__ = [
    "SobolevIndex",
    "DyadicPartition",
    "apply_radial_multiplier",
    "bessel_multiplier",
    "spatial_weight",
    "sobolev_norm",
    "cosine_propagator",
    "sine_propagator",
    "cosine_evolution",
    "dyadic_cutoff",
    "dyadic_decompose",
    "dyadic_norm",
    "commutator_growth_probe",
    "ProbeResult",
    "write_probe_csv",
]


@dataclass(frozen=True)
class SobolevIndex:
    """Weight exponents: a controls spatial decay, b derivative order."""

    a: float
    b: float


def _as_index(idx) -> SobolevIndex:
    if isinstance(idx, SobolevIndex):
        return idx
    a, b = idx
    return SobolevIndex(float(a), float(b))


def apply_radial_multiplier(f: ScalarField, fn) -> ScalarField:
    """Apply the Fourier multiplier fn(|xi|) to the function f represents.

    Position fields go through a transform round trip; frequency fields are
    multiplied in place.  The multiplier array is evaluated on the natural
    ascending frequency axes of the field's grid.
    """
    mult = fn(_freq_radius(f.spec))
    if f.space is Space.FREQUENCY:
        return f.with_values(f.values * mult)
    h = f.spec.spacing
    xi = 2 * np.pi * _fft.fftfreq(f.spec.npts, d=h)
    norm = np.sqrt(xi[:, None, None] ** 2 + xi[None, :, None] ** 2 + xi[None, None, :] ** 2)
    F = _fft.fftn(f.values, workers=fft_workers())
    vals = _fft.ifftn(fn(norm) * F, workers=fft_workers())
    return f.with_values(vals)


def bessel_multiplier(f: ScalarField, b: float) -> ScalarField:
    """<D>^b: multiplication by (1+|xi|^2)^(b/2) on the transform."""
    if b == 0.0:
        return f
    return apply_radial_multiplier(f, lambda r: (1.0 + r**2) ** (b / 2.0))


def spatial_weight(f: ScalarField, a: float) -> ScalarField:
    """<x>^a: pointwise multiplication by (1+|x|^2)^(a/2)."""
    f.require(Space.POSITION)
    if a == 0.0:
        return f
    w = (1.0 + _radius_sq(f.spec)) ** (a / 2.0)
    return f.with_values(f.values * w)


def sobolev_norm(f: ScalarField, idx) -> float:
    """|<x>^a <D>^b f|_L2 on the grid (weight applied after smoothing)."""
    idx = _as_index(idx)
    f.require(Space.POSITION)
    return l2_norm(spatial_weight(bessel_multiplier(f, idx.b), idx.a))


def cosine_propagator(f: ScalarField, t: float) -> ScalarField:
    """cos(t|D|): the wave evolution of initial displacement data."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0.0:
        return f
    return apply_radial_multiplier(f, lambda r: np.cos(t * r))


def sine_propagator(f: ScalarField, t: float) -> ScalarField:
    """sin(t|D|)/|D| with the analytic value t at xi = 0."""
    if t < 0:
        raise ValueError("t must be nonnegative")

    def mult(r):
        out = np.full_like(r, float(t))
        nz = r > 0
        out[nz] = np.sin(t * r[nz]) / r[nz]
        return out

    return apply_radial_multiplier(f, mult)


def cosine_evolution(u: ScalarField, tgrid) -> SpaceTimeField:
    """Stack cos(t_k|D|) u over a time grid (the causal cosine history)."""
    u.require(Space.POSITION)
    tgrid = np.asarray(tgrid, dtype=float)
    slices = tuple(cosine_propagator(u, t) for t in tgrid)
    return SpaceTimeField(u.spec, tgrid, slices)


# ---------------------------------------------------------------------------
# Dyadic spatial partition.


def _smoothstep5(u: np.ndarray) -> np.ndarray:
    """Quintic smoothstep, C^2 monotone from 0 at u<=0 to 1 at u>=1."""
    u = np.clip(u, 0.0, 1.0)
    return u**3 * (10.0 - 15.0 * u + 6.0 * u**2)


def dyadic_cutoff(r: np.ndarray) -> np.ndarray:
    """Radial cutoff: 1 on r<=1, 0 on r>=2, quintic smoothstep between."""
    return 1.0 - _smoothstep5(np.asarray(r, dtype=float) - 1.0)


@lru_cache(maxsize=16)
def _dyadic_masks(spec: GridSpec, levels: int) -> tuple:
    r = np.sqrt(_radius_sq(spec))
    cuts = [dyadic_cutoff(r / 2.0**j) for j in range(levels + 1)]
    masks = [cuts[0]]
    for j in range(1, levels + 1):
        masks.append(cuts[j] - cuts[j - 1])
    return tuple(masks)


@dataclass(frozen=True)
class DyadicPartition:
    """Annular cutoffs chi_j, j = 0..levels, with chi_j = chi(2^-j .) - chi(2^(1-j) .)."""

    spec: GridSpec
    levels: int

    @property
    def masks(self) -> tuple:
        return _dyadic_masks(self.spec, self.levels)

    def envelope(self) -> np.ndarray:
        """The telescoped sum chi(2^-levels x)."""
        r = np.sqrt(_radius_sq(self.spec))
        return dyadic_cutoff(r / 2.0**self.levels)


def dyadic_decompose(f: ScalarField, levels: int) -> list:
    """Pieces chi_j f; their sum telescopes to chi(2^-levels .) f."""
    f.require(Space.POSITION)
    part = DyadicPartition(f.spec, levels)
    return [f.with_values(f.values * m) for m in part.masks]


def dyadic_norm(f: ScalarField, rho: float, levels: int) -> float:
    """(sum_j 2^(2 rho j) |chi_j f|^2)^(1/2)."""
    pieces = dyadic_decompose(f, levels)
    return float(
        np.sqrt(sum(4.0 ** (rho * j) * l2_norm(p) ** 2 for j, p in enumerate(pieces)))
    )


# ---------------------------------------------------------------------------
# Commutator growth probe: lower-bound estimate of |<D>^b <x>^it <D>^-b| on L2.


@dataclass(frozen=True)
class ProbeResult:
    estimate: float
    converged: bool
    b: float
    t: float
    trials: int
    seed: int


def _probe_arrays(spec: GridSpec, b: float, t: float):
    h = spec.spacing
    xi = 2 * np.pi * _fft.fftfreq(spec.npts, d=h)
    xi2 = xi[:, None, None] ** 2 + xi[None, :, None] ** 2 + xi[None, None, :] ** 2
    bessel = (1.0 + xi2) ** (b / 2.0)
    phase = np.exp(1j * t * 0.5 * np.log1p(_radius_sq(spec)))  # <x>^(it)
    return bessel, phase


def commutator_growth_probe(
    b: float,
    t: float,
    trials: int = 8,
    seed: int = 0,
    spec: GridSpec | None = None,
    iterations: int = 20,
    rtol: float = 1e-3,
) -> ProbeResult:
    """Estimate the L2 operator norm of P = <D>^b <x>^it <D>^-b.

    Random complex starts followed by power iteration on P*P; the returned
    value is a lower bound on the true norm, so growth-rate checks built on
    it can only undershoot.  Each trial draws from its own seeded stream, so
    results do not depend on scheduling.
    """
    if spec is None:
        spec = GridSpec(32, 16.0)
    if t == 0.0:
        return ProbeResult(1.0, True, b, t, trials, seed)
    bessel, phase = _probe_arrays(spec, b, t)
    w = fft_workers()

    def apply_p(v):
        u = _fft.ifftn(_fft.fftn(v, workers=w) / bessel, workers=w)
        return _fft.ifftn(_fft.fftn(phase * u, workers=w) * bessel, workers=w)

    def apply_p_star(v):
        u = _fft.ifftn(_fft.fftn(v, workers=w) * bessel, workers=w)
        return _fft.ifftn(_fft.fftn(np.conj(phase) * u, workers=w) / bessel, workers=w)

    best = 0.0
    converged = False
    n = spec.npts
    for trial in range(trials):
        rng = np.random.default_rng(seed + 7919 * trial)
        v = rng.standard_normal((n, n, n)) + 1j * rng.standard_normal((n, n, n))
        v /= np.linalg.norm(v)
        prev = 0.0
        for _ in range(iterations):
            pv = apply_p(v)
            est = np.linalg.norm(pv)  # |Pv| / |v| with |v| = 1
            if est > best:
                best = est
            if abs(est - prev) <= rtol * max(est, 1.0):
                converged = True
                break
            prev = est
            v = apply_p_star(pv)
            v /= np.linalg.norm(v)
    if not converged:
        warnings.warn(
            f"commutator probe (b={b}, t={t}) not converged; reporting best lower bound",
            RuntimeWarning,
            stacklevel=2,
        )
    return ProbeResult(float(best), converged, b, t, trials, seed)


def write_probe_csv(path, results) -> None:
    """Emit probe rows: b, t, estimate, trials, seed."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["b", "t", "estimate", "trials", "seed"])
        for r in results:
            w.writerow([r.b, r.t, f"{r.estimate:.12g}", r.trials, r.seed])
