"""Exponent-region predicates for the boundedness results and empirical
norm-ratio probes over witness families.

The probes can exhibit boundedness trends and lower bounds, never certify
constants; reports speak of slopes being consistent or inconsistent with
boundedness.  Slopes are fitted by least squares on the asymptotic tail of
the log-log ratio curve.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import GridSpec, ScalarField, l2_norm, sample_gaussian
from .spectral import SobolevIndex, sobolev_norm
from .sphere import SphereQuadrature, product_quadrature
from .backscatter import backscatter_quadratic, default_steps

__all__ = [
    "ExponentTuple",
    "in_main_region",
    "in_wave_region",
    "in_spherical_region",
    "GaussianParams",
    "WitnessFamily",
    "translate_family",
    "dilate_family",
    "modulate_family",
    "PipelineOptions",
    "RatioReport",
    "ratio_sweep",
    "region_scan",
    "write_scan_csv",
    "SCAN_COLUMNS",
]


@dataclass(frozen=True)
class ExponentTuple:
    """(a', b', a'', b'', a, b): input weights/orders and output weights/orders."""

    a1: float
    b1: float
    a2: float
    b2: float
    a: float
    b: float

    @classmethod
    def from_iterable(cls, vals) -> ExponentTuple:
        vals = [float(v) for v in vals]
        if len(vals) != 6:
            raise ValueError(f"expected 6 exponents, got {len(vals)}")
        return cls(*vals)


def in_main_region(sig: ExponentTuple, m: int = 0) -> bool:
    """The five inequalities of the boundedness region for the quadratic
    backscattering operator (strict/non-strict exactly as stated):

        0 < a < m + 1/2 + min(a', a''),   a <= a' + a'' - 1/2,
        0 <= b < 1 + min(b', b''),        b + m <= b' + b'',
        a + b < 1/2 + min(a', a'') + min(b', b'').
    """
    amin = min(sig.a1, sig.a2)
    bmin = min(sig.b1, sig.b2)
    return (
        0.0 < sig.a < m + 0.5 + amin
        and sig.a <= sig.a1 + sig.a2 - 0.5
        and 0.0 <= sig.b < 1.0 + bmin
        and sig.b + m <= sig.b1 + sig.b2
        and sig.a + sig.b < 0.5 + amin + bmin
    )


def in_wave_region(sig: ExponentTuple, m: int = 0) -> bool:
    """Boundedness region of the bilinear wave transform (output order b-m):

        0 <= a < m + 1 + min(a', a''),   a <= a' + a'',
        b < m + 1 + min(b', b''),        b <= b' + b'',
        a + b < m + 1 + min(a', a'') + min(b', b'').
    """
    amin = min(sig.a1, sig.a2)
    bmin = min(sig.b1, sig.b2)
    return (
        0.0 <= sig.a < m + 1.0 + amin
        and sig.a <= sig.a1 + sig.a2
        and sig.b < m + 1.0 + bmin
        and sig.b <= sig.b1 + sig.b2
        and sig.a + sig.b < m + 1.0 + amin + bmin
    )


def in_spherical_region(a1: float, a2: float, a: float, m: int = 0) -> bool:
    """Spatial-weight region for the bilinear spherical mean:
    a < m + 1 + min(a', a'') and a <= a' + a''."""
    return a < m + 1.0 + min(a1, a2) and a <= a1 + a2


# ---------------------------------------------------------------------------
# Witness families.


@dataclass(frozen=True)
class GaussianParams:
    center: tuple = (0.0, 0.0, 0.0)
    width: float = 1.0
    modulation: tuple = (0.0, 0.0, 0.0)
    amplitude: complex = 1.0

    def sample(self, spec: GridSpec) -> ScalarField:
        return sample_gaussian(spec, self.center, self.width, self.modulation, self.amplitude)

    def support_radius(self) -> float:
        return float(np.linalg.norm(self.center)) + 6.0 * self.width

    def bandwidth(self) -> float:
        return float(np.linalg.norm(self.modulation)) + 6.0 / self.width


@dataclass(frozen=True)
class WitnessFamily:
    """A parameterized list of input pairs with known norm asymptotics.

    kind is one of translate / dilate / modulate; params are the raw family
    parameters and scales the log-log abscissae (<v>, lambda, <k>).
    """

    kind: str
    members: tuple
    params: tuple
    scales: tuple


def _translate(p: GaussianParams, v: np.ndarray) -> GaussianParams:
    return replace(p, center=tuple(np.asarray(p.center) + v))


def translate_family(base: tuple, shifts, direction=(1.0, 0.0, 0.0)) -> WitnessFamily:
    d = np.asarray(direction, dtype=float)
    d /= np.linalg.norm(d)
    members = tuple(
        (_translate(base[0], s * d), _translate(base[1], s * d)) for s in shifts
    )
    scales = tuple(math.sqrt(1.0 + float(s) ** 2) for s in shifts)
    return WitnessFamily("translate", members, tuple(float(s) for s in shifts), scales)


def dilate_family(base: tuple, lambdas) -> WitnessFamily:
    """f(lambda .) for a gaussian is the gaussian with width / lambda."""
    members = []
    for lam in lambdas:
        lam = float(lam)
        members.append(
            tuple(
                replace(
                    p,
                    width=p.width / lam,
                    center=tuple(np.asarray(p.center) / lam),
                    modulation=tuple(np.asarray(p.modulation) * lam),
                )
                for p in base
            )
        )
    return WitnessFamily(
        "dilate", tuple(members), tuple(float(l) for l in lambdas), tuple(float(l) for l in lambdas)
    )


def modulate_family(base: tuple, kmags, direction=(1.0, 0.0, 0.0)) -> WitnessFamily:
    d = np.asarray(direction, dtype=float)
    d /= np.linalg.norm(d)
    members = tuple(
        tuple(replace(p, modulation=tuple(np.asarray(p.modulation) + k * d)) for p in base)
        for k in kmags
    )
    scales = tuple(math.sqrt(1.0 + float(k) ** 2) for k in kmags)
    return WitnessFamily("modulate", members, tuple(float(k) for k in kmags), scales)


# ---------------------------------------------------------------------------
# Ratio sweep pipeline.


@dataclass(frozen=True)
class PipelineOptions:
    """Grid sizing for sweep members; the box auto-adjusts per member so the
    supports plus the wave travel stay inside and the content stays resolved."""

    npts: int = 48
    degree: int = 8
    margin: float = 1.0
    min_half_width: float = 8.0
    oversample: float = 1.0  # pi/h relative to the content bandwidth
    max_npts: int = 512

    def grid_for(self, pair: tuple) -> tuple:
        # energy radius of a gaussian (1e-9 tail) sits near 4.8 sigma
        r1 = 4.8 * pair[0].width
        r2 = 4.8 * pair[1].width
        c1 = np.linalg.norm(pair[0].center)
        c2 = np.linalg.norm(pair[1].center)
        dist = np.linalg.norm(np.asarray(pair[0].center) - np.asarray(pair[1].center))
        t_max = r1 + r2 + 0.5 * dist
        half = max(
            self.min_half_width,
            max(c1, c2) + 0.5 * (r1 + r2 + dist) + t_max + self.margin,
        )
        band = max(pair[0].bandwidth(), pair[1].bandwidth())
        needed = int(math.ceil(2.0 * half * band * self.oversample / math.pi))
        npts = min(self.max_npts, max(self.npts, 16 * math.ceil(needed / 16)))
        spec = GridSpec(npts, half)
        steps = max(2, int(math.ceil(t_max / spec.spacing)))
        return spec, steps


@dataclass(frozen=True)
class RatioReport:
    family: str
    sigma: ExponentTuple
    params: tuple
    scales: tuple
    ratios: tuple
    slope: float
    slope_stderr: float
    warnings: tuple = ()
    grids: tuple = ()

    def rows(self) -> list:
        m = 0
        out = []
        for p, s, r in zip(self.params, self.scales, self.ratios):
            out.append(
                {
                    "family": self.family,
                    "param": p,
                    "a1": self.sigma.a1,
                    "b1": self.sigma.b1,
                    "a2": self.sigma.a2,
                    "b2": self.sigma.b2,
                    "a": self.sigma.a,
                    "b": self.sigma.b,
                    "in_main_region": in_main_region(self.sigma, m),
                    "in_A_region": in_wave_region(self.sigma, m),
                    "ratio": r,
                    "slope": self.slope,
                    "slope_stderr": self.slope_stderr,
                    "warnings": ";".join(self.warnings),
                }
            )
        return out


def fit_loglog_slope(scales, values, tail: int = 4) -> tuple:
    """Ordinary least squares slope of log(values) vs log(scales) over the
    last `tail` (or more) points; returns (slope, stderr)."""
    x = np.log(np.asarray(scales, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    if len(x) < 2:
        raise ValueError("need at least two points to fit a slope")
    n = max(min(tail, len(x)), 2)
    x, y = x[-n:], y[-n:]
    design = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(design, y, rcond=None)
    slope = float(coef[0])
    if len(x) > 2:
        resid = y - design @ coef
        var = float(resid @ resid) / (len(x) - 2)
        sxx = float(np.sum((x - x.mean()) ** 2))
        stderr = math.sqrt(var / sxx) if sxx > 0 else float("nan")
    else:
        stderr = float("nan")
    return slope, stderr


def ratio_sweep(
    family: WitnessFamily,
    sigma: ExponentTuple,
    options: PipelineOptions | None = None,
    quad: SphereQuadrature | None = None,
) -> RatioReport:
    """Norm ratios |B2(f,g)|_(a,b) / (|f|_(a',b') |g|_(a'',b'')) across a
    witness family, with the fitted log-log slope."""
    if options is None:
        options = PipelineOptions()
    ratios = []
    notes = []
    grids = []
    q = quad if quad is not None else product_quadrature(options.degree)
    for pair in family.members:
        spec, steps = options.grid_for(pair)
        grids.append((spec.npts, spec.half_width, steps))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            f = pair[0].sample(spec)
            g = pair[1].sample(spec)
            b2 = backscatter_quadratic(f, g, steps, q)
            num = sobolev_norm(b2, SobolevIndex(sigma.a, sigma.b))
            den = sobolev_norm(f, SobolevIndex(sigma.a1, sigma.b1)) * sobolev_norm(
                g, SobolevIndex(sigma.a2, sigma.b2)
            )
        for w in caught:
            notes.append(f"{w.category.__name__}: {w.message}")
        ratios.append(num / den)
    slope, stderr = fit_loglog_slope(family.scales, ratios)
    return RatioReport(
        family.kind,
        sigma,
        family.params,
        family.scales,
        tuple(ratios),
        slope,
        stderr,
        tuple(dict.fromkeys(notes)),
        tuple(grids),
    )


SCAN_COLUMNS = [
    "family",
    "param",
    "a1",
    "b1",
    "a2",
    "b2",
    "a",
    "b",
    "in_main_region",
    "in_A_region",
    "ratio",
    "slope",
    "slope_stderr",
    "warnings",
]


def region_scan(sigmas, families, options: PipelineOptions | None = None) -> list:
    """One row per family member per exponent tuple, ready for CSV."""
    rows = []
    for sigma in sigmas:
        for fam in families:
            rows.extend(ratio_sweep(fam, sigma, options).rows())
    return rows


def write_scan_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SCAN_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow(row)
