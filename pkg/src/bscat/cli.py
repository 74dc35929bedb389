"""Batch entry points: identity verification, field-to-field computation of
the quadratic backscattering operator, kernel oracle tables, and exponent
region scans.

Exit codes: 0 success, 1 check failure, 2 usage or validation error.  Every
artifact gets a JSON sidecar recording the exact configuration, seed, and
code version.  All randomness derives from --seed (default 0).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .grid import (
    GridSpec,
    ScalarField,
    effective_radius,
    forward_transform,
    gaussian_transform,
    inner_product,
    inverse_transform,
    l2_norm,
    read_field,
    sample_gaussian,
    set_fft_workers,
    translate,
    write_field,
)
from .spectral import (
    SobolevIndex,
    bessel_multiplier,
    commutator_growth_probe,
    cosine_propagator,
    dyadic_decompose,
    dyadic_norm,
    sine_propagator,
    sobolev_norm,
    spatial_weight,
    write_probe_csv,
)
from .sphere import (
    SphereQuadrature,
    bilinear_spherical_mean,
    cap_measure_mc,
    default_quadrature,
    load_quadrature,
)
from .kernels import (
    RadialProfile,
    hardy_transform,
    tail_polynomial,
    ultrahyperbolic_pairing_direct,
    ultrahyperbolic_pairing_wave,
    wave_kernel_grid_pairing,
    wave_kernel_radial_pairing,
)
from .backscatter import (
    backscatter_quadratic,
    nonradial_energy_fraction,
    support_fraction,
    trilinear_form,
)
from .normprobe import (
    ExponentTuple,
    GaussianParams,
    PipelineOptions,
    modulate_family,
    ratio_sweep,
    region_scan,
    translate_family,
    dilate_family,
    write_scan_csv,
)

__all__ = ["main", "RunConfig"]


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Validated run parameters shared by the subcommands."""

    n_grid: int = 48
    box: float = 12.0
    t_steps: int = 20
    sphere_degree: int = 14
    seed: int = 0
    threads: int = 0  # 0 = all cores
    out: str | None = None
    tolerances: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.n_grid % 2 != 0 or self.n_grid < 16:
            raise UsageError(f"--n-grid must be even and >= 16, got {self.n_grid}")
        if self.box <= 0:
            raise UsageError("--box must be positive")
        if self.t_steps < 1:
            raise UsageError("--t-steps must be >= 1")
        if self.sphere_degree < 1:
            raise UsageError("--sphere-degree must be >= 1")
        # box-safety: the default pair must fit with its travel horizon
        if self.t_steps * 2.0 * self.box / self.n_grid > 2.0 * self.box:
            raise UsageError("time horizon exceeds the box diameter; reduce --t-steps")

    def grid(self) -> GridSpec:
        return GridSpec(self.n_grid, self.box)

    def sidecar(self, extra: dict | None = None) -> dict:
        data = {
            "version": __version__,
            "n_grid": self.n_grid,
            "box": self.box,
            "t_steps": self.t_steps,
            "sphere_degree": self.sphere_degree,
            "seed": self.seed,
            "threads": self.threads,
            "tolerances": self.tolerances,
        }
        if extra:
            data.update(extra)
        return data


def _write_sidecar(path: Path, config: RunConfig, extra: dict | None = None) -> None:
    side = path.with_suffix(path.suffix + ".meta.json")
    side.write_text(json.dumps(config.sidecar(extra), indent=2) + "\n")


def _parse_tol_overrides(unknown: list) -> dict:
    """Collect --tol.<name> VALUE pairs left over by argparse."""
    tols = {}
    i = 0
    while i < len(unknown):
        arg = unknown[i]
        if arg.startswith("--tol."):
            name = arg[len("--tol.") :]
            val = None
            if "=" in name:
                name, val = name.split("=", 1)
            elif i + 1 < len(unknown):
                val = unknown[i + 1]
                i += 1
            if val is None:
                raise UsageError(f"missing value for tolerance override {arg}")
            try:
                tols[name] = float(val)
            except ValueError as exc:
                raise UsageError(f"bad tolerance value for {arg}: {val}") from exc
        else:
            raise UsageError(f"unrecognized argument: {arg}")
        i += 1
    return tols


# ---------------------------------------------------------------------------
# verify: the identity suite.


def _default_checks(config: RunConfig) -> list:
    """Each check returns (name, measured, tolerance); pass means
    measured <= tolerance."""
    spec = config.grid()
    quad = default_quadrature(config.sphere_degree)
    rng = np.random.default_rng(config.seed)
    w = 2**-0.5
    f = sample_gaussian(spec, width=w)  # exp(-|x|^2)
    g = sample_gaussian(spec, center=(0.4, -0.3, 0.2), width=0.9)
    checks = []

    def add(name, measured, tol):
        checks.append({"name": name, "measured": float(measured), "tolerance": float(tol)})

    noise = ScalarField(
        spec,
        rng.standard_normal((spec.npts,) * 3) + 1j * rng.standard_normal((spec.npts,) * 3),
    )
    rt = l2_norm(inverse_transform(forward_transform(noise)) - noise) / l2_norm(noise)
    add("transform_roundtrip", rt, config.tolerances.get("roundtrip", 1e-12))

    fh = forward_transform(noise)
    lhs = l2_norm(fh) ** 2
    rhs = (2 * np.pi) ** 3 * l2_norm(noise) ** 2
    add("parseval", abs(lhs - rhs) / rhs, config.tolerances.get("parseval", 1e-12))

    tr = translate(noise, (0.37, -1.2, 0.55))
    add(
        "translate_isometry",
        abs(l2_norm(tr) - l2_norm(noise)) / l2_norm(noise),
        config.tolerances.get("translate", 1e-12),
    )

    from .spectral import apply_radial_multiplier

    c = cosine_propagator(noise, 1.3)
    ds = apply_radial_multiplier(sine_propagator(noise, 1.3), lambda r: r)
    split = abs(l2_norm(c) ** 2 + l2_norm(ds) ** 2 - l2_norm(noise) ** 2) / l2_norm(noise) ** 2
    add("energy_split", split, config.tolerances.get("energy", 1e-12))

    t0 = cosine_propagator(f, 0.0)
    add("cosine_t0_identity", l2_norm(t0 - f), config.tolerances.get("t0", 1e-12))
    s0 = bilinear_spherical_mean(f, g, 0.0, quad)
    add("spherical_mean_t0_zero", l2_norm(s0), config.tolerances.get("t0", 1e-12))

    s_fg = bilinear_spherical_mean(f, g, 1.0, quad)
    s_gf = bilinear_spherical_mean(g, f, 1.0, quad)
    add(
        "spherical_mean_symmetry",
        float(np.max(np.abs(s_fg.values - s_gf.values))),
        config.tolerances.get("symmetry", 0.0),
    )

    i0 = spec.origin_index()
    t_probe = 1.0
    s_val = bilinear_spherical_mean(f, f, t_probe, quad).values[i0, i0, i0]
    s_exact = 4 * np.pi * t_probe * math.exp(-2 * t_probe**2)
    add(
        "spherical_mean_gaussian",
        abs(s_val - s_exact) / s_exact,
        config.tolerances.get("sphere_gaussian", 1e-4),
    )

    pieces = dyadic_decompose(g, 4)
    from .spectral import DyadicPartition

    envelope = DyadicPartition(spec, 4).envelope()
    resid = sum(p.values for p in pieces) - envelope * g.values
    add(
        "dyadic_telescoping",
        float(np.max(np.abs(resid))),
        config.tolerances.get("telescoping", 1e-14),
    )

    add(
        "tail_polynomial_n3_zero",
        0.0 if tail_polynomial(3).is_zero else 1.0,
        config.tolerances.get("p3", 0.0),
    )

    hgrid = 1e-3 * np.arange(30001)
    hh = np.exp(-(((hgrid - 3.0) / 0.8) ** 2))
    _, ratio = hardy_transform(hh, 1e-3)
    add("hardy_ratio_bound", ratio / 4.0, config.tolerances.get("hardy", 1.01))

    b2 = backscatter_quadratic(f, g, config.t_steps, quad)
    b2_swap = backscatter_quadratic(g, f, config.t_steps, quad)
    add(
        "backscatter_symmetry",
        l2_norm(b2 - b2_swap) / max(l2_norm(b2), 1e-300),
        config.tolerances.get("b2_symmetry", 1e-12),
    )

    b2_ff = backscatter_quadratic(f, f, config.t_steps, quad)
    add(
        "backscatter_support",
        support_fraction(b2_ff, 6 * w, 6 * w),
        config.tolerances.get("support", 1e-3),
    )
    add(
        "backscatter_radial",
        nonradial_energy_fraction(b2_ff),
        config.tolerances.get("radial", 1e-3),
    )

    rep = trilinear_form(f, g, g, config.t_steps, quad)
    add("trilinear_route_identity", rep.rel_diff, config.tolerances.get("q_routes", 1e-10))
    return checks


def cmd_verify(config: RunConfig) -> int:
    started = time.time()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        checks = _default_checks(config)
    failures = 0
    for c in checks:
        c["pass"] = bool(c["measured"] <= c["tolerance"])
        if not c["pass"]:
            failures += 1
        print(f"[{'PASS' if c['pass'] else 'FAIL'}] {c['name']}: "
              f"measured {c['measured']:.3e} tol {c['tolerance']:.3e}")
    summary = {
        "checks": checks,
        "failures": failures,
        "elapsed_s": time.time() - started,
    }
    if config.out:
        out = Path(config.out)
        out.write_text(json.dumps(summary, indent=2) + "\n")
        _write_sidecar(out, config, {"subcommand": "verify"})
    print(f"{len(checks) - failures}/{len(checks)} checks passed "
          f"({summary['elapsed_s']:.1f}s)")
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# b2: field file in, field file out.


def cmd_b2(config: RunConfig, f_file: str, g_file: str) -> int:
    for path in (f_file, g_file):
        if not Path(path).with_suffix(".json").exists():
            print(f"error: field file not found: {path}", file=sys.stderr)
            return 2
    f = read_field(f_file)
    g = read_field(g_file)
    quad = default_quadrature(config.sphere_degree)
    started = time.time()
    b2 = backscatter_quadratic(f, g, config.t_steps, quad)
    elapsed = time.time() - started
    out = Path(config.out or "b2_out")
    write_field(out, b2)
    _write_sidecar(
        out.with_suffix(".json"),
        config,
        {
            "subcommand": "b2",
            "f_file": str(f_file),
            "g_file": str(g_file),
            "support_fraction": support_fraction(
                b2, effective_radius(f), effective_radius(g)
            ),
            "wall_time_s": elapsed,
        },
    )
    print(f"wrote {out}.json/.bin ({elapsed:.1f}s)")
    return 0


# ---------------------------------------------------------------------------
# kernels: oracle comparison tables.


def cmd_kernels(config: RunConfig) -> int:
    rows = []
    for n in (3, 5, 7, 9):
        poly = tail_polynomial(n)
        rows.append({"table": "tail_polynomial", "key": f"n={n}", "value": poly.pretty(), "check": ""})

    dt = 1e-3
    grid = dt * np.arange(int(16.0 / dt) + 1)
    hh = np.exp(-grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, ratio = hardy_transform(hh, dt)
    rows.append(
        {
            "table": "hardy",
            "key": "exp(-t)",
            "value": f"{ratio:.6f}",
            "check": f"ratio<=4: {ratio <= 4.0}",
        }
    )

    phi = RadialProfile.from_radial_callable(lambda t: np.exp(-(t**2)), dt=2e-3, tmax=10.0)
    psi = RadialProfile.from_radial_callable(lambda t: np.exp(-(t**2) / 2.0), dt=2e-3, tmax=10.0)
    direct = ultrahyperbolic_pairing_direct(phi, psi)
    wave = ultrahyperbolic_pairing_wave(phi, psi)
    rel = abs(direct - wave) / max(abs(direct), abs(wave))
    rows.append(
        {
            "table": "ultrahyperbolic",
            "key": "gauss(1)/gauss(sqrt2)",
            "value": f"{direct.real:.8f} vs {wave.real:.8f}",
            "check": f"rel_diff={rel:.2e}",
        }
    )

    spec = config.grid()
    quad = default_quadrature(config.sphere_degree)
    phi_field = sample_gaussian(spec, width=2**-0.5)
    prof = RadialProfile.from_field(phi_field, quad)
    for t in (0.2, 0.5, 1.0, 1.5):
        grid_val = wave_kernel_grid_pairing(phi_field, t)
        radial_val = wave_kernel_radial_pairing(prof, t, n=3)
        rel = abs(grid_val - radial_val) / abs(radial_val)
        rows.append(
            {
                "table": "wave_kernel_routes",
                "key": f"t={t}",
                "value": f"{grid_val.real:.8f} vs {radial_val.real:.8f}",
                "check": f"rel_diff={rel:.2e}",
            }
        )

    out = Path(config.out or "kernels.csv")
    with open(out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["table", "key", "value", "check"])
        w.writeheader()
        w.writerows(rows)
    _write_sidecar(out, config, {"subcommand": "kernels"})
    print(f"wrote {out} ({len(rows)} rows)")
    return 0


# ---------------------------------------------------------------------------
# probe: region scan CSV.


def _parse_sigma(text: str) -> ExponentTuple:
    try:
        return ExponentTuple.from_iterable(text.split(","))
    except (ValueError, TypeError) as exc:
        raise UsageError(f"malformed sigma spec {text!r}: {exc}") from exc


def _parse_family(text: str, width: float) -> object:
    try:
        kind, _, rest = text.partition("=")
        params = [float(p) for p in rest.split(",") if p]
        if not params:
            raise ValueError("no parameters")
        base = (GaussianParams(width=width), GaussianParams(width=width))
        if kind == "translate":
            return translate_family(base, params)
        if kind == "dilate":
            return dilate_family(base, params)
        if kind == "modulate":
            return modulate_family(base, params)
        raise ValueError(f"unknown family kind {kind!r}")
    except ValueError as exc:
        raise UsageError(f"malformed family spec {text!r}: {exc}") from exc


def cmd_probe(config: RunConfig, sigmas: list, families: list, width: float) -> int:
    sig = [_parse_sigma(s) for s in sigmas]
    fams = [_parse_family(fspec, width) for fspec in families]
    options = PipelineOptions(degree=config.sphere_degree)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rows = region_scan(sig, fams, options)
    out = Path(config.out or "probe.csv")
    write_scan_csv(out, rows)
    _write_sidecar(out, config, {"subcommand": "probe", "sigmas": sigmas, "families": families})
    print(f"wrote {out} ({len(rows)} rows)")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bscat",
        description="quadratic backscattering operator: verification suites, "
        "pipelines, kernel oracles, and exponent-region probes",
    )
    parser.add_argument("--n-grid", type=int, default=48, help="points per axis (even)")
    parser.add_argument("--box", type=float, default=12.0, help="box half-width")
    parser.add_argument("--t-steps", type=int, default=20, help="time steps")
    parser.add_argument("--sphere-degree", type=int, default=14, help="quadrature exactness")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=0, help="FFT worker cap (0 = all)")
    parser.add_argument("--out", type=str, default=None, help="output path")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    sub.add_parser("verify", help="run the identity suite")
    p_b2 = sub.add_parser("b2", help="compute the operator on two field files")
    p_b2.add_argument("f_file")
    p_b2.add_argument("g_file")
    sub.add_parser("kernels", help="emit kernel oracle tables")
    p_probe = sub.add_parser("probe", help="exponent-region ratio scan")
    p_probe.add_argument("--sigma", action="append", default=[], help="a1,b1,a2,b2,a,b")
    p_probe.add_argument("--family", action="append", default=[], help="kind=p1,p2,...")
    p_probe.add_argument("--width", type=float, default=0.75, help="base gaussian width")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args, unknown = parser.parse_known_args(argv)
        tols = _parse_tol_overrides(unknown)
        config = RunConfig(
            n_grid=args.n_grid,
            box=args.box,
            t_steps=args.t_steps,
            sphere_degree=args.sphere_degree,
            seed=args.seed,
            threads=args.threads,
            out=args.out,
            tolerances=tols,
        )
        config.validate()
        if config.threads > 0:
            set_fft_workers(config.threads)
        if args.subcommand == "verify":
            return cmd_verify(config)
        if args.subcommand == "b2":
            return cmd_b2(config, args.f_file, args.g_file)
        if args.subcommand == "kernels":
            return cmd_kernels(config)
        if args.subcommand == "probe":
            if not args.sigma or not args.family:
                raise UsageError("probe needs at least one --sigma and one --family")
            return cmd_probe(config, args.sigma, args.family, args.width)
        raise UsageError(f"unknown subcommand {args.subcommand!r}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
