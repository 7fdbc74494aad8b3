"""Command-line front end.

Every subcommand evaluates one task over the Cartesian grid of the
configured heights and velocities (plus the task's own grid, e.g.
frequencies for ``spectrum``) and writes one flat record per point.

Examples
--------
::

    qfriction friction --preset rb-si-nearfield
    qfriction cp --preset ohmic-toy --format jsonl --out cp.jsonl
    qfriction sweep --config sweep.yaml --threads 4
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .bath import BathConfig, build_bath, evolve_moving, evolve_static
from .config import (ConfigError, PRESETS, TASKS, RunConfig, config_hash, load_config, logspace,
                     merge, preset)
from .errors import ConvergenceError, DomainError
from .forces import (casimir_polder_fdt, casimir_polder_qrt, friction_exponent_fit, friction_full,
                     friction_lowv, friction_nearfield_ohmic, friction_qrt)
from .spectrum import correlation_from_spectrum, power_spectrum

SCHEMA = "qfriction-output/1"

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_DOMAIN = 0, 2, 3, 4

# Unit suffixes of the value column per task.
_UNITS = {
    "cp": "N",
    "friction": "N",
    "spectrum": "C2m2s",
    "correlation": "C2m2",
    "compare-qrt": "N",
    "oracle": None,
    "sweep": "N",
}


class _Point:
    """One evaluation point: a callable producing a list of records."""

    def __init__(self, fn, label):
        self.fn = fn
        self.label = label


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


# Task builders -------------------------------------------------------------------

def _cp_record(cfg, z, quad, atom=None, surface=None, extra=None):
    atom = atom or cfg.atom()
    surface = surface or cfg.surface()
    method = cfg.section("cp").get("method", "fdt")
    if method == "fdt":
        res = casimir_polder_fdt(atom, surface, z, quad)
    elif method == "fdt-bare":
        res = casimir_polder_fdt(atom, surface, z, quad, order="bare")
    elif method == "qrt":
        res = casimir_polder_qrt(atom, surface, z, quad)
    else:
        raise ConfigError(f"unknown cp method {method!r}", "cp.method")
    rec = {"z_m": z, "v_m_s": 0.0}
    rec.update(extra or {})
    rec.update(_force_columns(res))
    return rec


def _force_columns(res):
    return {"value_N": float(res.value), "abs_error_N": float(res.abs_error_estimate),
            "method": res.method, "converged": bool(res.converged), "flags": ";".join(res.flags)}


def _friction_result(cfg, z, v, quad, atom=None, surface=None):
    atom = atom or cfg.atom()
    surface = surface or cfg.surface()
    f = cfg.section("friction")
    method = f.get("method", "lowv")
    if method == "lowv":
        return friction_lowv(atom, surface, z, v, quad, convention=f.get("convention", "trace"),
                             order=f.get("order", "lowest"))
    if method == "full":
        return friction_full(atom, surface, z, v, quad)
    if method == "nearfield":
        if surface.kind != "ohmic":
            raise DomainError("the near-field closed form needs an ohmic surface")
        return friction_nearfield_ohmic(atom.static_polarizability, surface.rho, z, v)
    return friction_qrt(atom, surface, z, v, quad)


def _friction_record(cfg, z, v, quad, atom=None, surface=None, extra=None):
    res = _friction_result(cfg, z, v, quad, atom, surface)
    rec = {"z_m": z, "v_m_s": v}
    rec.update(extra or {})
    rec.update(_force_columns(res))
    return rec


def _points_cp(cfg, quad):
    return [_Point(lambda z=z: [_cp_record(cfg, z, quad)], f"z={z:.4g} m") for z in cfg.z_list]


def _points_friction(cfg, quad):
    return [_Point(lambda z=z, v=v: [_friction_record(cfg, z, v, quad)], f"z={z:.4g} m v={v:.4g} m/s")
            for z in cfg.z_list for v in cfg.v_list]


def _default_omegas(cfg):
    wa = cfg.data["atom"]["omega_a_rad_s"]
    return list(np.geomspace(1e-2, 10.0, 25) * wa)


def _points_spectrum(cfg, quad):
    omegas = cfg.section("spectrum").get("omega_rad_s") or _default_omegas(cfg)
    atom, surface = cfg.atom(), cfg.surface()

    def run(z, v):
        S = power_spectrum(atom, surface, z, np.asarray(omegas, dtype=float), v, quad).value
        tr = np.trace(S, axis1=-2, axis2=-1)
        return [{"z_m": z, "v_m_s": v, "omega_rad_s": float(w), "value_C2m2s": float(t),
                 "xx_C2m2s": float(s[0, 0]), "yy_C2m2s": float(s[1, 1]), "zz_C2m2s": float(s[2, 2]),
                 "method": "gated_k_integral", "converged": True, "flags": ""}
                for w, t, s in zip(omegas, tr, S)]

    return [_Point(lambda z=z, v=v: run(z, v), f"z={z:.4g} m v={v:.4g} m/s")
            for z in cfg.z_list for v in cfg.v_list]


def _points_correlation(cfg, quad):
    wa = cfg.data["atom"]["omega_a_rad_s"]
    taus = cfg.section("correlation").get("tau_s") or list(np.geomspace(0.1, 100.0, 20) / wa)
    atom, surface = cfg.atom(), cfg.surface()

    def run(z, v):
        out = []
        for s in correlation_from_spectrum(atom, surface, z, taus, v, quad):
            c = complex(s.value)
            out.append({"z_m": z, "v_m_s": v, "tau_s": s.tau, "value_C2m2": c.real,
                        "imag_C2m2": c.imag, "method": "filon_transform",
                        "converged": bool(s.converged), "flags": ""})
        return out

    return [_Point(lambda z=z, v=v: run(z, v), f"z={z:.4g} m v={v:.4g} m/s")
            for z in cfg.z_list for v in cfg.v_list]


def _points_compare_qrt(cfg, quad):
    ratios = cfg.section("compare_qrt").get("gamma_a_over_omega_a") or [1e-3, 1e-2, 1e-1]
    atom, surface = cfg.atom(), cfg.surface()
    wa = atom.omega_a

    def run(z):
        bare = casimir_polder_fdt(atom, surface, z, quad, order="bare")
        dressed = casimir_polder_fdt(atom, surface, z, quad, order="dressed")
        out = []
        for r in ratios:
            q = casimir_polder_qrt(atom, surface, z, quad, gamma_a=r * wa)
            ok = bare.converged and dressed.converged and q.converged
            out.append({"z_m": z, "v_m_s": 0.0, "gamma_a_over_omega_a": float(r),
                        "value_N": float(q.value), "abs_error_N": float(q.abs_error_estimate),
                        "fdt_bare_N": float(bare.value), "fdt_dressed_N": float(dressed.value),
                        "rel_deviation_bare": float(q.value / bare.value - 1.0),
                        "rel_deviation_dressed": float(q.value / dressed.value - 1.0),
                        "method": q.method, "converged": bool(ok), "flags": ""})
        return out

    return [_Point(lambda z=z: run(z), f"z={z:.4g} m") for z in cfg.z_list]


def _points_oracle(cfg, quad):
    o = cfg.section("oracle")
    atom, surface = cfg.atom(), cfg.surface()
    bc = BathConfig(band=o.get("band", 3.0), reach=o.get("reach", 10.0))
    N = o.get("modes", 256)

    def run(z, v):
        mode = o.get("mode", "static" if v == 0.0 else "moving")
        if mode == "static":
            bath = build_bath(atom, surface, z, N, 0.0, bc)
            tmax = o.get("tau_max_s", 0.5 * bath.t_revival)
            tau = np.linspace(0.0, tmax, o.get("samples", 400))
            res = evolve_static(bath, tau)
            flags = ";".join(bath.flags + res.flags)
            return [{"z_m": z, "v_m_s": 0.0, "t_s": float(t), "value_C2m2": float(c.real),
                     "imag_C2m2": float(c.imag), "value_N": math.nan, "plateau_N": math.nan,
                     "method": "oracle_static", "converged": True, "flags": flags}
                    for t, c in zip(res.tau, res.correlation)]
        if mode != "moving":
            raise ConfigError(f"unknown oracle mode {mode!r}", "oracle.mode")
        bath = build_bath(atom, surface, z, N, v, bc)
        t = np.linspace(0.0, 0.5 * bath.t_revival, o.get("samples", 4000))
        res = evolve_moving(bath, t)
        flags = ";".join(bath.flags + res.flags)
        return [{"z_m": z, "v_m_s": v, "t_s": float(tt), "value_C2m2": math.nan, "imag_C2m2": math.nan,
                 "value_N": float(f), "plateau_N": res.plateau, "method": "oracle_moving",
                 "converged": res.converged, "flags": flags}
                for tt, f in zip(res.t, res.force)]

    return [_Point(lambda z=z, v=v: run(z, v), f"z={z:.4g} m v={v:.4g} m/s")
            for z in cfg.z_list for v in cfg.v_list]


def _sweep_values(cfg):
    sw = cfg.section("sweep")
    if "values" in sw:
        return list(sw["values"])
    if "logspace" in sw:
        return logspace(sw["logspace"])
    raise ConfigError("sweep needs values or logspace", "sweep")


def _points_sweep(cfg, quad):
    sw = cfg.section("sweep")
    of = sw.get("of", "friction")
    if of not in ("friction", "cp"):
        raise ConfigError("sweep.of must be friction or cp", "sweep.of")
    par = sw.get("parameter", "v_m_s")
    pts = []
    for x in _sweep_values(cfg):
        z, v = cfg.z_list[0], cfg.v_list[0]
        atom, surface = cfg.atom(), cfg.surface()
        if par == "v_m_s":
            v = x
        elif par == "z_m":
            z = x
        elif par == "rho_ohm_m":
            surface = cfg.surface(rho=x)
        else:
            atom = cfg.atom(gamma_a=x)
        extra = {par: x} if par not in ("v_m_s", "z_m") else {}
        if of == "cp":
            fn = (lambda z=z, a=atom, s=surface, e=extra: [_cp_record(cfg, z, quad, a, s, e)])
        else:
            fn = (lambda z=z, v=v, a=atom, s=surface, e=extra:
                  [_friction_record(cfg, z, v, quad, a, s, e)])
        pts.append(_Point(fn, f"{par}={x:.4g}"))
    return pts


_BUILDERS = {
    "cp": _points_cp,
    "friction": _points_friction,
    "spectrum": _points_spectrum,
    "correlation": _points_correlation,
    "compare-qrt": _points_compare_qrt,
    "oracle": _points_oracle,
    "sweep": _points_sweep,
}


def sweep_fit(cfg: RunConfig, records) -> dict:
    """Log-log slope of ``|value|`` against the swept parameter.

    Velocity sweeps of friction also report the linear-term test.
    """
    sw = cfg.section("sweep")
    par = sw.get("parameter", "v_m_s")
    x = np.array([r[par] for r in records], dtype=float)
    y = np.array([r["value_N"] for r in records], dtype=float)
    if par == "v_m_s" and sw.get("of", "friction") == "friction":
        fit = friction_exponent_fit(x, y)
        return {"exponent": fit.exponent, "exponent_stderr": fit.exponent_stderr,
                "linear_coefficient": fit.linear_coefficient, "linear_stderr": fit.linear_stderr,
                "linear_consistent_with_zero": fit.linear_consistent_with_zero}
    good = (x > 0) & (y != 0)
    if good.sum() < 2:
        raise DomainError("need at least two points with positive parameter and nonzero value")
    slope = float(np.polyfit(np.log(x[good]), np.log(np.abs(y[good])), 1)[0])
    return {"exponent": slope}


# Output ---------------------------------------------------------------------------

def _columns(records):
    cols = []
    for r in records:
        for k in r:
            if k not in cols:
                cols.append(k)
    return cols + ["version", "config_hash"]


def write_records(records, fh, fmt: str, digest: str, task: str):
    """Write records in deterministic order with the schema line first."""
    if fmt == "jsonl":
        for r in records:
            row = {"schema": SCHEMA, "task": task, **r, "version": __version__, "config_hash": digest}
            fh.write(json.dumps(row, allow_nan=True) + "\n")
        return
    cols = _columns(records)
    fh.write(f"# schema: {SCHEMA}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["task"] + cols)
    for r in records:
        row = dict(r, version=__version__, config_hash=digest)
        w.writerow([task] + [_fmt(row.get(c, "")) for c in cols])


def _summary(task, label, recs):
    r0 = recs[0]
    if task == "oracle":
        key = "plateau_N" if r0["method"] == "oracle_moving" else "value_C2m2"
        val = r0[key]
        return f"{task} {label}: {key}={val:.6g} ({len(recs)} samples) converged={_fmt(bool(r0['converged']))}"
    unit = _UNITS[task]
    key = f"value_{unit}"
    if len(recs) == 1:
        return (f"{task} {label}: {key}={r0[key]:.6g} +- {r0.get('abs_error_N', 0.0):.2g} "
                f"[{r0['method']}] converged={_fmt(bool(r0['converged']))}")
    vals = [r[key] for r in recs]
    ok = all(r["converged"] for r in recs)
    return f"{task} {label}: {len(recs)} rows, {key} in [{min(vals):.6g}, {max(vals):.6g}] converged={_fmt(ok)}"


# Entry point -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qfriction", description=(
        "Casimir-Polder and quantum friction forces on an atom above a planar surface."))
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="task", required=True, metavar="TASK")
    for name in TASKS:
        sp = sub.add_parser(name, help=f"run the {name} task")
        sp.add_argument("--config", help="YAML configuration file")
        sp.add_argument("--preset", choices=sorted(PRESETS), help="built-in configuration")
        sp.add_argument("--out", help="output file (default: standard output)")
        sp.add_argument("--format", choices=("csv", "jsonl"), help="output format (default csv)")
        sp.add_argument("--rel-tol", type=float, help="relative quadrature tolerance")
        sp.add_argument("--allow-nonconverged", action="store_true",
                        help="exit 0 even if some points did not converge")
        sp.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    return p


def resolve_config(args) -> RunConfig:
    """Preset, then file overlay, then command-line overrides."""
    if args.preset is None and args.config is None:
        raise ConfigError("give --config and/or --preset")
    base = preset(args.preset) if args.preset else None
    override = load_config(args.config, partial=base is not None) if args.config else None
    cfg = merge(base, override) if base is not None else override
    data = dict(cfg.data)
    data["task"] = args.task
    out = dict(data.get("output", {}))
    if args.format:
        out["format"] = args.format
    if args.out:
        out["path"] = args.out
    if out:
        data["output"] = out
    if args.rel_tol is not None:
        if not 0.0 < args.rel_tol < 1.0:
            raise ConfigError("--rel-tol must lie in (0, 1)")
        data["quadrature"] = dict(data.get("quadrature", {}), rel_tol=args.rel_tol)
    return merge(RunConfig({}), RunConfig(data))


def run(cfg: RunConfig, threads: int = 1, allow_nonconverged: bool = False,
        stdout=None, stderr=None) -> int:
    """Evaluate every point of ``cfg`` and write the output; returns the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    task = cfg.task
    quad = cfg.quadrature()
    points = _BUILDERS[task](cfg, quad)
    digest = config_hash(cfg)

    def evaluate(pt):
        try:
            return pt.fn(), None
        except ConvergenceError as exc:
            return None, exc

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        outcomes = list(pool.map(evaluate, points))

    records, failed = [], 0
    for pt, (recs, exc) in zip(points, outcomes):
        if exc is not None:
            failed += 1
            print(f"{task} {pt.label}: not converged: {exc}", file=stderr)
            continue
        records.extend(recs)
        failed += int(not all(r["converged"] for r in recs))
        print(_summary(task, pt.label, recs), file=stderr)
    if task == "sweep" and records:
        try:
            fit = sweep_fit(cfg, records)
            print("sweep fit: " + " ".join(f"{k}={_fmt(v)}" for k, v in fit.items()), file=stderr)
        except DomainError as exc:
            print(f"sweep fit skipped: {exc}", file=stderr)

    out = cfg.section("output")
    fmt = out.get("format", "csv")
    if out.get("path"):
        with open(out["path"], "w", encoding="utf-8", newline="") as fh:
            write_records(records, fh, fmt, digest, task)
    else:
        buf = io.StringIO()
        write_records(records, buf, fmt, digest, task)
        stdout.write(buf.getvalue())
    if failed and not allow_nonconverged:
        print(f"{failed} point(s) did not converge", file=stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return run(cfg, args.threads, args.allow_nonconverged)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ConvergenceError as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
