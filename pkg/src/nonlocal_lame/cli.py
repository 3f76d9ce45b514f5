"""Command-line driver.

Usage::

    nonlocal-lame <command> --config <path> [--out <dir>] [--seed <n>] [--threads <n>]

``command`` is one of ``symbol``, ``validate``, ``solve-steady`` and
``solve-wave``.  The configuration is an INI file; see ``README.md`` for the
grammar and every recognised key.  Exit status: 0 success, 1 a validation
suite failed, 2 invalid configuration or usage, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import math
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, NumericalError, UsageError
from .field import GridSpec, VectorField, read_field, set_workers, write_field

COMMANDS = ("symbol", "validate", "solve-steady", "solve-wave")
MANIFEST = "manifest.txt"


# ---------------------------------------------------------------------------
# Schema
# ---------------------------------------------------------------------------

def _choice(*opts):
    def conv(text):
        if text not in opts:
            raise ValueError(f"unknown value {text!r} (expected one of {', '.join(opts)})")
        return text
    return conv


def _float(lo=-math.inf, hi=math.inf, lo_open=False, allow_inf=False):
    def conv(text):
        v = float(text)
        if math.isnan(v) or (math.isinf(v) and not allow_inf):
            raise ValueError("must be a finite number")
        if v < lo or v > hi or (lo_open and v == lo):
            raise ValueError(f"must lie in {'(' if lo_open else '['}{lo}, {hi}]")
        return v
    return conv


def _int(lo=None):
    def conv(text):
        v = int(text)
        if lo is not None and v < lo:
            raise ValueError(f"must be at least {lo}")
        return v
    return conv


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("must be a boolean")


def _vector(text):
    vals = [float(x) for x in text.replace(",", " ").split()]
    if not vals or not all(math.isfinite(v) for v in vals):
        raise ValueError("must be a list of finite numbers")
    return vals


SCHEMA = {
    "run": {
        "command": (_choice(*COMMANDS), None),
        "seed": (_int(0), "42"),
        "threads": (_int(1), "1"),
    },
    "grid": {
        "d": (_int(2), "2"),
        "N": (_int(8), "64"),
        "L": (_float(0.0, lo_open=True), "1.0"),
    },
    "kernel": {
        "type": (_choice("fractional", "singular", "integrable"), "fractional"),
        "s": (_float(0.0, 1.0, lo_open=True), "0.5"),
        "alpha": (_float(0.0, lo_open=True), "1.0"),
        "cone": (_choice("full", "cap"), "full"),
        "cap_axis": (_vector, "1 0"),
        "cap_half_angle": (_float(0.0, math.pi, lo_open=True), "0.7853981633974483"),
        "modulation": (_choice("constant", "linear", "quadratic"), "constant"),
        "mod_a": (_float(), "1.0"),
        "mod_b": (_float(), "0.0"),
        "mod_axis": (_vector, "1 0"),
        "r": (_float(0.0, lo_open=True, allow_inf=True), "inf"),
        "family": (_choice("ball", "gaussian", "sector"), "gaussian"),
        "mass": (_float(0.0, lo_open=True), "1.0"),
        "radius": (_float(0.0, lo_open=True), "0.1"),
        "sigma": (_float(0.0, lo_open=True), "0.05"),
        "sector_axis": (_vector, "1 0"),
        "sector_half_angle": (_float(0.0, math.pi, lo_open=True), "0.5"),
        "symbol_tol": (_float(1e-14, 1e-3), "1e-10"),
    },
    "solver": {
        "lambda": (_float(0.0), "1.0"),
        "rhs": (_choice("random", "gaussian", "file"), "random"),
        "rhs_smooth": (_float(0.0, lo_open=True), "6.0"),
        "zero_mean": (_bool, "false"),
        "rhs_center": (_vector, "0.5 0.5"),
        "rhs_sigma": (_float(0.0, lo_open=True), "0.05"),
        "rhs_amplitude": (_vector, "1 0"),
        "rhs_file": (str, ""),
        "estimate": (_choice("none", "nonintegrable", "integrable", "fraclame"), "none"),
        "p": (_float(1.0, allow_inf=True), "2.0"),
    },
    "wave": {
        "T": (_float(0.0), "1.0"),
        "stepper": (_choice("exact", "leapfrog"), "exact"),
        "dt": (_float(0.0, lo_open=True), "0.001"),
        "n_out": (_int(1), "10"),
        "forcing": (_choice("zero", "constant"), "zero"),
        "smooth": (_float(0.0, lo_open=True), "4.0"),
        "export_fields": (_bool, "true"),
    },
}


@dataclass
class RunConfig:
    command: str
    values: dict
    out: str
    seed: int

    def get(self, section: str, key: str):
        return self.values[section][key]


def _fail(section: str, key: str, why: str):
    raise ConfigError(f"[{section}] {key}: {why}")


def parse_config(text: str, command: str | None = None) -> dict:
    """Parse and validate INI text; unknown sections/keys are rejected."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from None
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"[{sec}]: unknown section")
        for key in cp[sec]:
            if key not in SCHEMA[sec]:
                _fail(sec, key, "unknown key")
    values = {}
    for sec, keys in SCHEMA.items():
        values[sec] = {}
        for key, (conv, default) in keys.items():
            raw = cp.get(sec, key, fallback=default)
            if raw is None:
                values[sec][key] = None
                continue
            try:
                values[sec][key] = conv(raw.strip())
            except ValueError as exc:
                _fail(sec, key, str(exc))
    if command is not None:
        if command not in COMMANDS:
            _fail("run", "command", f"unknown command {command!r} (expected one of {', '.join(COMMANDS)})")
        values["run"]["command"] = command
    if values["run"]["command"] is None:
        _fail("run", "command", "no command given")
    if values["grid"]["d"] not in (2, 3):
        _fail("grid", "d", "must be 2 or 3")
    n = values["grid"]["N"]
    if n & (n - 1):
        _fail("grid", "N", "must be a power of two")
    if values["grid"]["N"] > 256:
        _fail("grid", "N", "must not exceed 256")
    d = values["grid"]["d"]
    e1 = [1.0] + [0.0] * (d - 1)
    vector_defaults = {("kernel", "cap_axis"): e1, ("kernel", "mod_axis"): e1, ("kernel", "sector_axis"): e1,
                       ("solver", "rhs_center"): [0.5 * values["grid"]["L"]] * d, ("solver", "rhs_amplitude"): e1}
    for (sec, key), default in vector_defaults.items():
        if not cp.has_option(sec, key):
            values[sec][key] = default
        elif len(values[sec][key]) != d:
            _fail(sec, key, f"needs {d} components")
    if values["solver"]["rhs"] == "file" and not values["solver"]["rhs_file"]:
        _fail("solver", "rhs_file", "required when rhs = file")
    return values


# ---------------------------------------------------------------------------
# Object construction
# ---------------------------------------------------------------------------

def build_grid(cfg: RunConfig) -> GridSpec:
    g = cfg.values["grid"]
    return GridSpec(g["d"], g["N"], g["L"])


def build_kernel(cfg: RunConfig):
    from .kernel import ConeSpec, IntegrableKernel, Modulation, SingularKernel

    k = cfg.values["kernel"]
    d = cfg.values["grid"]["d"]
    if k["type"] == "fractional":
        return SingularKernel.fractional(d, k["s"], k["alpha"])
    if k["type"] == "singular":
        unit = lambda v: np.asarray(v) / np.linalg.norm(v)  # noqa: E731
        cone = ConeSpec.full(d) if k["cone"] == "full" else ConeSpec.cap(unit(k["cap_axis"]), k["cap_half_angle"])
        if k["modulation"] == "constant":
            mod = Modulation.constant(k["mod_a"])
        else:
            mod = getattr(Modulation, k["modulation"])(k["mod_a"], k["mod_b"], unit(k["mod_axis"]))
        return SingularKernel(d, k["s"], cone, mod, k["r"])
    if k["family"] == "ball":
        return IntegrableKernel.ball(d, k["radius"], k["mass"])
    if k["family"] == "gaussian":
        return IntegrableKernel.gaussian(d, k["sigma"], k["mass"])
    axis = np.asarray(k["sector_axis"]) / np.linalg.norm(k["sector_axis"])
    return IntegrableKernel.sector(d, axis, k["sector_half_angle"], k["radius"], k["mass"])


def build_operator(cfg: RunConfig, lam: float | None = None):
    from .operator import OperatorHandle

    lam = cfg.values["solver"]["lambda"] if lam is None else lam
    return OperatorHandle(build_kernel(cfg), lam, cfg.values["kernel"]["symbol_tol"])


def build_rhs(cfg: RunConfig, grid: GridSpec, rng) -> VectorField:
    from .operator import PeriodizedGaussian

    sv = cfg.values["solver"]
    if sv["rhs"] == "random":
        f = VectorField.random(grid, rng, smooth=sv["rhs_smooth"])
    elif sv["rhs"] == "gaussian":
        f = PeriodizedGaussian(grid.L, sv["rhs_center"], sv["rhs_sigma"], sv["rhs_amplitude"]).grid_values(grid)
    else:
        f = read_field(sv["rhs_file"])
        if f.grid != grid:
            _fail("solver", "rhs_file", "field grid does not match [grid]")
    if sv["zero_mean"]:
        f = VectorField(grid, f.values - f.values.mean(axis=tuple(range(grid.d))))
    return f


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple)):
        return " ".join(_fmt(x) for x in v)
    return str(v)


def _write_kv(path: str, items) -> str:
    with open(path, "w") as fh:
        for k, v in items:
            fh.write(f"{k} = {_fmt(v)}\n")
    return path


def _write_config(cfg: RunConfig, path: str) -> str:
    with open(path, "w") as fh:
        for sec, keys in cfg.values.items():
            fh.write(f"[{sec}]\n")
            for k, v in keys.items():
                fh.write(f"{k} = {_fmt(v)}\n")
            fh.write("\n")
    return path


def cmd_symbol(cfg: RunConfig, rng) -> int:
    from .symbol import compute_lame_constants, symbol_table

    grid = build_grid(cfg)
    kernel = build_kernel(cfg)
    tbl = symbol_table(kernel, grid, cfg.values["kernel"]["symbol_tol"])
    tbl.to_csv(os.path.join(cfg.out, "symbol_table.csv"))
    items = [("kernel", kernel.label), ("structure", tbl.structure), ("provenance", tbl.provenance),
             ("max_quadrature_error", tbl.error), ("modes", grid.N**grid.d)]
    if cfg.values["kernel"]["type"] == "fractional":
        c = compute_lame_constants(grid.d, kernel.s)
        items += [("l1", c.l1), ("l2", c.l2)]
    _write_kv(os.path.join(cfg.out, "symbol_summary.txt"), items)
    return 0


def cmd_solve_steady(cfg: RunConfig, rng) -> int:
    from .solver import solve_steady, steady_residual, verify_apriori

    grid = build_grid(cfg)
    op = build_operator(cfg)
    f = build_rhs(cfg, grid, rng)
    u = solve_steady(op, f)
    write_field(f, os.path.join(cfg.out, "rhs.field"))
    write_field(u, os.path.join(cfg.out, "solution.field"))
    items = [("lambda", op.lam), ("residual", steady_residual(op, u, f)),
             ("norm_f", f.norm()), ("norm_u", u.norm())]
    _write_kv(os.path.join(cfg.out, "steady_summary.txt"), items)
    kind = cfg.values["solver"]["estimate"]
    if kind != "none":
        rep = verify_apriori(op, u, f, kind, cfg.values["solver"]["p"])
        rep.to_text(os.path.join(cfg.out, "estimate.txt"))
        rep.to_csv(os.path.join(cfg.out, "estimate.csv"))
        if not rep.passed:
            return 1
    return 0


def cmd_solve_wave(cfg: RunConfig, rng) -> int:
    from .wave import energy_ledger, propagate

    grid = build_grid(cfg)
    op = build_operator(cfg)
    w = cfg.values["wave"]
    u0 = VectorField.random(grid, rng, smooth=w["smooth"])
    v0 = VectorField.random(grid, rng, smooth=w["smooth"])
    f0 = VectorField.random(grid, rng, smooth=w["smooth"]) if w["forcing"] == "constant" else None
    T = w["T"]
    times = np.linspace(0.0, T, w["n_out"] + 1)
    dt = None
    if w["stepper"] == "leapfrog":
        steps = max(1, int(math.ceil(T / w["dt"] / w["n_out"] - 1e-9))) * w["n_out"]
        dt = T / steps if T > 0.0 else w["dt"]
    traj = propagate(op, u0, v0, f0, T, times, w["stepper"], dt)
    led = energy_ledger(traj, op, f0)
    if w["export_fields"]:
        traj.export(os.path.join(cfg.out, "fields"))
    led.to_csv(os.path.join(cfg.out, "ledger.csv"))
    _write_kv(os.path.join(cfg.out, "wave_summary.txt"),
              [("stepper", w["stepper"]), ("dt", dt if dt is not None else "none"), ("T", T),
               ("lambda", op.lam), ("forcing", w["forcing"]), ("energy_drift", led.drift)])
    return 0


def cmd_validate(cfg: RunConfig, rng) -> int:
    from .validation import run_suites

    results = run_suites(cfg, rng)
    with open(os.path.join(cfg.out, "validate_report.txt"), "w") as fh:
        for r in results:
            fh.write(f"{r.name} = {r.verdict}  # {r.metric_name} {_fmt(r.metric)} (limit {_fmt(r.limit)})\n")
    with open(os.path.join(cfg.out, "validate.csv"), "w") as fh:
        fh.write("suite,verdict,metric,value,limit\n")
        for r in results:
            fh.write(f"{r.name},{r.verdict},{r.metric_name},{_fmt(r.metric)},{_fmt(r.limit)}\n")
    return 1 if any(r.verdict == "fail" for r in results) else 0


HANDLERS = {
    "symbol": cmd_symbol,
    "validate": cmd_validate,
    "solve-steady": cmd_solve_steady,
    "solve-wave": cmd_solve_wave,
}


# ---------------------------------------------------------------------------
# Manifest and entry point
# ---------------------------------------------------------------------------

def write_manifest(out: str) -> str:
    """One line per artifact: relative path, byte length, SHA-256."""
    entries = []
    for root, _, files in os.walk(out):
        for name in files:
            path = os.path.join(root, name)
            rel = os.path.relpath(path, out)
            if rel == MANIFEST:
                continue
            with open(path, "rb") as fh:
                data = fh.read()
            entries.append((rel.replace(os.sep, "/"), len(data), hashlib.sha256(data).hexdigest()))
    path = os.path.join(out, MANIFEST)
    with open(path, "w") as fh:
        for rel, size, digest in sorted(entries):
            fh.write(f"{rel}\t{size}\t{digest}\n")
    return path


def run(cfg: RunConfig) -> int:
    os.makedirs(cfg.out, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    _write_config(cfg, os.path.join(cfg.out, "config_resolved.ini"))
    try:
        return HANDLERS[cfg.command](cfg, rng)
    finally:
        write_manifest(cfg.out)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nonlocal-lame", description="Nonlocal Lamé symbol, solver and wave driver.")
    p.add_argument("command", help="one of: " + ", ".join(COMMANDS))
    p.add_argument("--config", help="INI configuration file")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--seed", type=int, default=None, help="random seed (default: [run] seed, 42)")
    p.add_argument("--threads", type=int, default=None, help="FFT worker threads")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        text = ""
        if args.config:
            try:
                with open(args.config) as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"--config: cannot read {args.config!r} ({exc.strerror})") from None
        values = parse_config(text, args.command)
        seed = values["run"]["seed"] if args.seed is None else args.seed
        if seed < 0:
            raise ConfigError("--seed: must be nonnegative")
        values["run"]["seed"] = seed
        threads = values["run"]["threads"] if args.threads is None else args.threads
        set_workers(threads)
        cfg = RunConfig(values["run"]["command"], values, args.out, seed)
        start = time.perf_counter()
        status = run(cfg)
        print(f"{cfg.command}: {'ok' if status == 0 else 'failed verdicts'} "
              f"({time.perf_counter() - start:.1f} s), artifacts in {cfg.out}")
        return status
    except (ConfigError, UsageError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc} {exc.payload}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
