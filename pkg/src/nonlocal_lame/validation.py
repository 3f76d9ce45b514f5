"""Property suites run by the ``validate`` command.

Each suite returns a :class:`SuiteResult` whose verdict is derived only from
the recorded metric and limit.  Suites that do not apply to the configured
kernel (for instance the closed-form symbol comparison for a cone kernel)
are reported as ``skipped``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import GridSpec, VectorField
from .kernel import HomotopyKernel, IntegrableKernel, SingularKernel, modified_kernel
from .operator import OperatorHandle, TrigField, apply_L_quadrature, apply_L_spectral
from .solver import block_residuals, monotonicity_identity, solve_resolvent_block, solve_steady, steady_residual
from .symbol import (
    analytic_fraclame_symbol,
    compute_lame_constants,
    even_part_symbol,
    kernel_symbol,
    marcinkiewicz_check,
    multiplier_m1_m2,
    psi_min,
    symbol_upper_bound_check,
)
from .wave import energy_ledger, propagate


@dataclass
class SuiteResult:
    name: str
    verdict: str
    metric_name: str
    metric: float
    limit: float

    @classmethod
    def check(cls, name: str, metric_name: str, metric: float, limit: float, upper: bool = True) -> "SuiteResult":
        ok = metric <= limit if upper else metric >= limit
        return cls(name, "pass" if bool(ok) and np.isfinite(metric) else "fail", metric_name, float(metric), float(limit))

    @classmethod
    def skipped(cls, name: str) -> "SuiteResult":
        return cls(name, "skipped", "none", float("nan"), float("nan"))


def _random_xi(rng, d: int, n: int) -> np.ndarray:
    v = rng.standard_normal((n, d))
    v /= np.linalg.norm(v, axis=1)[:, None]
    return v * (2.0 ** rng.uniform(-2.0, 5.0, size=n))[:, None]


def _is_fractional(k) -> bool:
    return (isinstance(k, SingularKernel) and k.cone.is_full and k.modulation.is_constant
            and not np.isfinite(k.r))


def suite_symbol_oracle(op, grid, rng):
    k = op.kernel
    if not _is_fractional(k):
        return SuiteResult.skipped("symbol_oracle")
    xi = _random_xi(rng, grid.d, 20)
    M, _ = kernel_symbol(k, xi)
    c = compute_lame_constants(grid.d, k.s)
    ref = k.alpha1 * analytic_fraclame_symbol(c, xi).M
    err = np.max(np.linalg.norm(M - ref, axis=(1, 2)) / np.linalg.norm(ref, axis=(1, 2)))
    return SuiteResult.check("symbol_oracle", "max_relative_error", err, 1e-3)


def suite_homogeneity(op, grid, rng):
    k = op.kernel
    if not _is_fractional(k):
        return SuiteResult.skipped("homogeneity")
    c = compute_lame_constants(grid.d, k.s)
    xi = _random_xi(rng, grid.d, 10)
    base = analytic_fraclame_symbol(c, xi).M
    worst = 0.0
    for mu in (0.5, 2.0, 4.0):
        M = analytic_fraclame_symbol(c, mu * xi).M
        worst = max(worst, float(np.max(np.abs(M - mu ** (2 * k.s) * base) / np.abs(base).max())))
    return SuiteResult.check("homogeneity", "max_relative_error", worst, 1e-10)


def suite_coercivity(op, grid, rng):
    k = op.kernel
    if not isinstance(k, SingularKernel):
        return SuiteResult.skipped("coercivity")
    psi = psi_min(k.cone, k.s).value
    kt = modified_kernel(HomotopyKernel(k, 1.0))
    xi = _random_xi(rng, grid.d, 20)
    M = even_part_symbol(kt, xi).M
    lower = k.alpha1 * psi * (2.0 * np.pi * np.linalg.norm(xi, axis=1)) ** (2.0 * k.s)
    slack = (np.linalg.eigvalsh(M)[:, 0] - lower) / lower
    return SuiteResult.check("coercivity", "min_relative_slack", float(slack.min()), -1e-6, upper=False)


def suite_upper_bound(op, grid, rng):
    k = op.kernel
    if not isinstance(k, SingularKernel):
        return SuiteResult.skipped("upper_bound")
    rep = symbol_upper_bound_check(k)
    return SuiteResult("upper_bound", "pass" if rep.passed else "fail", "sup_ratio", rep.sup, float("inf"))


def suite_operator_agreement(op, grid, rng):
    if grid.d != 2:
        return SuiteResult.skipped("operator_agreement")
    u = TrigField.random(grid.d, grid.L, rng, n_modes=3, kmax=3)
    Lu = apply_L_spectral(op.with_lambda(0.0), u.grid_values(grid)).values.reshape(-1, grid.d)
    idx = rng.choice(grid.N**grid.d, size=4, replace=False)
    pts = grid.nodes().reshape(-1, grid.d)[idx]
    quad = np.array([apply_L_quadrature(op, u, x, level=1).value for x in pts])
    err = np.max(np.linalg.norm(quad - Lu[idx], axis=1)) / np.max(np.linalg.norm(Lu, axis=1))
    return SuiteResult.check("operator_agreement", "relative_sup_difference", err, 1e-3)


def suite_steady(op, grid, rng):
    f = VectorField.random(grid, rng, smooth=6.0)
    if op.lam == 0.0:
        f = VectorField(grid, f.values - f.values.mean(axis=tuple(range(grid.d))))
    u = solve_steady(op, f)
    return SuiteResult.check("steady_residual", "relative_residual", steady_residual(op, u, f), 1e-10)


def suite_integrable_resolvent(op, grid, rng):
    k = IntegrableKernel.gaussian(grid.d, 2.0 * grid.h, 1.0)
    worst = -np.inf
    for lam in (0.1, 1.0, 10.0):
        opi = OperatorHandle(k, lam)
        f = VectorField.random(grid, rng)
        u = solve_steady(opi, f)
        worst = max(worst, lam * u.norm() - f.norm())
    return SuiteResult.check("integrable_resolvent", "max_excess", worst, 1e-12)


def suite_block(op, grid, rng):
    if not op.kernel.is_even:
        return SuiteResult.skipped("block_system")
    g1 = VectorField.random(grid, rng, smooth=6.0)
    g2 = VectorField.random(grid, rng, smooth=6.0)
    u, v = solve_resolvent_block(op, g1, g2)
    r = max(block_residuals(op, u, v, g1, g2))
    m = monotonicity_identity(op, u, v).mismatch
    return SuiteResult.check("block_system", "max_residual_or_mismatch", max(r, m), 1e-10)


def suite_conservation(op, grid, rng):
    if not op.kernel.is_even:
        return SuiteResult.skipped("conservation")
    u0 = VectorField.random(grid, rng, smooth=4.0)
    v0 = VectorField.random(grid, rng, smooth=4.0)
    f0 = VectorField.random(grid, rng, smooth=4.0)
    drift = 0.0
    for f in (None, f0):
        traj = propagate(op, u0, v0, f, T=1.0)
        drift = max(drift, energy_ledger(traj, op, f).drift)
    return SuiteResult.check("conservation", "relative_drift", drift, 1e-8)


def suite_multipliers(op, grid, rng):
    k = op.kernel
    if not _is_fractional(k):
        return SuiteResult.skipped("multipliers")
    c = compute_lame_constants(grid.d, k.s)
    lam = op.lam if op.lam > 0.0 else 1.0
    ok = True
    worst = 0.0
    for name in ("m1", "m2"):
        rep = marcinkiewicz_check(name, c, lam)
        ok = ok and rep.verdict
        worst = max(worst, max(max(v.values()) for v in rep.suprema.values()))
    m1, m2 = multiplier_m1_m2(c, lam, _random_xi(rng, grid.d, 200))
    ok = ok and bool(np.all(m1 > 0.0)) and bool(np.all((m2 >= 0.0) & (m2 < 1.0)))
    return SuiteResult("multipliers", "pass" if ok else "fail", "max_weighted_difference", worst, float("inf"))


SUITES = (
    suite_symbol_oracle,
    suite_homogeneity,
    suite_coercivity,
    suite_upper_bound,
    suite_operator_agreement,
    suite_steady,
    suite_integrable_resolvent,
    suite_block,
    suite_conservation,
    suite_multipliers,
)


def run_suites(cfg, rng) -> list[SuiteResult]:
    from .cli import build_grid, build_operator

    grid: GridSpec = build_grid(cfg)
    op = build_operator(cfg)
    return [suite(op, grid, rng) for suite in SUITES]
