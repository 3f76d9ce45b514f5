"""Acceptance criteria, one test per criterion.

Each test prints (and records for the terminal summary) one line of the
form ``criterion  N: PASS|FAIL  <measured quantities>`` before asserting.
Run with ``pytest tests/test_acceptance.py -v`` (the lines also appear in
the "acceptance criteria" section of the summary).
"""
import math

import numpy as np

from nonlocal_lame.field import GridSpec, VectorField, lp_norm
from nonlocal_lame.kernel import ConeSpec, HomotopyKernel, IntegrableKernel, Modulation, SingularKernel, modified_kernel
from nonlocal_lame.operator import (
    OperatorHandle,
    PeriodizedGaussian,
    TrigField,
    apply_L_quadrature_grid,
    apply_L_spectral,
    quadrature_multipliers,
)
from nonlocal_lame.solver import (
    block_residuals,
    energy_inner,
    monotonicity_identity,
    solve_resolvent_block,
    solve_steady,
    state_inner,
    verify_apriori,
)
from nonlocal_lame.symbol import (
    analytic_fraclame_symbol,
    compute_lame_constants,
    dyadic_samples,
    even_part_symbol,
    kernel_symbol,
    marcinkiewicz_check,
    multiplier_m1_m2,
    psi_min,
    symbol_upper_bound_check,
)
from nonlocal_lame.wave import energy_ledger, propagate

S_VALUES = (0.25, 0.5, 0.75)
MUS = (0.5, 2.0, 4.0)


def random_xi(rng, n, lo=-2.0, hi=5.0):
    v = rng.standard_normal((n, 2))
    v /= np.linalg.norm(v, axis=1)[:, None]
    return v * (2.0 ** rng.uniform(lo, hi, size=n))[:, None]


def frob(M):
    return np.linalg.norm(M.reshape(M.shape[0], -1), axis=1)


# 1 -------------------------------------------------------------------------

def test_criterion_01_symbol_oracle(rng, acceptance):
    worst = {}
    for s in S_VALUES:
        xi = random_xi(rng, 20)
        M, _ = kernel_symbol(SingularKernel.fractional(2, s), xi)
        ref = analytic_fraclame_symbol(compute_lame_constants(2, s), xi).M
        worst[s] = float(np.max(frob(M - ref) / frob(ref)))
    ok = max(worst.values()) <= 1e-3
    acceptance(1, ok, "max relative error " + ", ".join(f"s={s}: {e:.2e}" for s, e in worst.items()) + " (limit 1e-3)")
    assert ok


# 2 -------------------------------------------------------------------------

def test_criterion_02_homogeneity(rng, acceptance):
    analytic, quad = 0.0, 0.0
    cap = ConeSpec.cap((0.6, 0.8), 0.5)
    for s in S_VALUES:
        c = compute_lame_constants(2, s)
        xi = random_xi(rng, 10, -1.0, 3.0)
        base = analytic_fraclame_symbol(c, xi).M
        kernels = [SingularKernel.fractional(2, s), SingularKernel(2, s, cap, Modulation.quadratic(1.0, 0.5, (1.0, 0.0)))]
        qbase = [kernel_symbol(k, xi)[0] for k in kernels]
        for mu in MUS:
            M = analytic_fraclame_symbol(c, mu * xi).M
            analytic = max(analytic, float(np.max(frob(M - mu ** (2 * s) * base) / frob(mu ** (2 * s) * base))))
            for k, qb in zip(kernels, qbase):
                Mq, _ = kernel_symbol(k, mu * xi)
                quad = max(quad, float(np.max(frob(Mq - mu ** (2 * s) * qb) / frob(mu ** (2 * s) * qb))))
    ok = analytic <= 1e-10 and quad <= 1e-3
    acceptance(2, ok, f"analytic path {analytic:.2e} (limit 1e-10), quadrature path {quad:.2e} (limit 1e-3)")
    assert ok


# 3 -------------------------------------------------------------------------

CONES = {
    "full": ConeSpec.full(2),
    "cap pi/4": ConeSpec.cap((1.0, 0.0), math.pi / 4),
    "cap pi/12": ConeSpec.cap((0.6, 0.8), math.pi / 12),
}


def test_criterion_03_coercivity(rng, acceptance):
    slacks = {}
    mods = (Modulation.constant(1.0), Modulation.quadratic(1.0, 0.5, (0.0, 1.0)))
    for name, cone in CONES.items():
        worst = np.inf
        for (s, r), mod in ((pair, m) for pair in ((0.5, math.inf), (0.3, 0.4), (0.75, 1.0)) for m in mods):
            k = SingularKernel(2, s, cone, mod, r)
            psi = psi_min(cone, s).value
            xi = random_xi(rng, 50, -3.0, 5.0)
            M = even_part_symbol(modified_kernel(HomotopyKernel(k, 1.0)), xi).M
            lower = k.alpha1 * psi * (2 * math.pi * np.linalg.norm(xi, axis=1)) ** (2 * s)
            worst = min(worst, float(np.min((np.linalg.eigvalsh(M)[:, 0] - lower) / lower)))
        slacks[name] = worst
    ok = min(slacks.values()) >= -1e-6
    acceptance(3, ok, "min relative slack " + ", ".join(f"{n}: {v:.2e}" for n, v in slacks.items()) + " (limit -1e-6)")
    assert ok


# 4 -------------------------------------------------------------------------

def test_criterion_04_upper_bound(acceptance):
    kernels = {
        "cap even s=0.5": SingularKernel(2, 0.5, ConeSpec.cap((1.0, 0.0), 0.6), Modulation.quadratic(1.0, 0.5, (0.6, 0.8))),
        "odd m s=0.3 r=0.5": SingularKernel(2, 0.3, ConeSpec.full(2), Modulation.linear(1.0, 0.6, (0.6, 0.8)), r=0.5),
        "odd m s=0.8 cap": SingularKernel(2, 0.8, ConeSpec.cap((0.0, 1.0), 1.0), Modulation.linear(1.0, 0.4, (1.0, 0.0))),
    }
    parts, ok = [], True
    for name, k in kernels.items():
        rep = symbol_upper_bound_check(k)
        octs = sorted(rep.octave_sup)
        ok = ok and rep.passed and np.isfinite(rep.sup)
        parts.append(f"{name}: sup {rep.sup:.3f} (top octaves {rep.octave_sup[octs[-2]]:.3f}/{rep.octave_sup[octs[-1]]:.3f})")
    acceptance(4, ok, "; ".join(parts))
    assert ok


# 5 -------------------------------------------------------------------------

def test_criterion_05_operator_agreement(rng, acceptance):
    kernels = {
        "fractional s=0.75": SingularKernel.fractional(2, 0.75),
        "cap linear s=0.3": SingularKernel(2, 0.3, ConeSpec.cap((1.0, 0.0), 0.5), Modulation.linear(1.0, 0.5, (0.6, 0.8)), r=0.15),
        "odd s=0.8 r=0.4": SingularKernel(2, 0.8, modulation=Modulation.linear(1.0, 0.5, (0.6, 0.8)), r=0.4),
    }
    grid = GridSpec(2, 32)
    fields = [TrigField.random(2, 1.0, rng, n_modes=4, kmax=6) for _ in range(10)]
    k_all = np.concatenate([f.k for f in fields])
    worst, monotone, parts = 0.0, True, []
    for name, k in kernels.items():
        op = OperatorHandle(k)
        Q = {lev: quadrature_multipliers(op, k_all, 1.0, level=lev) for lev in (0, 1, 2)}
        errs = {lev: 0.0 for lev in Q}
        start = 0
        for f in fields:
            n = len(f.k)
            spec = apply_L_spectral(op, f.grid_values(grid)).values
            scale = np.abs(spec).max()
            for lev, q in Q.items():
                quad = apply_L_quadrature_grid(op, f, grid, multipliers=q[start:start + n]).values
                errs[lev] = max(errs[lev], float(np.abs(quad - spec).max() / scale))
            start += n
        floor = 1e-12
        monotone = monotone and errs[1] <= max(errs[0], floor) and errs[2] <= max(errs[1], floor)
        worst = max(worst, errs[1])
        parts.append(f"{name}: " + "/".join(f"{errs[lev]:.1e}" for lev in (0, 1, 2)))
    ok = worst <= 1e-3 and monotone
    acceptance(5, ok, "relative sup difference at levels 0/1/2 " + "; ".join(parts) + " (limit 1e-3, non-increasing)")
    assert ok


# 6 -------------------------------------------------------------------------

def test_criterion_06_integrable_resolvent(rng, acceptance):
    grid = GridSpec(2, 32)
    kernels = [IntegrableKernel.gaussian(2, 0.05, 3.0), IntegrableKernel.ball(2, 0.2, 5.0)]
    worst = np.inf
    for k in kernels:
        for lam in (0.1, 1.0, 10.0):
            op = OperatorHandle(k, lam)
            fs = []
            for _ in range(20):
                f = VectorField.random(grid, rng, smooth=rng.choice([None, 3.0]))
                fs.append(f * (1.0 / f.norm()))
            us = [solve_steady(op, f) for f in fs]
            rep = verify_apriori(op, us, fs, "integrable")
            worst = min(worst, min(r["slack"] for r in rep.rows))
    ok = worst >= -1e-12
    acceptance(6, ok, f"min slack ||f|| - lambda ||u|| = {worst:.3e} over 2 kernels x 3 lambda x 20 f (limit -1e-12)")
    assert ok


# 7 -------------------------------------------------------------------------

def test_criterion_07_manufactured_solution(acceptance):
    op = OperatorHandle(SingularKernel.fractional(2, 0.5), 1.0)
    g = PeriodizedGaussian(1.0, [0.43, 0.52], 0.025, [1.0, -0.5])
    trig = g.to_trig()
    Q = quadrature_multipliers(op, trig.k, 1.0, level=1)
    errs = {}
    for N in (32, 64, 128):
        grid = GridSpec(2, N)
        ustar = g.grid_values(grid)
        f = apply_L_quadrature_grid(op, trig, grid, multipliers=Q) + op.lam * ustar
        u = solve_steady(op, f)
        errs[N] = (u - ustar).norm() / ustar.norm()
    ok = errs[128] <= 1e-3 and errs[32] > errs[64] > errs[128]
    acceptance(7, ok, "relative L2 error " + ", ".join(f"N={n}: {e:.2e}" for n, e in errs.items()) + " (limit 1e-3 at N=128, decreasing)")
    assert ok


# 8 -------------------------------------------------------------------------

def test_criterion_08_block_system(rng, acceptance):
    grid = GridSpec(2, 32)
    ops = [OperatorHandle(SingularKernel.fractional(2, 0.5), 1.0),
           OperatorHandle(SingularKernel(2, 0.4, ConeSpec.cap((1.0, 0.0), 0.7), Modulation.quadratic(1.0, 0.5, (0.6, 0.8))), 0.3)]
    res, mis, cross = 0.0, 0.0, 0.0
    for op in ops:
        for _ in range(20):
            g1 = VectorField.random(grid, rng, smooth=6.0)
            g2 = VectorField.random(grid, rng, smooth=6.0)
            u, v = solve_resolvent_block(op, g1, g2)
            res = max(res, *block_residuals(op, u, v, g1, g2))
            for uu, vv in ((u, v), (VectorField.random(grid, rng, smooth=6.0), VectorField.random(grid, rng, smooth=6.0))):
                m = monotonicity_identity(op, uu, vv)
                mis = max(mis, m.mismatch)
                # term by term: <A U, U>_H reduces to -<u, v> because the energy cross terms cancel
                Lu = apply_L_spectral(op, uu) + op.lam * uu
                AU_U = state_inner(op, (-1.0 * vv, Lu), (uu, vv))
                cross = max(cross, abs(AU_U + uu.inner(vv)) / m.state_norm2)
                terms = m.energy + m.half_u + m.half_v + m.half_diff
                mis = max(mis, abs(terms - m.rhs) / m.state_norm2,
                          abs(m.energy - energy_inner(op, uu, uu)) / m.state_norm2,
                          abs(m.half_diff - 0.5 * (uu - vv).norm() ** 2) / m.state_norm2)
    ok = res <= 1e-10 and mis <= 1e-10 and cross <= 1e-10
    acceptance(8, ok, f"block residual {res:.2e}, identity mismatch {mis:.2e}, <AU,U>+<u,v> {cross:.2e} (limit 1e-10)")
    assert ok


# 9 -------------------------------------------------------------------------

def test_criterion_09_conservation(rng, acceptance):
    grid = GridSpec(2, 32)
    op = OperatorHandle(SingularKernel(2, 0.5, ConeSpec.cap((1.0, 0.0), 0.7), Modulation.quadratic(1.0, 0.5, (0.6, 0.8))), 1.0)
    u0 = VectorField.random(grid, rng, smooth=4.0)
    v0 = VectorField.random(grid, rng, smooth=4.0)
    f0 = VectorField.random(grid, rng, smooth=4.0)
    exact = max(energy_ledger(propagate(op, u0, v0, f, T=1.0, times=np.linspace(0, 1, 21)), op, f).drift
                for f in (None, f0))
    dts = np.array([1 / 32, 1 / 64, 1 / 128, 1 / 256])
    drift = np.array([energy_ledger(propagate(op, u0, v0, f0, T=1.0, times=np.linspace(0, 1, 33),
                                              stepper="leapfrog", dt=dt), op, f0).drift for dt in dts])
    order = float(np.polyfit(np.log(dts), np.log(drift), 1)[0])
    ok = exact <= 1e-8 and abs(order - 2.0) <= 0.1
    acceptance(9, ok, f"exact drift {exact:.2e} (limit 1e-8); leapfrog drift "
               + "/".join(f"{d:.2e}" for d in drift) + f", order {order:.3f} (2.0 +- 0.1)")
    assert ok


# 10 ------------------------------------------------------------------------

def test_criterion_10_multipliers(rng, acceptance):
    ok = True
    worst_ratio = 0.0
    m1_min, m2_min, m2_max = np.inf, np.inf, -np.inf
    for s in S_VALUES:
        c = compute_lame_constants(2, s)
        xi = np.concatenate([dyadic_samples(2, range(-4, 11))[0], random_xi(rng, 500, -8.0, 12.0)])
        for lam in (0.5, 1.0, 2.0):
            for name in ("m1", "m2"):
                rep = marcinkiewicz_check(name, c, lam)
                ok = ok and rep.verdict
                for per_oct in rep.suprema.values():
                    vals = [per_oct[j] for j in rep.octaves]
                    ok = ok and all(np.isfinite(vals))
                    if vals[-2] > 0.0:
                        worst_ratio = max(worst_ratio, vals[-1] / vals[-2])
            m1, m2 = multiplier_m1_m2(c, lam, xi)
            m1_min, m2_min, m2_max = min(m1_min, m1.min()), min(m2_min, m2.min()), max(m2_max, m2.max())
    ok = ok and m1_min > 0.0 and m2_min >= 0.0 and m2_max < 1.0
    acceptance(10, ok, f"suprema finite, top/previous octave ratio <= {worst_ratio:.3f}; "
               f"min m1 {m1_min:.2e}, m2 in [{m2_min:.2e}, {m2_max:.4f}]")
    assert ok


# 11 ------------------------------------------------------------------------

def test_criterion_11_integrable_operator_bound(rng, acceptance):
    grid = GridSpec(2, 64)
    kernels = [IntegrableKernel.gaussian(2, 0.03, 2.0), IntegrableKernel.sector(2, (0.6, 0.8), 0.7, 0.1, 1.5),
               IntegrableKernel.ball(2, 0.08, 0.5)]
    worst = 0.0
    for k in kernels:
        op = OperatorHandle(k)
        bound = 2.0 * k.l1_mass()
        for _ in range(10):
            u = VectorField.random(grid, rng, smooth=rng.choice([4.0, 8.0]))
            Lu = apply_L_spectral(op, u)
            for p in (1.0, 2.0, 4.0, np.inf):
                worst = max(worst, lp_norm(Lu, p) / (bound * lp_norm(u, p)))
    ok = worst <= 1.0
    acceptance(11, ok, f"max ||Lu||_p / (2 ||rho||_1 ||u||_p) = {worst:.4f} over p in {{1,2,4,inf}}, 3 kernels x 10 fields (limit 1)")
    assert ok
