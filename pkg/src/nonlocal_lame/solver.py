"""Steady resolvent solves, a priori estimate checks and the block resolvent system.

Every solve is diagonal in Fourier space: at each grid frequency the
``d x d`` system ``(M(xi_k) + lam I) u_hat = f_hat`` is factorized directly
(LU with partial pivoting), so no iteration or regularization is involved.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SolverError, UsageError
from .field import (
    GridSpec,
    SpectralField,
    VectorField,
    bessel_potential,
    forward_transform,
    inverse_transform,
    lp_norm,
    sobolev_norms,
)
from .kernel import SingularKernel, n2_constant
from .operator import OperatorHandle, apply_L_spectral

COND_LIMIT = 1e12
RESIDUAL_LIMIT = 1e-10
PRECONDITION_LIMIT = 1e-8


# ---------------------------------------------------------------------------
# Steady solves
# ---------------------------------------------------------------------------

def _shifted_modes(op: OperatorHandle, grid: GridSpec, lam: float) -> np.ndarray:
    d = grid.d
    return np.asarray(op.table(grid).M).reshape(-1, d, d) + lam * np.eye(d)


def _mode_solve(op: OperatorHandle, f: VectorField, lam: float) -> VectorField:
    """Solve ``(M + lam I) u_hat = f_hat`` mode by mode."""
    if not isinstance(f, VectorField):
        raise UsageError("expected a VectorField right-hand side")
    grid = f.grid
    d = grid.d
    A = _shifted_modes(op, grid, lam)
    fh = forward_transform(f).coefficients.reshape(-1, d)
    xi = grid.frequencies().reshape(-1, d)
    zero = np.all(xi == 0.0, axis=1)
    singular_mean = lam == 0.0
    if singular_mean:
        scale = max(float(np.max(np.abs(fh), initial=0.0)), 1e-300)
        if np.max(np.abs(fh[zero]), initial=0.0) > 1e-12 * scale:
            raise SolverError("mean mode not solvable", {"xi": [0.0] * d, "f_hat": fh[zero][0].tolist()})
        A[zero] = np.eye(d)
    cond = np.linalg.cond(A)
    bad = ~np.isfinite(cond) | (cond > COND_LIMIT)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[np.argmax(np.where(np.isfinite(cond[bad]), cond[bad], np.inf))])
        raise SolverError("ill-conditioned mode", {"xi": xi[i].tolist(), "cond": float(cond[i])})
    uh = np.linalg.solve(A, fh[..., None])[..., 0]
    if singular_mean:
        uh[zero] = 0.0
    return inverse_transform(SpectralField(grid, uh.reshape(grid.shape + (d,))))


def steady_residual(op: OperatorHandle, u: VectorField, f: VectorField, lam: float | None = None) -> float:
    """``||L u + lam u - f|| / ||f||`` (absolute when ``f = 0``)."""
    lam = op.lam if lam is None else lam
    r = apply_L_spectral(op, u) + lam * u - f
    nf = f.norm()
    return r.norm() / nf if nf > 0.0 else r.norm()


def solve_steady(op: OperatorHandle, f: VectorField) -> VectorField:
    """Unique periodic solution of ``L u + lam u = f``.

    At ``lam = 0`` the right-hand side must have zero mean; the returned
    solution then has zero mean as well.
    """
    u = _mode_solve(op, f, op.lam)
    res = steady_residual(op, u, f)
    if not res <= RESIDUAL_LIMIT:
        raise SolverError("steady residual above tolerance", {"residual": res})
    return u


# ---------------------------------------------------------------------------
# A priori estimates
# ---------------------------------------------------------------------------

KINDS = ("nonintegrable", "integrable", "fraclame")


@dataclass
class EstimateReport:
    kind: str
    lam: float
    s: float | None
    p: float
    n1: float | None
    n2: float | None
    lambda0: float | None
    C: float
    C_bound: float | None
    rows: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def to_text(self, path: str) -> str:
        items = [("kind", self.kind), ("lambda", self.lam), ("s", self.s), ("p", self.p),
                 ("N1", self.n1), ("N2", self.n2), ("lambda0", self.lambda0),
                 ("C", self.C), ("C_bound", self.C_bound), ("runs", len(self.rows))]
        items += [(f"verdict.{k}", "pass" if v else "fail") for k, v in self.verdicts.items()]
        with open(path, "w") as fh:
            for k, v in items:
                fh.write(f"{k} = {_fmt(v)}\n")
        return path

    def to_csv(self, path: str) -> str:
        keys = ["run", "l2_u", "ds_u", "d2s_u", "norm_f", "lhs", "rhs", "slack", "ratio"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(keys)
            for i, row in enumerate(self.rows):
                w.writerow([i] + [_fmt(row[k]) for k in keys[1:]])
        return path


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return "none" if v is None else str(v)


def _as_runs(u, f):
    if isinstance(u, VectorField):
        return [(u, f)]
    runs = list(zip(u, f))
    if not runs:
        raise UsageError("no runs supplied")
    return runs


def verify_apriori(op: OperatorHandle, u, f, kind: str = "nonintegrable", p: float = 2.0) -> EstimateReport:
    """Evaluate both sides of the steady a priori estimates on solved pairs.

    ``u`` and ``f`` are fields or equal-length sequences of fields (a run
    set).  Each pair must solve ``L u + lam u = f`` to ``1e-8``.

    ``nonintegrable``
        ``||D^2s u|| + sqrt(lam) ||D^s u|| + lam ||u|| <= N1 (||f|| + N2 ||u||)``;
        ``N2`` is the explicit truncation constant and ``N1`` the smallest
        value that makes every run satisfy it.  With ``lambda0 = N1 N2`` the
        reported left side is ``... + (lam - lambda0) ||u||`` and ``C = N1``.
    ``integrable``
        ``lam ||u|| <= C ||f||``; the verdict tests ``C = 1``.
    ``fraclame``
        ``||u||_{H^{2s,p}} <= C ||f||_{L^p}`` with the Bessel norm evaluated as
        the grid ``L^p`` norm of the Bessel-weighted field.  For ``p = 2`` the
        exact per-mode bound ``C_bound`` is reported as well.
    """
    if kind not in KINDS:
        raise UsageError(f"unknown estimate kind {kind!r}; expected one of {KINDS}")
    lam = op.lam
    runs = _as_runs(u, f)
    for uu, ff in runs:
        res = steady_residual(op, uu, ff)
        if not res <= PRECONDITION_LIMIT:
            raise UsageError(f"u does not solve the equation (residual {res:.3e})")

    s = op.kernel.s
    rows = []
    for uu, ff in runs:
        nf = lp_norm(ff, p) if kind == "fraclame" else ff.norm()
        if s is not None:
            sn = sobolev_norms(uu, s)
            l2, ds, d2s = sn.l2, sn.ds, sn.d2s
        else:
            l2, ds, d2s = uu.norm(), float("nan"), float("nan")
        rows.append({"l2_u": l2, "ds_u": ds, "d2s_u": d2s, "norm_f": nf})

    n1 = n2 = lambda0 = c_bound = None
    verdicts = {}
    if kind == "nonintegrable":
        if s is None:
            raise UsageError("the nonintegrable estimate needs a singular kernel")
        n2 = n2_constant(op.kernel) if isinstance(op.kernel, SingularKernel) else 0.0
        base = [r["d2s_u"] + math.sqrt(lam) * r["ds_u"] + lam * r["l2_u"] for r in rows]
        denom = [r["norm_f"] + n2 * r["l2_u"] for r in rows]
        n1 = max((b / q for b, q in zip(base, denom) if q > 0.0), default=0.0)
        lambda0 = n1 * n2
        for r in rows:
            r["lhs"] = r["d2s_u"] + math.sqrt(lam) * r["ds_u"] + (lam - lambda0) * r["l2_u"]
        C = n1
    elif kind == "integrable":
        for r in rows:
            r["lhs"] = lam * r["l2_u"]
        C = max((r["lhs"] / r["norm_f"] for r in rows if r["norm_f"] > 0.0), default=0.0)
    else:
        if s is None:
            raise UsageError("the fractional estimate needs an exponent s")
        for (uu, _), r in zip(runs, rows):
            r["lhs"] = lp_norm(bessel_potential(uu, s), p)
        C = max((r["lhs"] / r["norm_f"] for r in rows if r["norm_f"] > 0.0), default=0.0)
        if p == 2.0:
            c_bound = _bessel_resolvent_bound(op, runs[0][0].grid)

    test_C = 1.0 if kind == "integrable" else C
    for r in rows:
        r["rhs"] = test_C * r["norm_f"]
        r["slack"] = r["rhs"] - r["lhs"]
        r["ratio"] = r["lhs"] / r["norm_f"] if r["norm_f"] > 0.0 else 0.0
        if r["norm_f"] == 0.0 and r["l2_u"] == 0.0:
            r["lhs"] = r["slack"] = 0.0
    scale = max((r["rhs"] for r in rows), default=0.0)
    verdicts["estimate"] = all(r["slack"] >= -1e-12 * max(scale, 1.0) for r in rows)
    verdicts["norms_nonnegative"] = all(r[k] >= 0.0 for r in rows for k in ("l2_u", "norm_f"))
    if c_bound is not None:
        verdicts["per_mode_bound"] = C <= c_bound * (1.0 + 1e-10)
    return EstimateReport(kind, lam, s, p, n1, n2, lambda0, C, c_bound, rows, verdicts)


def _bessel_resolvent_bound(op: OperatorHandle, grid: GridSpec) -> float:
    """``max_k (1 + 4 pi^2 |xi_k|^2)^s ||(M(xi_k) + lam I)^{-1}||_2``."""
    d = grid.d
    A = _shifted_modes(op, grid, op.lam)
    q = (2.0 * np.pi * np.linalg.norm(grid.frequencies().reshape(-1, d), axis=1)) ** 2
    smin = np.linalg.svd(A, compute_uv=False)[:, -1]
    ok = smin > 0.0
    return float(np.max((1.0 + q[ok]) ** op.kernel.s / smin[ok]))


# ---------------------------------------------------------------------------
# Block resolvent system
# ---------------------------------------------------------------------------

def _require_even(op: OperatorHandle) -> None:
    if not op.kernel.is_even:
        raise UsageError("the block system and wave equation need an even kernel")


def energy_inner(op: OperatorHandle, a: VectorField, b: VectorField, lam: float | None = None) -> float:
    """``<L_lam^{1/2} a, L_lam^{1/2} b> = L^-d sum Re <(M + lam I) a_hat, b_hat>``."""
    lam = op.lam if lam is None else lam
    grid = a.grid
    d = grid.d
    A = _shifted_modes(op, grid, lam)
    ah = forward_transform(a).coefficients.reshape(-1, d)
    bh = forward_transform(b).coefficients.reshape(-1, d)
    val = np.sum(np.conj(bh) * np.einsum("kij,kj->ki", A, ah))
    return float(val.real / grid.L**d)


def _l2_inner(a: VectorField, b: VectorField) -> float:
    grid = a.grid
    ah = forward_transform(a).coefficients
    bh = forward_transform(b).coefficients
    return float(np.sum(np.conj(bh) * ah).real / grid.L**grid.d)


def state_inner(op: OperatorHandle, U, V) -> float:
    """Inner product of ``H``: ``<L_lam^{1/2}u1, L_lam^{1/2}u2> + <u1, u2> + <v1, v2>``."""
    (u1, v1), (u2, v2) = U, V
    return energy_inner(op, u1, u2) + _l2_inner(u1, u2) + _l2_inner(v1, v2)


def solve_resolvent_block(op: OperatorHandle, g1: VectorField, g2: VectorField) -> tuple[VectorField, VectorField]:
    """Solve ``-v + 2u = g1``, ``L u + lam u + 2 v = g2``.

    Eliminating ``v = 2u - g1`` leaves ``L u + (lam + 4) u = 2 g1 + g2``.
    """
    _require_even(op)
    if g1.grid != g2.grid:
        raise UsageError("g1 and g2 live on different grids")
    u = _mode_solve(op, 2.0 * g1 + g2, op.lam + 4.0)
    v = 2.0 * u - g1
    return u, v


def block_residuals(op: OperatorHandle, u, v, g1, g2) -> tuple[float, float]:
    """Relative residuals of the two block equations (scaled by ``||g1|| + ||g2||``)."""
    scale = g1.norm() + g2.norm()
    scale = scale if scale > 0.0 else 1.0
    r1 = (2.0 * u - v - g1).norm()
    r2 = (apply_L_spectral(op, u) + op.lam * u + 2.0 * v - g2).norm()
    return r1 / scale, r2 / scale


@dataclass
class MonotonicityTerms:
    lhs: float
    rhs: float
    energy: float
    half_u: float
    half_v: float
    half_diff: float
    state_norm2: float

    @property
    def mismatch(self) -> float:
        return abs(self.lhs - self.rhs) / max(self.state_norm2, 1e-300)


def monotonicity_identity(op: OperatorHandle, u: VectorField, v: VectorField) -> MonotonicityTerms:
    """Both sides of ``<(A_lam + I) U, U>_H = ||L_lam^{1/2}u||^2 + (||u||^2 + ||v||^2)/2 + ||u - v||^2/2``.

    The left side applies ``A_lam U = (-v, L_lam u)`` and pairs it with ``U``
    in ``H``; the right side is assembled from its individual terms.
    """
    _require_even(op)
    Lu = apply_L_spectral(op, u) + op.lam * u
    AU = (-v, Lu)
    U = (u, v)
    norm2 = state_inner(op, U, U)
    lhs = state_inner(op, AU, U) + norm2
    energy = energy_inner(op, u, u)
    hu = 0.5 * _l2_inner(u, u)
    hv = 0.5 * _l2_inner(v, v)
    w = u - v
    hd = 0.5 * _l2_inner(w, w)
    return MonotonicityTerms(lhs, energy + hu + hv + hd, energy, hu, hv, hd, norm2)
