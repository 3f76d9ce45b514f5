"""Time evolution of ``u_tt + L u + lam u = f`` on the periodic grid.

Two steppers share the Fourier-space formulation.

* ``exact``: each mode's ``d x d`` matrix ``A = M + lam I`` is diagonalized
  (``A = Q diag(w^2) Q^T``) and the oscillator is solved in closed form,
  directly at every requested output time.
* ``leapfrog``: kick-drift-kick Störmer–Verlet with a fixed step, used as a
  second-order reference.

The conserved quantity for a constant load ``f0`` is

    E(t) = ||v||^2 + <L u, u> + lam ||u||^2 - 2 <f0, u>,

whose time derivative is ``2 <v, u_tt + L u + lam u - f0> = 0``.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalError, UsageError
from .field import (
    GridSpec,
    SpectralField,
    VectorField,
    forward_transform,
    homogeneous_weight,
    inverse_transform,
    write_field,
)
from .kernel import SingularKernel
from .operator import OperatorHandle
from .quadrature import gauss_legendre
from .solver import energy_inner
from .symbol import psi_min


@dataclass
class WaveState:
    t: float
    u: VectorField
    v: VectorField

    def __post_init__(self):
        if self.u.grid != self.v.grid:
            raise UsageError("displacement and velocity live on different grids")


@dataclass
class Trajectory:
    states: list
    stepper: str
    forcing: str
    dt: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i) -> WaveState:
        return self.states[i]

    def export(self, directory: str, prefix: str = "state") -> list[str]:
        """Write ``u`` and ``v`` of every state in the field file format."""
        os.makedirs(directory, exist_ok=True)
        paths = []
        for i, st in enumerate(self.states):
            paths += write_field(st.u, os.path.join(directory, f"{prefix}_{i:04d}_u.field"))
            paths += write_field(st.v, os.path.join(directory, f"{prefix}_{i:04d}_v.field"))
        return paths


# ---------------------------------------------------------------------------
# Mode data
# ---------------------------------------------------------------------------

def _require_even(op: OperatorHandle) -> None:
    if not op.kernel.is_even:
        raise UsageError("the wave equation is posed for even kernels only")


def _mode_matrices(op: OperatorHandle, grid: GridSpec) -> np.ndarray:
    _require_even(op)
    tbl = op.table(grid)
    if not tbl.is_real:
        raise UsageError("the wave propagator needs a real symmetric symbol")
    d = grid.d
    return np.asarray(tbl.M, dtype=float).reshape(-1, d, d) + op.lam * np.eye(d)


def _eigen(op: OperatorHandle, grid: GridSpec):
    A = _mode_matrices(op, grid)
    w2, Q = np.linalg.eigh(A)
    scale = max(float(np.max(np.abs(w2), initial=0.0)), 1.0)
    if np.min(w2) < -1e-10 * scale:
        i = int(np.argmin(np.min(w2, axis=1)))
        xi = grid.frequencies().reshape(-1, grid.d)[i]
        raise NumericalError("symbol is not positive semidefinite",
                             {"xi": xi.tolist(), "eigenvalue": float(np.min(w2[i]))})
    w2 = np.clip(w2, 0.0, None)
    return w2, Q


def _coeffs(u: VectorField) -> np.ndarray:
    return forward_transform(u).coefficients.reshape(-1, u.grid.d)


def _field(grid: GridSpec, c: np.ndarray) -> VectorField:
    return inverse_transform(SpectralField(grid, c.reshape(grid.shape + (grid.d,))))


def _to_eig(Q, c):
    return np.einsum("kji,kj->ki", Q, c)


def _from_eig(Q, c):
    return np.einsum("kij,kj->ki", Q, c)


def _sin_over(w, t):
    """``sin(w t) / w`` with the limit ``t`` at ``w = 0``."""
    return t * np.sinc(w * t / np.pi)


def _one_minus_cos_over(w, t):
    """``(1 - cos(w t)) / w^2`` with the limit ``t^2 / 2`` at ``w = 0``."""
    return 0.5 * t * t * np.sinc(w * t / (2.0 * np.pi)) ** 2


# ---------------------------------------------------------------------------
# Forcing
# ---------------------------------------------------------------------------

def _forcing_kind(forcing) -> str:
    if forcing is None:
        return "zero"
    if isinstance(forcing, VectorField):
        return "constant"
    if callable(forcing):
        return "series"
    raise UsageError("forcing must be None, a VectorField or a callable t -> VectorField")


def _check_grid(grid: GridSpec, *fields):
    for f in fields:
        if f.grid != grid:
            raise UsageError("all fields must live on the same grid")


# ---------------------------------------------------------------------------
# Steppers
# ---------------------------------------------------------------------------

def _output_times(T: float, times) -> np.ndarray:
    if not (np.isfinite(T) and T >= 0.0):
        raise ConfigError("final time must be finite and nonnegative")
    if times is None:
        times = np.linspace(0.0, T, 11)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(times < 0.0) or np.any(times > T * (1 + 1e-12)) or np.any(np.diff(times) < 0):
        raise ConfigError("output times must be sorted and lie in [0, T]")
    return times


def _exact(op, u0, v0, forcing, kind, times, duhamel_panels, duhamel_order):
    grid = u0.grid
    w2, Q = _eigen(op, grid)
    w = np.sqrt(w2)
    a0 = _to_eig(Q, _coeffs(u0))
    b0 = _to_eig(Q, _coeffs(v0))
    g0 = _to_eig(Q, _coeffs(forcing)) if kind == "constant" else None
    x, wq = gauss_legendre(duhamel_order)
    states = []
    for t in times:
        c = np.cos(w * t)
        so = _sin_over(w, t)
        a = c * a0 + so * b0
        b = -w2 * so * a0 + c * b0
        if kind == "constant":
            a = a + _one_minus_cos_over(w, t) * g0
            b = b + so * g0
        elif kind == "series" and t > 0.0:
            edges = np.linspace(0.0, t, duhamel_panels + 1)
            for lo, hi in zip(edges[:-1], edges[1:]):
                for xn, wn in zip(x, wq):
                    tau = lo + (hi - lo) * xn
                    ft = forcing(tau)
                    _check_grid(grid, ft)
                    g = _to_eig(Q, _coeffs(ft)) * ((hi - lo) * wn)
                    a = a + _sin_over(w, t - tau) * g
                    b = b + np.cos(w * (t - tau)) * g
        states.append(WaveState(float(t), _field(grid, _from_eig(Q, a)), _field(grid, _from_eig(Q, b))))
    return states


def _leapfrog(op, u0, v0, forcing, kind, times, dt):
    grid = u0.grid
    A = _mode_matrices(op, grid)
    top = np.linalg.eigvalsh(A)[:, -1]
    i = int(np.argmax(top))
    if dt * dt * top[i] > 4.0:
        xi = grid.frequencies().reshape(-1, grid.d)[i]
        raise ConfigError(f"leapfrog step violates dt^2 * max eigenvalue <= 4 "
                          f"(dt={dt!r}, eigenvalue={float(top[i])!r} at xi={xi.tolist()})")
    steps = np.rint(times / dt).astype(int)
    if np.any(np.abs(steps * dt - times) > 1e-9 * max(1.0, float(times.max(initial=0.0)))):
        raise ConfigError("output times must be integer multiples of the leapfrog step")

    def load(t):
        if kind == "zero":
            return 0.0
        f = forcing if kind == "constant" else forcing(t)
        _check_grid(grid, f)
        return _coeffs(f)

    def accel(c, t):
        return load(t) - np.einsum("kij,kj->ki", A, c)

    a = _coeffs(u0)
    b = _coeffs(v0)
    n, states = 0, []
    for target, t_out in zip(steps, times):
        while n < target:
            t = n * dt
            b = b + 0.5 * dt * accel(a, t)
            a = a + dt * b
            b = b + 0.5 * dt * accel(a, t + dt)
            n += 1
        states.append(WaveState(float(t_out), _field(grid, a), _field(grid, b)))
    return states


def propagate(op: OperatorHandle, u0: VectorField, v0: VectorField, forcing=None, T: float = 1.0,
              times=None, stepper: str = "exact", dt: float | None = None,
              duhamel_panels: int = 16, duhamel_order: int = 8) -> Trajectory:
    """Solve ``u_tt + L u + lam u = f`` with ``u(0) = u0``, ``u_t(0) = v0``.

    ``forcing`` is ``None``, a constant field ``f0`` or a callable ``t -> f(t)``
    (handled by a composite Gauss–Legendre Duhamel integral in the exact
    stepper).  States are returned at ``times`` (default: 11 equispaced
    points on ``[0, T]``).
    """
    _require_even(op)
    _check_grid(u0.grid, v0)
    kind = _forcing_kind(forcing)
    if kind == "constant":
        _check_grid(u0.grid, forcing)
    times = _output_times(T, times)
    if stepper == "exact":
        states = _exact(op, u0, v0, forcing, kind, times, duhamel_panels, duhamel_order)
    elif stepper == "leapfrog":
        if dt is None or not dt > 0.0:
            raise ConfigError("leapfrog needs a positive step dt")
        states = _leapfrog(op, u0, v0, forcing, kind, times, float(dt))
    else:
        raise ConfigError(f"unknown stepper {stepper!r}")
    return Trajectory(states, stepper, kind, dt, {"lam": op.lam, "T": float(T)})


# ---------------------------------------------------------------------------
# Energy
# ---------------------------------------------------------------------------

def _l2(a: VectorField, b: VectorField) -> float:
    ah = forward_transform(a).coefficients
    bh = forward_transform(b).coefficients
    return float(np.sum(np.conj(bh) * ah).real / a.grid.L**a.grid.d)


@dataclass
class EnergyLedger:
    t: np.ndarray
    kinetic: np.ndarray
    elastic: np.ndarray
    mass: np.ndarray
    forcing: np.ndarray
    total: np.ndarray

    @property
    def scale(self) -> float:
        """Largest absolute size of the individual entries over the run."""
        parts = np.abs(np.stack([self.kinetic, self.elastic, self.mass, self.forcing]))
        return float(np.max(np.sum(parts, axis=0), initial=0.0))

    @property
    def drift(self) -> float:
        """``max_t |E(t) - E(0)|`` relative to :attr:`scale` (0 for the zero solution)."""
        sc = self.scale
        if sc == 0.0:
            return 0.0
        return float(np.max(np.abs(self.total - self.total[0])) / sc)

    def to_csv(self, path: str) -> str:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "kinetic", "elastic", "mass", "forcing", "total"])
            for row in zip(self.t, self.kinetic, self.elastic, self.mass, self.forcing, self.total):
                w.writerow([repr(float(x)) for x in row])
        return path


def energy_ledger(traj: Trajectory, op: OperatorHandle, f0: VectorField | None = None) -> EnergyLedger:
    """Entries of ``E = ||v||^2 + <L u, u> + lam ||u||^2 - 2 <f0, u>`` at every stored time.

    The elastic entry ``<L u, u>`` is evaluated spectrally; it equals half
    the bond-strain double integral.
    """
    _require_even(op)
    if traj.forcing == "series":
        raise UsageError("the energy ledger needs a constant-in-time load")
    rows = []
    for st in traj.states:
        kin = _l2(st.v, st.v)
        el = energy_inner(op, st.u, st.u, lam=0.0)
        mass = op.lam * _l2(st.u, st.u)
        frc = -2.0 * _l2(f0, st.u) if f0 is not None else 0.0
        rows.append((st.t, kin, el, mass, frc, kin + el + mass + frc))
    cols = np.array(rows, dtype=float).reshape(-1, 6).T
    return EnergyLedger(*cols)


def sqrt_energy_norm(op: OperatorHandle, u: VectorField) -> float:
    """``<L_lam^{1/2} u, L_lam^{1/2} u> = <L u, u> + lam ||u||^2``."""
    _require_even(op)
    return energy_inner(op, u, u)


@dataclass
class EquivalenceEnvelope:
    """Bounds ``c1 <= sqrt_energy_norm(u) / (||D^s u||^2 + ||u||^2) <= c2``."""

    c1: float
    c2: float
    lower_theory: float | None = None


def equivalence_envelope(op: OperatorHandle, grid: GridSpec) -> EquivalenceEnvelope:
    """Per-mode eigenvalue envelope of ``(M + lam I) / ((2 pi |xi|)^{2s} + 1)``.

    For an untruncated even singular kernel the coercivity constant gives
    the a priori lower bound ``min(alpha1 * psi_min, lam)`` as well.
    """
    _require_even(op)
    s = op.kernel.s
    if s is None:
        raise UsageError("the equivalence envelope needs a singular kernel")
    eig = np.linalg.eigvalsh(_mode_matrices(op, grid))
    w = homogeneous_weight(grid, 2.0 * s).reshape(-1) + 1.0
    ratio = eig / w[:, None]
    lower = None
    k = op.kernel
    if isinstance(k, SingularKernel) and not np.isfinite(k.r):
        lower = min(k.alpha1 * psi_min(k.cone, s).value, op.lam)
    return EquivalenceEnvelope(float(ratio.min()), float(ratio.max()), lower)


def export_run(traj: Trajectory, ledger: EnergyLedger | None, directory: str) -> list[str]:
    """Field files for every state plus ``ledger.csv``."""
    paths = traj.export(directory)
    if ledger is not None:
        paths.append(ledger.to_csv(os.path.join(directory, "ledger.csv")))
    return paths
