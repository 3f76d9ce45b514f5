"""Fourier matrix symbols of the nonlocal Lamé operator and their diagnostics.

Sign convention: ``M`` is the symbol of the operator ``L`` itself, i.e.

    M(xi) = int (y y^T / |y|^2) (1 - exp(2 pi i y.xi) + 2 pi i xi.y chi(y)) rho(y) dy,

so that ``(L u)^ = M u_hat``.  Its real part is positive semidefinite and
the fractional Lamé symbol is ``(2 pi |xi|)^{2s} (l1 I + l2 xi xi^T/|xi|^2)``
with ``l1, l2 > 0``.

For a separable component ``w(theta) g(t)`` the radial integral collapses to
a one-dimensional profile ``R(a)`` evaluated at ``a = 2 pi theta.xi`` (see
:mod:`quadrature`), leaving a surface integral over the direction set.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy import optimize

from .errors import ConfigError, NumericalError, SolverError, UsageError
from .field import GridSpec
from .kernel import (
    Compensator,
    ConeSpec,
    HomotopyKernel,
    KernelSpec,
    SingularKernel,
    check_cancellation,
)
from .quadrature import caps_to_arcs, circle_rule, sphere_rule

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# Data types
# ---------------------------------------------------------------------------

@dataclass
class MatrixSymbol:
    xi: np.ndarray
    M: np.ndarray
    structure: str
    provenance: str
    order: int | None = None
    error: float = 0.0

    @property
    def real(self) -> np.ndarray:
        return np.real(self.M)


@dataclass
class SymbolTable:
    """Symbol matrices at every grid frequency, shape ``grid.shape + (d, d)``."""

    grid: GridSpec
    M: np.ndarray
    structure: str
    provenance: str
    error: float = 0.0

    @property
    def is_real(self) -> bool:
        return self.structure == "real-symmetric"

    def to_csv(self, path: str) -> str:
        """Frequency components, then row-major real parts, then imaginary parts."""
        d = self.grid.d
        xi = self.grid.frequencies().reshape(-1, d)
        M = np.asarray(self.M, dtype=complex).reshape(-1, d * d)
        names = "xyz"[:d]
        head = [f"xi_{n}" for n in names]
        head += [f"re_{i}{j}" for i in range(d) for j in range(d)]
        head += [f"im_{i}{j}" for i in range(d) for j in range(d)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(head)
            for x, m in zip(xi, M):
                w.writerow([repr(float(v)) for v in x] + [repr(float(v)) for v in m.real]
                           + [repr(float(v)) for v in m.imag])
        return path


@dataclass
class LameConstants:
    d: int
    s: float
    l1: float
    l2: float
    error: float = 0.0

    def __post_init__(self):
        if not (self.l1 > 0.0 and self.l2 > 0.0):
            raise NumericalError("Lamé constants must be positive", {"l1": self.l1, "l2": self.l2})


@dataclass
class MultiplierReport:
    symbol_id: str
    lam: float
    octaves: list
    suprema: dict
    verdict: bool
    metadata: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Quadrature core
# ---------------------------------------------------------------------------

def _component_batch_2d(comp, xi: np.ndarray, n: int, real_only: bool) -> np.ndarray:
    """Symbol of one component at frequencies ``xi`` (m, 2) with order ``n``."""
    m = xi.shape[0]
    arcs = caps_to_arcs(comp.caps)
    phi_xi = np.arctan2(xi[:, 1], xi[:, 0])
    breaks = np.stack([phi_xi + 0.5 * np.pi, phi_xi - 0.5 * np.pi], axis=1)
    dtype = float if real_only else complex
    out = np.zeros((m, 2, 2), dtype=dtype)
    per_row = 3 * len(arcs) * n
    chunk = max(1, 2_000_000 // max(per_row, 1))
    for start in range(0, m, chunk):
        sl = slice(start, start + chunk)
        ang, w = circle_rule(arcs, n, breaks[sl])
        th = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        a = TWO_PI * np.einsum("mkd,md->mk", th, xi[sl])
        R = comp.radial.symbol(a)
        if real_only:
            R = R.real
        f = w * comp.angular(th) * R
        out[sl] = np.einsum("mk,mki,mkj->mij", f, th, th)
    return out


def _component_single_3d(comp, xi: np.ndarray, n: int, real_only: bool) -> np.ndarray:
    norm = np.linalg.norm(xi)
    dtype = float if real_only else complex
    if norm == 0.0:
        return np.zeros((3, 3), dtype=dtype)
    th, w = sphere_rule(comp.caps, xi / norm, n, n_phi=32)
    if th.size == 0:
        return np.zeros((3, 3), dtype=dtype)
    R = comp.radial.symbol(TWO_PI * (th @ xi))
    if real_only:
        R = R.real
    f = w * comp.angular(th) * R
    return np.einsum("k,ki,kj->ij", f, th, th)


def _kernel_batch(k: KernelSpec, xi: np.ndarray, n: int, real_only: bool) -> np.ndarray:
    dtype = float if real_only else complex
    out = np.zeros((xi.shape[0], k.d, k.d), dtype=dtype)
    for comp in k.components:
        ro = real_only or comp.is_even
        if k.d == 2:
            part = _component_batch_2d(comp, xi, n, ro)
        else:
            part = np.stack([_component_single_3d(comp, x, n, ro) for x in xi]) if len(xi) else out
        out = out + part
    return out


def _symbol_adaptive(k: KernelSpec, xi: np.ndarray, tol: float, n0: int, n_max: int,
                     real_only: bool) -> tuple[np.ndarray, np.ndarray, int]:
    """Order-doubling driver; returns (M, error estimates, final order)."""
    xi = np.asarray(xi, dtype=float).reshape(-1, k.d)
    prev = _kernel_batch(k, xi, n0, real_only)
    result = prev.copy()
    errors = np.full(xi.shape[0], np.inf)
    active = np.arange(xi.shape[0])
    n = n0
    trace = []
    while active.size:
        n *= 2
        if n > n_max:
            raise NumericalError("symbol quadrature did not converge",
                                 {"trace": trace, "worst_xi": xi[active[np.argmax(errors[active])]].tolist()})
        new = _kernel_batch(k, xi[active], n, real_only)
        diff = np.linalg.norm((new - prev[active]).reshape(len(active), -1), axis=1)
        scale = np.linalg.norm(new.reshape(len(active), -1), axis=1)
        err = np.where(scale > 0.0, diff / np.where(scale > 0.0, scale, 1.0), diff)
        errors[active] = err
        result[active] = new
        prev[active] = new
        trace.append((n, float(err.max(initial=0.0))))
        active = active[err > tol]
    return result, errors, n


def _radial_profile(k: KernelSpec, radii: np.ndarray, tol: float, n0: int, n_max: int):
    """Longitudinal and transverse eigenvalues at ``|xi| = radii`` for a radial kernel."""
    xi = np.zeros((radii.size, k.d))
    xi[:, 0] = radii
    M, err, n = _symbol_adaptive(k, xi, tol, n0, n_max, real_only=k.is_even)
    return np.real(M[:, 0, 0]), np.real(M[:, 1, 1]), err, n


def _assemble_radial(xi: np.ndarray, lon: np.ndarray, tra: np.ndarray) -> np.ndarray:
    d = xi.shape[-1]
    norm = np.linalg.norm(xi, axis=-1)
    safe = np.where(norm > 0.0, norm, 1.0)
    unit = xi / safe[..., None]
    eye = np.eye(d)
    return tra[..., None, None] * eye + (lon - tra)[..., None, None] * unit[..., :, None] * unit[..., None, :]


def _ensure_admissible(k: KernelSpec, chi: Compensator | None) -> None:
    if chi is not None and chi.mode != k.compensator.mode:
        raise ConfigError("compensator does not match the kernel exponent")
    if k.s == 0.5 and not k.is_even:
        rep = _cancellation_cached(k)
        if not rep.passed:
            raise UsageError("kernel fails the cancellation condition required at s = 1/2",
                             )


_CANCEL_CACHE: dict = {}


def _cancellation_cached(k: KernelSpec):
    key = id(k)
    if key not in _CANCEL_CACHE:
        _CANCEL_CACHE[key] = (k, check_cancellation(k, [0.3, 0.7, 1.0]))
    return _CANCEL_CACHE[key][1]


def kernel_symbol(k: KernelSpec, xi, tol: float = 1e-10, n0: int = 16, n_max: int = 4096,
                  real_only: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Symbol matrices at an array of frequencies ``(..., d)``; returns ``(M, error)``."""
    xi = np.asarray(xi, dtype=float)
    shape = xi.shape[:-1]
    flat = xi.reshape(-1, k.d)
    if k.is_radial:
        norms = np.linalg.norm(flat, axis=1)
        uniq, inv = np.unique(norms, return_inverse=True)
        lon, tra, err, _ = _radial_profile(k, uniq, tol, n0, n_max)
        M = _assemble_radial(flat, lon[inv], tra[inv])
        err = err[inv]
    else:
        M, err, _ = _symbol_adaptive(k, flat, tol, n0, n_max, real_only or k.is_even)
    if real_only:
        M = np.real(M)
    return M.reshape(shape + (k.d, k.d)), err.reshape(shape)


def symbol_quadrature(k: KernelSpec, chi: Compensator | None, xi, tol: float = 1e-10) -> MatrixSymbol:
    """Quadrature value of ``M(xi)`` at a single frequency."""
    _ensure_admissible(k, chi)
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (k.d,):
        raise UsageError(f"frequency must have {k.d} components")
    M, err = kernel_symbol(k, xi[None, :], tol)
    M = M[0]
    structure = "real-symmetric" if k.is_even else "complex-symmetric"
    if k.is_even:
        M = M.real.astype(complex)
    return MatrixSymbol(xi, M, structure, "quadrature", error=float(err[0]))


def even_part_symbol(k: KernelSpec, xi, tol: float = 1e-10) -> MatrixSymbol:
    """Symbol of the even part of ``rho``; equals the real part of the full symbol."""
    _ensure_admissible(k, None)
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    M, err = kernel_symbol(k, np.atleast_2d(xi), tol, real_only=True)
    M = 0.5 * (M + np.swapaxes(M, -1, -2))
    if single:
        return MatrixSymbol(xi, M[0], "real-symmetric", "quadrature", error=float(err[0]))
    return MatrixSymbol(xi, M, "real-symmetric", "quadrature", error=float(np.max(err)))


def _nyquist_aliases(grid: GridSpec, idx: np.ndarray):
    """Every sign choice of the Nyquist components of the frequencies ``idx``.

    Returns the alias frequencies and, for each, the position in ``idx`` it
    belongs to.
    """
    k = grid.wavenumbers().reshape(-1, grid.d)[idx]
    pts, owner = [], []
    for signs in product((1, -1), repeat=grid.d):
        flip = np.where(k == -grid.N // 2, np.array(signs) * k, k)
        pts.append(flip)
        owner.append(np.arange(idx.size))
    pts = np.concatenate(pts)
    owner = np.concatenate(owner)
    uniq, inv = np.unique(np.column_stack([owner, pts]), axis=0, return_inverse=True)
    return uniq[:, 1:] / grid.L, uniq[:, 0], inv


def symbol_table(k: KernelSpec, grid: GridSpec, tol: float = 1e-10) -> SymbolTable:
    """Symbol at every grid frequency, using conjugate symmetry ``M(-xi) = conj M(xi)``.

    A Nyquist index stands for both signs of its Nyquist components; the
    table holds the average over those aliases, which keeps the table
    conjugate-symmetric on the grid so that real fields map to real fields.
    """
    _ensure_admissible(k, None)
    if grid.d != k.d:
        raise UsageError("grid and kernel dimensions differ")
    xi = grid.frequencies().reshape(-1, grid.d)
    n = xi.shape[0]
    nyq = np.any(grid.wavenumbers().reshape(-1, grid.d) == -grid.N // 2, axis=1)
    neg = grid.negated_index()
    own = np.arange(n)
    keep = (own <= neg) & ~nyq
    Mk, errk = kernel_symbol(k, xi[keep], tol)
    M = np.zeros((n, k.d, k.d), dtype=complex)
    err = np.zeros(n)
    M[keep] = Mk
    err[keep] = errk
    M[neg[keep]] = np.conj(Mk)
    err[neg[keep]] = errk

    idx = np.flatnonzero(nyq)
    pts, owner, _ = _nyquist_aliases(grid, idx)
    Ma, erra = kernel_symbol(k, pts, tol)
    counts = np.bincount(owner, minlength=idx.size)
    acc = np.zeros((idx.size, k.d, k.d), dtype=complex)
    np.add.at(acc, owner, Ma)
    M[idx] = acc / counts[:, None, None]
    err[idx] = np.maximum.reduceat(erra[np.argsort(owner, kind="stable")], np.r_[0, np.cumsum(counts)[:-1]])

    if k.is_even:
        M = np.real(M)
        structure = "real-symmetric"
    else:
        structure = "complex-symmetric"
    return SymbolTable(grid, M.reshape(grid.shape + (k.d, k.d)), structure, "quadrature", float(np.max(err)))


# ---------------------------------------------------------------------------
# Fractional Lamé symbol
# ---------------------------------------------------------------------------

def sphere_moment(exponents, d: int) -> float:
    """``int_{S^{d-1}} prod |theta_i|^{a_i} dsigma`` in closed form."""
    a = list(exponents) + [0.0] * (d - len(exponents))
    num = 2.0 * math.prod(math.gamma((ai + 1.0) / 2.0) for ai in a)
    return num / math.gamma(sum((ai + 1.0) / 2.0 for ai in a))


def fractional_radial_constant(s: float) -> float:
    """``int_0^inf (1 - cos h) h^(-1-2s) dh``."""
    return math.pi / (2.0 * math.gamma(1.0 + 2.0 * s) * math.sin(math.pi * s))


def lame_constants_closed_form(d: int, s: float) -> LameConstants:
    """Reference values from sphere moments (independent of the quadrature path)."""
    c = fractional_radial_constant(s)
    l1 = c * sphere_moment([2.0 * s, 2.0], d)
    total = c * sphere_moment([2.0 + 2.0 * s], d)
    return LameConstants(d, s, l1, total - l1)


def compute_lame_constants(d: int, s: float, tol: float = 1e-12) -> LameConstants:
    """``l1 = M_22(e1)/(2 pi)^{2s}`` and ``l2 = (M_11(e1) - M_22(e1))/(2 pi)^{2s}``."""
    if d not in (2, 3):
        raise ConfigError("dimension must be 2 or 3")
    if not 0.0 < s < 1.0:
        raise ConfigError("s must lie in (0, 1)")
    k = SingularKernel.fractional(d, s)
    e1 = np.zeros(d)
    e1[0] = 1.0
    sym = symbol_quadrature(k, k.compensator, e1, tol)
    scale = TWO_PI ** (2.0 * s)
    M = sym.M.real
    l1 = M[1, 1] / scale
    l2 = (M[0, 0] - M[1, 1]) / scale
    if not (l1 > 0.0 and l2 > 0.0):
        raise NumericalError("nonpositive Lamé constant", {"l1": l1, "l2": l2})
    return LameConstants(d, s, float(l1), float(l2), sym.error)


def analytic_fraclame_symbol(c: LameConstants, xi) -> MatrixSymbol:
    """``(2 pi |xi|)^{2s} (l1 I + l2 xi xi^T / |xi|^2)`` (vectorized over leading axes)."""
    xi = np.asarray(xi, dtype=float)
    norm = np.linalg.norm(xi, axis=-1)
    scale = (TWO_PI * norm) ** (2.0 * c.s)
    lon = scale * (c.l1 + c.l2)
    tra = scale * c.l1
    M = _assemble_radial(xi, lon, tra)
    return MatrixSymbol(xi, M, "real-symmetric", "analytic")


def analytic_table(c: LameConstants, grid: GridSpec) -> SymbolTable:
    """Closed-form table; Nyquist indices are averaged over their aliases."""
    d = grid.d
    M = analytic_fraclame_symbol(c, grid.frequencies().reshape(-1, d)).M
    idx = np.flatnonzero(np.any(grid.wavenumbers().reshape(-1, d) == -grid.N // 2, axis=1))
    pts, owner, _ = _nyquist_aliases(grid, idx)
    acc = np.zeros((idx.size, d, d))
    np.add.at(acc, owner, analytic_fraclame_symbol(c, pts).M)
    M[idx] = acc / np.bincount(owner, minlength=idx.size)[:, None, None]
    return SymbolTable(grid, M.reshape(grid.shape + (d, d)), "real-symmetric", "analytic")


# ---------------------------------------------------------------------------
# Coercivity and upper bounds
# ---------------------------------------------------------------------------

@dataclass
class PsiMinResult:
    value: float
    eta: np.ndarray
    v: np.ndarray
    grid_value: float


def _unit_from_angles(d: int, angles) -> np.ndarray:
    if d == 2:
        return np.array([math.cos(angles[0]), math.sin(angles[0])])
    th, ph = angles
    return np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])


def psi_min(c: ConeSpec, s: float, tol: float = 1e-12) -> PsiMinResult:
    """Minimum over unit ``eta, v`` of ``v^T M_cone(eta / 2 pi) v``.

    ``M_cone`` is the (real) symbol of ``1_cone(y) |y|^(-d-2s)``; the
    minimization over ``v`` is an exact eigenvalue problem, the one over
    ``eta`` a coarse grid followed by local refinement.
    """
    d = c.d
    k = SingularKernel(d, s, c)
    scale = TWO_PI ** (-2.0 * s)

    def fun(angles):
        eta = _unit_from_angles(d, np.atleast_1d(angles))
        M, _ = kernel_symbol(k, eta[None, :], tol, real_only=True)
        return float(np.linalg.eigvalsh(M[0])[0]) * scale

    if d == 2:
        grid = (np.arange(64) + 0.5) * (np.pi / 64)
        etas = np.stack([np.cos(grid), np.sin(grid)], axis=1)
        M, _ = kernel_symbol(k, etas, tol, real_only=True)
        vals = np.linalg.eigvalsh(M)[:, 0] * scale
        j = int(np.argmin(vals))
        step = np.pi / 64
        res = optimize.minimize_scalar(fun, bounds=(grid[j] - step, grid[j] + step), method="bounded",
                                       options={"xatol": 1e-12})
        best_angles = np.array([res.x])
        best = min(float(res.fun), float(vals[j]))
        if vals[j] < res.fun:
            best_angles = np.array([grid[j]])
        coarse = float(vals.min())
    else:
        ths = (np.arange(32) + 0.5) * (0.5 * np.pi / 32)
        phs = np.arange(64) * (2.0 * np.pi / 64)
        pts = np.array([[th, ph] for th in ths for ph in phs])
        etas = np.stack([_unit_from_angles(3, p) for p in pts])
        M, _ = kernel_symbol(k, etas, tol, real_only=True)
        vals = np.linalg.eigvalsh(M)[:, 0] * scale
        j = int(np.argmin(vals))
        res = optimize.minimize(fun, pts[j], method="Nelder-Mead",
                                options={"xatol": 1e-9, "fatol": 1e-14 * abs(vals[j]), "maxiter": 400})
        best_angles = res.x if res.fun <= vals[j] else pts[j]
        best = min(float(res.fun), float(vals[j]))
        coarse = float(vals.min())
    eta = _unit_from_angles(d, best_angles)
    M, _ = kernel_symbol(k, eta[None, :], tol, real_only=True)
    w, V = np.linalg.eigh(M[0])
    if not best > 0.0:
        raise NumericalError("coercivity constant is not positive", {"value": best})
    return PsiMinResult(best, eta, V[:, 0], coarse)


@dataclass
class UpperBoundReport:
    ratios: dict
    octave_sup: dict
    sup: float
    passed: bool


def symbol_upper_bound_check(kernel, xi_samples=None, t_samples=(0.0, 0.5, 1.0),
                             tol: float = 1e-8) -> UpperBoundReport:
    """Frobenius ratio ``|M_t(xi)| / (2 pi |xi|)^{2s}`` over dyadic frequencies.

    ``kernel`` is the singular base kernel (or a homotopy kernel, whose base
    is used).  Passes when every ratio is finite and the suprema of the top
    two dyadic octaves differ by less than a factor 2.
    """
    base = kernel.base if isinstance(kernel, HomotopyKernel) else kernel
    if not isinstance(base, SingularKernel):
        raise UsageError("upper bound check needs a singular kernel")
    d, s = base.d, base.s
    if xi_samples is None:
        if d == 2:
            dirs = np.array([[math.cos(a), math.sin(a)] for a in (0.3, 1.1, 2.2, 2.9)])
        else:
            dirs = np.array([[0.48, 0.6, 0.64], [0.0, 0.6, -0.8], [-0.36, 0.48, 0.8], [1.0, 0.0, 0.0]])
        xi_samples = np.concatenate([(2.0**j) * dirs for j in range(-4, 7)])
    xi = np.asarray(xi_samples, dtype=float)
    norms = np.linalg.norm(xi, axis=1)
    if np.any(norms == 0.0):
        raise UsageError("frequency samples must exclude the origin")
    octave = np.floor(np.log2(norms) + 1e-12).astype(int)
    ratios, octave_sup = {}, {}
    for t in t_samples:
        kt = HomotopyKernel(base, float(t))
        M, _ = kernel_symbol(kt, xi, tol)
        r = np.linalg.norm(M.reshape(len(xi), -1), axis=1) / (TWO_PI * norms) ** (2.0 * s)
        ratios[float(t)] = r
        for j in np.unique(octave):
            key = int(j)
            octave_sup[key] = max(octave_sup.get(key, 0.0), float(r[octave == j].max()))
    top = sorted(octave_sup)
    sup = max(octave_sup.values())
    finite = bool(np.isfinite(sup))
    stable = True
    if len(top) >= 2:
        a, b = octave_sup[top[-2]], octave_sup[top[-1]]
        stable = b <= 2.0 * a and a <= 2.0 * b
    return UpperBoundReport(ratios, octave_sup, sup, finite and stable)


# ---------------------------------------------------------------------------
# Radial integrable kernels
# ---------------------------------------------------------------------------

def radial_symbol_eigenvalues(k: KernelSpec, xi, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """``(l_1(xi), l_2(xi))``: symbol eigenvalues along and across ``xi`` for a radial kernel."""
    if not k.is_radial:
        raise UsageError("kernel is not radial")
    xi = np.asarray(xi, dtype=float)
    norms = np.atleast_1d(np.linalg.norm(xi, axis=-1)).ravel()
    uniq, inv = np.unique(norms, return_inverse=True)
    lon, tra, _, _ = _radial_profile(k, uniq, tol, 16, 4096)
    shape = xi.shape[:-1]
    return lon[inv].reshape(shape), tra[inv].reshape(shape)


def rotation_to_e1(xi: np.ndarray) -> np.ndarray:
    """Orthogonal ``Q`` with ``Q xi = |xi| e1`` (Householder reflection)."""
    xi = np.asarray(xi, dtype=float)
    d = xi.size
    n = np.linalg.norm(xi)
    e1 = np.zeros(d)
    e1[0] = 1.0
    if n == 0.0:
        return np.eye(d)
    u = xi / n - e1
    nu = np.linalg.norm(u)
    if nu < 1e-14:
        return np.eye(d)
    u /= nu
    return np.eye(d) - 2.0 * np.outer(u, u)


def resolvent_symbol(tbl: SymbolTable, lam: float, exclude_zero: bool = False) -> np.ndarray:
    """Per-mode ``(M(xi) + lam I)^{-1}``.

    At ``lam = 0`` the zero mode is singular; it is set to zero when
    ``exclude_zero`` is true, otherwise a :class:`SolverError` is raised.
    """
    if lam < 0.0:
        raise UsageError("lambda must be nonnegative")
    d = tbl.grid.d
    A = np.asarray(tbl.M).reshape(-1, d, d) + lam * np.eye(d)
    xi = tbl.grid.frequencies().reshape(-1, d)
    zero = np.all(xi == 0.0, axis=1)
    if lam == 0.0:
        if not exclude_zero:
            raise SolverError("zero mode is singular at lambda = 0", {"xi": [0.0] * d})
        A[zero] = np.eye(d)
    cond = np.linalg.cond(A)
    bad = ~np.isfinite(cond) | (cond > 1e12)
    if np.any(bad):
        i = int(np.argmax(np.where(np.isfinite(cond), cond, np.inf)))
        raise SolverError("ill-conditioned mode", {"xi": xi[i].tolist(), "cond": float(cond[i])})
    inv = np.linalg.inv(A)
    if lam == 0.0:
        inv[zero] = 0.0
    return inv.reshape(tbl.grid.shape + (d, d))


# ---------------------------------------------------------------------------
# Multipliers
# ---------------------------------------------------------------------------

def multiplier_m1_m2(c: LameConstants, lam: float, xi) -> tuple[np.ndarray, np.ndarray]:
    """``m1 = (1 + 4pi^2|xi|^2)^s / (l1 (4pi^2|xi|^2)^s + lam)`` and
    ``m2 = l2 (4pi^2|xi|^2)^s / ((l1 + l2)(4pi^2|xi|^2)^s + lam)``."""
    if not lam > 0.0:
        raise UsageError("lambda must be positive")
    xi = np.asarray(xi, dtype=float)
    q = (TWO_PI * np.linalg.norm(xi, axis=-1)) ** 2
    qs = q**c.s
    m1 = (1.0 + q) ** c.s / (c.l1 * qs + lam)
    m2 = c.l2 * qs / ((c.l1 + c.l2) * qs + lam)
    return m1, m2


def dyadic_samples(d: int, octaves, per_octave: int = 4, n_dir: int = 12) -> tuple[np.ndarray, np.ndarray]:
    """Frequencies on dyadic shells in generic directions (no zero components)."""
    radii_unit = 2.0 ** (np.arange(per_octave) / per_octave)
    if d == 2:
        ang = (np.arange(n_dir) + 0.37) * (2.0 * np.pi / n_dir)
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    else:
        pts = []
        golden = math.pi * (3.0 - math.sqrt(5.0))
        for i in range(n_dir):
            z = 1.0 - 2.0 * (i + 0.5) / n_dir
            r = math.sqrt(1.0 - z * z)
            pts.append([r * math.cos(golden * i + 0.3), r * math.sin(golden * i + 0.3), z])
        dirs = np.array(pts)
    xi, octs = [], []
    for j in octaves:
        for r in radii_unit:
            xi.append((2.0**j) * r * dirs)
            octs.append(np.full(len(dirs), j))
    return np.concatenate(xi), np.concatenate(octs)


def _mixed_difference(func, xi: np.ndarray, gamma, step: float) -> np.ndarray:
    """Central difference for ``prod_j d/dxi_j^{gamma_j}`` with relative steps."""
    idx = [j for j, g in enumerate(gamma) if g]
    h = step * np.abs(xi)
    total = np.zeros(xi.shape[0])
    for signs in product((1.0, -1.0), repeat=len(idx)):
        pt = xi.copy()
        for j, sg in zip(idx, signs):
            pt[:, j] += sg * h[:, j]
        total += np.prod(signs) * func(pt)
    denom = np.prod([2.0 * h[:, j] for j in idx], axis=0) if idx else 1.0
    return total / denom


def marcinkiewicz_check(symbol_id, c: LameConstants | None, lam: float, octaves=range(-4, 11),
                        d: int | None = None, step: float = 1e-3) -> MultiplierReport:
    """Weighted suprema ``sup |d_gamma m(xi)| prod |xi_j|^{gamma_j}`` per dyadic octave.

    ``symbol_id`` is ``"m1"``, ``"m2"`` or a callable ``m(xi)``.  Passes when all
    suprema are finite and the top octave's supremum is at most twice the one
    below it, for every ``gamma`` in ``{0, 1}^d``.
    """
    if callable(symbol_id):
        func = symbol_id
        name = getattr(symbol_id, "__name__", "custom")
        if d is None:
            raise UsageError("dimension required for a custom symbol")
    else:
        if symbol_id not in ("m1", "m2"):
            raise UsageError("symbol must be 'm1' or 'm2'")
        if c is None:
            raise UsageError("Lamé constants required")
        d = c.d if d is None else d
        which = 0 if symbol_id == "m1" else 1
        func = lambda x: multiplier_m1_m2(c, lam, x)[which]  # noqa: E731
        name = symbol_id
    octaves = list(octaves)
    xi, octs = dyadic_samples(d, octaves)
    sups = {}
    verdict = True
    m0 = np.abs(func(xi))
    floor = 1e-9 * float(m0.max())
    for gamma in product((0, 1), repeat=d):
        weight = np.prod(np.abs(xi) ** np.array(gamma), axis=1)
        d1 = np.abs(_mixed_difference(func, xi, gamma, step)) * weight
        d2 = np.abs(_mixed_difference(func, xi, gamma, step / 2.0)) * weight
        s1, s2 = float(d1.max()), float(d2.max())
        if abs(s1 - s2) > 1e-2 * max(s2, floor):
            raise NumericalError("finite-difference estimate unstable", {"gamma": gamma, "sup": (s1, s2)})
        per_oct = {int(j): float(d2[octs == j].max()) for j in octaves}
        sups[gamma] = per_oct
        top, prev = per_oct[octaves[-1]], per_oct[octaves[-2]]
        finite = all(np.isfinite(v) for v in per_oct.values())
        stable = top <= 2.0 * max(prev, floor)
        verdict = verdict and finite and stable
    meta = {}
    if c is not None:
        meta = {
            "G_a_parameter": lam / ((c.l1 + c.l2) * (4.0 * np.pi**2) ** c.s),
            "F_parameter": math.sqrt(lam / c.l1),
            "m2_limit": c.l2 / (c.l1 + c.l2),
            "m1_limit": 1.0 / c.l1,
        }
    return MultiplierReport(name, lam, octaves, sups, verdict, meta)
