"""Two independent realizations of the operator ``L`` and the elastic energy.

* Spectral: ``(L u)^(xi) = M(xi) u_hat(xi)`` with the quadrature symbol table.
* Physical space: principal-value quadrature in polar coordinates of

      -L u(x) = int (y y^T/|y|^2) (u(x+y) - u(x) - grad u(x) y chi(y)) rho(y) dy

  for smooth closed-form fields (trigonometric polynomials, periodized
  Gaussians) whose off-grid values are exact.  Even kernels use the
  symmetric second difference ``(u(x+y) + u(x-y))/2 - u(x)``; other kernels
  use the compensated first difference.  The ball ``|y| < R`` is integrated
  numerically; beyond ``R`` power-law components are summed exactly mode by
  mode with the generalized exponential integral.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError
from .field import (
    GridSpec,
    SpectralField,
    VectorField,
    forward_transform,
    ifft_nodes,
    inverse_transform,
)
from .kernel import Compensator, KernelSpec, PowerRadial
from .quadrature import (
    caps_to_arcs,
    circle_rule,
    expint_nu,
    gauss_legendre,
    sphere_rule,
)
from .symbol import SymbolTable, symbol_table

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# Operator handle
# ---------------------------------------------------------------------------

class OperatorHandle:
    """Kernel, shift ``lam`` and a per-grid cache of symbol tables."""

    def __init__(self, kernel: KernelSpec, lam: float = 0.0, symbol_tol: float = 1e-10):
        if not (np.isfinite(lam) and lam >= 0.0):
            raise UsageError("lambda must be finite and nonnegative")
        self.kernel = kernel
        self.compensator = Compensator(kernel.s)
        self.lam = float(lam)
        self.symbol_tol = symbol_tol
        self._tables: dict = {}

    def table(self, grid: GridSpec) -> SymbolTable:
        if grid.d != self.kernel.d:
            raise UsageError("grid and kernel dimensions differ")
        if grid not in self._tables:
            self._tables[grid] = symbol_table(self.kernel, grid, self.symbol_tol)
        return self._tables[grid]

    def with_lambda(self, lam: float) -> "OperatorHandle":
        other = OperatorHandle(self.kernel, lam, self.symbol_tol)
        other._tables = self._tables
        return other


def _apply_table(tbl: SymbolTable, coeffs: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...j->...i", tbl.M, coeffs)


def apply_L_spectral(op: OperatorHandle, u: VectorField) -> VectorField:
    """Inverse transform of ``M(xi_k) u_hat(xi_k)``."""
    if not isinstance(u, VectorField):
        raise UsageError("expected a VectorField")
    tbl = op.table(u.grid)
    uh = forward_transform(u)
    return inverse_transform(SpectralField(u.grid, _apply_table(tbl, uh.coefficients)))


def bilinear_energy(op: OperatorHandle, u: VectorField) -> float:
    """``<L u, u>`` computed as ``L^-d sum <M u_hat, u_hat>``."""
    if not op.kernel.is_even:
        raise UsageError("the elastic energy is defined for even kernels")
    tbl = op.table(u.grid)
    c = forward_transform(u).coefficients
    val = np.sum(np.conj(c) * _apply_table(tbl, c))
    return float(val.real / u.grid.L**u.grid.d)


# ---------------------------------------------------------------------------
# Smooth closed-form fields
# ---------------------------------------------------------------------------

def _sin_minus_x(z):
    z = np.asarray(z, dtype=float)
    out = np.sin(z) - z
    small = np.abs(z) < 0.1
    if np.any(small):
        zs = z[small]
        z2 = zs * zs
        out[small] = -zs * z2 / 6.0 * (1.0 - z2 / 20.0 * (1.0 - z2 / 42.0 * (1.0 - z2 / 72.0 * (1.0 - z2 / 110.0))))
    return out


def _mode_kernel(z, chi, symmetric: bool):
    """``cos z - 1`` (symmetric) or ``e^{iz} - 1 - i z chi`` without cancellation."""
    re = -2.0 * np.sin(0.5 * z) ** 2
    if symmetric:
        return re
    im = np.where(chi > 0.0, _sin_minus_x(z), np.sin(z))
    return re + 1j * im


class TrigField:
    """``u(x) = Re sum_k a_k exp(2 pi i k.x / L)`` with integer wave vectors ``k``."""

    def __init__(self, L: float, k, a):
        self.k = np.atleast_2d(np.asarray(k, dtype=float))
        self.a = np.atleast_2d(np.asarray(a, dtype=complex))
        if self.k.shape != self.a.shape:
            raise UsageError("wave vectors and amplitudes must have the same shape")
        self.L = float(L)
        self.d = self.k.shape[1]

    @classmethod
    def random(cls, d: int, L: float, rng, n_modes: int = 4, kmax: int = 4) -> "TrigField":
        k = rng.integers(-kmax, kmax + 1, size=(n_modes, d))
        k[np.all(k == 0, axis=1), 0] = 1
        a = rng.standard_normal((n_modes, d)) + 1j * rng.standard_normal((n_modes, d))
        return cls(L, k, a)

    def modes(self):
        return self.k, self.a

    def _coeffs(self, x):
        phase = TWO_PI / self.L * (self.k @ np.asarray(x, dtype=float))
        return self.a * np.exp(1j * phase)[:, None]

    def values(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        phase = TWO_PI / self.L * np.tensordot(pts, self.k, axes=(-1, 1))
        return np.real(np.exp(1j * phase) @ self.a)

    def gradient(self, x) -> np.ndarray:
        """``G[i, j] = d u_i / d x_j``."""
        c = self._coeffs(x)
        return np.real(np.einsum("mi,mj->ij", 1j * c, TWO_PI / self.L * self.k))

    def hessian(self, x) -> np.ndarray:
        c = self._coeffs(x)
        kk = (TWO_PI / self.L) ** 2 * np.einsum("mj,ml->mjl", self.k, self.k)
        return -np.real(np.einsum("mi,mjl->ijl", c, kk))

    def difference(self, x, t, theta, chi, symmetric: bool) -> np.ndarray:
        """Second or compensated first difference at ``x + t theta``; shape ``(A, T, d)``."""
        c = self._coeffs(x)
        q = TWO_PI / self.L * (np.asarray(theta) @ self.k.T)
        z = q[:, None, :] * np.asarray(t)[None, :, None]
        K = _mode_kernel(z, np.asarray(chi)[None, :, None], symmetric)
        if symmetric:
            return K @ np.real(c)
        return np.real(K @ c)

    def grid_values(self, grid: GridSpec) -> VectorField:
        return VectorField(grid, self.values(grid.nodes()))


class PeriodizedGaussian:
    """``u(x) = amp * sum_n exp(-|x - c + n L|^2 / (2 sigma^2))`` on the torus of side ``L``."""

    def __init__(self, L: float, center, sigma: float, amplitude):
        self.L = float(L)
        self.c = np.asarray(center, dtype=float)
        self.d = self.c.size
        self.sigma = float(sigma)
        self.amp = np.asarray(amplitude, dtype=float)
        if self.sigma > 0.1 * self.L:
            raise UsageError("Gaussian too wide for a single ring of periodic images")
        shifts = np.array(np.meshgrid(*([[-1, 0, 1]] * self.d), indexing="ij")).reshape(self.d, -1).T
        self._shifts = shifts * self.L

    def _images(self, x):
        z = np.mod(np.asarray(x, dtype=float) - self.c + 0.5 * self.L, self.L) - 0.5 * self.L
        return z + self._shifts

    def values(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        z = np.mod(pts - self.c + 0.5 * self.L, self.L) - 0.5 * self.L
        total = np.zeros(pts.shape[:-1])
        for sh in self._shifts:
            total += np.exp(-np.sum((z + sh) ** 2, axis=-1) / (2.0 * self.sigma**2))
        return total[..., None] * self.amp

    def gradient(self, x) -> np.ndarray:
        z = self._images(x)
        g = np.exp(-np.sum(z**2, axis=1) / (2.0 * self.sigma**2))
        grad = -(g[:, None] * z).sum(axis=0) / self.sigma**2
        return np.outer(self.amp, grad)

    def hessian(self, x) -> np.ndarray:
        z = self._images(x)
        g = np.exp(-np.sum(z**2, axis=1) / (2.0 * self.sigma**2))
        s2 = self.sigma**2
        H = np.einsum("n,nj,nl->jl", g, z, z) / s2**2 - g.sum() * np.eye(self.d) / s2
        return self.amp[:, None, None] * H[None]

    def difference(self, x, t, theta, chi, symmetric: bool) -> np.ndarray:
        t = np.asarray(t, dtype=float)[None, :]
        chi = np.asarray(chi, dtype=float)[None, :]
        s2 = self.sigma**2
        tau = t * t / (2.0 * s2)
        total = np.zeros((theta.shape[0], t.shape[1]))
        for z in self._images(x):
            Z = float(z @ z) / (2.0 * s2)
            if Z > 700.0:
                continue
            b = (np.asarray(theta) @ z)[:, None] * t / s2
            G = math.exp(-Z)
            if symmetric:
                ab = np.abs(b)
                stable = G * (np.expm1(-tau) * np.cosh(np.minimum(ab, 1.0)) + 2.0 * np.sinh(0.5 * np.minimum(ab, 1.0)) ** 2)
                big = 0.5 * np.exp(-tau) * (np.exp(-Z + ab) + np.exp(-Z - ab)) - G
                total += np.where(ab < 1.0, stable, big)
            else:
                w = -tau - b
                small = np.abs(w) < 0.1
                w_s = np.where(small, w, 0.0)
                w2 = w_s * w_s
                series = w2 * (0.5 + w_s / 6.0 * (1.0 + w_s / 4.0 * (1.0 + w_s / 5.0 * (1.0 + w_s / 6.0 * (1.0 + w_s / 7.0)))))
                # G * (e^w - 1 - w) then add back G * (w + chi * b)
                direct = np.exp(np.minimum(-Z + w, 700.0)) - G * (1.0 + w)
                em1mw = np.where(small, G * series, direct)
                total += em1mw + G * (w + chi * b)
        return total[..., None] * self.amp

    def fourier_coefficients(self, k) -> np.ndarray:
        """Continuum transform ``int u exp(-2 pi i xi.x) dx`` over one period at ``xi = k / L``."""
        xi = np.asarray(k, dtype=float) / self.L
        env = (2.0 * np.pi * self.sigma**2) ** (self.d / 2.0) * np.exp(-2.0 * np.pi**2 * self.sigma**2 * np.sum(xi**2, axis=-1))
        return (env * np.exp(-2j * np.pi * (xi @ self.c)))[..., None] * self.amp

    def to_trig(self, cutoff: float = 1e-17) -> TrigField:
        """Half-space Fourier modes down to relative size ``cutoff``."""
        kmax = int(math.ceil(math.sqrt(-math.log(cutoff) / (2.0 * np.pi**2)) * self.L / self.sigma))
        rng = np.arange(-kmax, kmax + 1)
        K = np.array(np.meshgrid(*([rng] * self.d), indexing="ij")).reshape(self.d, -1).T
        keep = np.exp(-2.0 * np.pi**2 * self.sigma**2 * np.sum((K / self.L) ** 2, axis=1)) >= cutoff
        first = np.array([next((v for v in row if v != 0), 0) for row in K])
        keep &= first >= 0
        K = K[keep]
        coef = self.fourier_coefficients(K) / self.L**self.d
        zero = np.all(K == 0, axis=1)
        coef[~zero] *= 2.0
        return TrigField(self.L, K, coef)

    def modes(self):
        t = self.to_trig()
        return t.k, t.a

    def grid_values(self, grid: GridSpec) -> VectorField:
        return VectorField(grid, self.values(grid.nodes()))


# ---------------------------------------------------------------------------
# Physical-space quadrature
# ---------------------------------------------------------------------------

GEOMETRIC_LEVELS = 40


@dataclass
class PolarRule:
    """Fixed polar rule for one kernel component on ``[t_lo, t_hi]``."""

    theta: np.ndarray
    w_theta: np.ndarray
    t: np.ndarray
    w_t: np.ndarray
    chi: np.ndarray
    t_min: float
    symmetric: bool


@dataclass
class QuadratureResult:
    value: np.ndarray
    error: float
    tail_bound: float = 0.0
    levels: tuple = ()
    meta: dict = field(default_factory=dict)


def _angular_rule(d: int, caps, n: int):
    """Directions and weights: trapezoid on full circles/rings, Gauss on arcs."""
    if d == 2:
        if caps is None:
            phi = np.arange(n) * (TWO_PI / n)
            w = np.full(n, TWO_PI / n)
        else:
            arcs = caps_to_arcs(caps)
            u, wu = gauss_legendre(max(8, n // 2))
            phi = np.concatenate([a + (b - a) * u for a, b in arcs])
            w = np.concatenate([(b - a) * wu for a, b in arcs])
        return np.stack([np.cos(phi), np.sin(phi)], axis=1), w
    th, w = sphere_rule(caps, np.array([0.0, 0.0, 1.0]), max(8, n // 4), n_phi=max(8, n // 2))
    return th, w


def _radial_edges(lo: float, hi: float, L: float, level: int, singular: bool):
    width = L / (32.0 * 2**level)
    if singular and lo == 0.0:
        t0 = min(hi, L / 16.0)
        geo = t0 * 2.0 ** -np.arange(GEOMETRIC_LEVELS, -1, -1, dtype=float)
        n_uni = int(math.ceil((hi - t0) / width))
        uni = np.linspace(t0, hi, n_uni + 1) if n_uni > 0 else np.zeros(0)
        return geo, uni
    n_uni = max(1, int(math.ceil((hi - lo) / width)))
    return np.zeros(0), np.linspace(lo, hi, n_uni + 1)


def _component_rule(comp, d: int, symmetric: bool, chi_mode: str, lo: float, hi: float,
                    L: float, level: int) -> PolarRule:
    theta, w_theta = _angular_rule(d, comp.caps, 64 * 2**level)
    singular = isinstance(comp.radial, PowerRadial)
    geo, uni = _radial_edges(lo, hi, L, level, singular)
    ts, ws = [], []
    if geo.size:
        u, w = gauss_legendre(6 + 2 * level)
        left, length = geo[:-1, None], np.diff(geo)[:, None]
        ts.append((left + length * u).ravel())
        ws.append((length * w).ravel())
    if uni.size > 1:
        u, w = gauss_legendre(12 + 4 * level)
        left, length = uni[:-1, None], np.diff(uni)[:, None]
        ts.append((left + length * u).ravel())
        ws.append((length * w).ravel())
    t = np.concatenate(ts)
    w_t = np.concatenate(ws) * comp.radial.density(t, d) * t ** (d - 1)
    if chi_mode == "full":
        chi = np.ones_like(t)
    elif chi_mode == "ball":
        chi = (t < 1.0).astype(float)
    else:
        chi = np.zeros_like(t)
    t_min = float(geo[0]) if geo.size else 0.0
    return PolarRule(theta, w_theta * comp.angular(theta), t, w_t, chi, t_min, symmetric)


def _tail_profile(s: float, chi_mode: str, q: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """``int_lo^hi (e^{iqt} - 1 - i q t chi(t)) t^(-1-2s) dt`` with ``hi`` possibly infinite."""
    nu = 1.0 + 2.0 * s

    def osc(r):
        return r ** (1.0 - nu) * expint_nu(nu, -1j * q * r)

    val = osc(lo)
    const = lo ** (-2.0 * s) / (2.0 * s)
    if math.isfinite(hi):
        val = val - osc(hi)
        const -= hi ** (-2.0 * s) / (2.0 * s)
    val = val - const
    if chi_mode == "full":
        lin = (lo ** (1.0 - 2.0 * s) - (hi ** (1.0 - 2.0 * s) if math.isfinite(hi) else 0.0)) / (2.0 * s - 1.0)
        val = val - 1j * q * lin
    elif chi_mode == "ball" and lo < 1.0:
        lin = math.log(min(1.0, hi) / lo)
        val = val - 1j * q * lin
    return val


def _tail_matrices(comp, d: int, s: float, chi_mode: str, k: np.ndarray, L: float, lo: float, hi: float,
                   n: int = 64) -> np.ndarray:
    """``sum_theta theta theta^T w(theta) tail(2 pi theta.k / L)`` per mode; shape ``(M, d, d)``."""
    out = np.zeros((k.shape[0], d, d), dtype=complex)
    if d == 2:
        arcs = caps_to_arcs(comp.caps)
        phi_k = np.arctan2(k[:, 1], k[:, 0])
        breaks = np.stack([phi_k + 0.5 * np.pi, phi_k - 0.5 * np.pi], axis=1)
        ang, w = circle_rule(arcs, n, breaks)
        th = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        q = TWO_PI / L * np.einsum("mad,md->ma", th, k)
        f = w * comp.angular(th) * _tail_profile(s, chi_mode, q, lo, hi)
        return np.einsum("ma,mai,maj->mij", f, th, th)
    for i, kk in enumerate(k):
        nk = np.linalg.norm(kk)
        axis = kk / nk if nk > 0 else np.array([0.0, 0.0, 1.0])
        th, w = sphere_rule(comp.caps, axis, n // 2, n_phi=32)
        q = TWO_PI / L * (th @ kk)
        f = w * comp.angular(th) * _tail_profile(s, chi_mode, q, lo, hi)
        out[i] = np.einsum("a,ai,aj->ij", f, th, th)
    return out


def _truncation(op: OperatorHandle, L: float, radius: float | None) -> float:
    return L / 4.0 if radius is None else float(radius)


def _plan(op: OperatorHandle, L: float, radius: float | None, level: int):
    """Per component: (component, rule or None, tail range or None, uncovered mass bound)."""
    k = op.kernel
    R = _truncation(op, L, radius)
    chi_mode = op.compensator.mode
    plans = []
    for comp in k.components:
        symmetric = comp.is_even
        if isinstance(comp.radial, PowerRadial):
            lo, hi = comp.radial.r_in, comp.radial.r_out
        else:
            lo, hi = 0.0, comp.radial.support
        near_hi = min(hi, R)
        rule = None
        if near_hi > lo:
            rule = _component_rule(comp, k.d, symmetric, chi_mode, lo, near_hi, L, level)
        tail = None
        bound = 0.0
        if hi > max(lo, R):
            if isinstance(comp.radial, PowerRadial):
                tail = (max(lo, R), hi)
            else:
                t, w = gauss_legendre(32)
                tt = R + (hi - R) * t
                bound = float(np.sum((hi - R) * w * comp.radial.density(tt, k.d) * tt ** (k.d - 1)))
        plans.append((comp, rule, tail, bound))
    return plans


def _near_origin(comp, rule: PolarRule, s: float, u, x, chi_mode: str) -> np.ndarray:
    """Leading-order contribution of ``[0, t_min]`` for power components."""
    if rule.t_min == 0.0:
        return np.zeros(len(x))
    H = u.hessian(x)
    second = np.einsum("ijl,aj,al->ai", H, rule.theta, rule.theta)
    val = 0.5 * second * rule.t_min ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)
    if not rule.symmetric and chi_mode == "none":
        G = u.gradient(x)
        first = rule.theta @ G.T
        val = val + first * rule.t_min ** (1.0 - 2.0 * s) / (1.0 - 2.0 * s)
    return np.einsum("a,ai,aj,aj->i", rule.w_theta, rule.theta, rule.theta, val)


def _pointwise(op: OperatorHandle, u, x, radius, level: int):
    x = np.asarray(x, dtype=float)
    d = op.kernel.d
    L = u.L
    total = np.zeros(d)
    bound = 0.0
    chi_mode = op.compensator.mode
    tails_needed = []
    for comp, rule, tail, b in _plan(op, L, radius, level):
        bound += b * 2.0 * float(np.max(np.abs(u.values(x[None]))))
        if rule is not None:
            diff = u.difference(x, rule.t, rule.theta, rule.chi, rule.symmetric)  # (A, T, d)
            radial = np.einsum("atj,t->aj", diff, rule.w_t)
            total += np.einsum("a,ai,aj,aj->i", rule.w_theta, rule.theta, rule.theta, radial)
            if isinstance(comp.radial, PowerRadial) and comp.radial.r_in == 0.0:
                total += _near_origin(comp, rule, op.kernel.s, u, x, chi_mode)
        if tail is not None:
            tails_needed.append((comp, tail))
    if tails_needed:
        k, a = u.modes()
        c = a * np.exp(1j * TWO_PI / L * (k @ x))[:, None]
        for comp, (lo, hi) in tails_needed:
            T = _tail_matrices(comp, d, op.kernel.s, chi_mode, k, L, lo, hi, n=64 * 2**level)
            total += np.real(np.einsum("mij,mj->i", T, c))
    return -total, bound


def apply_L_quadrature(op: OperatorHandle, u, x, level: int = 1, radius: float | None = None) -> QuadratureResult:
    """Principal-value quadrature of ``L u`` at the point ``x``.

    ``u`` must be a closed-form smooth field (:class:`TrigField` or
    :class:`PeriodizedGaussian`).  The value is computed at refinement
    ``level`` and ``level + 1``; the finer one is returned with the
    difference as error estimate.
    """
    if not hasattr(u, "difference"):
        raise UsageError("physical-space quadrature needs a smooth closed-form field")
    if u.d != op.kernel.d:
        raise UsageError("field and kernel dimensions differ")
    coarse, _ = _pointwise(op, u, x, radius, level)
    fine, bound = _pointwise(op, u, x, radius, level + 1)
    err = float(np.linalg.norm(fine - coarse))
    return QuadratureResult(fine, err, bound, (level, level + 1))


def quadrature_multipliers(op: OperatorHandle, k: np.ndarray, L: float, level: int = 1,
                           radius: float | None = None) -> np.ndarray:
    """Matrices ``Q(k)`` such that the polar rule maps ``Re a e^{2 pi i k.x/L}`` to ``Re Q a e^{...}``.

    Applying the rule node by node to a trigonometric field and summing
    ``Q(k) a_k`` over its modes give the same numbers; the latter evaluates
    the quadrature on a whole grid at FFT cost.
    """
    d = op.kernel.d
    k = np.atleast_2d(np.asarray(k, dtype=float))
    chi_mode = op.compensator.mode
    s = op.kernel.s
    out = np.zeros((k.shape[0], d, d), dtype=complex)
    for comp, rule, tail, _ in _plan(op, L, radius, level):
        if rule is not None:
            A = rule.theta.shape[0]
            outer = np.einsum("a,ai,aj->aij", rule.w_theta, rule.theta, rule.theta).reshape(A, d * d)
            chunk = max(1, 4_000_000 // max(A * rule.t.size, 1))
            for start in range(0, k.shape[0], chunk):
                kk = k[start:start + chunk]
                q = TWO_PI / L * (kk @ rule.theta.T)  # (M, A)
                z = q[:, :, None] * rule.t[None, None, :]
                K = _mode_kernel(z, rule.chi[None, None, :], rule.symmetric) @ rule.w_t  # (M, A)
                if isinstance(comp.radial, PowerRadial) and comp.radial.r_in == 0.0 and rule.t_min > 0.0:
                    K = K - 0.5 * q**2 * rule.t_min ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)
                    if not rule.symmetric and chi_mode == "none":
                        K = K + 1j * q * rule.t_min ** (1.0 - 2.0 * s) / (1.0 - 2.0 * s)
                out[start:start + chunk] += (K @ outer).reshape(-1, d, d)
        if tail is not None:
            out += _tail_matrices(comp, d, s, chi_mode, k, L, tail[0], tail[1], n=64 * 2**level)
    return -out


def apply_L_quadrature_grid(op: OperatorHandle, u, grid: GridSpec, level: int = 1,
                            radius: float | None = None, multipliers=None) -> VectorField:
    """Quadrature value of ``L u`` at every grid node (mode-wise evaluation of the polar rule)."""
    if not hasattr(u, "modes"):
        raise UsageError("grid quadrature needs a field with a mode expansion")
    k, a = u.modes()
    Q = quadrature_multipliers(op, k, grid.L, level, radius) if multipliers is None else multipliers
    c = np.einsum("mij,mj->mi", Q, a)
    return VectorField(grid, _synthesize(grid, k, c))


def _synthesize(grid: GridSpec, k: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Nodal values of ``Re sum c_m exp(2 pi i k_m.x / L)`` (modes folded into FFT bins)."""
    bins = np.zeros(grid.shape + (grid.d,), dtype=complex)
    idx = tuple(np.mod(np.rint(k).astype(int), grid.N).T)
    np.add.at(bins, idx, c)
    return np.real(ifft_nodes(bins)) * grid.N**grid.d
