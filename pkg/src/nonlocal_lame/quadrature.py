"""Quadrature building blocks.

Everything here is kernel-agnostic: Gauss rules with endpoint grading, exact
arc bookkeeping on the circle and on rings of the 2-sphere, the scaled radial
profiles of power-law kernels, Chebyshev-interpolated radial profiles of
integrable kernels and the generalized exponential integral used for
far-field tails.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import NumericalError

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# One-dimensional rules
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def kress_map(u: np.ndarray, q: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Sigmoidal map of [0, 1] onto itself that clusters nodes at both ends.

    Endpoint singularities of type ``x**p`` become ``u**(q*p)`` times a Jacobian
    vanishing like ``u**(q-1)``, so plain Gauss rules converge quickly.
    """
    uq = u**q
    vq = (1.0 - u) ** q
    den = uq + vq
    psi = uq / den
    dpsi = q * u ** (q - 1) * (1.0 - u) ** (q - 1) / den**2
    return psi, dpsi


def graded_rule(a, b, n: int, q: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Gauss rule on [a, b] with Kress grading; ``a``/``b`` may be arrays.

    Returns nodes and weights with a trailing axis of length ``n``.
    """
    u, w = gauss_legendre(n)
    psi, dpsi = kress_map(u, q)
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    length = b - a
    return a + length * psi, length * w * dpsi


def panel_rule(edges: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on consecutive panels given by ``edges``."""
    u, w = gauss_legendre(n)
    edges = np.asarray(edges, dtype=float)
    left = edges[:-1, None]
    length = np.diff(edges)[:, None]
    return (left + length * u).ravel(), (length * w).ravel()


# ---------------------------------------------------------------------------
# Directions: caps, circle arcs, sphere rings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Cap:
    """Spherical cap ``{theta : theta . axis >= cos(half_angle)}``."""

    axis: tuple
    half_angle: float

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.axis, dtype=float)

    def antipode(self) -> "Cap":
        return Cap(tuple(-np.asarray(self.axis, dtype=float)), self.half_angle)

    def covers_sphere(self) -> bool:
        return self.half_angle >= np.pi

    def contains(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return theta @ self.vector >= math.cos(self.half_angle) - 1e-15


def merge_circle_arcs(arcs) -> list[tuple[float, float]]:
    """Union of arcs ``(start, end)`` (radians, start < end) on the circle.

    Returns disjoint intervals inside [0, 2*pi] sorted by start.
    """
    pieces = []
    for start, end in arcs:
        if end - start >= TWO_PI - 1e-15:
            return [(0.0, TWO_PI)]
        s0 = start % TWO_PI
        e0 = s0 + (end - start)
        if e0 > TWO_PI:
            pieces.append((s0, TWO_PI))
            pieces.append((0.0, e0 - TWO_PI))
        else:
            pieces.append((s0, e0))
    if not pieces:
        return []
    pieces.sort()
    merged = [list(pieces[0])]
    for s0, e0 in pieces[1:]:
        if s0 <= merged[-1][1] + 1e-15:
            merged[-1][1] = max(merged[-1][1], e0)
        else:
            merged.append([s0, e0])
    if len(merged) == 1 and merged[0][0] <= 1e-15 and merged[0][1] >= TWO_PI - 1e-15:
        return [(0.0, TWO_PI)]
    return [(float(s0), float(e0)) for s0, e0 in merged]


def caps_to_arcs(caps) -> list[tuple[float, float]]:
    """Circle arcs covered by a collection of caps in d = 2 (``None`` = full)."""
    if caps is None:
        return [(0.0, TWO_PI)]
    arcs = []
    for cap in caps:
        if cap.covers_sphere():
            return [(0.0, TWO_PI)]
        ax = cap.vector
        phi = math.atan2(ax[1], ax[0])
        arcs.append((phi - cap.half_angle, phi + cap.half_angle))
    return merge_circle_arcs(arcs)


def circle_rule(arcs, n: int, breaks=None) -> tuple[np.ndarray, np.ndarray]:
    """Angular rule on a union of arcs of the unit circle.

    ``breaks`` is an optional ``(m, nb)`` array of extra breakpoints (one row
    per batch member, e.g. per frequency).  Every arc is split at the breaks
    falling inside it and each sub-interval carries an ``n``-point graded
    Gauss rule; zero-length sub-intervals simply get zero weight, which keeps
    the rule shape fixed across the batch.

    Returns angles and weights of shape ``(m, K)``.
    """
    if breaks is None:
        breaks = np.zeros((1, 0))
    breaks = np.mod(np.asarray(breaks, dtype=float), TWO_PI)
    m = breaks.shape[0]
    phis, weights = [], []
    for a, b in arcs:
        inner = np.clip(breaks, a, b)
        edges = np.concatenate([np.full((m, 1), a), inner, np.full((m, 1), b)], axis=1)
        edges.sort(axis=1)
        x, w = graded_rule(edges[:, :-1], edges[:, 1:], n)
        phis.append(x.reshape(m, -1))
        weights.append(w.reshape(m, -1))
    if not phis:
        return np.zeros((m, 0)), np.zeros((m, 0))
    return np.concatenate(phis, axis=1), np.concatenate(weights, axis=1)


def orthonormal_frame(p: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Right-handed orthonormal frame ``(e1, e2, p)`` of R^3 with given third axis."""
    p = np.asarray(p, dtype=float)
    p = p / np.linalg.norm(p)
    trial = np.array([1.0, 0.0, 0.0]) if abs(p[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = trial - (trial @ p) * p
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(p, e1)
    return e1, e2, p


def _ring_arcs(theta_polar: float, caps, frame) -> list[tuple[float, float]]:
    e1, e2, p = frame
    st, ct = math.sin(theta_polar), math.cos(theta_polar)
    arcs = []
    for cap in caps:
        c = cap.vector
        cp, c1, c2 = c @ p, c @ e1, c @ e2
        rho = math.hypot(c1, c2)
        rhs = math.cos(cap.half_angle) - ct * cp
        if st * rho < 1e-14:
            if rhs <= 0.0:
                return [(0.0, TWO_PI)]
            continue
        q = rhs / (st * rho)
        if q <= -1.0:
            return [(0.0, TWO_PI)]
        if q >= 1.0:
            continue
        phic = math.atan2(c2, c1)
        half = math.acos(q)
        arcs.append((phic - half, phic + half))
    return merge_circle_arcs(arcs)


def sphere_rule(caps, axis, n: int, n_phi: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Rule on the union of ``caps`` on the 2-sphere (``None`` = whole sphere).

    Spherical coordinates use ``axis`` as the pole.  Polar breakpoints sit at
    the equator (where ``theta . axis`` changes sign) and at every polar angle
    where a ring is tangent to a cap boundary, so the ring-length function is
    smooth on each polar sub-interval apart from graded endpoint behaviour.
    Azimuthal arcs on each ring are exact.  ``n_phi`` (default ``n``) sets
    the azimuthal order separately, which pays off when the integrand varies
    mainly with the polar angle.
    """
    n_phi = n if n_phi is None else n_phi
    frame = orthonormal_frame(axis)
    e1, e2, p = frame
    full = caps is None or any(c.covers_sphere() for c in caps)
    breaks = [0.0, np.pi / 2, np.pi]
    if not full:
        for cap in caps:
            psi = math.acos(float(np.clip(cap.vector @ p, -1.0, 1.0)))
            for val in (psi - cap.half_angle, psi + cap.half_angle):
                if val < 0.0:
                    val = -val
                if val > np.pi:
                    val = TWO_PI - val
                breaks.append(val)
        for i, ci in enumerate(caps):
            for cj in caps[i + 1:]:
                for point in _circle_intersections(ci, cj):
                    breaks.append(math.acos(float(np.clip(point @ p, -1.0, 1.0))))
    breaks = np.unique(np.clip(breaks, 0.0, np.pi))
    breaks = breaks[np.concatenate([[True], np.diff(breaks) > 1e-13])]
    th, wth = graded_rule(breaks[:-1], breaks[1:], n)
    th, wth = th.ravel(), wth.ravel()
    pts, wts = [], []
    if full:
        nphi = 2 * n_phi
        phi = np.arange(nphi) * (TWO_PI / nphi)
        wphi = np.full(nphi, TWO_PI / nphi)
        T, P = np.meshgrid(th, phi, indexing="ij")
        W = (wth * np.sin(th))[:, None] * wphi[None, :]
        pts.append(_sph_to_cart(T.ravel(), P.ravel(), frame))
        wts.append(W.ravel())
    else:
        u, wu = gauss_legendre(n_phi)
        for t, wt in zip(th, wth):
            if wt == 0.0:
                continue
            for a, b in _ring_arcs(t, caps, frame):
                if b - a >= TWO_PI - 1e-15:
                    nphi = 2 * n_phi
                    phi = np.arange(nphi) * (TWO_PI / nphi)
                    wphi = np.full(nphi, TWO_PI / nphi)
                else:
                    phi = a + (b - a) * u
                    wphi = (b - a) * wu
                pts.append(_sph_to_cart(np.full(phi.shape, t), phi, frame))
                wts.append(wt * math.sin(t) * wphi)
    if not pts:
        return np.zeros((0, 3)), np.zeros(0)
    return np.concatenate(pts), np.concatenate(wts)


def _circle_intersections(c1: Cap, c2: Cap) -> list[np.ndarray]:
    """Points where the boundary circles of two caps on the 2-sphere meet."""
    a, b = c1.vector, c2.vector
    h1, h2 = math.cos(c1.half_angle), math.cos(c2.half_angle)
    g = float(a @ b)
    det = 1.0 - g * g
    if det < 1e-14:
        return []
    x = (h1 - g * h2) / det
    y = (h2 - g * h1) / det
    base = x * a + y * b
    rest = 1.0 - float(base @ base)
    if rest < 0.0:
        return []
    n = np.cross(a, b)
    n /= np.linalg.norm(n)
    z = math.sqrt(rest)
    return [base + z * n, base - z * n]


def _sph_to_cart(theta, phi, frame) -> np.ndarray:
    e1, e2, p = frame
    st = np.sin(theta)
    return (st * np.cos(phi))[:, None] * e1 + (st * np.sin(phi))[:, None] * e2 + np.cos(theta)[:, None] * p


def direction_rule(d: int, caps, n: int, axis=None) -> tuple[np.ndarray, np.ndarray]:
    """Unit vectors and weights covering the union of caps on S^{d-1}."""
    if d == 2:
        arcs = caps_to_arcs(caps)
        breaks = None
        if axis is not None:
            ang = math.atan2(axis[1], axis[0])
            breaks = np.array([[ang + np.pi / 2, ang - np.pi / 2]])
        phi, w = circle_rule(arcs, n, breaks)
        phi, w = phi[0], w[0]
        return np.stack([np.cos(phi), np.sin(phi)], axis=-1), w
    if d == 3:
        return sphere_rule(caps, np.array([0.0, 0.0, 1.0]) if axis is None else axis, n)
    raise ValueError(f"dimension {d} not supported")


def sphere_area(d: int) -> float:
    """Surface measure of S^{d-1}."""
    return 2.0 * np.pi ** (d / 2) / math.gamma(d / 2)


# ---------------------------------------------------------------------------
# Radial profiles of power-law kernels
# ---------------------------------------------------------------------------

def compensator_mode(s: float | None) -> str:
    """``'none'`` (chi = 0), ``'ball'`` (chi = 1 on B_1) or ``'full'`` (chi = 1)."""
    if s is None or s < 0.5:
        return "none"
    if s == 0.5:
        return "ball"
    return "full"


def _asymptotic_tail(nu: float, b: np.ndarray, terms: int = 40) -> np.ndarray:
    """``int_b^inf exp(i h) h**(-nu) dh`` for large ``b`` by repeated integration by parts."""
    b = np.asarray(b, dtype=float)
    acc = np.zeros(b.shape, dtype=complex)
    term = np.ones(b.shape, dtype=complex)
    for k in range(terms):
        acc += term
        term = term * (-1j) * (nu + k) / b
    return 1j * np.exp(1j * b) * b ** (-nu) * acc


class PowerProfile:
    """Scaled radial integrals of the kernel ``t**(-1-2s)`` on [0, b].

    ``cos_part(b) = int_0^b (1 - cos h) h^(-1-2s) dh`` and
    ``sin_part(b) = int_0^b (sin h - h c(h)) h^(-1-2s) dh`` where ``c`` is the
    compensator written in the scaled variable (0, 1_{h<1} or 1 for s below,
    at or above one half).  Both converge as ``b -> inf``.

    The integrals are tabulated on graded panels up to ``B_TABLE``; beyond that
    the oscillatory tail is expanded asymptotically, which is accurate to
    roughly machine precision once ``b > B_TABLE``.
    """

    B_TABLE = 64.0
    SMALLEST = 2.0 ** -60
    NODES = 16
    PARTIAL_NODES = 12

    def __init__(self, s: float):
        if not 0.0 < s < 1.0:
            raise ValueError("s must lie in (0, 1)")
        self.s = float(s)
        self.nu = 1.0 + 2.0 * self.s
        self.mode = compensator_mode(self.s)
        geometric = 2.0 ** -np.arange(60, -1, -1, dtype=float)
        uniform = np.arange(1.5, self.B_TABLE + 0.25, 0.5)
        self.edges = np.concatenate([geometric, uniform])
        x, w = panel_rule(self.edges, self.NODES)
        npan = len(self.edges) - 1
        fc = (self._cos_integrand(x) * w).reshape(npan, -1).sum(axis=1)
        fs = (self._sin_integrand(x) * w).reshape(npan, -1).sum(axis=1)
        self.cum_cos = np.concatenate([[self._cos_small(self.SMALLEST)], fc]).cumsum()
        self.cum_sin = np.concatenate([[self._sin_small(self.SMALLEST)], fs]).cumsum()
        top = np.array([self.B_TABLE])
        self.cos_inf = float(self.cum_cos[-1] + self._cos_tail(top)[0])
        self.sin_inf = float(self.cum_sin[-1] + self._sin_tail(top)[0])

    # integrands in the scaled variable h
    def _cos_integrand(self, h):
        return (2.0 * np.sin(0.5 * h) ** 2) * h ** (-self.nu)

    def _sin_integrand(self, h):
        if self.mode == "none":
            num = np.sin(h)
        elif self.mode == "full":
            num = _sin_minus_x(h)
        else:
            num = np.where(h < 1.0, _sin_minus_x(h), np.sin(h))
        return num * h ** (-self.nu)

    # leading-order behaviour on (0, eps]
    def _cos_small(self, eps):
        return 0.5 * eps ** (2.0 - 2.0 * self.s) / (2.0 - 2.0 * self.s)

    def _sin_small(self, eps):
        if self.mode == "none":
            return eps ** (1.0 - 2.0 * self.s) / (1.0 - 2.0 * self.s)
        return -eps ** (3.0 - 2.0 * self.s) / (6.0 * (3.0 - 2.0 * self.s))

    # tails on [b, inf)
    def _cos_tail(self, b):
        return b ** (-2.0 * self.s) / (2.0 * self.s) - _asymptotic_tail(self.nu, b).real

    def _sin_tail(self, b):
        tail = _asymptotic_tail(self.nu, b).imag
        if self.mode == "full":
            tail = tail - b ** (1.0 - 2.0 * self.s) / (2.0 * self.s - 1.0)
        return tail

    def _evaluate(self, b, which: str) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        out = np.empty(b.shape)
        flat_b = b.ravel()
        flat = out.ravel()
        cum = self.cum_cos if which == "cos" else self.cum_sin
        value_inf = self.cos_inf if which == "cos" else self.sin_inf
        small = self._cos_small if which == "cos" else self._sin_small
        tail = self._cos_tail if which == "cos" else self._sin_tail
        integrand = self._cos_integrand if which == "cos" else self._sin_integrand

        inf_mask = np.isinf(flat_b)
        big = (flat_b > self.B_TABLE) & ~inf_mask
        tiny = flat_b < self.SMALLEST
        mid = ~(inf_mask | big | tiny)
        flat[inf_mask] = value_inf
        if big.any():
            flat[big] = value_inf - tail(flat_b[big])
        if tiny.any():
            flat[tiny] = small(flat_b[tiny])
        if mid.any():
            idx_mid = np.nonzero(mid)[0]
            u, w = gauss_legendre(self.PARTIAL_NODES)
            for start in range(0, idx_mid.size, 1 << 17):
                sel = idx_mid[start:start + (1 << 17)]
                bb = flat_b[sel]
                k = np.searchsorted(self.edges, bb, side="right") - 1
                k = np.clip(k, 0, len(self.edges) - 1)
                left = self.edges[k]
                length = bb - left
                nodes = left[:, None] + length[:, None] * u
                partial = (integrand(nodes) * w).sum(axis=1) * length
                flat[sel] = cum[k] + partial
        return out

    def cos_part(self, b) -> np.ndarray:
        return self._evaluate(b, "cos")

    def sin_part(self, b) -> np.ndarray:
        return self._evaluate(b, "sin")

    def symbol(self, a, r_in: float = 0.0, r_out: float = np.inf) -> np.ndarray:
        """``int_{r_in}^{r_out} (1 - e^{iat} + i a t chi(t)) t^(-1-2s) dt``.

        ``chi`` is the compensator of this exponent (indicator of the unit
        ball when s = 1/2).  Vectorized over ``a``; returns complex values.
        """
        a = np.asarray(a, dtype=float)
        A = np.abs(a)
        out = np.zeros(a.shape, dtype=complex)
        nz = A > 0.0
        if not nz.any():
            return out
        An = A[nz]
        with np.errstate(invalid="ignore"):
            b_out = An * r_out if np.isfinite(r_out) else np.full(An.shape, np.inf)
            b_in = An * r_in
        scale = An ** (2.0 * self.s)
        re = scale * (self.cos_part(b_out) - self.cos_part(b_in))
        im_mag = self.sin_part(b_out) - self.sin_part(b_in)
        if self.mode == "ball":
            im_mag = im_mag + _log_ratio(b_out, An) - _log_ratio(b_in, An)
        im = -np.sign(a[nz]) * scale * im_mag
        out[nz] = re + 1j * im
        return out


def _sin_minus_x(h):
    """``sin(h) - h`` without cancellation for small ``h``."""
    h = np.asarray(h, dtype=float)
    out = np.sin(h) - h
    small = np.abs(h) < 0.1
    if np.any(small):
        hs = h[small]
        h2 = hs * hs
        # Taylor series to h^13
        out[small] = -hs * h2 / 6.0 * (1.0 - h2 / 20.0 * (1.0 - h2 / 42.0 * (1.0 - h2 / 72.0 * (1.0 - h2 / 110.0 * (1.0 - h2 / 156.0)))))
    return out


def _log_ratio(h, A):
    """``ln(min(1, h) / min(A, h))`` with the h -> 0 limit 0 and h -> inf limit -ln A."""
    h = np.asarray(h, dtype=float)
    out = np.zeros(np.broadcast(h, A).shape)
    h, A = np.broadcast_arrays(h, A)
    pos = h > 0
    hp, Ap = h[pos], A[pos]
    out[pos] = np.log(np.minimum(1.0, hp)) - np.log(np.minimum(Ap, hp))
    return out


@lru_cache(maxsize=None)
def power_profile(s: float) -> PowerProfile:
    return PowerProfile(s)


# ---------------------------------------------------------------------------
# Radial profiles of integrable kernels
# ---------------------------------------------------------------------------

class IntegrableProfile:
    """``R(a) = int_0^T (1 - e^{iat}) G(t) dt`` for a smooth density ``G``.

    ``R`` is entire in ``a``; it is represented by Chebyshev interpolants of
    its real (even) and imaginary (odd) parts on ``[0, A]``, with ``A`` grown
    on demand and the degree doubled until the trailing coefficients are
    negligible.
    """

    def __init__(self, density, support: float):
        self.density = density
        self.support = float(support)
        self._limit = 0.0
        self._re = None
        self._im = None

    def direct(self, a) -> np.ndarray:
        """Brute-force evaluation by composite Gauss panels (slow, exact)."""
        a = np.atleast_1d(np.asarray(a, dtype=float))
        npan = int(np.ceil(np.max(np.abs(a), initial=0.0) * self.support / 2.0)) + 8
        t, w = panel_rule(np.linspace(0.0, self.support, npan + 1), 16)
        g = self.density(t) * w
        out = np.empty(a.shape, dtype=complex)
        for start in range(0, a.size, 2048):
            aa = a[start:start + 2048, None]
            out[start:start + 2048] = ((2.0 * np.sin(0.5 * aa * t) ** 2) * g).sum(axis=1) - 1j * (np.sin(aa * t) * g).sum(axis=1)
        return out

    def _build(self, limit: float) -> None:
        limit = max(limit, 1.0)
        deg = 32
        while True:
            nodes = np.cos(np.pi * (np.arange(deg + 1) + 0.5) / (deg + 1))
            avals = 0.5 * limit * (nodes + 1.0)
            vals = self.direct(avals)
            cre = np.polynomial.chebyshev.chebfit(nodes, vals.real, deg)
            cim = np.polynomial.chebyshev.chebfit(nodes, vals.imag, deg)
            scale = max(np.abs(cre).max(), np.abs(cim).max(), 1e-300)
            tail = max(np.abs(cre[-4:]).max(), np.abs(cim[-4:]).max())
            if tail < 1e-15 * scale:
                break
            deg *= 2
            if deg > 16384:
                raise NumericalError("Chebyshev profile did not converge", {"limit": limit, "degree": deg})
        self._limit, self._re, self._im = limit, cre, cim

    def __call__(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        A = np.abs(a)
        top = float(A.max(initial=0.0))
        if self._re is None or top > self._limit:
            self._build(max(top * 1.25, 2.0 * self._limit))
        x = 2.0 * A / self._limit - 1.0
        re = np.polynomial.chebyshev.chebval(x, self._re)
        im = np.polynomial.chebyshev.chebval(x, self._im) * np.sign(a)
        out = re + 1j * im
        out[A == 0.0] = 0.0
        return out


# ---------------------------------------------------------------------------
# Generalized exponential integral
# ---------------------------------------------------------------------------

def expint_nu(nu: float, z) -> np.ndarray:
    """``E_nu(z) = int_1^inf exp(-z t) t**(-nu) dt`` for ``Re z >= 0``, ``nu > 1``.

    Series around the origin for ``|z| < 2``, modified Lentz continued
    fraction otherwise; integer orders use the recurrence on ``E_1``.
    """
    z = np.asarray(z, dtype=complex)
    if float(nu).is_integer():
        n = int(nu)
        out = np.where(z == 0, 0.0, special.exp1(np.where(z == 0, 1.0, z)))
        for k in range(1, n):
            out = (np.exp(-z) - z * out) / k
        out = np.where(z == 0, 1.0 / (n - 1), out)
        return out
    out = np.empty(z.shape, dtype=complex)
    small = np.abs(z) < 2.0
    if small.any():
        zs = z[small]
        acc = np.zeros(zs.shape, dtype=complex)
        term = np.ones(zs.shape, dtype=complex)
        for k in range(80):
            acc += term / (1.0 - nu + k)
            term = term * (-zs) / (k + 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            lead = np.where(zs == 0, 0.0, math.gamma(1.0 - nu) * zs ** (nu - 1.0))
        out[small] = lead - acc
    big = ~small
    if big.any():
        zb = z[big]
        tiny = 1e-300
        b = zb + nu
        c = np.full(zb.shape, 1.0 / tiny, dtype=complex)
        dd = 1.0 / b
        h = dd.copy()
        done = np.zeros(zb.shape, dtype=bool)
        for i in range(1, 5000):
            an = -i * (nu - 1.0 + i)
            b = b + 2.0
            dd = 1.0 / (an * dd + b)
            c = b + an / c
            delta = c * dd
            h = np.where(done, h, h * delta)
            done |= np.abs(delta - 1.0) < 1e-16
            if done.all():
                break
        else:
            raise NumericalError("continued fraction for E_nu did not converge", {"nu": nu})
        out[big] = h * np.exp(-zb)
    return out
