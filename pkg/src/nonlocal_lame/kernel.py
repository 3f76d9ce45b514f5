"""Interaction kernels: integrable (Class A) and singular cone-restricted (Class B).

Every kernel is stored as a finite sum of separable *components*

    rho(t * theta) = weight * m(theta) * 1_D(theta) * g(t),

with ``D`` a union of spherical caps (or the whole sphere), ``m`` a named
angular modulation and ``g`` a named radial profile.  Homotopies and the
modified kernels used in the continuity argument are again such sums, so
every downstream routine (symbols, quadrature application) only needs to
understand components.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigError, DomainError, NumericalError, UsageError
from .quadrature import (
    Cap,
    IntegrableProfile,
    caps_to_arcs,
    compensator_mode,
    direction_rule,
    power_profile,
    sphere_area,
)

INF = math.inf


# ---------------------------------------------------------------------------
# Cones
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConeSpec:
    """A set of directions given as a union of caps; ``caps=None`` is the full sphere.

    The interaction region is the double cone generated by the caps and their
    antipodes.
    """

    d: int
    caps: tuple | None = None

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ConfigError("dimension must be 2 or 3")
        if self.caps is None:
            return
        if len(self.caps) == 0:
            raise ConfigError("a cone needs at least one cap")
        fixed = []
        for cap in self.caps:
            if not isinstance(cap, Cap):
                cap = Cap(tuple(cap[0]), float(cap[1]))
            axis = np.asarray(cap.axis, dtype=float)
            if axis.shape != (self.d,):
                raise ConfigError(f"cap axis must have {self.d} components")
            if abs(np.linalg.norm(axis) - 1.0) > 1e-12:
                raise ConfigError("cap axis must be a unit vector")
            if not 0.0 < cap.half_angle <= np.pi:
                raise ConfigError("cap half-angle must lie in (0, pi]")
            fixed.append(cap)
        object.__setattr__(self, "caps", tuple(fixed))

    @classmethod
    def full(cls, d: int) -> "ConeSpec":
        return cls(d, None)

    @classmethod
    def cap(cls, axis, half_angle: float) -> "ConeSpec":
        axis = tuple(float(a) for a in axis)
        return cls(len(axis), (Cap(axis, float(half_angle)),))

    @property
    def is_full(self) -> bool:
        return self.caps is None or any(c.covers_sphere() for c in self.caps)

    def symmetric_caps(self):
        """Caps of Gamma together with their antipodes (``None`` = full sphere)."""
        if self.is_full:
            return None
        out = []
        for cap in self.caps:
            out.append(cap)
            out.append(cap.antipode())
        return tuple(out)

    def contains(self, y) -> np.ndarray:
        return cone_contains(self, y)

    def surface_measure(self) -> float:
        return cone_surface_measure(self)


def _in_caps(caps, theta: np.ndarray) -> np.ndarray:
    if caps is None:
        return np.ones(theta.shape[:-1], dtype=bool)
    inside = np.zeros(theta.shape[:-1], dtype=bool)
    for cap in caps:
        inside |= cap.contains(theta)
    return inside


def cone_contains(c: ConeSpec, y) -> np.ndarray | bool:
    """Whether ``y`` lies in the double cone generated by ``c``."""
    y = np.asarray(y, dtype=float)
    norm = np.linalg.norm(y, axis=-1)
    if np.any(norm == 0.0):
        raise DomainError("cone membership is undefined at the origin")
    theta = y / norm[..., None]
    out = _in_caps(c.symmetric_caps(), theta)
    return bool(out) if out.ndim == 0 else out


def sphere_integral(d: int, caps, func, tol: float = 1e-12, n0: int = 16, n_max: int = 1024):
    """Integrate ``func(theta)`` over a union of caps with order doubling.

    Returns ``(value, error_estimate)``; raises if the relative change never
    drops below ``tol``.
    """
    trace = []
    prev = None
    n = n0
    while n <= n_max:
        theta, w = direction_rule(d, caps, n)
        val = np.tensordot(w, func(theta), axes=(0, 0)) if theta.size else 0.0
        if prev is not None:
            err = float(np.max(np.abs(np.asarray(val) - prev)))
            scale = max(float(np.max(np.abs(val))), 1.0)
            trace.append((n, err))
            if err <= tol * scale:
                return val, err
        prev = np.asarray(val)
        n *= 2
    raise NumericalError("surface quadrature did not converge", {"trace": trace})


def cone_surface_measure(c: ConeSpec) -> float:
    """Surface measure of the symmetrized direction set on the unit sphere."""
    caps = c.symmetric_caps()
    if caps is None:
        return sphere_area(c.d)
    if c.d == 2:
        return float(sum(b - a for a, b in caps_to_arcs(caps)))
    val, _ = sphere_integral(3, caps, lambda th: np.ones(th.shape[0]))
    return float(val)


# ---------------------------------------------------------------------------
# Angular modulations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Modulation:
    """Bounded angular factor ``m(theta)``.

    Families: ``constant`` (value ``a``), ``linear`` (``a + b theta.e``, odd
    part present) and ``quadratic`` (``a + b (theta.e)^2``, even).
    """

    family: str = "constant"
    a: float = 1.0
    b: float = 0.0
    axis: tuple | None = None

    def __post_init__(self):
        if self.family not in ("constant", "linear", "quadratic"):
            raise ConfigError(f"unknown modulation family {self.family!r}")
        if self.family != "constant":
            if self.axis is None:
                raise ConfigError("modulation axis required")
            ax = np.asarray(self.axis, dtype=float)
            if abs(np.linalg.norm(ax) - 1.0) > 1e-12:
                raise ConfigError("modulation axis must be a unit vector")
        if self.bounds[0] <= 0.0:
            raise ConfigError("modulation must be bounded below by a positive constant")

    @classmethod
    def constant(cls, value: float = 1.0) -> "Modulation":
        return cls("constant", float(value))

    @classmethod
    def linear(cls, a: float, b: float, axis) -> "Modulation":
        return cls("linear", float(a), float(b), tuple(float(x) for x in axis))

    @classmethod
    def quadratic(cls, a: float, b: float, axis) -> "Modulation":
        return cls("quadratic", float(a), float(b), tuple(float(x) for x in axis))

    @property
    def bounds(self) -> tuple[float, float]:
        if self.family == "constant":
            return self.a, self.a
        if self.family == "linear":
            return self.a - abs(self.b), self.a + abs(self.b)
        return self.a + min(0.0, self.b), self.a + max(0.0, self.b)

    @property
    def is_even(self) -> bool:
        return self.family != "linear" or self.b == 0.0

    @property
    def is_constant(self) -> bool:
        return self.family == "constant" or self.b == 0.0

    def __call__(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.is_constant:
            return np.full(theta.shape[:-1], self.a)
        c = theta @ np.asarray(self.axis, dtype=float)
        if self.family == "linear":
            return self.a + self.b * c
        return self.a + self.b * c * c


# ---------------------------------------------------------------------------
# Radial profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerRadial:
    """``g(t) = t^(-d-2s)`` on ``[r_in, r_out)``."""

    s: float
    r_in: float = 0.0
    r_out: float = INF

    def density(self, t, d: int) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            out = t ** (-d - 2.0 * self.s)
        return np.where((t >= self.r_in) & (t < self.r_out), out, 0.0)

    def symbol(self, a) -> np.ndarray:
        """``int (1 - e^{iat} + i a t chi(t)) g(t) t^{d-1} dt`` (compensated)."""
        return power_profile(self.s).symbol(a, self.r_in, self.r_out)

    @property
    def support(self) -> float:
        return self.r_out


class DensityRadial:
    """Smooth or piecewise-smooth integrable radial profile."""

    def __init__(self, name: str, d: int, g, support: float, params: dict):
        self.name = name
        self.d = d
        self._g = g
        self.support = float(support)
        self.params = dict(params)
        self._profile = IntegrableProfile(lambda t: g(t) * t ** (d - 1), support)

    def density(self, t, d: int | None = None) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.where(t < self.support, self._g(t), 0.0)

    def symbol(self, a) -> np.ndarray:
        return self._profile(a)

    def mass_factor(self) -> float:
        """``int_0^T g(t) t^{d-1} dt``."""
        return _radial_mass(self)

    def __repr__(self):
        return f"DensityRadial({self.name}, {self.params})"


def _radial_mass(radial: DensityRadial) -> float:
    from .quadrature import panel_rule

    t, w = panel_rule(np.linspace(0.0, radial.support, 65), 16)
    return float(np.sum(radial.density(t) * t ** (radial.d - 1) * w))


@dataclass(frozen=True)
class Component:
    """``weight * m(theta) * 1_caps(theta) * g(t)``."""

    weight: float
    caps: tuple | None
    modulation: Modulation
    radial: object

    @property
    def is_power(self) -> bool:
        return isinstance(self.radial, PowerRadial)

    @property
    def is_even(self) -> bool:
        if not self.modulation.is_even:
            return False
        if self.caps is None:
            return True
        return _caps_symmetric(self.caps)

    @property
    def is_radial(self) -> bool:
        return self.caps is None and self.modulation.is_constant

    def angular(self, theta: np.ndarray) -> np.ndarray:
        return self.weight * self.modulation(theta) * _in_caps(self.caps, theta)

    def evaluate(self, y: np.ndarray, d: int) -> np.ndarray:
        t = np.linalg.norm(y, axis=-1)
        safe = np.where(t > 0.0, t, 1.0)
        theta = np.where((t > 0.0)[..., None], y / safe[..., None], np.eye(d)[0])
        return self.angular(theta) * self.radial.density(t, d)


def _caps_symmetric(caps) -> bool:
    for cap in caps:
        anti = -cap.vector
        if not any(np.allclose(c.vector, anti) and c.half_angle == cap.half_angle for c in caps):
            return False
    return True


# ---------------------------------------------------------------------------
# Compensator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Compensator:
    """Cutoff multiplying the first-order term: 0, ``1_{B_1}`` or 1 depending on ``s``.

    ``s=None`` denotes the zero compensator used with integrable kernels.
    """

    s: float | None

    @property
    def mode(self) -> str:
        return compensator_mode(self.s)

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        t = np.linalg.norm(y, axis=-1)
        if self.mode == "none":
            return np.zeros(t.shape)
        if self.mode == "full":
            return np.ones(t.shape)
        return (t < 1.0).astype(float)


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

class KernelSpec:
    """Common interface: a dimension, a list of components and metadata."""

    kind: str = "?"

    def __init__(self, d: int, components, s: float | None, alpha1: float | None = None,
                 alpha2: float | None = None, label: str = ""):
        if d not in (2, 3):
            raise ConfigError("dimension must be 2 or 3")
        self.d = d
        self.components = tuple(components)
        self.s = s
        self.alpha1 = alpha1
        self.alpha2 = alpha2
        self.label = label

    @property
    def compensator(self) -> Compensator:
        return Compensator(self.s)

    @cached_property
    def is_even(self) -> bool:
        return all(c.is_even for c in self.components)

    @cached_property
    def is_radial(self) -> bool:
        return all(c.is_radial for c in self.components)

    def __call__(self, y) -> np.ndarray:
        return eval_kernel(self, y)

    def check_even(self, n_samples: int = 200, seed: int = 0, tol: float = 1e-12) -> bool:
        """Sample ``rho(y) - rho(-y)``; consistent with ``is_even`` when it returns True."""
        rng = np.random.default_rng(seed)
        y = rng.standard_normal((n_samples, self.d))
        y *= (rng.uniform(0.05, 2.0, n_samples) / np.linalg.norm(y, axis=1))[:, None]
        a = eval_kernel(self, y)
        b = eval_kernel(self, -y)
        symmetric = bool(np.all(np.abs(a - b) <= tol * np.maximum(1.0, np.abs(a))))
        return symmetric if self.is_even else True

    def l1_mass(self) -> float:
        raise UsageError("only integrable kernels have finite mass")

    def __repr__(self):
        return f"{type(self).__name__}({self.label})"


class SingularKernel(KernelSpec):
    """``m(theta) |y|^(-d-2s)`` restricted to the double cone and to ``|y| < r``."""

    kind = "B"

    def __init__(self, d: int, s: float, cone: ConeSpec | None = None,
                 modulation: Modulation | None = None, r: float = INF):
        if not 0.0 < s < 1.0:
            raise ConfigError("s must lie in (0, 1)")
        if not r > 0.0:
            raise ConfigError("truncation radius must be positive")
        cone = ConeSpec.full(d) if cone is None else cone
        if cone.d != d:
            raise ConfigError("cone dimension mismatch")
        modulation = Modulation.constant(1.0) if modulation is None else modulation
        if modulation.axis is not None and len(modulation.axis) != d:
            raise ConfigError("modulation axis dimension mismatch")
        a1, a2 = modulation.bounds
        comp = Component(1.0, cone.symmetric_caps(), modulation, PowerRadial(float(s), 0.0, float(r)))
        super().__init__(d, [comp], float(s), a1, a2, label=f"s={s}, r={r}")
        self.cone = cone
        self.modulation = modulation
        self.r = float(r)

    @classmethod
    def fractional(cls, d: int, s: float, alpha: float = 1.0) -> "SingularKernel":
        """Isotropic fractional kernel ``alpha |y|^(-d-2s)``."""
        return cls(d, s, ConeSpec.full(d), Modulation.constant(alpha))


class IntegrableKernel(KernelSpec):
    """Nonnegative integrable kernel from a named family."""

    kind = "A"

    def __init__(self, d: int, family: str, mass: float, component: Component, params: dict):
        if not mass > 0.0:
            raise ConfigError("kernel mass must be positive")
        super().__init__(d, [component], None, label=f"{family}, mass={mass}")
        self.family = family
        self.mass = float(mass)
        self.params = dict(params)

    def l1_mass(self) -> float:
        return self.mass

    @classmethod
    def ball(cls, d: int, radius: float, mass: float = 1.0) -> "IntegrableKernel":
        """Constant density on the ball of given radius."""
        if not radius > 0.0 or not mass > 0.0:
            raise ConfigError("ball kernel needs positive radius and mass")
        level = mass / (sphere_area(d) * radius**d / d)
        radial = DensityRadial("ball", d, lambda t: np.full(np.shape(t), level), radius,
                               {"radius": radius, "level": level})
        comp = Component(1.0, None, Modulation.constant(1.0), radial)
        return cls(d, "ball", mass, comp, {"radius": radius})

    @classmethod
    def gaussian(cls, d: int, sigma: float, mass: float = 1.0) -> "IntegrableKernel":
        """``mass (2 pi sigma^2)^(-d/2) exp(-|y|^2 / 2 sigma^2)``, cut at 9 sigma."""
        if not sigma > 0.0 or not mass > 0.0:
            raise ConfigError("gaussian kernel needs positive width and mass")
        peak = mass * (2.0 * np.pi * sigma**2) ** (-d / 2.0)
        radial = DensityRadial("gaussian", d, lambda t: peak * np.exp(-0.5 * (np.asarray(t) / sigma) ** 2),
                               9.0 * sigma, {"sigma": sigma, "peak": peak})
        comp = Component(1.0, None, Modulation.constant(1.0), radial)
        return cls(d, "gaussian", mass, comp, {"sigma": sigma})

    @classmethod
    def sector(cls, d: int, axis, half_angle: float, radius: float, mass: float = 1.0) -> "IntegrableKernel":
        """Constant density on the one-sided sector ``{|y| < radius, y/|y| in cap}``."""
        if not radius > 0.0 or not mass > 0.0:
            raise ConfigError("sector kernel needs positive radius and mass")
        cone = ConeSpec.cap(axis, half_angle)
        if cone.d != d:
            raise ConfigError("sector axis dimension mismatch")
        cap = cone.caps[0]
        if d == 2:
            cap_measure = 2.0 * min(half_angle, np.pi)
        else:
            cap_measure = 2.0 * np.pi * (1.0 - math.cos(half_angle))
        level = mass * d / (radius**d * cap_measure)
        radial = DensityRadial("sector", d, lambda t: np.full(np.shape(t), level), radius,
                               {"radius": radius, "level": level})
        comp = Component(1.0, (cap,), Modulation.constant(1.0), radial)
        return cls(d, "sector", mass, comp, {"axis": tuple(axis), "half_angle": half_angle, "radius": radius})


class HomotopyKernel(KernelSpec):
    """``t rho(y) + (1 - t) alpha1 |y|^(-d-2s)`` joining the fractional kernel to ``rho``."""

    kind = "B"

    def __init__(self, base: SingularKernel, t: float):
        if not isinstance(base, SingularKernel):
            raise ConfigError("homotopy requires a singular base kernel")
        if not 0.0 <= t <= 1.0:
            raise ConfigError("homotopy parameter must lie in [0, 1]")
        comps = [Component(t * c.weight, c.caps, c.modulation, c.radial) for c in base.components if t > 0.0]
        if t < 1.0:
            comps.append(Component((1.0 - t) * base.alpha1, None, Modulation.constant(1.0), PowerRadial(base.s)))
        super().__init__(base.d, comps, base.s, base.alpha1, max(base.alpha2, base.alpha1), label=f"t={t}")
        self.base = base
        self.t = float(t)


def modified_kernel(h: HomotopyKernel) -> KernelSpec:
    """Homotopy kernel plus ``t alpha1 |y|^(-d-2s)`` on the cone outside ``B_r``."""
    base = h.base
    comps = list(h.components)
    if math.isfinite(base.r) and h.t > 0.0:
        comps.append(Component(h.t * base.alpha1, base.cone.symmetric_caps(), Modulation.constant(1.0),
                               PowerRadial(base.s, base.r, INF)))
    k = KernelSpec(base.d, comps, base.s, base.alpha1, max(base.alpha2, base.alpha1),
                   label=f"modified t={h.t}")
    k.kind = "B"
    return k


def eval_kernel(k: KernelSpec, y) -> np.ndarray | float:
    """Kernel density at ``y`` (a point or an array of points)."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != k.d:
        raise UsageError(f"expected points with {k.d} components")
    t = np.linalg.norm(y, axis=-1)
    if k.kind == "B" and np.any(t == 0.0):
        raise DomainError("singular kernel is undefined at the origin")
    out = sum(c.evaluate(y, k.d) for c in k.components)
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

@dataclass
class CancellationReport:
    max_moment: float
    worst: tuple
    moments: dict = field(default_factory=dict)
    passed: bool = False


def check_cancellation(k: KernelSpec, radii, quad_order: int = 16, tol: float = 1e-8) -> CancellationReport:
    """Third-order surface moments ``int_{|y|=mu} y_i y_j y_k rho dsigma``.

    Each moment is normalized by ``alpha2 mu^(2-2s)``; the kernel passes when
    every normalized moment is below ``tol``.
    """
    if k.s is None:
        raise UsageError("cancellation is a singular-kernel condition")
    d = k.d
    idx = [(i, j, l) for i in range(d) for j in range(i, d) for l in range(j, d)]

    def cubic(theta):
        return np.stack([theta[:, i] * theta[:, j] * theta[:, l] for i, j, l in idx], axis=-1)

    moments = {}
    worst = (None, None)
    max_mom = 0.0
    for mu in radii:
        mu = float(mu)
        if not mu > 0.0:
            raise ConfigError("radii must be positive")
        total = np.zeros(len(idx))
        for comp in k.components:
            g = float(comp.radial.density(np.array([mu]), d)[0])
            if g == 0.0:
                continue
            try:
                val, _ = sphere_integral(d, comp.caps, lambda th: comp.angular(th)[:, None] * cubic(th),
                                         tol=1e-13, n0=quad_order)
            except NumericalError as exc:
                raise NumericalError("cancellation moment did not converge",
                                     {"radius": mu, **exc.payload}) from exc
            total += g * mu ** (d + 2) * val
        total /= k.alpha2 * mu ** (2.0 - 2.0 * k.s)
        for n, key in enumerate(idx):
            moments[(key, mu)] = float(total[n])
            if abs(total[n]) > max_mom:
                max_mom = abs(total[n])
                worst = (key, mu)
    return CancellationReport(max_mom, worst, moments, max_mom < tol)


def n2_constant(k: SingularKernel) -> float:
    """``((1 + alpha1) / s) * sigma(Gamma u -Gamma) * r^(-2s)``; zero when ``r`` is infinite."""
    if not math.isfinite(k.r):
        return 0.0
    return (1.0 + k.alpha1) / k.s * cone_surface_measure(k.cone) * k.r ** (-2.0 * k.s)
