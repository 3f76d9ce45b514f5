"""Periodic grids, the discrete Fourier pair and norms of vector fields.

Convention: ``u_hat(xi) ~ int u(x) exp(-2 pi i x.xi) dx`` on the box
``[0, L)^d``, discretized as ``h^d * fftn``.  Frequencies are ``k / L``.
With this scaling Parseval reads ``h^d sum |u|^2 = L^(-d) sum |u_hat|^2``.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import ConfigError, UsageError

_WORKERS = 1


def set_workers(n: int) -> None:
    """Number of threads used by the FFTs (results do not depend on it)."""
    global _WORKERS
    _WORKERS = max(1, int(n))


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid with ``N`` points per axis on a box of side ``L``."""

    d: int
    N: int
    L: float = 1.0

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ConfigError("grid dimension must be 2 or 3")
        if self.N < 8 or self.N & (self.N - 1):
            raise ConfigError("N must be a power of two and at least 8")
        if not self.L > 0.0:
            raise ConfigError("box length must be positive")

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.d

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    @cached_property
    def _nodes(self) -> np.ndarray:
        axes = [np.arange(self.N) * self.h] * self.d
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def nodes(self) -> np.ndarray:
        """Node coordinates, shape ``(N, ..., N, d)``."""
        return self._nodes

    @cached_property
    def _freqs(self) -> np.ndarray:
        k = sfft.fftfreq(self.N, d=self.h)
        return np.stack(np.meshgrid(*([k] * self.d), indexing="ij"), axis=-1)

    def frequencies(self) -> np.ndarray:
        """Frequencies ``k / L`` in FFT order, shape ``(N, ..., N, d)``."""
        return self._freqs

    def wavenumbers(self) -> np.ndarray:
        """Integer wave vectors ``k`` in FFT order."""
        return np.rint(self._freqs * self.L).astype(int)

    def negated_index(self) -> np.ndarray:
        """Flat index of ``-k`` for every flat index ``k``."""
        idx = np.indices(self.shape)
        neg = (-idx) % self.N
        return np.ravel_multi_index(tuple(neg), self.shape).ravel()


class VectorField:
    """Real ``d``-component field sampled on a grid; ``values`` has shape ``(N, ..., N, d)``."""

    def __init__(self, grid: GridSpec, values):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape + (grid.d,):
            raise UsageError(f"expected values of shape {grid.shape + (grid.d,)}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise UsageError("field values must be finite")
        self.grid = grid
        self.values = values

    @classmethod
    def zeros(cls, grid: GridSpec) -> "VectorField":
        return cls(grid, np.zeros(grid.shape + (grid.d,)))

    @classmethod
    def from_function(cls, grid: GridSpec, func) -> "VectorField":
        return cls(grid, func(grid.nodes()))

    @classmethod
    def random(cls, grid: GridSpec, rng, smooth: float | None = None) -> "VectorField":
        """Gaussian random field; with ``smooth`` the spectrum decays like ``exp(-(|k|/smooth)^2)``."""
        vals = rng.standard_normal(grid.shape + (grid.d,))
        if smooth is not None:
            k = np.linalg.norm(grid.wavenumbers(), axis=-1)
            vals = np.real(ifft_nodes(fft_nodes(vals) * np.exp(-(k / smooth) ** 2)[..., None]))
        return cls(grid, vals)

    def _check(self, other: "VectorField"):
        if not isinstance(other, VectorField) or other.grid != self.grid:
            raise UsageError("fields live on different grids")

    def __add__(self, other):
        self._check(other)
        return VectorField(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return VectorField(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return VectorField(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return VectorField(self.grid, -self.values)

    def inner(self, other: "VectorField") -> float:
        """``int <u, v> dx`` by the grid rule."""
        self._check(other)
        return float(np.sum(self.values * other.values) * self.grid.cell_volume)

    def norm(self) -> float:
        return lp_norm(self, 2)


class SpectralField:
    """Complex Fourier coefficients, shape ``(N, ..., N, d)`` in FFT order."""

    def __init__(self, grid: GridSpec, coefficients):
        coefficients = np.asarray(coefficients, dtype=complex)
        if coefficients.shape != grid.shape + (grid.d,):
            raise UsageError("coefficient array does not match the grid")
        self.grid = grid
        self.coefficients = coefficients

    def is_conjugate_symmetric(self, tol: float = 1e-12) -> bool:
        c = self.coefficients.reshape(-1, self.grid.d)
        neg = c[self.grid.negated_index()]
        return bool(np.max(np.abs(c - np.conj(neg)), initial=0.0) <= tol * max(np.max(np.abs(c), initial=0.0), 1e-300))


def fft_nodes(values: np.ndarray) -> np.ndarray:
    axes = tuple(range(values.ndim - 1))
    return sfft.fftn(values, axes=axes, workers=_WORKERS)


def ifft_nodes(coeffs: np.ndarray) -> np.ndarray:
    axes = tuple(range(coeffs.ndim - 1))
    return sfft.ifftn(coeffs, axes=axes, workers=_WORKERS)


def forward_transform(u: VectorField) -> SpectralField:
    """``u_hat = h^d * DFT(u)``."""
    if not isinstance(u, VectorField):
        raise UsageError("forward_transform expects a VectorField")
    return SpectralField(u.grid, fft_nodes(u.values) * u.grid.cell_volume)


def inverse_transform(uh: SpectralField, grid: GridSpec | None = None) -> VectorField:
    """Inverse of :func:`forward_transform`; the real part is returned."""
    if grid is not None and grid != uh.grid:
        raise UsageError("spectral field lives on a different grid")
    vals = ifft_nodes(uh.coefficients) / uh.grid.cell_volume
    return VectorField(uh.grid, vals.real)


def spectral_norm(grid: GridSpec, coeffs: np.ndarray, weight=None) -> float:
    """``(L^-d sum w^2 |c|^2)^(1/2)``, the L2 norm of the field with coefficients ``w c``."""
    power = np.sum(np.abs(coeffs) ** 2, axis=-1)
    if weight is not None:
        power = power * weight**2
    return float(np.sqrt(np.sum(power) / grid.L**grid.d))


def frequency_magnitude(grid: GridSpec) -> np.ndarray:
    return np.linalg.norm(grid.frequencies(), axis=-1)


def homogeneous_weight(grid: GridSpec, order: float) -> np.ndarray:
    """``(2 pi |xi|)^order`` (zero at the origin)."""
    r = 2.0 * np.pi * frequency_magnitude(grid)
    with np.errstate(divide="ignore"):
        return np.where(r > 0.0, r**order, 0.0 if order > 0 else 1.0)


def bessel_weight(grid: GridSpec, s: float) -> np.ndarray:
    """``(1 + 4 pi^2 |xi|^2)^s``."""
    return (1.0 + (2.0 * np.pi * frequency_magnitude(grid)) ** 2) ** s


@dataclass
class SobolevNorms:
    l2: float
    ds: float
    d2s: float
    bessel_2s: float


def sobolev_norms(u: VectorField, s: float) -> SobolevNorms:
    """``||u||``, ``||D^s u||``, ``||D^{2s} u||`` and the Bessel norm of order ``2s``."""
    if not 0.0 < s < 1.0:
        raise UsageError("s must lie in (0, 1)")
    grid = u.grid
    c = forward_transform(u).coefficients
    return SobolevNorms(
        l2=spectral_norm(grid, c),
        ds=spectral_norm(grid, c, homogeneous_weight(grid, s)),
        d2s=spectral_norm(grid, c, homogeneous_weight(grid, 2.0 * s)),
        bessel_2s=spectral_norm(grid, c, bessel_weight(grid, s)),
    )


def bessel_potential(u: VectorField, s: float) -> VectorField:
    """Field with coefficients ``(1 + 4 pi^2 |xi|^2)^s u_hat``."""
    c = forward_transform(u).coefficients * bessel_weight(u.grid, s)[..., None]
    return inverse_transform(SpectralField(u.grid, c))


def lp_norm(u: VectorField, p: float) -> float:
    """``(h^d sum |u(x_j)|^p)^(1/p)`` with the Euclidean norm of the vector values."""
    if not (p >= 1.0):
        raise UsageError("p must lie in [1, inf]")
    mag = np.linalg.norm(u.values, axis=-1)
    if np.isinf(p):
        return float(np.max(mag))
    return float((np.sum(mag**p) * u.grid.cell_volume) ** (1.0 / p))


# ---------------------------------------------------------------------------
# I/O
# ---------------------------------------------------------------------------

def write_field(u: VectorField, path: str) -> list[str]:
    """Write ``path`` (text header) and ``path + '.bin'`` (little-endian float64).

    Payload is row-major over nodes with components interleaved.  Returns the
    written paths.
    """
    g = u.grid
    header = (f"d {g.d}\nN {g.N}\nL {g.L!r}\ncomponents {g.d}\nendianness little\n"
              f"dtype float64\npayload {os.path.basename(path)}.bin\n")
    with open(path, "w") as fh:
        fh.write(header)
    np.ascontiguousarray(u.values, dtype="<f8").tofile(path + ".bin")
    return [path, path + ".bin"]


def read_field(path: str) -> VectorField:
    meta = {}
    with open(path) as fh:
        for line in fh:
            if line.strip():
                key, val = line.split(None, 1)
                meta[key] = val.strip()
    if meta.get("endianness") != "little":
        raise UsageError("only little-endian payloads are supported")
    grid = GridSpec(int(meta["d"]), int(meta["N"]), float(meta["L"]))
    ncomp = int(meta["components"])
    payload = os.path.join(os.path.dirname(path), meta["payload"])
    data = np.fromfile(payload, dtype="<f8").reshape(grid.shape + (ncomp,))
    return VectorField(grid, data)


def write_field_csv(u: VectorField, path: str, max_nodes: int = 4096) -> str:
    """Node coordinates followed by components, one node per row (small grids only)."""
    g = u.grid
    if g.N**g.d > max_nodes:
        raise UsageError("grid too large for CSV export")
    nodes = g.nodes().reshape(-1, g.d)
    vals = u.values.reshape(-1, g.d)
    names = "xyz"[: g.d]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*names, *[f"u{n}" for n in names]])
        for x, v in zip(nodes, vals):
            w.writerow([repr(float(a)) for a in x] + [repr(float(a)) for a in v])
    return path
