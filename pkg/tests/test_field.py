import math

import numpy as np
import pytest

from nonlocal_lame.errors import ConfigError, UsageError
from nonlocal_lame.field import (
    GridSpec,
    SpectralField,
    VectorField,
    bessel_potential,
    forward_transform,
    inverse_transform,
    lp_norm,
    read_field,
    sobolev_norms,
    write_field,
    write_field_csv,
)


def single_mode(grid, k, amp):
    k = np.asarray(k, float)
    amp = np.asarray(amp, float)
    return VectorField.from_function(grid, lambda x: np.cos(2 * np.pi * x @ k / grid.L)[..., None] * amp)


@pytest.mark.parametrize("args", [(1, 16), (2, 12), (4, 16), (2, 16, -1.0)])
def test_grid_rejects_bad_parameters(args):
    with pytest.raises(ConfigError):
        GridSpec(*args)


def test_parseval_and_round_trip(rng):
    g = GridSpec(2, 16, 2.5)
    u = VectorField.random(g, rng)
    uh = forward_transform(u)
    assert uh.is_conjugate_symmetric()
    lhs = u.norm() ** 2
    rhs = np.sum(np.abs(uh.coefficients) ** 2) / g.L**2
    assert lhs == pytest.approx(rhs, rel=1e-13)
    back = inverse_transform(uh)
    np.testing.assert_allclose(back.values, u.values, atol=1e-13)


def test_transform_of_constant_is_integral():
    g = GridSpec(3, 8, 2.0)
    u = VectorField(g, np.ones(g.shape + (3,)) * [1.0, 2.0, 3.0])
    c = forward_transform(u).coefficients
    np.testing.assert_allclose(c[0, 0, 0].real, np.array([1.0, 2.0, 3.0]) * 8.0)
    assert np.abs(c.reshape(-1, 3)[1:]).max() < 1e-12


def test_single_mode_sobolev_norms():
    g = GridSpec(2, 32, 2.0)
    k = (3, -2)
    u = single_mode(g, k, (0.6, 0.8))
    n = sobolev_norms(u, 0.3)
    base = math.sqrt(g.L**2 / 2)  # ||cos||_{L2} times |amp| = 1
    q = 2 * math.pi * math.hypot(*k) / g.L
    assert n.l2 == pytest.approx(base, rel=1e-12)
    assert n.ds == pytest.approx(q**0.3 * base, rel=1e-12)
    assert n.d2s == pytest.approx(q**0.6 * base, rel=1e-12)
    assert n.bessel_2s == pytest.approx((1 + q * q) ** 0.3 * base, rel=1e-12)
    assert u.norm() == pytest.approx(base, rel=1e-12)


def test_sobolev_requires_fractional_order(rng):
    u = VectorField.random(GridSpec(2, 8), rng)
    with pytest.raises(UsageError):
        sobolev_norms(u, 1.0)


def test_bessel_potential_of_mode():
    g = GridSpec(2, 16)
    u = single_mode(g, (1, 2), (1.0, 0.0))
    q2 = (2 * math.pi) ** 2 * 5
    np.testing.assert_allclose(bessel_potential(u, 0.5).values, math.sqrt(1 + q2) * u.values, atol=1e-11)


def test_lp_norms():
    g = GridSpec(2, 8, 2.0)
    u = VectorField(g, np.ones(g.shape + (2,)) * [3.0, 4.0])
    assert lp_norm(u, 1) == pytest.approx(5.0 * 4.0)
    assert lp_norm(u, 2) == pytest.approx(5.0 * 2.0)
    assert lp_norm(u, np.inf) == pytest.approx(5.0)
    with pytest.raises(UsageError):
        lp_norm(u, 0.5)


def test_field_arithmetic_checks_grid(rng):
    a = VectorField.random(GridSpec(2, 8), rng)
    b = VectorField.random(GridSpec(2, 16), rng)
    with pytest.raises(UsageError):
        a + b
    assert (2 * a - a - a).norm() == 0.0
    with pytest.raises(UsageError):
        VectorField(GridSpec(2, 8), np.full((8, 8, 2), np.nan))
    with pytest.raises(UsageError):
        SpectralField(GridSpec(2, 8), np.zeros((8, 8, 3)))


def test_smooth_random_field_is_band_limited(rng):
    g = GridSpec(2, 32)
    u = VectorField.random(g, rng, smooth=3.0)
    c = np.abs(forward_transform(u).coefficients)
    k = np.linalg.norm(g.wavenumbers(), axis=-1)
    assert c[k > 15].max() < 1e-10 * c.max()


def test_field_io_round_trip(tmp_path, rng):
    g = GridSpec(3, 8, 1.5)
    u = VectorField.random(g, rng)
    paths = write_field(u, str(tmp_path / "u.field"))
    assert len(paths) == 2
    assert (tmp_path / "u.field.bin").stat().st_size == 8**3 * 3 * 8
    v = read_field(paths[0])
    assert v.grid == g
    np.testing.assert_array_equal(v.values, u.values)
    text = (tmp_path / "u.field").read_text()
    assert "endianness little" in text and "dtype float64" in text


def test_field_csv(tmp_path, rng):
    g = GridSpec(2, 8)
    u = VectorField.random(g, rng)
    p = write_field_csv(u, str(tmp_path / "u.csv"))
    rows = open(p).read().splitlines()
    assert rows[0] == "x,y,ux,uy"
    assert len(rows) == 65
    with pytest.raises(UsageError):
        write_field_csv(VectorField.zeros(GridSpec(2, 128)), str(tmp_path / "big.csv"))


@pytest.mark.parametrize("s", [0.1, 0.5, 0.9])
def test_bessel_and_homogeneous_weights_equivalent_per_mode(s):
    # (1 + q^{2s}) / (1 + q^2)^s lies in [1, 2^{1-s}], with the maximum at q = 1.
    from nonlocal_lame.field import bessel_weight, homogeneous_weight

    g = GridSpec(2, 64, 2 * math.pi)  # frequencies k / L, so q = |k| on this box
    ratio = (1.0 + homogeneous_weight(g, 2 * s)) / bessel_weight(g, s)
    assert ratio.min() >= 1.0 - 1e-14
    assert ratio.max() <= 2.0 ** (1.0 - s) * (1 + 1e-14)
    assert ratio.reshape(-1)[1] == pytest.approx(2.0 ** (1.0 - s), rel=1e-14)
    assert 2.0 ** (-s) <= ratio.min() and ratio.max() <= 2.0
