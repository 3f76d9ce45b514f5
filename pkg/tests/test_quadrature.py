import math

import mpmath as mp
import numpy as np
import pytest

from nonlocal_lame.quadrature import (
    Cap,
    caps_to_arcs,
    circle_rule,
    expint_nu,
    gauss_legendre,
    graded_rule,
    merge_circle_arcs,
    power_profile,
    sphere_rule,
)
from nonlocal_lame.symbol import fractional_radial_constant


def test_gauss_legendre_exact_for_polynomials():
    x, w = gauss_legendre(8)
    for p in range(16):
        assert np.sum(w * x**p) == pytest.approx(1.0 / (p + 1), rel=1e-14)


def test_graded_rule_converges_on_endpoint_singularity():
    errs = []
    for n in (10, 20, 40, 80):
        t, w = graded_rule(0.0, 1.0, n)
        errs.append(abs(np.sum(w * np.log(t)) + 1.0))
    assert errs[-1] < 1e-10
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_merge_circle_arcs_wraps_and_merges():
    # [6, 6.5] wraps past 2 pi and joins [0, 2]; the union is [0, 2] u [6, 2 pi].
    arcs = merge_circle_arcs([(0.0, 1.0), (0.5, 2.0), (6.0, 6.5)])
    assert arcs[0] == (0.0, 2.0)
    assert arcs[-1] == pytest.approx((6.0, 2 * math.pi))
    assert sum(b - a for a, b in arcs) == pytest.approx(2.0 + 2 * math.pi - 6.0, rel=1e-14)


def test_circle_rule_measures_double_cap():
    caps = (Cap((1.0, 0.0), 0.3), Cap((-1.0, 0.0), 0.3))
    ang, w = circle_rule(caps_to_arcs(caps), 128)
    assert np.sum(w) == pytest.approx(1.2, rel=1e-12)


def test_sphere_rule_cap_area():
    caps = (Cap((0.0, 0.0, 1.0), 0.4), Cap((0.0, 0.0, -1.0), 0.4))
    th, w = sphere_rule(caps, np.array([0.6, 0.0, 0.8]), 32)
    assert np.sum(w) == pytest.approx(2 * 2 * math.pi * (1 - math.cos(0.4)), rel=1e-10)


@pytest.mark.parametrize("nu,z", [(0.5, 0.3), (1.5, 2.5), (2.25, 7.0), (2.0, 1.0), (1.25, 1e-3)])
def test_expint_nu_matches_mpmath(nu, z):
    ref = float(mp.expint(nu, z))
    assert float(np.real(expint_nu(nu, np.array([z]))[0])) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_power_profile_real_part_is_homogeneous(s):
    a = np.array([0.01, 0.3, 1.0, 7.5, 300.0])
    re = power_profile(s).symbol(a).real
    np.testing.assert_allclose(re, fractional_radial_constant(s) * a ** (2 * s), rtol=1e-12)


def test_radial_constant_against_mpmath_oracle():
    from oracles import radial_constant_mp

    for s in (0.1, 0.25, 0.5, 0.75, 0.9):
        assert fractional_radial_constant(s) == pytest.approx(radial_constant_mp(s), rel=1e-13)
