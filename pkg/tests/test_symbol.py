import math

import numpy as np
import pytest

from nonlocal_lame.errors import SolverError, UsageError
from nonlocal_lame.field import GridSpec
from nonlocal_lame.kernel import ConeSpec, check_cancellation, IntegrableKernel, Modulation, SingularKernel
from nonlocal_lame.symbol import (
    analytic_fraclame_symbol,
    analytic_table,
    compute_lame_constants,
    kernel_symbol,
    lame_constants_closed_form,
    marcinkiewicz_check,
    multiplier_m1_m2,
    psi_min,
    radial_symbol_eigenvalues,
    resolvent_symbol,
    rotation_to_e1,
    symbol_table,
    symbol_upper_bound_check,
)

# Frozen from tests/oracles.py (fractional_constants_2d: mpmath radial constant
# times adaptive angular quadrature).
LAME_2D = {
    0.25: (4.805267502978014, 2.402633751439857),
    0.5: (2.0943951023931957, 2.094395102393194),
    0.75: (1.6692123436729314, 2.5038185155792125),
}

# Frozen from tests/oracles.py (brute_symbol_2d, nested adaptive quadrature of
# the defining integral).
BRUTE = [
    (lambda: SingularKernel(2, 0.3, ConeSpec.cap((1.0, 0.0), 0.5), Modulation.linear(1, 0.5, (0.6, 0.8)), r=0.15),
     (3.0, -2.0),
     [[11.880772507219271 - 8.793748884732013j, -0.9772032205924238 - 0.6364989891384226j],
      [-0.9772032205924238 - 0.6364989891384226j, 0.9692826811829856 - 0.6628137658096409j]]),
    (lambda: SingularKernel(2, 0.3, ConeSpec.cap((1.0, 0.0), 0.5), Modulation.linear(1, 0.5, (0.6, 0.8)), r=0.15),
     (0.7, 5.1),
     [[3.7498376681272805 - 4.145048285138011j, 0.7615164990817643 - 1.5952777312814415j],
      [0.7615164990817643 - 1.5952777312814415j, 0.5335585375809746 - 0.4576827051689004j]]),
    (lambda: SingularKernel(2, 0.75, modulation=Modulation.linear(1, 0.5, (0.6, 0.8)), r=0.4),
     (2.5, 1.5),
     [[266.9568365485115 + 51.92640663695701j, 86.54854418546775 + 27.746516287576057j],
      [86.54854418546775 + 27.746516287576057j, 174.6383894173446 + 38.67741179917766j]]),
    (lambda: IntegrableKernel.sector(2, (0.0, 1.0), 0.7, 0.1, 2.0),
     (4.0, 3.0),
     [[0.20062893493087122 - 0.14367989789788588j, 0.32142924267355855 - 0.12118411687760637j],
      [0.32142924267355855 - 0.12118411687760637j, 1.1840706376277315 - 1.1409529947281003j]]),
]

# Frozen from tests/oracles.py (even_power_symbol_2d).
EVEN_CAP_QUADRATIC = [[6.864500577718982, 9.574080089486486], [9.574080089486486, 23.072029731667016]]

# Frozen from tests/oracles.py (brute_psi_min_2d), d = 2, s = 1/2.
PSI_CAP = {math.pi / 4: 0.2882464966330324, math.pi / 12: 0.004442835770630977}


@pytest.mark.parametrize("s", sorted(LAME_2D))
def test_lame_constants_match_oracle(s):
    c = compute_lame_constants(2, s)
    l1, l2 = LAME_2D[s]
    assert c.l1 == pytest.approx(l1, rel=1e-10)
    assert c.l2 == pytest.approx(l2, rel=1e-10)
    closed = lame_constants_closed_form(2, s)
    assert c.l1 == pytest.approx(closed.l1, rel=1e-12)


def test_lame_constants_half_closed_forms():
    c2 = lame_constants_closed_form(2, 0.5)
    assert c2.l1 == pytest.approx(2 * math.pi / 3, rel=1e-14)
    assert c2.l2 == pytest.approx(2 * math.pi / 3, rel=1e-14)
    c3 = compute_lame_constants(3, 0.5)
    assert c3.l1 == pytest.approx(math.pi**2 / 4, rel=1e-10)


@pytest.mark.parametrize("case", range(len(BRUTE)))
def test_kernel_symbol_matches_brute_force(case):
    make, xi, ref = BRUTE[case]
    M, err = kernel_symbol(make(), np.array([xi]))
    np.testing.assert_allclose(M[0], np.array(ref), rtol=0, atol=1e-9 * np.abs(ref).max())


def test_even_cap_symbol_matches_angular_oracle():
    k = SingularKernel(2, 0.5, ConeSpec.cap((0.6, 0.8), 0.6), Modulation.quadratic(1.0, 0.5, (1.0, 0.0)))
    M, _ = kernel_symbol(k, np.array([[1.5, -2.5]]))
    np.testing.assert_allclose(M[0], EVEN_CAP_QUADRATIC, rtol=1e-12)


def test_symbol_real_part_is_positive_semidefinite(rng):
    k = SingularKernel(2, 0.6, ConeSpec.cap((0.6, 0.8), 0.4), Modulation.linear(1.0, 0.5, (1.0, 0.0)), r=0.5)
    xi = rng.normal(size=(20, 2)) * 4
    M, _ = kernel_symbol(k, xi)
    assert np.linalg.eigvalsh(M.real).min() >= -1e-12
    np.testing.assert_allclose(M, np.swapaxes(M, 1, 2), atol=1e-12)


def test_symbol_vanishes_at_origin():
    k = SingularKernel(2, 0.5, ConeSpec.cap((1.0, 0.0), 0.5))
    M, _ = kernel_symbol(k, np.zeros((1, 2)))
    assert np.abs(M).max() == 0.0


def test_cancellation_moments_detect_odd_modulation():
    odd = SingularKernel(2, 0.5, modulation=Modulation.linear(1.0, 0.5, (1.0, 0.0)))
    even = SingularKernel(2, 0.5, ConeSpec.cap((0.6, 0.8), 0.6), Modulation.quadratic(1.0, 0.5, (1.0, 0.0)))
    assert not check_cancellation(odd, [0.5, 1.0]).passed
    assert check_cancellation(even, [0.5, 1.0]).passed
    with pytest.raises(UsageError):
        check_cancellation(IntegrableKernel.gaussian(2, 0.1), [1.0])


def test_symbol_table_conjugate_symmetric_and_nyquist_real():
    k = SingularKernel(2, 0.3, ConeSpec.cap((1.0, 0.0), 0.5), Modulation.linear(1, 0.5, (0.6, 0.8)), r=0.15)
    g = GridSpec(2, 16, 1.0)
    tbl = symbol_table(k, g)
    M = tbl.M.reshape(-1, 2, 2)
    np.testing.assert_allclose(M, np.conj(M[g.negated_index()]), atol=1e-13)
    assert tbl.structure == "complex-symmetric"


def test_analytic_table_agrees_with_quadrature_table():
    g = GridSpec(2, 16, 2.0)
    a = analytic_table(compute_lame_constants(2, 0.4), g)
    q = symbol_table(SingularKernel.fractional(2, 0.4), g)
    np.testing.assert_allclose(q.M, a.M, atol=1e-9 * np.abs(a.M).max())


@pytest.mark.parametrize("half", sorted(PSI_CAP))
def test_psi_min_caps(half):
    assert psi_min(ConeSpec.cap((1.0, 0.0), half), 0.5).value == pytest.approx(PSI_CAP[half], rel=1e-10)


def test_psi_min_full_cone_is_l1():
    assert psi_min(ConeSpec.full(2), 0.5).value == pytest.approx(2 * math.pi / 3, rel=1e-12)


def test_radial_eigenvalues_and_rotation(rng):
    k = IntegrableKernel.gaussian(2, 0.05)
    xi = np.array([[3.0, 4.0]])
    lon, tra = radial_symbol_eigenvalues(k, xi)
    M, _ = kernel_symbol(k, xi)
    R = rotation_to_e1(xi[0])
    D = R @ M[0].real @ R.T
    assert D[0, 0] == pytest.approx(lon[0], rel=1e-10)
    assert D[1, 1] == pytest.approx(tra[0], rel=1e-10)
    assert abs(D[0, 1]) < 1e-10 * abs(D).max()


def test_resolvent_zero_mode_rules():
    g = GridSpec(2, 8, 1.0)
    tbl = analytic_table(compute_lame_constants(2, 0.5), g)
    with pytest.raises(SolverError):
        resolvent_symbol(tbl, 0.0)
    inv = resolvent_symbol(tbl, 0.0, exclude_zero=True)
    assert np.all(inv[0, 0] == 0.0)
    inv = resolvent_symbol(tbl, 2.0)
    np.testing.assert_allclose(inv[0, 0], np.eye(2) / 2.0)


def test_analytic_symbol_structure():
    c = compute_lame_constants(2, 0.5)
    xi = np.array([0.0, 0.5])
    M = analytic_fraclame_symbol(c, xi).M
    scale = math.pi
    np.testing.assert_allclose(M, scale * np.array([[c.l1, 0.0], [0.0, c.l1 + c.l2]]), rtol=1e-14)


def test_multipliers_bounds(rng):
    c = compute_lame_constants(2, 0.5)
    xi = rng.normal(size=(100, 2)) * 10.0
    m1, m2 = multiplier_m1_m2(c, 1.0, xi)
    assert np.all(m1 > 0.0) and np.all((m2 >= 0.0) & (m2 < 1.0))
    with pytest.raises(UsageError):
        multiplier_m1_m2(c, 0.0, xi)


def test_marcinkiewicz_check_passes_for_m1():
    rep = marcinkiewicz_check("m1", compute_lame_constants(2, 0.5), 1.0)
    assert rep.verdict
    assert rep.metadata["m2_limit"] == pytest.approx(0.5)


def test_upper_bound_check_fractional_ratio():
    k = SingularKernel.fractional(2, 0.5)
    rep = symbol_upper_bound_check(k, t_samples=(1.0,))
    c = compute_lame_constants(2, 0.5)
    # Frobenius norm of diag(l1 + l2, l1)
    assert rep.sup == pytest.approx(math.hypot(c.l1 + c.l2, c.l1), rel=1e-8)
    assert rep.passed
