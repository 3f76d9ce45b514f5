import math

import numpy as np
import pytest

from nonlocal_lame.errors import ConfigError, UsageError
from nonlocal_lame.field import GridSpec, VectorField, lp_norm, read_field
from nonlocal_lame.kernel import ConeSpec, Modulation, SingularKernel
from nonlocal_lame.operator import OperatorHandle, TrigField
from nonlocal_lame.symbol import compute_lame_constants
from nonlocal_lame.wave import energy_ledger, equivalence_envelope, export_run, propagate, sqrt_energy_norm

S, LAM = 0.5, 1.0
K = np.array([3.0, 4.0])
E = K / 5.0


def fractional_op(lam=LAM):
    return OperatorHandle(SingularKernel.fractional(2, S), lam)


def longitudinal_frequency():
    c = compute_lame_constants(2, S)
    return math.sqrt((2 * math.pi * 5.0) ** (2 * S) * (c.l1 + c.l2) + LAM)


def mode(grid, vec, phase=0.0):
    return TrigField(1.0, [K], [np.exp(1j * phase) * np.asarray(vec, complex)]).grid_values(grid)


def random_state(grid, rng):
    return (VectorField.random(grid, rng, smooth=4.0), VectorField.random(grid, rng, smooth=4.0),
            VectorField.random(grid, rng, smooth=3.0))


def test_pure_mode_oscillates_at_its_frequency():
    grid = GridSpec(2, 16)
    w = longitudinal_frequency()
    u0 = mode(grid, E)
    traj = propagate(fractional_op(), u0, VectorField.zeros(grid), T=0.3, times=[0.0, 0.1, 0.3])
    for st in traj.states:
        assert (st.u - math.cos(w * st.t) * u0).norm() <= 1e-12 * u0.norm()
        assert (st.v + w * math.sin(w * st.t) * u0).norm() <= 1e-12 * w * u0.norm()


def test_constant_forcing_closed_form():
    grid = GridSpec(2, 16)
    w = longitudinal_frequency()
    f0 = mode(grid, E)
    st = propagate(fractional_op(), VectorField.zeros(grid), VectorField.zeros(grid), f0, T=0.7, times=[0.7])[0]
    ref = (1.0 - math.cos(w * 0.7)) / w**2 * f0
    assert (st.u - ref).norm() <= 1e-12 * ref.norm()


def test_harmonic_series_forcing_closed_form():
    grid = GridSpec(2, 16)
    w = longitudinal_frequency()
    W = 2.0
    f0 = mode(grid, E)
    T = 0.9
    st = propagate(fractional_op(), VectorField.zeros(grid), VectorField.zeros(grid),
                   lambda t: math.cos(W * t) * f0, T=T, times=[T])[0]
    ref = (math.cos(W * T) - math.cos(w * T)) / (w**2 - W**2) * f0
    assert (st.u - ref).norm() <= 1e-10 * ref.norm()


def test_energy_conserved_by_exact_stepper(rng):
    grid = GridSpec(2, 32)
    op = OperatorHandle(SingularKernel(2, 0.4, ConeSpec.cap((1.0, 0.0), 0.7), Modulation.quadratic(1.0, 0.5, (0.6, 0.8))), 0.5)
    u0, v0, f0 = random_state(grid, rng)
    for f in (None, f0):
        led = energy_ledger(propagate(op, u0, v0, f, T=1.0), op, f)
        assert led.drift < 1e-12
        assert len(led.t) == 11


def test_time_reversal(rng):
    grid = GridSpec(2, 32)
    op = fractional_op()
    u0, v0, _ = random_state(grid, rng)
    end = propagate(op, u0, v0, T=1.0, times=[1.0])[0]
    back = propagate(op, end.u, -1.0 * end.v, T=1.0, times=[1.0])[0]
    assert (back.u - u0).norm() <= 1e-12 * u0.norm()
    assert (back.v + v0).norm() <= 1e-12 * v0.norm()


def test_leapfrog_second_order(rng):
    grid = GridSpec(2, 32)
    op = fractional_op()
    u0, v0, f0 = random_state(grid, rng)
    exact = propagate(op, u0, v0, f0, T=1.0, times=[1.0])[0]
    errs = []
    for dt in (1 / 16, 1 / 32, 1 / 64):
        st = propagate(op, u0, v0, f0, T=1.0, times=[1.0], stepper="leapfrog", dt=dt)[0]
        errs.append(lp_norm(st.u - exact.u, np.inf))
    rates = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(rates) > 1.9


def test_leapfrog_cfl_and_step_errors(rng):
    grid = GridSpec(2, 16)
    op = fractional_op()
    u0, v0, _ = random_state(grid, rng)
    with pytest.raises(ConfigError, match="xi"):
        propagate(op, u0, v0, stepper="leapfrog", dt=0.5)
    with pytest.raises(ConfigError):
        propagate(op, u0, v0, T=1.0, times=[0.33], stepper="leapfrog", dt=1 / 64)
    with pytest.raises(ConfigError):
        propagate(op, u0, v0, stepper="leapfrog")
    with pytest.raises(ConfigError):
        propagate(op, u0, v0, stepper="rk4")
    with pytest.raises(ConfigError):
        propagate(op, u0, v0, T=1.0, times=[0.5, 0.2])


def test_odd_kernel_and_series_ledger_rejected(rng):
    grid = GridSpec(2, 16)
    u0, v0, f0 = random_state(grid, rng)
    odd = OperatorHandle(SingularKernel(2, 0.4, modulation=Modulation.linear(1.0, 0.5, (1.0, 0.0))), 1.0)
    with pytest.raises(UsageError):
        propagate(odd, u0, v0)
    op = fractional_op()
    traj = propagate(op, u0, v0, lambda t: f0, T=0.2)
    with pytest.raises(UsageError):
        energy_ledger(traj, op, f0)
    with pytest.raises(UsageError):
        propagate(op, u0, v0, forcing=3.0)


def test_equivalence_envelope_brackets_ratio(rng):
    grid = GridSpec(2, 32)
    op = OperatorHandle(SingularKernel(2, 0.5, ConeSpec.cap((1.0, 0.0), math.pi / 4)), 1.0)
    env = equivalence_envelope(op, grid)
    assert env.lower_theory == pytest.approx(0.2882464966330324, rel=1e-9)
    assert env.lower_theory <= env.c1 * (1 + 1e-9) and env.c1 <= env.c2
    from nonlocal_lame.field import sobolev_norms

    for _ in range(3):
        u = VectorField.random(grid, rng)
        n = sobolev_norms(u, 0.5)
        r = sqrt_energy_norm(op, u) / (n.ds**2 + n.l2**2)
        assert env.c1 * (1 - 1e-12) <= r <= env.c2 * (1 + 1e-12)


def test_export_run(tmp_path, rng):
    grid = GridSpec(2, 8)
    op = fractional_op()
    u0, v0, f0 = random_state(grid, rng)
    traj = propagate(op, u0, v0, f0, T=0.5, times=[0.0, 0.5])
    paths = export_run(traj, energy_ledger(traj, op, f0), str(tmp_path))
    assert len(paths) == 2 * 2 * 2 + 1
    np.testing.assert_array_equal(read_field(str(tmp_path / "state_0001_u.field")).values, traj[1].u.values)
    rows = (tmp_path / "ledger.csv").read_text().splitlines()
    assert rows[0] == "t,kinetic,elastic,mass,forcing,total" and len(rows) == 3
