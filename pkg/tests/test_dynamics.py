import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lambda_memory.darkspace import static_structure
from lambda_memory.dynamics import (
    AdiabaticCrossingError,
    PulseSchedule,
    StepSizeError,
    adiabatic_path,
    adiabatic_propagator,
    compare_adiabatic,
    evolve,
    omega_profiles,
    uhlmann_fidelity,
)
from lambda_memory.memory import AtomicDensityMatrix, PolarizationQubit, initial_state


@pytest.fixture
def rho0(rb_pi):
    return initial_state(rb_pi, AtomicDensityMatrix.pure(2, 0), PolarizationQubit.normalized(0.6, 0.8j))


def test_schedule_validation():
    with pytest.raises(ValueError):
        PulseSchedule(t1=0)
    with pytest.raises(ValueError):
        PulseSchedule(t1=1, tau=-1)
    with pytest.raises(ValueError):
        PulseSchedule(t1=1, omega_a1=-1)
    with pytest.raises(ValueError):
        PulseSchedule(t1=1, shape="gauss")


def test_profile_endpoints():
    s = PulseSchedule(t1=10, tau=2, t2=5, omega_a1=1.0, omega_b1=2.0, omega_a2=3.0, omega_b2=4.0)
    assert omega_profiles(s, 0) == pytest.approx((1.0, 0.0))
    assert omega_profiles(s, 5) == pytest.approx((0.5, 1.0))
    assert omega_profiles(s, 10) == pytest.approx((0.0, 2.0))
    assert omega_profiles(s, 11) == pytest.approx((0.0, 3.0))
    assert omega_profiles(s, 12) == pytest.approx((0.0, 4.0))
    assert omega_profiles(s, 17) == pytest.approx((3.0, 0.0))
    with pytest.raises(ValueError):
        omega_profiles(s, 17.5)


def test_linear_shape():
    s = PulseSchedule(t1=4, shape="linear")
    assert omega_profiles(s, 1) == pytest.approx((0.75, 0.25))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 10), st.floats(0, 5), st.one_of(st.just(0.0), st.floats(0.1, 10)), st.sampled_from(["sin2", "linear"]))
def test_profiles_continuous(t1, tau, t2, shape):
    s = PulseSchedule(t1=t1, tau=tau, t2=t2, omega_b2=1.0, shape=shape)
    eps = 1e-9
    for t in [x for x in (t1, t1 + tau) if 0 < x < s.total]:
        lo, hi = omega_profiles(s, t - eps), omega_profiles(s, t + eps)
        assert lo == pytest.approx(hi, abs=1e-6)
    for t in np.linspace(0, s.total, 7):
        wa, wb = omega_profiles(s, t)
        assert 0 <= wa <= 1 + 1e-12 and 0 <= wb <= 1 + 1e-12


def test_step_size_guard(rb_pi, rho0):
    with pytest.raises(StepSizeError):
        evolve(rb_pi, PulseSchedule(t1=10, omega_a1=10.0), rho0, dt=0.01)


def test_zero_field_is_flat(rb_pi, rho0):
    s = PulseSchedule(t1=10, omega_a1=0, omega_b1=0)
    res = evolve(rb_pi.with_delta(0.3), s, rho0, dt=0.05, samples_per_stage=5)
    assert np.allclose(res.final, rho0, atol=1e-14)
    assert all(smp.pop_b == pytest.approx(1) for smp in res.samples)


def test_rk4_conserves_and_converges(rb_pi, rho0):
    s = PulseSchedule(t1=10)
    ref = evolve(rb_pi, s, rho0, dt=0.005, samples_per_stage=1)
    assert ref.max_trace_drift < 1e-12 and ref.max_hermiticity_drift < 1e-12
    errs = [np.abs(evolve(rb_pi, s, rho0, dt=h, samples_per_stage=1).final - ref.final).max() for h in (0.04, 0.02)]
    order = math.log2(errs[0] / errs[1])
    assert 3.5 < order < 4.5


def test_sample_grid(rb_pi, rho0):
    s = PulseSchedule(t1=4, tau=1, t2=4)
    res = evolve(rb_pi, s, rho0, dt=0.05, samples_per_stage=4)
    assert len(res.samples) == 1 + 3 * 4
    assert res.samples[-1].time == pytest.approx(9)
    assert res.steps >= 9 / 0.05


def test_adiabatic_propagator_maps_b_to_minus_a(rb_pi):
    s = PulseSchedule(t1=50)
    u = adiabatic_propagator(rb_pi, s, s.t1, n_steps=400)
    assert np.allclose(u.conj().T @ u, np.eye(14), atol=1e-10)
    idx = rb_pi.basis
    st_ = static_structure(rb_pi)
    b_full = idx.embed(st_.b_states, "b")
    a_full = idx.embed(st_.a_states, "a")
    assert np.allclose(u @ b_full, -a_full, atol=1e-8)
    assert np.allclose(adiabatic_propagator(rb_pi, s, 0.0), np.eye(14))
    with pytest.raises(ValueError):
        adiabatic_propagator(rb_pi, s, s.t1, n_steps=10)


def test_undersampled_path_reports_crossing(rb_pi):
    with pytest.raises(AdiabaticCrossingError) as err:
        adiabatic_path(rb_pi, PulseSchedule(t1=100), np.array([0.0, 40.0, 100.0]))
    assert err.value.time > 0


def test_uhlmann_fidelity():
    psi = np.array([1, 1j]) / math.sqrt(2)
    phi = np.array([1, 0])
    assert uhlmann_fidelity(np.outer(psi, psi.conj()), np.outer(phi, phi)) == pytest.approx(0.5)
    mixed = np.eye(2) / 2
    assert uhlmann_fidelity(mixed, mixed) == pytest.approx(1)


def test_compare_adiabatic_short(rb_pi, rho0):
    c = compare_adiabatic(rb_pi, PulseSchedule(t1=100), rho0, dt=0.02, samples_per_stage=20)
    assert c.fidelity_trace[0] == pytest.approx(1)
    assert len(c.fidelity_trace) == 21
    assert 0.98 < c.fidelity < 0.995
    assert c.leak_weight == pytest.approx(1 - c.evolution.samples[-1].pop_a)
    assert c.trace_distance == pytest.approx(math.sqrt(1 - c.fidelity), abs=1e-9)
