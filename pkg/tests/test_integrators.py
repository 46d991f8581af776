import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gaussmag.averages import AverageEngine
from gaussmag.checks import suite_boris_rotation
from gaussmag.core import WavePacketState, l2_norm_squared
from gaussmag.errors import NonFiniteState
from gaussmag.fields import PenningField3D, TrigField2D
from gaussmag.integrators import (
    _check_finite,
    boris_full_step,
    boris_point_step,
    boris_rotate,
    bootstrap,
    extrapolate,
    mrk4_step,
    rk4_step,
)
from gaussmag.scenarios import run_trajectory, sublinear_initial

vec3 = arrays(np.float64, 3, elements=st.floats(-10, 10))


@settings(max_examples=50, deadline=None)
@given(v=vec3, b=vec3, tau=st.floats(1e-4, 2.0))
def test_boris_rotation_implicit_relation(v, b, tau):
    vp = boris_rotate(v, b, tau)
    assert np.allclose(vp - v, 0.5 * tau * np.cross(vp + v, b), atol=1e-12 * (1 + np.abs(v).max()) * (1 + tau * np.abs(b).max()))
    assert np.linalg.norm(vp) == pytest.approx(np.linalg.norm(v), rel=1e-13, abs=1e-13)


def test_boris_rotation_suite():
    for label, ok, detail in suite_boris_rotation(11):
        assert ok, (label, detail)


def test_boris_rotation_angle():
    # rotation angle 2 arctan(tau |b| / 2) about b
    b = np.array([0.0, 0.0, 3.0])
    tau = 0.2
    vp = boris_rotate(np.array([1.0, 0.0, 0.0]), b, tau)
    ang = 2 * np.arctan(0.5 * tau * 3.0)
    assert np.allclose(vp, [np.cos(ang), -np.sin(ang), 0.0])


def test_boris_point_step_uniform_acceleration():
    # B = 0: leapfrog is exact for constant E
    q, v = np.zeros(3), np.array([1.0, 0.0, 0.0])
    E, tau = np.array([0.0, -2.0, 0.5]), 0.1
    q1, v1 = boris_point_step(q, v, E, np.zeros(3), tau)
    assert np.allclose(v1, v + tau * E)
    assert np.allclose(q1, q + tau * v + tau**2 * E)


def test_extrapolate_is_exact_for_linear_data():
    f = lambda t: 3.0 - 2.0 * t
    assert extrapolate(f(-0.5), f(-1.5)) == pytest.approx(f(0.0))


def test_rk4_order():
    errs = []
    for tau in (0.1, 0.05):
        y, t = np.array([1.0]), 0.0
        for _ in range(int(round(1 / tau))):
            y = rk4_step(lambda t, y: np.cos(t) * y, y, tau, t)
            t += tau
        errs.append(abs(y[0] - np.exp(np.sin(1.0))))
    assert np.log2(errs[0] / errs[1]) == pytest.approx(4.0, abs=0.15)


def test_bootstrap_matches_fine_mrk4():
    model, eng = TrigField2D(1.0), AverageEngine()
    s0 = sublinear_initial(1e-2)
    tau = 0.01
    st_ = bootstrap(s0, tau, model, eng)
    ref_half = s0
    for _ in range(50):
        ref_half = mrk4_step(ref_half, tau / 100, model, eng)
    assert st_.n == 1 and st_.t_n == pytest.approx(tau)
    assert np.allclose(st_.v_half, ref_half.v, atol=1e-12)
    assert np.allclose(st_.Ups_half, ref_half.Upsilon, atol=1e-12)
    with pytest.raises(ValueError):
        bootstrap(s0, tau, model, eng, substeps=3)


def test_boris_conserves_norm_exactly():
    model, eng = TrigField2D(0.0), AverageEngine()
    s0 = sublinear_initial(1e-2)
    tr = run_trajectory(s0, model, "boris", 0.05, 2.0, eng)
    n = np.array([l2_norm_squared(s) for s in tr.states])
    assert np.max(np.abs(n - 1.0)) < 1e-12


def test_mrk4_conserves_norm_exactly():
    model, eng = TrigField2D(1.0), AverageEngine()
    s = sublinear_initial(1e-2)
    for _ in range(20):
        s = mrk4_step(s, 0.05, model, eng)
    assert l2_norm_squared(s) == pytest.approx(1.0, abs=1e-13)


def test_boris_second_order():
    model, eng = TrigField2D(1.0), AverageEngine()
    s0 = sublinear_initial(1e-2)
    ref = run_trajectory(s0, model, "mrk4", 1e-3, 1.0, eng)
    errs = []
    for tau in (0.02, 0.01):
        tr = run_trajectory(s0, model, "boris", tau, 1.0, eng)
        errs.append(np.max(np.abs(tr.states[-1].q - ref.states[-1].q)))
    assert np.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.2)


def test_boris_exact_rotation_for_constant_field():
    # Penning-like linear field with phi = 0: pure gyration, |v| conserved
    model = PenningField3D(5.0, 0.0)
    Q = np.eye(3, dtype=complex)
    s0 = WavePacketState(0.01, 0.0, [0.1, 0.0, 0.0], [0.0, 1.0, 0.3], Q, 1j * Q)
    s = bootstrap(s0, 0.05, model)
    speed = np.linalg.norm(s.v_half)
    for _ in range(100):
        s = boris_full_step(s, model)
    assert np.linalg.norm(s.v_half) == pytest.approx(speed, rel=1e-13)


def test_nonfinite_detection():
    with pytest.raises(NonFiniteState):
        _check_finite(np.array([1.0, np.inf]))
