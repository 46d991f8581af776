import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaussmag.errors import UnstableTrap
from gaussmag.fields import (
    PenningField3D,
    TrapParameters,
    TrigField2D,
    ZeroMagneticField,
    cross_with_field,
    field_derivatives,
    penning_scaling,
)

coords = st.floats(-3, 3, allow_nan=False)


def _fd(f, x, h=1e-5):
    """Central differences along each coordinate, derivative index appended last."""
    cols = []
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h))
    return np.stack(cols, axis=-1)


@settings(max_examples=25, deadline=None)
@given(x1=coords, x2=coords, t=st.floats(0, 5), alpha=st.sampled_from([0.0, 1.0, 0.3]))
def test_trig_derivatives_by_finite_differences(x1, x2, t, alpha):
    m = TrigField2D(alpha)
    x = np.array([x1, x2])
    assert np.allclose(m.J(t, x), _fd(lambda y: m.A(t, y), x), atol=1e-8)
    assert np.allclose(m.hessA(t, x), _fd(lambda y: m.J(t, y), x), atol=1e-8)
    assert np.allclose(m.d3A(t, x), _fd(lambda y: m.hessA(t, y), x), atol=1e-8)
    assert np.allclose(m.grad_phi(t, x), _fd(lambda y: m.phi(t, y), x), atol=1e-8)
    assert np.allclose(m.hess_phi(t, x), _fd(lambda y: m.grad_phi(t, y), x), atol=1e-8)
    h = 1e-5
    assert np.allclose(m.dtA(t, x), (m.A(t + h, x) - m.A(t - h, x)) / (2 * h), atol=1e-8)
    assert np.allclose(m.dtJ(t, x), (m.J(t + h, x) - m.J(t - h, x)) / (2 * h), atol=1e-8)


def test_trig_curl():
    m = TrigField2D(1.0)
    x = np.array([[0.3, -0.1], [1.0, 2.0]])
    s = x.sum(axis=1) + 0.5
    assert np.allclose(m.curl(0.5, x), -2 * np.cos(s))
    assert np.allclose(m.B3(0.5, x)[:, :2], 0.0)


def test_batch_shapes():
    m = TrigField2D()
    x = np.zeros((4, 5, 2))
    d = field_derivatives(m, 0.0, x)
    assert d["A"].shape == (4, 5, 2)
    assert d["hessA"].shape == (4, 5, 2, 2, 2)
    assert d["d3A"].shape == (4, 5, 2, 2, 2, 2)
    assert d["B"].shape == (4, 5)


def test_penning_field():
    m = PenningField3D(114.0, 113.0)
    x = np.array([0.1, -0.4, 0.7])
    assert np.allclose(m.curl(0.0, x), [0.0, 0.0, 114.0])
    assert np.allclose(m.B, [0.0, 0.0, 114.0])
    # harmonic electrostatic potential
    assert np.trace(m.hess_phi(0.0, x)) == pytest.approx(0.0)
    assert np.allclose(m.J(0.0, x), _fd(lambda y: m.A(0.0, y), x), atol=1e-8)
    assert np.allclose(m.grad_phi(0.0, x), _fd(lambda y: m.phi(0.0, y), x), atol=1e-6)
    with pytest.raises(ValueError):
        PenningField3D(1.0, 1.0, charge_sign=2)


def test_zero_magnetic_field():
    m = ZeroMagneticField(2, lambda x: 0.5 * (x**2).sum(-1), lambda x: x, lambda x: np.broadcast_to(np.eye(2), x.shape + (2,)))
    x = np.ones((3, 2))
    assert np.all(m.A(0.0, x) == 0) and m.hessA(0.0, x).shape == (3, 2, 2, 2)
    assert np.allclose(m.phi(0.0, x), 1.0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=2, max_size=2), st.floats(-5, 5))
def test_cross_2d_matches_embedding(w, b):
    w = np.array(w)
    full = np.cross(np.append(w, 0.0), [0.0, 0.0, b])
    assert np.allclose(cross_with_field(w, [0.0, 0.0, b], 2), full[:2])
    assert full[2] == 0.0


def test_cross_columns():
    rng = np.random.default_rng(0)
    W = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    B = rng.standard_normal(3)
    out = cross_with_field(W, B, 3)
    for j in range(3):
        assert np.allclose(out[:, j], np.cross(W[:, j], B))


def _sig(x, n):
    return f"{x:.{n - 1}e}"


def test_proton_scaling():
    sc = penning_scaling(TrapParameters.for_species("proton"))
    assert _sig(sc.eps, 3) == _sig(1.19e-8, 3)
    assert _sig(sc.nu_plus, 4) == _sig(76.299e6, 4)
    assert _sig(sc.nu_3, 4) == _sig(10.134e6, 4)
    assert _sig(sc.nu_minus, 4) == _sig(672.93e3, 4)
    # internal consistency: omega+ omega- = omega_3^2 / 2, omega+ + omega- = omega_c
    assert sc.omega_plus * sc.omega_minus == pytest.approx(0.5 * sc.omega_3**2, rel=1e-12)
    assert sc.omega_plus + sc.omega_minus == pytest.approx(sc.omega_c, rel=1e-12)
    assert sc.ratio_omega == pytest.approx(sc.omega_plus / sc.omega_minus)


def test_unstable_trap_and_validation():
    with pytest.raises(UnstableTrap):
        penning_scaling(TrapParameters.for_species("proton", phi0_V=1e6))
    with pytest.raises(ValueError):
        TrapParameters(-1.0, 1.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        TrapParameters.for_species("muon")
