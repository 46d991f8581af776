import numpy as np
import pytest

from gaussmag.checks import random_canonical_state, random_symplectic_pair
from gaussmag.core import (
    CanonicalState,
    WavePacketState,
    check_symplectic,
    evaluate_packet,
    imag_width,
    l2_norm_squared,
    log_abs_det,
    normalize_phase,
    packet_density,
    symplecticity_residual,
    to_canonical,
    to_magnetic,
    width_from_hagedorn,
)
from gaussmag.errors import DimensionError, SingularWidth, SymplecticityError


@pytest.mark.parametrize("d", [2, 3])
def test_width_symmetric_with_positive_imaginary_part(rng, d):
    Q, P = random_symplectic_pair(rng, d)
    C = width_from_hagedorn(Q, P)
    assert np.allclose(C, C.T, atol=1e-12)
    assert np.all(np.linalg.eigvalsh(C.imag) > 0)
    assert np.allclose(C @ Q, P)
    # C_I = (QQ^*)^{-1}
    assert np.allclose(C.imag, imag_width(Q), atol=1e-12)


@pytest.mark.parametrize("d", [2, 3])
def test_symplecticity_residual(rng, d):
    Q, P = random_symplectic_pair(rng, d)
    r1, r2 = symplecticity_residual(Q, P)
    assert r1 < 1e-12 and r2 < 1e-12
    r1, r2 = symplecticity_residual(Q, 1.01 * P)
    assert r2 > 1e-3


def test_check_symplectic_levels(rng, caplog):
    Q, P = random_symplectic_pair(rng, 2)
    check_symplectic(Q, P)
    with pytest.raises(SymplecticityError):
        check_symplectic(Q, 1.1 * P)
    with caplog.at_level("WARNING"):
        check_symplectic(Q, 1.003 * P, warn=1e-3)
    assert "symplecticity" in caplog.text


def test_singular_width():
    Q = np.array([[1.0, 2.0], [2.0, 4.0]], dtype=complex)
    with pytest.raises(SingularWidth):
        width_from_hagedorn(Q, 1j * np.eye(2))
    with pytest.raises(SingularWidth):
        width_from_hagedorn(np.full((2, 2), np.nan), np.eye(2))


def test_dimension_validation():
    with pytest.raises(DimensionError):
        WavePacketState(0.1, 0.0, np.zeros(4), np.zeros(4), np.eye(4), np.eye(4))
    with pytest.raises(DimensionError):
        WavePacketState(0.1, 0.0, np.zeros(2), np.zeros(3), np.eye(2), np.eye(2))
    with pytest.raises(ValueError):
        CanonicalState(-1.0, 0.0, np.zeros(2), np.zeros(2), np.eye(2), np.eye(2))


def test_norm_formula_against_grid_integration(rng):
    # independent: Riemann sum of |u|^2 on a fine grid
    s = random_canonical_state(rng, 2, 0.1, normalized=False)
    sig = np.sqrt(0.1 * np.max(np.linalg.eigvalsh((s.Q @ s.Q.conj().T).real)))
    g = np.linspace(-10 * sig, 10 * sig, 801)
    X = np.stack(np.meshgrid(g + s.q[0], g + s.q[1], indexing="ij"), axis=-1)
    dens = np.abs(evaluate_packet(s, X)) ** 2
    integral = dens.sum() * (g[1] - g[0]) ** 2
    assert integral == pytest.approx(l2_norm_squared(s), rel=1e-8)


def test_density_matches_packet(rng):
    s = random_canonical_state(rng, 3, 0.05, normalized=False)
    X = s.q + 0.2 * rng.standard_normal((7, 3))
    assert np.allclose(packet_density(s, X), np.abs(evaluate_packet(s, X)) ** 2, rtol=1e-10)


def test_normalize_phase(rng):
    s = random_canonical_state(rng, 3, 1e-3, normalized=False)
    assert l2_norm_squared(normalize_phase(s)) == pytest.approx(1.0, rel=1e-12)


def test_log_abs_det(rng):
    Q, _ = random_symplectic_pair(rng, 3)
    assert log_abs_det(Q) == pytest.approx(np.log(abs(np.linalg.det(Q))), rel=1e-12)
    assert log_abs_det(1e-200 * Q) == pytest.approx(log_abs_det(Q) + 3 * np.log(1e-200))


def test_magnetic_canonical_round_trip(rng):
    c = random_canonical_state(rng, 2, 0.01)
    A = rng.standard_normal(2)
    J = rng.standard_normal((2, 2))
    m = to_magnetic(c, A, J)
    assert np.allclose(m.v, c.p - A)
    assert np.allclose(m.Upsilon, c.P - J @ c.Q)
    back = to_canonical(m, A, J)
    assert np.allclose(back.p, c.p) and np.allclose(back.P, c.P)
    assert back.zeta == c.zeta


def test_evaluate_packet_needs_no_averages_for_canonical(rng):
    c = random_canonical_state(rng, 2, 0.01)
    m = to_magnetic(c, np.zeros(2), np.zeros((2, 2)))
    x = c.q + 0.01
    assert evaluate_packet(c, x) == pytest.approx(evaluate_packet(m, x))
