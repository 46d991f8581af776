import numpy as np
import pytest

from gaussmag.averages import (
    AverageEngine,
    analytic_trig_average,
    default_mode,
    gauss_hermite_grid,
    point_averages,
    trig_averages,
)
from gaussmag.checks import random_canonical_state, suite_gaussian_calculus
from gaussmag.core import l2_norm_squared, width_covariance
from gaussmag.errors import CapabilityError, EvaluationError
from gaussmag.fields import PenningField3D, TrigField2D


def test_grid_weights_and_moments():
    Y, W = gauss_hermite_grid(2, 8)
    assert W.sum() == pytest.approx(1.0)
    # normalized weight exp(-|y|^2)/pi: E[y1^2] = 1/2, E[y1^4] = 3/4
    assert W @ Y[:, 0] ** 2 == pytest.approx(0.5)
    assert W @ Y[:, 1] ** 4 == pytest.approx(0.75)
    with pytest.raises(ValueError):
        Y[0, 0] = 1.0


def test_mean_and_covariance(rng):
    s = random_canonical_state(rng, 3, 0.05, normalized=False)
    eng = AverageEngine(quad_order=6)
    assert np.allclose(eng.normalized_mean(lambda X: X, s), s.q)
    cov = eng.normalized_mean(lambda X: np.einsum("ni,nj->nij", X - s.q, X - s.q), s)
    assert np.allclose(cov, 0.5 * s.eps * width_covariance(s.Q), rtol=1e-10)
    assert eng.mean(lambda X: np.ones(len(X)), s) == pytest.approx(l2_norm_squared(s))


def test_nonfinite_integrand(rng):
    s = random_canonical_state(rng, 2, 0.05)
    with pytest.raises(EvaluationError):
        AverageEngine().normalized_mean(lambda X: np.full(len(X), np.nan), s)


@pytest.mark.parametrize("kind", ["sin", "cos"])
def test_trig_closed_form_against_quadrature(rng, kind):
    s = random_canonical_state(rng, 2, 0.3, normalized=False)
    f = np.sin if kind == "sin" else np.cos
    quad = AverageEngine(quad_order=40).mean(lambda X: f(X[:, 0] + X[:, 1] + 0.7 * 1.3), s)
    assert analytic_trig_average(s, 0.7, 1.3, kind) == pytest.approx(quad, rel=1e-12)


@pytest.mark.parametrize("eps", [1e-3, 0.05, 0.5])
def test_trig_field_averages_dual_route(rng, eps):
    s = random_canonical_state(rng, 2, eps).replace(t=0.4)
    model = TrigField2D(1.0)
    a = trig_averages(s, model)
    b = AverageEngine("quadrature", quad_order=40).averages(model, s)
    for name in ("A", "dtA", "J", "dtJ", "H", "T3", "phi", "gphi", "hphi", "A2", "JtA", "JtJ", "HA", "B"):
        assert np.allclose(getattr(a, name), getattr(b, name), rtol=1e-11, atol=1e-13), name
    assert a.mass == pytest.approx(b.mass)


def test_point_averages_dual_route(rng):
    s = random_canonical_state(rng, 3, 0.2)
    model = PenningField3D(114.0, 113.0)
    a = point_averages(s, model)
    b = AverageEngine("quadrature", quad_order=6).averages(model, s)
    for name in ("A", "J", "phi", "gphi", "hphi", "A2", "JtA", "JtJ", "B"):
        assert np.allclose(getattr(a, name), getattr(b, name), rtol=1e-11, atol=1e-11), name


def test_mode_selection():
    assert default_mode(TrigField2D()) == "analytic"
    assert default_mode(PenningField3D(2.0, 0.5)) == "point"
    with pytest.raises(CapabilityError):
        AverageEngine("point").resolve_mode(TrigField2D())
    with pytest.raises(CapabilityError):
        AverageEngine("analytic").resolve_mode(PenningField3D(2.0, 0.5))
    with pytest.raises(ValueError):
        AverageEngine("exact")


@pytest.mark.parametrize("seed", [0, 7])
def test_gaussian_calculus_identities(seed):
    (label, ok, detail), = suite_gaussian_calculus(seed)
    assert ok, detail
