"""Gaussian averages of field quantities.

Three evaluation modes share one interface:

``quadrature``  tensor Gauss-Hermite rule after an affine change of variables,
``analytic``    closed forms for :class:`~gaussmag.fields.TrigField2D`,
``point``       exact point evaluations for linear ``A`` and quadratic ``phi``.

:meth:`AverageEngine.mean` integrates against the unnormalized density
``|u|^2`` (the result carries the factor ``exp(-2 zeta_I/eps)``).
:meth:`AverageEngine.averages` returns the bundle of *normalized* field
averages consumed by the equations of motion.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from gaussmag.core import l2_norm_squared, width_covariance
from gaussmag.errors import CapabilityError, DimensionError, EvaluationError
from gaussmag.fields import FieldModel, TrigField2D

MODES = ("quadrature", "analytic", "point")


@lru_cache(maxsize=None)
def gauss_hermite_grid(d: int, order: int):
    """Tensor Gauss-Hermite nodes ``(n, d)`` and weights normalized to sum one."""
    y, w = np.polynomial.hermite.hermgauss(order)
    w = w / np.sqrt(np.pi)
    Y = np.array(list(product(y, repeat=d)))
    W = np.prod(np.array(list(product(w, repeat=d))), axis=1)
    Y.setflags(write=False)
    W.setflags(write=False)
    return Y, W


@dataclass(frozen=True)
class FieldAverages:
    """Normalized averages over ``|u|^2 / ||u||^2`` at one state.

    Index conventions follow :mod:`gaussmag.fields`. Composite entries:
    ``A2 = <|A|^2>``, ``JtA = <J^T A>``, ``JtJ = <J^T J>`` and
    ``HA[k, l] = sum_m <d_k d_l A_m A_m>``. ``B`` is always a 3-vector.
    """

    mass: float
    A: np.ndarray
    dtA: np.ndarray
    J: np.ndarray
    dtJ: np.ndarray
    H: np.ndarray
    T3: np.ndarray
    phi: float
    gphi: np.ndarray
    hphi: np.ndarray
    A2: float
    JtA: np.ndarray
    JtJ: np.ndarray
    HA: np.ndarray
    B: np.ndarray


def default_mode(model: FieldModel) -> str:
    caps = model.capabilities
    if caps.is_linear_A and caps.is_quadratic_phi:
        return "point"
    if caps.has_analytic_averages:
        return "analytic"
    return "quadrature"


class AverageEngine:
    """Evaluate Gaussian averages of functions and field quantities.

    Parameters
    ----------
    mode : {"quadrature", "analytic", "point"} or None
        Forced mode. ``None`` picks point > analytic > quadrature from the
        model's capabilities.
    quad_order : int
        Gauss-Hermite nodes per dimension.
    """

    def __init__(self, mode: str | None = None, quad_order: int = 10):
        if mode is not None and mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if quad_order < 1:
            raise ValueError("quad_order must be positive")
        self.mode = mode
        self.quad_order = int(quad_order)

    # -- generic quadrature -------------------------------------------------

    def nodes(self, state, order: int | None = None):
        """Quadrature nodes ``x = q + sqrt(eps) L^{-T} y`` and normalized weights.

        ``L`` is the Cholesky factor of ``C_I = (Re QQ^*)^{-1}``.
        """
        G = width_covariance(state.Q)
        L = np.linalg.cholesky(np.linalg.inv(G))
        Y, W = gauss_hermite_grid(state.dim, order or self.quad_order)
        # rows: x_i = q + sqrt(eps) L^{-T} y_i
        X = state.q + np.sqrt(state.eps) * np.linalg.solve(L.T, Y.T).T
        return X, W

    def normalized_mean(self, f, state, order: int | None = None):
        X, W = self.nodes(state, order)
        F = np.asarray(f(X))
        if not np.isfinite(F).all():
            raise EvaluationError("non-finite integrand at quadrature nodes")
        return np.tensordot(W, F, axes=(0, 0))

    def mean(self, f, state, order: int | None = None):
        """``int f(x) |u(x)|^2 dx`` for ``f`` vectorized over rows of ``x``."""
        return l2_norm_squared(state) * self.normalized_mean(f, state, order)

    # -- field averages -----------------------------------------------------

    def resolve_mode(self, model: FieldModel) -> str:
        mode = self.mode or default_mode(model)
        caps = model.capabilities
        if mode == "point" and not (caps.is_linear_A and caps.is_quadratic_phi):
            raise CapabilityError("point averages need linear A and quadratic phi")
        if mode == "analytic" and not (caps.has_analytic_averages and isinstance(model, TrigField2D)):
            raise CapabilityError("no closed-form averages for this field")
        return mode

    def averages(self, model: FieldModel, state) -> FieldAverages:
        mode = self.resolve_mode(model)
        if mode == "point":
            return point_averages(state, model)
        if mode == "analytic":
            return trig_averages(state, model)
        return self._quadrature_averages(model, state)

    def _quadrature_averages(self, model: FieldModel, state) -> FieldAverages:
        X, W = self.nodes(state)
        t = state.t
        A = model.A(t, X)
        J = model.J(t, X)
        H = model.hessA(t, X)
        vals = {
            "A": A,
            "dtA": model.dtA(t, X),
            "J": J,
            "dtJ": model.dtJ(t, X),
            "H": H,
            "T3": model.d3A(t, X),
            "phi": model.phi(t, X),
            "gphi": model.grad_phi(t, X),
            "hphi": model.hess_phi(t, X),
            "A2": np.einsum("nm,nm->n", A, A),
            "JtA": np.einsum("nmk,nm->nk", J, A),
            "JtJ": np.einsum("nmk,nml->nkl", J, J),
            "HA": np.einsum("nmkl,nm->nkl", H, A),
            "B": model.B3(t, X),
        }
        out = {}
        for key, F in vals.items():
            F = np.asarray(F, dtype=float)
            if not np.isfinite(F).all():
                raise EvaluationError(f"non-finite {key} at quadrature nodes")
            out[key] = np.tensordot(W, F, axes=(0, 0))
        out["phi"] = float(out["phi"])
        out["A2"] = float(out["A2"])
        return FieldAverages(mass=l2_norm_squared(state), **out)


def _gauss_factor(state, k: float = 1.0) -> tuple[float, float]:
    """Damping ``exp(-k^2 Var/2)`` and variance ``Var`` of ``x_1 + x_2``."""
    one = np.ones(2)
    var = 0.5 * state.eps * float(one @ width_covariance(state.Q) @ one)
    return np.exp(-0.5 * k * k * var), var


def analytic_trig_average(state, alpha: float, t: float, kind: str = "sin") -> float:
    """Unnormalized ``<sin(x_1 + x_2 + alpha t)>`` or ``<cos(...)>``.

    Equals ``||u||^2 exp(-eps/4 1^T QQ^* 1) sin(q_1 + q_2 + alpha t)``.
    """
    if state.dim != 2:
        raise DimensionError("the trigonometric average is defined for d=2")
    damp, _ = _gauss_factor(state)
    theta = state.q[0] + state.q[1] + alpha * t
    fn = {"sin": np.sin, "cos": np.cos}[kind]
    return l2_norm_squared(state) * damp * float(fn(theta))


_u = np.array([1.0, -1.0])
_TRIG_CONST = (
    _u,
    np.ones(2),
    np.outer(_u, np.ones(2)),
    np.ones((2, 2)),
    np.multiply.outer(_u, np.ones((2, 2))),
    np.multiply.outer(_u, np.ones((2, 2, 2))),
)


def trig_averages(state, model: TrigField2D) -> FieldAverages:
    """Closed-form normalized averages for the trigonometric 2D field."""
    if state.dim != 2:
        raise DimensionError("trigonometric field needs d=2")
    a = model.alpha
    d1, _ = _gauss_factor(state, 1.0)
    d2 = d1**4
    theta = state.q[0] + state.q[1] + a * state.t
    mu = state.q[0] + state.q[1]
    ss, cs = d1 * np.sin(theta), d1 * np.cos(theta)
    c2, s2 = d2 * np.cos(2 * theta), d2 * np.sin(2 * theta)
    sr, cr = d1 * np.sin(mu), d1 * np.cos(mu)
    u, one, U1, ones2, H1, T1 = _TRIG_CONST
    return FieldAverages(
        mass=l2_norm_squared(state),
        A=ss * u,
        dtA=a * cs * u,
        J=cs * U1,
        dtJ=-a * ss * U1,
        H=-ss * H1,
        T3=-cs * T1,
        phi=float(sr),
        gphi=cr * one,
        hphi=-sr * ones2,
        A2=float(1.0 - c2),
        JtA=s2 * one,
        JtJ=(1.0 + c2) * ones2,
        HA=-(1.0 - c2) * ones2,
        B=np.array([0.0, 0.0, -2.0 * cs]),
    )


def point_averages(state, model: FieldModel) -> FieldAverages:
    """Exact averages for linear ``A`` and quadratic ``phi`` from point values at ``q``.

    ``<phi>`` and ``<|A|^2>`` include their second-moment corrections.
    """
    caps = model.capabilities
    if not caps.is_linear_A:
        raise CapabilityError("point averages need a linear vector potential")
    if not caps.is_quadratic_phi:
        raise CapabilityError("point averages need a quadratic scalar potential")
    t, q, d = state.t, state.q, state.dim
    G = width_covariance(state.Q)
    A = model.A(t, q)
    J = model.J(t, q)
    hphi = model.hess_phi(t, q)
    return FieldAverages(
        mass=l2_norm_squared(state),
        A=A,
        dtA=model.dtA(t, q),
        J=J,
        dtJ=model.dtJ(t, q),
        H=np.zeros((d, d, d)),
        T3=np.zeros((d, d, d, d)),
        phi=float(model.phi(t, q) + 0.25 * state.eps * np.trace(hphi @ G)),
        gphi=model.grad_phi(t, q),
        hphi=hphi,
        A2=float(A @ A + 0.5 * state.eps * np.trace(J.T @ J @ G)),
        JtA=J.T @ A,
        JtJ=J.T @ J,
        HA=np.zeros((d, d)),
        B=model.B3(t, q),
    )


def gaussian_calculus_lhs_rhs(state, engine: AverageEngine, W=None, dW=None, w=None, grad_w=None, hess_w=None, M=None):
    """Both sides of the Gaussian moment identities.

    Matrix form, for ``W`` with ``dW[..., l, k, j] = d_l W_kj``::

        <W (x - q)>_k = eps/2 sum_l (<d_l W> C_I^{-1})_{k l}

    Scalar form, for ``w`` with gradient and Hessian and a matrix ``M``::

        <(x-q)^T w M (x-q)> = eps/2 <w> tr(M C_I^{-1})
                              + eps^2/4 tr(<hess w> C_I^{-1} M C_I^{-1})
        <w (x - q)> = eps/2 C_I^{-1} <grad w>

    Returns a list of ``(lhs, rhs)`` pairs, one per identity that the
    supplied functions allow.
    """
    eps, q = state.eps, state.q
    G = width_covariance(state.Q)
    pairs = []
    if W is not None:
        lhs = engine.mean(lambda X: np.einsum("nkj,nj->nk", W(X), X - q), state)
        mdW = engine.mean(dW, state)  # [l, k, j]
        rhs = 0.5 * eps * np.einsum("lkj,jl->k", mdW, G)
        pairs.append((lhs, rhs))
    if w is not None:
        M = np.eye(state.dim) if M is None else np.asarray(M, dtype=float)
        lhs = engine.mean(lambda X: w(X) * np.einsum("nk,kl,nl->n", X - q, M, X - q), state)
        rhs = 0.5 * eps * engine.mean(w, state) * np.trace(M @ G)
        if hess_w is not None:
            rhs = rhs + 0.25 * eps**2 * np.trace(engine.mean(hess_w, state) @ G @ M @ G)
        pairs.append((lhs, rhs))
        if grad_w is not None:
            lhs = engine.mean(lambda X: w(X)[:, None] * (X - q), state)
            rhs = 0.5 * eps * G @ engine.mean(grad_w, state)
            pairs.append((lhs, rhs))
    return pairs
