"""Gaussian wave packet parameters, Hagedorn algebra and norm evaluation.

A packet is

    u(x) = exp(i/eps * (1/2 (x-q)^T C (x-q) + (x-q)^T p + zeta)),

with the complex symmetric width ``C = P Q^{-1}`` written through a
Hagedorn pair ``(Q, P)``. The integrators work with the averaged magnetic
momenta ``v = p - <A>`` and ``Upsilon = P - <J_A> Q``; :class:`WavePacketState`
stores that representation and :class:`CanonicalState` the ``(p, P)`` one.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from gaussmag.errors import DimensionError, SingularWidth, SymplecticityError

logger = logging.getLogger(__name__)

#: Symplecticity residual above which a warning is logged.
SYMPL_WARN = 5e-3
#: Symplecticity residual above which :func:`check_symplectic` raises.
SYMPL_ERROR = 1e-2


def _vec(x) -> np.ndarray:
    return np.array(x, dtype=float).reshape(-1)


def _mat(x) -> np.ndarray:
    return np.array(x, dtype=complex)


@dataclass(frozen=True)
class WavePacketState:
    """Packet parameters in magnetic-momentum variables.

    Attributes
    ----------
    eps : float
        Semiclassical parameter.
    t : float
        Time.
    q, v : ndarray, shape (d,)
        Position centre and averaged magnetic momentum ``p - <A>``.
    Q, Upsilon : ndarray, shape (d, d), complex
        Hagedorn factor and ``P - <J_A> Q``.
    zeta_R, zeta_I : float
        Real and imaginary part of the phase.
    """

    eps: float
    t: float
    q: np.ndarray
    v: np.ndarray
    Q: np.ndarray
    Upsilon: np.ndarray
    zeta_R: float = 0.0
    zeta_I: float = 0.0
    dim: int = field(init=False)

    def __post_init__(self):
        q = _vec(self.q)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "v", _vec(self.v))
        object.__setattr__(self, "Q", _mat(self.Q))
        object.__setattr__(self, "Upsilon", _mat(self.Upsilon))
        object.__setattr__(self, "zeta_R", float(self.zeta_R))
        object.__setattr__(self, "zeta_I", float(self.zeta_I))
        object.__setattr__(self, "dim", q.size)
        if q.size not in (2, 3):
            raise DimensionError(f"dimension must be 2 or 3, got {q.size}")
        d = q.size
        if self.v.shape != (d,) or self.Q.shape != (d, d) or self.Upsilon.shape != (d, d):
            raise DimensionError("inconsistent parameter shapes")
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    def replace(self, **changes) -> "WavePacketState":
        return replace(self, **changes)


@dataclass(frozen=True)
class CanonicalState:
    """Packet parameters in canonical variables ``(q, p, Q, P, zeta)``."""

    eps: float
    t: float
    q: np.ndarray
    p: np.ndarray
    Q: np.ndarray
    P: np.ndarray
    zeta_R: float = 0.0
    zeta_I: float = 0.0
    dim: int = field(init=False)

    def __post_init__(self):
        q = _vec(self.q)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", _vec(self.p))
        object.__setattr__(self, "Q", _mat(self.Q))
        object.__setattr__(self, "P", _mat(self.P))
        object.__setattr__(self, "zeta_R", float(self.zeta_R))
        object.__setattr__(self, "zeta_I", float(self.zeta_I))
        object.__setattr__(self, "dim", q.size)
        if q.size not in (2, 3):
            raise DimensionError(f"dimension must be 2 or 3, got {q.size}")
        d = q.size
        if self.p.shape != (d,) or self.Q.shape != (d, d) or self.P.shape != (d, d):
            raise DimensionError("inconsistent parameter shapes")
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    @property
    def zeta(self) -> complex:
        return complex(self.zeta_R, self.zeta_I)

    def replace(self, **changes) -> "CanonicalState":
        return replace(self, **changes)


def _check_invertible(Q, tol: float = 1e-14):
    """Raise :class:`SingularWidth` if ``|det Q|`` is negligible against the column norms."""
    if not np.isfinite(Q).all():
        raise SingularWidth("Q has non-finite entries")
    scale = np.prod(np.linalg.norm(Q, axis=0))
    if not scale > 0 or abs(np.linalg.det(Q)) <= tol * scale:
        raise SingularWidth("Q is singular")


def width_from_hagedorn(Q, P) -> np.ndarray:
    """Return the width matrix ``C = P Q^{-1}``.

    Raises
    ------
    SingularWidth
        If ``Q`` is singular to working precision.
    """
    Q = _mat(Q)
    P = _mat(P)
    _check_invertible(Q)
    # C Q = P  <=>  Q^T C^T = P^T
    return np.linalg.solve(Q.T, P.T).T


def symplecticity_residual(Q, P) -> tuple[float, float]:
    """Frobenius residuals of ``Q^T P - P^T Q = 0`` and ``Q^* P - P^* Q = 2i Id``."""
    Q = _mat(Q)
    P = _mat(P)
    d = Q.shape[0]
    r1 = np.linalg.norm(Q.T @ P - P.T @ Q)
    r2 = np.linalg.norm(Q.conj().T @ P - P.conj().T @ Q - 2j * np.eye(d))
    return float(r1), float(r2)


def check_symplectic(Q, P, warn: float = SYMPL_WARN, error: float = SYMPL_ERROR) -> tuple[float, float]:
    """Compute the symplecticity residuals, log above ``warn``, raise above ``error``."""
    r1, r2 = symplecticity_residual(Q, P)
    r = max(r1, r2)
    if r > error:
        raise SymplecticityError(f"symplecticity residual {r:.3e} exceeds {error:.1e}")
    if r > warn:
        logger.warning("symplecticity residual %.3e above warn level %.1e", r, warn)
    return r1, r2


def log_abs_det(Q) -> float:
    """``ln|det Q|`` from an LU factorisation, safe against under/overflow."""
    sign, logdet = np.linalg.slogdet(_mat(Q))
    if sign == 0:
        raise SingularWidth("Q is singular")
    return float(logdet)


def width_covariance(Q) -> np.ndarray:
    """Real symmetric ``Re(Q Q^*)``, the inverse of ``C_I`` for a symplectic pair."""
    Q = _mat(Q)
    G = (Q @ Q.conj().T).real
    return 0.5 * (G + G.T)


def imag_width(Q) -> np.ndarray:
    """``C_I = (Q Q^*)^{-1}`` (real part of ``Q Q^*`` inverted)."""
    return np.linalg.inv(width_covariance(Q))


def l2_norm_squared(state) -> float:
    """Squared L2 norm ``exp(-2 zeta_I/eps) (eps pi)^{d/2} |det Q|``."""
    d = state.dim
    eps = state.eps
    return float(np.exp(-2.0 * state.zeta_I / eps + 0.5 * d * np.log(eps * np.pi) + log_abs_det(state.Q)))


def normalizing_zeta_I(eps: float, Q) -> float:
    """The value of ``zeta_I`` for which the packet has unit norm."""
    Q = _mat(Q)
    d = Q.shape[0]
    return 0.5 * eps * (0.5 * d * np.log(eps * np.pi) + log_abs_det(Q))


def normalize_phase(state):
    """Return ``state`` with ``zeta_I`` replaced so that its L2 norm is one."""
    return state.replace(zeta_I=normalizing_zeta_I(state.eps, state.Q))


def to_magnetic(canonical: CanonicalState, mean_A, mean_JA) -> WavePacketState:
    """Convert ``(p, P)`` to ``(v, Upsilon) = (p - <A>, P - <J_A> Q)``."""
    mean_A = _vec(mean_A)
    mean_JA = np.asarray(mean_JA, dtype=float)
    return WavePacketState(
        eps=canonical.eps,
        t=canonical.t,
        q=canonical.q,
        v=canonical.p - mean_A,
        Q=canonical.Q,
        Upsilon=canonical.P - mean_JA @ canonical.Q,
        zeta_R=canonical.zeta_R,
        zeta_I=canonical.zeta_I,
    )


def to_canonical(state: WavePacketState, mean_A, mean_JA) -> CanonicalState:
    """Inverse of :func:`to_magnetic` for the same averages."""
    mean_A = _vec(mean_A)
    mean_JA = np.asarray(mean_JA, dtype=float)
    return CanonicalState(
        eps=state.eps,
        t=state.t,
        q=state.q,
        p=state.v + mean_A,
        Q=state.Q,
        P=state.Upsilon + mean_JA @ state.Q,
        zeta_R=state.zeta_R,
        zeta_I=state.zeta_I,
    )


def evaluate_packet(state, x, mean_A=None, mean_JA=None):
    """Evaluate the packet at one point or a batch of points ``x[..., d]``.

    A :class:`WavePacketState` needs the field averages ``<A>`` and
    ``<J_A>`` to recover ``p`` and ``P``; they default to zero.
    """
    if isinstance(state, WavePacketState):
        d = state.dim
        state = to_canonical(
            state,
            np.zeros(d) if mean_A is None else mean_A,
            np.zeros((d, d)) if mean_JA is None else mean_JA,
        )
    C = width_from_hagedorn(state.Q, state.P)
    C = 0.5 * (C + C.T)
    x = np.asarray(x, dtype=float)
    y = x - state.q
    quad = 0.5 * np.einsum("...k,kl,...l->...", y, C, y)
    lin = y @ state.p
    return np.exp(1j / state.eps * (quad + lin + state.zeta))


def packet_density(state, x):
    """``|u(x)|^2 = exp(-(x-q)^T C_I (x-q)/eps - 2 zeta_I/eps)`` with ``C_I = (QQ^*)^{-1}``."""
    CI = imag_width(state.Q)
    y = np.asarray(x, dtype=float) - state.q
    return np.exp(-np.einsum("...k,kl,...l->...", y, CI, y) / state.eps - 2.0 * state.zeta_I / state.eps)
