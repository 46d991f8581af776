"""Time integrators for the packet parameters.

* :func:`boris_full_step` - explicit Boris-type scheme on a staggered grid
  with extrapolated full-step momenta, a determinant update for ``zeta_I``
  and a two-step midpoint rule for ``zeta_R``.
* :func:`rk4_canonical_step` - classical RK4 on the canonical system.
* :func:`mrk4_step` - RK4 on the transformed system with ``zeta_I`` taken
  from ``det Q`` (norm preserving).

Flattening orders used by the RK4 routines::

    canonical    (q, p, Re Q, Im Q, Re P, Im P, zeta_R, zeta_I)
    transformed  (q, v, Re Q, Im Q, Re Upsilon, Im Upsilon, zeta_R)
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from gaussmag.averages import AverageEngine
from gaussmag.core import CanonicalState, WavePacketState, log_abs_det
from gaussmag.eom import fields_ES, rhs_canonical, rhs_transformed, zeta_R_rhs
from gaussmag.errors import NonFiniteState
from gaussmag.fields import FieldModel

INTEGRATORS = ("boris", "rk4", "mrk4")


# -- classical Boris kernel ------------------------------------------------------


def boris_rotate(v_minus, b, tau: float):
    """Magnetic half of the Boris push.

    Solves ``v+ - v- = tau/2 (v+ + v-) x b`` explicitly. ``v_minus`` is a
    3-vector or an array whose last axis has length 3 (rows are rotated
    independently; complex entries are allowed).
    """
    b = np.asarray(b, dtype=float)
    t = 0.5 * tau * b
    s = 2.0 * t / (1.0 + t @ t)
    v_prime = v_minus + np.cross(v_minus, t)
    return v_minus + np.cross(v_prime, s)


def _embed(w, d):
    """Rows of length d -> rows of length 3 (zero padded)."""
    if d == 3:
        return w
    pad = np.zeros(w.shape[:-1] + (1,), dtype=w.dtype)
    return np.concatenate([w, pad], axis=-1)


def boris_point_step(q, v_half, E, B, tau: float):
    """One Boris step for ``q' = v``, ``v' = v x B + E``.

    ``B`` is a 3-vector; for d=2 the in-plane components of the rotation
    are kept.
    """
    q = np.asarray(q, dtype=float)
    d = q.size
    v_minus = v_half + 0.5 * tau * E
    v_plus = boris_rotate(_embed(v_minus, d), B, tau)[:d]
    v_new = v_plus + 0.5 * tau * E
    return q + tau * v_new, v_new


def extrapolate(x_half, x_half_prev):
    """Second-order extrapolation ``3/2 x^{n-1/2} - 1/2 x^{n-3/2}`` to ``t_n``."""
    return 1.5 * x_half - 0.5 * x_half_prev


# -- staggered Boris-type scheme -------------------------------------------------


@dataclass(frozen=True)
class BorisStaggeredState:
    """Staggered record advanced by :func:`boris_full_step`.

    Positions, widths and phases live at ``t_n``; momenta at half steps.
    """

    n: int
    t_n: float
    eps: float
    tau: float
    q_n: np.ndarray
    v_half: np.ndarray
    v_half_prev: np.ndarray
    Q_n: np.ndarray
    Ups_half: np.ndarray
    Ups_half_prev: np.ndarray
    zeta_R_n: float
    zeta_R_prev: float
    zeta_I_n: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")


@dataclass(frozen=True)
class StepReport:
    """Quantities used and produced by one Boris-type step.

    ``state_n`` is the full-step state at ``t_n`` with averaged momenta,
    available once the step is complete.
    """

    v_tilde: np.ndarray
    Ups_tilde: np.ndarray
    E: np.ndarray
    S: np.ndarray
    B: np.ndarray
    state_n: WavePacketState


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFiniteState("time step produced non-finite parameters")


def boris_full_step(s: BorisStaggeredState, model: FieldModel, engine=None, return_report: bool = False):
    """Advance the staggered state from ``t_n`` to ``t_{n+1}``."""
    engine = engine or AverageEngine()
    tau = s.tau
    v_tilde = extrapolate(s.v_half, s.v_half_prev)
    U_tilde = extrapolate(s.Ups_half, s.Ups_half_prev)
    full = WavePacketState(s.eps, s.t_n, s.q_n, v_tilde, s.Q_n, U_tilde, s.zeta_R_n, s.zeta_I_n)
    avg = engine.averages(model, full)
    E, S, B = fields_ES(full, model, avg=avg)
    d = full.dim

    q_new, v_new = boris_point_step(s.q_n, s.v_half, E, B, tau)

    # columns of Upsilon with "electric" term S Q
    SQ = S @ s.Q_n
    U_minus = s.Ups_half + 0.5 * tau * SQ
    U_plus = boris_rotate(_embed(U_minus.T, d), B, tau)[:, :d].T
    U_new = U_plus + 0.5 * tau * SQ
    Q_new = s.Q_n + tau * U_new

    zI_new = s.zeta_I_n + 0.5 * s.eps * (log_abs_det(Q_new) - log_abs_det(s.Q_n))

    # averaged momenta at t_n for the midpoint rule (averages depend on q, Q only)
    v_n = 0.5 * (s.v_half + v_new)
    U_n = 0.5 * (s.Ups_half + U_new)
    state_n = WavePacketState(s.eps, s.t_n, s.q_n, v_n, s.Q_n, U_n, s.zeta_R_n, s.zeta_I_n)
    zR_new = s.zeta_R_prev + 2.0 * tau * zeta_R_rhs(state_n, model, avg=avg)

    _check_finite(q_new, v_new, Q_new, U_new, zR_new, zI_new)
    out = BorisStaggeredState(
        n=s.n + 1,
        t_n=s.t_n + tau,
        eps=s.eps,
        tau=tau,
        q_n=q_new,
        v_half=v_new,
        v_half_prev=s.v_half,
        Q_n=Q_new,
        Ups_half=U_new,
        Ups_half_prev=s.Ups_half,
        zeta_R_n=zR_new,
        zeta_R_prev=s.zeta_R_n,
        zeta_I_n=zI_new,
    )
    if return_report:
        return out, StepReport(v_tilde, U_tilde, E, S, B, state_n)
    return out


def bootstrap(initial: WavePacketState, tau: float, model: FieldModel, engine=None, substeps: int = 10):
    """Start values for the staggered scheme from fine RK4 substeps.

    Integrates the transformed system with step ``tau/substeps`` backward to
    ``t_0 - tau/2`` and forward to ``t_0 + tau``, and returns the staggered
    state at ``n = 1``.
    """
    if substeps < 2 or substeps % 2:
        raise ValueError("substeps must be an even integer >= 2")
    engine = engine or AverageEngine()
    h = tau / substeps
    half = substeps // 2
    back = initial
    for _ in range(half):
        back = mrk4_step(back, -h, model, engine)
    fwd = initial
    for _ in range(half):
        fwd = mrk4_step(fwd, h, model, engine)
    mid = fwd
    for _ in range(half):
        fwd = mrk4_step(fwd, h, model, engine)
    return BorisStaggeredState(
        n=1,
        t_n=initial.t + tau,
        eps=initial.eps,
        tau=tau,
        q_n=fwd.q,
        v_half=mid.v,
        v_half_prev=back.v,
        Q_n=fwd.Q,
        Ups_half=mid.Upsilon,
        Ups_half_prev=back.Upsilon,
        zeta_R_n=fwd.zeta_R,
        zeta_R_prev=initial.zeta_R,
        zeta_I_n=fwd.zeta_I,
    )


# -- RK4 ---------------------------------------------------------------------------


def rk4_step(rhs, y, tau: float, t: float = 0.0):
    """Classical four-stage Runge-Kutta step for ``y' = rhs(t, y)``."""
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * tau, y + 0.5 * tau * k1)
    k3 = rhs(t + 0.5 * tau, y + 0.5 * tau * k2)
    k4 = rhs(t + tau, y + tau * k3)
    return y + tau / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _split(M):
    return np.concatenate([M.real.ravel(), M.imag.ravel()])


def _join(y, d):
    n = d * d
    return y[:n].reshape(d, d) + 1j * y[n : 2 * n].reshape(d, d)


def flatten_canonical(s: CanonicalState) -> np.ndarray:
    return np.concatenate([s.q, s.p, _split(s.Q), _split(s.P), [s.zeta_R, s.zeta_I]])


def unflatten_canonical(y, eps: float, t: float, d: int) -> CanonicalState:
    n = 2 * d * d
    Q = _join(y[2 * d : 2 * d + n], d)
    P = _join(y[2 * d + n : 2 * d + 2 * n], d)
    return CanonicalState(eps, t, y[:d], y[d : 2 * d], Q, P, y[-2], y[-1])


def flatten_transformed(s: WavePacketState) -> np.ndarray:
    return np.concatenate([s.q, s.v, _split(s.Q), _split(s.Upsilon), [s.zeta_R]])


def unflatten_transformed(y, eps: float, t: float, d: int, zeta_I: float) -> WavePacketState:
    n = 2 * d * d
    Q = _join(y[2 * d : 2 * d + n], d)
    U = _join(y[2 * d + n : 2 * d + 2 * n], d)
    return WavePacketState(eps, t, y[:d], y[d : 2 * d], Q, U, y[-1], zeta_I)


def rk4_canonical_step(state: CanonicalState, tau: float, model: FieldModel, engine=None) -> CanonicalState:
    """Plain RK4 on the canonical system including the complex phase."""
    engine = engine or AverageEngine()
    d, eps = state.dim, state.eps

    def rhs(t, y):
        r = rhs_canonical(unflatten_canonical(y, eps, t, d), model, engine)
        return np.concatenate([r.dq, r.dp, _split(r.dQ), _split(r.dP), [r.dzeta.real, r.dzeta.imag]])

    y = rk4_step(rhs, flatten_canonical(state), tau, state.t)
    _check_finite(y)
    return unflatten_canonical(y, eps, state.t + tau, d)


def mrk4_step(state: WavePacketState, tau: float, model: FieldModel, engine=None) -> WavePacketState:
    """RK4 on the transformed system with ``zeta_I`` slaved to ``ln|det Q|``."""
    engine = engine or AverageEngine()
    d, eps = state.dim, state.eps
    ld0 = log_abs_det(state.Q)

    def zI(Q):
        return state.zeta_I + 0.5 * eps * (log_abs_det(Q) - ld0)

    def rhs(t, y):
        s = unflatten_transformed(y, eps, t, d, 0.0)
        s = replace(s, zeta_I=zI(s.Q))
        r = rhs_transformed(s, model, engine)
        return np.concatenate([r.dq, r.dv, _split(r.dQ), _split(r.dUpsilon), [r.dzeta_R]])

    y = rk4_step(rhs, flatten_transformed(state), tau, state.t)
    _check_finite(y)
    out = unflatten_transformed(y, eps, state.t + tau, d, 0.0)
    return replace(out, zeta_I=zI(out.Q))
