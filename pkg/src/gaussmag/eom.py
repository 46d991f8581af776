"""Right-hand sides of the packet equations of motion.

Two equivalent formulations are provided:

* the canonical system for ``(q, p, Q, P, zeta)``;
* the transformed system for ``(q, v, Q, Upsilon, zeta_R)``, a Lorentz-force
  type system with an averaged magnetic field ``<B>`` and the real fields
  ``E`` (vector) and ``S`` (matrix).

All averages entering the right-hand sides are normalized by the packet mass,
so the dynamics do not depend on ``zeta_I``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from gaussmag.averages import AverageEngine, FieldAverages
from gaussmag.core import (
    CanonicalState,
    WavePacketState,
    to_magnetic,
    width_from_hagedorn,
)
from gaussmag.errors import ImaginaryResidual, SingularWidth
from gaussmag.fields import FieldModel, cross_with_field

logger = logging.getLogger(__name__)

#: Relative imaginary residual accepted silently.
IMAG_TOL = 1e-9
#: Relative imaginary residual above which :class:`ImaginaryResidual` is raised.
IMAG_FAIL = 1e-2


@dataclass(frozen=True)
class TransformedRhs:
    dq: np.ndarray
    dv: np.ndarray
    dQ: np.ndarray
    dUpsilon: np.ndarray
    dzeta_R: float


@dataclass(frozen=True)
class CanonicalRhs:
    dq: np.ndarray
    dp: np.ndarray
    dQ: np.ndarray
    dP: np.ndarray
    dzeta: complex


def _averages(state, model, engine, avg):
    if avg is not None:
        return avg
    return (engine or AverageEngine()).averages(model, state)


def _real(z, scale: float, what: str):
    """Return ``Re z`` after checking that ``Im z`` is negligible relative to ``scale``."""
    z = np.asarray(z)
    if not np.iscomplexobj(z):
        return z
    res = float(np.max(np.abs(z.imag))) / (1.0 + scale) if z.size else 0.0
    if res > IMAG_FAIL:
        raise ImaginaryResidual(f"{what}: imaginary residual {res:.3e}")
    if res > IMAG_TOL:
        logger.debug("%s: imaginary residual %.3e", what, res)
    return z.real


@dataclass(frozen=True)
class _Ctx:
    """Averages and width products shared by the right-hand side pieces.

    The width enters through the real matrices ``G = C_I^{-1}``,
    ``X0 = (C_R - <J>) G`` and ``X = C_R G`` with ``C = (Upsilon + <J> Q) Q^{-1}``.
    For a symplectic pair ``G = QQ^*`` and ``X0 = Upsilon Q^* - i Id``; the
    real form stays well defined for the slightly non-symplectic
    intermediate states of the Boris-type scheme.
    """

    avg: FieldAverages
    C: np.ndarray
    G: np.ndarray
    X0: np.ndarray
    X: np.ndarray


def _context(state: WavePacketState, avg: FieldAverages) -> _Ctx:
    C = _sym_width(state.Q, state.Upsilon + avg.J @ state.Q)
    try:
        G = np.linalg.inv(C.imag)
    except np.linalg.LinAlgError as exc:
        raise SingularWidth("imaginary part of the width is singular") from exc
    G = 0.5 * (G + G.T)
    X0 = (C.real - avg.J) @ G
    return _Ctx(avg, C, G, X0, C.real @ G)


def _hess(state, c: _Ctx) -> np.ndarray:
    a = c.avg
    out = a.JtJ + a.hphi - (np.einsum("mkl,m->kl", a.H, state.v + a.A) - a.HA)
    corr = 0.5 * state.eps * np.einsum("mkln,mn->kl", a.T3, c.X)
    out = out - corr
    return 0.5 * (out + out.T)


def _E(state, c: _Ctx) -> np.ndarray:
    a = c.avg
    E = -a.gphi - a.dtA + a.J.T @ a.A - a.JtA
    corr = np.einsum("mkl,ml->k", a.H, c.X) - np.einsum("klm,ml->k", a.H, c.X0)
    return E + 0.5 * state.eps * corr


def _S(state, c: _Ctx) -> np.ndarray:
    a = c.avg
    H = a.H
    S = -a.hphi - a.dtJ + a.J.T @ a.J - a.JtJ
    S = S + np.einsum("mkl,m->kl", H, a.A) - a.HA
    S = S + np.einsum("mkl,m->kl", H - H.transpose(1, 0, 2), state.v)
    corr = np.einsum("mkln,mn->kl", a.T3, c.X) - np.einsum("kijl,ji->kl", a.T3, c.X0)
    return S + 0.5 * state.eps * corr


def _zeta_R(state, c: _Ctx, hh) -> float:
    a = c.avg
    v = state.v
    tr = np.trace(hh @ c.G) - 2.0 * np.trace(c.C.imag)
    var_A = a.A2 - float(a.A @ a.A)
    return float(0.5 * v @ v + a.A @ v - 0.5 * var_A - a.phi + 0.25 * state.eps * tr)


def mean_hess_h(state: WavePacketState, model: FieldModel, engine=None, avg=None) -> np.ndarray:
    """Averaged position Hessian ``<d_x^2 h>`` of the symbol ``h = |xi - A|^2/2 + phi``."""
    return _hess(state, _context(state, _averages(state, model, engine, avg)))


def field_E(state: WavePacketState, model: FieldModel, engine=None, avg=None) -> np.ndarray:
    """Real vector field ``E`` of the transformed system."""
    return _E(state, _context(state, _averages(state, model, engine, avg)))


def field_S(state: WavePacketState, model: FieldModel, engine=None, avg=None) -> np.ndarray:
    """Real matrix field ``S`` of the transformed system."""
    return _S(state, _context(state, _averages(state, model, engine, avg)))


def zeta_R_rhs(state: WavePacketState, model: FieldModel, engine=None, avg=None) -> float:
    """Time derivative of the real phase.

    ``1/2 |v|^2 + <A>^T v - (<|A|^2> - |<A>|^2)/2 - <phi>
    + eps/4 tr(<d^2 h> QQ^* - 2 (QQ^*)^{-1})``.
    """
    c = _context(state, _averages(state, model, engine, avg))
    return _zeta_R(state, c, _hess(state, c))


def fields_ES(state: WavePacketState, model: FieldModel, engine=None, avg=None):
    """``(E, S, <B>)`` evaluated with one set of averages."""
    c = _context(state, _averages(state, model, engine, avg))
    return _E(state, c), _S(state, c), c.avg.B


def rhs_transformed(state: WavePacketState, model: FieldModel, engine=None, avg=None) -> TransformedRhs:
    """``q' = v``, ``v' = v x <B> + E``, ``Q' = Upsilon``, ``Upsilon' = Upsilon x <B> + S Q``."""
    c = _context(state, _averages(state, model, engine, avg))
    d = state.dim
    B = c.avg.B
    return TransformedRhs(
        dq=state.v.copy(),
        dv=cross_with_field(state.v, B, d) + _E(state, c),
        dQ=state.Upsilon.copy(),
        dUpsilon=cross_with_field(state.Upsilon, B, d) + _S(state, c) @ state.Q,
        dzeta_R=_zeta_R(state, c, _hess(state, c)),
    )


def _energy(state, c: _Ctx, C) -> float:
    a = c.avg
    CR, CI = C.real, C.imag
    G = c.G
    v = state.v
    kin = 0.5 * v @ v + 0.5 * (a.A2 - a.A @ a.A)
    width = 0.25 * state.eps * np.trace((CR @ CR + CI @ CI - 2.0 * a.J.T @ CR) @ G)
    return float(kin + a.phi + width)


def _sym_width(Q, P):
    C = width_from_hagedorn(Q, P)
    return 0.5 * (C + C.T)


def mean_energy(state: WavePacketState, avg: FieldAverages) -> float:
    """Normalized energy ``<H>`` from precomputed averages."""
    c = _context(state, avg)
    return _energy(state, c, c.C)


def rhs_canonical(state: CanonicalState, model: FieldModel, engine=None, avg=None) -> CanonicalRhs:
    """Canonical equations for ``(q, p, Q, P, zeta)``.

    ``q' = p - <A>``, ``p' = <J^T (xi - A)> - <grad phi>``, ``Q' = P - <J> Q``,
    ``P' = <J>^T P - <d^2 h> Q`` and
    ``zeta' = -<H> + eps/4 tr(B(C) C_I^{-1}) + p^T (p - <A>)``.
    """
    avg = _averages(state, model, engine, avg)
    mstate = to_magnetic(state, avg.A, avg.J)
    c = _context(mstate, avg)
    hh = _hess(mstate, c)
    corr = np.einsum("mkl,ml->k", avg.H, c.X)
    dp = avg.J.T @ state.p + 0.5 * state.eps * corr - avg.JtA - avg.gphi
    dQ = state.P - avg.J @ state.Q
    dP = avg.J.T @ state.P - hh @ state.Q
    C = c.C
    Bc = hh - avg.J.T @ C - C @ avg.J + C @ C
    dzeta = -_energy(mstate, c, C) + 0.25 * state.eps * np.trace(Bc @ c.G) + state.p @ mstate.v
    return CanonicalRhs(dq=mstate.v.copy(), dp=dp, dQ=dQ, dP=dP, dzeta=complex(dzeta))


def ehrenfest_derivative(grad_w, hess_w, state: WavePacketState, engine=None) -> float:
    """``d/dt <w> = <grad w>^T v + eps/2 tr(<hess w> (Upsilon Q^* - i Id))`` (normalized averages)."""
    engine = engine or AverageEngine()
    g = engine.normalized_mean(grad_w, state)
    Hw = engine.normalized_mean(hess_w, state)
    X0 = state.Upsilon @ state.Q.conj().T - 1j * np.eye(state.dim)
    val = g @ state.v + 0.5 * state.eps * np.trace(Hw @ X0)
    return float(_real(val, float(np.linalg.norm(X0)), "ehrenfest_derivative"))
