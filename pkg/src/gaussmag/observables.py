"""Energy, norm, L2 distances, parameter errors and per-step diagnostics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gaussmag.averages import AverageEngine, gauss_hermite_grid
from gaussmag.core import (
    CanonicalState,
    WavePacketState,
    l2_norm_squared,
    log_abs_det,
    symplecticity_residual,
    to_canonical,
    width_from_hagedorn,
)
from gaussmag.eom import mean_energy
from gaussmag.fields import FieldModel

#: Squared Mahalanobis separation beyond which two packets count as disjoint.
SEPARATION_LIMIT = 200.0


def energy(state: WavePacketState, model: FieldModel, engine=None) -> float:
    """Energy per unit mass ``<H>/<1>`` of the packet."""
    engine = engine or AverageEngine()
    return mean_energy(state, engine.averages(model, state))


def as_canonical(state, model: FieldModel | None = None, engine=None) -> CanonicalState:
    """Canonical parameters of ``state`` (a no-op for :class:`CanonicalState`)."""
    if isinstance(state, CanonicalState):
        return state
    if model is None:
        raise ValueError("a field model is needed to recover (p, P)")
    avg = (engine or AverageEngine()).averages(model, state)
    return to_canonical(state, avg.A, avg.J)


def _log_packet(s: CanonicalState, C, x):
    y = x - s.q
    quad = 0.5 * np.einsum("nk,kl,nl->n", y, C, y)
    return 1j / s.eps * (quad + y @ s.p + s.zeta)


def _width(s: CanonicalState):
    C = width_from_hagedorn(s.Q, s.P)
    return 0.5 * (C + C.T)


@dataclass(frozen=True)
class L2Distance:
    value: float
    saturated: bool


def l2_distance(a, b, model: FieldModel | None = None, engine=None, order: int = 20) -> L2Distance:
    """``||u_a - u_b||`` by Gauss-Hermite quadrature.

    The weight is the Gaussian with the mean precision of the two packets,
    centred between them, so both packets are resolved. For packets whose
    separation exceeds :data:`SEPARATION_LIMIT` (squared, in units of the
    width) the overlap is negligible and ``sqrt(||a||^2 + ||b||^2)`` is
    returned with ``saturated=True``.
    """
    a = as_canonical(a, model, engine)
    b = as_canonical(b, model, engine)
    if a.dim != b.dim or a.eps != b.eps:
        raise ValueError("packets must share dimension and eps")
    eps, d = a.eps, a.dim
    Ca, Cb = _width(a), _width(b)
    Ma, Mb = Ca.imag, Cb.imag
    M = 0.5 * (Ma + Mb)
    c = np.linalg.solve(Ma + Mb, Ma @ a.q + Mb @ b.q)
    dq = a.q - b.q
    if dq @ M @ dq / eps > SEPARATION_LIMIT:
        return L2Distance(float(np.sqrt(l2_norm_squared(a) + l2_norm_squared(b))), True)
    L = np.linalg.cholesky(M)
    Y, W = gauss_hermite_grid(d, order)
    X = c + np.sqrt(eps) * np.linalg.solve(L.T, Y.T).T
    # u / sqrt(w) with w(x) = exp(-(x-c)^T M (x-c)/eps)
    half_w = 0.5 * np.einsum("nk,kl,nl->n", X - c, M, X - c) / eps
    ga = np.exp(_log_packet(a, Ca, X) + half_w)
    gb = np.exp(_log_packet(b, Cb, X) + half_w)
    mass = (np.pi * eps) ** (0.5 * d) / np.prod(np.diag(L))
    val = mass * float(W @ np.abs(ga - gb) ** 2)
    return L2Distance(float(np.sqrt(max(val, 0.0))), False)


def overlap_closed_form(a: CanonicalState, b: CanonicalState) -> complex:
    """Exact ``<u_a, u_b> = int conj(u_a) u_b dx`` for two Gaussian packets."""
    eps = a.eps
    Ca, Cb = _width(a), _width(b)
    Cac = Ca.conj()
    M = -(1j / eps) * (Cb - Cac)
    bvec = (1j / eps) * (-Cb @ b.q + b.p + Cac @ a.q - a.p)
    c0 = (1j / eps) * (
        0.5 * b.q @ Cb @ b.q - b.q @ b.p + b.zeta - 0.5 * a.q @ Cac @ a.q + a.q @ a.p - np.conj(a.zeta)
    )
    lam = np.linalg.eigvals(M)
    d = a.dim
    log_val = 0.5 * d * np.log(2 * np.pi) - 0.5 * np.sum(np.log(lam)) + 0.5 * bvec @ np.linalg.solve(M, bvec) + c0
    return complex(np.exp(log_val))


def parameter_errors(a, b) -> dict:
    """Frobenius norm of each parameter difference divided by its number of entries.

    Both arguments must be the same state type; keys follow its fields.
    """
    if type(a) is not type(b):
        raise TypeError("states must have the same type")
    if isinstance(a, CanonicalState):
        keys = ("q", "p", "Q", "P", "zeta_R", "zeta_I")
    else:
        keys = ("q", "v", "Q", "Upsilon", "zeta_R", "zeta_I")
    out = {}
    for k in keys:
        da = np.atleast_1d(np.asarray(getattr(a, k)) - np.asarray(getattr(b, k)))
        out[k] = float(np.linalg.norm(da) / da.size)
    return out


@dataclass(frozen=True)
class Diagnostics:
    norm: float
    energy: float
    energy_err_abs: float
    energy_err_rel: float
    sympl_r1: float
    sympl_r2: float
    det_Q_abs: float


def diagnostics(state: WavePacketState, model: FieldModel, engine=None, energy0: float | None = None) -> Diagnostics:
    """Norm, energy, energy error against ``energy0``, symplecticity and ``|det Q|``."""
    engine = engine or AverageEngine()
    avg = engine.averages(model, state)
    E = mean_energy(state, avg)
    E0 = E if energy0 is None else energy0
    P = state.Upsilon + avg.J @ state.Q
    r1, r2 = symplecticity_residual(state.Q, P)
    return Diagnostics(
        norm=float(np.sqrt(l2_norm_squared(state))),
        energy=E,
        energy_err_abs=abs(E - E0),
        energy_err_rel=abs(E - E0) / abs(E0) if E0 != 0 else float("nan"),
        sympl_r1=r1,
        sympl_r2=r2,
        det_Q_abs=float(np.exp(log_abs_det(state.Q))),
    )
