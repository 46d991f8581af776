"""Self-contained identity and property suites.

Each suite returns a list of ``(label, passed, detail)`` tuples. The suites
need no external data and are exposed through ``gaussmag check``.
"""
from __future__ import annotations

import numpy as np

from gaussmag.averages import AverageEngine, gaussian_calculus_lhs_rhs
from gaussmag.core import CanonicalState, WavePacketState, normalize_phase, symplecticity_residual, to_canonical, to_magnetic
from gaussmag.eom import ehrenfest_derivative
from gaussmag.fields import TrigField2D
from gaussmag.integrators import boris_rotate, mrk4_step, rk4_canonical_step

SUITES = ("gaussian-calculus", "ehrenfest", "transformed-canonical", "boris-rotation", "symplecticity")


def random_symplectic_pair(rng, d: int, spread: float = 0.5):
    """Random ``(Q, P)`` with ``Q = C_I^{-1/2} V`` for unitary ``V`` and ``P = C Q``."""
    G = rng.standard_normal((d, d))
    CI = G @ G.T * spread + np.eye(d)
    CR = rng.standard_normal((d, d)) * spread
    CR = 0.5 * (CR + CR.T)
    w, U = np.linalg.eigh(CI)
    Z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    V, _ = np.linalg.qr(Z)
    Q = U @ np.diag(w**-0.5) @ U.T @ V
    P = (CR + 1j * CI) @ Q
    return Q, P


def random_canonical_state(rng, d: int = 2, eps: float = 1e-2, normalized: bool = True) -> CanonicalState:
    Q, P = random_symplectic_pair(rng, d)
    s = CanonicalState(eps, float(rng.uniform(0, 1)), rng.uniform(-1, 1, d), rng.uniform(-1, 1, d), Q, P, float(rng.uniform(-1, 1)), 0.0)
    return normalize_phase(s) if normalized else s.replace(zeta_I=float(rng.uniform(-1, 1)) * eps)


def _rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300))


def suite_gaussian_calculus(seed: int = 0, n_states: int = 10, tol: float = 1e-8):
    rng = np.random.default_rng(seed)
    engine = AverageEngine(quad_order=16)
    field = TrigField2D(1.0)
    worst = 0.0

    def w(X):
        return np.sin(X[:, 0] + X[:, 1])

    def gw(X):
        return np.cos(X[:, 0] + X[:, 1])[:, None] * np.ones(2)

    def hw(X):
        return -np.sin(X[:, 0] + X[:, 1])[:, None, None] * np.ones((2, 2))

    for _ in range(n_states):
        s = random_canonical_state(rng, 2, 1e-2)
        t = s.t
        M = rng.standard_normal((2, 2))

        def W(X):
            return np.swapaxes(field.J(t, X), -1, -2)

        def dW(X):
            # d_l (J^T)_{kj} = d_l d_k A_j = H[j, k, l]  ->  [l, k, j]
            return np.transpose(field.hessA(t, X), (0, 3, 2, 1))

        pairs = gaussian_calculus_lhs_rhs(s, engine, W=W, dW=dW, w=w, grad_w=gw, hess_w=hw, M=M)
        for lhs, rhs in pairs:
            worst = max(worst, _rel(lhs, rhs))
    return [("Gaussian moment identities, 10 random states", bool(worst <= tol), f"max rel {worst:.2e}")]


def suite_ehrenfest(seed: int = 0, tol: float = 1e-8):
    rng = np.random.default_rng(seed)
    model = TrigField2D(1.0)
    engine = AverageEngine()
    cs = random_canonical_state(rng, 2, 1e-2)
    avg = engine.averages(model, cs)
    s0 = to_magnetic(cs, avg.A, avg.J)

    def w(X):
        return np.sin(X[:, 0] + X[:, 1])

    def gw(X):
        return np.cos(X[:, 0] + X[:, 1])[:, None] * np.ones(2)

    def hw(X):
        return -np.sin(X[:, 0] + X[:, 1])[:, None, None] * np.ones((2, 2))

    exact = ehrenfest_derivative(gw, hw, s0, engine)
    errs = []
    for h in (1e-3, 5e-4):
        sp = mrk4_step(s0, h, model, engine)
        sm = mrk4_step(s0, -h, model, engine)
        fd = (engine.normalized_mean(w, sp) - engine.normalized_mean(w, sm)) / (2 * h)
        errs.append(abs(fd - exact))
    # second-order finite differences: error shrinks ~4x or is at roundoff
    ok = errs[1] <= tol or errs[0] / errs[1] > 3.0
    return [("derivative of <sin(x1+x2)> vs central differences", bool(ok), f"errors {errs[0]:.2e}, {errs[1]:.2e}")]


def suite_transformed_canonical(seed: int = 0, tau: float = 1e-4, t_end: float = 0.1, tol: float = 1e-8):
    rng = np.random.default_rng(seed)
    model = TrigField2D(1.0)
    engine = AverageEngine()
    cs = random_canonical_state(rng, 2, 1e-2)
    avg = engine.averages(model, cs)
    s = to_magnetic(cs, avg.A, avg.J)
    c = cs
    n = int(round(t_end / tau))
    for _ in range(n):
        s = mrk4_step(s, tau, model, engine)
        c = rk4_canonical_step(c, tau, model, engine)
    avg = engine.averages(model, s)
    c2 = to_canonical(s, avg.A, avg.J)
    diff = max(
        np.max(np.abs(c2.q - c.q)),
        np.max(np.abs(c2.p - c.p)),
        np.max(np.abs(c2.Q - c.Q)),
        np.max(np.abs(c2.P - c.P)),
        abs(c2.zeta_R - c.zeta_R),
        abs(c2.zeta_I - c.zeta_I),
    )
    return [(f"transformed vs canonical RK4, tau={tau:g}, T={t_end:g}", bool(diff <= tol), f"max diff {diff:.2e}")]


def suite_boris_rotation(seed: int = 0, n: int = 100, tol: float = 1e-13):
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_norm = 0.0
    for _ in range(n):
        v = rng.standard_normal(3)
        b = rng.standard_normal(3) * rng.uniform(0.1, 10)
        tau = rng.uniform(1e-3, 1.0)
        vp = boris_rotate(v, b, tau)
        res = np.linalg.norm(vp - v - 0.5 * tau * np.cross(vp + v, b))
        worst = max(worst, res / max(1.0, np.linalg.norm(v)))
        worst_norm = max(worst_norm, abs(np.linalg.norm(vp) - np.linalg.norm(v)))
        V = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
        Vp = boris_rotate(V, b, tau)
        resc = np.max(np.abs(Vp - V - 0.5 * tau * np.cross(Vp + V, b)))
        worst = max(worst, resc / max(1.0, np.max(np.abs(V))))
    return [
        ("Boris rotation implicit relation", bool(worst <= tol), f"max residual {worst:.2e}"),
        ("Boris rotation preserves |v|", bool(worst_norm <= tol), f"max drift {worst_norm:.2e}"),
    ]


def suite_symplecticity(seed: int = 0, tau: float = 2e-3, t_end: float = 8.0, tol: float = 1e-6):
    from gaussmag.scenarios import sublinear_initial

    model = TrigField2D(1.0)
    engine = AverageEngine()
    s = sublinear_initial(1e-3, 1.0, engine)
    avg = engine.averages(model, s)
    c = to_canonical(s, avg.A, avg.J)
    r0 = max(symplecticity_residual(c.Q, c.P))
    worst = 0.0
    for _ in range(int(round(t_end / tau))):
        c = rk4_canonical_step(c, tau, model, engine)
        worst = max(worst, max(symplecticity_residual(c.Q, c.P)) - r0)
    return [(f"symplecticity residual growth, RK4 tau={tau:g}, T={t_end:g}", bool(worst <= tol), f"growth {worst:.2e}")]


_RUNNERS = {
    "gaussian-calculus": suite_gaussian_calculus,
    "ehrenfest": suite_ehrenfest,
    "transformed-canonical": suite_transformed_canonical,
    "boris-rotation": suite_boris_rotation,
    "symplecticity": suite_symplecticity,
}


def run_suite(name: str, seed: int = 0):
    if name not in _RUNNERS:
        raise ValueError(f"unknown suite {name!r}")
    return _RUNNERS[name](seed)
