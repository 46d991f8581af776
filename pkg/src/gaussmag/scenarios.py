"""Experiment definitions: initial data, trajectories, references and error studies.

Two scenarios are wired in: the 2D trigonometric field (sublinear potentials)
and the 3D Penning trap in dimensionless units.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from gaussmag.averages import AverageEngine
from gaussmag.core import CanonicalState, WavePacketState, l2_norm_squared, normalize_phase, to_canonical, to_magnetic
from gaussmag.errors import GaussmagError, UnstableTrap
from gaussmag.fields import FieldModel, PenningField3D, PenningScaling, TrapParameters, TrigField2D, penning_scaling
from gaussmag.integrators import boris_full_step, bootstrap, mrk4_step, rk4_canonical_step
from gaussmag.observables import as_canonical, diagnostics, l2_distance, parameter_errors

logger = logging.getLogger(__name__)

PENNING_Q0 = (0.133, 0.133, 0.258)
PENNING_P0 = (0.133, 7.492, 3.879)
PENNING_PDIAG = (7.492, 7.492, 3.879)
PENNING_ZETA0 = complex(1.009, -1.84e-7)


# -- initial data --------------------------------------------------------------


def sublinear_initial(eps: float, alpha: float = 1.0, engine=None) -> WavePacketState:
    """``q = 0``, ``p = (1, 0)``, ``Q = Id``, ``P = i Id``, unit norm, in ``(v, Upsilon)``."""
    model = TrigField2D(alpha)
    cs = normalize_phase(CanonicalState(eps, 0.0, np.zeros(2), [1.0, 0.0], np.eye(2), 1j * np.eye(2), 0.0, 0.0))
    avg = (engine or AverageEngine()).averages(model, cs)
    return to_magnetic(cs, avg.A, avg.J)


def proton_scaling() -> PenningScaling:
    return penning_scaling(TrapParameters.for_species("proton"))


def coherent_width(ratio_B: float, ratio_omega: float, charge_sign: int = 1):
    """Stationary diagonal ``(Q, P)`` of the scaled trap.

    In the plane the rates are ``sqrt(b^2/4 - k)``, axially ``sqrt(2 k)``
    with ``b = ratio_B`` and ``k = charge_sign * ratio_omega``.
    """
    k = charge_sign * ratio_omega
    g_xy = ratio_B**2 / 4.0 - k
    g_z = 2.0 * k
    if g_xy <= 0 or g_z <= 0:
        raise UnstableTrap("no confining coherent width for these parameters")
    g = np.sqrt([g_xy, g_xy, g_z])
    return np.diag(g**-0.5).astype(complex), 1j * np.diag(g**0.5)


def penning_initial(scaling: PenningScaling | None = None, exact_width: bool = False, charge_sign: int = 1) -> WavePacketState:
    """Initial packet in the proton trap.

    With ``exact_width`` the three-decimal width data is replaced by the
    stationary width of the scaled trap, which it approximates to about
    0.1 percent.
    """
    sc = scaling or proton_scaling()
    model = sc.field(charge_sign)
    if exact_width:
        Q, P = coherent_width(sc.ratio_B, sc.ratio_omega, charge_sign)
    else:
        Q, P = np.diag(PENNING_Q0).astype(complex), 1j * np.diag(PENNING_PDIAG)
    cs = CanonicalState(sc.eps, 0.0, PENNING_Q0, PENNING_P0, Q, P, PENNING_ZETA0.real, PENNING_ZETA0.imag)
    return to_magnetic(cs, model.A(0.0, cs.q), model.J(0.0, cs.q))


# -- trajectories --------------------------------------------------------------


@dataclass
class Trajectory:
    """States at the output times of one run."""

    integrator: str
    tau: float
    steps: np.ndarray
    times: np.ndarray
    states: list
    runtime_s: float = 0.0

    def canonical(self, model: FieldModel, engine=None) -> list:
        return [as_canonical(s, model, engine) for s in self.states]


def _n_steps(t_end: float, tau: float) -> int:
    n = int(round(t_end / tau))
    if n < 1 or abs(n * tau - t_end) > 1e-9 * max(1.0, t_end):
        raise ValueError(f"t_end={t_end} is not a multiple of tau={tau}")
    return n


def run_trajectory(
    initial: WavePacketState,
    model: FieldModel,
    integrator: str,
    tau: float,
    t_end: float,
    engine=None,
    record_every: int = 1,
    substeps: int = 10,
) -> Trajectory:
    """Integrate from ``initial`` to ``t_end`` and record every ``record_every`` steps.

    ``integrator`` is one of ``boris``, ``rk4`` (canonical system) or ``mrk4``.
    """
    engine = engine or AverageEngine()
    # times are set to t0 + n tau rather than accumulated, to avoid a drift
    # of the field evaluation times in long runs
    N = _n_steps(t_end - initial.t, tau)
    t0 = initial.t
    steps, states = [0], [initial]
    start = time.perf_counter()
    if integrator == "boris":
        s = bootstrap(initial, tau, model, engine, substeps)
        for n in range(1, N + 1):
            s, rep = boris_full_step(s, model, engine, return_report=True)
            s = replace(s, t_n=t0 + (n + 1) * tau)
            if n % record_every == 0:
                steps.append(n)
                states.append(rep.state_n)
    elif integrator == "mrk4":
        s = initial
        for n in range(1, N + 1):
            s = mrk4_step(s, tau, model, engine).replace(t=t0 + n * tau)
            if n % record_every == 0:
                steps.append(n)
                states.append(s)
    elif integrator == "rk4":
        avg = engine.averages(model, initial)
        c = to_canonical(initial, avg.A, avg.J)
        for n in range(1, N + 1):
            c = rk4_canonical_step(c, tau, model, engine).replace(t=t0 + n * tau)
            if n % record_every == 0:
                avg = engine.averages(model, c)
                steps.append(n)
                states.append(to_magnetic(c, avg.A, avg.J))
    else:
        raise ValueError(f"unknown integrator {integrator!r}")
    steps = np.array(steps)
    return Trajectory(integrator, tau, steps, t0 + steps * tau, states, time.perf_counter() - start)


# -- Penning reference ---------------------------------------------------------


def _penning_linear_matrix(model: PenningField3D) -> np.ndarray:
    """Generator of ``(q, v)' = M (q, v)`` for ``v' = v x B - hess(phi) q``."""
    b = model.ratio_B
    Hphi = model.hess_phi(0.0, np.zeros(3))
    cross = np.array([[0.0, b, 0.0], [-b, 0.0, 0.0], [0.0, 0.0, 0.0]])  # v x (0,0,b)
    M = np.zeros((6, 6))
    M[:3, 3:] = np.eye(3)
    M[3:, :3] = -Hphi
    M[3:, 3:] = cross
    return M


def _penning_zeta_rate(model: PenningField3D, eps: float, Z: np.ndarray) -> np.ndarray:
    """Vectorized real-phase rate for stacked states ``Z[n] = [[q, Q], [v, Upsilon]]`` of shape (6, 4)."""
    J = model.J(0.0, np.zeros(3))
    Hphi = model.hess_phi(0.0, np.zeros(3))
    JtJ = J.T @ J
    hh = JtJ + Hphi
    q = Z[:, :3, 0].real
    v = Z[:, 3:, 0].real
    Q = Z[:, :3, 1:]
    QQs = Q @ np.conj(np.swapaxes(Q, 1, 2))
    G = QQs.real
    A = q @ J.T
    phi = 0.5 * np.einsum("nk,kl,nl->n", q, Hphi, q) + 0.25 * eps * np.einsum("kl,nlk->n", Hphi, G)
    var_A = 0.5 * eps * np.einsum("kl,nlk->n", JtJ, G)
    tr = np.einsum("kl,nlk->n", hh, QQs).real - 2.0 * np.trace(np.linalg.inv(QQs), axis1=1, axis2=2).real
    return 0.5 * np.einsum("nk,nk->n", v, v) + np.einsum("nk,nk->n", A, v) - 0.5 * var_A - phi + 0.25 * eps * tr


def penning_exact_oracle(
    initial: WavePacketState,
    model: PenningField3D,
    t_end: float = 2 * np.pi,
    tau_ref: float = 1e-5,
    record_every: int = 1,
    chunk: int = 4096,
) -> Trajectory:
    """Fine-step RK4 reference on the linear Penning system.

    The transformed equations are linear in ``(q, v)`` and in the columns of
    ``(Q, Upsilon)``, so one RK4 step is the fixed matrix
    ``R = sum_{j<=4} (h M)^j / j!``; the real phase follows from the RK4
    quadrature of its rate at the stage values. ``zeta_I`` follows
    ``ln|det Q|``.
    """
    N = _n_steps(t_end - initial.t, tau_ref)
    h = tau_ref
    eps = initial.eps
    M = _penning_linear_matrix(model)
    I6 = np.eye(6)
    hM = h * M
    hM2 = hM @ hM
    hM3 = hM2 @ hM
    R = I6 + hM + hM2 / 2 + hM3 / 6 + hM3 @ hM / 24
    # RK4 stage maps Y_i = S_i Z
    S2 = I6 + hM / 2
    S3 = I6 + hM / 2 + hM2 / 4
    S4 = I6 + hM + hM2 / 2 + hM3 / 4

    Z0 = np.zeros((6, 4), dtype=complex)
    Z0[:3, 0] = initial.q
    Z0[3:, 0] = initial.v
    Z0[:3, 1:] = initial.Q
    Z0[3:, 1:] = initial.Upsilon

    # powers R^j for a chunk, then Z_{kB + j} = R^j Z_{kB}
    powers = np.empty((chunk, 6, 6))
    powers[0] = I6
    for j in range(1, chunk):
        powers[j] = R @ powers[j - 1]
    R_chunk = R @ powers[-1]

    ld0 = np.linalg.slogdet(initial.Q)[1]
    steps, states = [], []
    zR = initial.zeta_R
    Zk = Z0
    n0 = 0
    start = time.perf_counter()
    while n0 <= N:
        m = min(chunk, N - n0 + 1)
        Z = np.einsum("jab,bc->jac", powers[:m], Zk)
        f1 = _penning_zeta_rate(model, eps, Z)
        f2 = _penning_zeta_rate(model, eps, np.einsum("ab,jbc->jac", S2, Z))
        f3 = _penning_zeta_rate(model, eps, np.einsum("ab,jbc->jac", S3, Z))
        f4 = _penning_zeta_rate(model, eps, np.einsum("ab,jbc->jac", S4, Z))
        incr = h / 6.0 * (f1 + 2 * f2 + 2 * f3 + f4)
        zRs = zR + np.concatenate([[0.0], np.cumsum(incr[:-1])])
        for j in range(m):
            n = n0 + j
            if n % record_every == 0:
                Zn = Z[j]
                Qn = Zn[:3, 1:]
                zI = initial.zeta_I + 0.5 * eps * (np.linalg.slogdet(Qn)[1] - ld0)
                steps.append(n)
                states.append(
                    WavePacketState(eps, initial.t + n * h, Zn[:3, 0].real, Zn[3:, 0].real, Qn, Zn[3:, 1:], zRs[j], zI)
                )
        zR = zRs[m - 1] + incr[m - 1]
        Zk = R_chunk @ Zk if m == chunk else Zk
        n0 += m
    steps = np.array(steps)
    return Trajectory("penning-reference", h, steps, initial.t + steps * h, states, time.perf_counter() - start)


# -- error studies -------------------------------------------------------------


def trajectory_errors(traj: Trajectory, ref: Trajectory, model: FieldModel, engine=None) -> dict:
    """Canonical parameter errors of ``traj`` against ``ref`` at common times.

    Returns ``{"final": {...}, "max": {...}}`` with per-parameter errors.
    """
    engine = engine or AverageEngine()
    rt = np.asarray(ref.times)
    errs = []
    for t, s in zip(traj.times, traj.states):
        i = int(np.argmin(np.abs(rt - t)))
        if abs(rt[i] - t) > 1e-9 * (1.0 + abs(t)):
            continue
        errs.append(parameter_errors(as_canonical(s, model, engine), as_canonical(ref.states[i], model, engine)))
    if not errs:
        raise ValueError("no common output times with the reference")
    keys = errs[0].keys()
    return {"final": errs[-1], "max": {k: max(e[k] for e in errs) for k in keys}}


def final_l2_error(traj: Trajectory, ref: Trajectory, model: FieldModel, engine=None) -> float:
    engine = engine or AverageEngine()
    if abs(traj.times[-1] - ref.times[-1]) > 1e-9:
        raise ValueError("trajectories end at different times")
    return l2_distance(traj.states[-1], ref.states[-1], model, engine).value


def convergence_slopes(errors: dict) -> dict:
    """Pairwise and least-squares log-log slopes of ``{tau: error}``.

    Pairs with a non-positive error are skipped and flagged; pairs with
    (nearly) equal errors are flagged as plateaued. ``asymptotic`` is the
    least-squares slope without the leading run of flagged pairs, i.e. on
    the step sizes below a large-tau plateau.
    """
    taus = sorted(errors, reverse=True)
    if len(taus) < 2:
        raise ValueError("need at least two step sizes")
    pairs, flags = [], []
    for a, b in zip(taus[:-1], taus[1:]):
        ea, eb = errors[a], errors[b]
        if not (ea > 0 and eb > 0):
            pairs.append(float("nan"))
            flags.append("nonpositive")
            continue
        s = np.log(ea / eb) / np.log(a / b)
        pairs.append(float(s))
        flags.append("plateau" if abs(s) < 0.5 else "")
    def fit(ts):
        ts = [t for t in ts if errors[t] > 0]
        if len(ts) < 2:
            return float("nan")
        return float(np.polyfit(np.log(ts), np.log([errors[t] for t in ts]), 1)[0])

    # asymptotic range: drop the leading run of flagged pairs (large-tau plateau)
    lead = 0
    while lead < len(flags) and flags[lead]:
        lead += 1
    return {"pairwise": pairs, "flags": flags, "overall": fit(taus), "asymptotic": fit(taus[lead:])}


# -- experiments ---------------------------------------------------------------


@dataclass
class ExperimentSpec:
    """A grid of runs over ``eps``, ``tau`` and integrators against one reference."""

    name: str
    scenario: str  # "sublinear" or "penning"
    eps_list: list
    tau_list: list
    t_end: float
    integrators: list
    alpha: float = 1.0
    tau_ref: float = 1e-4
    quad_order: int = 10
    average_mode: str | None = None
    exact_width: bool = True
    outputs: list = field(default_factory=lambda: ["errors"])

    def __post_init__(self):
        if not self.eps_list or not self.tau_list or not self.integrators:
            raise ValueError("eps_list, tau_list and integrators must be non-empty")
        if any(b >= a for a, b in zip(self.tau_list[:-1], self.tau_list[1:])):
            raise ValueError("tau_list must be strictly decreasing")
        if self.tau_ref > min(self.tau_list) / 10 * (1 + 1e-12):
            raise ValueError("tau_ref must be at most min(tau)/10")


#: Step counts over [0, 2*pi] for the Penning grids.
PENNING_STEPS = (1000, 2000, 4000, 8000, 16000, 32000)

PRESETS = {
    "sublinear-convergence": dict(
        scenario="sublinear", eps_list=[1e-3], tau_list=[0.032, 0.016, 0.008, 0.004, 0.002, 0.001],
        t_end=8.0, integrators=["boris", "mrk4"], alpha=1.0, tau_ref=1e-4, outputs=["errors", "l2"],
    ),
    "sublinear-l2": dict(
        scenario="sublinear", eps_list=[1e-2, 1e-3], tau_list=[0.032, 0.016, 0.008, 0.004, 0.002, 0.001],
        t_end=8.0, integrators=["boris", "mrk4"], alpha=1.0, tau_ref=1e-4, outputs=["l2"],
    ),
    "sublinear-energy": dict(
        scenario="sublinear", eps_list=[1e-3], tau_list=[0.1, 0.05, 0.025, 0.0125],
        t_end=200.0, integrators=["boris", "rk4", "mrk4"], alpha=0.0, tau_ref=1.25e-3, outputs=["energy"],
    ),
    # step sizes divide the horizon 2*pi exactly
    "penning-convergence": dict(
        scenario="penning", eps_list=[None], tau_list=[2 * np.pi / n for n in PENNING_STEPS],
        t_end=2 * np.pi, integrators=["boris", "rk4", "mrk4"], tau_ref=2 * np.pi / 640000, outputs=["errors"],
    ),
    "penning-energy": dict(
        scenario="penning", eps_list=[None], tau_list=[2 * np.pi / n for n in PENNING_STEPS[:4]],
        t_end=2 * np.pi, integrators=["boris", "rk4", "mrk4"], tau_ref=2 * np.pi / 640000, outputs=["energy"],
    ),
}


def preset(name: str, **overrides) -> ExperimentSpec:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    cfg = dict(PRESETS[name])
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentSpec(name=name, **cfg)


def scenario_setup(spec: ExperimentSpec, eps):
    """Return ``(model, initial)`` for one grid point."""
    if spec.scenario == "sublinear":
        model = TrigField2D(spec.alpha)
        return model, sublinear_initial(eps, spec.alpha)
    if spec.scenario == "penning":
        sc = proton_scaling()
        init = penning_initial(sc, exact_width=spec.exact_width)
        if eps is not None:
            init = init.replace(eps=eps)
        return sc.field(), init
    raise ValueError(f"unknown scenario {spec.scenario!r}")


def _grid_times(spec: ExperimentSpec) -> float:
    return min(spec.tau_list)


def reference_trajectory(spec: ExperimentSpec, model, initial, engine=None) -> Trajectory:
    """Reference with output stride matching the smallest step size."""
    stride = int(round(_grid_times(spec) / spec.tau_ref))
    if spec.scenario == "penning":
        return penning_exact_oracle(initial, model, spec.t_end, spec.tau_ref, record_every=stride)
    return run_trajectory(initial, model, "rk4", spec.tau_ref, spec.t_end, engine, record_every=stride)


def energy_series(traj: Trajectory, model: FieldModel, engine=None):
    """Absolute and relative energy errors against the initial energy."""
    engine = engine or AverageEngine()
    E = np.array([diagnostics(s, model, engine).energy for s in traj.states])
    return E, np.abs(E - E[0]), np.abs(E - E[0]) / abs(E[0])


def norm_series(traj: Trajectory) -> np.ndarray:
    """Relative deviation of the squared norm from its initial value."""
    n = np.array([l2_norm_squared(s) for s in traj.states])
    return np.abs(n - n[0]) / n[0]


def run_experiment(spec: ExperimentSpec, engine=None, progress=None) -> dict:
    """Run every ``(eps, tau, integrator)`` combination of ``spec``.

    Failures of individual runs are recorded and do not stop the grid.
    """
    engine = engine or AverageEngine(spec.average_mode, spec.quad_order)
    results = {"preset": spec.name, "runs": [], "slopes": {}}
    for eps in spec.eps_list:
        model, init = scenario_setup(spec, eps)
        ref = None
        if "errors" in spec.outputs or "l2" in spec.outputs:
            ref = reference_trajectory(spec, model, init, engine)
        for integ in spec.integrators:
            by_tau = {}
            for tau in spec.tau_list:
                rec = {"eps": init.eps, "tau": tau, "integrator": integ}
                try:
                    traj = run_trajectory(init, model, integ, tau, spec.t_end, engine)
                    rec["runtime_s"] = traj.runtime_s
                    if ref is not None and "errors" in spec.outputs:
                        e = trajectory_errors(traj, ref, model, engine)
                        rec["max_errors"] = e["max"]
                        rec["final_errors"] = e["final"]
                    if ref is not None and "l2" in spec.outputs:
                        rec["l2_error"] = final_l2_error(traj, ref, model, engine)
                    if "energy" in spec.outputs:
                        _, ea, er = energy_series(traj, model, engine)
                        rec["max_energy_err_abs"] = float(ea.max())
                        rec["max_energy_err_rel"] = float(er.max())
                        rec["max_norm_dev"] = float(norm_series(traj).max())
                    rec["trajectory"] = traj
                except (GaussmagError, ValueError, np.linalg.LinAlgError) as exc:
                    logger.error("run eps=%s tau=%s %s failed: %s", eps, tau, integ, exc)
                    rec["error"] = str(exc)
                results["runs"].append(rec)
                by_tau[tau] = rec
                if progress:
                    progress(rec)
            results["slopes"][(init.eps, integ)] = _slopes_for(by_tau)
    return results


def _slopes_for(by_tau: dict) -> dict:
    out = {}
    ok = {t: r for t, r in by_tau.items() if "error" not in r}
    if len(ok) < 2:
        return out
    first = next(iter(ok.values()))
    if "max_errors" in first:
        for k in first["max_errors"]:
            out[k] = convergence_slopes({t: r["max_errors"][k] for t, r in ok.items()})["asymptotic"]
    if "l2_error" in first:
        out["l2"] = convergence_slopes({t: r["l2_error"] for t, r in ok.items()})["asymptotic"]
    if "max_energy_err_abs" in first:
        out["energy"] = convergence_slopes({t: r["max_energy_err_abs"] for t, r in ok.items()})["asymptotic"]
    return out
