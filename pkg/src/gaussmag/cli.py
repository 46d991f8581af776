"""Command line interface.

Subcommands: ``simulate``, ``converge``, ``energy``, ``check`` and
``penning-scale``. Exit codes: 0 success, 1 invalid input, 2 numerical
failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict

import numpy as np

from gaussmag import checks
from gaussmag.averages import AverageEngine
from gaussmag.errors import GaussmagError
from gaussmag.fields import TrapParameters, penning_scaling
from gaussmag.io import emit_csv, emit_json, output_dir, trajectory_records
from gaussmag.scenarios import (
    PRESETS,
    ExperimentSpec,
    preset,
    run_experiment,
    run_trajectory,
    scenario_setup,
)

logger = logging.getLogger("gaussmag")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _add_run_options(p):
    p.add_argument("--preset", choices=sorted(PRESETS), required=True)
    p.add_argument("--config", help="JSON file with preset overrides")
    p.add_argument("--integrator", action="append", choices=["boris", "rk4", "mrk4"], help="repeatable")
    p.add_argument("--eps", type=_floats, help="comma separated eps values")
    p.add_argument("--tau", type=_floats, help="comma separated step sizes (decreasing)")
    p.add_argument("--t-end", type=float)
    p.add_argument("--tau-ref", type=float)
    p.add_argument("--quad-order", type=int)
    p.add_argument("--average-mode", choices=["quadrature", "analytic", "point"])
    p.add_argument("--out", help="output directory (default $GWP_OUT_DIR or .)")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gaussmag", description="Gaussian wave packets in magnetic fields")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="one trajectory, per-step CSV")
    _add_run_options(p)
    p.add_argument("--record-every", type=int, default=1)

    p = sub.add_parser("converge", help="step-size study with slope summary")
    _add_run_options(p)

    p = sub.add_parser("energy", help="long-horizon energy and norm study")
    _add_run_options(p)

    p = sub.add_parser("check", help="identity and property suites")
    p.add_argument("--suite", choices=["all", *checks.SUITES], default="all")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("penning-scale", help="dimensionless Penning trap parameters")
    p.add_argument("--species", choices=["proton", "electron", "custom"], default="proton")
    p.add_argument("--delta", type=float, help="trap size [m]")
    p.add_argument("--B0", type=float, help="magnetic field [T]")
    p.add_argument("--phi0", type=float, help="electrode potential [V]")
    p.add_argument("--mass", type=float, help="particle mass [kg] (custom)")
    p.add_argument("--charge", type=float, help="particle charge [C] (custom)")
    p.add_argument("--json", action="store_true")
    return parser


def _spec_from_args(args) -> ExperimentSpec:
    overrides = {}
    if args.config:
        with open(args.config) as fh:
            overrides.update(json.load(fh))
    flag_map = {
        "integrators": args.integrator,
        "eps_list": args.eps,
        "tau_list": args.tau,
        "t_end": args.t_end,
        "tau_ref": args.tau_ref,
        "quad_order": args.quad_order,
        "average_mode": args.average_mode,
    }
    overrides.update({k: v for k, v in flag_map.items() if v is not None})
    return preset(args.preset, **overrides)


def _spec_metadata(spec: ExperimentSpec) -> dict:
    meta = asdict(spec)
    meta["t_end"] = float(meta["t_end"])
    return meta


def _run_single(spec_dict: dict):
    spec = ExperimentSpec(**spec_dict)
    return run_experiment(spec)


def _run_grid(spec: ExperimentSpec, jobs: int) -> list[dict]:
    """Run the grid, split by ``(eps, integrator)`` across processes when ``jobs > 1``."""
    if jobs <= 1:
        return [run_experiment(spec)]
    parts = []
    base = asdict(spec)
    for eps in spec.eps_list:
        for integ in spec.integrators:
            parts.append(dict(base, eps_list=[eps], integrators=[integ]))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_single, parts))


def _summaries(results: list[dict], spec: ExperimentSpec, runtime: float) -> dict:
    runs, slopes = [], {}
    for res in results:
        for r in res["runs"]:
            runs.append({k: v for k, v in r.items() if k != "trajectory"})
        for (eps, integ), s in res["slopes"].items():
            slopes[f"{integ}@eps={eps:g}"] = s
    return {
        "preset": spec.name,
        "eps": [r["eps"] for r in runs],
        "tau": [r["tau"] for r in runs],
        "integrator": [r["integrator"] for r in runs],
        "max_errors": [r.get("max_errors") or r.get("max_energy_err_abs") or r.get("l2_error") for r in runs],
        "slopes": slopes,
        "runtime_s": runtime,
        "runs": runs,
        "config": _spec_metadata(spec),
    }


def cmd_simulate(args) -> int:
    spec = _spec_from_args(args)
    out = output_dir(args.out)
    engine = AverageEngine(spec.average_mode, spec.quad_order)
    tau = spec.tau_list[-1]
    for eps in spec.eps_list:
        model, init = scenario_setup(spec, eps)
        for integ in spec.integrators:
            traj = run_trajectory(init, model, integ, tau, spec.t_end, engine, record_every=args.record_every)
            rows = trajectory_records(traj.states, model, engine)
            path = emit_csv(rows, out / f"{spec.name}_{integ}_eps{init.eps:g}_tau{tau:g}.csv")
            print(f"wrote {path} ({len(rows)} rows, {traj.runtime_s:.2f}s)")
    emit_json({"config": _spec_metadata(spec), "tau": tau}, out / f"{spec.name}_simulate_meta.json")
    return EXIT_OK


def cmd_grid(args) -> int:
    spec = _spec_from_args(args)
    if args.command == "energy" and "energy" not in spec.outputs:
        spec.outputs = list(spec.outputs) + ["energy"]
    out = output_dir(args.out)
    start = time.perf_counter()
    results = _run_grid(spec, args.jobs)
    summary = _summaries(results, spec, time.perf_counter() - start)
    path = emit_json(summary, out / f"{spec.name}_{args.command}_summary.json")
    for name, s in summary["slopes"].items():
        print(name, " ".join(f"{k}={v:.2f}" for k, v in s.items()))
    print(f"wrote {path}")
    failed = [r for r in summary["runs"] if "error" in r]
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_check(args) -> int:
    suites = checks.SUITES if args.suite == "all" else [args.suite]
    ok = True
    for name in suites:
        for label, passed, detail in checks.run_suite(name, args.seed):
            ok &= passed
            print(f"[{'PASS' if passed else 'FAIL'}] {name}: {label} ({detail})")
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_penning_scale(args) -> int:
    if args.species == "custom":
        missing = [n for n in ("delta", "B0", "phi0", "mass", "charge") if getattr(args, n) is None]
        if missing:
            raise ValueError(f"custom species needs --{', --'.join(missing)}")
        params = TrapParameters(args.delta, args.B0, args.phi0, args.mass, args.charge)
    else:
        params = TrapParameters.for_species(args.species, delta_m=args.delta, B0_T=args.B0, phi0_V=args.phi0)
    sc = penning_scaling(params)
    info = {
        "eps": sc.eps,
        "ratio_omega": sc.ratio_omega,
        "ratio_B": sc.ratio_B,
        "nu_plus_Hz": sc.nu_plus,
        "nu_3_Hz": sc.nu_3,
        "nu_minus_Hz": sc.nu_minus,
        "omega_c": sc.omega_c,
        "Omega": sc.Omega,
        "B_m_T": sc.B_m,
    }
    if args.json:
        print(json.dumps(info, indent=2))
    else:
        print(f"eps               {sc.eps:.4e}")
        print(f"omega+/omega-     {sc.ratio_omega:.4f}")
        print(f"B0/B_m            {sc.ratio_B:.4f}")
        print(f"nu+               {_freq(sc.nu_plus)}")
        print(f"nu3               {_freq(sc.nu_3)}")
        print(f"nu-               {_freq(sc.nu_minus)}")
    return EXIT_OK


def _freq(hz: float) -> str:
    for unit, scale in (("GHz", 1e9), ("MHz", 1e6), ("kHz", 1e3)):
        if hz >= scale:
            return f"{hz / scale:.5g} {unit}"
    return f"{hz:.5g} Hz"


COMMANDS = {
    "simulate": cmd_simulate,
    "converge": cmd_grid,
    "energy": cmd_grid,
    "check": cmd_check,
    "penning-scale": cmd_penning_scale,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ValueError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (GaussmagError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
