"""Batch front end: scenario parsing, run orchestration, artifact export.

Verbs:
  simulate     one closed-loop rollout -> trajectory CSV + run report
  verify       PAC reachtube -> tube CSV/JSON + SVG projection + run report
  compare-l1   baseline vs L1 reachtubes side by side
  delay-sweep  settled max z-error vs injected input delay

All artifacts embed the scenario hash and are byte-reproducible for a fixed
scenario + seed; timing is reported on stderr only, never in artifacts.
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import packing as pk
from .backend import BACKEND_NAME
from .errors import ScenarioParseError
from .reach import HyperRect, check_safety, compute_reachtube
from .scenario import STATE_NAMES, Scenario, reference_positions, simulate
from .svgplot import tube_svg

TRAJ_COLUMNS = (["t", "px", "py", "pz", "vx", "vy", "vz",
                 "r00", "r01", "r02", "r10", "r11", "r12", "r20", "r21", "r22",
                 "wx", "wy", "wz", "m", "f_cmd", "Mx_cmd", "My_cmd", "Mz_cmd",
                 "f_applied", "Mx_applied", "My_applied", "Mz_applied",
                 "u_l1_f", "u_l1_Mx", "u_l1_My", "u_l1_Mz"])

DEFAULT_SWEEP_TAUS = [0.0, 0.03, 0.06, 0.09, 0.12]


def parse_scenario(path):
    """Scenario from a JSON file; unknown keys and bad values are rejected."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ScenarioParseError(f"scenario file not found: {path}")
    except json.JSONDecodeError as e:
        raise ScenarioParseError(f"{path}:{e.lineno}: {e.msg}")
    return Scenario.from_dict(raw)


def _csv_row(values):
    return ",".join(repr(float(v)) for v in values)


def write_trajectory_csv(path, traj):
    lines = [",".join(TRAJ_COLUMNS)]
    lines += [_csv_row(row) for row in traj.log]
    Path(path).write_text("\n".join(lines) + "\n")


def write_tube_csv(path, tube):
    header = ["t"] + [f"lo_{n}" for n in STATE_NAMES] + [f"hi_{n}" for n in STATE_NAMES]
    lines = [",".join(header)]
    for i in range(tube.ts.size):
        lines.append(_csv_row(np.concatenate([[tube.ts[i]], tube.lo[i], tube.hi[i]])))
    Path(path).write_text("\n".join(lines) + "\n")


def write_report(path, report):
    Path(path).write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")


def _tube_metrics(tube, sc):
    ref_z = reference_positions(tube.ts, sc.ref_spec)[:, 2]
    half_about_ref = float(np.max(np.maximum(np.abs(tube.lo[:, 2] - ref_z),
                                             np.abs(tube.hi[:, 2] - ref_z))))
    return {
        "max_tube_width": [float(w) for w in np.max(tube.hi - tube.lo, axis=0)],
        "max_z_half_width_about_ref": half_about_ref,
        "max_z_tracking_error": float(np.max(np.abs(tube.center[:, 2] - ref_z))),
    }


def _scenario_report(sc):
    return {"scenario_hash": sc.hash(), "scenario": sc.to_dict()}


def run_simulate(sc: Scenario, out_dir, seed=0):
    """Center-of-X0 rollout; emits traj.csv and report.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    traj = simulate(sc, seed=seed)
    write_trajectory_csv(out_dir / "traj.csv", traj)
    report = {**_scenario_report(sc), "seed": seed,
              "max_z_tracking_error": traj.max_z_error(),
              "rows": int(traj.log.shape[0]),
              "artifacts": ["traj.csv"]}
    write_report(out_dir / "report.json", report)
    return report


def _verify_one(sc, out_dir, prefix, dim, epsilon, delta, samples, seed, jobs):
    tube = compute_reachtube(sc, epsilon=epsilon, delta=delta, seed=seed,
                             samples=samples, jobs=jobs)
    verdict = None
    if sc.unsafe:
        verdict = check_safety(tube, HyperRect.from_named(sc.unsafe))
    di = STATE_NAMES.index(dim)
    ref = None
    if dim in ("px", "py", "pz"):
        ref = reference_positions(tube.ts, sc.ref_spec)[:, "xyz".index(dim[1])]
    label = "L1 on" if sc.l1_enabled else "baseline"
    svg = tube_svg(tube.ts, tube.lo[:, di], tube.hi[:, di], ref=ref,
                   title=f"{dim} reachtube ({label})", ylabel=f"{dim}")
    files = [f"{prefix}tube.csv", f"{prefix}tube.json", f"{prefix}tube_{dim}.svg"]
    created = []
    try:
        write_tube_csv(out_dir / files[0], tube)
        created.append(out_dir / files[0])
        (out_dir / files[2]).write_text(svg)
        created.append(out_dir / files[2])
        tube_meta = {**tube.provenance, **_tube_metrics(tube, sc),
                     "verdict": verdict,
                     "t": [float(t) for t in tube.ts[:: max(1, tube.ts.size // 50)]]}
        write_report(out_dir / files[1], tube_meta)
        created.append(out_dir / files[1])
    except Exception:
        for f in created:
            f.unlink(missing_ok=True)
        raise
    return tube, verdict, files


def run_verify(sc: Scenario, out_dir, dim="pz", epsilon=None, delta=None,
               samples=None, seed=None, jobs=1):
    """Reachtube artifacts for one scenario; emits tube CSV/JSON, SVG, report."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    eps = sc.epsilon if epsilon is None else epsilon
    dlt = sc.delta if delta is None else delta
    sd = sc.seed if seed is None else seed
    tube, verdict, files = _verify_one(sc, out_dir, "", dim, eps, dlt,
                                       samples, sd, jobs)
    report = {**_scenario_report(sc), "verdict": verdict,
              **_tube_metrics(tube, sc),
              "sample_count": tube.provenance["sample_count"],
              "epsilon": eps, "delta": dlt, "seed": sd,
              "artifacts": files}
    write_report(out_dir / "report.json", report)
    return report


def run_compare_l1(sc: Scenario, out_dir, dim="pz", epsilon=None, delta=None,
                   samples=None, seed=None, jobs=1):
    """Baseline and L1 tubes of the same scenario, side by side."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    eps = sc.epsilon if epsilon is None else epsilon
    dlt = sc.delta if delta is None else delta
    sd = sc.seed if seed is None else seed
    results = {}
    artifacts = []
    for name, enabled in (("baseline", False), ("l1", True)):
        variant = Scenario.from_dict(sc.to_dict())
        variant.l1_enabled = enabled
        tube, verdict, files = _verify_one(variant, out_dir, f"{name}_", dim,
                                           eps, dlt, samples, sd, jobs)
        results[name] = {**_tube_metrics(tube, variant), "verdict": verdict,
                         "scenario_hash": variant.hash()}
        artifacts += files
    report = {**_scenario_report(sc), "compare": results,
              "epsilon": eps, "delta": dlt, "seed": sd,
              "artifacts": artifacts}
    write_report(out_dir / "report.json", report)
    return report


def sweep_metric(sc: Scenario, tau):
    """Worst settled max z-error over a deterministic 5-point mean-mass grid.

    The first part of each rollout is excluded so the metric reflects the
    sustained effect of the delay rather than the launch transient.
    """
    variant = Scenario.from_dict(sc.to_dict())
    variant.tau = tau
    t_min = min(2.0, 0.5 * variant.t_f)
    lo, hi = variant.mass.m_lo, variant.mass.m_hi
    worst = 0.0
    for m_bar in np.linspace(lo, hi, 5):
        x0 = variant.center_state()
        x0[18] = m_bar
        worst = max(worst, simulate(variant, x0=x0).max_z_error(t_min=t_min))
    return worst


def run_delay_sweep(sc: Scenario, out_dir, taus=None):
    """Error-vs-delay table; emits delay_sweep.csv and report.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    taus = DEFAULT_SWEEP_TAUS if taus is None else taus
    rows = [(tau, sweep_metric(sc, tau)) for tau in taus]
    lines = ["tau,max_z_error"] + [_csv_row(r) for r in rows]
    (out_dir / "delay_sweep.csv").write_text("\n".join(lines) + "\n")
    report = {**_scenario_report(sc),
              "sweep": [{"tau": t, "max_z_error": e} for t, e in rows],
              "artifacts": ["delay_sweep.csv"]}
    write_report(out_dir / "report.json", report)
    return report


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="quadverify",
        description="Reachability-based verification of quadrotor control "
                    "with L1 adaptive augmentation")
    ap.add_argument("--scenario", required=True, help="scenario JSON file")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--epsilon", type=float, default=None)
    ap.add_argument("--delta", type=float, default=None)
    ap.add_argument("--samples", type=int, default=None,
                    help="override the PAC sample count")
    ap.add_argument("--dim", default="pz", choices=STATE_NAMES,
                    help="state dimension for the SVG projection")
    ap.add_argument("--jobs", type=int, default=1,
                    help="simulation threads for reachtube sampling")
    sub = ap.add_subparsers(dest="verb", required=True)
    sub.add_parser("simulate")
    sub.add_parser("verify")
    sub.add_parser("compare-l1")
    sweep = sub.add_parser("delay-sweep")
    sweep.add_argument("--taus", type=float, nargs="+",
                       default=DEFAULT_SWEEP_TAUS)

    args = ap.parse_args(argv)
    sc = parse_scenario(args.scenario)
    t0 = time.perf_counter()
    if args.verb == "simulate":
        report = run_simulate(sc, args.out, seed=args.seed or 0)
    elif args.verb == "verify":
        report = run_verify(sc, args.out, dim=args.dim, epsilon=args.epsilon,
                            delta=args.delta, samples=args.samples,
                            seed=args.seed, jobs=args.jobs)
    elif args.verb == "compare-l1":
        report = run_compare_l1(sc, args.out, dim=args.dim,
                                epsilon=args.epsilon, delta=args.delta,
                                samples=args.samples, seed=args.seed,
                                jobs=args.jobs)
    else:
        report = run_delay_sweep(sc, args.out, taus=args.taus)
    elapsed = time.perf_counter() - t0
    print(f"[quadverify] backend={BACKEND_NAME} verb={args.verb} "
          f"wall={elapsed:.2f}s", file=sys.stderr)
    print(json.dumps({k: v for k, v in report.items() if k != "scenario"},
                     sort_keys=True, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
