"""Command line entry point: ``simulate``, ``estimate`` and ``metrics``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import HybridManipError
from .estimation.replay import read_estimator_log, replay, write_estimates
from .estimation.ekf import NoiseModel
from .estimation.mhe import MheConfig
from .sim.logs import read_log, read_sidecar
from .sim.metrics import compute_tracking_metrics
from .sim.plots import render_report
from .sim.runner import run_scenario
from .sim.scenario import Scenario

# exit status per diagnostic kind; anything unlisted maps to 1
EXIT_CODES = {
    "usage": 2,
    "invalid-scenario": 2,
    "invalid-log": 2,
    "controller-infeasible": 3,
    "contact-lost": 4,
    "estimator-nonconvergence": 5,
    "numerical-failure": 6,
    "euler-singularity": 6,
    "simulation-abort": 7,
}


class _LogError(HybridManipError):
    kind = "invalid-log"


def _diag(kind: str, msg: str) -> int:
    print(f"error[{kind}]: {msg}", file=sys.stderr)
    return EXIT_CODES.get(kind, 1)


def _jsonable(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, float) and math.isnan(v):
            v = None
        out[k] = v
    return out


def cmd_simulate(args) -> int:
    sc = Scenario.load(args.scenario, overrides=args.override or (), seed=args.seed)
    out = Path(args.out)
    res = run_scenario(sc, out_dir=out, raise_on_abort=False)
    figures = []
    if len(res.log["t"]):
        figures = render_report(res.log, res.paths["log"], title=sc.doc["name"])
    summary = {"log": str(res.paths["log"]), "sidecar": str(res.paths["sidecar"]),
               "figures": [str(p) for p in figures], "metrics": _jsonable(res.metrics.as_dict())}
    print(json.dumps(summary, indent=2))
    if res.abort is not None:
        return _diag(res.abort.kind, f"{res.abort} (partial log kept at {res.paths['log']})")
    return 0


def _scenario_for(log_path) -> Scenario | None:
    side = read_sidecar(log_path)
    if side is None:
        return None
    return Scenario(side["scenario"])


def _estimator_table(path: Path):
    """Accept the estimator CSV itself or a trajectory CSV with a sibling one."""
    try:
        return read_estimator_log(path), path
    except ValueError:
        sibling = path.with_name(path.stem + "_estimator.csv")
        if sibling.exists():
            return read_estimator_log(sibling), sibling
        raise


def cmd_estimate(args) -> int:
    path = Path(args.log)
    if not path.exists():
        raise _LogError(f"{path}: no such file")
    try:
        table, src = _estimator_table(path)
    except ValueError as e:
        raise _LogError(str(e)) from None
    traj = path if src != path else path.with_name(path.stem.removesuffix("_estimator") + ".csv")
    sc = _scenario_for(traj) or Scenario()
    e = sc.doc["estimator"]
    noise = NoiseModel.from_dict({"Q": e["Q"], "R": e["R"]})
    cfg = MheConfig(noise_floor=float(e["noise_floor"]), prior_sigma=tuple(e["prior_sigma"]))
    horizon = int(args.horizon if args.horizon is not None else e["horizon"])
    if horizon < 1:
        raise _LogError("horizon must be >= 1")
    p = sc.vehicle_params()
    rows = replay(table, p.mass, p.gravity, horizon, noise, cfg)
    out = Path(args.out) if args.out else src.with_name(src.stem + "_mhe.csv")
    write_estimates(out, rows)
    g = rows[:, 10]
    ok = np.isfinite(g)
    summary = {"input": str(src), "output": str(out), "horizon": horizon, "samples": int(len(rows)),
               "gamma_hat_deg_final": float(np.degrees(g[ok][-1])) if ok.any() else None,
               "mean_iterations": float(np.mean(rows[:, 12]))}
    print(json.dumps(summary, indent=2))
    return 0


def cmd_metrics(args) -> int:
    path = Path(args.log)
    if not path.exists():
        raise _LogError(f"{path}: no such file")
    try:
        cols = read_log(path)
        P = np.column_stack([cols["x"], cols["y"], cols["z"]])
        R = np.column_stack([cols["ref_x"], cols["ref_y"], cols["ref_z"]])
    except (KeyError, ValueError) as e:
        raise _LogError(f"{path}: not a trajectory log ({e})") from None
    if len(cols["t"]) == 0:
        raise _LogError(f"{path}: empty log")
    sc = _scenario_for(path)
    settle = args.settle_time
    gamma_true, window = None, 1.0
    if sc is not None:
        m = sc.doc["metrics"]
        settle = float(m["settle_time"]) if settle is None else settle
        window = float(m["gamma_window"])
        s = sc.surface_model()
        gamma_true = s.gamma if s.in_contact else None
    settle = min(settle or 0.0, float(cols["t"][-1]))
    met = compute_tracking_metrics(cols["t"], P, R, settle, cols.get("U1"), cols.get("gamma_hat"),
                                   gamma_true, window)
    print(json.dumps(_jsonable(met.as_dict()), indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hybridmanip", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a scenario file and write log, sidecar and figures")
    s.add_argument("scenario")
    s.add_argument("--out", default="out", help="output directory (default: out)")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--override", action="append", metavar="KEY=VALUE",
                   help="dotted key override, repeatable (e.g. surface.gamma_deg=60)")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate", help="replay the moving-horizon estimator over a log")
    e.add_argument("log")
    e.add_argument("--horizon", type=int, default=None)
    e.add_argument("--out", default=None, help="output CSV (default: <log>_mhe.csv)")
    e.set_defaults(func=cmd_estimate)

    m = sub.add_parser("metrics", help="tracking metrics of a trajectory log")
    m.add_argument("log")
    m.add_argument("--settle-time", type=float, default=None)
    m.set_defaults(func=cmd_metrics)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0) and EXIT_CODES["usage"]
    try:
        return args.func(args)
    except HybridManipError as e:
        return _diag(e.kind, str(e))
    except (OSError, ValueError) as e:
        return _diag("invalid-log" if args.command != "simulate" else "invalid-scenario", str(e))


if __name__ == "__main__":
    sys.exit(main())
