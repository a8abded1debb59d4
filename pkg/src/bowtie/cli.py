"""Command line interface.

Exit codes: 0 success, 1 a check or test failed, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

PROBLEMS = ("emitter", "capacity", "auxiliary", "background", "single")


class UsageError(Exception):
    pass


def _angle(text: str) -> float:
    """Float, optionally written as a multiple of pi (``0.5pi``, ``pi/2``)."""
    t = text.strip().lower().replace(" ", "")
    try:
        if "pi" in t:
            t = t.replace("*", "")
            if t.startswith("pi/"):
                return math.pi / float(t[3:])
            head, _, tail = t.partition("pi")
            val = (float(head) if head not in ("", "+") else 1.0) * math.pi
            return val / float(tail[1:]) if tail.startswith("/") else val
        return float(t)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an angle: {text!r}") from exc


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bowtie", description="Dipole fields near two touching-cone inclusions.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="run the analytic and oracle self-checks")
    p.add_argument("--quick", action="store_true", help="skip the boundary-integral solves")

    p = sub.add_parser("solve", help="solve one exterior problem")
    p.add_argument("--config", help="geometry file (JSON or YAML)")
    p.add_argument("--alpha", type=_angle)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--problem", choices=PROBLEMS, default="emitter")
    p.add_argument("--direction", type=float, nargs=2, default=(1.0, 0.0), metavar=("A1", "A2"))
    p.add_argument("--p", type=float, default=0.0, help="emitter height in units of epsilon")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("sweep", help="epsilon sweep with exponent fits and band checks")
    p.add_argument("--config", help="sweep file (JSON or YAML)")
    p.add_argument("--case", choices=("1", "2", "3", "case1", "case2", "case3", "single", "background"))
    p.add_argument("--alpha", type=_angle)
    p.add_argument("--p", type=float)
    p.add_argument("--epsilons", type=float, nargs="+")
    p.add_argument("--out", required=True)

    p = sub.add_parser("fit", help="power-law fit of stored samples")
    p.add_argument("input", help="samples.csv, or a two-column .dat/.csv file")
    p.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"), help="abscissa window")
    p.add_argument("--min-r2", type=float, default=0.999)

    p = sub.add_parser("check-condition-a", help="circle-through-vertices test for the emitter height")
    p.add_argument("--alpha", type=_angle, required=True)
    p.add_argument("--p", type=float, required=True)

    p = sub.add_parser("report", help="summarise one or more sweep reports")
    p.add_argument("paths", nargs="+", help="report.json files or directories containing one")
    return ap


# ----------------------------------------------------------------------


def _cmd_validate(args) -> int:
    from .validation import run_validation

    checks = run_validation(quick=args.quick)
    for c in checks:
        print(c.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def _geometry(args):
    from .geometry import BowtieConfig, config_from_mapping, load_config

    if args.config:
        return config_from_mapping(load_config(args.config))
    if args.alpha is None or args.epsilon is None:
        raise UsageError("give --config or both --alpha and --epsilon")
    return BowtieConfig(args.alpha, args.epsilon), {}


def _cmd_solve(args) -> int:
    from .bie import ProblemSpec, solve_problem

    cfg, mesh = _geometry(args)
    a = np.asarray(args.direction, dtype=float)
    if np.hypot(*a) == 0:
        raise UsageError("direction must be nonzero")
    a = tuple(a / np.hypot(*a))
    spec = {
        "emitter": lambda: ProblemSpec.emitter(cfg, a, args.p),
        "capacity": lambda: ProblemSpec.capacity(cfg),
        "auxiliary": lambda: ProblemSpec.auxiliary(cfg, a, args.p),
        "background": lambda: ProblemSpec.background(cfg, a),
        "single": lambda: ProblemSpec.single_inclusion(cfg, a, args.p),
    }[args.problem]()
    res = solve_problem(spec, mesh or None)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    res.to_json(out / "solve.json")
    res.density_csv(out / "density.csv")
    res.mesh.to_csv(out / "mesh.csv")
    consts = ", ".join(f"{k}={v:.12g}" for k, v in res.constants.items())
    print(f"{args.problem}: nodes={res.mesh.total_nodes} constants: {consts} residual={res.residual:.2e}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    from .experiments import SweepConfig, epsilon_sweep, write_outputs

    if args.config:
        data = dict(SweepConfig.load(args.config).to_dict())
        base = _sweep_mapping(data)
    else:
        if args.case is None:
            raise UsageError("give --config or --case")
        base = {"case": args.case}
    for key in ("case", "alpha", "p", "epsilons"):
        val = getattr(args, key)
        if val is not None:
            base[key] = val
    cfg = SweepConfig.from_mapping(base)
    report = epsilon_sweep(cfg)
    write_outputs(report, args.out)
    for c in report.checks:
        print(f"{'PASS' if c['pass'] else 'FAIL'} {c['name']}")
    print(f"sweep {cfg.case}: {'PASS' if report.passed else 'FAIL'} ({args.out}/report.json)")
    return EXIT_OK if report.passed else EXIT_FAIL


def _sweep_mapping(d: dict) -> dict:
    """Back from :meth:`SweepConfig.to_dict` to loader keys."""
    return {
        "case": d["case"], "alpha": d["alpha"], "p": d["p"], "epsilons": d["epsilons"],
        "mesh": d["mesh"], "ray": d["ray"], "fit_window": d["fit_window"],
        "fixed_point": d["fixed_point"], "thresholds": d["thresholds"],
        "tolerances": d["tolerances"], "mu": d["mu"],
    }


def _read_xy(path: Path) -> np.ndarray:
    text = path.read_text().splitlines()
    if not text:
        raise UsageError(f"{path} is empty")
    if text[0].startswith("x,y,u"):
        rows = list(csv.DictReader(text))
        x = [min(float(r["dist_V1"]), float(r["dist_V2"])) for r in rows]
        y = [math.hypot(float(r["ux"]), float(r["uy"])) for r in rows]
        return np.c_[x, y]
    rows = []
    for line in text:
        parts = line.replace(",", " ").split()
        if len(parts) < 2:
            continue
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError:
            continue  # header
    return np.asarray(rows)


def _cmd_fit(args) -> int:
    from .experiments import fit_power_law

    path = Path(args.input)
    if not path.exists():
        raise UsageError(f"{path} does not exist")
    xy = _read_xy(path)
    if xy.ndim != 2 or xy.shape[0] == 0:
        raise UsageError(f"{path}: no numeric rows")
    fit = fit_power_law(xy[:, 0], xy[:, 1], args.window, min_r_squared=args.min_r2, strict=False)
    print(json.dumps(fit.to_dict(), sort_keys=True))
    return EXIT_OK if fit.accepted else EXIT_FAIL


def _cmd_condition(args) -> int:
    from .geometry import check_condition_a

    res = check_condition_a(args.alpha, args.p)
    print(res)
    return EXIT_OK if res.holds else EXIT_FAIL


def _cmd_report(args) -> int:
    files = []
    for p in map(Path, args.paths):
        f = p / "report.json" if p.is_dir() else p
        if not f.exists():
            raise UsageError(f"no report at {f}")
        files.append(f)
    ok = True
    for f in files:
        rep = json.loads(f.read_text())
        print(f"== {f} [{rep['config']['case']}] {'PASS' if rep['pass'] else 'FAIL'}")
        for c in rep["checks"]:
            val = c["value"]
            shown = f"{val:.4g}" if isinstance(val, float) else json.dumps(val)
            print(f"  {'PASS' if c['pass'] else 'FAIL'} {c['name']}: {shown}")
        ok &= bool(rep["pass"])
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "validate": _cmd_validate,
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "fit": _cmd_fit,
    "check-condition-a": _cmd_condition,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    from .geometry import GeometryError

    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (UsageError, GeometryError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
