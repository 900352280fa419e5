"""Command-line entry point.

Every run writes its outputs and a ``manifest.json`` into ``--out``. The
manifest records the resolved parameters; ``secretshare --from-manifest
PATH --out DIR`` repeats the run and produces byte-identical data files.
Exit codes: 0 success, 2 invalid input, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__

EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 2, 3
MANIFEST = "manifest.json"

# published values used by ``reproduce``: (parameter, theory, experiment, error)
PUBLISHED_TABLES = {
    "V": {"task": "det", "family": "pure", "v": 1.0, "rows": [
        ("S_z0", 0.5, 0.4975, 0.0005), ("S_z1", 0.3635, 0.35440, 0.00009), ("S", 0.8635, 0.8519, 0.0002)]},
    "VI": {"task": "det", "family": "partial", "v": 0.72, "rows": [
        ("S_z0", 0.43, 0.43, 0.001), ("S_z1", 0.3317, 0.327, 0.002), ("S", 0.7617, 0.757, 0.001)]},
    "VIII": {"task": "stoch", "family": "isotropic", "v": 1.0, "rows": [
        ("Rctrl_z0", 1, 0.9900, 0.0002), ("Rscrt_z0", 1, 0.9811, 0.0003), ("Rctrl_z1", 1, 0.9795, 0.0002),
        ("Rscrt_z1", 1, 0.9485, 0.0003), ("R", 1, 0.9748, 0.0001)]},
    "IX": {"task": "stoch", "family": "isotropic", "v": 0.47, "rows": [
        ("Rctrl_z0", 0.735, 0.7238, 0.0007), ("Rscrt_z0", 0.6025, 0.6086, 0.0009), ("Rctrl_z1", 0.735, 0.6613, 0.0007),
        ("Rscrt_z1", 0.603, 0.6161, 0.001), ("R", 0.66875, 0.6524, 0.0004)]},
    "X": {"rows": [(v, 0.9983 if v >= 0.42 else 0.9982, 0.0004) for v in
                   (0.40, 0.41, 0.42, 0.43, 0.44, 0.45, 0.46, 0.47, 0.48, 0.49, 0.50)] + [(1.0, 0.9947, 0.0009)]},
}
TOMO_EVENTS = 1400  # per setting and Bell state


class ValidationError(ValueError):
    pass


# --------------------------------------------------------------------------
# output helpers


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _rows_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    cols = list(rows[0]) if rows else []
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if v is None else v) for k, v in r.items()})
    return buf.getvalue()


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


class Outputs:
    """Single owner of the files written by one run."""

    def __init__(self, out_dir: Path, fmt: str):
        self.dir = out_dir
        self.fmt = fmt
        self.files: list[str] = []
        self.dir.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str):
        (self.dir / name).write_text(text)
        self.files.append(name)

    def table(self, stem: str, rows: list[dict], extra: dict | None = None):
        """Rows as CSV, or as JSON (with ``extra`` fields) when ``--format json``."""
        if self.fmt == "csv":
            self.write(f"{stem}.csv", _rows_csv(rows))
        else:
            self.write(f"{stem}.json", _dump_json({**(extra or {}), "rows": rows}))

    def record(self, stem: str, obj: dict):
        """A structured result; CSV form is the flattened key/value list."""
        if self.fmt == "csv":
            flat = _flatten(obj)
            self.write(f"{stem}.csv", _rows_csv([{"key": k, "value": _csv_value(v)} for k, v in flat.items()]))
        else:
            self.write(f"{stem}.json", _dump_json(obj))


def _csv_value(v):
    if isinstance(v, (list, tuple)):
        return json.dumps(v, default=_json_default)
    return v


# --------------------------------------------------------------------------
# validation


def _check_v(v):
    if v is None or not (0.0 <= v <= 1.0) or math.isnan(v):
        raise ValidationError("--v must lie in [0, 1]")


def _check_theta(theta):
    if theta is not None and not (0 < theta <= math.pi / 4 + 1e-15):
        raise ValidationError("--theta must lie in (0, pi/4]")


def _state_from_args(a):
    from .protocol import family_state
    from .states import DensityMatrix

    if getattr(a, "state", None):
        try:
            return DensityMatrix.load(a.state)
        except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read state file {a.state}: {exc}") from None
    _check_v(a.v)
    _check_theta(a.theta)
    return family_state(a.family, a.v, a.theta)


# --------------------------------------------------------------------------
# subcommands


def cmd_eval(a, out: Outputs):
    from .protocol import evaluate_family

    _check_v(a.v)
    _check_theta(a.theta)
    sc = evaluate_family(a.family, a.task, a.v, a.theta)
    rec = {"task": sc.task, "family": a.family, "v": a.v, "theta": a.theta, **sc.as_dict()}
    out.record("eval", rec)
    return rec


def cmd_sweep(a, out: Outputs):
    from .protocol import sweep

    _check_theta(a.theta)
    if a.points < 2:
        raise ValidationError("--points must be at least 2")
    _check_v(a.v_min)
    _check_v(a.v_max)
    vs = np.linspace(a.v_min, a.v_max, a.points)
    rows = sweep(a.family, a.task, vs, a.theta)
    out.table("sweep", rows)
    if a.svg:
        out.write("sweep.svg", _sweep_svg(rows, a.task))
    return {"points": len(rows)}


def _sweep_svg(rows, task) -> str:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "secretshare"
    key = "S" if task in ("det", "deterministic") else "R"
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot([r["v"] for r in rows], [r[key] for r in rows], label=key)
    ax.axhline(0.75 if key == "S" else 0.625, ls="--", color="grey", label="classical bound")
    ax.set_xlabel("visibility v")
    ax.set_ylabel(key)
    ax.legend()
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def cmd_threshold(a, out: Outputs):
    from .protocol import threshold

    _check_theta(a.theta)
    v = threshold(a.family, a.task, a.target, a.theta, tol=a.tol)
    rec = {"task": a.task, "family": a.family, "theta": a.theta, "target": a.target, "threshold": v, "tol": a.tol}
    out.record("threshold", rec)
    return rec


def cmd_classical(a, out: Outputs):
    from .classical import enumerate_deterministic, oracle_points

    res = enumerate_deterministic(a.task)
    rec = res.as_dict()
    if a.oracle:
        rec["oracle_max"] = oracle_points(a.task, a.seed)["max_count"] / 32
    out.record("classical", rec)
    return rec


def cmd_frontier(a, out: Outputs):
    from .classical import frontier, frontier_csv

    pts = frontier("stoch")
    if out.fmt == "csv":
        out.write("frontier.csv", frontier_csv(pts))
    else:
        rows = [{"Rscrt": float(p.R_scrt), "Rctrl": float(p.R_ctrl), "f_id": p.f_id, "g_id": p.g_id, "h_id": p.h_id} for p in pts]
        out.write("frontier.json", _dump_json({"rows": rows}))
    return {"points": len(pts)}


def cmd_seesaw(a, out: Outputs):
    from .seesaw import seesaw

    if a.restarts < 1:
        raise ValidationError("--restarts must be at least 1")
    res = seesaw(a.task, a.restarts, a.seed)
    rep = res.to_json(include_strategy=True)
    if out.fmt == "csv":
        rows = [{"restart": i, "final": t.final, "sweeps": t.sweeps, "monotone": t.monotone} for i, t in enumerate(res.traces)]
        out.write("seesaw.csv", _rows_csv(rows))
    else:
        out.write("seesaw.json", _dump_json(rep))
    return {"best": res.best}


def cmd_certify(a, out: Outputs):
    from .steering import DIRECTIONS, certify

    rho = _state_from_args(a)
    if a.level < 0:
        raise ValidationError("--level must be non-negative")
    dirs = DIRECTIONS if a.direction == "both" else (a.direction,)
    verdict = certify(rho, a.level, directions=dirs)
    rep = verdict.as_dict()
    out.record("certify", rep)
    return {"status": verdict.status}


def cmd_experiment(a, out: Outputs):
    from .optics import ExperimentConfig, run_experiment

    try:
        if a.config:
            cfg = ExperimentConfig.load(a.config)
        else:
            kw = dict(task=a.task, family=a.family, v=a.v, theta=a.theta, events=a.events, seed=a.seed)
            cfg = ExperimentConfig(**{k: v for k, v in kw.items() if v is not None})
    except (OSError, KeyError, TypeError) as exc:
        raise ValidationError(f"cannot read experiment config: {exc}") from None
    res = run_experiment(cfg)
    out.write("counts.csv", res.counts_csv())
    out.write("summary.json", _dump_json(res.summary()))
    return res.scores.as_dict()


def cmd_tomography(a, out: Outputs):
    from .optics import recombined_tomography, tomography
    from .states import bell_state

    if a.events is not None and a.events < 1:
        raise ValidationError("--events must be at least 1")
    if a.recombine:
        _check_v(a.v)
        res = recombined_tomography(a.v, a.events or TOMO_EVENTS, a.seed)
    else:
        rho = _state_from_args(a) if (a.state or a.family) else bell_state("phi+")
        res = tomography(rho, a.events, a.seed)
    out.record("tomography", res.summary())
    return {"fidelity": res.fidelity}


def cmd_verify_tables(a, out: Outputs):
    from .optics import settings_report_ok, verify_settings_tables

    rep = verify_settings_tables()
    rep["summary"] = settings_report_ok(rep)
    if out.fmt == "csv":
        rows = []
        for name, tab in rep["tables"].items():
            for r in tab["rows"] if isinstance(tab, dict) else tab:
                rows.append({"table": name, "row": r["row"], "match": r["match"], "finding": r.get("finding", "")})
        out.write("verify_tables.csv", _rows_csv(rows))
    else:
        out.write("verify_tables.json", _dump_json(rep))
    return rep["summary"]


def _reproduce_rows(which: list[str], events: int, seed: int) -> list[dict]:
    from .optics import ExperimentConfig, recombined_tomography, run_experiment
    from .protocol import evaluate_family

    rows = []
    for t in which:
        spec = PUBLISHED_TABLES[t]
        if t == "X":
            for v, fid, err in spec["rows"]:
                got = recombined_tomography(v, TOMO_EVENTS, seed).fidelity
                rows.append({"table": t, "parameter": f"fidelity v={v:.2f}", "published": fid, "computed": got,
                             "delta": got - fid, "published_error": err, "simulated": None, "simulated_se": None})
            continue
        sc = evaluate_family(spec["family"], spec["task"], spec["v"])
        vals = {**sc.by_z, "S": sc.S, "R": sc.R}
        sim = None
        if events:
            cfg = ExperimentConfig(task=spec["task"], family=spec["family"], v=spec["v"], events=events, seed=seed)
            sim = run_experiment(cfg)
            simvals = {**sim.scores.by_z, "S": sim.scores.S, "R": sim.scores.R}
        for name, theory, exp, err in spec["rows"]:
            rows.append({
                "table": t, "parameter": name, "published": theory, "computed": vals[name], "delta": vals[name] - theory,
                "published_experimental": exp, "published_error": err,
                "simulated": simvals[name] if sim else None, "simulated_se": sim.se[name] if sim else None,
            })
    return rows


def cmd_reproduce(a, out: Outputs):
    which = list(PUBLISHED_TABLES) if a.table == "all" else [a.table]
    if a.events is not None and a.events < 0:
        raise ValidationError("--events must be non-negative")
    rows = _reproduce_rows(which, a.events or 0, a.seed)
    cols = ["table", "parameter", "published", "computed", "delta", "published_experimental", "published_error", "simulated", "simulated_se"]
    rows = [{c: r.get(c) for c in cols} for r in rows]
    out.table("reproduce", rows)
    for r in rows:
        print(f"  {r['table']:>4} {r['parameter']:<16} published={r['published']:<8} computed={r['computed']:.6f} delta={r['delta']:+.2e}")
    return {"rows": len(rows)}


COMMANDS = {
    "eval": cmd_eval, "sweep": cmd_sweep, "threshold": cmd_threshold, "classical": cmd_classical,
    "frontier": cmd_frontier, "seesaw": cmd_seesaw, "certify": cmd_certify, "experiment": cmd_experiment,
    "tomography": cmd_tomography, "verify-tables": cmd_verify_tables, "reproduce": cmd_reproduce,
}


# --------------------------------------------------------------------------
# parser


def _task(s: str) -> str:
    if s not in ("det", "stoch", "deterministic", "stochastic"):
        raise argparse.ArgumentTypeError("task must be det or stoch")
    return s


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="secretshare", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--from-manifest", metavar="PATH", help="repeat the run recorded in a manifest")
    p.add_argument("--out", help="output directory (with --from-manifest)")
    sub = p.add_subparsers(dest="command")

    def common(sp, task=True, family=True, seed=True):
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        if seed:
            sp.add_argument("--seed", type=int, default=0)
        if task:
            sp.add_argument("--task", type=_task, default="det")
        if family:
            sp.add_argument("--family", choices=("isotropic", "partial", "pure"), default="isotropic")
            sp.add_argument("--theta", type=float, default=None, help="state angle for partial/pure families")

    sp = sub.add_parser("eval", help="exact scores of the canonical protocol")
    common(sp)
    sp.add_argument("--v", type=float, default=1.0)

    sp = sub.add_parser("sweep", help="scores over a visibility grid")
    common(sp)
    sp.add_argument("--v-min", type=float, default=0.0)
    sp.add_argument("--v-max", type=float, default=1.0)
    sp.add_argument("--points", type=int, default=101)
    sp.add_argument("--svg", action="store_true", help="also write sweep.svg (needs matplotlib)")

    sp = sub.add_parser("threshold", help="visibility above which the classical bound is beaten")
    common(sp)
    sp.add_argument("--target", type=float, default=None)
    sp.add_argument("--tol", type=float, default=1e-6)

    sp = sub.add_parser("classical", help="exhaustive classical enumeration")
    common(sp, family=False)
    sp.add_argument("--oracle", action="store_true", help="also run the shuffled oracle pass")

    sp = sub.add_parser("frontier", help="classical (R_scrt, R_ctrl) frontier")
    common(sp, task=False, family=False, seed=False)

    sp = sub.add_parser("seesaw", help="qubit seesaw lower bound")
    common(sp, family=False)
    sp.add_argument("--restarts", type=int, default=100)

    sp = sub.add_parser("certify", help="steering certificates")
    common(sp, task=False)
    sp.add_argument("--v", type=float, default=1.0)
    sp.add_argument("--state", help="state JSON file ({dim, re, im})")
    sp.add_argument("--level", type=int, default=2)
    sp.add_argument("--direction", choices=("both", "B->C", "C->B"), default="both")

    sp = sub.add_parser("experiment", help="Monte Carlo simulation of the optical experiment")
    common(sp)
    sp.set_defaults(family=None, task=None)
    sp.add_argument("--v", type=float, default=None)
    sp.add_argument("--events", type=int, default=None)
    sp.add_argument("--config", help="TOML or JSON experiment config")

    sp = sub.add_parser("tomography", help="simulated state tomography")
    common(sp, task=False)
    sp.set_defaults(family=None)
    sp.add_argument("--v", type=float, default=1.0)
    sp.add_argument("--state", help="state JSON file")
    sp.add_argument("--events", type=int, default=None, help="events per setting (omit for exact)")
    sp.add_argument("--recombine", action="store_true", help="per-Bell-state tomography recombined at visibility v")

    sp = sub.add_parser("verify-tables", help="check the optical settings tables")
    common(sp, task=False, family=False, seed=False)

    sp = sub.add_parser("reproduce", help="published result tables: published value, computed value, delta")
    common(sp, task=False, family=False)
    sp.add_argument("--table", choices=("V", "VI", "VIII", "IX", "X", "all"), default="all")
    sp.add_argument("--events", type=int, default=0, help="also simulate the experiment with this many events")
    return p


def _params(a) -> dict:
    return {k: v for k, v in sorted(vars(a).items()) if k not in ("out", "from_manifest", "command")}


def run(args: argparse.Namespace) -> int:
    out = Outputs(Path(args.out), getattr(args, "format", "csv"))
    t0 = time.perf_counter()
    result = COMMANDS[args.command](args, out)
    manifest = {
        "subcommand": args.command,
        "params": _params(args),
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "outputs": list(out.files),
        "wall_time_s": round(time.perf_counter() - t0, 3),
    }
    (out.dir / MANIFEST).write_text(_dump_json(manifest))
    print(json.dumps({"command": args.command, **_flatten(result)}, default=_json_default, sort_keys=True))
    return EXIT_OK


def _from_manifest(path: str, out: str | None, parser) -> argparse.Namespace:
    try:
        m = json.loads(Path(path).read_text())
        cmd, params = m["subcommand"], m["params"]
    except (OSError, ValueError, KeyError) as exc:
        raise ValidationError(f"cannot read manifest {path}: {exc}") from None
    if cmd not in COMMANDS:
        raise ValidationError(f"manifest names unknown subcommand {cmd!r}")
    defaults = parser.parse_args([cmd])
    ns = vars(defaults)
    unknown = set(params) - set(ns)
    if unknown:
        raise ValidationError(f"manifest has unknown parameters {sorted(unknown)}")
    ns.update(params)
    ns["out"] = out or str(Path(path).parent)
    return argparse.Namespace(**ns)


def main(argv: list[str] | None = None) -> int:
    from .steering import SolverError

    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.from_manifest:
            args = _from_manifest(args.from_manifest, args.out, parser)
        elif args.command is None:
            parser.print_help()
            return EXIT_INVALID
        return run(args)
    except SolverError as exc:
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
