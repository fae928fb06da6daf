"""Command-line entry points.

    pmesii run       --scenario demo --seed 1 --out out/
    pmesii sweep     --scenario demo --seed 0 --out out/ --dimension replan_period --values 18,9,6,3 --seeds-per-cell 50
    pmesii xgame     --scenario demo --seed 3 --out out/ [--years 10]
    pmesii nextstate --scenario demo --seed 5 --out out/ [--teams 3] [--trials 1000]
    pmesii serve     --state-dir state/ [--host 127.0.0.1] [--port 8000]
    pmesii replay    --manifest out/manifest.json --out replayed/

--scenario takes a JSON file path or the literal "demo". Data CSVs are
byte-stable for fixed inputs; the manifest carries the timestamps and the
full scenario document so a replay needs nothing else. Exit codes: 0 ok,
2 validation problem, 1 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import platform
import sys
import time

import numpy as np

from .. import __version__
from ..domain import validate_scenario
from ..errors import (
    ConstraintError,
    DimensionError,
    PmesiiError,
    RangeError,
    ScheduleError,
    SchemaError,
)
from ..mpc import run_closed_loop
from ..scenarios import demo_assumption_sets, demo_document, demo_milestone
from ..xgame import XGameConfig, phases_csv, run_xgame
from .store import canonical
from .sweep import ExperimentSpec, experiment_sweep

VALIDATION_ERRORS = (SchemaError, RangeError, DimensionError, ScheduleError, ConstraintError)


def load_scenario_document(source: str) -> dict:
    if source == "demo":
        return demo_document()
    try:
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise SchemaError(f"scenario file not found: {source}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"scenario file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError("scenario file must contain a JSON object")
    return doc


def apply_overrides(doc: dict, args) -> dict:
    import copy

    doc = copy.deepcopy(doc)
    if getattr(args, "replan_months", None) is not None:
        doc["control"]["replan_period_months"] = args.replan_months
    if getattr(args, "mismatch", None) is not None:
        doc["mismatch"]["level"] = args.mismatch
    return doc


def write_manifest(out_dir, command: str, doc: dict, args_payload: dict,
                   outputs: dict, started: float) -> None:
    manifest = {
        "command": command,
        "scenario": {
            "sha256": hashlib.sha256(canonical(doc).encode("utf-8")).hexdigest(),
            "document": doc,
        },
        "args": args_payload,
        "outputs": outputs,
        "versions": {
            "pmesii": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "timings": {"seconds": round(time.time() - started, 3)},
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    path = out_dir / "manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_run(args, doc=None) -> int:
    from pathlib import Path

    started = time.time()
    if doc is None:
        doc = apply_overrides(load_scenario_document(args.scenario), args)
    scenario = validate_scenario(doc)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log = run_closed_loop(scenario, args.seed, open_loop=args.open_loop)
    csv_path = out / "runlog.csv"
    log.to_csv(csv_path)
    write_manifest(
        out, "run", doc,
        {"seed": args.seed, "open_loop": args.open_loop},
        {"runlog_csv": csv_path.name, "final_cost": log.final_cost,
         "episodes": len(log.episodes)},
        started,
    )
    print(f"{'open' if args.open_loop else 'closed'}-loop run: "
          f"{log.weeks} weeks, {len(log.episodes)} episode(s), "
          f"final cost {log.final_cost:.3f} -> {csv_path}")
    return 0


def cmd_sweep(args, doc=None) -> int:
    from pathlib import Path

    started = time.time()
    if doc is None:
        doc = apply_overrides(load_scenario_document(args.scenario), args)
    validate_scenario(doc)
    try:
        values = [float(v) if args.dimension != "replan_period" else int(v)
                  for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise SchemaError(f"--values: could not parse {args.values!r}") from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "sweep.csv"
    spec = ExperimentSpec(
        scenario_doc=doc,
        dimension=args.dimension,
        values=tuple(values),
        seeds_per_cell=args.seeds_per_cell,
        out_path=csv_path,
    )
    rows = experiment_sweep(spec)
    write_manifest(
        out, "sweep", doc,
        {"seed": args.seed, "dimension": args.dimension, "values": values,
         "seeds_per_cell": args.seeds_per_cell},
        {"sweep_csv": csv_path.name, "rows": len(rows)},
        started,
    )
    print(f"sweep over {args.dimension} {values}: {len(rows)} rows -> {csv_path}")
    return 0


def cmd_xgame(args, doc=None) -> int:
    from pathlib import Path

    started = time.time()
    if doc is None:
        doc = apply_overrides(load_scenario_document(args.scenario), args)
    scenario = validate_scenario(doc)
    config = XGameConfig(game_years=args.years)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = run_xgame(scenario, seed=args.seed, config=config)
    log_path = out / "game_runlog.csv"
    phase_path = out / "phases.csv"
    result.log.to_csv(log_path)
    phases_csv(result.phases, result.ledger, phase_path)
    write_manifest(
        out, "xgame", doc,
        {"seed": args.seed, "years": args.years},
        {"game_runlog_csv": log_path.name, "phases_csv": phase_path.name,
         "phases": len(result.phases), "final_cost": result.log.final_cost},
        started,
    )
    print(f"x-game: {len(result.phases)} phases over {config.game_weeks} weeks "
          f"-> {phase_path}")
    return 0


def cmd_nextstate(args, doc=None) -> int:
    from pathlib import Path

    from ..nextstate import (
        PlantSampler,
        SelectionWeights,
        alternatives_csv,
        assess_risk_feasibility,
        plan_alternatives,
        select_strategy,
    )

    started = time.time()
    if doc is None:
        doc = apply_overrides(load_scenario_document(args.scenario), args)
    scenario = validate_scenario(doc)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    milestone = demo_milestone(scenario)
    variants = demo_assumption_sets()[: max(2, args.teams)]
    alts = plan_alternatives(scenario.initial_state(), milestone, variants,
                             scenario, seed=args.seed)
    sampler = PlantSampler(scenario)
    scored = [
        alt.scored(*assess_risk_feasibility(alt, sampler, args.trials, (args.seed, 11, k),
                                            scenario.initial_state(), scenario))
        for k, alt in enumerate(alts)
    ]
    chosen = select_strategy(scored, SelectionWeights(cost=0.05, infeasibility=5.0, risk=10.0))
    csv_path = out / "alternatives.csv"
    alternatives_csv(scored, chosen, csv_path)
    write_manifest(
        out, "nextstate", doc,
        {"seed": args.seed, "teams": len(variants), "trials": args.trials},
        {"alternatives_csv": csv_path.name, "chosen_team": chosen.team_id,
         "feasibility": chosen.feasibility, "risk": chosen.risk},
        started,
    )
    print(f"next-state: {len(scored)} alternatives, chose {chosen.team_id} "
          f"(feasibility {chosen.feasibility:.3f}, risk {chosen.risk:.4f}) -> {csv_path}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.state_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_replay(args) -> int:
    from pathlib import Path

    with open(args.manifest, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    doc = manifest["scenario"]["document"]
    digest = hashlib.sha256(canonical(doc).encode("utf-8")).hexdigest()
    if digest != manifest["scenario"]["sha256"]:
        raise SchemaError("manifest scenario document does not match its hash")
    command = manifest["command"]
    saved = manifest["args"]
    # the embedded document already carries any overrides from the original run
    ns = argparse.Namespace(scenario="<manifest>", out=args.out, seed=saved.get("seed", 0),
                            replan_months=None, mismatch=None)
    if command == "run":
        ns.open_loop = saved.get("open_loop", False)
        return cmd_run(ns, doc=doc)
    if command == "sweep":
        ns.dimension = saved["dimension"]
        ns.values = ",".join(str(v) for v in saved["values"])
        ns.seeds_per_cell = saved["seeds_per_cell"]
        return cmd_sweep(ns, doc=doc)
    if command == "xgame":
        ns.years = saved.get("years", 10)
        return cmd_xgame(ns, doc=doc)
    if command == "nextstate":
        ns.teams = saved.get("teams", 3)
        ns.trials = saved.get("trials", 1000)
        return cmd_nextstate(ns, doc=doc)
    raise SchemaError(f"manifest command {command!r} cannot be replayed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pmesii",
                                     description="PMESII planning engine and wargame harness")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", required=True,
                           help="scenario JSON path, or 'demo'")
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--replan-months", type=int, default=None,
                       help="override the replan period")
        p.add_argument("--mismatch", type=float, default=None,
                       help="override the mismatch level")

    p_run = sub.add_parser("run", help="one closed- or open-loop run")
    common(p_run)
    p_run.add_argument("--open-loop", action="store_true")
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="paired open/closed experiment sweep")
    common(p_sweep)
    p_sweep.add_argument("--dimension", required=True,
                         choices=["replan_period", "mismatch", "noise"])
    p_sweep.add_argument("--values", required=True, help="comma-separated sweep values")
    p_sweep.add_argument("--seeds-per-cell", type=int, default=50)
    p_sweep.set_defaults(fn=cmd_sweep)

    p_xg = sub.add_parser("xgame", help="scripted five-cell wargame")
    common(p_xg)
    p_xg.add_argument("--years", type=int, default=10)
    p_xg.set_defaults(fn=cmd_xgame)

    p_ns = sub.add_parser("nextstate", help="next-state planning pipeline")
    common(p_ns)
    p_ns.add_argument("--teams", type=int, default=3)
    p_ns.add_argument("--trials", type=int, default=1000)
    p_ns.set_defaults(fn=cmd_nextstate)

    p_serve = sub.add_parser("serve", help="session service (JSON over HTTP)")
    p_serve.add_argument("--state-dir", required=True)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(fn=cmd_serve)

    p_replay = sub.add_parser("replay", help="re-run a prior manifest bit-exactly")
    p_replay.add_argument("--manifest", required=True)
    p_replay.add_argument("--out", required=True)
    p_replay.set_defaults(fn=cmd_replay)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PmesiiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # internal
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
