"""
Robust Appointment Scheduling - Command Line
Estimate intervals, generate instances, solve, audit and compare schedules.

    python -m harness solve instance.json --method exact --out schedule.json
"""

import argparse
import json
import logging
import sys
from datetime import date
from pathlib import Path

import numpy as np

from config.solver_config import CLI, DATA, EXIT_CODES
from data.instances import (
    day_windows,
    eligible_days,
    estimate_intervals,
    generate_batch,
    generate_instance,
    split_by_date,
)
from data.records import load_records
from data.scenarios import durations_by_type, in_box_scenarios, replay_scenario, sample_scenarios
from harness.audit import audit_schedule
from harness.benchmark import COLUMNS, SWEEP_COLUMNS, compare, comparison_rows, sweep, sweep_summary
from harness.io import load_instance, load_intervals, load_samples, load_schedule, write_csv, write_json
from harness.runner import METHODS, run_safe, solve_method
from harness.verify import run_cases, verify_instance
from scheduling.adversary import worst_case_cost, worst_case_waits
from scheduling.errors import InfeasibleScheduleError, InvalidInputError
from scheduling.model import COST_TAGS, interappointment_times

logger = logging.getLogger(__name__)


def _emit(payload: dict, out, seed=None):
    if out:
        write_json(out, payload, seed=seed)
    else:
        print(json.dumps({"schema_version": CLI["schema_version"], **payload}, indent=2, default=str))


def _samples(args, inst):
    return load_samples(args.samples, inst.n) if getattr(args, "samples", None) else None


def _scenarios(args, inst, generated):
    """Evaluation scenarios: held-out records, a replay of the source day, or in-box draws."""
    if args.scenarios <= 0 and not args.replay:
        return []
    if args.records:
        if generated is None:
            raise InvalidInputError("sampling from records needs a generated instance (with exam types)")
        records = load_records(args.records)
        if args.replay:
            return [replay_scenario(generated, records, seed=args.seed)]
        return sample_scenarios(generated, durations_by_type(records), args.scenarios, seed=args.seed)
    if args.replay:
        raise InvalidInputError("--replay needs --records")
    return in_box_scenarios(inst, args.scenarios, seed=args.seed)


def cmd_estimate(args) -> dict:
    records = load_records(args.records)
    if args.split_date:
        records, held_out = split_by_date(records, date.fromisoformat(args.split_date))
        logger.info(f"Estimating on {len(records)} records before {args.split_date} ({len(held_out)} held out)")
    table = estimate_intervals(records, args.lo, args.hi)
    _emit(table.to_dict(), args.out)
    return table.to_dict()


def cmd_generate(args) -> dict:
    records = load_records(args.records)
    intervals = load_intervals(args.intervals)
    if args.all:
        batch = generate_batch(records, intervals, args.n, waits=(args.wait,), cost_tags=(args.cost_tag,),
                               noshow_rates=(args.noshow_rate,), seed=args.seed)
        out_dir = Path(args.out or "instances")
        for idx, generated in enumerate(batch):
            write_json(out_dir / f"instance_{generated.source_day}_{idx:03d}.json", generated.to_dict(), seed=args.seed)
        return {"instances": len(batch), "directory": str(out_dir)}

    days = eligible_days(records, args.n, intervals)
    if not days:
        raise InvalidInputError(f"no day holds {args.n} records with estimated intervals")
    day = date.fromisoformat(args.day) if args.day else days[0]
    if day not in days:
        raise InvalidInputError(f"{day} holds fewer than {args.n} usable records")
    generated = generate_instance(day_windows(records, intervals)[day], intervals, args.n, args.noshow_rate,
                                  args.wait, args.cost_tag, np.random.default_rng(args.seed), seed=args.seed)
    _emit(generated.to_dict(), args.out, seed=args.seed)
    return generated.to_dict()


def cmd_solve(args):
    inst, _ = load_instance(args.instance)
    result = solve_method(inst, args.method, wait_cost=args.cw, samples=_samples(args, inst),
                          time_limit=args.time_limit)
    _emit(result.to_dict(), args.out, seed=args.seed)
    return result


def cmd_audit(args) -> dict:
    inst, generated = load_instance(args.instance)
    schedule = load_schedule(args.schedule)
    report = audit_schedule(schedule, inst, _scenarios(args, inst, generated))
    _emit(report.to_dict(), args.out, seed=args.seed)
    if not report.feasible:
        raise InfeasibleScheduleError("schedule violates its waiting guarantees (see report)")
    return report.to_dict()


def cmd_adversary(args) -> dict:
    inst, _ = load_instance(args.instance)
    schedule = load_schedule(args.schedule)
    payload = {
        "worst_case": worst_case_cost(schedule, inst).to_dict(),
        "worst_waits": worst_case_waits(schedule, inst).tolist(),
    }
    _emit(payload, args.out)
    return payload


def cmd_compare(args) -> list:
    inst, generated = load_instance(args.instance)
    results = compare(inst, _scenarios(args, inst, generated), wait_costs=args.cw_list,
                      samples=_samples(args, inst), robust_method=args.method, time_limit=args.time_limit)
    rows = comparison_rows(results)
    if args.out and Path(args.out).suffix.lower() == ".csv":
        write_csv(args.out, rows, COLUMNS)
    else:
        _emit({"legs": [r.to_dict() for r in results], "table": rows}, args.out, seed=args.seed)
    return rows


def cmd_interapp(args) -> list:
    inst, _ = load_instance(args.instance)
    result = solve_method(inst, args.method, wait_cost=args.cw, time_limit=args.time_limit)
    gaps = interappointment_times(result.schedule)
    rows = [{"appointment": i + 1, "gap": float(g)} for i, g in enumerate(gaps)]
    if args.out:
        write_csv(args.out, rows, ["appointment", "gap"])
    else:
        print("appointment,gap")
        for row in rows:
            print(f"{row['appointment']},{row['gap']:.{CLI['float_digits']}f}")
    return rows


def cmd_sweep(args) -> list:
    paths = sorted(Path(args.directory).glob("*.json"))
    if not paths:
        raise InvalidInputError(f"no instance files in {args.directory}")
    runs = sweep(paths, methods=args.methods, scenarios=args.scenarios, time_limit=args.time_limit,
                 threads=args.threads, seed=args.seed)
    summary = sweep_summary(runs)
    if args.runs:
        write_csv(args.runs, runs.to_dict("records"), SWEEP_COLUMNS)
    if args.out:
        write_csv(args.out, summary.to_dict("records"), list(summary.columns))
    else:
        print(summary.to_csv(index=False))
    return summary.to_dict("records")


def cmd_verify(args):
    if args.instance:
        inst, _ = load_instance(args.instance)
        schedule = load_schedule(args.schedule) if args.schedule else None
        report = verify_instance(inst, schedule)
        _emit(report, args.out)
        if not report["ok"]:
            raise InvalidInputError("closed-form and brute-force worst cases disagree")
        return report
    results = run_cases()
    if any(r["status"] == "FAIL" for r in results):
        raise InvalidInputError("case table has failures")
    return results


def _add_scenario_args(p):
    p.add_argument("--scenarios", type=int, default=0, help="number of evaluation scenarios")
    p.add_argument("--records", help="held-out records CSV to sample durations from")
    p.add_argument("--replay", action="store_true", help="replay the source day's recorded durations")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robust-appt", description=__doc__.splitlines()[1])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")
    parser.add_argument("--seed", type=int, default=CLI["seed"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="service intervals from a records CSV")
    p.add_argument("records")
    p.add_argument("--lo", type=float, default=DATA["lo_pct"])
    p.add_argument("--hi", type=float, default=DATA["hi_pct"])
    p.add_argument("--split-date", help="estimate on records before this ISO date only")
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("generate", help="instances from records and intervals")
    p.add_argument("records")
    p.add_argument("intervals")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--noshow-rate", type=float, default=0.0)
    p.add_argument("--wait", type=float, default=30.0)
    p.add_argument("--cost-tag", choices=COST_TAGS, default="constant")
    p.add_argument("--day", help="source day (ISO date); default the first eligible day")
    p.add_argument("--all", action="store_true", help="one instance per eligible day into --out directory")
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    for name, func, help_text in (("solve", cmd_solve, "solve an instance"),
                                  ("interapp", cmd_interapp, "interappointment times of a solved instance")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("instance")
        p.add_argument("--method", choices=METHODS, default="exact")
        p.add_argument("--cw", type=float, default=0.0, help="waiting cost for wsras")
        p.add_argument("--time-limit", type=float)
        p.add_argument("--out")
        if name == "solve":
            p.add_argument("--samples", help="service samples (CSV or JSON) for saa")
        p.set_defaults(func=func)

    p = sub.add_parser("audit", help="feasibility, worst case and scenario metrics")
    p.add_argument("schedule")
    p.add_argument("instance")
    _add_scenario_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("adversary", help="worst-case witness and per-appointment worst waits")
    p.add_argument("schedule")
    p.add_argument("instance")
    p.add_argument("--out")
    p.set_defaults(func=cmd_adversary)

    p = sub.add_parser("compare", help="robust vs weighted-sum vs sample-average legs")
    p.add_argument("instance")
    p.add_argument("--cw-list", type=float, nargs="*", default=[])
    p.add_argument("--samples", help="service samples (CSV or JSON) for the saa leg")
    p.add_argument("--method", choices=METHODS, default="exact", help="method of the robust leg")
    p.add_argument("--time-limit", type=float)
    _add_scenario_args(p)
    p.add_argument("--out", help=".csv for a table, otherwise JSON")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="solve every instance file of a directory and summarize per grid cell")
    p.add_argument("directory")
    p.add_argument("--methods", nargs="+", choices=METHODS, default=["exact"])
    p.add_argument("--scenarios", type=int, default=100, help="in-box scenarios per solved instance")
    p.add_argument("--time-limit", type=float)
    p.add_argument("--threads", type=int, help="concurrent instances (default ROBUST_APPT_THREADS)")
    p.add_argument("--runs", help="per-run CSV")
    p.add_argument("--out", help="summary CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="case table, or brute-force checks of one instance")
    p.add_argument("instance", nargs="?")
    p.add_argument("--schedule")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s [%(levelname)s] %(name)s: %(message)s")

    outcome = run_safe(args.func, args)
    if not outcome["success"]:
        logger.error(outcome["result"])
    elif outcome["exit_code"] == EXIT_CODES["time_limit"]:
        logger.warning("Time limit reached; reported the best schedule found")
    logger.info("Completed in %.2f seconds", outcome["duration_seconds"])
    return outcome["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
