"""Command line interface.

Exit codes: 0 all checks pass, 1 property violation, 2 liveness budget
exhausted where termination was required, 3 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any, Dict, Optional

from . import __version__
from .adversary import Adversary, AdversaryError, EmptyRestriction, min_hitting_sets
from .agreement import ca_program, rap_program
from .assim import simulate_image_task
from .bgsim import bg_simulate
from .doorway import doorway_program
from .harness import (
    ConfigError,
    composed_pipeline,
    hs_ksa_family,
    random_crash_schedule,
    run_suite,
    wait_min_family,
)
from .shmem import FairSchedule, Execution, dump_trace, explore, run, to_jsonable
from .tasks import hs_ksa_program, wait_min_program


def _load_adversary(path: str) -> Adversary:
    try:
        return Adversary.load(path)
    except FileNotFoundError:
        raise ConfigError(f"adversary spec not found: {path}")
    except AdversaryError as exc:
        raise ConfigError(f"bad adversary spec: {exc}")


def _load_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}")


def _parse_ids(text: str) -> frozenset:
    try:
        return frozenset(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError:
        raise ConfigError(f"expected comma-separated ids, got {text!r}")


def _parse_schedule(spec: str, adv: Optional[Adversary]) -> Any:
    """A schedule spec: inline JSON or a path to a JSON file.

    Accepted forms: a list of pids; {"fair": [...], "crash": {...}};
    {"random": {"seed": S, "l_resilient": bool, "participants": [...]}}.
    """
    text = spec.strip()
    if not (text.startswith("[") or text.startswith("{")):
        data = _load_json(spec)
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid schedule JSON: {exc}")
    if isinstance(data, list):
        if not all(isinstance(x, int) for x in data):
            raise ConfigError("schedule list must contain process ids")
        return data
    if isinstance(data, dict) and "fair" in data:
        try:
            return FairSchedule.from_spec(data)
        except ValueError as exc:
            raise ConfigError(f"bad fair schedule: {exc}")
    if isinstance(data, dict) and "random" in data:
        params = data["random"]
        if adv is None:
            raise ConfigError("random schedules need an adversary spec")
        participants = params.get("participants", list(range(adv.n)))
        return random_crash_schedule(
            int(params.get("seed", 0)),
            participants,
            adv,
            bool(params.get("l_resilient", True)),
            params.get("length"),
        )
    raise ConfigError(f"unrecognised schedule spec: {spec!r}")


def _parse_inputs(path: str) -> Dict[int, Any]:
    data = _load_json(path)
    if not isinstance(data, dict):
        raise ConfigError("inputs file must map process ids to values")
    try:
        return {int(pid): value for pid, value in data.items()}
    except ValueError:
        raise ConfigError("inputs file keys must be process ids")


def _parse_task(text: str):
    if text == "consensus":
        return ("ksa", 1)
    if text.startswith("ksa:"):
        try:
            return ("ksa", int(text.split(":", 1)[1]))
        except ValueError:
            raise ConfigError(f"bad task spec {text!r}")
    raise ConfigError(f"unknown task {text!r} (use consensus or ksa:K)")


def _emit_trace(args, execution: Execution, config: Dict[str, Any]) -> None:
    if getattr(args, "trace", None):
        dump_trace(args.trace, execution, config)
        print(f"trace: {args.trace}")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_adv_hs(args) -> int:
    adv = _load_adversary(args.spec)
    universe = _parse_ids(args.universe) if args.universe else None
    try:
        result = min_hitting_sets(adv, universe)
    except AdversaryError as exc:
        raise ConfigError(str(exc))
    except EmptyRestriction:
        print(json.dumps({"empty_restriction": True}))
        return 0
    print(
        json.dumps(
            {"h": result.h, "witnesses": [list(w) for w in result.witnesses]}
        )
    )
    return 0


def cmd_run(args) -> int:
    adv = _load_adversary(args.adv) if args.adv else None
    inputs = _parse_inputs(args.inputs)
    if args.protocol in ("doorway", "hs-ksa", "compose") and adv is None:
        raise ConfigError(f"protocol {args.protocol} needs --adv")
    if args.protocol == "doorway":
        programs = {
            pid: doorway_program(adv, pid, value) for pid, value in inputs.items()
        }
    elif args.protocol == "hs-ksa":
        programs = {
            pid: hs_ksa_program(adv, pid, value) for pid, value in inputs.items()
        }
    elif args.protocol == "wait-min":
        if args.t is None or args.n is None:
            raise ConfigError("wait-min needs --n and --t")
        programs = {
            pid: wait_min_program(args.n, args.t, pid, value)
            for pid, value in inputs.items()
        }
    elif args.protocol == "compose":
        programs = composed_pipeline(adv, inputs)
    else:
        raise ConfigError(f"unknown protocol {args.protocol!r}")
    schedule = _parse_schedule(args.schedule, adv)
    execution = run(programs, schedule, budget=args.budget)
    config = {
        "command": "run",
        "protocol": args.protocol,
        "adv": adv.to_json() if adv else None,
        "inputs": {str(k): to_jsonable(v) for k, v in inputs.items()},
        "schedule": args.schedule,
        "budget": args.budget,
    }
    _emit_trace(args, execution, config)
    print(
        json.dumps(
            {
                "stop": execution.stop_reason,
                "steps": execution.steps,
                "returns": {
                    str(pid): to_jsonable(value)
                    for pid, value in sorted(execution.returns.items())
                },
            },
            sort_keys=True,
        )
    )
    return 2 if execution.incomplete else 0


def cmd_explore(args) -> int:
    n = args.n
    inputs = (
        {pid: value for pid, value in enumerate(args.inputs.split(","))}
        if args.inputs
        else {pid: chr(ord("a") + pid) for pid in range(n)}
    )
    if len(inputs) != n:
        raise ConfigError("--inputs must list one value per process")
    if args.protocol == "ca":
        programs = {pid: ca_program("ca", pid, n, inputs[pid]) for pid in range(n)}
    elif args.protocol == "rap":
        programs = {
            pid: rap_program("rap", pid, n, inputs[pid], resolve_at=None)
            for pid in range(n)
        }
    else:
        raise ConfigError(f"unknown protocol {args.protocol!r}")
    report = explore(programs, depth=args.depth)
    print(
        json.dumps(
            {
                "interleavings": report.interleavings,
                "truncated": report.truncated,
                "states": report.states,
                "resource_limited": report.resource_limited,
            }
        )
    )
    return 0


def cmd_check(args) -> int:
    params: Dict[str, Any] = {}
    for key in ("n", "schedules", "cases", "seed", "runs", "budget", "depth"):
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    if args.mode:
        params["mode"] = args.mode
    if args.j:
        params["j_values"] = tuple(int(x) for x in args.j.split(","))
    report = run_suite(args.suite, **params)
    for case in report.cases:
        status = "ok" if case.ok else "FAIL"
        line = f"[{status}] {report.suite}: {case.case}"
        if case.detail:
            line += f" -- {case.detail}"
        print(line)
    print(
        f"suite {report.suite}: {len(report.cases)} cases, "
        f"{len(report.violations)} violations, {report.duration:.2f}s"
    )
    if args.report_dir:
        from .report import render_report

        for path in render_report(report, args.report_dir):
            print(f"wrote {path}")
    return report.exit_code()


def cmd_simulate_tl(args) -> int:
    adv = _load_adversary(args.adv)
    kind, k = _parse_task(args.task)
    raw = _load_json(args.inputs)
    if not isinstance(raw, dict):
        raise ConfigError("inputs file must map simulator ids to (code, value) pair lists")
    entries: Dict[int, frozenset] = {}
    try:
        for pid, pairs in raw.items():
            entries[int(pid)] = frozenset((int(c), v) for c, v in pairs)
    except (TypeError, ValueError):
        raise ConfigError("each entry must be a list of [code, value] pairs")
    schedule = _parse_schedule(args.schedule, adv) if args.schedule else None
    result = simulate_image_task(adv, hs_ksa_family(adv), entries, schedule, args.budget)
    _emit_trace(
        args,
        result.execution,
        {
            "command": "simulate-tl",
            "adv": adv.to_json(),
            "task": args.task,
            "inputs": {str(k_): to_jsonable(v) for k_, v in entries.items()},
            "schedule": args.schedule,
            "budget": args.budget,
        },
    )
    print(
        json.dumps(
            {
                "stop": result.execution.stop_reason,
                "blocked_codes": sorted(result.blocked),
                "distinct_inputs": result.distinct_inputs,
                "outputs": [to_jsonable(entry) for entry in result.outputs],
            },
            sort_keys=True,
        )
    )
    return 2 if result.execution.incomplete else 0


def cmd_bgsim(args) -> int:
    adv = _load_adversary(args.adv)
    kind, k = _parse_task(args.task)
    inputs = _parse_inputs(args.inputs)
    family = wait_min_family(adv.n, k - 1) if kind == "ksa" else None
    schedule = _parse_schedule(args.schedule, adv) if args.schedule else None
    result = bg_simulate(adv, family, inputs, schedule, args.budget)
    _emit_trace(
        args,
        result.execution,
        {
            "command": "bgsim",
            "adv": adv.to_json(),
            "task": args.task,
            "inputs": {str(p): to_jsonable(v) for p, v in inputs.items()},
            "schedule": args.schedule,
            "budget": args.budget,
        },
    )
    print(
        json.dumps(
            {
                "simulators": list(result.sim_ids),
                "stop": result.execution.stop_reason,
                "blocked_codes": sorted(result.blocked),
                "outputs": {str(p): to_jsonable(v) for p, v in sorted(result.outputs.items())},
            },
            sort_keys=True,
        )
    )
    return 2 if result.execution.incomplete else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hitset",
        description="Live-set adversary workbench: hitting sets, agreement "
        "protocols, and wait-free simulations.",
    )
    parser.add_argument("--version", action="version", version=f"hitset {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    adv_parser = sub.add_parser("adv", help="adversary queries")
    adv_sub = adv_parser.add_subparsers(dest="adv_command", required=True)
    hs = adv_sub.add_parser("hs", help="minimum hitting sets")
    hs.add_argument("--spec", required=True, help="adversary JSON file")
    hs.add_argument("--universe", help="comma-separated ids restricting the system")
    hs.set_defaults(func=cmd_adv_hs)

    runp = sub.add_parser("run", help="run a protocol under a schedule")
    runp.add_argument(
        "--protocol",
        required=True,
        choices=["doorway", "hs-ksa", "wait-min", "compose"],
    )
    runp.add_argument("--adv", help="adversary JSON file")
    runp.add_argument("--inputs", required=True, help="JSON file: pid -> input")
    runp.add_argument("--schedule", required=True, help="schedule file or inline JSON")
    runp.add_argument("--budget", type=int, default=100_000)
    runp.add_argument("--trace", help="write a JSONL trace here")
    runp.add_argument("--n", type=int)
    runp.add_argument("--t", type=int)
    runp.set_defaults(func=cmd_run)

    exp = sub.add_parser("explore", help="enumerate interleavings of a protocol")
    exp.add_argument("--protocol", required=True, choices=["ca", "rap"])
    exp.add_argument("--n", type=int, required=True)
    exp.add_argument("--inputs", help="comma-separated input values")
    exp.add_argument("--depth", type=int)
    exp.set_defaults(func=cmd_explore)

    chk = sub.add_parser("check", help="run a verification suite")
    chk.add_argument(
        "--suite",
        required=True,
        help="one of: hs ca rap as doorway tl bg e2e",
    )
    chk.add_argument("--n", type=int)
    chk.add_argument("--mode", choices=["exhaustive", "random", "witness"])
    chk.add_argument("--schedules", type=int)
    chk.add_argument("--cases", type=int)
    chk.add_argument("--runs", type=int)
    chk.add_argument("--seed", type=int)
    chk.add_argument("--budget", type=int)
    chk.add_argument("--depth", type=int)
    chk.add_argument("--j", help="comma-separated batch budgets for the as suite")
    chk.add_argument("--report-dir", help="write report.json, cases.csv, figures here")
    chk.set_defaults(func=cmd_check)

    sim = sub.add_parser("simulate-tl", help="wait-free companion-task simulation")
    sim.add_argument("--adv", required=True)
    sim.add_argument("--task", default="ksa:2")
    sim.add_argument("--inputs", required=True, help="JSON: sim id -> [[code, value], ...]")
    sim.add_argument("--schedule")
    sim.add_argument("--budget", type=int, default=100_000)
    sim.add_argument("--trace")
    sim.set_defaults(func=cmd_simulate_tl)

    bg = sub.add_parser("bgsim", help="hitting-set simulators over a colorless task")
    bg.add_argument("--adv", required=True)
    bg.add_argument("--task", default="ksa:2")
    bg.add_argument("--inputs", required=True, help="JSON: simulator id -> value")
    bg.add_argument("--schedule")
    bg.add_argument("--budget", type=int, default=100_000)
    bg.add_argument("--trace")
    bg.set_defaults(func=cmd_bgsim)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except AdversaryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
