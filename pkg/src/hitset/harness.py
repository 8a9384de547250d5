"""Suite drivers, randomized schedule generation, and the protocol registry.

Every randomized suite is a pure function of its seed: committed seeds make
the whole verification deterministic.  Violations reference replayable
trace files when a trace directory is configured.
"""

from __future__ import annotations

import itertools
import random
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

from . import adversary as adv_mod
from . import assim, bgsim, doorway
from .adversary import Adversary, min_hitting_sets, resolver_set_for
from .agreement import COMMIT, STUCK, ca_program, rap_program, d_register
from .assim import (
    CodeFamily,
    InvariantViolation,
    ModelFault,
    ProgressMonitor,
    as_step,
    batch_visit,
    initial_as_state,
    next_position,
    promote_ip,
    simulate_image_task,
)
from .shmem import BOT, Execution, FairSchedule, dump_trace, explore, run
from .tasks import (
    ImageTask,
    hs_ksa_program,
    k_set_agreement,
    validate_image_input,
    validate_image_output,
    wait_min_program,
)

DEFAULT_BUDGET = 100_000


class ConfigError(ValueError):
    """Bad suite or run configuration (CLI exit code 3)."""


@dataclass
class CaseResult:
    suite: str
    case: str
    ok: bool
    detail: str = ""
    kind: str = "violation"  # violation | liveness
    metric: Optional[float] = None
    trace_path: Optional[str] = None


@dataclass
class Report:
    suite: str
    cases: List[CaseResult]
    duration: float = 0.0
    meta: Dict[str, Any] = field(default_factory=dict)

    @property
    def violations(self) -> List[CaseResult]:
        return [c for c in self.cases if not c.ok]

    @property
    def ok(self) -> bool:
        return not self.violations

    def exit_code(self) -> int:
        bad = self.violations
        if not bad:
            return 0
        if all(c.kind == "liveness" for c in bad):
            return 2
        return 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            "suite": self.suite,
            "cases": len(self.cases),
            "violations": [
                {
                    "case": c.case,
                    "detail": c.detail,
                    "kind": c.kind,
                    "trace": c.trace_path,
                }
                for c in self.violations
            ],
            "duration_s": round(self.duration, 3),
            "meta": self.meta,
        }


# ---------------------------------------------------------------------------
# Random generators
# ---------------------------------------------------------------------------


def random_adversary(rng: random.Random, n: int) -> Tuple[Adversary, List[frozenset]]:
    """A random live-set system; also returns the raw (unminimised) sets."""
    count = rng.randint(1, max(2, n))
    raw: List[frozenset] = []
    for _ in range(count):
        size = rng.randint(1, n)
        raw.append(frozenset(rng.sample(range(n), size)))
    return Adversary.of(n, raw), raw


def random_crash_schedule(
    seed: int,
    participants: Iterable[int],
    adv: Adversary,
    l_resilient: bool = True,
    length: Optional[int] = None,
) -> FairSchedule:
    """Sample a correct set (containing a live set iff `l_resilient`),
    crash slots for the rest, and return the fair schedule; reproducible
    from the seed."""
    rng = random.Random(seed)
    participants = frozenset(participants)
    if length is None:
        length = 8 * max(len(participants), 1)
    if l_resilient:
        covered = [s for s in adv.live_sets if s <= participants]
        if not covered:
            raise ConfigError(
                "no live set within participants: resilient schedule impossible"
            )
        live = rng.choice(sorted(covered, key=sorted))
        correct = set(live)
        for pid in sorted(participants - live):
            if rng.random() < 0.35:
                correct.add(pid)
    else:
        correct = set()
        for _ in range(64):
            candidate = {p for p in sorted(participants) if rng.random() < 0.5}
            if not adv.is_resilient(candidate):
                correct = candidate
                break
    crash = {
        pid: rng.randrange(1, length)
        for pid in sorted(participants - frozenset(correct))
    }
    return FairSchedule(correct, participants, crash, shuffle_seed=rng.randrange(2**31))


def save_violation_trace(
    name: str,
    execution: Execution,
    config: Dict[str, Any],
    trace_dir: Optional[str] = None,
) -> str:
    """Persist the execution behind a failed case for replay."""
    directory = (
        Path(trace_dir)
        if trace_dir
        else Path(tempfile.gettempdir()) / "hitset-traces"
    )
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{name}.jsonl"
    dump_trace(path, execution, config)
    return str(path)


def naive_min_hitting_sets(
    universe: Iterable[int], raw_sets: Iterable[frozenset]
) -> Optional[Tuple[int, Tuple[Tuple[int, ...], ...]]]:
    """Brute-force oracle: enumerate every subset of the universe by size.

    Works from the raw (unminimised) sets and does no candidate pruning, so
    it shares nothing with the solver it checks.  Returns None when no raw
    set fits inside the universe.
    """
    universe = sorted(set(universe))
    targets = [s for s in raw_sets if s <= set(universe)]
    if not targets:
        return None
    for size in range(0, len(universe) + 1):
        hits = [
            combo
            for combo in itertools.combinations(universe, size)
            if all(not s.isdisjoint(combo) for s in targets)
        ]
        if hits:
            return size, tuple(hits)
    return None


# ---------------------------------------------------------------------------
# Suite: hs
# ---------------------------------------------------------------------------


def suite_hs(
    cases: int = 200, n_max: int = 12, seed: int = 7, **_: Any
) -> Report:
    rng = random.Random(seed)
    out: List[CaseResult] = []
    for index in range(cases):
        n = rng.randint(2, n_max)
        adv, raw = random_adversary(rng, n)
        universe = frozenset(rng.sample(range(n), rng.randint(1, n)))
        oracle = naive_min_hitting_sets(universe, raw)
        try:
            got = min_hitting_sets(adv, universe)
        except adv_mod.EmptyRestriction:
            got = None
        if oracle is None:
            ok = got is None
            detail = "" if ok else f"solver found h={got.h} in an empty restriction"
            metric: Optional[float] = None
        elif got is None:
            ok = False
            detail = f"solver signalled empty restriction, oracle found h={oracle[0]}"
            metric = None
        else:
            ok = (got.h, got.witnesses) == oracle
            detail = (
                ""
                if ok
                else f"solver h={got.h} witnesses={got.witnesses[:4]}... "
                f"oracle h={oracle[0]}"
            )
            metric = float(got.h)
        out.append(CaseResult("hs", f"case-{index}", ok, detail, metric=metric))
    return Report("hs", out, meta={"cases": cases, "n_max": n_max, "seed": seed})


# ---------------------------------------------------------------------------
# Suite: ca
# ---------------------------------------------------------------------------


def _canonical_assignments(n: int, max_distinct: int) -> List[Tuple[str, ...]]:
    """Input assignments up to value renaming: value k appears only after
    values 0..k-1 have appeared."""
    values = "abcdefgh"[: min(n, max_distinct)]
    out = []
    for combo in itertools.product(range(len(values)), repeat=n):
        highest = -1
        ok = True
        for v in combo:
            if v > highest + 1:
                ok = False
                break
            highest = max(highest, v)
        if ok:
            out.append(tuple(values[v] for v in combo))
    return out


def ca_checker(inputs: Dict[int, Any]) -> Callable:
    proposed = set(inputs.values())

    def check(view) -> Optional[str]:
        committed = set()
        carried = set()
        for pid, outcome in view.returns.items():
            if outcome is None:
                continue
            flag, value = outcome
            if value not in proposed:
                return f"process {pid} returned unproposed value {value!r}"
            carried.add(value)
            if flag == COMMIT:
                committed.add(value)
        if len(proposed) == 1 and view.complete:
            flags = {flag for flag, _ in view.returns.values()}
            if flags != {COMMIT}:
                return "lone proposal was not committed by everyone"
        if committed and carried != committed:
            return (
                f"commit of {sorted(committed)!r} did not force returns: "
                f"values {sorted(carried)!r}"
            )
        if len(committed) > 1:
            return f"two distinct values committed: {sorted(committed)!r}"
        for pid, count in view.step_counts.items():
            if count > 4:
                return f"process {pid} took {count} operations (not wait-free)"
        return None

    return check


def suite_ca(
    n: int = 2,
    mode: str = "exhaustive",
    schedules: int = 10_000,
    seed: int = 11,
    max_distinct: int = 3,
    **_: Any,
) -> Report:
    out: List[CaseResult] = []
    meta: Dict[str, Any] = {"n": n, "mode": mode}
    if mode == "exhaustive":
        total = 0
        for assignment in _canonical_assignments(n, max_distinct):
            inputs = dict(enumerate(assignment))
            programs = {
                pid: ca_program("ca", pid, n, value) for pid, value in inputs.items()
            }
            report = explore(programs, checker=ca_checker(inputs))
            total += report.interleavings
            detail = report.violation.message if report.violation else ""
            trace_path = None
            if report.violation is not None:
                witness = run(programs, report.violation.schedule)
                trace_path = save_violation_trace(
                    f"ca-{''.join(assignment)}",
                    witness,
                    {"suite": "ca", "inputs": inputs, "schedule": report.violation.schedule},
                )
            out.append(
                CaseResult(
                    "ca",
                    f"inputs={''.join(assignment)}",
                    report.violation is None and not report.resource_limited,
                    detail,
                    metric=float(report.interleavings),
                    trace_path=trace_path,
                )
            )
        meta["interleavings"] = total
    elif mode == "random":
        rng = random.Random(seed)
        failures = 0
        first_detail = ""
        first_trace = None
        for case in range(schedules):
            inputs = {pid: rng.choice("abc") for pid in range(n)}
            programs = {
                pid: ca_program("ca", pid, n, value) for pid, value in inputs.items()
            }
            slots = [pid for pid in range(n) for _ in range(5)]
            rng.shuffle(slots)
            execution = run(programs, slots, budget=len(slots) + 1)
            view = _execution_view(execution, n)
            message = ca_checker(inputs)(view)
            if message:
                failures += 1
                if not first_detail:
                    first_detail = f"case {case}: {message}"
                    first_trace = save_violation_trace(
                        f"ca-random-{case}",
                        execution,
                        {"suite": "ca", "inputs": inputs, "schedule": slots},
                    )
        out.append(
            CaseResult(
                "ca",
                f"random-x{schedules}",
                failures == 0,
                first_detail,
                metric=float(schedules),
                trace_path=first_trace,
            )
        )
        meta.update({"schedules": schedules, "seed": seed})
    else:
        raise ConfigError(f"unknown ca mode {mode!r}")
    return Report("ca", out, meta=meta)


def _execution_view(execution: Execution, n: int):
    """Adapt a finished run to the checker interface used by explore."""

    class _View:
        pass

    view = _View()
    view.n = n
    view.returns = dict(execution.returns)
    view.memory = dict(execution.memory)
    view.done = frozenset(execution.returns)
    view.complete = len(execution.returns) == n
    counts: Dict[int, int] = {pid: 0 for pid in range(n)}
    for event in execution.trace:
        if event.op not in ("skip", "return"):
            counts[event.pid] += 1
    view.step_counts = counts
    return view


# ---------------------------------------------------------------------------
# Suite: rap
# ---------------------------------------------------------------------------


def rap_checker(
    inputs: Dict[int, Any],
    resolvers: Dict[int, Optional[int]],
    correct: Optional[frozenset] = None,
) -> Callable:
    proposed = set(inputs.values())
    resolver_count = sum(1 for v in resolvers.values() if v is not None)

    def check(view) -> Optional[str]:
        returned = {v for v in view.returns.values()}
        for pid, value in view.returns.items():
            if value not in proposed:
                return f"process {pid} returned unproposed value {value!r}"
        if resolver_count <= 1 and len(returned) > 1:
            return (
                f"{len(returned)} distinct values returned with "
                f"{resolver_count} resolver(s): {sorted(map(repr, returned))}"
            )
        if correct is not None and view.complete:
            live = set(correct)
            if len(proposed) == 1 or view.returns:
                missing = live - set(view.returns)
                if missing:
                    return f"correct processes {sorted(missing)} never returned"
        return None

    return check


def suite_rap(
    n: int = 2,
    mode: str = "exhaustive",
    schedules: int = 2_000,
    seed: int = 13,
    depth: int = 36,
    budget: int = 4_000,
    **_: Any,
) -> Report:
    out: List[CaseResult] = []
    meta: Dict[str, Any] = {"n": n, "mode": mode}
    if mode == "exhaustive":
        resolver_plans: List[Dict[int, Optional[int]]] = [
            {pid: None for pid in range(n)},
        ]
        for resolver in range(n):
            plan = {pid: None for pid in range(n)}
            plan[resolver] = 0
            resolver_plans.append(plan)
            late = {pid: None for pid in range(n)}
            late[resolver] = 5
            resolver_plans.append(late)
        both: Dict[int, Optional[int]] = {pid: 0 for pid in range(n)}
        resolver_plans.append(both)
        for assignment in _canonical_assignments(n, 2):
            for plan in resolver_plans:
                inputs = dict(enumerate(assignment))
                programs = {
                    pid: rap_program(
                        "rap", pid, n, inputs[pid], resolve_at=plan[pid]
                    )
                    for pid in range(n)
                }
                report = explore(
                    programs,
                    depth=depth,
                    checker=rap_checker(inputs, plan),
                )
                label = ",".join(
                    "-" if plan[p] is None else str(plan[p]) for p in range(n)
                )
                trace_path = None
                if report.violation is not None:
                    witness = run(programs, report.violation.schedule)
                    trace_path = save_violation_trace(
                        f"rap-{''.join(assignment)}-{label}",
                        witness,
                        {
                            "suite": "rap",
                            "inputs": inputs,
                            "resolve_at": plan,
                            "schedule": report.violation.schedule,
                        },
                    )
                out.append(
                    CaseResult(
                        "rap",
                        f"inputs={''.join(assignment)} resolve@{label}",
                        report.violation is None and not report.resource_limited,
                        report.violation.message if report.violation else "",
                        metric=float(report.states),
                        trace_path=trace_path,
                    )
                )
    elif mode == "random":
        rng = random.Random(seed)
        failures = 0
        liveness_failures = 0
        first_detail = ""
        for case in range(schedules):
            inputs = {pid: rng.choice("ab") for pid in range(n)}
            plan: Dict[int, Optional[int]] = {
                pid: (rng.randrange(0, 9) if rng.random() < 0.5 else None)
                for pid in range(n)
            }
            locals_out: Dict[int, Any] = {}
            programs = {
                pid: rap_program(
                    "rap", pid, n, inputs[pid], plan[pid], locals_out=locals_out
                )
                for pid in range(n)
            }
            schedule = random_crash_schedule(
                rng.randrange(2**31),
                range(n),
                adv_mod.t_resilient_adversary(n, n - 1),
                l_resilient=True,
            )
            execution = run(programs, schedule, budget=budget)
            view = _execution_view(execution, n)
            correct = schedule.correct
            message = rap_checker(inputs, plan)(view)
            if message:
                failures += 1
                first_detail = first_detail or f"case {case}: {message}"
                continue
            # liveness: unanimity, any return, or a correct resolver forces
            # every correct process to return within budget
            unanimous = len(set(inputs.values())) == 1
            correct_resolver = any(
                plan[pid] is not None and pid in correct for pid in range(n)
            )
            obliged = unanimous or bool(execution.returns) or correct_resolver
            if obliged and not (correct <= set(execution.returns)):
                liveness_failures += 1
                first_detail = (
                    first_detail
                    or f"case {case}: correct {sorted(correct - set(execution.returns))} stuck"
                )
        out.append(
            CaseResult(
                "rap",
                f"random-x{schedules}",
                failures == 0,
                first_detail if failures else "",
                metric=float(schedules),
            )
        )
        out.append(
            CaseResult(
                "rap",
                f"liveness-x{schedules}",
                liveness_failures == 0,
                first_detail if liveness_failures else "",
                kind="liveness",
            )
        )
        meta.update({"schedules": schedules, "seed": seed})
    elif mode == "witness":
        # Constructed run: diverging inputs, no resolver, strict alternation
        # leaves both processes stuck forever with D unset.
        inputs = {0: "a", 1: "b"}
        locals_out: Dict[int, Any] = {}
        programs = {
            pid: rap_program("rap", pid, 2, inputs[pid], None, locals_out=locals_out)
            for pid in range(2)
        }
        schedule = [pid for _ in range(40) for pid in (0, 1)]
        execution = run(programs, schedule, budget=200)
        stuck = all(
            locals_out[pid].status == STUCK for pid in range(2)
        ) and not execution.returns
        d_unset = execution.memory.get(d_register("rap"), BOT) is BOT
        out.append(
            CaseResult(
                "rap",
                "stuck-witness",
                stuck and d_unset,
                "" if stuck and d_unset else "expected both processes stuck with D unset",
            )
        )
    else:
        raise ConfigError(f"unknown rap mode {mode!r}")
    return Report("rap", out, meta=meta)


# ---------------------------------------------------------------------------
# Suite: as (abstract model fuzzing)
# ---------------------------------------------------------------------------


def as_fuzz_run(
    rng: random.Random, batches: int, positions: int, agents: int, steps: int
) -> int:
    """One fuzzed run of the abstract model; returns the peak in-progress
    count.  Raises InvariantViolation if the bound ever breaks."""
    state = initial_as_state(positions, batches)
    unvisited = [i for i, c in enumerate(state.colors) if c == assim.U]
    first = frozenset(rng.sample(unvisited, rng.randint(1, max(1, positions // 2))))
    state = batch_visit(state, first)
    snapshots: List[Optional[Tuple[str, ...]]] = [None] * agents
    peak = 0

    def check() -> None:
        nonlocal peak
        count = state.ip_count
        peak = max(peak, count)
        bound = max(state.batches_used - 1, 0)
        if count > bound:
            raise InvariantViolation(
                f"{count} in-progress positions after {state.batches_used} batches"
            )

    check()
    for _ in range(steps):
        moves = ["snap", "access"]
        if state.batch_budget > 0 and any(c == assim.U for c in state.colors):
            moves.append("batch")
        if any(c == assim.IP for c in state.colors):
            moves.append("promote")
        move = rng.choice(moves)
        if move == "snap":
            snapshots[rng.randrange(agents)] = state.colors
        elif move == "access":
            ready = [
                a
                for a in range(agents)
                if snapshots[a] is not None and next_position(snapshots[a]) is not None
            ]
            if not ready:
                snapshots[rng.randrange(agents)] = state.colors
                continue
            agent = rng.choice(ready)
            state = as_step(state, snapshots[agent])
            snapshots[agent] = None
        elif move == "batch":
            unvisited = [i for i, c in enumerate(state.colors) if c == assim.U]
            chosen = frozenset(rng.sample(unvisited, rng.randint(1, len(unvisited))))
            state = batch_visit(state, chosen)
        else:
            in_progress = [i for i, c in enumerate(state.colors) if c == assim.IP]
            state = promote_ip(state, rng.choice(in_progress))
        check()
    return peak


def suite_as(
    runs: int = 10_000,
    j_values: Tuple[int, ...] = (1, 2, 3, 4),
    positions: int = 8,
    agents: int = 4,
    steps: int = 30,
    seed: int = 17,
    **_: Any,
) -> Report:
    out: List[CaseResult] = []
    for batches in j_values:
        rng = random.Random(seed + batches)
        peak = 0
        failure = ""
        for index in range(runs):
            try:
                peak = max(
                    peak, as_fuzz_run(rng, batches, positions, agents, steps)
                )
            except (InvariantViolation, ModelFault) as exc:
                failure = f"run {index}: {exc}"
                break
        ok = not failure and (batches > 1 or peak == 0)
        if not failure and batches == 1 and peak > 0:
            failure = f"j=1 run reached {peak} in-progress positions"
        out.append(
            CaseResult(
                "as",
                f"j={batches} x{runs}",
                ok,
                failure,
                metric=float(peak),
            )
        )
    return Report(
        "as",
        out,
        meta={"runs": runs, "positions": positions, "agents": agents, "seed": seed},
    )


# ---------------------------------------------------------------------------
# Suite: doorway
# ---------------------------------------------------------------------------


def doorway_adversaries() -> List[Adversary]:
    return [
        adv_mod.t_resilient_adversary(4, 1),
        Adversary.of(3, [{0}, {1, 2}]),
        Adversary.of(4, [{0, 1}, {2, 3}]),
    ]


def _doorway_case(
    adv: Adversary, seed: int, l_resilient: bool, budget: int
) -> Tuple[bool, str, str]:
    """Returns (ok, detail, kind) for one seeded doorway run."""
    n = adv.n
    inputs = {pid: pid + 1 for pid in range(n)}
    programs = {
        pid: doorway.doorway_program(adv, pid, value)
        for pid, value in inputs.items()
    }
    schedule = random_crash_schedule(seed, range(n), adv, l_resilient=l_resilient)
    execution = run(programs, schedule, budget=budget)
    task = ImageTask(k_set_agreement(n, n), adv)
    base_input = tuple(inputs[pid] for pid in range(n))
    image = tuple(execution.returns.get(pid) for pid in range(n))
    verdict = validate_image_input(task, image, base_input)
    if not verdict:
        return False, f"validator rejected: {verdict.reason}", "violation"
    returned_sets = [frozenset(j for j, _ in e) for e in image if e is not None]
    for a, b in itertools.combinations(returned_sets, 2):
        if not (a <= b or b <= a):
            return False, f"returned sets {sorted(a)} and {sorted(b)} not nested", "violation"
    if l_resilient:
        if execution.incomplete:
            return False, "budget exhausted in a resilient execution", "liveness"
        missing = schedule.correct - set(execution.returns)
        if missing:
            return False, f"correct {sorted(missing)} never returned", "liveness"
    return True, "", "violation"


def suite_doorway(
    schedules: int = 100,
    seed: int = 23,
    budget: int = DEFAULT_BUDGET,
    non_resilient: int = 30,
    **_: Any,
) -> Report:
    out: List[CaseResult] = []
    for adv in doorway_adversaries():
        label = f"n={adv.n}:{[sorted(s) for s in adv.live_sets]}"
        failures = 0
        liveness = 0
        first = ""
        for index in range(schedules):
            ok, detail, kind = _doorway_case(adv, seed + index, True, budget)
            if not ok:
                if kind == "liveness":
                    liveness += 1
                else:
                    failures += 1
                first = first or f"seed {seed + index}: {detail}"
        out.append(
            CaseResult(
                "doorway",
                f"resilient {label} x{schedules}",
                failures == 0 and liveness == 0,
                first,
                kind="liveness" if failures == 0 and liveness else "violation",
                metric=float(schedules),
            )
        )
        safety_failures = 0
        first_safety = ""
        for index in range(non_resilient):
            ok, detail, kind = _doorway_case(
                adv, seed + 10_000 + index, False, budget // 10
            )
            if not ok and kind == "violation":
                safety_failures += 1
                first_safety = first_safety or f"seed {seed + 10_000 + index}: {detail}"
        out.append(
            CaseResult(
                "doorway",
                f"safety {label} x{non_resilient}",
                safety_failures == 0,
                first_safety,
            )
        )
    return Report("doorway", out, meta={"schedules": schedules, "seed": seed})


# ---------------------------------------------------------------------------
# Suite: tl (companion-task simulation)
# ---------------------------------------------------------------------------


def _image_entry(base_input: Tuple[Any, ...], ids: Iterable[int]) -> frozenset:
    return frozenset((j, base_input[j]) for j in ids)


def tl_scenarios() -> List[Dict[str, Any]]:
    """Simulation scenarios with j = 1, 2, 3 distinct input entries."""
    out: List[Dict[str, Any]] = []
    adv2 = Adversary.of(4, [{0, 1}, {2, 3}])
    base4 = (1, 2, 3, 4)
    full = _image_entry(base4, range(4))
    half = _image_entry(base4, {0, 1})
    out.append(
        {
            "name": "j1",
            "adv": adv2,
            "base_input": base4,
            "entries": {pid: full for pid in range(4)},
            "j": 1,
        }
    )
    out.append(
        {
            "name": "j2",
            "adv": adv2,
            "base_input": base4,
            "entries": {0: half, 1: half, 2: full, 3: full},
            "j": 2,
        }
    )
    adv3 = adv_mod.t_resilient_adversary(4, 2)
    out.append(
        {
            "name": "j3",
            "adv": adv3,
            "base_input": base4,
            "entries": {
                0: _image_entry(base4, {0, 1}),
                1: _image_entry(base4, {0, 1, 2}),
                2: full,
                3: full,
            },
            "j": 3,
        }
    )
    return out


def hs_ksa_family(adv: Adversary) -> CodeFamily:
    return CodeFamily(
        "hs-ksa",
        lambda code, value: hs_ksa_program(adv, code, value),
        "ksa/out",
    )


class StaggeredSchedule:
    """A finite burst prefix followed by a fair schedule.

    Burst prefixes desynchronise process starts, which is what provokes
    diverging proposals in the simulation suites; the fair tail restores
    liveness for the correct set.
    """

    def __init__(self, prefix: List[int], tail: FairSchedule):
        self.prefix = list(prefix)
        self.tail = tail
        self.correct = tail.correct

    def spec(self) -> Dict[str, Any]:
        return {"prefix": self.prefix, **self.tail.spec()}

    def __iter__(self):
        yield from self.prefix
        yield from self.tail


def staggered_schedule(
    rng: random.Random,
    pids: List[int],
    max_bursts: int = 4,
    max_burst_len: int = 8,
    crash_window: int = 60,
) -> StaggeredSchedule:
    prefix: List[int] = []
    for _ in range(rng.randrange(0, max_bursts)):
        pid = rng.choice(pids)
        prefix.extend([pid] * rng.randrange(1, max_burst_len + 1))
    correct = sorted(rng.sample(pids, rng.randint(1, len(pids))))
    crash = {
        pid: rng.randrange(1, crash_window) for pid in pids if pid not in correct
    }
    tail = FairSchedule(correct, pids, crash, shuffle_seed=rng.randrange(2**31))
    return StaggeredSchedule(prefix, tail)


def suite_tl(
    runs: int = 20, seed: int = 29, budget: int = DEFAULT_BUDGET, **_: Any
) -> Report:
    out: List[CaseResult] = []
    for scenario in tl_scenarios():
        adv: Adversary = scenario["adv"]
        entries: Dict[int, frozenset] = scenario["entries"]
        expected_j = scenario["j"]
        task = ImageTask(k_set_agreement(adv.n, min_hitting_sets(adv).h), adv)
        ivec = tuple(entries.get(pid) for pid in range(adv.n))
        verdict = validate_image_input(task, ivec, scenario["base_input"])
        if not verdict:
            out.append(
                CaseResult("tl", scenario["name"], False, f"bad scenario: {verdict.reason}")
            )
            continue
        failures = 0
        liveness = 0
        first = ""
        max_blocked = 0
        for index in range(runs):
            rng = random.Random(seed + index)
            sims = sorted(entries)
            schedule = staggered_schedule(rng, sims)
            correct = sorted(schedule.correct)
            try:
                result = simulate_image_task(
                    adv, hs_ksa_family(adv), entries, schedule, budget
                )
            except InvariantViolation as exc:
                failures += 1
                first = first or f"run {index}: {exc}"
                continue
            blocked = len(result.blocked)
            max_blocked = max(max_blocked, blocked)
            if blocked > expected_j - 1:
                failures += 1
                first = first or f"run {index}: {blocked} codes blocked with j={expected_j}"
                continue
            if result.execution.incomplete:
                liveness += 1
                first = first or f"run {index}: budget exhausted"
                continue
            missing = [pid for pid in correct if result.outputs[pid] is None]
            if missing:
                liveness += 1
                first = first or f"run {index}: correct simulators {missing} no output"
                continue
            overdict = validate_image_output(task, ivec, result.outputs)
            if not overdict:
                failures += 1
                first = first or f"run {index}: output rejected: {overdict.reason}"
        ok = failures == 0 and liveness == 0
        out.append(
            CaseResult(
                "tl",
                f"{scenario['name']} x{runs}",
                ok,
                first,
                kind="liveness" if failures == 0 and liveness else "violation",
                metric=float(max_blocked),
            )
        )
    return Report("tl", out, meta={"runs": runs, "seed": seed})


# ---------------------------------------------------------------------------
# Suite: e2e (doorway composed with the companion-task simulation)
# ---------------------------------------------------------------------------


def composed_pipeline(
    adv: Adversary, inputs: Dict[int, Any], monitor: Optional[ProgressMonitor] = None
) -> Dict[int, Callable]:
    """Programs for the full transfer: doorway, then simulation, then posting
    base-task outputs."""
    monitor = monitor if monitor is not None else ProgressMonitor()
    family = hs_ksa_family(adv)

    def wf_steps(pid: int, entry: frozenset):
        return assim.simulator_steps(adv, family, pid, entry, monitor)

    make = doorway.compose_doorway_then(adv, wf_steps)
    return {pid: make(pid, value) for pid, value in inputs.items()}


def suite_e2e(
    schedules: int = 100, seed: int = 31, budget: int = DEFAULT_BUDGET, **_: Any
) -> Report:
    adv = Adversary.of(4, [{0, 1}, {2, 3}])
    k = min_hitting_sets(adv).h
    task = k_set_agreement(adv.n, k)
    inputs = {pid: pid + 1 for pid in range(adv.n)}
    base_input = tuple(inputs[pid] for pid in range(adv.n))
    failures = 0
    liveness = 0
    first = ""
    for index in range(schedules):
        monitor = ProgressMonitor()
        programs = composed_pipeline(adv, inputs, monitor)
        schedule = random_crash_schedule(seed + index, range(adv.n), adv, True)
        try:
            execution = run(programs, schedule, budget=budget)
        except InvariantViolation as exc:
            failures += 1
            first = first or f"seed {seed + index}: {exc}"
            continue
        posted = {
            pid: execution.memory.get(f"out/T[{pid}]", BOT) for pid in range(adv.n)
        }
        posted_ids = frozenset(pid for pid, v in posted.items() if v is not BOT)
        output_vector = tuple(posted.get(pid, BOT) for pid in range(adv.n))
        distinct = {v for v in output_vector if v is not BOT}
        if posted_ids and not task.accepts(base_input, output_vector):
            failures += 1
            first = first or f"seed {seed + index}: posted outputs violate the task"
            continue
        if len(distinct) > k:
            failures += 1
            first = first or f"seed {seed + index}: {len(distinct)} distinct decisions"
            continue
        if execution.incomplete:
            liveness += 1
            first = first or f"seed {seed + index}: budget exhausted"
            continue
        if not adv.is_resilient(posted_ids):
            failures += 1
            first = (
                first
                or f"seed {seed + index}: outputs posted for {sorted(posted_ids)} cover no live set"
            )
    ok = failures == 0 and liveness == 0
    case = CaseResult(
        "e2e",
        f"doorway+simulation x{schedules}",
        ok,
        first,
        kind="liveness" if failures == 0 and liveness else "violation",
        metric=float(schedules),
    )
    return Report("e2e", [case], meta={"schedules": schedules, "seed": seed, "k": k})


# ---------------------------------------------------------------------------
# Suite: bg
# ---------------------------------------------------------------------------


def wait_min_family(n: int, t: int) -> CodeFamily:
    return CodeFamily(
        "wait-min",
        lambda code, value: wait_min_program(n, t, code, value),
        "wm/out",
    )


def find_unsafe_window_crash(
    adv: Adversary, family: CodeFamily, inputs: Dict[int, Any], victim: int
) -> Optional[FairSchedule]:
    """Probe a fair run for the victim's first safe-agreement entry write and
    build a schedule that crashes it right after (inside its window)."""
    sims = resolver_set_for(adv, adv.universe)
    probe = bgsim.bg_simulate(adv, family, inputs)
    for event in probe.execution.trace:
        if (
            event.pid == victim
            and event.op == "write"
            and event.phase == "sa-enter"
        ):
            crash_slot = event.i + 1
            correct = [pid for pid in sims if pid != victim]
            return FairSchedule(correct, sims, {victim: crash_slot})
    return None


def suite_bg(
    schedules: int = 100,
    seed: int = 37,
    budget: int = DEFAULT_BUDGET,
    converse_cases: int = 50,
    **_: Any,
) -> Report:
    out: List[CaseResult] = []
    adv = Adversary.of(4, [{0, 1}, {2, 3}])
    h = min_hitting_sets(adv).h
    family = wait_min_family(adv.n, h - 1)
    sims = resolver_set_for(adv, adv.universe)
    inputs = {pid: 10 + pid for pid in sims}
    failures = 0
    liveness = 0
    first = ""
    max_blocked = 0
    for index in range(schedules):
        schedule = random_crash_schedule(seed + index, range(adv.n), adv, True)
        result = bgsim.bg_simulate(adv, family, inputs, schedule, budget)
        blocked = len(result.blocked)
        max_blocked = max(max_blocked, blocked)
        if blocked > h - 1:
            failures += 1
            first = first or f"seed {seed + index}: {blocked} codes blocked"
            continue
        values = set(result.outputs.values())
        if not values <= set(inputs.values()):
            failures += 1
            first = first or f"seed {seed + index}: outputs {values} not simulator inputs"
            continue
        if len(values) > h:
            failures += 1
            first = first or f"seed {seed + index}: {len(values)} distinct outputs"
            continue
        if result.execution.incomplete:
            liveness += 1
            first = first or f"seed {seed + index}: budget exhausted"
            continue
        correct_sims = [pid for pid in sims if pid in schedule.correct]
        missing = [pid for pid in correct_sims if pid not in result.outputs]
        if missing:
            liveness += 1
            first = first or f"seed {seed + index}: correct simulators {missing} no output"
    out.append(
        CaseResult(
            "bg",
            f"transfer x{schedules}",
            failures == 0 and liveness == 0,
            first,
            kind="liveness" if failures == 0 and liveness else "violation",
            metric=float(max_blocked),
        )
    )

    crash_schedule = find_unsafe_window_crash(adv, family, inputs, victim=sims[0])
    if crash_schedule is None:
        out.append(
            CaseResult("bg", "unsafe-window", False, "probe found no window write")
        )
    else:
        result = bgsim.bg_simulate(adv, family, inputs, crash_schedule, budget)
        survivor = sims[1]
        ok = (
            len(result.blocked) <= h - 1
            and survivor in result.outputs
            and set(result.outputs.values()) <= set(inputs.values())
        )
        out.append(
            CaseResult(
                "bg",
                "unsafe-window",
                ok,
                "" if ok else f"blocked={sorted(result.blocked)} outputs={result.outputs}",
                metric=float(len(result.blocked)),
            )
        )

    rng = random.Random(seed)
    converse_failures = 0
    first_converse = ""
    for index in range(converse_cases):
        n = rng.randint(2, 8)
        case_adv, _ = random_adversary(rng, n)
        case_h = min_hitting_sets(case_adv).h
        for correct in adv_mod.subsets_of_size_at_least(
            case_adv.universe, n - (case_h - 1)
        ):
            if not case_adv.is_resilient(correct):
                converse_failures += 1
                first_converse = first_converse or (
                    f"case {index}: correct set {sorted(correct)} of size "
                    f"{len(correct)} >= n-(h-1) covers no live set (h={case_h})"
                )
                break
    out.append(
        CaseResult(
            "bg",
            f"converse x{converse_cases}",
            converse_failures == 0,
            first_converse,
        )
    )
    return Report("bg", out, meta={"schedules": schedules, "seed": seed, "h": h})


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------


SUITES: Dict[str, Callable[..., Report]] = {
    "hs": suite_hs,
    "ca": suite_ca,
    "rap": suite_rap,
    "as": suite_as,
    "doorway": suite_doorway,
    "tl": suite_tl,
    "bg": suite_bg,
    "e2e": suite_e2e,
}


def run_suite(name: str, **params: Any) -> Report:
    if name not in SUITES:
        raise ConfigError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    started = time.perf_counter()
    report = SUITES[name](**params)
    report.duration = time.perf_counter() - started
    return report
