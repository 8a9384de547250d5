"""Deterministic simulator for asynchronous shared memory.

Processes are written as Python generator functions: a *program* is a
zero-argument callable returning a fresh generator that yields memory
operations (Read / Write / Snap / Yield) and receives each operation's
result at its next scheduled step.  A ``return value`` inside the generator
terminates the process; the return consumes one scheduled step, so a
process with k operations takes k+1 steps in total.

One scheduled step performs at most one shared-memory access; local
computation between operations is free.  Executions are driven by an
explicit schedule (a finite id list or a fair generator) and are pure
functions of (programs, schedule, budget): replaying a schedule reproduces
the trace bit for bit.

`explore` enumerates all interleavings of a program set up to a depth
bound.  It never copies live generators; instead every reachable global
state is the pair (memory contents, per-process operation/result logs),
and a process is advanced by replaying its log into a fresh generator.
States reached by different schedules but with identical logs and memory
have identical futures, so the search memoizes on them and counts complete
interleavings through the resulting DAG.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, Iterator, List, Optional, Tuple

BOT = None  # unwritten-register / non-participating marker


@dataclass(frozen=True)
class Read:
    reg: str
    label: str = ""


@dataclass(frozen=True)
class Write:
    reg: str
    value: Any
    label: str = ""


@dataclass(frozen=True)
class Snap:
    """Atomic snapshot of cells array[0] .. array[size-1]."""

    array: str
    size: int
    label: str = ""


@dataclass(frozen=True)
class Yield:
    """A scheduled step with no memory access (pure waiting)."""

    label: str = ""


Op = Any  # Read | Write | Snap | Yield
Program = Callable[[], Iterator]  # fresh generator per call


def cell(array: str, index: int) -> str:
    return f"{array}[{index}]"


def apply_op(memory: Dict[str, Any], op: Op) -> Any:
    """Execute one operation against the register map; returns its result."""
    if isinstance(op, Read):
        return memory.get(op.reg, BOT)
    if isinstance(op, Write):
        memory[op.reg] = op.value
        return None
    if isinstance(op, Snap):
        return tuple(memory.get(cell(op.array, i), BOT) for i in range(op.size))
    if isinstance(op, Yield):
        return None
    raise TypeError(f"not a memory operation: {op!r}")


def _op_kind(op: Op) -> str:
    return {Read: "read", Write: "write", Snap: "snapshot", Yield: "yield"}[type(op)]


def _op_reg(op: Op) -> str:
    if isinstance(op, (Read, Write)):
        return op.reg
    if isinstance(op, Snap):
        return op.array
    return ""


def to_jsonable(value: Any) -> Any:
    """Canonical JSON form for trace emission (stable byte-for-byte)."""
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    if isinstance(value, (tuple, list)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, (set, frozenset)):
        return {"set": [to_jsonable(v) for v in sorted(value, key=repr)]}
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in sorted(value.items())}
    return repr(value)


@dataclass
class TraceEvent:
    i: int
    pid: int
    op: str  # read|write|snapshot|yield|return|skip
    reg: str
    val: Any
    phase: str = ""

    def to_json(self) -> str:
        record = {
            "i": self.i,
            "pid": self.pid,
            "op": self.op,
            "reg": self.reg,
            "val": to_jsonable(self.val),
        }
        if self.phase:
            record["phase"] = self.phase
        return json.dumps(record, separators=(",", ":"), sort_keys=True)


@dataclass
class Execution:
    n: int
    trace: List[TraceEvent]
    returns: Dict[int, Any]
    memory: Dict[str, Any]
    slots: int
    steps: int
    stop_reason: str  # schedule-end | all-done | correct-done | budget

    @property
    def incomplete(self) -> bool:
        return self.stop_reason == "budget"

    @property
    def participants(self) -> frozenset:
        return frozenset(e.pid for e in self.trace if e.op != "skip")


class FairSchedule:
    """Round robin over the correct set forever; faulty participants appear
    only in slots before their crash step.

    `crash` maps pid -> first global slot index at which it no longer runs.
    With `shuffle_seed` the per-round visiting order is permuted
    reproducibly, which keeps fairness while diversifying interleavings.
    """

    def __init__(
        self,
        correct: Iterable[int],
        participants: Iterable[int],
        crash: Dict[int, int] | None = None,
        shuffle_seed: int | None = None,
    ):
        self.correct = frozenset(correct)
        self.participants = frozenset(participants)
        self.crash = dict(crash or {})
        self.shuffle_seed = shuffle_seed
        if not self.correct <= self.participants:
            raise ValueError("correct processes must participate")
        for pid in self.crash:
            if pid in self.correct:
                raise ValueError(f"correct process {pid} cannot crash")

    def spec(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "fair": sorted(self.correct),
            "participants": sorted(self.participants),
            "crash": {str(p): s for p, s in sorted(self.crash.items())},
        }
        if self.shuffle_seed is not None:
            out["shuffle_seed"] = self.shuffle_seed
        return out

    @classmethod
    def from_spec(cls, data: Dict[str, Any]) -> "FairSchedule":
        crash = {int(p): int(s) for p, s in data.get("crash", {}).items()}
        participants = data.get(
            "participants", sorted(set(data.get("fair", [])) | set(crash))
        )
        return cls(
            data.get("fair", []),
            participants,
            crash,
            data.get("shuffle_seed"),
        )

    def __iter__(self) -> Iterator[int]:
        import random

        order = sorted(self.participants)
        rng = random.Random(self.shuffle_seed) if self.shuffle_seed is not None else None
        slot = 0
        while True:
            emitted = False
            round_order = list(order)
            if rng is not None:
                rng.shuffle(round_order)
            for pid in round_order:
                if pid in self.correct or slot < self.crash.get(pid, 0):
                    yield pid
                    slot += 1
                    emitted = True
            if not emitted:
                return


def fair_schedule(
    correct: Iterable[int],
    participants: Iterable[int] | None = None,
    crash_steps: Dict[int, int] | None = None,
) -> FairSchedule:
    correct = frozenset(correct)
    if participants is None:
        participants = correct | set(crash_steps or {})
    return FairSchedule(correct, participants, crash_steps)


_UNSTARTED = object()


def run(
    programs: Dict[int, Program],
    schedule: Iterable[int],
    budget: int = 100_000,
    on_event: Callable[[TraceEvent], None] | None = None,
) -> Execution:
    """Execute `programs` under `schedule` for at most `budget` slots.

    A scheduled terminated process produces a recorded skip.  The run stops
    at schedule end, when every process has terminated, when every process
    in the schedule's fairness set (attribute `correct`, if present) has
    terminated, or at budget exhaustion (flagged via stop_reason).
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    pids = sorted(programs)
    n = max(pids) + 1 if pids else 0
    gens = {pid: programs[pid]() for pid in pids}
    pending: Dict[int, Any] = {pid: _UNSTARTED for pid in pids}
    done: set = set()
    returns: Dict[int, Any] = {}
    memory: Dict[str, Any] = {}
    trace: List[TraceEvent] = []
    correct = getattr(schedule, "correct", None)

    slots = 0
    steps = 0
    stop_reason = "schedule-end"
    source = iter(schedule)
    while True:
        if len(done) == len(pids):
            stop_reason = "all-done"
            break
        if correct is not None and correct and correct <= done:
            stop_reason = "correct-done"
            break
        if slots >= budget:
            stop_reason = "budget"
            break
        try:
            pid = next(source)
        except StopIteration:
            stop_reason = "schedule-end"
            break
        if pid not in gens:
            raise ValueError(f"schedule names unknown process {pid}")
        slots += 1
        if pid in done:
            event = TraceEvent(len(trace), pid, "skip", "", None)
            trace.append(event)
            if on_event:
                on_event(event)
            continue
        try:
            if pending[pid] is _UNSTARTED:
                op = next(gens[pid])
            else:
                op = gens[pid].send(pending[pid])
        except StopIteration as stop:
            done.add(pid)
            returns[pid] = stop.value
            event = TraceEvent(len(trace), pid, "return", "", stop.value)
        else:
            result = apply_op(memory, op)
            pending[pid] = result
            val = op.value if isinstance(op, Write) else result
            event = TraceEvent(
                len(trace), pid, _op_kind(op), _op_reg(op), val, op.label
            )
        steps += 1
        trace.append(event)
        if on_event:
            on_event(event)

    return Execution(n, trace, returns, memory, slots, steps, stop_reason)


# ---------------------------------------------------------------------------
# Exhaustive interleaving exploration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _State:
    memory: Tuple[Tuple[str, Any], ...]  # sorted by register name
    logs: Tuple[Tuple[Tuple[Op, Any], ...], ...]  # per pid, (op, result) pairs
    done: Tuple[bool, ...]
    returns: Tuple[Any, ...]


@dataclass
class ExploreView:
    """What a checker sees at the end of one explored interleaving."""

    n: int
    returns: Dict[int, Any]
    memory: Dict[str, Any]
    done: frozenset
    complete: bool
    step_counts: Dict[int, int]


@dataclass
class Violation:
    message: str
    schedule: List[int]


@dataclass
class ExploreReport:
    interleavings: int
    truncated: int
    states: int
    violation: Optional[Violation] = None
    resource_limited: bool = False

    @property
    def ok(self) -> bool:
        return self.violation is None


class _Found(Exception):
    def __init__(self, message: str, schedule: List[int]):
        self.message = message
        self.schedule = schedule


class _Limit(Exception):
    pass


def _replay(program: Program, log: Tuple[Tuple[Op, Any], ...]):
    """Rebuild a generator positioned after the logged operations.

    Returns (generator, last_result) where last_result is the not yet
    delivered result of the final logged operation.
    """
    gen = program()
    last = _UNSTARTED
    for op, result in log:
        got = next(gen) if last is _UNSTARTED else gen.send(last)
        if got != op:
            raise AssertionError(
                f"nondeterministic program: expected {op!r}, replayed {got!r}"
            )
        last = result
    return gen, last


def _advance(programs: Dict[int, Program], state: _State, pid: int) -> _State:
    idx = sorted(programs).index(pid)
    memory = dict(state.memory)
    gen, last = _replay(programs[pid], state.logs[idx])
    try:
        op = next(gen) if last is _UNSTARTED else gen.send(last)
    except StopIteration as stop:
        done = list(state.done)
        rets = list(state.returns)
        done[idx] = True
        rets[idx] = stop.value
        return _State(state.memory, state.logs, tuple(done), tuple(rets))
    result = apply_op(memory, op)
    logs = list(state.logs)
    logs[idx] = logs[idx] + ((op, result),)
    return _State(
        tuple(sorted(memory.items(), key=lambda kv: kv[0])),
        tuple(logs),
        state.done,
        state.returns,
    )


def explore(
    programs: Dict[int, Program],
    depth: Optional[int] = None,
    checker: Callable[[ExploreView], Optional[str]] | None = None,
    max_states: int = 500_000,
) -> ExploreReport:
    """Enumerate every interleaving of `programs` up to `depth` total steps.

    The checker runs on each terminal state (all processes done, or depth
    reached); returning a string flags a violation and stops the search
    with a replayable counterexample schedule.
    """
    pids = sorted(programs)
    init = _State(
        (), tuple(() for _ in pids), tuple(False for _ in pids), tuple(None for _ in pids)
    )
    memo: Dict[Tuple[_State, Optional[int]], Tuple[int, int]] = {}
    seen_states: set = set()
    path: List[int] = []
    report = ExploreReport(0, 0, 0)

    def view_of(state: _State, complete: bool) -> ExploreView:
        return ExploreView(
            n=len(pids),
            returns={
                pid: state.returns[i] for i, pid in enumerate(pids) if state.done[i]
            },
            memory=dict(state.memory),
            done=frozenset(pid for i, pid in enumerate(pids) if state.done[i]),
            complete=complete,
            step_counts={pid: len(state.logs[i]) for i, pid in enumerate(pids)},
        )

    def recurse(state: _State, remaining: Optional[int]) -> Tuple[int, int]:
        key = (state, remaining)
        if key in memo:
            return memo[key]
        seen_states.add(state)
        if len(seen_states) > max_states:
            raise _Limit()
        enabled = [pid for i, pid in enumerate(pids) if not state.done[i]]
        if not enabled or remaining == 0:
            complete = not enabled
            if checker is not None:
                message = checker(view_of(state, complete))
                if message:
                    raise _Found(message, list(path))
            result = (1, 0) if complete else (0, 1)
            memo[key] = result
            return result
        full = 0
        cut = 0
        for pid in enabled:
            path.append(pid)
            try:
                f, c = recurse(
                    _advance(programs, state, pid),
                    None if remaining is None else remaining - 1,
                )
            finally:
                path.pop()
            full += f
            cut += c
        memo[key] = (full, cut)
        return full, cut

    try:
        full, cut = recurse(init, depth)
        report.interleavings, report.truncated = full, cut
    except _Found as found:
        report.violation = Violation(found.message, found.schedule)
    except _Limit:
        report.resource_limited = True
    except RecursionError:
        report.resource_limited = True
    report.states = len(seen_states)
    return report


# ---------------------------------------------------------------------------
# Trace files
# ---------------------------------------------------------------------------


def dump_trace(path, execution: Execution, header: Dict[str, Any] | None = None) -> None:
    """Write a trace as JSONL: an optional header line, then one event per line."""
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(json.dumps({"config": to_jsonable(header)}, sort_keys=True) + "\n")
        for event in execution.trace:
            fh.write(event.to_json() + "\n")


def load_trace_header(path) -> Dict[str, Any] | None:
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
    if not first:
        return None
    record = json.loads(first)
    return record.get("config")
