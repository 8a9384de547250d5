"""Safe agreement and simulator transfer for colorless tasks.

Safe agreement is the two-level construction: a proposer writes (1, value),
snapshots, and settles to level 2 unless it saw someone already at level 2,
in which case it backs off to level 0.  Readers wait for a snapshot with no
level-1 entry and decide the value of the smallest id at level 2.  Between
the level-1 write and the settling write the proposer is in its unsafe
window: crashing there can block the instance forever, and that is the only
way an instance fails to decide.

The transfer runs h simulators (the lexicographically first minimum hitting
set of the adversary) over the n codes of a fault-tolerant protocol for a
colorless task.  Every simulator offers its own task input as the input of
every code; the input of each code and the result of each of its read-like
operations are settled through per-step safe agreement instances, with
views merged as in the companion-task simulation.  Each crashed simulator
can block at most the one instance whose window it died in, so at most h-1
codes ever stall; a simulator returns as soon as it sees any simulated code
post an output, adopting that value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Iterator, Set, Tuple

from .adversary import Adversary, min_hitting_sets, resolver_set_for
from .assim import CodeFamily
from .replay import CodeReplay, absorb, freeze_view, merge_into, project, unfreeze_view
from .shmem import BOT, Execution, FairSchedule, Snap, Write, Yield, cell, run


def sa_propose(ns: str, pid: int, slots: int, value: Any) -> Iterator:
    """Propose to one safe agreement instance (three operations)."""
    row = f"{ns}/sa"
    yield Write(cell(row, pid), (1, value), label="sa-enter")
    seen = yield Snap(row, slots, label="sa-look")
    if any(e is not BOT and e[0] == 2 for e in seen):
        yield Write(cell(row, pid), (0, value), label="sa-back")
    else:
        yield Write(cell(row, pid), (2, value), label="sa-settle")


def sa_gate(snapshot: Tuple[Any, ...]) -> Tuple[str, Any]:
    """Classify an instance snapshot: ("decided", v) | ("blocked", None) |
    ("open", None).  Blocked means some proposer is inside its window right
    now; whether it stays blocked depends on whether that proposer returns.
    """
    entries = [e for e in snapshot if e is not BOT]
    if any(level == 1 for level, _ in entries):
        return ("blocked", None)
    for entry in snapshot:  # snapshot order = id order, so first hit is min id
        if entry is not BOT and entry[0] == 2:
            return ("decided", entry[1])
    return ("open", None)


def sa_instance_ns(ns: str, code: int, step: int) -> str:
    return f"{ns}/sa/{code}/{step}"


def bg_simulator_steps(
    family: CodeFamily,
    n_codes: int,
    sim_id: int,
    value: Any,
    slots: int,
    ns: str = "bg",
):
    """Generator body of one simulator; returns its adopted output value."""
    mem_row = f"{ns}/mem"
    view: Dict[str, Tuple[int, int, Any]] = {}
    replays: Dict[int, CodeReplay] = {}
    stage: Dict[int, int] = {c: 0 for c in range(n_codes)}
    proposed: Set[Tuple[int, int]] = set()
    cursor = n_codes - 1  # first visit lands on code 0
    while True:
        outs = {
            c: view[cell(family.out_array, c)][2]
            for c in range(n_codes)
            if cell(family.out_array, c) in view
        }
        if outs:
            return outs[min(outs)]
        target = None
        for offset in range(1, n_codes + 1):
            candidate = (cursor + offset) % n_codes
            rep = replays.get(candidate)
            if rep is None or not rep.done:
                target = candidate
                cursor = candidate
                break
        if target is None:
            yield Yield(label="idle")
            continue
        step = stage[target]
        instance = sa_instance_ns(ns, target, step)
        if (target, step) not in proposed:
            if step == 0:
                proposal: Any = value
            else:
                yield Write(cell(mem_row, sim_id), freeze_view(view), label="publish")
                published = yield Snap(mem_row, slots, label="gather")
                for other in published:
                    if other is not BOT:
                        merge_into(view, unfreeze_view(other))
                proposal = freeze_view(view)
            yield from sa_propose(instance, sim_id, slots, proposal)
            proposed.add((target, step))
        snapshot = yield Snap(f"{instance}/sa", slots, label="sa-gate")
        status, decided = sa_gate(snapshot)
        if status != "decided":
            continue
        if step == 0:
            rep = CodeReplay(target, family.make(target, decided))
            absorb(view, rep.prime(), owner=target)
            replays[target] = rep
        else:
            agreed = unfreeze_view(decided)
            result = project(agreed, replays[target].pending_op)
            merge_into(view, agreed)
            absorb(view, replays[target].feed(result), owner=target)
        stage[target] = step + 1


def blocked_codes(
    memory: Dict[str, Any], n_codes: int, slots: int, ns: str = "bg"
) -> frozenset:
    """Codes whose current safe agreement instance shows an open window."""
    blocked = set()
    for code in range(n_codes):
        step = 0
        while True:
            row = f"{sa_instance_ns(ns, code, step)}/sa"
            cells = [memory.get(cell(row, i), BOT) for i in range(slots)]
            entries = [e for e in cells if e is not BOT]
            if not entries:
                break
            if any(level == 1 for level, _ in entries):
                blocked.add(code)
                break
            if not any(level == 2 for level, _ in entries):
                break
            step += 1
    return frozenset(blocked)


@dataclass
class BGResult:
    sim_ids: Tuple[int, ...]
    outputs: Dict[int, Any]
    blocked: frozenset
    execution: Execution


def bg_simulate(
    adv: Adversary,
    family: CodeFamily,
    inputs: Dict[int, Any],
    schedule=None,
    budget: int = 100_000,
    ns: str = "bg",
) -> BGResult:
    """Run the hitting-set simulators over a schedule.

    `inputs` maps each simulator id (the lexicographically first minimum
    hitting set of the adversary) to its own task input; every other
    process id runs an idle stub so full-universe schedules stay valid.
    """
    sims = resolver_set_for(adv, adv.universe)
    missing = set(sims) - set(inputs)
    if missing:
        raise ValueError(f"missing inputs for simulators {sorted(missing)}")
    programs = {}
    for pid in range(adv.n):
        if pid in sims:
            programs[pid] = _bg_program(family, adv.n, pid, inputs[pid], adv.n, ns)
        else:
            programs[pid] = _idle()
    if schedule is None:
        schedule = FairSchedule(sims, sims, {})
    execution = run(programs, schedule, budget)
    outputs = {pid: execution.returns[pid] for pid in sims if pid in execution.returns}
    return BGResult(
        sims,
        outputs,
        blocked_codes(execution.memory, adv.n, adv.n, ns),
        execution,
    )


def _bg_program(family, n_codes, pid, value, slots, ns):
    def prog():
        result = yield from bg_simulator_steps(family, n_codes, pid, value, slots, ns)
        return result

    return prog


def _idle():
    def prog():
        yield Yield(label="idle")
        return None

    return prog


def classify(adv: Adversary) -> int:
    """The adversary's equivalence class: its minimum hitting-set size.

    Two adversaries in the same class solve the same colorless tasks.
    """
    return min_hitting_sets(adv).h
