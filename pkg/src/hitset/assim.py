"""Position/color progress model and the wait-free companion-task simulation.

The abstract model tracks positions colored U (unvisited), IP (in
progress), or V (visited).  Walkers snapshot the state and access the
first unvisited position of their snapshot: a position accessed with a
proposal matching the live state (or matching an earlier recorded
proposal) concludes to V; a position holding a different recorded proposal
becomes IP; visited positions are left alone.  An adversary may promote
any IP position to V at any time and has a fixed budget of moves that
atomically visit a whole set of unvisited positions.  The central
invariant -- with b batch moves spent so far, at most b-1 positions are in
progress -- is enforced online by ProgressMonitor in the concrete
simulation and fuzz-checked on the abstract model.

The concrete simulation solves the companion task.  Simulators publish
their input entry (a set of (code, base input) pairs) together with every
read decision they know, so an atomic snapshot of the publication row is a
consistent simulation state: which codes participate and the agreed result
of each decided read.  A simulator repeatedly snapshots that state,
replays the participating codes breadth-first against it, and accesses the
first undecided read-like operation of the least-advanced code: one
resolver-agreement round per position, proposing the snapshot state
itself.  Identical states propose identically and commit; diverging states
may leave a round stuck, making the position in-progress until the
position's dedicated resolver (the simulator whose id equals the code's)
unsticks it.  Posting a distinct input entry is a batch move.  Stuck
positions are parked and skipped -- their decisions, once resolved, arrive
through other simulators' publications -- so a simulator always makes
progress among unblocked codes and returns as soon as it observes outputs
posted for a full participating live set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Optional, Tuple

from .adversary import Adversary
from .agreement import STUCK, RapLocal, SubRun, rap_propose
from .replay import CodeReplay, SimulationFault, absorb, project
from .shmem import BOT, Execution, Snap, Write, Yield, cell, run

U = "U"
IP = "IP"
V = "V"

Position = Tuple[int, int]  # (code, read index)


class ModelFault(Exception):
    """An illegal transition was attempted in the abstract model."""


class InvariantViolation(Exception):
    """The in-progress bound was exceeded."""


# ---------------------------------------------------------------------------
# Abstract model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ASState:
    colors: Tuple[str, ...]
    pending: Tuple[Optional[Tuple[str, ...]], ...]  # first recorded proposal per position
    batch_budget: int
    batches_used: int = 0
    moves: Tuple[str, ...] = ()

    @property
    def ip_count(self) -> int:
        return sum(1 for c in self.colors if c == IP)


def initial_as_state(positions: int, batches: int) -> ASState:
    return ASState((U,) * positions, (None,) * positions, batches)


def next_position(colors: Tuple[str, ...]) -> Optional[int]:
    for i, c in enumerate(colors):
        if c == U:
            return i
    return None


def _replace(items: Tuple, index: int, value) -> Tuple:
    out = list(items)
    out[index] = value
    return tuple(out)


def as_step(state: ASState, proposed: Tuple[str, ...]) -> ASState:
    """One walker access: go to the first unvisited position of `proposed`."""
    if len(proposed) != len(state.colors):
        raise ModelFault("proposal has the wrong number of positions")
    pos = next_position(proposed)
    if pos is None:
        raise ModelFault("proposed state has no unvisited position")
    current = state.colors[pos]
    if current in (V, IP):
        return state
    recorded = state.pending[pos]
    if recorded is not None and recorded != proposed:
        return ASState(
            _replace(state.colors, pos, IP),
            _replace(state.pending, pos, None),
            state.batch_budget,
            state.batches_used,
            state.moves,
        )
    if proposed == state.colors or recorded == proposed:
        return ASState(
            _replace(state.colors, pos, V),
            _replace(state.pending, pos, None),
            state.batch_budget,
            state.batches_used,
            state.moves,
        )
    return ASState(
        state.colors,
        _replace(state.pending, pos, proposed),
        state.batch_budget,
        state.batches_used,
        state.moves,
    )


def promote_ip(state: ASState, pos: int) -> ASState:
    """Adversary move: turn one in-progress position into visited."""
    if state.colors[pos] != IP:
        raise ModelFault(f"position {pos} is {state.colors[pos]}, not {IP}")
    return ASState(
        _replace(state.colors, pos, V),
        state.pending,
        state.batch_budget,
        state.batches_used,
        state.moves + (f"promote:{pos}",),
    )


def batch_visit(state: ASState, positions: FrozenSet[int]) -> ASState:
    """Adversary move: atomically visit a set of positions (no-op on non-U)."""
    if state.batch_budget <= 0:
        raise ModelFault("batch move budget exhausted")
    colors = list(state.colors)
    pending = list(state.pending)
    for pos in positions:
        if colors[pos] == U:
            colors[pos] = V
            pending[pos] = None
    return ASState(
        tuple(colors),
        tuple(pending),
        state.batch_budget - 1,
        state.batches_used + 1,
        state.moves + (f"batch:{sorted(positions)}",),
    )


# ---------------------------------------------------------------------------
# Online monitor for the concrete simulation
# ---------------------------------------------------------------------------


@dataclass
class ProgressMonitor:
    """Tracks position colors and batch moves; raises on bound violations."""

    batches: set = field(default_factory=set)
    ip: set = field(default_factory=set)
    visited: set = field(default_factory=set)
    max_ip: int = 0

    def batch(self, value: Any) -> None:
        self.batches.add(value)
        self._check()

    def stuck(self, pos: Position) -> None:
        if pos not in self.visited:
            self.ip.add(pos)
            self._check()

    def resolved(self, pos: Position) -> None:
        self.visited.add(pos)
        self.ip.discard(pos)

    def _check(self) -> None:
        count = len(self.ip)
        self.max_ip = max(self.max_ip, count)
        bound = max(len(self.batches) - 1, 0)
        if count > bound:
            raise InvariantViolation(
                f"{count} in-progress positions with {len(self.batches)} batches"
            )

    @property
    def blocked_codes(self) -> frozenset:
        return frozenset(code for code, _ in self.ip)


# ---------------------------------------------------------------------------
# Concrete simulation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CodeFamily:
    """The simulated protocol: a program per (code id, input) plus the name
    of the simulated register row where codes post their outputs."""

    name: str
    make: Any  # Callable[[int, Any], Program]
    out_array: str


SimState = Tuple[Tuple[Tuple[int, Any], ...], Tuple[Tuple[Position, Any], ...]]


def _freeze_state(inputs: Dict[int, Any], decisions: Dict[Position, Any]) -> SimState:
    return (tuple(sorted(inputs.items())), tuple(sorted(decisions.items())))


class _Derived:
    """Replay of all participating codes against one simulation state."""

    def __init__(self, family: CodeFamily, inputs: Dict[int, Any], decisions: Dict[Position, Any]):
        self.registers: Dict[str, Tuple[int, int, Any]] = {}
        self.replays: Dict[int, CodeReplay] = {}
        for code in sorted(inputs):
            rep = CodeReplay(code, family.make(code, inputs[code]))
            absorb(self.registers, rep.prime(), owner=code)
            while not rep.done and (code, rep.read_count) in decisions:
                result = decisions[(code, rep.read_count)]
                absorb(self.registers, rep.feed(result), owner=code)
            self.replays[code] = rep

    def progress(self, code: int) -> int:
        return self.replays[code].read_count

    def pending(self, code: int):
        return self.replays[code].pending_op


def decide_position(family: CodeFamily, state: SimState, pos: Position) -> Any:
    """The agreed read result at `pos` implied by an agreed state.

    Deterministic in (family, state), so every simulator that sees the same
    agreed state derives the same result.
    """
    inputs = dict(state[0])
    decisions = dict(state[1])
    derived = _Derived(family, inputs, decisions)
    code, index = pos
    rep = derived.replays.get(code)
    if rep is None or rep.done or rep.read_count != index:
        raise SimulationFault(f"agreed state does not pend at position {pos}")
    return project(derived.registers, rep.pending_op)


def _next_target(
    inputs: Dict[int, Any],
    replays: Dict[int, CodeReplay],
    parked: set,
) -> Optional[int]:
    """Breadth-first choice: least-advanced unparked unfinished code."""
    best = None
    for code in sorted(inputs):
        rep = replays[code]
        if rep.done or code in parked:
            continue
        key = (rep.read_count, code)
        if best is None or key < best:
            best = key
    return None if best is None else best[1]


def simulator_steps(
    adv: Adversary,
    family: CodeFamily,
    sim_id: int,
    entry: frozenset,
    monitor: ProgressMonitor,
    ns: str = "as",
):
    """Generator body of one simulator; returns its output image entry."""
    n = adv.n
    pub_row = f"{ns}/pub"
    img_row = f"{ns}/img"
    inputs: Dict[int, Any] = {}
    decisions: Dict[Position, Any] = {}
    registers: Dict[str, Tuple[int, int, Any]] = {}
    replays: Dict[int, CodeReplay] = {}
    raps: Dict[Position, SubRun] = {}
    rap_locals: Dict[Position, RapLocal] = {}
    parked: set = set()
    active: Optional[Position] = None
    posted_input = False

    def adopt(new_inputs: Dict[int, Any], new_decisions: Dict[Position, Any]) -> None:
        for code, value in new_inputs.items():
            if code in inputs and inputs[code] != value:
                raise SimulationFault(f"conflicting inputs posted for code {code}")
            inputs[code] = value
        for pos, result in new_decisions.items():
            if pos in decisions:
                if decisions[pos] != result:
                    raise SimulationFault(f"conflicting decisions recorded at {pos}")
                continue
            decisions[pos] = result
        for code in sorted(inputs):
            if code not in replays:
                rep = CodeReplay(code, family.make(code, inputs[code]))
                absorb(registers, rep.prime(), owner=code)
                replays[code] = rep
            rep = replays[code]
            while not rep.done and (code, rep.read_count) in decisions:
                absorb(registers, rep.feed(decisions[(code, rep.read_count)]), owner=code)
                parked.discard(code)

    while True:
        images = yield Snap(img_row, n, label="check-images")
        for img in images:
            if img is not BOT:
                return img
        # Poll one of my own parked rounds first: I am its resolver, and the
        # settled decision must be visible in this cycle's publication.
        mine = sorted(
            pos
            for pos in parked_positions(parked, replays)
            if pos[0] == sim_id and pos in raps and pos not in decisions
        )
        if mine:
            pos = mine[0]
            finished = yield from _pump(raps[pos], monitor, pos)
            if finished:
                _settle(family, raps[pos].value, pos, adopt)
        yield Write(
            cell(pub_row, sim_id),
            (entry, tuple(sorted(decisions.items()))),
            label="publish",
        )
        if not posted_input:
            posted_input = True
            monitor.batch(entry)
        published = yield Snap(pub_row, n, label="observe")
        seen_inputs: Dict[int, Any] = {}
        seen_decisions: Dict[Position, Any] = {}
        for slot in published:
            if slot is BOT:
                continue
            slot_entry, slot_decisions = slot
            for code, value in slot_entry:
                if code in seen_inputs and seen_inputs[code] != value:
                    raise SimulationFault(f"conflicting inputs posted for code {code}")
                seen_inputs[code] = value
            for pos, result in slot_decisions:
                seen_decisions[pos] = result
        adopt(seen_inputs, seen_decisions)
        state = _freeze_state(seen_inputs, seen_decisions)

        outs = {
            code: registers[cell(family.out_array, code)][2]
            for code in inputs
            if cell(family.out_array, code) in registers
        }
        if outs and adv.is_resilient(outs):
            image = frozenset(outs.items())
            yield Write(cell(img_row, sim_id), image, label="post-image")
            return image

        if active is not None and active in decisions:
            active = None
        if active is None:
            target = _next_target(inputs, replays, parked)
            if target is None:
                yield Yield(label="idle")
                continue
            pos = (target, replays[target].read_count)
            if pos not in raps:
                local = RapLocal(resolver=(sim_id == target))
                rap_locals[pos] = local
                raps[pos] = SubRun(rap_propose(_pos_ns(ns, pos), sim_id, n, state, local))
            active = pos
        pos = active
        finished = yield from _pump(raps[pos], monitor, pos)
        if finished:
            _settle(family, raps[pos].value, pos, adopt)
            active = None
        elif rap_locals[pos].status == STUCK:
            monitor.stuck(pos)
            parked.add(pos[0])
            active = None


def parked_positions(parked: set, replays: Dict[int, CodeReplay]):
    for code in parked:
        rep = replays.get(code)
        if rep is not None and not rep.done:
            yield (code, rep.read_count)


def _pump(sub: SubRun, monitor: ProgressMonitor, pos: Position):
    """Advance one agreement round by one operation; True once it returned."""
    op = sub.next_op()
    if op is None:
        monitor.resolved(pos)
        return True
    sub.feed((yield op))
    if isinstance(op, Write) and op.reg.endswith("/D"):
        monitor.resolved(pos)
    return False


def _settle(family: CodeFamily, agreed_state: SimState, pos: Position, adopt) -> None:
    result = decide_position(family, agreed_state, pos)
    adopt({}, {pos: result})


def _pos_ns(ns: str, pos: Position) -> str:
    return f"{ns}/pos/{pos[0]}/{pos[1]}"


@dataclass
class SimResult:
    outputs: Tuple[Optional[frozenset], ...]
    execution: Execution
    monitor: ProgressMonitor
    blocked: frozenset
    distinct_inputs: int


def simulate_image_task(
    adv: Adversary,
    family: CodeFamily,
    entries: Dict[int, frozenset],
    schedule=None,
    budget: int = 100_000,
    ns: str = "as",
) -> SimResult:
    """Run the simulators over a schedule and collect the output image.

    `entries` maps simulator ids to companion-task input entries; ids
    without entries run an idle stub so that schedules over the full
    process universe remain valid.
    """
    monitor = ProgressMonitor()
    programs = {}
    for pid in range(adv.n):
        if pid in entries:
            programs[pid] = _simulator_program(adv, family, pid, entries[pid], monitor, ns)
        else:
            programs[pid] = _idle_program()
    if schedule is None:
        schedule = _round_robin(sorted(entries))
    execution = run(programs, schedule, budget)
    outputs = tuple(execution.returns.get(pid) for pid in range(adv.n))
    return SimResult(
        outputs,
        execution,
        monitor,
        monitor.blocked_codes,
        len(set(entries.values())),
    )


def _simulator_program(adv, family, pid, entry, monitor, ns):
    def prog():
        image = yield from simulator_steps(adv, family, pid, entry, monitor, ns)
        return image

    return prog


def _idle_program():
    def prog():
        yield Yield(label="idle")
        return None

    return prog


def _round_robin(pids):
    from .shmem import FairSchedule

    return FairSchedule(pids, pids, {})
