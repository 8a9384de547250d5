"""Commit-adopt and the resolver agreement protocol.

Both protocols are written as plain generators over shared-memory
operations so they can be embedded in any simulated process, either run to
completion with ``yield from`` or advanced one operation at a time through
a SubRun (the doorway and the simulators need the one-step granularity).

Commit-adopt is the two-phase flag/value construction: write the proposal,
snapshot, raise the flag iff the snapshot is unanimous; then write the
flagged pair, snapshot again, and commit only on an all-flagged unanimous
view.  Its guarantees -- returned values were proposed, a lone proposal is
committed, a commit forces every other return to carry the same value, and
termination in a bounded number of steps -- are not assumed anywhere in
this package: the exhaustive interleaving suites verify them.

Resolver agreement wraps commit-adopt with a decision register D.  A
committer writes D and returns; an adopter spins on D, and any process
whose local resolver flag is raised writes its estimate to D on every spin
iteration.  While spinning on an unset D a process considers the round
stuck; once a value is in D the round is resolved.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterator

from .shmem import BOT, Read, Snap, Write, cell

COMMIT = "commit"
ADOPT = "adopt"

RUNNING = "running"
STUCK = "stuck"
RETURNED = "returned"


def ca_propose(ns: str, pid: int, n: int, value: Any) -> Iterator:
    """Two-phase commit-adopt round in namespace `ns`; returns (flag, value)."""
    first = f"{ns}/p1"
    second = f"{ns}/p2"
    yield Write(cell(first, pid), value, label="ca1")
    seen = yield Snap(first, n, label="ca1")
    unanimous = all(v == value for v in seen if v is not BOT)
    yield Write(cell(second, pid), (unanimous, value), label="ca2")
    seen2 = yield Snap(second, n, label="ca2")
    entries = [e for e in seen2 if e is not BOT]
    if all(flag and v == value for flag, v in entries):
        return (COMMIT, value)
    flagged = [v for flag, v in entries if flag]
    if flagged:
        return (ADOPT, flagged[0])
    return (ADOPT, value)


@dataclass
class RapLocal:
    """Per-process participation state in one resolver-agreement round."""

    resolver: bool = False
    status: str = RUNNING
    value: Any = None

    def resolve(self) -> None:
        """Become (or stay) a resolver for this round; idempotent."""
        self.resolver = True


def d_register(ns: str) -> str:
    return f"{ns}/D"


def is_resolved(memory: dict, ns: str) -> bool:
    """A round is resolved once any value has been posted in D."""
    return memory.get(d_register(ns), BOT) is not BOT


def rap_propose(ns: str, pid: int, n: int, value: Any, local: RapLocal) -> Iterator:
    """Resolver-agreement round; returns the agreed value.

    Non-terminating while stuck: with no resolver and no committed value the
    generator keeps re-reading D, one operation per step, until a value
    appears.  `local` carries the resolver flag (which may be raised at any
    time, even mid-round) and exposes the stuck/returned status.
    """
    d_reg = d_register(ns)
    flag, est = yield from ca_propose(f"{ns}/ca", pid, n, value)
    if flag == COMMIT:
        yield Write(d_reg, est, label="rap-commit")
        local.status = RETURNED
        local.value = est
        return est
    local.status = STUCK
    while True:
        if local.resolver:
            yield Write(d_reg, est, label="rap-resolve")
        current = yield Read(d_reg, label="rap-poll")
        if current is not BOT:
            local.status = RETURNED
            local.value = current
            return current


class SubRun:
    """Drives a sub-protocol generator one memory operation at a time.

    The host generator calls next_op() to obtain the next operation, yields
    it to the simulator itself, and feeds the result back.  next_op()
    returns None once the sub-protocol has returned; its value is then in
    `.value`.
    """

    __slots__ = ("gen", "pending", "started", "done", "value")

    def __init__(self, gen: Iterator):
        self.gen = gen
        self.pending: Any = None
        self.started = False
        self.done = False
        self.value: Any = None

    def next_op(self):
        if self.done:
            return None
        try:
            if self.started:
                op = self.gen.send(self.pending)
            else:
                op = next(self.gen)
        except StopIteration as stop:
            self.done = True
            self.value = stop.value
            return None
        self.started = True
        self.pending = None
        return op

    def feed(self, result: Any) -> None:
        self.pending = result


# ---------------------------------------------------------------------------
# Standalone runners for the verification suites
# ---------------------------------------------------------------------------


def ca_program(ns: str, pid: int, n: int, value: Any):
    """Process that runs a single commit-adopt round and returns its outcome."""

    def prog():
        outcome = yield from ca_propose(ns, pid, n, value)
        return outcome

    return prog


def rap_program(
    ns: str,
    pid: int,
    n: int,
    value: Any,
    resolve_at: int | None = None,
    locals_out: dict | None = None,
):
    """Process that runs one resolver-agreement round, pumped step by step.

    `resolve_at` raises the resolver flag after that many own operations
    (0 means before the first); None never resolves.  `locals_out`, when
    given, receives the RapLocal under this pid for status inspection.
    """

    def prog():
        local = RapLocal()
        if locals_out is not None:
            locals_out[pid] = local
        run = SubRun(rap_propose(ns, pid, n, value, local))
        ops = 0
        while True:
            if resolve_at is not None and ops >= resolve_at:
                local.resolve()
            op = run.next_op()
            if op is None:
                return run.value
            run.feed((yield op))
            ops += 1

    return prog
