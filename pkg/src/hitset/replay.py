"""Deterministic replay of simulated codes and mergeable memory views.

Simulators never arbitrate simulated writes: given the agreed results of a
code's reads, every write it performs is determined, so each simulator
derives code states by replaying the code generator against the agreed
results.  Simulated memory is carried as a *view*: a map from register
name to (owner code, write index, value).  Simulated registers are
single-writer, which makes views mergeable by taking the later write per
register; views published by different simulators therefore join into a
consistent, monotonically growing picture of the simulated execution.
"""

from __future__ import annotations

from typing import Any, Dict, Iterable, List, Tuple

from .shmem import BOT, Read, Snap, Write, Yield, cell

View = Dict[str, Tuple[int, int, Any]]  # reg -> (owner, write index, value)
FrozenView = Tuple[Tuple[str, Tuple[int, int, Any]], ...]


class SimulationFault(Exception):
    """The simulated protocol broke a simulation assumption."""


_START = object()


class CodeReplay:
    """Replays one simulated code, pausing at every read-like operation.

    Writes and Yields are deterministic given earlier read results and are
    consumed eagerly; Read and Snap operations are position boundaries that
    wait for an agreed result via feed().
    """

    __slots__ = ("code", "gen", "pending_op", "read_count", "write_count", "done", "value")

    def __init__(self, code: int, program):
        self.code = code
        self.gen = program()
        self.pending_op = None
        self.read_count = 0
        self.write_count = 0
        self.done = False
        self.value: Any = None

    def prime(self) -> List[Tuple[str, int, Any]]:
        """Advance to the first read-like operation; returns writes made."""
        return self._advance(_START)

    def feed(self, result: Any) -> List[Tuple[str, int, Any]]:
        """Deliver the agreed result of the pending read; returns new writes."""
        if self.pending_op is None:
            raise SimulationFault(f"code {self.code} has no pending read")
        self.read_count += 1
        return self._advance(result)

    def _advance(self, inbound: Any) -> List[Tuple[str, int, Any]]:
        writes: List[Tuple[str, int, Any]] = []
        self.pending_op = None
        while True:
            try:
                if inbound is _START:
                    op = next(self.gen)
                else:
                    op = self.gen.send(inbound)
            except StopIteration as stop:
                self.done = True
                self.value = stop.value
                return writes
            inbound = None
            if isinstance(op, Write):
                self.write_count += 1
                writes.append((op.reg, self.write_count, op.value))
                continue
            if isinstance(op, Yield):
                continue
            if isinstance(op, (Read, Snap)):
                self.pending_op = op
                return writes
            raise SimulationFault(f"code {self.code} yielded non-operation {op!r}")


def absorb(view: View, writes: Iterable[Tuple[str, int, Any]], owner: int) -> None:
    """Fold a code's own writes into a view."""
    for reg, widx, value in writes:
        current = view.get(reg)
        if current is not None and current[0] != owner:
            raise SimulationFault(
                f"register {reg} written by codes {current[0]} and {owner}"
            )
        if current is None or current[1] < widx:
            view[reg] = (owner, widx, value)


def merge_into(view: View, other: View) -> None:
    """Fold another view into `view`, keeping the later write per register."""
    for reg, (owner, widx, value) in other.items():
        current = view.get(reg)
        if current is not None and current[0] != owner:
            raise SimulationFault(
                f"register {reg} written by codes {current[0]} and {owner}"
            )
        if current is None or current[1] < widx:
            view[reg] = (owner, widx, value)


def freeze_view(view: View) -> FrozenView:
    return tuple(sorted(view.items()))


def unfreeze_view(frozen: FrozenView) -> View:
    return dict(frozen)


def project(view: View, op) -> Any:
    """The result the pending read-like operation sees in `view`."""
    if isinstance(op, Read):
        entry = view.get(op.reg)
        return BOT if entry is None else entry[2]
    if isinstance(op, Snap):
        out = []
        for i in range(op.size):
            entry = view.get(cell(op.array, i))
            out.append(BOT if entry is None else entry[2])
        return tuple(out)
    raise SimulationFault(f"cannot project {op!r}")
