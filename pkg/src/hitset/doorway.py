"""The doorway: the only adversary-dependent stage of the transform.

Each process posts its input in row R, then waits until a snapshot of R
shows inputs for a full live set.  From then on it loops: snapshot the
participant set S, look up the deterministically chosen minimum hitting
set H of (S, live sets), and if it belongs to H become the resolver of the
current round of "its" agreement sequence.  Independently it advances all
agreement sequences 1..|H| by one resolver-agreement operation per loop
iteration; when a sequence's round returns, a commit-adopt round runs
inline on the returned value.  A commit ends the protocol: the process
returns the (id, input) pairs of the committed participant set.  An adopt
feeds the adopted value to the sequence's next round.

Every sequence commits at most one distinct value, and the committed sets
are snapshot-ordered, which is exactly what makes the collected outputs a
legal input image for the companion task.
"""

from __future__ import annotations

from typing import Any, Callable, Dict, Tuple

from .adversary import Adversary, resolver_set_for
from .agreement import COMMIT, RapLocal, SubRun, ca_propose, rap_propose
from .shmem import BOT, Snap, Write, cell


def _participants(snapshot: Tuple[Any, ...]) -> frozenset:
    return frozenset(i for i, v in enumerate(snapshot) if v is not BOT)


def _rap_ns(ns: str, seq: int, rnd: int) -> str:
    return f"{ns}/rap/{seq}/{rnd}"


def _ca_ns(ns: str, seq: int, rnd: int) -> str:
    return f"{ns}/ca/{seq}/{rnd}"


def doorway_steps(adv: Adversary, pid: int, value: Any, ns: str = "dw"):
    """Generator body of the doorway for one process; see module docstring.

    Returns a frozenset of (id, input value) pairs whose id set contains a
    live set.  In executions where the participant set never covers a live
    set the generator keeps snapshotting forever; the run's budget turns
    that into an Incomplete execution rather than an error.
    """
    if value is BOT:
        raise ValueError("doorway input must not be BOT")
    n = adv.n
    row = f"{ns}/R"
    yield Write(cell(row, pid), value, label="enter")
    while True:
        snap = yield Snap(row, n, label="gate")
        if adv.is_resilient(_participants(snap)):
            break
    proposals: Dict[int, frozenset] = {}
    rounds: Dict[int, int] = {}
    runs: Dict[Tuple[int, int], SubRun] = {}
    rap_locals: Dict[Tuple[int, int], RapLocal] = {}
    while True:
        snap = yield Snap(row, n, label="participants")
        participants = _participants(snap)
        hs = resolver_set_for(adv, participants)
        if pid in hs:
            seq = hs.index(pid) + 1
            key = (seq, rounds.get(seq, 0))
            rap_locals.setdefault(key, RapLocal()).resolve()
        for seq in range(1, len(hs) + 1):
            rnd = rounds.get(seq, 0)
            if rnd == 0:
                proposals.setdefault(seq, participants)
            key = (seq, rnd)
            if key not in runs:
                local = rap_locals.setdefault(key, RapLocal())
                runs[key] = SubRun(
                    rap_propose(_rap_ns(ns, seq, rnd), pid, n, proposals[seq], local)
                )
            op = runs[key].next_op()
            if op is not None:
                runs[key].feed((yield op))
                continue
            flag, adopted = yield from ca_propose(
                _ca_ns(ns, seq, rnd), pid, n, runs[key].value
            )
            proposals[seq] = adopted
            if flag == COMMIT:
                final = yield Snap(row, n, label="collect")
                assert all(final[s] is not BOT for s in adopted)
                return frozenset((s, final[s]) for s in adopted)
            rounds[seq] = rnd + 1


def doorway_program(adv: Adversary, pid: int, value: Any, ns: str = "dw"):
    def prog():
        result = yield from doorway_steps(adv, pid, value, ns)
        return result

    return prog


def compose_doorway_then(
    adv: Adversary,
    wf_steps: Callable[[int, frozenset], Any],
    out_array: str = "out/T",
    ns: str = "dw",
):
    """Chain the doorway into a wait-free solver of the companion task.

    `wf_steps(pid, entry)` must be a generator function solving the
    companion task from the doorway's output entry; its return value is an
    output image entry (a set of (id, output value) pairs), which the
    composed program posts to `out_array` before returning.
    """

    def make(pid: int, value: Any):
        def prog():
            entry = yield from doorway_steps(adv, pid, value, ns)
            image = yield from wf_steps(pid, entry)
            for target, decided in sorted(image):
                yield Write(cell(out_array, target), decided, label="post-output")
            return image

        return prog

    return make
