"""Task model, concrete agreement tasks, and the image-task transform.

A task is (inputs, delta) over n processes: an enumerable set of input
n-vectors (BOT marks non-participants) and a membership predicate over
(input vector, output vector) pairs.  Output vectors may carry BOT for
processes that never terminate, so the predicate must accept partial
outputs where the task semantics allow them.

The image-task transform turns a base task T under an adversary into its
wait-free companion: inputs and outputs become *images* -- per-process sets
of (id, value) pairs drawn from a base vector along witness sets that each
contain a live set.  The transform is realised as validators rather than
materialised vectors; the relation is astronomically large even for tiny
tasks, and membership checking is the executable form.  The companion
tests carry a second, naive enumerator as an oracle for these validators.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Iterator, Optional, Tuple

from .adversary import Adversary, EmptyRestriction, min_hitting_sets, resolver_set_for
from .shmem import BOT, Snap, Write, cell

Vector = Tuple[Any, ...]
ImageEntry = Optional[frozenset]  # frozenset of (id, value) pairs
ImageVector = Tuple[ImageEntry, ...]


class ResourceLimit(Exception):
    """A validator search space exceeded its configured bound."""


def val(vector: Vector) -> frozenset:
    """The set of non-BOT values in a vector."""
    return frozenset(v for v in vector if v is not BOT)


@dataclass(frozen=True)
class TaskSpec:
    """A task given by enumerable inputs and a delta membership predicate.

    `value_domain` enumerates the candidate per-process output values for a
    given input vector; the default (participating input values) is right
    for subset-of-inputs tasks and keeps validator searches desk-scale.
    """

    n: int
    inputs: Tuple[Vector, ...]
    delta: Callable[[Vector, Vector], bool]
    colorless: bool = False
    name: str = "task"
    value_domain: Callable[[Vector], Tuple[Any, ...]] | None = None

    def accepts(self, inp: Vector, out: Vector) -> bool:
        return self.delta(tuple(inp), tuple(out))

    def domain(self, inp: Vector) -> Tuple[Any, ...]:
        if self.value_domain is not None:
            return self.value_domain(inp)
        return tuple(sorted(val(inp), key=repr))

    def outputs_for(self, inp: Vector, limit: int = 200_000) -> Iterator[Vector]:
        """Enumerate accepted output vectors for `inp` (entries BOT or domain)."""
        choices = (BOT,) + self.domain(inp)
        total = len(choices) ** self.n
        if total > limit:
            raise ResourceLimit(
                f"{total} candidate outputs for n={self.n} exceeds limit {limit}"
            )
        for out in itertools.product(choices, repeat=self.n):
            if self.accepts(inp, out):
                yield out

    def check_total(self, limit: int = 200_000) -> None:
        """Verify every listed input has at least one accepted output."""
        for inp in self.inputs:
            if next(self.outputs_for(inp, limit), None) is None:
                raise ValueError(f"{self.name}: no output for input {inp}")


def _participation_vectors(n: int, values: Tuple[Any, ...]) -> Tuple[Vector, ...]:
    out = []
    for combo in itertools.product((BOT,) + values, repeat=n):
        if any(v is not BOT for v in combo):
            out.append(combo)
    return tuple(out)


def k_set_agreement(n: int, k: int, values: Tuple[Any, ...] | None = None) -> TaskSpec:
    """Outputs are participating inputs, at most k distinct; colorless."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if values is None:
        values = tuple(range(1, n + 1))

    def delta(inp: Vector, out: Vector) -> bool:
        allowed = val(inp)
        decided = [v for i, v in enumerate(out) if v is not BOT]
        if any(v not in allowed for v in decided):
            return False
        if any(out[i] is not BOT and inp[i] is BOT for i in range(len(inp))):
            return False
        return len(set(decided)) <= k

    return TaskSpec(
        n,
        _participation_vectors(n, values),
        delta,
        colorless=True,
        name=f"ksa:{k}",
    )


def consensus(n: int, values: Tuple[Any, ...] | None = None) -> TaskSpec:
    return k_set_agreement(n, 1, values)


# ---------------------------------------------------------------------------
# Image vectors and the companion-task validators
# ---------------------------------------------------------------------------


def image_of(base: Vector, witness_sets: Iterable[Optional[frozenset]]) -> ImageVector:
    """Build the image of `base` along per-index witness sets (None -> BOT entry)."""
    entries = []
    for z in witness_sets:
        if z is None:
            entries.append(None)
        else:
            entries.append(frozenset((j, base[j]) for j in z))
    return tuple(entries)


@dataclass(frozen=True)
class ImageTask:
    """The wait-free companion of `base` under `adv` (validator form)."""

    base: TaskSpec
    adv: Adversary

    @property
    def n(self) -> int:
        return self.base.n


@dataclass(frozen=True)
class Verdict:
    ok: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _valid(reason: str = "") -> Verdict:
    return Verdict(True, reason)


def _invalid(reason: str) -> Verdict:
    return Verdict(False, reason)


def validate_image_input(task: ImageTask, ivec: ImageVector, base_input: Vector) -> Verdict:
    """Check an input image vector against a known base input vector.

    Each non-BOT entry must equal the base inputs over its own id set, that
    id set must contain a live set, and with m distinct non-BOT entries the
    hitting-set size of the union of the id sets must be at least m.
    """
    witness_sets = []
    for i, entry in enumerate(ivec):
        if entry is None:
            continue
        ids = frozenset(j for j, _ in entry)
        if not task.adv.is_resilient(ids):
            return _invalid(f"entry {i}: id set covers no live set")
        expected = frozenset((j, base_input[j]) for j in ids)
        if entry != expected:
            return _invalid(f"entry {i}: values inconsistent with base input")
        witness_sets.append(ids)
    distinct = {entry for entry in ivec if entry is not None}
    m = len(distinct)
    if m == 0:
        return _valid("empty image")
    union = frozenset().union(*witness_sets)
    try:
        h = min_hitting_sets(task.adv, union).h
    except EmptyRestriction:
        return _invalid("union of id sets covers no live set")
    if h < m:
        return _invalid(f"hitting-set size {h} below distinct-entry count {m}")
    return _valid()


def _pinned(entries: Iterable[ImageEntry]) -> Optional[dict]:
    """Merge image entries into {id: value}; None on conflicting pins."""
    pins: dict = {}
    for entry in entries:
        if entry is None:
            continue
        for j, v in entry:
            if j in pins and pins[j] != v:
                return None
            pins[j] = v
    return pins


def validate_image_output(
    task: ImageTask,
    ivec: ImageVector,
    ovec: ImageVector,
    limit: int = 200_000,
) -> Verdict:
    """Check an output image vector against an already validated input image.

    Searches for a witnessing base pair: a base input consistent with the
    input image and an accepted output vector consistent with the output
    image, whose per-entry id sets each contain a live set.  A fully BOT
    output image is rejected: no live set obtained outputs.
    """
    if all(entry is None for entry in ovec):
        return _invalid("no outputs posted for any live set")
    for i, entry in enumerate(ovec):
        if entry is None:
            continue
        ids = frozenset(j for j, _ in entry)
        if not task.adv.is_resilient(ids):
            return _invalid(f"output entry {i}: id set covers no live set")
    in_pins = _pinned(ivec)
    if in_pins is None:
        return _invalid("input image entries disagree on a base input value")
    out_pins = _pinned(ovec)
    if out_pins is None:
        return _invalid("output image entries disagree on a base output value")

    candidates = [
        inp
        for inp in task.base.inputs
        if all(inp[j] == v for j, v in in_pins.items())
    ]
    if not candidates:
        return _invalid("no base input vector matches the input image")
    free = [j for j in range(task.n) if j not in out_pins]
    for inp in candidates:
        choices = (BOT,) + task.base.domain(inp)
        if len(choices) ** len(free) > limit:
            raise ResourceLimit(
                f"output witness search needs {len(choices) ** len(free)} candidates"
            )
        base_out = [BOT] * task.n
        for j, v in out_pins.items():
            base_out[j] = v
        for fill in itertools.product(choices, repeat=len(free)):
            for j, v in zip(free, fill):
                base_out[j] = v
            if task.base.accepts(inp, tuple(base_out)):
                return _valid()
    return _invalid("no accepted base pair witnesses the output image")


# ---------------------------------------------------------------------------
# Protocol programs over the base tasks
# ---------------------------------------------------------------------------


def hs_ksa_program(adv: Adversary, pid: int, value: Any, ns: str = "ksa"):
    """Hitting-set k-set agreement: members of the chosen minimum hitting
    set post their inputs; everyone returns the first posted value it
    witnesses from that set (ties broken by ascending id).  Decided values
    are also posted to the out row before returning.
    """
    hs = resolver_set_for(adv, adv.universe)
    n = adv.n

    def prog():
        if pid in hs:
            yield Write(cell(f"{ns}/post", pid), value, label="post")
        while True:
            seen = yield Snap(f"{ns}/post", n, label="collect")
            posted = [(i, seen[i]) for i in hs if seen[i] is not BOT]
            if posted:
                decided = posted[0][1]
                yield Write(cell(f"{ns}/out", pid), decided, label="decide")
                return decided

    return prog


def wait_min_program(n: int, t: int, pid: int, value: Any, ns: str = "wm"):
    """Post the input, wait for n-t posted values, return the minimum seen.

    The standard t-resilient (t+1)-set agreement; used as the simulated
    base algorithm in the transfer suites.
    """
    if not 0 <= t < n:
        raise ValueError(f"need 0 <= t < n, got t={t}, n={n}")

    def prog():
        yield Write(cell(f"{ns}/post", pid), value, label="post")
        while True:
            seen = yield Snap(f"{ns}/post", n, label="collect")
            present = [v for v in seen if v is not BOT]
            if len(present) >= n - t:
                decided = min(present)
                yield Write(cell(f"{ns}/out", pid), decided, label="decide")
                return decided

    return prog
