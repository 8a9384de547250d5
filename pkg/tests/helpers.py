"""Independent test-side oracles.

Everything here recomputes answers by direct enumeration of the defining
quantifiers, sharing no code with the implementations under test.
"""

from __future__ import annotations

import itertools
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from hitset.shmem import BOT


def brute_hitting(
    universe: Iterable[int], sets: Iterable[frozenset]
) -> Optional[Tuple[int, Tuple[Tuple[int, ...], ...]]]:
    """Enumerate every subset of the universe by increasing size."""
    universe = sorted(set(universe))
    targets = [s for s in sets if s <= set(universe)]
    if not targets:
        return None
    for size in range(0, len(universe) + 1):
        found = [
            combo
            for combo in itertools.combinations(universe, size)
            if all(any(member in combo for member in s) for s in targets)
        ]
        if found:
            return size, tuple(found)
    return None


def all_subsets(universe: Sequence[int]):
    for size in range(len(universe) + 1):
        yield from map(frozenset, itertools.combinations(universe, size))


def naive_image_input_valid(adv, ivec, base_input) -> bool:
    """Quantifier-faithful check of the input-image conditions.

    Searches all witness sets per non-BOT entry instead of deriving them
    from the entry, and recomputes the hitting-set bound by brute force.
    """
    n = adv.n
    witness_choices: List[List[frozenset]] = []
    for entry in ivec:
        if entry is None:
            continue
        matches = []
        for candidate in all_subsets(range(n)):
            if not any(live <= candidate for live in adv.live_sets):
                continue
            image = frozenset((j, base_input[j]) for j in candidate)
            if image == entry:
                matches.append(candidate)
        if not matches:
            return False
        witness_choices.append(matches)
    entries = {e for e in ivec if e is not None}
    m = len(entries)
    if m == 0:
        return True
    for combo in itertools.product(*witness_choices):
        union = frozenset().union(*combo)
        answer = brute_hitting(union, adv.live_sets)
        if answer is not None and answer[0] >= m:
            return True
    return False


def naive_image_output_valid(task, ivec, ovec, value_domain) -> bool:
    """Quantifier-faithful check of the output-image condition.

    Enumerates base inputs, full candidate output vectors over the given
    value domain, and all witness sets per entry.  Mirrors the validator's
    contract of rejecting an all-BOT output image.
    """
    adv = task.adv
    base = task.base
    n = base.n
    if all(entry is None for entry in ovec):
        return False

    def witnesses_exist(vector, image_vec) -> bool:
        for entry in image_vec:
            if entry is None:
                continue
            found = False
            for candidate in all_subsets(range(n)):
                if not any(live <= candidate for live in adv.live_sets):
                    continue
                if frozenset((j, vector[j]) for j in candidate) == entry:
                    found = True
                    break
            if not found:
                return False
        return True

    for inp in base.inputs:
        if not witnesses_exist(inp, ivec):
            continue
        for out in itertools.product((BOT,) + tuple(value_domain), repeat=n):
            if not base.accepts(inp, out):
                continue
            if witnesses_exist(out, ovec):
                return True
    return False


def snapshot_consistent(trace) -> bool:
    """Replay writes along a trace and check every snapshot against the
    register contents at its own step."""
    memory: Dict[str, Any] = {}
    for event in trace:
        if event.op == "write":
            memory[event.reg] = event.val
        elif event.op == "snapshot":
            size = len(event.val)
            expectation = tuple(
                memory.get(f"{event.reg}[{i}]", BOT) for i in range(size)
            )
            got = tuple(
                tuple(v) if isinstance(v, list) else v for v in event.val
            )
            if got != expectation:
                return False
        elif event.op == "read":
            if memory.get(event.reg, BOT) != event.val:
                return False
    return True
