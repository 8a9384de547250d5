"""Superset-closed fault adversaries and exact minimum hitting sets.

An adversary over processes ``0..n-1`` is a collection of *live sets*:
progress is required exactly in executions where every member of at least
one live set is correct.  Because the model is closed under supersets of
correct sets, only inclusion-minimal live sets carry information, and
construction normalises down to those.

Hitting sets (minimum-cardinality sets of processes meeting every live set)
are computed exactly by enumerating candidate subsets in increasing
cardinality.  Candidates are drawn from the union of the live sets under
consideration, which prunes elements that cannot cover anything; a minimum
witness never contains such an element.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Iterator


class AdversaryError(ValueError):
    """Malformed adversary description or query parameters."""


class EmptyRestriction(Exception):
    """No live set is contained in the queried universe.

    Callers decide what this means: the doorway treats it as "the
    participant set does not yet contain a live set" and keeps waiting.
    """


def _canonical(sets: Iterable[frozenset]) -> tuple[frozenset, ...]:
    """Drop supersets of other sets and order by (size, members)."""
    uniq = set(sets)
    minimal = [s for s in uniq if not any(t < s for t in uniq)]
    return tuple(sorted(minimal, key=lambda s: (len(s), sorted(s))))


@dataclass(frozen=True)
class Adversary:
    """A live-set collection over ``n`` processes, stored inclusion-minimal."""

    n: int
    live_sets: tuple[frozenset, ...]

    @classmethod
    def of(cls, n: int, live_sets: Iterable[Iterable[int]]) -> "Adversary":
        sets = [frozenset(s) for s in live_sets]
        if not isinstance(n, int) or n < 1:
            raise AdversaryError(f"process count must be a positive int, got {n!r}")
        if not sets:
            raise AdversaryError("adversary needs at least one live set")
        for s in sets:
            if not s:
                raise AdversaryError("live sets must be nonempty")
            for p in s:
                if not isinstance(p, int) or isinstance(p, bool) or not 0 <= p < n:
                    raise AdversaryError(
                        f"live set {sorted(s)} has id {p!r} out of range for n={n}"
                    )
        return cls(n, _canonical(sets))

    @property
    def universe(self) -> frozenset:
        return frozenset(range(self.n))

    def is_resilient(self, correct: Iterable[int]) -> bool:
        """True iff some live set is entirely contained in `correct`."""
        correct = frozenset(correct)
        return any(s <= correct for s in self.live_sets)

    def restriction(self, universe: Iterable[int]) -> tuple[frozenset, ...]:
        """The live sets contained in `universe` (may be empty)."""
        universe = frozenset(universe)
        return tuple(s for s in self.live_sets if s <= universe)

    def to_json(self) -> str:
        return json.dumps(
            {"n": self.n, "live_sets": [sorted(s) for s in self.live_sets]}
        )

    @classmethod
    def from_json(cls, text: str) -> "Adversary":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise AdversaryError(f"invalid JSON: {exc}") from exc
        if not isinstance(data, dict) or "n" not in data or "live_sets" not in data:
            raise AdversaryError('adversary spec needs keys "n" and "live_sets"')
        if not isinstance(data["live_sets"], list) or not all(
            isinstance(s, list) for s in data["live_sets"]
        ):
            raise AdversaryError('"live_sets" must be a list of id lists')
        return cls.of(data["n"], data["live_sets"])

    @classmethod
    def load(cls, path) -> "Adversary":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())


@dataclass(frozen=True)
class HittingSetResult:
    """Exact answer for one restricted system.

    `h` is the minimum hitting-set size and `witnesses` lists every
    hitting set of that size, each as a sorted tuple, lexicographically
    ordered.
    """

    h: int
    witnesses: tuple[tuple[int, ...], ...]


def _validated_universe(adv: Adversary, universe: Iterable[int] | None) -> frozenset:
    if universe is None:
        return adv.universe
    universe = frozenset(universe)
    if not universe <= adv.universe:
        raise AdversaryError(
            f"universe {sorted(universe)} not within 0..{adv.n - 1}"
        )
    return universe


def min_hitting_sets(
    adv: Adversary, universe: Iterable[int] | None = None
) -> HittingSetResult:
    """All minimum hitting sets of the live sets contained in `universe`.

    Raises EmptyRestriction when no live set fits inside `universe`.
    """
    universe = _validated_universe(adv, universe)
    targets = adv.restriction(universe)
    if not targets:
        raise EmptyRestriction(f"no live set within {sorted(universe)}")
    candidates = sorted(frozenset().union(*targets))
    for size in range(1, len(candidates) + 1):
        found = [
            combo
            for combo in itertools.combinations(candidates, size)
            if all(not s.isdisjoint(combo) for s in targets)
        ]
        if found:
            return HittingSetResult(size, tuple(found))
    raise AssertionError("unreachable: candidate union always hits every set")


def resolver_set_for(
    adv: Adversary, participants: Iterable[int]
) -> tuple[int, ...]:
    """The lexicographically smallest minimum hitting set of the restriction.

    Pure function of its inputs, so every process that evaluates it for the
    same participant set picks the same resolver set.
    """
    return min_hitting_sets(adv, participants).witnesses[0]


def is_l_resilient(adv: Adversary, correct: Iterable[int]) -> bool:
    """Module-level spelling of Adversary.is_resilient."""
    return adv.is_resilient(correct)


def t_resilient_adversary(n: int, t: int) -> Adversary:
    """The adversary whose minimal live sets are all (n-t)-subsets."""
    if not 0 <= t < n:
        raise AdversaryError(f"need 0 <= t < n, got t={t}, n={n}")
    return Adversary.of(n, itertools.combinations(range(n), n - t))


def wait_free_adversary(n: int) -> Adversary:
    """All singletons: progress owed to every correct process."""
    return t_resilient_adversary(n, n - 1)


def subsets_of_size_at_least(universe: frozenset, k: int) -> Iterator[frozenset]:
    members = sorted(universe)
    for size in range(max(k, 0), len(members) + 1):
        for combo in itertools.combinations(members, size):
            yield frozenset(combo)
