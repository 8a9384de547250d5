"""Workbench for live-set fault adversaries: exact hitting sets, agreement
protocols, the doorway transform, and wait-free simulations, all on a
deterministic shared-memory simulator."""

__version__ = "0.1.0"

from .adversary import (
    Adversary,
    AdversaryError,
    EmptyRestriction,
    HittingSetResult,
    is_l_resilient,
    min_hitting_sets,
    resolver_set_for,
    t_resilient_adversary,
    wait_free_adversary,
)
from .shmem import (
    BOT,
    Execution,
    FairSchedule,
    Read,
    Snap,
    Write,
    Yield,
    explore,
    fair_schedule,
    run,
)

__all__ = [
    "Adversary",
    "AdversaryError",
    "BOT",
    "EmptyRestriction",
    "Execution",
    "FairSchedule",
    "HittingSetResult",
    "Read",
    "Snap",
    "Write",
    "Yield",
    "explore",
    "fair_schedule",
    "is_l_resilient",
    "min_hitting_sets",
    "resolver_set_for",
    "run",
    "t_resilient_adversary",
    "wait_free_adversary",
]
