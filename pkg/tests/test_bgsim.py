import random

import pytest

from hitset.adversary import (
    Adversary,
    subsets_of_size_at_least,
    t_resilient_adversary,
    wait_free_adversary,
    min_hitting_sets,
)
from hitset.bgsim import (
    bg_simulate,
    blocked_codes,
    classify,
    sa_gate,
    sa_propose,
)
from hitset.harness import (
    find_unsafe_window_crash,
    random_adversary,
    random_crash_schedule,
    wait_min_family,
)
from hitset.shmem import BOT, FairSchedule, run


def sa_proposer(ns, pid, n, value):
    def prog():
        yield from sa_propose(ns, pid, n, value)
        return None

    return prog


def test_safe_agreement_solo_decides_own():
    execution = run({0: sa_proposer("sa0", 0, 2, "mine")}, [0] * 4)
    row = tuple(execution.memory.get(f"sa0/sa[{i}]", BOT) for i in range(2))
    assert sa_gate(row) == ("decided", "mine")


def test_safe_agreement_single_decision_every_run():
    rng = random.Random(21)
    for seed in range(60):
        programs = {
            pid: sa_proposer("sa", pid, 3, f"v{pid}") for pid in range(3)
        }
        schedule = random_crash_schedule(
            seed, range(3), wait_free_adversary(3), l_resilient=True
        )
        execution = run(programs, schedule, budget=200)
        row = tuple(execution.memory.get(f"sa/sa[{i}]", BOT) for i in range(3))
        status, value = sa_gate(row)
        if status == "decided":
            # Every later gate read must agree: levels are settled, so the
            # decision is a pure function of the row.
            assert sa_gate(row) == (status, value)
            assert value in {"v0", "v1", "v2"}


def test_safe_agreement_window_blocks():
    # The proposer stops right after its level-1 write: permanently open.
    programs = {0: sa_proposer("sa", 0, 2, "x"), 1: sa_proposer("sa", 1, 2, "y")}
    schedule = FairSchedule({1}, {0, 1}, {0: 1})
    execution = run(programs, schedule, budget=100)
    row = tuple(execution.memory.get(f"sa/sa[{i}]", BOT) for i in range(2))
    assert sa_gate(row)[0] == "blocked"


ADV = Adversary.of(4, [{0, 1}, {2, 3}])
FAMILY = wait_min_family(4, 1)
INPUTS = {0: 10, 2: 12}


def test_bg_fair_run_outputs_min():
    result = bg_simulate(ADV, FAMILY, INPUTS)
    assert result.sim_ids == (0, 2)
    assert result.outputs == {0: 10, 2: 10}
    assert not result.blocked


def test_bg_solo_simulator_class_one():
    adv = Adversary.of(3, [{0, 1, 2}])
    family = wait_min_family(3, 0)
    result = bg_simulate(adv, family, {0: 5})
    assert result.outputs == {0: 5}
    assert not result.blocked


def test_bg_missing_inputs_rejected():
    with pytest.raises(ValueError):
        bg_simulate(ADV, FAMILY, {0: 1})


def test_bg_random_resilient_schedules():
    for seed in range(40):
        schedule = random_crash_schedule(seed, range(4), ADV, l_resilient=True)
        result = bg_simulate(ADV, FAMILY, INPUTS, schedule)
        assert len(result.blocked) <= 1
        assert set(result.outputs.values()) <= set(INPUTS.values())
        assert len(set(result.outputs.values())) <= 2
        assert not result.execution.incomplete
        for pid in result.sim_ids:
            if pid in schedule.correct:
                assert pid in result.outputs


def test_bg_unsafe_window_crash_blocks_one_code():
    schedule = find_unsafe_window_crash(ADV, FAMILY, INPUTS, victim=0)
    assert schedule is not None
    result = bg_simulate(ADV, FAMILY, INPUTS, schedule)
    assert len(result.blocked) == 1
    assert 2 in result.outputs
    assert result.outputs[2] in INPUTS.values()


def test_blocked_codes_empty_memory():
    assert blocked_codes({}, 4, 4) == frozenset()


def test_classify_examples():
    assert classify(wait_free_adversary(4)) == 4
    assert classify(t_resilient_adversary(5, 2)) == 3
    assert classify(Adversary.of(3, [{0, 1, 2}])) == 1
    assert classify(ADV) == 2


def test_low_resilience_schedules_cover_live_sets():
    # Any correct set of size >= n-(h-1) contains a live set.
    rng = random.Random(61)
    for _ in range(20):
        n = rng.randint(2, 8)
        adv, _ = random_adversary(rng, n)
        h = min_hitting_sets(adv).h
        for correct in subsets_of_size_at_least(adv.universe, n - (h - 1)):
            assert adv.is_resilient(correct), (adv, sorted(correct), h)
