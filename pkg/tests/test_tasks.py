import itertools
import random

import pytest

from hitset.adversary import Adversary, t_resilient_adversary
from hitset.shmem import BOT, FairSchedule, run
from hitset.tasks import (
    ImageTask,
    ResourceLimit,
    consensus,
    hs_ksa_program,
    image_of,
    k_set_agreement,
    validate_image_input,
    validate_image_output,
    val,
    wait_min_program,
)
from hitset.harness import random_crash_schedule
from helpers import naive_image_input_valid, naive_image_output_valid


def test_ksa_accepts_and_rejects():
    task = k_set_agreement(3, 2)
    assert task.accepts((1, 2, 3), (1, 1, 2))
    assert not task.accepts((1, 2, 3), (1, 2, 3))
    assert not task.accepts((1, 2, BOT), (1, 2, 2))  # non-participant output
    assert not task.accepts((1, 2, 3), (4, 1, 1))  # output not an input
    assert task.accepts((1, 2, 3), (BOT, BOT, 2))  # partial outputs fine


def test_consensus_is_ksa_one():
    task = consensus(3)
    assert task.accepts((1, 2, 3), (2, 2, 2))
    assert not task.accepts((1, 2, 3), (1, 2, 2))


def test_ksa_parameter_validation():
    with pytest.raises(ValueError):
        k_set_agreement(3, 0)
    with pytest.raises(ValueError):
        k_set_agreement(3, 4)


def test_delta_total_small():
    k_set_agreement(2, 1).check_total()
    k_set_agreement(3, 2).check_total()


def test_colorless_closure_under_subsampling():
    # Processes may adopt each other's inputs and outputs: accepted pairs
    # stay accepted when entries are resampled from the same value sets.
    task = k_set_agreement(3, 2)
    rng = random.Random(5)
    pairs = []
    for inp in rng.sample(task.inputs, 30):
        pairs.extend((inp, out) for out in itertools.islice(task.outputs_for(inp), 3))
    for inp, out in rng.sample(pairs, 40):
        out_values = sorted(val(out), key=repr)
        if out_values:
            sub_out = tuple(
                rng.choice(out_values)
                if inp[i] is not BOT and rng.random() < 0.8
                else BOT
                for i in range(task.n)
            )
            assert task.accepts(inp, sub_out)
        in_values = sorted(val(inp), key=repr)
        sub_in = tuple(rng.choice(in_values) for _ in range(task.n))
        if val(out) <= val(sub_in):
            assert task.accepts(sub_in, out)


def test_image_of_helper():
    base = (10, 20, 30)
    image = image_of(base, [frozenset({0, 1}), None, frozenset({2})])
    assert image == (frozenset({(0, 10), (1, 20)}), None, frozenset({(2, 30)}))


ADV = Adversary.of(4, [{0, 1}, {2, 3}])
TASK = ImageTask(k_set_agreement(4, 2), ADV)
BASE = (1, 2, 3, 4)
E01 = frozenset({(0, 1), (1, 2)})
E23 = frozenset({(2, 3), (3, 4)})
FULL = frozenset({(0, 1), (1, 2), (2, 3), (3, 4)})


def test_input_image_single_entry_valid():
    assert validate_image_input(TASK, (E01, E01, E01, E01), BASE)


def test_input_image_two_entries_valid():
    # m=2 distinct entries; union {0,1,2,3} has hitting number 2.
    assert validate_image_input(TASK, (E01, E01, E23, E23), BASE)


def test_input_image_hitting_bound_violated():
    # Two distinct entries whose id sets only cover one live set.
    narrow = Adversary.of(4, [{0, 1}])
    task = ImageTask(k_set_agreement(4, 2), narrow)
    e012 = frozenset({(0, 1), (1, 2), (2, 3)})
    verdict = validate_image_input(task, (E01, e012, None, None), BASE)
    assert not verdict
    assert "hitting-set" in verdict.reason


def test_input_image_same_ids_different_values_rejected():
    mangled = frozenset({(0, 1), (1, 99)})
    assert not validate_image_input(TASK, (E01, mangled, None, None), BASE)


def test_input_image_entry_without_live_set_rejected():
    lone = frozenset({(0, 1)})
    verdict = validate_image_input(TASK, (lone, None, None, None), BASE)
    assert not verdict
    assert "live set" in verdict.reason


def test_input_image_all_bot_accepted():
    assert validate_image_input(TASK, (None, None, None, None), BASE)


def test_output_image_consensus_valid():
    # All outputs carry one participating value for one live set.
    out_entry = frozenset({(0, 1), (1, 1)})
    ivec = (E01, E01, E23, E23)
    assert validate_image_output(TASK, ivec, (out_entry, out_entry, None, None))


def test_output_image_rejects_unrelated_values():
    bad = frozenset({(0, 9), (1, 9)})
    ivec = (E01, E01, E23, E23)
    assert not validate_image_output(TASK, ivec, (bad, None, None, None))


def test_output_image_all_bot_rejected():
    verdict = validate_image_output(TASK, (E01, E01, None, None), (None,) * 4)
    assert not verdict
    assert "no outputs" in verdict.reason


def test_output_image_too_many_distinct_rejected():
    cons = ImageTask(consensus(4), ADV)
    first = frozenset({(0, 1), (1, 1)})
    second = frozenset({(2, 3), (3, 3)})
    ivec = (E01, E01, E23, E23)
    assert not validate_image_output(cons, ivec, (first, first, second, second))
    two = ImageTask(k_set_agreement(4, 2), ADV)
    assert validate_image_output(two, ivec, (first, first, second, second))


def test_validators_match_naive_oracle():
    rng = random.Random(71)
    adv = Adversary.of(3, [{0}, {1, 2}])
    base_task = k_set_agreement(3, 2, values=(1, 2))
    task = ImageTask(base_task, adv)
    base_input = (1, 2, 1)
    pool_sets = [frozenset({0}), frozenset({1, 2}), frozenset({0, 1, 2}), frozenset({1})]
    pool_values = [1, 2, 9]

    def random_entry():
        if rng.random() < 0.25:
            return None
        ids = rng.choice(pool_sets)
        if rng.random() < 0.8:
            return frozenset((j, base_input[j]) for j in ids)
        return frozenset((j, rng.choice(pool_values)) for j in ids)

    agree_in = agree_out = 0
    for _ in range(150):
        ivec = tuple(random_entry() for _ in range(3))
        mine = bool(validate_image_input(task, ivec, base_input))
        naive = naive_image_input_valid(adv, ivec, base_input)
        assert mine == naive, (ivec, mine, naive)
        agree_in += 1
    for _ in range(60):
        ivec = tuple(random_entry() for _ in range(3))
        if not validate_image_input(task, ivec, base_input):
            continue
        ovec = tuple(
            (
                None
                if rng.random() < 0.4
                else frozenset(
                    (j, rng.choice(pool_values)) for j in rng.choice(pool_sets)
                )
            )
            for _ in range(3)
        )
        mine = bool(validate_image_output(task, ivec, ovec))
        naive = naive_image_output_valid(task, ivec, ovec, (1, 2))
        assert mine == naive, (ivec, ovec, mine, naive)
        agree_out += 1
    assert agree_in == 150 and agree_out > 10


def test_output_search_resource_limit():
    big = ImageTask(k_set_agreement(4, 2), ADV)
    out_entry = frozenset({(0, 1), (1, 1)})
    with pytest.raises(ResourceLimit):
        validate_image_output(big, (E01,) * 4, (out_entry, None, None, None), limit=1)


def test_hs_ksa_outputs_bounded():
    rng = random.Random(9)
    inputs = {pid: 10 + pid for pid in range(4)}
    for seed in range(30):
        programs = {
            pid: hs_ksa_program(ADV, pid, inputs[pid]) for pid in range(4)
        }
        schedule = random_crash_schedule(seed, range(4), ADV, l_resilient=True)
        execution = run(programs, schedule, budget=20_000)
        decided = set(execution.returns.values())
        assert decided <= {inputs[0], inputs[2]}  # hitting set {0, 2}
        assert len(decided) <= 2
        assert schedule.correct <= set(execution.returns)


def test_hs_ksa_consensus_when_h_is_one():
    adv = Adversary.of(3, [{0, 1, 2}])
    programs = {pid: hs_ksa_program(adv, pid, 40 + pid) for pid in range(3)}
    execution = run(programs, FairSchedule(range(3), range(3)), budget=5_000)
    assert set(execution.returns.values()) == {40}


def test_hs_ksa_safety_without_resilience():
    # Both hitting-set members crash before writing: nobody outputs, and the
    # run simply exhausts its budget.
    programs = {pid: hs_ksa_program(ADV, pid, pid) for pid in range(4)}
    schedule = FairSchedule({1, 3}, {0, 1, 2, 3}, {0: 0, 2: 0})
    execution = run(programs, schedule, budget=500)
    assert execution.incomplete
    assert not execution.returns
    assert not any(reg.startswith("ksa/out") for reg in execution.memory)


def test_wait_min_all_correct():
    programs = {pid: wait_min_program(3, 0, pid, [3, 1, 2][pid]) for pid in range(3)}
    execution = run(programs, FairSchedule(range(3), range(3)), budget=2_000)
    assert set(execution.returns.values()) == {1}


def test_wait_min_crash_before_write():
    # pid 1 (value 2) never writes: survivors see {1, 3} and both return 1.
    programs = {pid: wait_min_program(3, 1, pid, [1, 2, 3][pid]) for pid in range(3)}
    schedule = FairSchedule({0, 2}, {0, 1, 2}, {1: 0})
    execution = run(programs, schedule, budget=2_000)
    assert execution.returns == {0: 1, 2: 1}


def test_wait_min_solo():
    programs = {0: wait_min_program(3, 2, 0, 7)}
    execution = run(programs, FairSchedule({0}, {0}), budget=500)
    assert execution.returns == {0: 7}


def test_wait_min_distinct_bound():
    rng = random.Random(13)
    adv = t_resilient_adversary(4, 1)
    for seed in range(25):
        inputs = [rng.randint(1, 9) for _ in range(4)]
        programs = {
            pid: wait_min_program(4, 1, pid, inputs[pid]) for pid in range(4)
        }
        schedule = random_crash_schedule(seed, range(4), adv, l_resilient=True)
        execution = run(programs, schedule, budget=20_000)
        assert len(set(execution.returns.values())) <= 2
        assert set(execution.returns.values()) <= set(inputs)


def test_wait_min_validation():
    with pytest.raises(ValueError):
        wait_min_program(3, 3, 0, 1)
