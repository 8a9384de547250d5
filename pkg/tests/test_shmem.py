import json

import pytest

from hitset.shmem import (
    BOT,
    FairSchedule,
    Read,
    Snap,
    Write,
    Yield,
    cell,
    dump_trace,
    explore,
    fair_schedule,
    run,
)
from helpers import snapshot_consistent


def writer(pid, reg, value):
    def prog():
        yield Write(reg, value)
        return value

    return prog


def snapper(array, size):
    def prog():
        seen = yield Snap(array, size)
        return seen

    return prog


def test_write_then_return_trace():
    execution = run({0: writer(0, "R0", "a")}, [0, 0])
    assert [(e.op, e.reg) for e in execution.trace] == [("write", "R0"), ("return", "")]
    assert execution.memory == {"R0": "a"}
    assert execution.returns == {0: "a"}


def test_snapshot_atomicity_by_order():
    programs = {0: writer(0, "R[0]", "a"), 1: snapper("R", 2)}
    first = run(programs, [0, 1, 1])
    assert first.returns[1] == ("a", BOT)
    second = run({0: writer(0, "R[0]", "a"), 1: snapper("R", 2)}, [1, 0, 1])
    assert second.returns[1] == (BOT, BOT)


def test_read_sees_last_write():
    def p0():
        yield Write("R", 1)
        yield Write("R", 2)
        return None

    def p1():
        value = yield Read("R")
        return value

    execution = run({0: p0, 1: p1}, [0, 0, 1, 1])
    assert execution.returns[1] == 2


def test_unwritten_register_reads_bot():
    def p0():
        value = yield Read("nowhere")
        return value

    assert run({0: p0}, [0, 0]).returns[0] is BOT


def test_determinism_bitwise():
    def make(pid):
        def prog():
            yield Write(cell("A", pid), pid)
            seen = yield Snap("A", 3)
            yield Yield()
            return seen

        return prog

    programs = {pid: make(pid) for pid in range(3)}
    schedule = [0, 1, 2, 2, 1, 0, 0, 1, 2, 0, 1, 2]
    one = run({pid: make(pid) for pid in range(3)}, list(schedule))
    two = run({pid: make(pid) for pid in range(3)}, list(schedule))
    assert [e.to_json() for e in one.trace] == [e.to_json() for e in two.trace]
    assert one.returns == two.returns


def test_skip_recorded_for_terminated():
    def slow():
        yield Yield()
        yield Yield()
        return None

    execution = run({0: writer(0, "R", 1), 1: slow}, [0, 0, 0, 0, 1, 1, 1])
    assert [e.op for e in execution.trace] == [
        "write",
        "return",
        "skip",
        "skip",
        "yield",
        "yield",
        "return",
    ]


def test_budget_marks_incomplete():
    def spin():
        while True:
            yield Yield()

    execution = run({0: spin}, FairSchedule({0}, {0}), budget=25)
    assert execution.incomplete
    assert execution.slots == 25


def test_correct_done_stop():
    programs = {0: writer(0, "R", 1), 1: writer(1, "S", 2)}
    schedule = FairSchedule({0}, {0, 1}, {1: 4})
    execution = run(programs, schedule, budget=1000)
    assert execution.stop_reason in ("correct-done", "all-done")
    assert 0 in execution.returns


def test_fair_schedule_round_robin():
    slots = []
    for pid in fair_schedule({0, 1}):
        slots.append(pid)
        if len(slots) == 6:
            break
    assert slots == [0, 1, 0, 1, 0, 1]


def test_fair_schedule_crash_prefix():
    schedule = fair_schedule({0, 1}, {0, 1, 2}, {2: 5})
    slots = []
    for pid in schedule:
        slots.append(pid)
        if len(slots) == 12:
            break
    assert 2 not in slots[5:]
    assert slots[:5].count(2) > 0


def test_all_crashed_schedule_is_finite():
    schedule = fair_schedule(set(), {0}, {0: 3})
    assert list(schedule) == [0, 0, 0]


def test_fair_schedule_validation():
    with pytest.raises(ValueError):
        FairSchedule({0, 1}, {0})
    with pytest.raises(ValueError):
        FairSchedule({0}, {0, 1}, {0: 3})


def test_fair_schedule_spec_round_trip():
    schedule = FairSchedule({0, 1}, {0, 1, 2}, {2: 4}, shuffle_seed=9)
    again = FairSchedule.from_spec(schedule.spec())
    first = [pid for pid, _ in zip(again, range(20))]
    second = [pid for pid, _ in zip(FairSchedule.from_spec(schedule.spec()), range(20))]
    assert first == second


def test_explore_counts_interleavings():
    def tiny(pid):
        def prog():
            yield Write(cell("x", pid), pid)
            return pid

        return prog

    report = explore({0: tiny(0), 1: tiny(1)})
    assert report.interleavings == 6
    assert report.ok


def test_explore_checker_true_by_default():
    def tiny(pid):
        def prog():
            yield Yield()
            return pid

        return prog

    report = explore({0: tiny(0), 1: tiny(1)}, checker=lambda view: None)
    assert report.violation is None


def test_explore_counterexample_replays():
    def racy(pid):
        def prog():
            yield Write("R", pid)
            return pid

        return prog

    def checker(view):
        if view.complete and view.memory.get("R") == 1:
            return "register ends at 1"
        return None

    report = explore({0: racy(0), 1: racy(1)}, checker=checker)
    assert report.violation is not None
    replayed = run({0: racy(0), 1: racy(1)}, report.violation.schedule)
    assert replayed.memory.get("R") == 1


def test_explore_resource_limit():
    def chatty(pid):
        def prog():
            for i in range(6):
                yield Write(cell("A", pid * 10 + i), i)
            return pid

        return prog

    report = explore({0: chatty(0), 1: chatty(1), 2: chatty(2)}, max_states=50)
    assert report.resource_limited


def test_explore_depth_cutoff():
    def spin():
        while True:
            yield Yield()

    report = explore({0: spin}, depth=7)
    assert report.interleavings == 0
    assert report.truncated == 1


def test_snapshot_trace_invariant():
    def make(pid):
        def prog():
            yield Write(cell("A", pid), pid * 11)
            first = yield Snap("A", 3)
            yield Write(cell("A", pid), pid * 13)
            second = yield Snap("A", 3)
            return (first, second)

        return prog

    programs = {pid: make(pid) for pid in range(3)}
    schedule = [2, 0, 1, 1, 0, 2, 0, 1, 2, 2, 1, 0, 0, 1, 2]
    execution = run(programs, schedule)
    assert snapshot_consistent(execution.trace)


def test_dump_trace_round_trip(tmp_path):
    execution = run({0: writer(0, "R", 5)}, [0, 0])
    path = tmp_path / "trace.jsonl"
    dump_trace(path, execution, {"purpose": "test"})
    lines = path.read_text().splitlines()
    assert json.loads(lines[0])["config"]["purpose"] == "test"
    assert json.loads(lines[1])["op"] == "write"


def test_schedule_unknown_pid_rejected():
    with pytest.raises(ValueError):
        run({0: writer(0, "R", 1)}, [0, 7])
