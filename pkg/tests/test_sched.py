import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import chisquare

from wsnsec import sched


def test_local_schedule_examples():
    plan = sched.local_schedule([0, 0, 1, 1, 0], quantum=1.0)
    assert plan.awake_slots() == [2, 3]
    assert sched.duty_cycle(plan) == pytest.approx(0.4)
    assert plan.horizon == 5.0
    assert sched.duty_cycle(sched.local_schedule([1] * 8, 0.5)) == 1
    assert sched.duty_cycle(sched.local_schedule([0] * 8, 0.5)) == 0


def test_empty_plan_is_flagged():
    plan = sched.local_schedule([], 1.0)
    assert sched.duty_cycle(plan) == 0.0
    assert sched.is_degenerate(plan)


def test_local_schedule_rejects_bad_input():
    with pytest.raises(ValueError):
        sched.local_schedule([0, 1], 0)
    with pytest.raises(ValueError):
        sched.local_schedule([0, 2], 1)


@given(st.lists(st.integers(0, 1), max_size=200))
def test_local_schedule_round_trip(bits):
    assert sched.local_schedule(bits, 1.0).bits() == bits


def test_global_schedule_examples():
    orders = sched.global_schedule([0, 0, 0, 1, 1, 1], 4)
    assert [o.node_id for o in orders] == [0, 1, 3]
    assert [o.time_slot for o in orders] == [0, 1, 2]
    assert sched.global_schedule([1, 1], 3) == []
    assert sched.block_size(1) == 1
    assert [o.node_id for o in sched.global_schedule([0, 0, 1], 1)] == [0, 0]  # 1 is rejected
    # trailing partial block dropped
    assert len(sched.global_schedule([0, 1, 1], 4)) == 1


@given(st.lists(st.integers(0, 1), max_size=300), st.integers(1, 300))
def test_global_ids_in_range(bits, n):
    orders = sched.global_schedule(bits, n)
    assert all(0 <= o.node_id < n for o in orders)
    if n >= 2 and n & (n - 1) == 0:
        assert len(orders) == len(bits) // sched.block_size(n)


@pytest.mark.parametrize("n", [4, 7, 128])
def test_global_ids_uniform(n):
    rng = np.random.default_rng(n)
    width = sched.block_size(n)
    ids = []
    while len(ids) < 100_000:
        bits = rng.integers(0, 2, size=width * 50_000)
        ids += [o.node_id for o in sched.global_schedule(bits, n)]
    counts = np.bincount(ids[:100_000], minlength=n)
    assert chisquare(counts).pvalue > 0.01


def test_apply_orders_toggles_from_awake():
    orders = [sched.ToggleOrder(1, 0), sched.ToggleOrder(3, 0), sched.ToggleOrder(2, 1), sched.ToggleOrder(2, 1)]
    awake = sched.apply_orders(orders, num_nodes=2, num_slots=5)
    assert awake[:, 0].tolist() == [True, False, False, True, True]
    assert awake[:, 1].all()  # two toggles in one slot cancel


def test_orders_per_slot_stamps_slots():
    orders = sched.global_schedule([0, 1] * 6, 4, orders_per_slot=3)
    assert [o.time_slot for o in orders] == [0, 0, 0, 1, 1, 1]
