"""Turn a generator bitstream into node wake/sleep schedules.

Local mode: each node reads its own stream; slot k is awake iff bit k is 1.
Global mode: a central stream is cut into fixed-width blocks, each block
naming the node that receives a state-change (toggle) order.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, log2
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class WakePlan:
    node_id: int
    slots: np.ndarray
    quantum: float

    @property
    def horizon(self) -> float:
        return len(self.slots) * self.quantum

    def awake_slots(self) -> list[int]:
        return np.flatnonzero(self.slots).tolist()

    def bits(self) -> list[int]:
        return self.slots.astype(int).tolist()


@dataclass(frozen=True)
class ToggleOrder:
    time_slot: int
    node_id: int


def local_schedule(bits: Sequence[int], quantum: float, node_id: int = 0) -> WakePlan:
    if quantum <= 0:
        raise ValueError("quantum must be positive")
    slots = np.asarray(bits, dtype=np.uint8).reshape(-1)
    if slots.size and slots.max() > 1:
        raise ValueError("bits must be 0 or 1")
    return WakePlan(node_id, slots, float(quantum))


def duty_cycle(plan: WakePlan) -> float:
    """Fraction of awake slots; an empty plan reports 0 (see `is_degenerate`)."""
    if plan.slots.size == 0:
        return 0.0
    return float(plan.slots.sum()) / plan.slots.size


def is_degenerate(plan: WakePlan) -> bool:
    return plan.slots.size == 0


def block_size(num_nodes: int) -> int:
    if num_nodes < 1:
        raise ValueError("num_nodes must be >= 1")
    return max(1, ceil(log2(num_nodes)))


def global_schedule(bits: Sequence[int], num_nodes: int, orders_per_slot: int | None = None) -> list[ToggleOrder]:
    """Decode big-endian blocks into toggle orders, rejecting ids >= num_nodes.

    Orders are stamped with ``time_slot = block_index // orders_per_slot``
    (every block its own slot when `orders_per_slot` is None). Rejected
    blocks still occupy their position, so the timing of accepted orders
    does not depend on what was rejected.
    """
    width = block_size(num_nodes)
    arr = np.asarray(bits, dtype=np.int64).reshape(-1)
    nblocks = arr.size // width
    if nblocks == 0:
        return []
    weights = 1 << np.arange(width - 1, -1, -1, dtype=np.int64)
    ids = arr[: nblocks * width].reshape(nblocks, width) @ weights
    per = orders_per_slot or 1
    return [ToggleOrder(int(i // per), int(v)) for i, v in enumerate(ids) if v < num_nodes]


def apply_orders(orders: Iterable[ToggleOrder], num_nodes: int, num_slots: int) -> np.ndarray:
    """Expand toggle orders into an awake matrix of shape (num_slots, num_nodes).

    Every node starts awake. Orders stamped with slot k take effect from
    slot k on; several orders for the same node in one slot compose as
    successive toggles.
    """
    flips = np.zeros((num_slots, num_nodes), dtype=np.int64)
    for o in orders:
        if o.time_slot < num_slots:
            flips[o.time_slot, o.node_id] += 1
    parity = np.cumsum(flips, axis=0) % 2
    return parity == 0
