"""Deterministic slotted simulator for a duty-cycled intrusion-detection WSN.

Time advances in fixed quanta. In each slot the scheduler decides which
live nodes are awake, point intrusions arrive as a Poisson process, an
intrusion is detected iff an awake live node lies within sensing range,
every witnessing node pays one radio report, and all live nodes drain
their per-slot cost. Energy is kept in integer micro-units so the
accounting is exact.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from scipy.stats import chi2 as chi2_dist

from . import bbs
from .distinguish import Lcg, LcgParams
from .sched import apply_orders, block_size, global_schedule, local_schedule
from .seeding import derive_bytes, derive_seed

MICRO = 1_000_000
TRACE_COLUMNS = ("time", "active_fraction", "alive_fraction", "energy_mean",
                 "energy_stddev", "detections_cum", "intrusions_cum")
SCHEDULERS = ("bbs", "lcg", "always-awake")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    # Energy figures are arbitrary units; only their ratios matter.
    area_width: float = 75.0
    area_height: float = 75.0
    node_count: int = 128
    initial_energy: float = 1000.0
    awake_cost: float = 1.0
    asleep_cost: float = 0.01
    radio_cost: float = 0.05
    sensing_radius: float = 10.0
    quantum: float = 1.0
    horizon: float = 3000.0
    sample_period: float = 10.0
    intrusion_rate: float = 0.05
    scheduler: str = "bbs"
    schedule_mode: str = "local"
    orders_per_slot: int = 16
    bbs_modulus_bits: int = 256
    lcg_multiplier: int = LcgParams.multiplier
    lcg_increment: int = LcgParams.increment
    lcg_modulus: int = LcgParams.modulus
    lcg_shift: int = LcgParams.shift
    master_seed: int = 0

    def __post_init__(self):
        for name in ("area_width", "area_height", "node_count", "initial_energy", "awake_cost",
                     "asleep_cost", "sensing_radius", "quantum", "horizon", "sample_period",
                     "orders_per_slot", "bbs_modulus_bits", "lcg_modulus"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("radio_cost", "intrusion_rate", "master_seed", "lcg_shift"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if not self.asleep_cost < self.awake_cost:
            raise ConfigError("asleep_cost must be below awake_cost")
        if self.scheduler not in SCHEDULERS:
            raise ConfigError(f"scheduler must be one of {SCHEDULERS}")
        if self.schedule_mode not in ("local", "global"):
            raise ConfigError("schedule_mode must be local or global")
        for name in ("sample_period", "horizon"):
            ratio = getattr(self, name) / self.quantum
            if abs(ratio - round(ratio)) > 1e-9:
                raise ConfigError(f"{name} must be a multiple of quantum")

    @property
    def num_slots(self) -> int:
        return round(self.horizon / self.quantum)

    @property
    def slots_per_sample(self) -> int:
        return round(self.sample_period / self.quantum)

    @property
    def lcg_params(self) -> LcgParams:
        return LcgParams(self.lcg_multiplier, self.lcg_increment, self.lcg_modulus, self.lcg_shift)

    def units(self, value: float) -> int:
        return round(value * MICRO)


def dump_config(config: SimConfig) -> str:
    return "".join(f"{f.name} = {getattr(config, f.name)}\n" for f in fields(config))


def parse_config(text: str, base: SimConfig = SimConfig()) -> SimConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment. Unset keys keep defaults."""
    types = {f.name: type(getattr(base, f.name)) for f in fields(base)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key not in types:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = types[key](value) if types[key] is not int else int(float(value))
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from exc
    return replace(base, **values)


def load_config(path: str | Path) -> SimConfig:
    return parse_config(Path(path).read_text())


@dataclass
class NodeState:
    id: int
    position: tuple[float, float]
    energy: int
    awake: bool
    alive: bool


# --------------------------------------------------------------- schedules

def _bbs_streams(config: SimConfig, count: int, length: int, label: str) -> list[list[int]]:
    params = bbs.generate_params(config.bbs_modulus_bits,
                                 derive_bytes(config.master_seed, "sim-bbs-modulus", config.bbs_modulus_bits))
    out = []
    for i in range(count):
        s = bbs.derive_seed_value(params, derive_bytes(config.master_seed, label, i))
        out.append(bbs.generate(bbs.seed_state(params, s), length))
    return out


def _lcg_streams(config: SimConfig, count: int, length: int, label: str) -> list[np.ndarray]:
    return [Lcg(derive_seed(config.master_seed, label, i), config.lcg_params).bits(length) for i in range(count)]


def build_schedule(config: SimConfig) -> np.ndarray:
    """Scheduled awake matrix of shape (num_slots, node_count), ignoring deaths."""
    n, slots = config.node_count, config.num_slots
    if config.scheduler == "always-awake":
        return np.ones((slots, n), dtype=bool)
    streams = _bbs_streams if config.scheduler == "bbs" else _lcg_streams
    if config.schedule_mode == "local":
        plans = [local_schedule(bits, config.quantum, i)
                 for i, bits in enumerate(streams(config, n, slots, "sim-local-node"))]
        return np.stack([p.slots for p in plans], axis=1).astype(bool)
    length = slots * config.orders_per_slot * block_size(n)
    (bits,) = streams(config, 1, length, "sim-global")
    return apply_orders(global_schedule(bits, n, config.orders_per_slot), n, slots)


# ------------------------------------------------------------------- world

@dataclass
class World:
    config: SimConfig
    positions: np.ndarray
    energy: np.ndarray
    alive: np.ndarray
    awake: np.ndarray
    schedule: np.ndarray

    def nodes(self) -> list[NodeState]:
        return [NodeState(i, (float(x), float(y)), int(e), bool(w), bool(a))
                for i, ((x, y), e, w, a) in enumerate(zip(self.positions, self.energy, self.awake, self.alive))]


def init_field(config: SimConfig, schedule: np.ndarray | None = None) -> World:
    rng = np.random.default_rng(derive_seed(config.master_seed, "deploy"))
    positions = rng.uniform(size=(config.node_count, 2)) * [config.area_width, config.area_height]
    if schedule is None:
        schedule = build_schedule(config)
    n = config.node_count
    return World(
        config=config,
        positions=positions,
        energy=np.full(n, config.units(config.initial_energy), dtype=np.int64),
        alive=np.ones(n, dtype=bool),
        awake=schedule[0].copy(),
        schedule=schedule,
    )


@dataclass(frozen=True)
class Intrusion:
    slot: int
    x: float
    y: float
    detected: bool
    witness: int  # nearest witnessing node, -1 if undetected


@dataclass
class SimTrace:
    config: SimConfig
    rows: list[tuple]
    positions: np.ndarray
    schedule: np.ndarray
    awake_log: np.ndarray
    alive_log: np.ndarray
    drain_log: np.ndarray
    reports_log: np.ndarray
    final_energy: np.ndarray
    intrusions: list[Intrusion] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[TRACE_COLUMNS.index(name)] for r in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _sample_row(t: float, world: World, detections: int, intrusions: int) -> tuple:
    n = world.config.node_count
    e = world.energy / MICRO
    return (float(t), float(np.count_nonzero(world.awake & world.alive)) / n,
            float(np.count_nonzero(world.alive)) / n, float(e.mean()), float(e.std()),
            detections, intrusions)


def run(config: SimConfig, schedule: np.ndarray | None = None) -> SimTrace:
    world = init_field(config, schedule)
    n, slots = config.node_count, config.num_slots
    awake_units = config.units(config.awake_cost * config.quantum)
    asleep_units = config.units(config.asleep_cost * config.quantum)
    radio_units = config.units(config.radio_cost)
    r2 = config.sensing_radius**2
    intr_rng = np.random.default_rng(derive_seed(config.master_seed, "intrusions"))

    awake_log = np.zeros((slots, n), dtype=bool)
    alive_log = np.zeros((slots, n), dtype=bool)
    drain_log = np.zeros((slots, n), dtype=np.int64)
    reports_log = np.zeros((slots, n), dtype=np.int64)
    events = []
    rows = [_sample_row(0.0, world, 0, 0)]
    detections = 0

    for k in range(slots):
        world.awake = world.schedule[k] & world.alive
        awake_log[k] = world.awake
        alive_log[k] = world.alive

        count = intr_rng.poisson(config.intrusion_rate * config.quantum)
        points = intr_rng.uniform(size=(count, 2)) * [config.area_width, config.area_height]
        for x, y in points:
            d2 = ((world.positions - (x, y)) ** 2).sum(axis=1)
            witnesses = world.awake & (d2 <= r2)
            if witnesses.any():
                detections += 1
                reports_log[k] += witnesses
                nearest = int(np.flatnonzero(witnesses)[np.argmin(d2[witnesses])])
                events.append(Intrusion(k, float(x), float(y), True, nearest))
            else:
                events.append(Intrusion(k, float(x), float(y), False, -1))

        cost = np.where(world.awake, awake_units, asleep_units) + radio_units * reports_log[k]
        drain = np.minimum(np.where(world.alive, cost, 0), world.energy)
        world.energy -= drain
        drain_log[k] = drain
        world.alive &= world.energy > 0
        world.awake &= world.alive

        if (k + 1) % config.slots_per_sample == 0:
            rows.append(_sample_row((k + 1) * config.quantum, world, detections, len(events)))

    return SimTrace(config, rows, world.positions, world.schedule, awake_log, alive_log,
                    drain_log, reports_log, world.energy.copy(), events)


def verify_trace(trace: SimTrace) -> list[str]:
    """Re-check every trace invariant from the logs; returns violation messages."""
    cfg = trace.config
    problems = []
    alive = trace.column("alive_fraction")
    active = trace.column("active_fraction")
    det = trace.column("detections_cum")
    intr = trace.column("intrusions_cum")
    if np.any(np.diff(alive) > 0):
        problems.append("alive_fraction increases")
    if np.any(active > alive):
        problems.append("active_fraction exceeds alive_fraction")
    if np.any(det > intr):
        problems.append("more detections than intrusions")
    expected_times = np.arange(len(trace.rows)) * cfg.sample_period
    if not np.allclose(trace.column("time"), expected_times):
        problems.append("rows not at every sample_period tick")

    if np.any(trace.alive_log[1:] & ~trace.alive_log[:-1]):
        problems.append("a dead node came back")
    if np.any(trace.awake_log & ~trace.alive_log):
        problems.append("a dead node was awake")

    initial = cfg.units(cfg.initial_energy)
    if not np.array_equal(initial - trace.final_energy, trace.drain_log.sum(axis=0)):
        problems.append("energy not conserved")
    if np.any(trace.final_energy < 0):
        problems.append("negative energy")
    nominal = (np.where(trace.awake_log, cfg.units(cfg.awake_cost * cfg.quantum),
                        cfg.units(cfg.asleep_cost * cfg.quantum))
               + cfg.units(cfg.radio_cost) * trace.reports_log) * trace.alive_log
    before = initial - np.cumsum(trace.drain_log, axis=0) + trace.drain_log
    if not np.array_equal(trace.drain_log, np.minimum(nominal, before)):
        problems.append("per-slot drain differs from the cost model")

    r2 = cfg.sensing_radius**2
    for ev in trace.intrusions:
        d2 = ((trace.positions - (ev.x, ev.y)) ** 2).sum(axis=1)
        covered = trace.awake_log[ev.slot] & trace.alive_log[ev.slot] & (d2 <= r2)
        if ev.detected != bool(covered.any()):
            problems.append(f"detection mismatch at slot {ev.slot}")
        elif ev.detected and not covered[ev.witness]:
            problems.append(f"unwitnessed detection at slot {ev.slot}")
    return problems


# -------------------------------------------------------------- comparison

def wake_uniformity(schedule: np.ndarray) -> tuple[float, int, float]:
    """Chi-square homogeneity of scheduled wake counts across nodes.

    Each node's count over H slots is compared with H * p_hat, p_hat the
    pooled awake rate, scaled by the binomial variance. Returns
    ``(statistic, dof, p_value)``.
    """
    slots, n = schedule.shape
    counts = schedule.sum(axis=0).astype(float)
    p = counts.sum() / (slots * n)
    dof = n - 1
    if p in (0.0, 1.0):
        return 0.0, dof, 1.0
    stat = float(((counts - slots * p) ** 2).sum() / (slots * p * (1 - p)))
    return stat, dof, float(chi2_dist.sf(stat, dof))


@dataclass
class Comparison:
    traces: dict[str, SimTrace]
    summary: dict[str, float]

    def to_csv(self) -> str:
        names = list(self.traces)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time"] + [f"{name}_{c}" for name in names for c in TRACE_COLUMNS[1:]])
        for rows in zip(*(self.traces[name].rows for name in names)):
            w.writerow([_fmt(rows[0][0])] + [_fmt(v) for r in rows for v in r[1:]])
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "value"])
        for key, value in self.summary.items():
            w.writerow([key, _fmt(value)])
        return buf.getvalue()


def compare_schedulers(config: SimConfig, left: str = "bbs", right: str = "lcg") -> Comparison:
    """Run two schedulers on the same deployment and intrusion stream.

    ``stddev_diff`` is ``mean_stddev(left) - mean_stddev(right)``; negative
    means the left scheduler spread energy use more evenly.
    """
    traces, summary = {}, {}
    labels = [left, right] if left != right else [f"{left}_a", f"{left}_b"]
    for label, sched in zip(labels, (left, right)):
        trace = run(replace(config, scheduler=sched))
        traces[label] = trace
        stat, dof, p = wake_uniformity(trace.schedule)
        summary[f"{label}_mean_energy_stddev"] = float(trace.column("energy_stddev").mean())
        summary[f"{label}_wake_chi2"] = stat
        summary[f"{label}_wake_chi2_dof"] = dof
        summary[f"{label}_wake_chi2_pvalue"] = p
    summary["stddev_diff"] = (summary[f"{labels[0]}_mean_energy_stddev"]
                              - summary[f"{labels[1]}_mean_energy_stddev"])
    return Comparison(traces, summary)
