"""Empirical distinguishers for scheduling bitstreams.

A decision procedure maps an M-bit sample to 0/1. Its advantage against a
source is |P[D(source)=1] - P[D(uniform)=1]|, estimated by Monte Carlo with
per-trial seeds derived from a master seed. The maximum over any finite
suite of procedures is only a lower bound on the true insecurity.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import erfc, gammaincc

from . import bbs
from .seeding import derive_bytes, derive_seed

Z95 = 1.959963984540054
MIN_BATTERY_LENGTH = 100


class SequenceTooShort(ValueError):
    pass


# ---------------------------------------------------------------- sources

@dataclass(frozen=True)
class LcgParams:
    """Power-of-two modulus LCG in the style of the C library ``rand()``.

    Defaults are the multiplier/increment of the ANSI C sample ``rand()``
    with modulus 2**31. Each step emits ``(state >> shift) % 2**low_bits``;
    with ``shift=0`` the lowest bit simply alternates.
    """

    multiplier: int = 1103515245
    increment: int = 12345
    modulus: int = 2**31
    shift: int = 0
    low_bits: int = 1


class Lcg:
    def __init__(self, seed: int, params: LcgParams = LcgParams()):
        self.params = params
        self.state = seed % params.modulus

    def next_output(self) -> int:
        p = self.params
        self.state = (p.multiplier * self.state + p.increment) % p.modulus
        return (self.state >> p.shift) & ((1 << p.low_bits) - 1)

    def bits(self, n: int) -> np.ndarray:
        k = self.params.low_bits
        out = np.empty(((n + k - 1) // k) * k, dtype=np.uint8)
        for i in range(0, out.size, k):
            v = self.next_output()
            for j in range(k):
                out[i + j] = (v >> (k - 1 - j)) & 1
        return out[:n]


def read_bit_file(path: str | Path) -> np.ndarray:
    """Load bits from a text file of 0/1 characters, or raw bytes for ``.bin``."""
    path = Path(path)
    if path.suffix == ".bin":
        return np.unpackbits(np.frombuffer(path.read_bytes(), dtype=np.uint8))
    text = "".join(path.read_text().split())
    if set(text) - {"0", "1"}:
        raise ValueError(f"{path}: expected only 0/1 characters")
    return np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0")


@dataclass
class BitSource:
    """Deterministic bit source; ``sample(m, i)`` is the i-th independent draw.

    kinds: ``bbs``, ``lcg``, ``constant``, ``uniform``, ``file``.
    """

    kind: str
    seed: int = 0
    modulus_bits: int = 512
    lcg: LcgParams = field(default_factory=LcgParams)
    constant: int = 0
    path: str | None = None

    def __post_init__(self):
        if self.kind not in ("bbs", "lcg", "constant", "uniform", "file"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.kind == "file" and not self.path:
            raise ValueError("file source needs a path")

    @cached_property
    def bbs_params(self) -> bbs.BbsParams:
        return bbs.generate_params(self.modulus_bits, derive_bytes(self.seed, "bbs-modulus", self.modulus_bits))

    @cached_property
    def _file_bits(self) -> np.ndarray:
        return read_bit_file(self.path)

    def sample(self, m_len: int, index: int = 0) -> np.ndarray:
        if self.kind == "bbs":
            params = self.bbs_params
            s = bbs.derive_seed_value(params, derive_bytes(self.seed, "bbs-trial", index))
            return np.array(bbs.generate(bbs.seed_state(params, s), m_len), dtype=np.uint8)
        if self.kind == "lcg":
            return Lcg(derive_seed(self.seed, "lcg-trial", index), self.lcg).bits(m_len)
        if self.kind == "constant":
            return np.full(m_len, self.constant, dtype=np.uint8)
        if self.kind == "uniform":
            rng = np.random.default_rng(derive_seed(self.seed, "uniform-trial", index))
            return rng.integers(0, 2, size=m_len, dtype=np.uint8)
        bits = self._file_bits
        lo = index * m_len
        if lo + m_len > bits.size:
            raise ValueError(f"bit file {self.path} exhausted at sample {index}")
        return bits[lo:lo + m_len]


# ------------------------------------------------------- statistical tests
#
# Every test accepts a 1-D bit array (returns a float p-value) or a 2-D
# array with one sequence per row (returns an array of p-values).

def _as_rows(bits) -> tuple[np.ndarray, bool]:
    b = np.asarray(bits, dtype=np.int64)
    return np.atleast_2d(b), b.ndim == 1


def _out(p: np.ndarray, single: bool):
    return float(p[0]) if single else p


def monobit(bits):
    b, single = _as_rows(bits)
    s = 2 * b.sum(axis=1) - b.shape[1]
    return _out(erfc(np.abs(s) / math.sqrt(2 * b.shape[1])), single)


def runs(bits):
    """Runs test; p is 0.0 when the frequency prerequisite already fails."""
    b, single = _as_rows(bits)
    n = b.shape[1]
    pi = b.mean(axis=1)
    v = 1 + np.count_nonzero(np.diff(b, axis=1), axis=1)
    spread = pi * (1 - pi)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = erfc(np.abs(v - 2 * n * spread) / (2 * math.sqrt(2 * n) * spread))
    p = np.where(np.abs(pi - 0.5) >= 2 / math.sqrt(n), 0.0, p)
    return _out(p, single)


def _psi_sq(b: np.ndarray, m: int) -> np.ndarray:
    if m == 0:
        return np.zeros(b.shape[0])
    n = b.shape[1]
    ext = np.concatenate([b, b[:, : m - 1]], axis=1)
    codes = np.zeros_like(b)
    for j in range(m):
        codes = (codes << 1) | ext[:, j:j + n]
    counts = np.stack([(codes == c).sum(axis=1) for c in range(1 << m)], axis=1)
    return (1 << m) / n * (counts**2).sum(axis=1) - n


def serial(bits, m: int = 2):
    """Serial test on overlapping m-bit patterns (first p-value, from the
    first difference of the psi-squared statistics)."""
    b, single = _as_rows(bits)
    delta = _psi_sq(b, m) - _psi_sq(b, m - 1)
    return _out(gammaincc(2 ** (m - 2), delta / 2), single)


# (size limit, block length, class upper bounds, class probabilities)
_LONGEST_RUN_TABLES = [
    (6272, 8, (1, 2, 3, 4), (0.2148, 0.3672, 0.2305, 0.1875)),
    (750000, 128, (4, 5, 6, 7, 8, 9), (0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124)),
    (None, 10000, (10, 11, 12, 13, 14, 15, 16), (0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727)),
]


def _longest_one_runs(blocks: np.ndarray) -> np.ndarray:
    """Longest run of ones along the last axis."""
    cur = np.zeros(blocks.shape[:-1], dtype=np.int64)
    best = np.zeros_like(cur)
    for j in range(blocks.shape[-1]):
        cur = (cur + 1) * blocks[..., j]
        np.maximum(best, cur, out=best)
    return best


def longest_run(bits):
    """Longest run of ones in a block.

    Block length 8 below 6272 bits (also used for 100-127 bits, where
    the chi-square approximation rests on fewer blocks).
    """
    b, single = _as_rows(bits)
    n = b.shape[1]
    for limit, m, bounds, probs in _LONGEST_RUN_TABLES:
        if limit is None or n < limit:
            break
    nblocks = n // m
    blocks = b[:, : nblocks * m].reshape(b.shape[0], nblocks, m)
    classes = np.clip(np.searchsorted(bounds, _longest_one_runs(blocks)), 0, len(bounds) - 1)
    v = np.stack([(classes == k).sum(axis=1) for k in range(len(bounds))], axis=1)
    expected = nblocks * np.asarray(probs)
    chi2 = ((v - expected) ** 2 / expected).sum(axis=1)
    return _out(gammaincc((len(bounds) - 1) / 2, chi2 / 2), single)


BATTERY: dict[str, Callable] = {
    "monobit": monobit,
    "runs": runs,
    "serial": serial,
    "longest_run": longest_run,
}


def test_battery(sequence, tests: Mapping[str, Callable] = BATTERY) -> dict:
    """p-value of every test; 2-D input gives one array of p-values per test."""
    bits = np.asarray(sequence, dtype=np.uint8)
    if bits.shape[-1] < MIN_BATTERY_LENGTH:
        raise SequenceTooShort(f"battery needs at least {MIN_BATTERY_LENGTH} bits, got {bits.shape[-1]}")
    return {name: fn(bits) for name, fn in tests.items()}


test_battery.__test__ = False  # not a pytest test


def batched(fn: Callable) -> Callable:
    """Mark a decision procedure as accepting a 2-D block of samples."""
    fn.batched = True
    return fn


class _LastBattery:
    # run_distinguishers hands the same block to every decision in turn
    def __init__(self):
        self.bits = None
        self.pvalues = None

    def __call__(self, bits) -> dict:
        if bits is not self.bits:
            self.pvalues = test_battery(bits)
            self.bits = bits
        return self.pvalues


def battery_decisions(alpha: float = 0.01) -> dict[str, Callable]:
    """One decision procedure per test (reject at `alpha`) plus ``battery``,
    which outputs 1 if any test rejects."""
    pv = _LastBattery()
    out = {}
    for name in BATTERY:
        out[name] = batched(lambda bits, name=name: (np.asarray(pv(bits)[name]) < alpha).astype(int))
    out["battery"] = batched(
        lambda bits: (np.min(np.stack([np.asarray(v) for v in pv(bits).values()]), axis=0) < alpha).astype(int)
    )
    return out


def first_bit_is_one(bits) -> int:
    return int(bits[0] == 1)


# ----------------------------------------------------------- estimation

@dataclass(frozen=True)
class AdvantageEstimate:
    raw_advantage: float
    p1_hat: float
    p2_hat: float
    trials: int
    ci_halfwidth: float
    elapsed: float
    budget_exhausted: int = 0


def two_sample_ci(p1: float, n1: int, p2: float, n2: int) -> float:
    if n1 == 0 or n2 == 0:
        return float("nan")
    return Z95 * math.sqrt(p1 * (1 - p1) / n1 + p2 * (1 - p2) / n2)


def run_distinguishers(decisions: Mapping[str, Callable], source: BitSource, m_len: int, trials: int,
                       reference: BitSource | None = None, time_budget: float | None = None,
                       chunk: int = 2048) -> dict[str, AdvantageEstimate]:
    """Run several decision procedures on one shared set of samples.

    Each procedure sees `trials` draws from `source` and `trials` from the
    uniform reference. For per-sample procedures, a call exceeding
    `time_budget` seconds counts as budget-exhausted and is left out of
    that procedure's estimate. Procedures marked with :func:`batched` get
    whole blocks of samples and are not individually timed.
    """
    if m_len < 1:
        raise ValueError("m_len must be >= 1")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if reference is None:
        reference = BitSource("uniform", seed=source.seed)
    names = list(decisions)
    ones = {k: [0, 0] for k in names}
    valid = {k: [0, 0] for k in names}
    spent = dict.fromkeys(names, 0.0)
    exhausted = dict.fromkeys(names, 0)
    for lo in range(0, trials, chunk):
        idx = range(lo, min(trials, lo + chunk))
        blocks = (np.stack([source.sample(m_len, i) for i in idx]),
                  np.stack([reference.sample(m_len, i) for i in idx]))
        for name in names:
            fn = decisions[name]
            for side, block in enumerate(blocks):
                if getattr(fn, "batched", False):
                    t0 = time.perf_counter()
                    out = np.asarray(fn(block))
                    spent[name] += time.perf_counter() - t0
                    valid[name][side] += len(block)
                    ones[name][side] += int(out.sum())
                    continue
                for x in block:
                    t0 = time.perf_counter()
                    out = fn(x)
                    dt = time.perf_counter() - t0
                    spent[name] += dt
                    if time_budget is not None and dt > time_budget:
                        exhausted[name] += 1
                        continue
                    valid[name][side] += 1
                    ones[name][side] += int(out)
    result = {}
    for name in names:
        n1, n2 = valid[name]
        p1 = ones[name][0] / n1 if n1 else float("nan")
        p2 = ones[name][1] / n2 if n2 else float("nan")
        result[name] = AdvantageEstimate(
            raw_advantage=abs(p1 - p2),
            p1_hat=p1,
            p2_hat=p2,
            trials=trials,
            ci_halfwidth=two_sample_ci(p1, n1, p2, n2),
            elapsed=spent[name],
            budget_exhausted=exhausted[name],
        )
    return result


def run_distinguisher(decide: Callable, source: BitSource, m_len: int, trials: int,
                      reference: BitSource | None = None, time_budget: float | None = None) -> AdvantageEstimate:
    return run_distinguishers({"d": decide}, source, m_len, trials, reference, time_budget)["d"]


# ----------------------------------------------------- next-bit prediction

@dataclass(frozen=True)
class NextBitEstimate:
    accuracy: float
    trials: int
    ci_halfwidth: float


def majority_vote(prefix: Sequence[int]) -> int:
    prefix = np.asarray(prefix)
    return int(2 * prefix.sum() >= prefix.size)


def lsb_parity(prefix: Sequence[int]) -> int:
    """Predict that the bit flips, as the low bit of a power-of-two LCG does."""
    return 1 - int(prefix[-1]) if len(prefix) else 0


def repeat_last(prefix: Sequence[int]) -> int:
    return int(prefix[-1]) if len(prefix) else 0


PREDICTORS = {"majority": majority_vote, "lsb_parity": lsb_parity, "repeat_last": repeat_last}


def next_bit_accuracy(predictor: Callable, source: BitSource, prefix_len: int, trials: int) -> NextBitEstimate:
    if prefix_len < 0:
        raise ValueError("prefix_len must be >= 0")
    hits = 0
    for i in range(trials):
        x = source.sample(prefix_len + 1, i)
        hits += int(predictor(x[:prefix_len]) == x[prefix_len])
    acc = hits / trials
    return NextBitEstimate(acc, trials, Z95 * math.sqrt(acc * (1 - acc) / trials))
