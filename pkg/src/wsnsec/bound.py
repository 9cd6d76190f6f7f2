"""Concrete (T, eps)-security bound for BBS-driven scheduling.

The factoring cost L(n) is evaluated in two ways:

* ``max_secure_time`` works in the log domain with ordinary floats and
  only exponentiates at the end (into an ``mpmath.mpf``, which does not
  overflow);
* ``max_secure_time_direct`` evaluates the closed form term by term at
  50 significant digits.

The typeset cost formula admits two parenthesizations of the first
factor of the exponent, both supported:

``GROUPED``: ``(n ln 2)^(1/3)``
``LITERAL``: ``n (ln 2)^(1/3)``

LITERAL is the default because it is the reading under which the
900-bit case (M=100, eps=0.2) is secure against 1e12 cycles.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum

import mpmath

GNFS_SCALE = 2.8e-3
GNFS_EXPONENT = 1.9229
DIRECT_DPS = 50


class Interpretation(str, Enum):
    GROUPED = "grouped"
    LITERAL = "literal"


DEFAULT_INTERPRETATION = Interpretation.LITERAL


@dataclass(frozen=True)
class SecurityQuery:
    n_bits: int
    m_len: int
    epsilon: float
    attacker_cycles: float

    def __post_init__(self):
        if self.n_bits < 2:
            raise ValueError("n_bits must be >= 2")
        if self.m_len < 1:
            raise ValueError("m_len must be >= 1")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.attacker_cycles < 0:
            raise ValueError("attacker_cycles must be >= 0")


@dataclass(frozen=True)
class BoundReport:
    n_bits: int
    m_len: int
    epsilon: float
    attacker_cycles: float
    interpretation: str
    gnfs_cost: mpmath.mpf
    t_max: mpmath.mpf
    verdict: str
    time_success_ratio: float
    ratio_threshold: float | None = None
    ratio_ok: bool | None = None

    def as_row(self) -> dict:
        row = asdict(self)
        row["gnfs_cost"] = mpmath.nstr(self.gnfs_cost, 17)
        row["t_max"] = mpmath.nstr(self.t_max, 17)
        return row


def _interp(interpretation) -> Interpretation:
    return Interpretation(interpretation)


def gnfs_log_cost(n_bits: float, interpretation=DEFAULT_INTERPRETATION) -> float:
    """Natural log of the factoring cost L(n), in plain floats."""
    if n_bits < 2:
        raise ValueError("n_bits must be >= 2")
    ln2 = math.log(2.0)
    if _interp(interpretation) is Interpretation.GROUPED:
        a = (n_bits * ln2) ** (1.0 / 3.0)
    else:
        a = n_bits * ln2 ** (1.0 / 3.0)
    b = math.log(n_bits * ln2) ** (2.0 / 3.0)
    return math.log(GNFS_SCALE) + GNFS_EXPONENT * a * b


def gnfs_cost(n_bits: float, interpretation=DEFAULT_INTERPRETATION) -> mpmath.mpf:
    """Clock cycles to factor an `n_bits`-bit integer (may exceed float range)."""
    return mpmath.exp(mpmath.mpf(gnfs_log_cost(n_bits, interpretation)))


def _subtrahend(n: float, m: float, eps: float) -> float:
    return 2.0**7 * n * eps**-2 * m**2 * math.log2(8.0 * n / eps * m)


def max_secure_time(n_bits, m_len, epsilon, interpretation=DEFAULT_INTERPRETATION) -> mpmath.mpf:
    """Largest attacker budget T for which no (T, eps)-distinguisher exists.

    Returned exactly as the bound is written, so it can be negative when
    the modulus is too small to give any margin.
    """
    n, m, eps = float(n_bits), float(m_len), float(epsilon)
    log_first = (
        gnfs_log_cost(n, interpretation)
        - math.log(6.0 * n * math.log2(n))
        + 2.0 * math.log(eps)
        - 2.0 * math.log(m)
    )
    with mpmath.workdps(30):
        return +(mpmath.exp(mpmath.mpf(log_first)) - mpmath.mpf(_subtrahend(n, m, eps)))


def max_secure_time_direct(n_bits, m_len, epsilon, interpretation=DEFAULT_INTERPRETATION) -> mpmath.mpf:
    """Same bound evaluated directly at 50 significant digits."""
    with mpmath.workdps(DIRECT_DPS):
        n, m = mpmath.mpf(n_bits), mpmath.mpf(m_len)
        eps = mpmath.mpf(repr(float(epsilon)))
        ln2 = mpmath.log(2)
        third = mpmath.mpf(1) / 3
        if _interp(interpretation) is Interpretation.GROUPED:
            a = (n * ln2) ** third
        else:
            a = n * ln2**third
        b = mpmath.log(n * ln2) ** (2 * third)
        cost = mpmath.mpf("2.8e-3") * mpmath.exp(mpmath.mpf("1.9229") * a * b)
        first = cost / (6 * n * mpmath.log(n, 2) * eps**-2 * m**2)
        second = 2**7 * n * eps**-2 * m**2 * mpmath.log(8 * n * m / eps, 2)
        return first - second


def is_secure_against(query: SecurityQuery, interpretation=DEFAULT_INTERPRETATION,
                      ratio_threshold: float | None = None) -> BoundReport:
    interp = _interp(interpretation)
    t_max = max_secure_time(query.n_bits, query.m_len, query.epsilon, interp)
    secure = t_max > 0 and query.attacker_cycles <= t_max
    ratio = query.attacker_cycles / query.epsilon
    return BoundReport(
        n_bits=query.n_bits,
        m_len=query.m_len,
        epsilon=query.epsilon,
        attacker_cycles=query.attacker_cycles,
        interpretation=interp.value,
        gnfs_cost=gnfs_cost(query.n_bits, interp),
        t_max=t_max,
        verdict="secure" if secure else "insecure",
        time_success_ratio=ratio,
        ratio_threshold=ratio_threshold,
        ratio_ok=None if ratio_threshold is None else ratio <= ratio_threshold,
    )


# 900-bit modulus, 100 output bits, eps = 0.2, attacker with 1e12 cycles:
# the published conclusion is that the attack cannot succeed.
CASE_STUDY = SecurityQuery(n_bits=900, m_len=100, epsilon=0.2, attacker_cycles=1e12)
CASE_STUDY_VERDICT = "secure"


def case_study() -> list[tuple[BoundReport, bool]]:
    """Evaluate the 900-bit case under both readings of the cost formula.

    Returns ``(report, reproduces_published_verdict)`` per interpretation.
    """
    out = []
    for interp in Interpretation:
        rep = is_secure_against(CASE_STUDY, interp)
        out.append((rep, rep.verdict == CASE_STUDY_VERDICT))
    return out
