"""Game-based security evaluation for WSN communication systems.

A communication system embeds a message into a transmission support under
a key (``insert``) and recovers it (``extract``). The IND, NM and DR games
are run by Monte Carlo against a registered adversary suite. The maximum
advantage over that suite is a *lower bound* on the system's insecurity,
never the true supremum.

Oracle models follow the attack names: NA ~ CIA (no extraction oracle),
AD1 ~ CDA1 (oracle for the first stage only), AD2 ~ CDA2 (oracle for both
stages, except on the challenge datum itself).
"""

from __future__ import annotations

import hashlib
import math
import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Container, Sequence

from .seeding import derive_seed

Z95 = 1.959963984540054


class ExtractError(ValueError):
    pass


class OracleViolation(RuntimeError):
    """An adversary queried the extraction oracle where its model forbids it."""


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


# ---------------------------------------------------------------- systems

class CommSystem:
    """Base communication system over fixed-length byte strings.

    Subclasses implement ``insert`` and ``extract``; ``inv`` defaults to
    the identity, which makes the system symmetric.
    """

    name = "abstract"
    symmetric = True
    payload_offset = 0

    def __init__(self, support_len: int = 32, message_len: int = 8, key_len: int = 16, randomness_len: int = 8):
        self.support_len = support_len
        self.message_len = message_len
        self.key_len = key_len
        self.randomness_len = randomness_len

    def insert(self, s: bytes, m: bytes, k: bytes, r: bytes) -> bytes:
        raise NotImplementedError

    def extract(self, s: bytes, k: bytes) -> bytes:
        raise NotImplementedError

    def inv(self, k: bytes) -> bytes:
        return k

    def sample_support(self, rng: random.Random) -> bytes:
        return rng.randbytes(self.support_len)

    def sample_message(self, rng: random.Random) -> bytes:
        return rng.randbytes(self.message_len)

    def sample_key(self, rng: random.Random) -> bytes:
        return rng.randbytes(self.key_len)

    def sample_randomness(self, rng: random.Random) -> bytes:
        return rng.randbytes(self.randomness_len)

    def _check(self, s: bytes, m: bytes | None = None):
        if len(s) != self.support_len:
            raise ExtractError(f"support must be {self.support_len} bytes, got {len(s)}")
        if m is not None and len(m) != self.message_len:
            raise ValueError(f"message must be {self.message_len} bytes, got {len(m)}")


class XorSystem(CommSystem):
    """Fresh-nonce XOR embedder.

    Layout of the transmitted datum: ``nonce | m XOR keystream | rest of s``.
    The keystream is SHAKE-256 over ``label | key | nonce``.
    """

    name = "xor"

    def __init__(self, support_len=32, message_len=8, key_len=16, randomness_len=8):
        super().__init__(support_len, message_len, key_len, randomness_len)
        if randomness_len + message_len > support_len:
            raise ValueError("support too short for nonce and payload")
        self.payload_offset = randomness_len

    def keystream(self, k: bytes, nonce: bytes) -> bytes:
        return hashlib.shake_256(b"wsnsec-xor|" + k + nonce).digest(self.message_len)

    def _nonce(self, r: bytes) -> bytes:
        return r

    def insert(self, s, m, k, r):
        self._check(s, m)
        nonce = self._nonce(r)
        end = self.payload_offset + self.message_len
        return nonce + _xor(m, self.keystream(k, nonce)) + s[end:]

    def extract(self, s, k):
        self._check(s)
        nonce = s[: self.payload_offset]
        payload = s[self.payload_offset: self.payload_offset + self.message_len]
        return _xor(payload, self.keystream(k, nonce))


class BrokenXorSystem(XorSystem):
    """XOR embedder with a fixed all-zero nonce: insertion is deterministic."""

    name = "broken"

    def _nonce(self, r):
        return bytes(self.randomness_len)


class ClearAppendSystem(CommSystem):
    """Writes the message in clear over the tail of the support; ignores the key."""

    name = "clear"

    def __init__(self, support_len=32, message_len=8, key_len=16, randomness_len=8):
        super().__init__(support_len, message_len, key_len, randomness_len)
        self.payload_offset = support_len - message_len

    def insert(self, s, m, k, r):
        self._check(s, m)
        return s[: self.payload_offset] + m

    def extract(self, s, k):
        self._check(s)
        return s[self.payload_offset:]


SYSTEMS: dict[str, Callable[[], CommSystem]] = {
    "xor": XorSystem,
    "broken": BrokenXorSystem,
    "clear": ClearAppendSystem,
}


def correctness_failures(system: CommSystem, trials: int, seed: int = 0) -> int:
    """Count triples (s, m, k) where extract(insert(s, m, k, r), inv(k)) != m."""
    rng = random.Random(derive_seed(seed, "correctness", system.name))
    bad = 0
    for _ in range(trials):
        s, m, k = system.sample_support(rng), system.sample_message(rng), system.sample_key(rng)
        if system.extract(system.insert(s, m, k, system.sample_randomness(rng)), system.inv(k)) != m:
            bad += 1
    return bad


def repeat_collision_rate(system: CommSystem, trials: int, seed: int = 0) -> float:
    """Fraction of trials where two insertions of identical inputs coincide."""
    rng = random.Random(derive_seed(seed, "collisions", system.name))
    same = 0
    for _ in range(trials):
        s, m, k = system.sample_support(rng), system.sample_message(rng), system.sample_key(rng)
        a = system.insert(s, m, k, system.sample_randomness(rng))
        b = system.insert(s, m, k, system.sample_randomness(rng))
        same += a == b
    return same / trials


# ----------------------------------------------------------------- oracles

class OracleModel(str, Enum):
    NA = "na"
    AD1 = "ad1"
    AD2 = "ad2"

    @property
    def attack(self) -> str:
        return {"na": "CIA", "ad1": "CDA1", "ad2": "CDA2"}[self.value]


class ExtractionOracle:
    """Extraction oracle bound to one game key.

    `stage` is ``"first"`` (A1) or ``"second"`` (A2); `forbidden` holds the
    challenge data that AD2 refuses to answer on.
    """

    def __init__(self, system: CommSystem, key: bytes, model: OracleModel, stage: str,
                 forbidden: Sequence[bytes] = ()):
        self._system = system
        self._key = system.inv(key)
        self.model = model
        self.stage = stage
        self._forbidden = set(forbidden)
        self.queries = 0

    @property
    def available(self) -> bool:
        if self.model is OracleModel.NA:
            return False
        return self.model is OracleModel.AD2 or self.stage == "first"

    def allows(self, data: bytes) -> bool:
        return self.available and data not in self._forbidden

    def __call__(self, data: bytes) -> bytes | None:
        if not self.available:
            raise OracleViolation(f"{self.model.name} gives no oracle in the {self.stage} stage")
        if data in self._forbidden:
            raise OracleViolation("query on the challenge datum")
        self.queries += 1
        try:
            return self._system.extract(data, self._key)
        except ExtractError:
            return None


@dataclass
class View:
    """Everything an adversary stage may see."""

    system: CommSystem
    key: bytes | None
    oracle: ExtractionOracle
    rng: random.Random


# --------------------------------------------------------------- results

@dataclass(frozen=True)
class GameResult:
    game: str
    system: str
    oracle: str
    adversary: str
    key_visible: bool
    trials: int
    invalid_trials: int
    success_prob: float
    normalized_advantage: float
    ci_halfwidth: float
    notes: str = ""

    def as_row(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}


def _result(game, system, oracle, adversary, key_visible, wins, valid, invalid, notes="") -> GameResult:
    p = wins / valid if valid else float("nan")
    half = Z95 * math.sqrt(p * (1 - p) / valid) if valid else float("nan")
    if game == "NM":
        adv = p
    else:
        # advantage over blind guessing; the raw success probability stays in success_prob
        adv, half = 2 * abs(p - 0.5), 2 * half
    return GameResult(game, system.name, OracleModel(oracle).value, adversary, key_visible,
                      valid, invalid, p, adv, half, notes)


def _flip_last_bit(data: bytes) -> bytes:
    return data[:-1] + bytes([data[-1] ^ 1])


def _hamming(a: bytes, b: bytes) -> int:
    return sum(bin(x ^ y).count("1") for x, y in zip(a, b))


# ---------------------------------------------------------- IND adversaries

class IndAdversary:
    name = "ind"

    def choose(self, view: View) -> tuple[bytes, bytes, bytes]:
        sysm, rng = view.system, view.rng
        m0 = sysm.sample_message(rng)
        m1 = sysm.sample_message(rng)
        while m1 == m0:
            m1 = sysm.sample_message(rng)
        return m0, m1, sysm.sample_support(rng)

    def guess(self, view: View, s: bytes, m0: bytes, m1: bytes, alpha: bytes) -> int:
        return view.rng.getrandbits(1)


class RandomGuess(IndAdversary):
    name = "random-guess"


class ReEmbed(IndAdversary):
    """Re-runs the insertion of m0 with all-zero randomness and compares."""

    name = "re-embed"

    def guess(self, view, s, m0, m1, alpha):
        if view.key is None:
            return super().guess(view, s, m0, m1, alpha)
        zero = bytes(view.system.randomness_len)
        return 0 if view.system.insert(s, m0, view.key, zero) == alpha else 1


class KeyExtract(IndAdversary):
    """Uses the visible key to extract the challenge directly."""

    name = "key-extract"

    def guess(self, view, s, m0, m1, alpha):
        if view.key is None:
            return super().guess(view, s, m0, m1, alpha)
        return 0 if view.system.extract(alpha, view.system.inv(view.key)) == m0 else 1


class PayloadScan(IndAdversary):
    """Looks for either message verbatim inside the challenge."""

    name = "payload-scan"

    def guess(self, view, s, m0, m1, alpha):
        if m0 in alpha and m1 not in alpha:
            return 0
        if m1 in alpha and m0 not in alpha:
            return 1
        return super().guess(view, s, m0, m1, alpha)


class MaulAndQuery(IndAdversary):
    """Asks the oracle about a one-bit variant of the challenge (AD2 only)."""

    name = "maul-query"

    def guess(self, view, s, m0, m1, alpha):
        mauled = _flip_last_bit(alpha)
        if not view.oracle.allows(mauled):
            return super().guess(view, s, m0, m1, alpha)
        m = view.oracle(mauled)
        if m is None:
            return super().guess(view, s, m0, m1, alpha)
        d0, d1 = _hamming(m, m0), _hamming(m, m1)
        return 0 if d0 < d1 else 1 if d1 < d0 else super().guess(view, s, m0, m1, alpha)


class ChallengeQuery(IndAdversary):
    """Illegally queries the challenge itself; exists to test oracle discipline."""

    name = "challenge-query"

    def guess(self, view, s, m0, m1, alpha):
        return 0 if view.oracle(alpha) == m0 else 1


IND_SUITE: list[IndAdversary] = [RandomGuess(), ReEmbed(), KeyExtract(), PayloadScan(), MaulAndQuery()]


def ind_game(system: CommSystem, adversary: IndAdversary, oracle=OracleModel.NA, trials: int = 1000,
             seed: int = 0, key_visible: bool = True) -> GameResult:
    """Indistinguishability game.

    With ``key_visible=True`` the second stage receives the embedding key,
    as in the game's literal statement; for a symmetric system any
    adversary can then extract the message, so the keyless variant
    (``key_visible=False``) is provided as well.
    """
    oracle = OracleModel(oracle)
    wins = valid = invalid = 0
    for i in range(trials):
        game_rng = random.Random(derive_seed(seed, "ind", i))
        adv_rng = random.Random(derive_seed(seed, "ind-adversary", i))
        k = system.sample_key(game_rng)
        shown = k if key_visible else None
        try:
            m0, m1, s = adversary.choose(View(system, shown, ExtractionOracle(system, k, oracle, "first"), adv_rng))
            if m0 == m1 or len(m0) != system.message_len or len(m1) != system.message_len:
                raise OracleViolation("A1 must return two distinct messages")
            b = game_rng.getrandbits(1)
            alpha = system.insert(s, (m0, m1)[b], k, system.sample_randomness(game_rng))
            second = ExtractionOracle(system, k, oracle, "second", forbidden=[alpha])
            guess = adversary.guess(View(system, shown, second, adv_rng), s, m0, m1, alpha)
        except OracleViolation:
            invalid += 1
            continue
        valid += 1
        wins += int(guess == b)
    return _result("IND", system, oracle, adversary.name, key_visible, wins, valid, invalid)


# ----------------------------------------------------------- NM adversaries

class NmAdversary:
    name = "nm"

    def forge(self, view: View, alpha: bytes) -> bytes:
        raise NotImplementedError


class CopyAdversary(NmAdversary):
    name = "copy"

    def forge(self, view, alpha):
        return alpha


class BitFlipAdversary(NmAdversary):
    """Flips one bit of the embedded payload (bit 0 = MSB of the first payload byte)."""

    def __init__(self, bit: int = 0):
        self.bit = bit
        self.name = f"bit-flip-{bit}"

    def forge(self, view, alpha):
        pos = view.system.payload_offset + self.bit // 8
        out = bytearray(alpha)
        out[pos] ^= 0x80 >> (self.bit % 8)
        return bytes(out)


class RandomForge(NmAdversary):
    name = "random-forge"

    def forge(self, view, alpha):
        return view.system.sample_support(view.rng)


class Truncate(NmAdversary):
    """Emits a malformed datum; extraction fails and the trial is lost."""

    name = "truncate"

    def forge(self, view, alpha):
        return alpha[:-1]


def identity_relation(m: bytes) -> set[bytes]:
    return {m}


def empty_relation(m: bytes) -> set[bytes]:
    return set()


def bit_flip_relation(bit: int = 0) -> Callable[[bytes], set[bytes]]:
    def relation(m: bytes) -> set[bytes]:
        out = bytearray(m)
        out[bit // 8] ^= 0x80 >> (bit % 8)
        return {bytes(out)}
    return relation


NM_SUITE: list[NmAdversary] = [CopyAdversary(), BitFlipAdversary(0), RandomForge()]


def nm_game(system: CommSystem, adversary: NmAdversary, relation: Callable[[bytes], Container[bytes]],
            message: bytes, oracle=OracleModel.NA, trials: int = 1000, seed: int = 0) -> GameResult:
    """Relation-based non-malleability game for one fixed message.

    Extraction of the forgery uses the embedding key k. For an asymmetric
    system that cannot recover anything, so inv(k) is used instead and the
    result carries a note saying so.
    """
    oracle = OracleModel(oracle)
    notes = "" if system.symmetric else "extracted with inv(k)"
    related = relation(message)
    wins = valid = invalid = 0
    for i in range(trials):
        game_rng = random.Random(derive_seed(seed, "nm", i))
        adv_rng = random.Random(derive_seed(seed, "nm-adversary", i))
        s = system.sample_support(game_rng)
        k = system.sample_key(game_rng)
        alpha = system.insert(s, message, k, system.sample_randomness(game_rng))
        view = View(system, None, ExtractionOracle(system, k, oracle, "second", forbidden=[alpha]), adv_rng)
        try:
            forged = adversary.forge(view, alpha)
        except OracleViolation:
            invalid += 1
            continue
        valid += 1
        try:
            m2 = system.extract(forged, k if system.symmetric else system.inv(k))
        except ExtractError:
            continue
        wins += int(m2 in related)
    return _result("NM", system, oracle, adversary.name, False, wins, valid, invalid, notes)


# ----------------------------------------------------------- DR adversaries

class DrAdversary:
    name = "dr"

    def choose(self, view: View) -> bytes:
        return view.system.sample_message(view.rng)

    def guess(self, view: View, m: bytes, alpha: tuple[bytes, bytes]) -> bytes:
        """Return the element of `alpha` believed to be the decoy."""
        return alpha[view.rng.getrandbits(1)]


class DrRandomGuess(DrAdversary):
    name = "random-guess"


class DrClearCompare(DrAdversary):
    """Calls the element that does not contain m verbatim the decoy."""

    name = "clear-compare"

    def guess(self, view, m, alpha):
        hits = [m in a for a in alpha]
        if hits.count(True) == 1:
            return alpha[hits.index(False)]
        return super().guess(view, m, alpha)


class DrKeyExtract(DrAdversary):
    name = "key-extract"

    def guess(self, view, m, alpha):
        if view.key is None:
            return super().guess(view, m, alpha)
        k = view.system.inv(view.key)
        hits = [view.system.extract(a, k) == m for a in alpha]
        if hits.count(True) == 1:
            return alpha[hits.index(False)]
        return super().guess(view, m, alpha)


class DrMaulQuery(DrAdversary):
    name = "maul-query"

    def guess(self, view, m, alpha):
        mauled = [_flip_last_bit(a) for a in alpha]
        if not all(view.oracle.allows(x) for x in mauled):
            return super().guess(view, m, alpha)
        hits = [view.oracle(x) == m for x in mauled]
        if hits.count(True) == 1:
            return alpha[hits.index(False)]
        return super().guess(view, m, alpha)


DR_SUITE: list[DrAdversary] = [DrRandomGuess(), DrClearCompare(), DrKeyExtract(), DrMaulQuery()]


def dr_game(system: CommSystem, adversary: DrAdversary, oracle=OracleModel.NA, trials: int = 1000,
            seed: int = 0, key_visible: bool = True) -> GameResult:
    """Message detection resistance: spot the decoy in an unordered pair.

    Supports are drawn uniformly from all byte strings of the declared
    support length. The pair is shown in a seeded random order.
    """
    oracle = OracleModel(oracle)
    wins = valid = invalid = 0
    for i in range(trials):
        game_rng = random.Random(derive_seed(seed, "dr", i))
        adv_rng = random.Random(derive_seed(seed, "dr-adversary", i))
        supports = (system.sample_support(game_rng), system.sample_support(game_rng))
        k = system.sample_key(game_rng)
        shown = k if key_visible else None
        try:
            m = adversary.choose(View(system, shown, ExtractionOracle(system, k, oracle, "first"), adv_rng))
            b = game_rng.getrandbits(1)
            decoy = supports[b]
            carrier = system.insert(supports[1 - b], m, k, system.sample_randomness(game_rng))
            pair = [decoy, carrier]
            game_rng.shuffle(pair)
            second = ExtractionOracle(system, k, oracle, "second", forbidden=pair)
            answer = adversary.guess(View(system, shown, second, adv_rng), m, tuple(pair))
        except OracleViolation:
            invalid += 1
            continue
        valid += 1
        wins += int(answer == decoy)
    return _result("DR", system, oracle, adversary.name, key_visible, wins, valid, invalid)


# ------------------------------------------------------------- insecurity

def insecurity(system: CommSystem, game: str, oracle=OracleModel.NA, suite: Sequence | None = None,
               trials: int = 1000, seed: int = 0, key_visible: bool = True,
               relation: Callable | None = None, messages: Sequence[bytes] | None = None) -> GameResult:
    """Largest normalized advantage over a finite adversary suite (a lower bound).

    For NM the maximum also runs over `messages` (default: one all-zero message).
    """
    game = game.upper()
    if suite is None:
        suite = {"IND": IND_SUITE, "NM": NM_SUITE, "DR": DR_SUITE}[game]
    if not suite:
        raise ValueError("adversary suite is empty")
    results = []
    for adv in suite:
        if game == "IND":
            results.append(ind_game(system, adv, oracle, trials, seed, key_visible))
        elif game == "DR":
            results.append(dr_game(system, adv, oracle, trials, seed, key_visible))
        elif game == "NM":
            rel = relation or identity_relation
            for m in messages or [bytes(system.message_len)]:
                results.append(nm_game(system, adv, rel, m, oracle, trials, seed))
        else:
            raise ValueError(f"unknown game {game!r}")
    return max(results, key=lambda r: r.normalized_advantage)


# --------------------------------------------------------- notion lattice

GOALS = ("NM", "IND")
ATTACKS = ("CDA2", "CDA1", "CIA")


@dataclass(frozen=True)
class SecurityLevel:
    goal: str
    attack: str

    def __post_init__(self):
        if self.goal not in GOALS or self.attack not in ATTACKS:
            raise ValueError(f"not a security level: ({self.goal},{self.attack})")

    @classmethod
    def parse(cls, text: str) -> "SecurityLevel":
        goal, _, attack = text.strip().strip("()").partition(",")
        return cls(goal.strip().upper(), attack.strip().upper())

    def __str__(self):
        return f"({self.goal},{self.attack})"


ALL_LEVELS = [SecurityLevel(g, a) for g in GOALS for a in ATTACKS]

# direct arrows between notions; NM and IND coincide under CDA2
EDGES = {
    SecurityLevel("NM", "CDA2"): [SecurityLevel("NM", "CDA1"), SecurityLevel("IND", "CDA2")],
    SecurityLevel("NM", "CDA1"): [SecurityLevel("NM", "CIA"), SecurityLevel("IND", "CDA1")],
    SecurityLevel("NM", "CIA"): [SecurityLevel("IND", "CIA")],
    SecurityLevel("IND", "CDA2"): [SecurityLevel("IND", "CDA1"), SecurityLevel("NM", "CDA2")],
    SecurityLevel("IND", "CDA1"): [SecurityLevel("IND", "CIA")],
    SecurityLevel("IND", "CIA"): [],
}


def implies(a: SecurityLevel, b: SecurityLevel) -> bool:
    seen = {a}
    todo = deque([a])
    while todo:
        cur = todo.popleft()
        if cur == b:
            return True
        for nxt in EDGES[cur]:
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return False
