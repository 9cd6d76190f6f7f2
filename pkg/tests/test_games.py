import itertools

import pytest

from wsnsec import games as g
from oracles import closure_oracle
from wsnsec.games import OracleModel, SecurityLevel as L

SYSTEMS = [g.XorSystem(), g.BrokenXorSystem(), g.ClearAppendSystem()]


@pytest.mark.parametrize("system", SYSTEMS, ids=lambda s: s.name)
def test_correctness_round_trip(system):
    assert g.correctness_failures(system, 10_000) == 0


def test_insertion_randomness():
    assert g.repeat_collision_rate(g.XorSystem(), 2000) == 0.0
    assert g.repeat_collision_rate(g.BrokenXorSystem(), 100) == 1.0


def test_inserted_datum_stays_in_support_set():
    x = g.XorSystem()
    out = x.insert(bytes(32), bytes(8), bytes(16), bytes(8))
    assert len(out) == x.support_len
    with pytest.raises(g.ExtractError):
        x.extract(out[:-1], bytes(16))


def test_random_guess_ind():
    r = g.ind_game(g.XorSystem(), g.RandomGuess(), trials=2000)
    assert abs(r.success_prob - 0.5) <= 3 * r.ci_halfwidth / 2
    assert r.normalized_advantage == pytest.approx(2 * abs(r.success_prob - 0.5))


def test_re_embed_breaks_deterministic_system():
    r = g.ind_game(g.BrokenXorSystem(), g.ReEmbed(), trials=1000)
    assert r.success_prob == 1.0


@pytest.mark.parametrize("adversary", g.IND_SUITE, ids=lambda a: a.name)
def test_fresh_nonce_hides_message_without_key(adversary):
    r = g.ind_game(g.XorSystem(), adversary, OracleModel.NA, trials=4000, key_visible=False)
    assert r.normalized_advantage <= 0.05


def test_literal_game_is_won_with_the_key():
    r = g.ind_game(g.XorSystem(), g.KeyExtract(), trials=300, key_visible=True)
    assert r.success_prob == 1.0


def test_mauling_under_ad2_breaks_xor():
    assert g.ind_game(g.XorSystem(), g.MaulAndQuery(), "ad2", trials=300, key_visible=False).success_prob == 1.0
    assert g.ind_game(g.XorSystem(), g.MaulAndQuery(), "ad1", trials=300, key_visible=False).success_prob < 0.6


def test_ad2_refuses_challenge_queries():
    r = g.ind_game(g.XorSystem(), g.ChallengeQuery(), "ad2", trials=200)
    assert r.invalid_trials == 200 and r.trials == 0


@pytest.mark.parametrize("oracle", ["na", "ad1"])
def test_second_stage_oracle_forbidden_outside_ad2(oracle):
    r = g.ind_game(g.XorSystem(), g.ChallengeQuery(), oracle, trials=50)
    assert r.invalid_trials == 50


def test_oracle_never_answers_on_challenge():
    x = g.XorSystem()
    oracle = g.ExtractionOracle(x, bytes(16), OracleModel.AD2, "second", forbidden=[b"c" * 32])
    with pytest.raises(g.OracleViolation):
        oracle(b"c" * 32)
    assert oracle.queries == 0
    assert oracle(b"d" * 32) is not None and oracle.queries == 1
    first = g.ExtractionOracle(x, bytes(16), OracleModel.AD1, "first")
    assert first.available and first.model.attack == "CDA1"


def test_a1_must_pick_distinct_messages():
    class Lazy(g.IndAdversary):
        name = "lazy"

        def choose(self, view):
            m = bytes(8)
            return m, m, bytes(32)

    assert g.ind_game(g.XorSystem(), Lazy(), trials=10).invalid_trials == 10


def test_nm_examples():
    x, m = g.XorSystem(), bytes.fromhex("0011223344556677")
    assert g.nm_game(x, g.CopyAdversary(), g.identity_relation, m, trials=500).success_prob == 1.0
    assert g.nm_game(x, g.CopyAdversary(), g.empty_relation, m, trials=200).success_prob == 0.0
    flip = g.nm_game(x, g.BitFlipAdversary(5), g.bit_flip_relation(5), m, trials=1000)
    assert flip.success_prob >= 0.95
    assert g.nm_game(x, g.Truncate(), g.identity_relation, m, trials=50).success_prob == 0.0
    assert g.nm_game(x, g.RandomForge(), g.identity_relation, m, trials=500).success_prob < 0.01


def test_nm_asymmetric_system_uses_inverse_key():
    class Reversed(g.XorSystem):
        name = "reversed"
        symmetric = False

        def insert(self, s, m, k, r):
            return super().insert(s, m, k[::-1], r)

        def inv(self, k):
            return k[::-1]

    sysm = Reversed()
    assert g.correctness_failures(sysm, 200) == 0
    r = g.nm_game(sysm, g.CopyAdversary(), g.identity_relation, bytes(8), trials=100)
    assert r.success_prob == 1.0 and "inv(k)" in r.notes


def test_dr_examples():
    rg = g.dr_game(g.XorSystem(), g.DrRandomGuess(), trials=2000)
    assert abs(rg.success_prob - 0.5) <= 3 * rg.ci_halfwidth / 2
    assert g.dr_game(g.ClearAppendSystem(), g.DrClearCompare(), trials=1000).success_prob == 1.0
    for adv in g.DR_SUITE:
        r = g.dr_game(g.XorSystem(), adv, "na", trials=4000, key_visible=False)
        assert r.normalized_advantage <= 0.05, adv.name


def test_insecurity():
    single = g.insecurity(g.BrokenXorSystem(), "ind", suite=[g.ReEmbed()], trials=200)
    assert single.adversary == "re-embed" and single.normalized_advantage == 1.0
    guessers = g.insecurity(g.XorSystem(), "ind", suite=[g.RandomGuess()] * 3, trials=3000)
    assert guessers.normalized_advantage <= 0.05
    broken = g.insecurity(g.BrokenXorSystem(), "ind", trials=500, key_visible=True)
    assert broken.normalized_advantage >= 0.95
    with pytest.raises(ValueError, match="empty"):
        g.insecurity(g.XorSystem(), "ind", suite=[])
    nm = g.insecurity(g.XorSystem(), "nm", relation=g.bit_flip_relation(0),
                      messages=[bytes(8), b"\xff" * 8], trials=200)
    assert nm.adversary == "bit-flip-0" and nm.success_prob == 1.0


def test_size_control_for_random_guesser():
    inside = 0
    for seed in range(40):
        for run in (g.ind_game, g.dr_game):
            r = run(g.XorSystem(), g.RandomGuess() if run is g.ind_game else g.DrRandomGuess(),
                    trials=300, seed=seed)
            inside += abs(r.success_prob - 0.5) <= 3 * r.ci_halfwidth / 2
    assert inside >= 0.95 * 80


# ------------------------------------------------------------------ lattice

def test_implies_matches_closure_on_all_pairs():
    tc = closure_oracle()
    for a, b in itertools.product(g.ALL_LEVELS, repeat=2):
        key_a, key_b = f"{a.goal},{a.attack}", f"{b.goal},{b.attack}"
        assert g.implies(a, b) == tc.has_edge(key_a, key_b), (a, b)


def test_implies_examples():
    assert g.implies(L("NM", "CDA2"), L("IND", "CIA"))
    assert not g.implies(L("IND", "CIA"), L("NM", "CDA2"))
    assert g.implies(L("IND", "CDA2"), L("NM", "CDA2"))
    assert [b for b in g.ALL_LEVELS if g.implies(L("IND", "CIA"), b)] == [L("IND", "CIA")]
    for top in (L("NM", "CDA2"), L("IND", "CDA2")):
        assert all(g.implies(top, b) for b in g.ALL_LEVELS)


def test_implies_reflexive_and_transitive():
    levels = g.ALL_LEVELS
    assert all(g.implies(a, a) for a in levels)
    for a, b, c in itertools.product(levels, repeat=3):
        if g.implies(a, b) and g.implies(b, c):
            assert g.implies(a, c)


def test_level_parsing():
    assert L.parse("(nm, cda2)") == L("NM", "CDA2")
    with pytest.raises(ValueError):
        L.parse("OW,CIA")
