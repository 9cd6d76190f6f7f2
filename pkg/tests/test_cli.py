import pytest
from oracles import bbs_trajectory

from wsnsec import cli, sim

SMALL_SIM = """\
node_count = 16
horizon = 200
sample_period = 20
initial_energy = 150
bbs_modulus_bits = 64
intrusion_rate = 0.2
"""


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_no_arguments_is_usage_error(capsys):
    code, _, err = run([], capsys)
    assert code == 1 and "usage" in err


def test_unknown_flag_names_the_token(capsys):
    code, _, err = run(["bound", "--bits", "900", "--m", "1", "--epsilon", "0.1",
                        "--attacker", "1", "--frobnicate"], capsys)
    assert code == 1 and "--frobnicate" in err


def test_missing_config_is_runtime_error(tmp_path, capsys):
    code, _, err = run(["simulate", "--config", str(tmp_path / "missing.cfg"),
                        "--emit", str(tmp_path / "t.csv")], capsys)
    assert code == 2 and "missing.cfg" in err


def test_bad_config_value_is_runtime_error(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("node_count = -3\n")
    code, _, _ = run(["simulate", "--config", str(cfg), "--emit", str(tmp_path / "t.csv")], capsys)
    assert code == 2


def test_bound_case_study_text(capsys):
    code, out, _ = run(["bound", "--bits", "900", "--m", "100", "--epsilon", "0.2",
                        "--attacker", "1e12", "--interpretation", "both"], capsys)
    assert code == 0
    assert "literal (default)" in out and "verdict=secure" in out
    assert "under grouped: NOT reproduced" in out
    assert "under literal: reproduced" in out


def test_bbs_small_primes(capsys):
    code, out, _ = run(["bbs", "--unsafe-small-primes", "11,23", "--s", "3", "--length", "6"], capsys)
    assert code == 0
    assert out.strip() == "".join(map(str, bbs_trajectory(253, 3, 6)[1]))


def test_games_implies(capsys):
    code, out, _ = run(["games", "implies", "--from", "NM,CDA2", "--to", "IND,CIA"], capsys)
    assert code == 0 and out.strip().endswith("true")
    code, out, _ = run(["games", "implies", "--from", "IND,CIA", "--to", "NM,CDA2"], capsys)
    assert out.strip().endswith("false")


def test_games_requires_a_game(capsys):
    assert run(["games"], capsys)[0] == 1


def test_seed_from_environment(monkeypatch, tmp_path, capsys):
    monkeypatch.setenv("WSNSEC_SEED", "7")
    args = cli.build_parser().parse_args(["distinguish", "--trials", "10"])
    assert args.seed == "7"


def replay_cases(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(SMALL_SIM)
    trace = tmp_path / "src.csv"
    trace.write_text("time,a,b\n0,1,2\n1,3,1\n")
    return {
        "bbs": ["bbs", "--bits", "64", "--seed", "ab", "--length", "64", "--emit", "hex"],
        "bound": ["bound", "--bits", "900", "--m", "100", "--epsilon", "0.2", "--attacker", "1e12",
                  "--emit", "json", "--interpretation", "both"],
        "sched-local": ["sched", "--nodes", "4", "--length", "20", "--modulus-bits", "64"],
        "sched-global": ["sched", "--mode", "global", "--bits-from", "lcg", "--nodes", "6",
                         "--length", "10", "--orders-per-slot", "2"],
        "distinguish": ["distinguish", "--source", "lcg", "--trials", "200", "--seed", "3"],
        "simulate": ["simulate", "--config", str(cfg), "--seed", "5"],
        "compare": ["simulate", "--config", str(cfg), "--compare"],
        "games": ["games", "--game", "ind", "--system", "broken", "--trials", "100"],
        "games-nm": ["games", "--game", "nm", "--trials", "50", "--relation", "identity"],
        "implies": ["games", "implies", "--from", "IND,CDA1", "--to", "NM,CIA"],
        "plot": ["plot", "--csv", str(trace), "--columns", "a,b"],
    }


@pytest.mark.parametrize("case", ["bbs", "bound", "sched-local", "sched-global", "distinguish",
                                  "simulate", "compare", "games", "games-nm", "implies", "plot"])
def test_manifest_replay_is_byte_identical(case, tmp_path, capsys):
    argv = replay_cases(tmp_path)[case]
    suffix = ".svg" if case == "plot" else ".csv"
    first_dir, second_dir = tmp_path / "first", tmp_path / "second"
    first_dir.mkdir(), second_dir.mkdir()
    out = first_dir / f"out{suffix}"
    flag = "--emit" if argv[0] == "simulate" else "--output"
    assert cli.main(argv + [flag, str(out)]) == 0
    manifest = out.with_name(out.name + ".manifest")
    assert manifest.exists()
    assert cli.main(["replay", str(manifest), "--output-dir", str(second_dir)]) == 0
    produced = sorted(p.name for p in first_dir.iterdir() if not p.name.endswith(".manifest"))
    assert produced == sorted(p.name for p in second_dir.iterdir() if not p.name.endswith(".manifest"))
    for name in produced:
        assert (first_dir / name).read_bytes() == (second_dir / name).read_bytes(), name


def test_simulate_outputs_and_resolved_config(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(SMALL_SIM)
    out = tmp_path / "trace.csv"
    assert cli.main(["simulate", "--config", str(cfg), "--emit", str(out), "--compare"]) == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert {"trace.csv", "trace_summary.csv", "trace_stddev.svg", "trace_active.svg"} <= names
    values = cli.read_manifest(str(out) + ".manifest")
    assert sim.SimConfig(**values["resolved_config"]) == sim.load_config(cfg)
