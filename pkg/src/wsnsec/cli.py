"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 runtime error. Every command that
writes to ``--output`` also writes ``<output>.manifest`` holding the
resolved arguments; ``wsnsec replay <manifest>`` reruns it.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import asdict, fields, replace
from pathlib import Path

import mpmath

from . import __version__
from . import bbs, bound, distinguish, games, sched, sim
from .plotting import emit_plot
from .seeding import derive_bytes

log = logging.getLogger("wsnsec")

SEED_ENV = "WSNSEC_SEED"
OUTPUT_KEYS = ("output",)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _default_seed() -> str:
    return os.environ.get(SEED_ENV, "0")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _write(args, text: str) -> None:
    if args.output:
        Path(args.output).write_text(text, newline="")
    else:
        sys.stdout.write(text)


# ------------------------------------------------------------------ bbs

def cmd_bbs(args) -> list[Path]:
    seed = bytes.fromhex(args.seed) if args.seed else b""
    if args.unsafe_small_primes:
        p, q = (int(v) for v in args.unsafe_small_primes.split(","))
        params = bbs.params_from_primes(p, q)
    else:
        if args.bits is None:
            raise UsageError("bbs: --bits is required unless --unsafe-small-primes is given")
        params = bbs.generate_params(args.bits, seed)
    s = args.s if args.s is not None else bbs.derive_seed_value(params, seed)
    out = bbs.generate(bbs.seed_state(params, s), args.length)
    if args.emit == "bits":
        text = "".join(map(str, out)) + "\n"
    elif args.emit == "hex":
        padded = out + [0] * (-len(out) % 8)
        value = int("".join(map(str, padded)), 2) if padded else 0
        text = value.to_bytes(len(padded) // 8, "big").hex() + "\n"
    else:
        text = _csv_text(["index", "bit"], enumerate(out, 1))
    _write(args, text)
    return []


# ---------------------------------------------------------------- bound

def cmd_bound(args) -> list[Path]:
    query = bound.SecurityQuery(args.bits, args.m, args.epsilon, args.attacker)
    interps = list(bound.Interpretation) if args.interpretation == "both" else [bound.Interpretation(args.interpretation)]
    reports = [bound.is_secure_against(query, i, args.ratio_threshold) for i in interps]
    if args.emit == "json":
        text = json.dumps([r.as_row() for r in reports], indent=2) + "\n"
    elif args.emit == "csv":
        rows = [r.as_row() for r in reports]
        text = _csv_text(list(rows[0]), [list(r.values()) for r in rows])
    else:
        lines = []
        for r in reports:
            default = " (default)" if r.interpretation == bound.DEFAULT_INTERPRETATION.value else ""
            lines.append(
                f"{r.interpretation}{default}: L(n)={mpmath.nstr(r.gnfs_cost, 10)} cycles, "
                f"t_max={mpmath.nstr(r.t_max, 10)} cycles, verdict={r.verdict}, "
                f"T/eps={r.time_success_ratio:.6g}"
                + ("" if r.ratio_ok is None else f", ratio {'within' if r.ratio_ok else 'above'} threshold")
            )
        if query == bound.CASE_STUDY:
            for r in reports:
                same = r.verdict == bound.CASE_STUDY_VERDICT
                lines.append(f"published verdict ({bound.CASE_STUDY_VERDICT}) under {r.interpretation}: "
                             f"{'reproduced' if same else 'NOT reproduced'}")
        text = "\n".join(lines) + "\n"
    _write(args, text)
    return []


# ---------------------------------------------------------------- sched

def _stream(args, label, index, length):
    src = distinguish.BitSource(args.bits_from, seed=int(args.seed), modulus_bits=args.modulus_bits,
                                path=args.file)
    return src.sample(length, index)


def cmd_sched(args) -> list[Path]:
    if args.mode == "local":
        rows = []
        for node in range(args.nodes):
            plan = sched.local_schedule(_stream(args, "local", node, args.length), args.quantum, node)
            for k, bit in enumerate(plan.slots):
                rows.append([node, k, k * args.quantum, (k + 1) * args.quantum, int(bit)])
        text = _csv_text(["node_id", "slot", "t_start", "t_end", "awake"], rows)
    else:
        width = sched.block_size(args.nodes)
        bits = _stream(args, "global", 0, args.length * args.orders_per_slot * width)
        orders = sched.global_schedule(bits, args.nodes, args.orders_per_slot)
        text = _csv_text(["order", "time_slot", "t_start", "node_id"],
                         [[i, o.time_slot, o.time_slot * args.quantum, o.node_id] for i, o in enumerate(orders)])
    _write(args, text)
    return []


# ----------------------------------------------------------- distinguish

def cmd_distinguish(args) -> list[Path]:
    source = distinguish.BitSource(args.source, seed=int(args.seed), modulus_bits=args.bits, path=args.file)
    decisions = distinguish.battery_decisions(args.alpha)
    results = distinguish.run_distinguishers(decisions, source, args.m, args.trials)
    rows = [[name, r.trials, r.p1_hat, r.p2_hat, r.raw_advantage, r.ci_halfwidth] for name, r in results.items()]
    _write(args, _csv_text(["test_name", "trials", "p1_hat", "p2_hat", "advantage", "ci95"], rows))
    return []


# -------------------------------------------------------------- simulate

def _sim_config(args) -> sim.SimConfig:
    if getattr(args, "resolved_config", None):
        return sim.SimConfig(**args.resolved_config)
    cfg = sim.load_config(args.config) if args.config else sim.SimConfig()
    if args.seed is not None:
        cfg = replace(cfg, master_seed=int(args.seed))
    return cfg


def cmd_simulate(args) -> list[Path]:
    cfg = _sim_config(args)
    args.resolved_config = asdict(cfg)
    out = Path(args.output)
    extra = []
    if args.compare:
        comp = sim.compare_schedulers(cfg)
        out.write_text(comp.to_csv(), newline="")
        summary = out.with_name(out.stem + "_summary.csv")
        summary.write_text(comp.summary_csv(), newline="")
        extra.append(summary)
        for name, trace in comp.traces.items():
            problems = sim.verify_trace(trace)
            if problems:
                raise RuntimeError(f"{name} trace invalid: {'; '.join(problems)}")
        if args.plot:
            a, b = comp.traces
            extra.append(emit_plot(out, out.with_name(out.stem + "_stddev.svg"),
                                   [f"{a}_energy_stddev", f"{b}_energy_stddev"],
                                   title="Energy standard deviation", ylabel="energy (units)"))
            extra.append(emit_plot(out, out.with_name(out.stem + "_active.svg"),
                                   [f"{a}_active_fraction", f"{b}_active_fraction"],
                                   title="Active nodes", ylabel="fraction of nodes"))
    else:
        trace = sim.run(cfg)
        problems = sim.verify_trace(trace)
        if problems:
            raise RuntimeError(f"trace invalid: {'; '.join(problems)}")
        out.write_text(trace.to_csv(), newline="")
        if args.plot:
            extra.append(emit_plot(out, out.with_name(out.stem + "_active.svg"),
                                   ["active_fraction", "alive_fraction"],
                                   title="Active nodes", ylabel="fraction of nodes"))
            extra.append(emit_plot(out, out.with_name(out.stem + "_energy.svg"),
                                   ["energy_mean", "energy_stddev"], title="Energy", ylabel="energy (units)"))
    return extra


# ----------------------------------------------------------------- games

def cmd_games(args) -> list[Path]:
    if args.games_cmd == "implies":
        a = games.SecurityLevel.parse(args.from_level)
        b = games.SecurityLevel.parse(args.to_level)
        result = games.implies(a, b)
        _write(args, f"{a} => {b}: {str(result).lower()}\n")
        return []
    if args.game is None:
        raise UsageError("games: --game is required")
    system = games.SYSTEMS[args.system]()
    seed = int(args.seed)
    results = []
    if args.game == "nm":
        relation = {"identity": games.identity_relation, "empty": games.empty_relation,
                    "bit-flip": games.bit_flip_relation(0)}[args.relation]
        message = bytes.fromhex(args.message) if args.message else bytes(system.message_len)
        for adv in games.NM_SUITE:
            results.append(games.nm_game(system, adv, relation, message, args.oracle, args.trials, seed))
    else:
        run, suite = (games.ind_game, games.IND_SUITE) if args.game == "ind" else (games.dr_game, games.DR_SUITE)
        for key_visible in (True, False):
            for adv in suite:
                results.append(run(system, adv, args.oracle, args.trials, seed, key_visible))
    groups = {}
    for r in results:
        groups.setdefault(r.key_visible, []).append(r)
    for group in groups.values():
        best = max(group, key=lambda r: r.normalized_advantage)
        results.append(replace(best, adversary=f"max:{best.adversary}"))
    header = list(results[0].as_row())
    if args.emit == "csv":
        text = _csv_text(header, [list(r.as_row().values()) for r in results])
    else:
        text = "".join(
            f"{r.game} {r.system} {r.oracle} key_visible={r.key_visible} {r.adversary}: "
            f"success={r.success_prob:.4f} advantage={r.normalized_advantage:.4f} "
            f"+/-{r.ci_halfwidth:.4f} (n={r.trials}, invalid={r.invalid_trials})\n"
            for r in results
        )
    _write(args, text)
    return []


# ------------------------------------------------------------------ plot

def cmd_plot(args) -> list[Path]:
    cols = args.columns.split(",") if args.columns else None
    emit_plot(Path(args.csv), args.output, cols, title=args.title)
    return []


# ------------------------------------------------------------- manifest

def write_manifest(args, extra: list[Path]) -> Path:
    path = Path(str(args.output) + ".manifest")
    items = {k: v for k, v in vars(args).items() if k not in ("func",)}
    lines = [f"tool_version = {json.dumps(__version__)}", f"extra_outputs = {json.dumps([str(p) for p in extra])}"]
    lines += [f"{k} = {json.dumps(v, sort_keys=True)}" for k, v in sorted(items.items())]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_manifest(path: str | Path) -> dict:
    values = {}
    for line in Path(path).read_text().splitlines():
        if line.strip() and not line.lstrip().startswith("#"):
            key, _, value = line.partition("=")
            values[key.strip()] = json.loads(value)
    return values


def cmd_replay(args) -> list[Path]:
    values = read_manifest(args.manifest)
    values.pop("tool_version", None)
    values.pop("extra_outputs", None)
    if args.output_dir:
        values["output"] = str(Path(args.output_dir) / Path(values["output"]).name)
    replayed = argparse.Namespace(**values)
    replayed.func = COMMANDS[values["command"]]
    extra = replayed.func(replayed)
    write_manifest(replayed, extra)
    return []


COMMANDS = {
    "bbs": cmd_bbs,
    "bound": cmd_bound,
    "sched": cmd_sched,
    "distinguish": cmd_distinguish,
    "simulate": cmd_simulate,
    "games": cmd_games,
    "plot": cmd_plot,
    "replay": cmd_replay,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wsnsec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("bbs", help="emit Blum-Blum-Shub bits")
    p.add_argument("--bits", type=int, help="modulus bit length")
    p.add_argument("--seed", default=os.environ.get(SEED_ENV, "00"), help="entropy seed (hex)")
    p.add_argument("--s", type=int, help="explicit generator seed s (default: derived from --seed)")
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--emit", choices=["hex", "bits", "csv"], default="bits")
    p.add_argument("--unsafe-small-primes", metavar="P,Q", help="test-only explicit primes")

    p = sub.add_parser("bound", help="concrete (T, eps)-security of BBS scheduling")
    p.add_argument("--bits", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--attacker", type=float, required=True, help="attacker budget in clock cycles")
    p.add_argument("--interpretation", choices=["grouped", "literal", "both"],
                   default=bound.DEFAULT_INTERPRETATION.value)
    p.add_argument("--ratio-threshold", type=float, help="bound on T/eps to check against")
    p.add_argument("--emit", choices=["json", "csv", "text"], default="text")

    p = sub.add_parser("sched", help="wake/sleep plans or toggle orders from a bitstream")
    p.add_argument("--mode", choices=["local", "global"], default="local")
    p.add_argument("--bits-from", choices=["bbs", "lcg", "file"], default="bbs")
    p.add_argument("--file", help="bit file for --bits-from file")
    p.add_argument("--quantum", type=float, default=1.0)
    p.add_argument("--nodes", type=int, default=128)
    p.add_argument("--length", type=int, default=100, help="number of slots")
    p.add_argument("--orders-per-slot", type=int, default=1)
    p.add_argument("--modulus-bits", type=int, default=512)
    p.add_argument("--seed", default=_default_seed())
    p.add_argument("--emit", choices=["csv"], default="csv")

    p = sub.add_parser("distinguish", help="distinguisher battery vs the uniform reference")
    p.add_argument("--source", choices=["bbs", "lcg", "uniform", "file"], default="bbs")
    p.add_argument("--file")
    p.add_argument("--bits", type=int, default=512, help="BBS modulus bit length")
    p.add_argument("--m", type=int, default=128)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--battery", choices=["default"], default="default")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--seed", default=_default_seed())
    p.add_argument("--emit", choices=["csv"], default="csv")

    p = sub.add_parser("simulate", help="run the sensor-field simulation")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--emit", dest="output", default="trace.csv", help="trace CSV path")
    p.add_argument("--compare", action="store_true", help="run bbs and lcg side by side")
    p.add_argument("--no-plot", dest="plot", action="store_false")
    p.add_argument("--seed", default=os.environ.get(SEED_ENV))

    p = sub.add_parser("games", help="IND / NM / DR security games")
    p.add_argument("--game", choices=["ind", "nm", "dr"])
    p.add_argument("--system", choices=list(games.SYSTEMS), default="xor")
    p.add_argument("--oracle", choices=[o.value for o in games.OracleModel], default="na")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--relation", choices=["identity", "empty", "bit-flip"], default="bit-flip")
    p.add_argument("--message", help="NM message (hex)")
    p.add_argument("--seed", default=_default_seed())
    p.add_argument("--emit", choices=["csv", "text"], default="csv")
    gsub = p.add_subparsers(dest="games_cmd", parser_class=_Parser)
    imp = gsub.add_parser("implies", help="does one security level imply another")
    imp.add_argument("--from", dest="from_level", required=True)
    imp.add_argument("--to", dest="to_level", required=True)
    imp.add_argument("--output")

    p = sub.add_parser("plot", help="SVG line chart of a CSV time series")
    p.add_argument("--csv", required=True)
    p.add_argument("--columns")
    p.add_argument("--title")

    p = sub.add_parser("replay", help="rerun a command from its manifest")
    p.add_argument("manifest")
    p.add_argument("--output-dir")

    for name, sp in sub.choices.items():
        if name not in ("simulate", "replay"):
            sp.add_argument("--output", required=name == "plot", help="output path (default stdout)")
        sp.set_defaults(func=COMMANDS[name])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
    except UsageError as exc:
        print(exc, file=sys.stderr)
        if "argv" not in str(exc):
            print(parser.format_usage(), file=sys.stderr, end="")
        return 1
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        extra = args.func(args)
        if args.command != "replay" and getattr(args, "output", None):
            write_manifest(args, extra)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (OSError, ValueError, RuntimeError, KeyError) as exc:
        print(f"wsnsec {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
