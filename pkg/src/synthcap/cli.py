"""Command-line front end.

Every command writes its artifacts atomically into ``--out`` and prints one
summary line per artifact. Exit status: 0 success, 2 bad input or missing
file, 3 infeasible or over budget, 4 internal invariant violated, 1 other.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .channels import BUILTINS, builtin_channel, load_channel
from .errors import BudgetExceeded, InfeasibleError, InvariantViolation
from .regions import (AuxDecomposition, OptimizerConfig, RatePoint, broadcast_region,
                      game_region, limited_memory_region, local_randomness_region,
                      necessary_conditional_entropy, public_channel_region, synthesis_region,
                      wyner_common_information)
from .regions.types import fmt

EXIT_OK, EXIT_OTHER, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_INVARIANT = 0, 1, 2, 3, 4
REGION_KINDS = ("synthesis", "limited-memory", "broadcast", "public-channel", "local-randomness")


class InputError(Exception):
    """Bad command-line input: unreadable file, bad JSON or bad parameter."""


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(out: Path, name: str, text: str, summary: str) -> Path:
    path = out / name
    write_atomic(path, text)
    print(f"{path}: {summary}")
    return path


def _read_json(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"no such file: {p}")
    try:
        with open(p) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{p}: invalid JSON ({exc})") from exc


def _channel(args):
    try:
        if args.channel:
            if not Path(args.channel).is_file():
                raise InputError(f"no such file: {args.channel}")
            return load_channel(args.channel)
        if args.builtin:
            name, *rest = args.builtin
            if len(rest) != 1:
                raise InputError(f"--builtin {name} takes exactly one parameter")
            return builtin_channel(name, rest[0])
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise InputError(f"bad channel: {exc}") from exc
    raise InputError("a channel is required: --channel FILE or --builtin NAME ARG")


def _config(args) -> OptimizerConfig:
    d = {}
    if args.config:
        d = _read_json(args.config)
        d = d.get("optimizer", d)
    try:
        cfg = OptimizerConfig.from_dict(d)
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad optimizer config: {exc}") from exc
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.threads is not None:
        kw["workers"] = max(1, args.threads)
    if getattr(args, "restarts", None) is not None:
        kw["restarts"] = args.restarts
    return cfg.replace(**kw) if kw else cfg


def _gnuplot(out: Path, csv_name: str, xlabel: str, ylabel: str, cols=(1, 2)) -> None:
    stem = Path(csv_name).stem
    script = "\n".join([
        "set datafile separator ','",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
        "set key off",
        f"plot '{csv_name}' every ::1 using {cols[0]}:{cols[1]} with linespoints",
        "",
    ])
    _emit(out, f"{stem}.gp", script, "gnuplot script")


def cmd_region(args) -> None:
    q_x, ch = _channel(args)
    cfg = _config(args)
    out = Path(args.out)
    kind = args.kind
    if kind == "synthesis":
        region = synthesis_region(q_x, ch, args.grid, cfg)
    elif kind == "limited-memory":
        region = limited_memory_region(q_x, ch, args.b, args.grid, cfg)
    elif kind == "broadcast":
        region = broadcast_region(q_x, ch, args.receivers, args.grid, cfg)
    elif kind == "public-channel":
        region = public_channel_region(q_x, ch, cfg, args.grid)
    else:
        region = local_randomness_region(q_x, ch, args.grid, cfg)
    _emit(out, "region.csv", region.to_csv(),
          f"{kind} boundary, {len(region.points)} points")
    _emit(out, "witnesses.json", region.witnesses_json() + "\n",
          f"{sum(w is not None for w in region.witnesses)} witness decompositions")
    meta = dict(region.metadata)
    meta["unattainable"] = region.unattainable
    meta["config"] = cfg.to_dict()
    _emit(out, "region.json", json.dumps(meta, indent=1, sort_keys=True, default=float) + "\n",
          "region metadata")
    if args.gnuplot:
        _gnuplot(out, "region.csv", "R (bits)", "R0 (bits)")


def cmd_common_info(args) -> None:
    q_x, ch = _channel(args)
    cfg = _config(args)
    q = ch.joint(q_x).table
    bits, wit = wyner_common_information(q, cfg)
    doc = {"common_information_bits": bits, "witness": wit.to_dict(),
           "config": cfg.to_dict()}
    try:
        doc["necessary_conditional_entropy_bits"] = necessary_conditional_entropy(q)
    except InfeasibleError:
        doc["necessary_conditional_entropy_bits"] = None
    _emit(Path(args.out), "common_info.json", json.dumps(doc, indent=1) + "\n",
          f"C(X;Y) = {fmt(bits)} bits")


def _aux(args, q_x, ch) -> AuxDecomposition:
    if args.aux:
        try:
            return AuxDecomposition.from_dict(_read_json(args.aux))
        except (KeyError, ValueError) as exc:
            raise InputError(f"bad auxiliary decomposition: {exc}") from exc
    from .synthesis import witness_u_equals_y
    return witness_u_equals_y(q_x, ch)


def _load_spec(path) -> dict:
    """Experiment spec {aux | channel (+ input_probs), n_list, R, R0, seeds, mode, trials}."""
    spec = _read_json(path)
    if not isinstance(spec, dict):
        raise InputError(f"{path}: experiment spec must be a JSON object")
    return spec


def cmd_simulate(args) -> None:
    from .channels import channel_from_dict
    from .synthesis import DecayTable, generate_code, monte_carlo_tv, tv_decay_experiment

    spec = _load_spec(args.spec) if args.spec else {}
    if args.seed is None:
        raise InputError("simulate needs --seed")
    if "channel" in spec and not (args.channel or args.builtin):
        try:
            q_x, ch = channel_from_dict(spec["channel"])
        except (KeyError, ValueError) as exc:
            raise InputError(f"bad channel in spec: {exc}") from exc
    else:
        q_x, ch = _channel(args)
    if "aux" in spec and not args.aux:
        try:
            aux = AuxDecomposition.from_dict(spec["aux"])
        except (KeyError, ValueError) as exc:
            raise InputError(f"bad auxiliary decomposition in spec: {exc}") from exc
    else:
        aux = _aux(args, q_x, ch)
    R = args.R if args.R is not None else spec.get("R")
    R0 = args.R0 if args.R0 is not None else spec.get("R0")
    if R is None or R0 is None:
        raise InputError("simulate needs R and R0 (flags or spec)")
    n_list = args.n_list or spec.get("n_list", [1, 2, 3, 4])
    count = args.seeds if args.seeds is not None else int(spec.get("seeds", 20))
    mode = spec.get("mode", "exact")
    seeds = [args.seed + i for i in range(count)]
    rates = RatePoint(float(R), float(R0))
    if mode == "exact":
        table = tv_decay_experiment(aux, q_x, ch, rates, n_list, seeds)
    elif mode == "monte-carlo":
        trials = int(spec.get("trials", 10000))
        table = DecayTable(metadata={"mode": "monte-carlo", "trials": trials})
        for n in n_list:
            vals = [monte_carlo_tv(generate_code(aux, int(n), rates.r, rates.r0, s), q_x, ch,
                                   trials, s).value for s in seeds]
            std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
            table.rows.append((int(n), float(np.mean(vals)), std, len(vals)))
    else:
        raise InputError(f"unknown mode {mode!r}; use 'exact' or 'monte-carlo'")
    out = Path(args.out)
    _emit(out, "decay.csv", table.to_csv(),
          f"{len(table.rows)} block lengths x {len(seeds)} codebooks ({mode})")
    if args.gnuplot:
        _gnuplot(out, "decay.csv", "n", "mean TV")


def cmd_softcover(args) -> None:
    from .softcover import expected_tv, lemma2_bound
    from .util import ceil_pow2

    if args.seed is None:
        raise InputError("softcover needs --seed")
    p_u, ch = _channel(args)
    joint = ch.joint(p_u).table
    trials = "exhaustive" if args.trials == "exhaustive" else int(args.trials)
    lines = ["n,mean_tv,std,bound"]
    for n in args.n_list:
        M = ceil_pow2(n * args.R)
        mean, std = expected_tv(p_u, ch, M, n, trials, args.seed)
        lines.append(",".join([str(n), fmt(mean), fmt(std),
                               fmt(min(lemma2_bound(joint, args.R, n), 1.5))]))
    out = Path(args.out)
    _emit(out, "softcover.csv", "\n".join(lines) + "\n",
          f"expected TV at R = {fmt(args.R)} for {len(args.n_list)} block lengths")
    if args.gnuplot:
        _gnuplot(out, "softcover.csv", "n", "mean TV")


def cmd_exponent(args) -> None:
    from .softcover import exponents

    p_u, ch = _channel(args)
    rep = exponents(ch.joint(p_u).table, args.R)
    out = Path(args.out)
    _emit(out, "exponents.json", json.dumps(rep.to_dict(), indent=1) + "\n",
          f"gamma = {fmt(rep.gamma)}, gamma_hat = {fmt(rep.gamma_hat)}, "
          f"gamma_hathat = {fmt(rep.gamma_hathat)} bits")
    _emit(out, "renyi_curve.csv", rep.curve_csv(), f"{len(rep.renyi_curve)} orders")
    if args.gnuplot:
        _gnuplot(out, "renyi_curve.csv", "alpha", "I_breve (bits)")


def coordination_payoff() -> np.ndarray:
    """pi(x, y, z) = 1 when x = y != z, binary actions."""
    pi = np.zeros((2, 2, 2))
    for x in range(2):
        for z in range(2):
            if x != z:
                pi[x, x, z] = 1.0
    return pi


def cmd_game(args) -> None:
    if args.payoff:
        d = _read_json(args.payoff)
        try:
            pi = np.asarray(d["payoff"], dtype=float)
        except (KeyError, ValueError, TypeError) as exc:
            raise InputError(f"bad payoff file: {exc}") from exc
    else:
        pi = coordination_payoff()
    cfg = _config(args)
    try:
        pts = game_region(pi, cfg, grid=args.grid)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    lines = ["R,payoff"] + [f"{fmt(p.rate)},{fmt(p.payoff)}" for p in pts]
    out = Path(args.out)
    _emit(out, "game.csv", "\n".join(lines) + "\n", f"{len(pts)} rates")
    if args.gnuplot:
        _gnuplot(out, "game.csv", "R (bits)", "payoff")


def _ints(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--channel", metavar="FILE", help="channel JSON {input, output, rows, "
                     "input_probs?}")
    src.add_argument("--builtin", nargs="+", metavar="NAME",
                     help=f"builtin channel and parameter: one of {', '.join(BUILTINS)}")
    common.add_argument("--grid", type=int, default=10, help="number of rate points")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", default=".", metavar="DIR")
    common.add_argument("--threads", type=int, default=None, help="worker processes cap")
    common.add_argument("--config", metavar="FILE", help="optimizer config JSON")
    common.add_argument("--gnuplot", action="store_true", help="also write a gnuplot script")

    p = argparse.ArgumentParser(prog="synthcap", description="Distributed channel synthesis "
                                "regions, simulations and soft-covering bounds.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("region", parents=[common], help="rate region boundary")
    r.add_argument("--kind", choices=REGION_KINDS, default="synthesis")
    r.add_argument("--b", type=float, default=1.0, help="memory fraction (limited-memory)")
    r.add_argument("--receivers", type=_ints, default=None,
                   help="receiver alphabet sizes (broadcast), e.g. 2,2")
    r.add_argument("--restarts", type=int, default=None)
    r.set_defaults(func=cmd_region)

    c = sub.add_parser("common-info", parents=[common], help="Wyner common information")
    c.add_argument("--restarts", type=int, default=None)
    c.set_defaults(func=cmd_common_info)

    s = sub.add_parser("simulate", parents=[common], help="exact TV of synthesis codes")
    s.add_argument("--aux", metavar="FILE", help="witness decomposition JSON (default U = Y)")
    s.add_argument("--R", type=float, default=None)
    s.add_argument("--R0", type=float, default=None)
    s.add_argument("--spec", metavar="FILE", help="experiment spec JSON")
    s.add_argument("--n-list", type=_ints, default=None, help="block lengths, e.g. 1,2,3")
    s.add_argument("--seeds", type=int, default=None, help="codebooks per block length")
    s.set_defaults(func=cmd_simulate)

    sc = sub.add_parser("softcover", parents=[common], help="expected soft-covering TV")
    sc.add_argument("--R", type=float, required=True)
    sc.add_argument("--n-list", type=_ints, default=[1, 2, 3])
    sc.add_argument("--trials", default="exhaustive", help="count or 'exhaustive'")
    sc.set_defaults(func=cmd_softcover)

    e = sub.add_parser("exponent", parents=[common], help="soft-covering exponents")
    e.add_argument("--R", type=float, required=True)
    e.set_defaults(func=cmd_exponent)

    g = sub.add_parser("game", parents=[common], help="payoff-rate tradeoff")
    g.add_argument("--payoff", metavar="FILE",
                   help="JSON {payoff: pi[x][y][z]}; default is the binary coordination game")
    g.add_argument("--restarts", type=int, default=None)
    g.set_defaults(func=cmd_game)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "softcover" and args.trials != "exhaustive":
        try:
            int(args.trials)
        except ValueError:
            parser.error(f"--trials must be an integer or 'exhaustive', got {args.trials}")
    try:
        args.func(args)
    except InputError as exc:
        print(f"synthcap: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InfeasibleError, BudgetExceeded) as exc:
        print(f"synthcap: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except InvariantViolation as exc:
        print(f"synthcap: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except Exception as exc:  # noqa: BLE001 - report and exit nonzero
        print(f"synthcap: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_OTHER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
