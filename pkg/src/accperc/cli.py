"""Command-line interface: ``accperc <command> [options]``.

Tables go to standard output (or ``--out``) as CSV or JSON with floats at 17
significant digits; logs go to standard error. Exit codes: 0 success,
2 configuration error, 3 capacity or accuracy error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from typing import Iterable, Sequence

from . import branching, env as envmod, exact, records, sim
from ._util import dumps, fmt
from .errors import AccPercError, ConfigError
from .tree import LinearCeil, parse_growth

log = logging.getLogger("accperc")


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _emit(args, text: str) -> None:
    if args.out and args.out != "-":
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, obj) -> None:
    _emit(args, dumps(obj) + "\n")


def _floats(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None
    return vals


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of integers, got {text!r}") from None


def _cap(value: int) -> int | None:
    return None if value == 0 else value


def _require_depth(args) -> int:
    if args.depth is None:
        raise ConfigError("--depth is required")
    return args.depth


def _trial_config(args, growth, depth: int, env=None) -> sim.TrialConfig:
    return sim.TrialConfig(growth=growth, max_depth=depth, root_mode=args.root,
                           frontier_cap=_cap(args.cap), seed=args.seed, env=env)


def _level_table(args, config: sim.TrialConfig, trials: int) -> None:
    est = sim.estimate_lambda_prob(config, trials, args.threads)
    if args.format == "json":
        _emit_json(args, {"config": config.to_dict(), "trials": trials,
                          "levels": [e.__dict__ for e in est]})
    else:
        _emit(args, _csv_text(sim.LevelEstimate.CSV_HEADER, (e.row() for e in est)))


def cmd_simulate(args) -> None:
    config = _trial_config(args, parse_growth(args.growth), _require_depth(args),
                           envmod.parse_env(args.env) if args.env else None)
    log.info("simulate: %d trials of %s to depth %d", args.trials, config.growth, config.max_depth)
    _level_table(args, config, args.trials)


def cmd_phase(args) -> None:
    alphas = _floats(args.alphas)
    if not alphas:
        raise ConfigError("empty alpha grid")
    depth = _require_depth(args)
    checkpoints = _ints(args.checkpoints) if args.checkpoints else [depth]
    if any(not 0 <= c <= depth for c in checkpoints):
        raise ConfigError(f"checkpoints must lie in [0, {depth}]")
    rows = []
    for a in alphas:
        config = _trial_config(args, LinearCeil(a), depth)
        log.info("phase: alpha=%s", a)
        est = sim.estimate_lambda_prob(config, args.trials, args.threads)
        rows.extend((a, c, est[c].p_hat, est[c].stderr) for c in checkpoints)
    header = ("alpha", "depth", "p_hat", "stderr")
    if args.format == "json":
        _emit_json(args, [dict(zip(header, r)) for r in rows])
    else:
        _emit(args, _csv_text(header, rows))


def cmd_exact(args) -> None:
    res = exact.lambda_prob_exact(parse_growth(args.growth), _require_depth(args), args.root,
                                  args.method, degree_cap=args.degree_cap, tol=args.tol)
    if args.format == "csv":
        _emit(args, _csv_text(("n", "method", "value", "error_estimate", "exact"),
                              [(res.n, res.method, res.value, res.error_estimate, res.exact)]))
    else:
        _emit_json(args, res.to_dict())


def cmd_bpve(args) -> None:
    if args.action == "growth-rate":
        rep = branching.growth_rate_condition(_ints(args.alphas), args.horizon, args.margin)
        _emit_json(args, rep.to_dict())
        return
    g = parse_growth(args.growth)
    if args.action == "check":
        rep = branching.check_supercritical(g, args.n, args.horizon)
        _emit_json(args, rep.to_dict())
    elif args.action == "mean":
        out = {"j": args.j, "n": args.n, "mu": branching.block_mean_offspring(g, args.j, args.n),
               "mu_exact": branching.block_mean_exact(g, args.j, args.n)}
        if args.trials:
            s = branching.block_offspring_samples(g, args.j, args.n, args.trials, args.seed)
            out.update(samples=args.trials, mc_mean=float(s.mean()),
                       mc_stderr=float(s.std(ddof=1) / len(s) ** 0.5) if len(s) > 1 else None)
        _emit_json(args, out)
    else:
        proc = branching.BlockProcess(g, args.n, args.mode)
        rows = branching.bpve_survival_estimate(proc, args.generations, args.trials,
                                                _cap(args.cap), args.seed)
        if args.format == "json":
            _emit_json(args, {"n": args.n, "mode": args.mode, "growth": g.to_dict(),
                              "rows": [r.__dict__ for r in rows]})
        else:
            _emit(args, _csv_text(branching.SurvivalRow.CSV_HEADER, (r.row() for r in rows)))


def cmd_records(args) -> None:
    if args.coupling is not None:
        rows = records.coupling_report(args.coupling, args.editions)
        _emit_json(args, [r.to_dict() for r in rows])
        return
    if args.trials == 0 and not args.exact:
        raise ConfigError("records needs --trials > 0 or --exact")
    config = records.RecordModelConfig.from_spec(args.alphas, args.editions, args.trials, args.seed)
    est = records.perfect_record_prob(config, exact=args.exact, method=args.sampler)
    if args.format == "json":
        _emit_json(args, {"alphas": list(config.alphas), "rows": [e.to_dict() for e in est]})
    else:
        _emit(args, _csv_text(records.RecordEstimate.CSV_HEADER, (e.row() for e in est)))


def cmd_varyenv(args) -> None:
    schedule = envmod.parse_env(args.env)
    if args.action == "check":
        rep = envmod.sufcond_check(args.d, schedule, args.n, args.horizon, args.margin)
        _emit_json(args, {**rep.to_dict(), "env": schedule.to_dict()})
    elif args.action == "chain":
        prod = envmod.chain_product(schedule, args.n)
        ex = exact.varyenv_chain_exact(schedule, args.n)
        _emit_json(args, {"env": schedule.to_dict(), "n": args.n, "product": prod,
                          "exact": float(ex), "exact_rational": ex, "gap": float(ex) - prod,
                          "index_offset": schedule.index_offset})
    else:
        from .tree import Homogeneous
        config = _trial_config(args, Homogeneous(args.d), _require_depth(args), schedule)
        _level_table(args, config, args.trials)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int, default=None)
    common.add_argument("--depth", type=int, default=None)
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    common.add_argument("--log-level", default="WARNING")

    sim_opts = argparse.ArgumentParser(add_help=False)
    sim_opts.add_argument("--root", choices=sim.ROOT_MODES, default="random")
    sim_opts.add_argument("--cap", type=int, default=100_000, help="frontier cap; 0 disables")

    p = argparse.ArgumentParser(prog="accperc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common, sim_opts], help="per-level P(Lambda_n) estimates")
    s.add_argument("--growth", required=True, help='e.g. \'{"kind":"factorial"}\'')
    s.add_argument("--env", default=None, help="optional fitness floor schedule (JSON)")
    s.set_defaults(func=cmd_simulate, default_format="csv", default_trials=10_000)

    s = sub.add_parser("phase", parents=[common, sim_opts], help="sweep alpha for ceil((i+1)alpha) trees")
    s.add_argument("--alphas", required=True, help="comma-separated alpha grid")
    s.add_argument("--checkpoints", default=None, help="comma-separated depths (default: --depth)")
    s.set_defaults(func=cmd_phase, default_format="csv", default_trials=1_000)

    s = sub.add_parser("exact", parents=[common], help="exact/quadrature P(Lambda_n)")
    s.add_argument("--growth", required=True)
    s.add_argument("--root", choices=sim.ROOT_MODES, default="random")
    s.add_argument("--method", choices=exact.METHODS, default="auto")
    s.add_argument("--degree-cap", type=int, default=256)
    s.add_argument("--tol", type=float, default=1e-10)
    s.set_defaults(func=cmd_exact, default_format="json", default_trials=0)

    s = sub.add_parser("bpve", parents=[common], help="embedded block branching process")
    s.add_argument("action", choices=("survive", "check", "mean", "growth-rate"))
    s.add_argument("--growth", default='{"kind":"linear_ceil","alpha":2.0}')
    s.add_argument("--n", type=int, default=2, help="block length")
    s.add_argument("--j", type=int, default=0, help="generation (mean)")
    s.add_argument("--generations", type=int, default=10)
    s.add_argument("--mode", choices=branching.MODES, default="fresh_root")
    s.add_argument("--cap", type=int, default=100_000, help="population cap; 0 disables")
    s.add_argument("--horizon", type=int, default=None)
    s.add_argument("--margin", type=float, default=1e-6)
    s.add_argument("--alphas", default="2", help="growth-rate: comma-separated alpha_i")
    s.set_defaults(func=cmd_bpve, default_format="json", default_trials=0)

    s = sub.add_parser("records", parents=[common], help="F^alpha record model")
    s.add_argument("--alphas", default="uniform",
                   help="uniform | linear_ceil:A | tree:A | explicit:1,3,4")
    s.add_argument("--editions", type=int, required=True)
    s.add_argument("--exact", action="store_true", help="include exact probabilities")
    s.add_argument("--sampler", choices=("inverse", "max"), default="inverse")
    s.add_argument("--coupling", type=float, default=None, metavar="ALPHA",
                   help="report record chain vs P(Lambda) on the ceil((i+1)ALPHA) tree")
    s.set_defaults(func=cmd_records, default_format="csv", default_trials=0)

    s = sub.add_parser("varyenv", parents=[common, sim_opts], help="homogeneous trees with fitness floors")
    s.add_argument("action", choices=("check", "chain", "simulate"))
    s.add_argument("--env", required=True)
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--horizon", type=int, default=100)
    s.add_argument("--margin", type=float, default=1e-6)
    s.set_defaults(func=cmd_varyenv, default_format="json", default_trials=1_000)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    if args.format is None:
        args.format = args.default_format
        if args.command == "varyenv" and args.action == "simulate":
            args.format = "csv"
        if args.command == "bpve" and args.action == "survive":
            args.format = "csv"
    if args.trials is None:
        args.trials = args.default_trials
    if args.command == "bpve" and args.action == "survive" and args.trials == 0:
        args.trials = 1_000
    if args.command == "bpve" and args.horizon is None:
        args.horizon = None if args.action == "growth-rate" else 20
    try:
        args.func(args)
    except AccPercError as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
