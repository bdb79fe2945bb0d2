"""Command-line entry point.

Subcommands
-----------
sweep     run the full weather/distance sweep and write a CSV
policy    solve the RF time-sharing multiplier for every sweep point
capacity  rate triple of one seeded fading block
config    print the effective configuration in canonical form

Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 the
multiplier iteration did not converge.
"""

import argparse
import sys

from .allocation import ConvergenceError, harmonic_steps, solve_lambda_from_samples
from .capacity import RateTriple, rates_for_block, sample_fso_rates, sample_rf_rates
from .channels import WEATHER, derive_link_budget, sample_block
from .config import ConfigError, ExperimentConfig, dump_config, load_config
from .experiment import FSO, RF, SOLVE, emit_csv, run_sweep, stream_key
from .numerics import DomainError, make_rng

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_CONVERGENCE = 0, 1, 2, 3

# Spawn-key purpose of the single-block draw of ``capacity``.
CAPACITY_STREAM = 2


def _seed(text):
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid count {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hybrid-relay",
        description="Throughput-optimal RF time sharing for mixed RF / hybrid RF-FSO relaying.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML experiment file (defaults if omitted)")
    common.add_argument("--seed", type=_seed, help="master random seed (unsigned 64-bit)")
    common.add_argument("--blocks", type=_positive_int, metavar="B",
                        help="simulated fading blocks per sweep point")
    common.add_argument("--samples", type=_positive_int, metavar="N",
                        help="Monte Carlo samples for the multiplier")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", parents=[common], help="run the weather/distance sweep")
    p.add_argument("--out", metavar="PATH", help="CSV output path (overrides [sweep] output)")
    p.add_argument("--workers", type=_positive_int, default=1,
                   help="worker processes, one distance each (default 1)")
    p.add_argument("--quiet", action="store_true", help="do not print the summary table")

    sub.add_parser("policy", parents=[common], help="solve the multiplier for each sweep point")

    p = sub.add_parser("capacity", parents=[common], help="rate triple of one seeded block")
    p.add_argument("--weather", choices=sorted(WEATHER), help="named weather condition "
                   "(default: first sweep point)")
    p.add_argument("--distance", type=float, metavar="M",
                   help="relay-destination distance in metres (default: first sweep distance)")

    sub.add_parser("config", parents=[common], help="print the canonical configuration")
    return parser


def _load(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    return cfg.with_overrides(seed=args.seed, blocks=args.blocks, samples=args.samples,
                              output=getattr(args, "out", None))


def _fmt(value, spec):
    return "-" if value is None else format(value, spec)


def cmd_sweep(cfg, args):
    rows = run_sweep(cfg, workers=args.workers)
    emit_csv(rows, cfg.output)
    if not args.quiet:
        print(f"{'kappa dB/m':>11} {'d m':>7} {'protocol':>16} {'lambda*':>8} "
              f"{'tau_upp b/blk':>14} {'tau_sim b/blk':>14} {'Mbit/s':>8}")
        for r in rows:
            print(f"{r.kappa:11.4g} {r.d:7.0f} {r.protocol:>16} {_fmt(r.lambda_star, '8.4f'):>8} "
                  f"{r.tau_upp_bits_per_block:14.1f} {r.tau_sim_bits_per_block:14.1f} "
                  f"{r.tau_norm_bits_per_sec / 1e6:8.3f}")
    print(f"wrote {len(rows)} rows to {cfg.output}")


def cmd_policy(cfg, args):
    base = cfg.base
    print(f"{'kappa dB/m':>11} {'cn2':>9} {'d m':>7} {'case':>15} {'lambda*':>8} "
          f"{'tau_upp b/blk':>14} {'iters':>6}")
    for d in cfg.distances:
        ref = base.with_point(*cfg.weather[0], d)
        rng = make_rng(cfg.seed, *stream_key(SOLVE, d, RF))
        c1, c2 = sample_rf_rates(ref, derive_link_budget(ref), cfg.access_mode, rng,
                                 base.mc_samples)
        for kappa, cn2 in cfg.weather:
            params = base.with_point(kappa, cn2, d)
            budget = derive_link_budget(params)
            cf = sample_fso_rates(params, budget, make_rng(cfg.seed, *stream_key(SOLVE, d, FSO)),
                                  base.mc_samples)
            try:
                res = solve_lambda_from_samples(
                    RateTriple(c1, c2, cf), budget.M, base.symbols_per_block,
                    step_schedule=harmonic_steps(0.5 / params.total_user_rate),
                    tol=cfg.tol, max_iters=cfg.max_iters)
            except ConvergenceError as exc:
                raise ConvergenceError(f"sweep point kappa={kappa!r} dB/m, d={d!r} m: {exc}",
                                       exc.residual, exc.lam, exc.iterations) from None
            print(f"{kappa:11.4g} {cn2:9.3g} {d:7.0f} {res.case.value:>15} "
                  f"{res.lambda_star:8.4f} {res.tau_upp_per_block:14.1f} {res.iterations:6d}")


def cmd_capacity(cfg, args):
    kappa, cn2 = WEATHER[args.weather] if args.weather else cfg.weather[0]
    d = cfg.distances[0] if args.distance is None else args.distance
    try:
        params = cfg.base.with_point(kappa, cn2, d)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    budget = derive_link_budget(params)
    rng = make_rng(cfg.seed, CAPACITY_STREAM, int(round(d * 1000.0)))
    block = sample_block(params, budget, rng)
    c1, c2, cf = rates_for_block(block, params, budget, cfg.access_mode)
    print(f"kappa = {kappa!r} dB/m, cn2 = {cn2!r}, d = {d!r} m, seed = {cfg.seed}")
    print(f"c1    = {c1!r} bits/RF symbol")
    print(f"c2    = {c2!r} bits/RF symbol")
    print(f"c_fso = {cf!r} bits/FSO symbol (M = {budget.M})")


def cmd_config(cfg, args):
    sys.stdout.write(dump_config(cfg))


COMMANDS = {"sweep": cmd_sweep, "policy": cmd_policy, "capacity": cmd_capacity,
            "config": cmd_config}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
