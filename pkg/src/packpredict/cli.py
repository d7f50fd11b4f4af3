"""Command-line front end.

Subcommands:

  run        load a pack CSV, run algorithms, emit a report
  synth      generate a synthetic stream, run algorithms, emit a report
  adversary  play the mix-loss adversary against a learner
  audit      re-check the guarantees recorded in a result JSON file

Exit codes: 0 success, 1 usage or data errors, 2 a guarantee check failed
(the guarantees hold mathematically for all valid inputs, so a failure is
the strongest possible bug signal).  Output is deterministic for fixed
inputs and seeds.
"""

from __future__ import annotations

import argparse
import json
import re
import sys

from .bounds import SLACK_TOL, audit_run
from .games import GameSpec, max_mixable_eta
from .harness import (
    ALGORITHM_CHOICES,
    DatasetSpec,
    SyntheticConfig,
    emit_report,
    generate_synthetic_stream,
    load_pack_csv,
    rescale_stream,
    result_from_json,
    run_experiment,
    write_pack_csv,
)
from .mixloss import (
    AdversaryNature,
    ExponentialWeightsLearner,
    UniformLearner,
    ZeroNature,
    run_mixloss_game,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BOUND_FAILED = 2


class _CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so main() owns the exit code."""

    def error(self, message):
        raise _CliError(f"{self.prog}: error: {message}")


def _add_output_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("json", "csv", "table"), default="table")
    p.add_argument("--out", default=None,
                   help="write the report here instead of stdout")


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algorithms", default="all",
                   help="comma-separated subset of "
                        f"{','.join(ALGORITHM_CHOICES)}, or 'all' (default)")
    p.add_argument("--prior", default="uniform",
                   help="'uniform' or comma-separated weights, one per expert")
    p.add_argument("--every-prefix", action="store_true",
                   help="check guarantees after every trial, not just the last")
    p.add_argument("--shuffles", type=int, default=0,
                   help="also measure parallel-copies loss over this many "
                        "within-pack shuffles")
    _add_output_options(p)


_RANGE = re.compile(r"^(.*?)(\d+)\.\.(?:(.*?)(\d+))$")


def _expand_columns(raw: str):
    """Comma-separated column names, with e1..e12 range shorthand."""
    cols = []
    for part in (s.strip() for s in raw.split(",")):
        if not part:
            continue
        m = _RANGE.match(part)
        if m and (m.group(3) == "" or m.group(3) == m.group(1)):
            prefix, lo, hi = m.group(1), int(m.group(2)), int(m.group(4))
            if hi < lo:
                raise _CliError(f"bad column range {part!r}")
            cols.extend(f"{prefix}{i}" for i in range(lo, hi + 1))
        else:
            cols.append(part)
    if not cols:
        raise _CliError("no expert columns given")
    return tuple(cols)


def _parse_algorithms(raw: str):
    names = [s.strip() for s in raw.split(",") if s.strip()]
    if not names:
        raise _CliError("empty --algorithms")
    if names == ["all"]:
        return "all"
    return names


def _parse_prior(raw: str, num_experts: int):
    if raw == "uniform":
        return None
    try:
        weights = [float(s) for s in raw.split(",") if s.strip()]
    except ValueError:
        raise _CliError(f"bad --prior {raw!r}") from None
    if len(weights) != num_experts:
        raise _CliError(
            f"--prior has {len(weights)} weights for {num_experts} experts"
        )
    return weights


def _warn_eta(game: GameSpec) -> None:
    top = max_mixable_eta(game.lower, game.upper)
    if game.eta > top * (1 + 1e-12):
        print(
            f"warning: eta={game.eta:g} exceeds {top:g}, the largest rate "
            f"known safe for [{game.lower:g}, {game.upper:g}]; "
            f"guarantees may fail",
            file=sys.stderr,
        )


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _cmd_run(args) -> int:
    expert_cols = _expand_columns(args.experts)
    spec = DatasetSpec(
        path=args.data,
        timestamp_col=args.timestamp_col,
        target_col=args.target,
        expert_cols=expert_cols,
        order_col=args.order_col,
        clip_lower=args.lower,
        clip_upper=args.upper,
        calibration_packs=args.calibration_packs,
        eta=args.eta,
        c=args.c,
    )
    stream, game = load_pack_csv(spec)
    _warn_eta(game)
    result = run_experiment(
        stream, game,
        algorithms=_parse_algorithms(args.algorithms),
        prior=_parse_prior(args.prior, stream.num_experts),
        shuffles=args.shuffles,
        shuffle_seed=args.seed,
        every_prefix=args.every_prefix,
    )
    _emit(emit_report(result, args.format), args.out)
    return EXIT_OK if result.passed else EXIT_BOUND_FAILED


def _cmd_synth(args) -> int:
    config = SyntheticConfig(
        num_experts=args.experts,
        num_trials=args.trials,
        pack_size_min=args.min_pack,
        pack_size_max=args.max_pack,
        drift_period=args.drift_period,
        noise=args.noise,
        seed=args.seed,
    )
    stream, game = generate_synthetic_stream(config)
    if (args.lower, args.upper) != (0.0, 1.0):
        stream = rescale_stream(stream, args.lower, args.upper)
        game = GameSpec.for_interval(args.lower, args.upper)
    if args.eta is not None or args.c != 1.0:
        game = GameSpec(game.lower, game.upper,
                        args.eta if args.eta is not None else game.eta, args.c)
    _warn_eta(game)
    if args.emit_data is not None:
        write_pack_csv(stream, args.emit_data)
    result = run_experiment(
        stream, game,
        algorithms=_parse_algorithms(args.algorithms),
        prior=_parse_prior(args.prior, stream.num_experts),
        shuffles=args.shuffles,
        shuffle_seed=args.seed,
        every_prefix=args.every_prefix,
    )
    _emit(emit_report(result, args.format), args.out)
    return EXIT_OK if result.passed else EXIT_BOUND_FAILED


def _cmd_adversary(args) -> int:
    try:
        pack_sizes = [int(s) for s in args.packs.split(",") if s.strip()]
    except ValueError:
        raise _CliError(f"bad --packs {args.packs!r}") from None
    if not pack_sizes or any(k < 1 for k in pack_sizes):
        raise _CliError("--packs needs positive integers")
    learner = (UniformLearner(args.experts) if args.learner == "uniform"
               else ExponentialWeightsLearner(args.experts))
    nature = ZeroNature() if args.nature == "zero" else AdversaryNature()
    trials = run_mixloss_game(learner, nature, pack_sizes)

    adversarial = args.nature == "adversary"
    forced = all(
        t.regret_increment >= t.lower_bound_increment - SLACK_TOL for t in trials
    ) if adversarial else True
    total_regret = trials[-1].cumulative_regret if trials else 0.0
    total_bound = sum(t.lower_bound_increment for t in trials)

    if args.format == "json":
        payload = {
            "schema_version": 1,
            "num_experts": args.experts,
            "learner": args.learner,
            "nature": args.nature,
            "trials": [t.to_dict() for t in trials],
            "total_regret": total_regret,
            "total_lower_bound": total_bound,
            "forced": forced,
        }
        _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    else:
        lines = [
            f"mix-loss game: {args.experts} experts, learner={args.learner}, "
            f"nature={args.nature}",
            f"{'trial':>5} {'K':>3} {'mix loss':>12} {'regret +=':>12} "
            f"{'K*ln(N)':>12} {'cum regret':>12}",
        ]
        for t in trials:
            lines.append(
                f"{t.trial_index:>5} {t.pack_size:>3} {t.mix_loss:>12.6f} "
                f"{t.regret_increment:>12.6f} {t.lower_bound_increment:>12.6f} "
                f"{t.cumulative_regret:>12.6f}"
            )
        lines.append(
            f"total regret {total_regret:.6f} vs forced lower bound "
            f"{total_bound:.6f} (ln(N) per item)"
        )
        if adversarial:
            lines.append("per-pack lower bound " +
                         ("held in every pack" if forced else "VIOLATED"))
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if forced else EXIT_BOUND_FAILED


def _cmd_audit(args) -> int:
    try:
        with open(args.result) as fh:
            result = result_from_json(fh.read())
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as e:
        print(f"error: cannot read result file {args.result!r}: {e}",
              file=sys.stderr)
        return EXIT_ERROR

    all_ok = True
    lines = []
    for alg in result.algorithms:
        for stored in alg.reports:
            prefixes = {e.prefix for e in stored.entries}
            every_prefix = args.every_prefix or len(prefixes) > 1
            fresh = audit_run(
                alg.records, stored.algorithm, result.game, result.prior,
                declared_pack_size=alg.params.get("pack_size"),
                every_prefix=every_prefix,
            )
            ok = fresh.passed
            all_ok = all_ok and ok
            ms = fresh.min_slack
            lines.append(
                f"{alg.name:<18} {stored.algorithm:<22} {fresh.metric:<8} "
                f"checks={len(fresh.entries):<6} "
                f"min slack={'n/a' if ms is None else format(ms, '.4e'):>12} "
                f"{'ok' if ok else 'FAIL'}"
            )
            if stored.passed != ok:
                lines.append(
                    f"  note: stored report said "
                    f"{'ok' if stored.passed else 'FAIL'}, recomputation says "
                    f"{'ok' if ok else 'FAIL'}"
                )
    lines.append("all guarantees hold" if all_ok else "guarantee VIOLATED")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if all_ok else EXIT_BOUND_FAILED


def build_parser() -> _Parser:
    parser = _Parser(prog="packpredict",
                     description="Prediction with expert advice over packs, "
                                 "with guarantee auditing.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run algorithms on a pack CSV")
    p_run.add_argument("--data", required=True, help="CSV with one row per item")
    p_run.add_argument("--timestamp-col", default="month",
                       help="column whose YYYY-MM prefix defines the pack")
    p_run.add_argument("--target", required=True, help="outcome column")
    p_run.add_argument("--experts", required=True,
                       help="expert prediction columns: comma-separated, "
                            "ranges like e1..e12 allowed")
    p_run.add_argument("--order-col", default=None,
                       help="numeric column fixing within-pack order")
    p_run.add_argument("--lower", type=float, default=None,
                       help="game interval lower end (values are clipped)")
    p_run.add_argument("--upper", type=float, default=None)
    p_run.add_argument("--calibration-packs", type=int, default=None,
                       help="derive the interval from this many leading packs")
    p_run.add_argument("--eta", type=float, default=None,
                       help="learning rate (default: largest safe rate)")
    p_run.add_argument("--c", type=float, default=1.0)
    p_run.add_argument("--seed", type=int, default=0,
                       help="seed for the shuffle study")
    _add_run_options(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_synth = sub.add_parser("synth", help="run algorithms on a synthetic stream")
    p_synth.add_argument("--experts", type=int, default=8)
    p_synth.add_argument("--trials", type=int, default=40)
    p_synth.add_argument("--min-pack", type=int, default=1)
    p_synth.add_argument("--max-pack", type=int, default=7)
    p_synth.add_argument("--drift-period", type=int, default=0,
                         help="rotate the sharp expert every this many items")
    p_synth.add_argument("--noise", type=float, default=0.05)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--lower", type=float, default=0.0,
                         help="rescale the generated stream to this interval")
    p_synth.add_argument("--upper", type=float, default=1.0)
    p_synth.add_argument("--eta", type=float, default=None)
    p_synth.add_argument("--c", type=float, default=1.0)
    p_synth.add_argument("--emit-data", default=None,
                         help="also write the generated stream to this CSV")
    _add_run_options(p_synth)
    p_synth.set_defaults(func=_cmd_synth)

    p_adv = sub.add_parser("adversary",
                           help="mix-loss game against the K*ln(N) adversary")
    p_adv.add_argument("--experts", type=int, default=3)
    p_adv.add_argument("--packs", default="1,2,3,4,5",
                       help="comma-separated pack sizes, one per trial")
    p_adv.add_argument("--learner", choices=("uniform", "exp-weights"),
                       default="uniform")
    p_adv.add_argument("--nature", choices=("adversary", "zero"),
                       default="adversary")
    p_adv.add_argument("--format", choices=("json", "table"), default="table")
    p_adv.add_argument("--out", default=None)
    p_adv.set_defaults(func=_cmd_adversary)

    p_audit = sub.add_parser("audit",
                             help="re-check guarantees in a result JSON file")
    p_audit.add_argument("result", help="JSON file produced by run/synth")
    p_audit.add_argument("--every-prefix", action="store_true")
    p_audit.add_argument("--out", default=None)
    p_audit.set_defaults(func=_cmd_audit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _CliError as e:
        print(str(e), file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
