"""Command-line entry point: ``ctxqkd <command> [options]``.

Commands print a short human summary on stdout. With ``--out DIR`` they
also write CSV/JSON plot data. Exit status is 0 on success and 2 on any
validation failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import contextuality as ctx
from . import protocol, randomness, security, sources
from . import linalg3 as la
from . import outputs

# S2 at which the measured witness drops to the classical bound (32 - 29.8238).
CRITICAL_S2 = 2.1762


class UsageError(ValueError):
    pass


def _out_dir(args) -> Path | None:
    if args.out is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _params(args, *names) -> dict:
    return {n: getattr(args, n) for n in names}


def _resolve_input(name: str) -> Path:
    path = Path(name)
    if path.exists():
        return path
    bundled = ctx.bundled_path(name)
    if bundled.exists():
        return bundled
    raise UsageError(f"no such correlation file: {name}")


def _verdict(report: ctx.WitnessReport) -> str:
    return "VIOLATION" if report.violation else "NO VIOLATION"


# --------------------------------------------------------------------------


def cmd_witness(args) -> int:
    path = _resolve_input(args.input)
    table = ctx.read_correlation_csv(path)
    try:
        if table.counts is not None:
            report = protocol.estimate_witness_errors(table, args.resamples, args.seed, args.method)
        else:
            report = ctx.evaluate_witness(table)
    except ctx.MissingEntriesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    err = report.errors or {}
    pm = lambda k: f" +/- {err[k]:.4f}" if k in err else ""
    print(f"S1 = {report.S1:.4f}{pm('S1')}")
    print(f"S2 = {report.S2:.4f}{pm('S2')}")
    print(f"S  = {report.S:.4f}{pm('S')}   (S/35 = {report.S_normalized:.6f})")
    print(f"classical bound {report.classical_bound}: {_verdict(report)}")
    out = _out_dir(args)
    if out:
        manifest = outputs.make_manifest(
            "witness", _params(args, "resamples", "method"), args.seed, [path], args.timestamp
        )
        outputs.write_json(out / "witness.json", manifest, report.to_dict())
    return 0


def _source_from_args(args) -> sources.SourceModel:
    if args.source == "qd":
        if args.mu is not None:
            raise UsageError("--mu applies to --source coherent only")
        if args.g2 is not None and args.p2 is not None:
            raise UsageError("give at most one of --g2 and --p2")
        p2 = sources.two_photon_prob_for_g2(args.g2) if args.g2 is not None else (args.p2 or 0.0)
        return sources.SourceModel.single_photon(p2, dark_count_prob=args.dark)
    if args.g2 is not None or args.p2 is not None:
        raise UsageError("--g2/--p2 apply to --source qd only")
    if args.mu is None:
        raise UsageError("--source coherent needs --mu")
    return sources.SourceModel.coherent(args.mu, dark_count_prob=args.dark)


def _strategy_from_args(name: str) -> ctx.Strategy:
    if name == "ideal":
        return ctx.ideal_strategy()
    return security.best_sm_attack_strategy()


def cmd_simulate(args) -> int:
    if args.rounds < 1:
        raise UsageError("--rounds must be >= 1")
    source = _source_from_args(args)
    strategy = _strategy_from_args(args.strategy)
    config = protocol.ProtocolConfig(args.rounds, args.seed, strategy, source, args.verification_fraction)
    table = ctx.born_correlations(strategy) if args.q == 0 else security.bob_table(strategy, args.q)
    rounds = protocol.run_rounds(config, sources.degrade_correlations(table, source))
    result = protocol.sift(rounds, ctx.GRAPH, args.verification_fraction, args.seed, args.resamples)
    summary = result.summary()
    w = result.witness_estimate
    print(f"rounds {summary['rounds']}: {summary['key_rounds']} key, "
          f"{summary['verification_rounds']} verification, {summary['discarded_rounds']} discarded")
    print(f"empirical P_k = {result.empirical_Pk:.5f} (30/144 = {30 / 144:.5f})")
    print(f"key agreement = {result.agreement_rate:.6f}")
    print(f"witness estimate S1 = {w.S1:.4f}, S2 = {w.S2:.4f}, S = {w.S:.4f}: {_verdict(w)}")
    out = _out_dir(args)
    if out:
        params = _params(args, "rounds", "source", "mu", "g2", "p2", "dark", "strategy", "q",
                         "verification_fraction", "resamples")
        manifest = outputs.make_manifest("simulate", params, args.seed, timestamp=args.timestamp)
        phase_names = {int(p): p.name.lower() for p in protocol.Phase}
        outputs.write_csv(
            out / "rounds.csv", manifest, ["x", "y", "z", "phase"],
            zip(rounds.x.tolist(), rounds.y.tolist(), rounds.z.tolist(),
                (phase_names[int(p)] for p in result.phase)),
        )
        outputs.write_key(out / "alice_key.hex", manifest, protocol.pack_bits_hex(result.alice_key), len(result.alice_key))
        outputs.write_key(out / "bob_key.hex", manifest, protocol.pack_bits_hex(result.bob_key), len(result.bob_key))
        outputs.write_json(out / "result.json", manifest, summary)
    return 0


def _grid(args) -> np.ndarray:
    if args.mu_list:
        return np.array([float(v) for v in args.mu_list.split(",")])
    return np.round(np.linspace(args.mu_min, args.mu_max, args.mu_num), 12)


def cmd_sweep_mu(args) -> int:
    base = ctx.load_sm_table() if args.base == "sm" else ctx.born_correlations(ctx.ideal_strategy())
    template = sources.SourceModel(kind="coherent", dark_count_prob=args.dark, n_max=args.n_max)
    points = sources.sweep_mu(base, _grid(args), template)
    try:
        crossing = sources.mu_crossing(base, args.target_s2, template)
    except ValueError:
        crossing = None
    for p in points[:: max(1, len(points) // 10)]:
        print(f"mu = {p.mu:.4f}  S2 = {p.S2:.4f}  S = {p.S:.4f}")
    print(f"S2 falls below {args.target_s2} at mu = {crossing:.4f}" if crossing else
          f"S2 never crosses {args.target_s2}")
    out = _out_dir(args)
    if out:
        params = _params(args, "base", "dark", "n_max", "mu_min", "mu_max", "mu_num", "mu_list", "target_s2")
        manifest = outputs.make_manifest("sweep-mu", params, timestamp=args.timestamp)
        outputs.write_csv(out / "sweep_mu.csv", manifest, ["mu", "S1", "S2", "S"],
                          [(p.mu, p.S1, p.S2, p.S) for p in points])
        outputs.write_json(out / "sweep_mu.json", manifest, {"target_S2": args.target_s2, "mu_crossing": crossing})
    return 0


def _coloring(name: str):
    return security.SM_COLORING if name == "sm" else None


def cmd_attack(args) -> int:
    if args.transcribed:
        strategy = security.best_sm_attack_strategy(args.q)
        coloring = security.SM_COLORING
        converged = None
    else:
        res = security.seesaw_max_S(args.q, _coloring(args.coloring), restarts=args.restarts,
                                    max_iter=args.max_iter, seed=args.seed)
        strategy, coloring, converged = res.strategy, res.coloring, res.converged
    report = security.evaluate_attack(strategy, security.AttackModel(args.q, coloring))
    print(f"q = {args.q}: S = {report.S_achieved:.4f} (S1 = {report.witness.S1:.4f}, S2 = {report.witness.S2:.4f})")
    print(f"I(A:B) = {report.I_AB:.4f}, I(A:E) = {report.I_AE:.4f}, r = {report.r:.4f}")
    print(f"overall key rate = {report.overall:.4f}")
    out = _out_dir(args)
    if out:
        params = _params(args, "q", "coloring", "restarts", "max_iter", "transcribed")
        manifest = outputs.make_manifest("attack", params, args.seed, timestamp=args.timestamp)
        outputs.write_json(out / "attack.json", manifest, {
            "report": report.to_dict(),
            "coloring": {str(k): v for k, v in sorted(coloring.items())},
            "converged": converged,
            "strategy": strategy.to_dict(),
        })
    return 0


def cmd_keyrate(args) -> int:
    grid = (np.array([float(v) for v in args.q_list.split(",")]) if args.q_list
            else security.default_q_grid(args.q_step))
    points = security.key_rate_vs_S(grid, _coloring(args.coloring), restarts=args.restarts,
                                    max_iter=args.max_iter, seed=args.seed)
    positive = [p for p in points if p.overall_rate > 0]
    for p in points[:: max(1, len(points) // 10)]:
        print(f"q = {p.q:.2f}  S_max = {p.S_max:.4f}  rate = {max(p.overall_rate, 0.0):.4f}"
              + ("  (negative, clamped)" if p.overall_rate < 0 else ""))
    if positive:
        print(f"positive key for S >= {min(p.S_max for p in positive):.4f}")
    out = _out_dir(args)
    if out:
        params = _params(args, "q_step", "q_list", "coloring", "restarts", "max_iter")
        manifest = outputs.make_manifest("keyrate", params, args.seed, timestamp=args.timestamp)
        outputs.write_csv(
            out / "keyrate.csv", manifest,
            ["q", "S_max", "I_AB", "I_AE", "rate_per_key_round", "overall_rate"],
            [(p.q, p.S_max, p.I_AB, p.I_AE, p.rate_per_key_round, p.overall_rate) for p in points],
        )
    return 0


def cmd_randomness(args) -> int:
    report = randomness.randomness_bounds(args.s1, args.s2, search=not args.no_search, seed=args.seed)
    if report.ideal_R is not None:
        print(f"ideal-case p* = {report.ideal_pstar:.4f}, R = {report.ideal_R:.4f} bits")
    for note in report.notes:
        print(note)
    if report.achievable_pstar is not None:
        print(f"achievable p* >= {report.achievable_pstar:.4f}")
    print("certified" if report.certified else "no certified randomness")
    out = _out_dir(args)
    if out:
        manifest = outputs.make_manifest("randomness", _params(args, "s1", "s2", "no_search"), args.seed,
                                         timestamp=args.timestamp)
        outputs.write_json(out / "randomness.json", manifest, report.to_dict())
    return 0


def cmd_classical_bound(args) -> int:
    opt = ctx.classical_optimum()
    print(opt.total)
    out = _out_dir(args)
    if out:
        manifest = outputs.make_manifest("classical-bound", {}, timestamp=args.timestamp)
        outputs.write_json(out / "classical_bound.json", manifest, {
            "bound": opt.total, "S1": opt.S1, "S2": opt.S2,
            "outcome0_sets": {str(y): [m for m in range(3) if opt.masks[y - 1] >> m & 1] for y in ctx.MEASUREMENTS},
            "messages": {str(x): opt.messages[x] for x in ctx.PREPARATIONS},
        })
    return 0


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="directory for CSV/JSON output")
    common.add_argument("--timestamp", help="manifest timestamp (default: SOURCE_DATE_EPOCH or now)")

    p = argparse.ArgumentParser(prog="ctxqkd", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("witness", parents=[common], help="evaluate S1, S2, S from a correlation CSV")
    s.add_argument("input", help="CSV path or bundled name (sm, ideal, uniform)")
    s.add_argument("--resamples", type=int, default=1000)
    s.add_argument("--method", choices=["poisson", "multinomial"], default="poisson")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_witness)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo protocol run")
    s.add_argument("--rounds", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--source", choices=["qd", "coherent"], default="qd")
    s.add_argument("--mu", type=float)
    s.add_argument("--g2", type=float)
    s.add_argument("--p2", type=float)
    s.add_argument("--dark", type=float, default=0.0)
    s.add_argument("--strategy", choices=["ideal", "sm"], default="ideal")
    s.add_argument("--q", type=float, default=0.0, help="cloning-attack probability")
    s.add_argument("--verification-fraction", type=float, default=0.5)
    s.add_argument("--resamples", type=int, default=200)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep-mu", parents=[common], help="witness against coherent mean photon number")
    s.add_argument("--base", choices=["sm", "ideal"], default="sm",
                   help="single-photon correlations to degrade (measured or ideal)")
    s.add_argument("--mu-min", type=float, default=0.01)
    s.add_argument("--mu-max", type=float, default=1.0)
    s.add_argument("--mu-num", type=int, default=100)
    s.add_argument("--mu-list", help="comma-separated grid, overrides min/max/num")
    s.add_argument("--dark", type=float, default=0.0)
    s.add_argument("--n-max", type=int, default=30)
    s.add_argument("--target-s2", type=float, default=CRITICAL_S2)
    s.set_defaults(func=cmd_sweep_mu)

    for name, func, helptext in (
        ("attack", cmd_attack, "SeeSaw attack at one q"),
        ("keyrate", cmd_keyrate, "key rate against S over a q grid"),
    ):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--coloring", choices=["sm", "all"], default="sm")
        s.add_argument("--restarts", type=int, default=20)
        s.add_argument("--max-iter", type=int, default=500)
        s.add_argument("--seed", type=int, default=0)
        s.set_defaults(func=func)
        if name == "attack":
            s.add_argument("--q", type=float, default=0.54)
            s.add_argument("--transcribed", action="store_true",
                           help="evaluate the printed q=0.54 strategy instead of optimising")
        else:
            s.add_argument("--q-step", type=float, default=0.01)
            s.add_argument("--q-list", help="comma-separated q values")

    s = sub.add_parser("randomness", parents=[common], help="randomness bounds for (S1, S2)")
    s.add_argument("--S1", dest="s1", type=float, required=True)
    s.add_argument("--S2", dest="s2", type=float, required=True)
    s.add_argument("--no-search", action="store_true")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_randomness)

    s = sub.add_parser("classical-bound", parents=[common], help="exhaustive classical maximum of S")
    s.set_defaults(func=cmd_classical_bound)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, la.ValidationError, protocol.EmptyKeyPoolError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
