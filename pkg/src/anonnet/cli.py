"""Command-line front end: single runs, sweeps, and validators.

Exit codes: 0 property holds / verdict true, 2 verdict false /
counterexample, 3 non-convergence or withheld verdict, 64 usage error,
65 unparseable input file.
"""

from __future__ import annotations

import argparse
import sys

from . import analysis, engine
from .adversary import (
    AdversaryContext,
    AdversaryError,
    DuplicatingAdversary,
    FairMeetAllAdversary,
    RandomConnectedAdversary,
    ReplayAdversary,
    StaticAdversary,
    SymmetricMirrorAdversary,
    line,
    ring,
    star,
    symmetric_tree,
)
from .analysis import VerdictUndefined, lockstep_check, lockstep_holds, verdict
from .broadcast_dynamic import (
    check_high_dynamicity,
    degree_counting,
    expansion_counting,
    high_dynamicity_naming,
    max_degree_seen,
)
from .engine import run, write_trace
from .graphs import (
    DynamicSchedule,
    GraphError,
    HorizonError,
    check_influence_lemma,
    validate_one_interval,
)
from .one_to_each import (
    delegate_naming,
    dynamic_naming,
    fair_naming,
    individual_conversations,
)
from .static_protocols import anonymous_counting, degree_klabeling, leader_eccentricity

EX_FALSE = 2
EX_NOCONV = 3
EX_USAGE = 64
EX_PARSE = 65

# name -> (factory(args), problem tag)
PROTOCOLS = {
    "leader-eccentricity": (lambda a: leader_eccentricity(), "distances"),
    "anonymous-counting": (lambda a: anonymous_counting(), "counting"),
    "degree-klabeling": (lambda a: degree_klabeling(), "degrees"),
    "degree-counting": (
        lambda a: degree_counting(_require(a, "d")),
        "counting-upper-bound",
    ),
    "expansion-counting": (
        lambda a: expansion_counting(_require(a, "e")),
        "counting-upper-bound",
    ),
    "hd-naming": (lambda a: high_dynamicity_naming(), "naming+counting"),
    "fair": (lambda a: fair_naming(), "naming"),
    "delegate": (lambda a: delegate_naming(), "naming"),
    "dynamic-naming": (lambda a: dynamic_naming(), "naming+counting"),
    "individual-conversations": (
        lambda a: individual_conversations(),
        "minimal-naming+counting",
    ),
}


class UsageError(Exception):
    pass


def _require(args, flag):
    val = getattr(args, flag, None)
    if val is None:
        raise UsageError(f"--{flag} is required for this protocol")
    return val


def load_schedule(path) -> DynamicSchedule:
    try:
        with open(path) as fh:
            return DynamicSchedule.from_json(fh.read())
    except (OSError, ValueError, KeyError, TypeError, GraphError) as exc:
        raise SystemExit(_parse_err(f"cannot read schedule {path}: {exc}"))


def _parse_err(msg):
    print(f"error: {msg}", file=sys.stderr)
    return EX_PARSE


def make_adversary(name: str, n, seed, duplicate=False):
    if name.startswith("replay:"):
        sched = load_schedule(name.split(":", 1)[1])
        adv = ReplayAdversary(sched, cycle=True)
    elif name == "static-star":
        adv = StaticAdversary(star(n))
    elif name == "static-line":
        adv = StaticAdversary(line(n))
    elif name == "static-ring":
        adv = StaticAdversary(ring(n))
    elif name == "symmetric-tree":
        if n is None or n < 3 or n % 2 == 0:
            raise UsageError("symmetric-tree needs an odd --n >= 3")
        adv = StaticAdversary(symmetric_tree((n - 1) // 2, 2))
    elif name == "random-connected":
        adv = RandomConnectedAdversary(n, seed)
    elif name == "fair-meet-all":
        adv = FairMeetAllAdversary(n, seed)
    elif name == "mirror":
        if n is None or n < 3 or n % 2 == 0:
            raise UsageError("mirror needs an odd --n >= 3")
        adv = SymmetricMirrorAdversary((n - 1) // 2, "oscillate", seed)
    else:
        raise UsageError(f"unknown adversary {name!r}")
    if duplicate:
        adv = DuplicatingAdversary(adv)
    return adv


def judge(problem: str, result, adversary, args) -> bool:
    """True/False verdict for a finished run; may raise VerdictUndefined."""
    n = result.n
    outs = analysis._outputs(result)
    if problem == "counting":
        return verdict("counting", outs, n)
    if problem == "counting-upper-bound":
        if getattr(args, "d", None) is not None:
            if max_degree_seen(adversary, result.rounds_executed, args.seed) > args.d:
                raise VerdictUndefined("degree bound violated by schedule")
        return verdict("counting-upper-bound", outs, n)
    if problem == "naming":
        return verdict("naming", outs, n)
    if problem in ("naming+counting", "minimal-naming+counting"):
        ids = {u: v[0] for u, v in outs.items()}
        counts = {v[1] for v in outs.values()}
        which = "minimal-naming" if problem.startswith("minimal") else "naming"
        return verdict(which, ids, n) and counts == {n}
    if problem in ("distances", "degrees"):
        ctx_g = adversary.graph(
            1, AdversaryContext(round=1, state_digests=lambda: (), seed=args.seed)
        )
        if problem == "degrees":
            want = {u: ctx_g.degree(u) for u in range(n)}
        else:
            want = _bfs_distances(ctx_g)
        return outs == want
    raise UsageError(f"unknown problem {problem!r}")


def _bfs_distances(g):
    dist = {0: 0}
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in g.neighbors(u):
                if v not in dist:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist


def cmd_run(args) -> int:
    if args.protocol not in PROTOCOLS:
        raise UsageError(f"unknown protocol {args.protocol!r}")
    factory, problem = PROTOCOLS[args.protocol]
    proto = factory(args)
    if args.mode is not None and args.mode != proto.mode:
        raise UsageError(
            f"{args.protocol} runs in {proto.mode} mode, not {args.mode}"
        )
    adv = make_adversary(
        args.adversary, args.n, args.seed, duplicate=(args.protocol == "hd-naming")
    )
    n = args.n if args.n is not None else adv.n
    result = run(
        proto,
        adv,
        n=n,
        seed=args.seed,
        max_rounds=args.max_rounds,
        record_trace=args.trace is not None,
    )
    if args.trace:
        write_trace(result, args.trace)
    status, verdict_txt = _judge_to_status(problem, result, adv, args, proto)
    if args.metrics:
        with open(args.metrics, "w") as fh:
            fh.write(engine.METRICS_HEADER + "\n")
            fh.write(
                engine.metrics_row(
                    args.protocol, args.adversary, n, args.seed, result, verdict_txt
                )
                + "\n"
            )
    for u in sorted(result.outputs):
        print(f"node {u}: {result.outputs[u]}")
    print(
        f"halted={result.halted} rounds={result.rounds_executed} "
        f"max_bits={result.max_message_bits} verdict={verdict_txt}"
    )
    return status


def _judge_to_status(problem, result, adv, args, proto):
    if not result.halted and not proto.stabilizing:
        return EX_NOCONV, "non-convergence"
    try:
        ok = judge(problem, result, adv, args)
    except VerdictUndefined as exc:
        print(f"verdict withheld: {exc}", file=sys.stderr)
        return EX_NOCONV, "withheld"
    return (0 if ok else EX_FALSE), ("true" if ok else "false")


def cmd_sweep(args) -> int:
    if args.protocol not in PROTOCOLS:
        raise UsageError(f"unknown protocol {args.protocol!r}")
    try:
        ns = [int(x) for x in args.n_list.split(",") if x]
    except ValueError:
        raise UsageError("--n-list must be comma-separated integers")
    rows = [engine.METRICS_HEADER]
    for n in ns:
        for seed in range(args.seeds):
            factory, problem = PROTOCOLS[args.protocol]
            proto = factory(args)
            try:
                adv = make_adversary(
                    args.adversary, n, seed,
                    duplicate=(args.protocol == "hd-naming"),
                )
                result = run(
                    proto, adv, n=n, seed=seed, max_rounds=args.max_rounds
                )
                _, verdict_txt = _judge_to_status(problem, result, adv, args, proto)
            except (AdversaryError, GraphError, HorizonError) as exc:
                rows.append(
                    f"{args.protocol}\t{args.adversary}\t{n}\t{seed}\t-\t-\t-\terror:{exc}"
                )
                continue
            rows.append(
                engine.metrics_row(
                    args.protocol, args.adversary, n, seed, result, verdict_txt
                )
            )
    text = "\n".join(rows) + "\n"
    if args.metrics:
        with open(args.metrics, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_verify(args) -> int:
    if args.check == "lemma1":
        sched = load_schedule(args.schedule)
        try:
            ok = check_influence_lemma(sched, len(sched))
        except HorizonError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EX_FALSE
        if ok:
            print("influence lower bound holds")
            return 0
        print("influence lower bound violated")
        return EX_FALSE
    if args.check == "connectivity":
        sched = load_schedule(args.schedule)
        bad = validate_one_interval(sched)
        if not bad:
            print("all rounds connected")
            return 0
        print(f"disconnected rounds: {bad}")
        return EX_FALSE
    if args.check == "high-dynamicity":
        sched = load_schedule(args.schedule)
        try:
            ok, witness = check_high_dynamicity(sched, args.k)
        except (HorizonError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EX_PARSE
        if ok:
            print(f"arrival vectors distinct for k={args.k}")
            return 0
        u, r, v, w = witness
        print(
            f"counterexample: from ({u}, round {r}) nodes {v} and {w} "
            f"share an arrival vector"
        )
        return EX_FALSE
    if args.check == "lockstep":
        factory, _ = PROTOCOLS[args.protocol]
        proto = factory(args)
        if proto.mode != engine.BROADCAST:
            raise UsageError("lockstep check needs a broadcast protocol")
        adv = make_adversary(args.adversary, args.n, args.seed)
        pairs = _parse_pairs(args.pairs, adv.n)
        rows = lockstep_check(
            proto, adv, adv.n, pairs, args.rounds, seed=args.seed
        )
        if lockstep_holds(rows):
            print(f"lockstep holds for pairs {pairs} over {args.rounds} rounds")
            return 0
        bad = next(row for row in rows if not row[3])
        print(f"states diverge: round {bad[0]}, nodes {bad[1]} and {bad[2]}")
        return EX_FALSE
    raise UsageError(f"unknown verify subcommand {args.check!r}")


def _parse_pairs(spec, n):
    if spec == "leaves":
        return [(u, v) for u in range(1, n) for v in range(u + 1, n)]
    try:
        pairs = []
        for chunk in spec.split(","):
            a, b = chunk.split(":")
            pairs.append((int(a), int(b)))
        return pairs
    except ValueError:
        raise UsageError("--pairs must be 'leaves' or 'a:b,c:d,...'")


def build_parser():
    p = argparse.ArgumentParser(prog="anonnet")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp):
        sp.add_argument("--protocol", required=True)
        sp.add_argument("--adversary", required=True)
        sp.add_argument("--n", type=int)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--mode", choices=[engine.BROADCAST, engine.ONE_TO_EACH])
        sp.add_argument("--max-rounds", type=int)
        sp.add_argument("--d", type=int)
        sp.add_argument("--e", type=int)
        sp.add_argument("--trace")
        sp.add_argument("--metrics")

    rp = sub.add_parser("run", help="single experiment")
    common(rp)
    sp = sub.add_parser("sweep", help="grid of runs, metrics table out")
    common(sp)
    sp.add_argument("--n-list", required=True)
    sp.add_argument("--seeds", type=int, default=1)
    vp = sub.add_parser("verify", help="property validators")
    vp.add_argument(
        "check",
        choices=["lemma1", "connectivity", "high-dynamicity", "lockstep"],
    )
    vp.add_argument("--schedule")
    vp.add_argument("--k", type=int, default=1)
    vp.add_argument("--protocol")
    vp.add_argument("--adversary")
    vp.add_argument("--n", type=int)
    vp.add_argument("--seed", type=int, default=0)
    vp.add_argument("--rounds", type=int, default=50)
    vp.add_argument("--pairs", default="leaves")
    vp.add_argument("--d", type=int)
    vp.add_argument("--e", type=int)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "run":
            return cmd_run(args)
        if args.cmd == "sweep":
            return cmd_sweep(args)
        return cmd_verify(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EX_USAGE
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EX_PARSE
    except (AdversaryError, GraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_USAGE


if __name__ == "__main__":
    sys.exit(main())
