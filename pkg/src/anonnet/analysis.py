"""Run verdicts and experiment helpers: problem post-condition checks,
lockstep state-equality checks for symmetric placements, a ring
counter-example demo, and log-log growth fitting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adversary import StaticAdversary, ring
from .engine import BROADCAST, ProtocolMachine, RunResult, run


class VerdictUndefined(Exception):
    """Raised when a run has no complete output set to judge."""


def _outputs(run_or_outputs):
    if isinstance(run_or_outputs, RunResult):
        outs = run_or_outputs.outputs
        if len(outs) < run_or_outputs.n:
            raise VerdictUndefined("run ended with output-less nodes")
    else:
        outs = dict(run_or_outputs)
    if not outs or any(v is None for v in outs.values()):
        raise VerdictUndefined("some nodes produced no output")
    return outs


def verdict(problem: str, run_or_outputs, n: int, k: int | None = None) -> bool:
    """Check a problem post-condition against true size n.

    Problems: 'naming' (n unique ids), 'minimal-naming' (ids are exactly
    0..n-1), 'k-labeling' (at most k distinct labels, needs k),
    'counting' (every output equals n), 'counting-upper-bound' (every
    output is an integer >= n)."""
    outs = _outputs(run_or_outputs)
    if len(outs) != n:
        return False
    vals = list(outs.values())
    if problem == "naming":
        return len(set(vals)) == n
    if problem == "minimal-naming":
        return set(vals) == set(range(n))
    if problem == "k-labeling":
        if k is None:
            raise ValueError("k-labeling needs k")
        return len(set(vals)) <= k
    if problem == "counting":
        return all(v == n for v in vals)
    if problem == "counting-upper-bound":
        return all(isinstance(v, int) and v >= n for v in vals)
    raise ValueError(f"unknown problem {problem!r}")


def lockstep_check(protocol, adversary, n, pairs, rounds, seed=0):
    """Run a broadcast protocol and report, per round, whether each node
    pair has identical state digests.  Refuses one-to-each protocols:
    local edge labels are drawn privately, so lockstep is not expected
    there."""
    if protocol.mode != BROADCAST:
        raise ValueError("lockstep check only applies to broadcast protocols")
    res = run(
        protocol, adversary, n=n, seed=seed, max_rounds=rounds, record_trace=True
    )
    rows = []
    for rec in res.trace:
        dig = rec["digests"]
        for u, v in pairs:
            rows.append((rec["round"], u, v, dig[u] == dig[v]))
    return rows


def lockstep_holds(rows) -> bool:
    return all(eq for _, _, _, eq in rows)


class SilenceCounter(ProtocolMachine):
    """Deliberately broken leaderless 'counter': ping once, then output
    the current round after two silent rounds.  Useful only as a
    counter-example: it halts with the same output on rings of any size
    at least 3."""

    mode = BROADCAST
    needs_leader = False

    def initial_state(self, is_leader):
        return {"quiet": 0}

    def step(self, state, inbox, r, labels):
        if r == 1:
            return state, frozenset({("ping",)}), None
        st = dict(state)
        st["quiet"] = 0 if inbox else st["quiet"] + 1
        if st["quiet"] >= 2:
            return st, None, r
        return st, None, None


@dataclass(frozen=True)
class RingDemoReport:
    applicable: bool
    reason: str
    n: int
    halt_round: int | None
    outputs_small: dict | None
    n_large: int | None
    outputs_large: dict | None
    same_output: bool | None


def ring_indistinguishability_demo(protocol_factory, n=3, max_rounds=60):
    """If a leaderless protocol halts on ring(n) by round k with some
    output, it produces the same output on ring(k+1): no node can have
    heard anything distinguishing the two by then.  Returns a report
    with both runs.  Protocols that need a leader or never halt are
    reported inapplicable."""
    proto = protocol_factory()
    if proto.needs_leader:
        return RingDemoReport(False, "protocol needs a leader", n, None, None, None, None, None)
    res = run(proto, StaticAdversary(ring(n)), n=n, max_rounds=max_rounds)
    if not res.halted:
        return RingDemoReport(False, "protocol did not halt", n, None, None, None, None, None)
    k = res.rounds_executed
    n2 = k + 1
    res2 = run(protocol_factory(), StaticAdversary(ring(n2)), n=n2, max_rounds=max_rounds)
    same = (
        res2.halted
        and set(res.outputs.values()) == set(res2.outputs.values())
    )
    return RingDemoReport(
        True, "", n, k, dict(res.outputs), n2,
        dict(res2.outputs) if res2.halted else None, same,
    )


@dataclass(frozen=True)
class GrowthFit:
    slope: float
    intercept: float
    max_residual: float
    points: tuple  # (n, value)


def growth_fit(points) -> GrowthFit:
    """Least-squares fit of log2(value) against log2(n)."""
    pts = [(n, v) for n, v in points if v > 0]
    if len(pts) < 2:
        raise ValueError("need at least two positive points")
    xs = np.log2([p[0] for p in pts])
    ys = np.log2([p[1] for p in pts])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    return GrowthFit(
        float(slope), float(intercept), float(np.max(np.abs(resid))), tuple(pts)
    )


def doubling_deltas(points) -> list:
    """value(2n) - value(n) for consecutive doubling points; flat deltas
    back a logarithmic-growth claim."""
    by_n = dict(points)
    return [
        (n, by_n[2 * n] - by_n[n])
        for n in sorted(by_n)
        if 2 * n in by_n
    ]
