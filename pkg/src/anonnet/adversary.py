"""Adversaries: per-round edge sets and (for one-to-each) local edge
labels.  All adversaries are deterministic functions of their parameters,
the run seed and the round number, so a run can be replayed exactly.

Node 0 is the leader position in every built topology.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .graphs import (
    DynamicSchedule,
    GraphError,
    HorizonError,
    InstantGraph,
    is_connected,
)


class AdversaryError(ValueError):
    pass


@dataclass(frozen=True)
class AdversaryContext:
    """What an adversary may inspect when choosing a round's edges.

    state_digests is a callable returning per-node opaque digests of the
    current internal states (computed lazily; most adversaries never look).
    """

    round: int
    state_digests: object
    seed: int


# ---------------------------------------------------------------- builders


def star(n: int) -> InstantGraph:
    if n < 1:
        raise GraphError("star needs n >= 1")
    return InstantGraph(n, frozenset((0, i) for i in range(1, n)))


def line(n: int, leader_at_end: bool = True) -> InstantGraph:
    if n < 1:
        raise GraphError("line needs n >= 1")
    if leader_at_end:
        order = list(range(n))
    else:
        rest = list(range(1, n))
        mid = len(rest) // 2
        order = rest[:mid] + [0] + rest[mid:]
    return _path(n, order)


def _path(n: int, order) -> InstantGraph:
    return InstantGraph(
        n, frozenset((order[i], order[i + 1]) for i in range(len(order) - 1))
    )


def ring(n: int) -> InstantGraph:
    if n < 1:
        raise GraphError("ring needs n >= 1")
    if n <= 2:
        return line(n)
    edges = {(i, (i + 1) % n) for i in range(n)}
    return InstantGraph(n, frozenset(edges))


def symmetric_tree(n_per_branch: int, branches: int) -> InstantGraph:
    """Root 0 with `branches` identical lines of n_per_branch nodes."""
    if n_per_branch < 1 or branches < 2:
        raise GraphError("symmetric_tree needs n_per_branch >= 1, branches >= 2")
    n = 1 + n_per_branch * branches
    edges = set()
    for b in range(branches):
        first = 1 + b * n_per_branch
        edges.add((0, first))
        for i in range(n_per_branch - 1):
            edges.add((first + i, first + i + 1))
    return InstantGraph(n, frozenset(edges))


# ---------------------------------------------------------------- adversaries


class Adversary:
    """Stateless by round: graph(r, ctx) must return the same value for
    the same (parameters, seed, r, digests)."""

    n: int
    seed: int = 0

    def graph(self, r: int, ctx: AdversaryContext) -> InstantGraph:
        raise NotImplementedError

    def labeling(self, r: int, g: InstantGraph, ctx: AdversaryContext):
        """Override to impose an adversarial labeling; None means the
        engine draws a fresh seeded random one."""
        return None


class StaticAdversary(Adversary):
    def __init__(self, g: InstantGraph, seed: int = 0):
        if not is_connected(g):
            raise AdversaryError("static adversary needs a connected graph")
        self.g = g
        self.n = g.n
        self.seed = seed

    def graph(self, r, ctx):
        return self.g


def static_adversary(g: InstantGraph, seed: int = 0) -> StaticAdversary:
    return StaticAdversary(g, seed)


def _prufer_tree(n: int, rng: random.Random) -> set:
    """Uniform random labeled spanning tree via a Prüfer sequence."""
    if n == 1:
        return set()
    if n == 2:
        return {(0, 1)}
    seq = [rng.randrange(n) for _ in range(n - 2)]
    deg = [1] * n
    for x in seq:
        deg[x] += 1
    edges = set()
    import heapq

    leaves = [i for i in range(n) if deg[i] == 1]
    heapq.heapify(leaves)
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.add((min(leaf, x), max(leaf, x)))
        deg[x] -= 1
        if deg[x] == 1:
            heapq.heappush(leaves, x)
    u, v = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.add((min(u, v), max(u, v)))
    return edges


class RandomConnectedAdversary(Adversary):
    """Each round: a uniform spanning tree plus every non-tree edge
    independently with probability 1/2."""

    def __init__(self, n: int, seed: int):
        if n < 1:
            raise AdversaryError("need n >= 1")
        self.n = n
        self.seed = seed

    def graph(self, r, ctx):
        rng = random.Random(f"rconn|{self.seed}|{r}")
        edges = _prufer_tree(self.n, rng)
        for u in range(self.n):
            for v in range(u + 1, self.n):
                if (u, v) not in edges and rng.random() < 0.5:
                    edges.add((u, v))
        return InstantGraph(self.n, frozenset(edges))


def random_connected_adversary(n: int, seed: int) -> RandomConnectedAdversary:
    return RandomConnectedAdversary(n, seed)


class FairMeetAllAdversary(Adversary):
    """A line per round whose node next to the leader sweeps through
    1..n-1, so the leader meets every node within n-1 rounds."""

    def __init__(self, n: int, seed: int = 0):
        if n < 2:
            raise AdversaryError("need n >= 2")
        self.n = n
        self.seed = seed

    def graph(self, r, ctx):
        j = ((r - 1) % (self.n - 1)) + 1
        rest = [v for v in range(1, self.n) if v != j]
        return _path(self.n, [0, j] + rest)


def fair_meet_all_adversary(n: int, seed: int = 0) -> FairMeetAllAdversary:
    return FairMeetAllAdversary(n, seed)


class SymmetricMirrorAdversary(Adversary):
    """Two identical lines off root 0; positions within a branch may be
    permuted over time, but the same permutation is applied to both
    branches, so mirror nodes stay at equal depth every round.

    rounds_pattern: "static", "oscillate", or an explicit list of
    permutations of range(branch_len), cycled by round.
    """

    def __init__(self, branch_len: int, rounds_pattern="static", seed: int = 0):
        if branch_len < 1:
            raise AdversaryError("need branch_len >= 1")
        self.branch_len = branch_len
        self.n = 1 + 2 * branch_len
        self.seed = seed
        if rounds_pattern == "static":
            self.pattern = [tuple(range(branch_len))]
        elif rounds_pattern == "oscillate":
            self.pattern = [
                tuple((i + shift) % branch_len for i in range(branch_len))
                for shift in range(branch_len)
            ]
        else:
            self.pattern = [tuple(p) for p in rounds_pattern]
            for p in self.pattern:
                if sorted(p) != list(range(branch_len)):
                    raise AdversaryError(f"not a permutation of positions: {p}")

    def mirror_pairs(self) -> list:
        L = self.branch_len
        return [(1 + i, 1 + L + i) for i in range(L)]

    def graph(self, r, ctx):
        perm = self.pattern[(r - 1) % len(self.pattern)]
        L = self.branch_len
        a = [1 + perm[i] for i in range(L)]
        b = [1 + L + perm[i] for i in range(L)]
        edges = {(0, a[0]), (0, b[0])}
        for i in range(L - 1):
            edges.add((a[i], a[i + 1]))
            edges.add((b[i], b[i + 1]))
        return InstantGraph(self.n, frozenset(edges))


def symmetric_mirror_adversary(
    branch_len: int, rounds_pattern="static", seed: int = 0
) -> SymmetricMirrorAdversary:
    return SymmetricMirrorAdversary(branch_len, rounds_pattern, seed)


class ReplayAdversary(Adversary):
    """Replays a recorded DynamicSchedule, with optional fixed per-round
    labelings (list per round: {node: {label: neighbor}})."""

    def __init__(self, schedule: DynamicSchedule, labelings=None, cycle=False):
        self.schedule = schedule
        self.n = schedule.n
        self.seed = 0
        self.labelings = labelings
        self.cycle = cycle

    def _index(self, r: int) -> int:
        if self.cycle:
            return (r - 1) % len(self.schedule) + 1
        if r > len(self.schedule):
            raise HorizonError(
                f"replay schedule exhausted at round {r} (length {len(self.schedule)})"
            )
        return r

    def graph(self, r, ctx):
        return self.schedule.graph(self._index(r))

    def labeling(self, r, g, ctx):
        if self.labelings is None:
            return None
        return self.labelings[self._index(r) - 1]


class DuplicatingAdversary(Adversary):
    """Each emitted graph persists for two consecutive rounds."""

    def __init__(self, inner: Adversary):
        self.inner = inner
        self.n = inner.n
        self.seed = inner.seed

    def graph(self, r, ctx):
        return self.inner.graph((r + 1) // 2, ctx)


def duplicate_schedule(s: DynamicSchedule) -> DynamicSchedule:
    rounds = []
    for g in s.rounds:
        rounds.extend([g, g])
    return DynamicSchedule(s.n, tuple(rounds))


# ---------------------------------------------------------------- next_round


def _random_labeling(g: InstantGraph, seed_text: str) -> dict:
    rng = random.Random(seed_text)
    lab = {}
    for u in range(g.n):
        nbrs = g.neighbors(u)
        rng.shuffle(nbrs)
        lab[u] = {i + 1: v for i, v in enumerate(nbrs)}
    return lab


def next_round(adv: Adversary, ctx: AdversaryContext, mode: str):
    """One adversary move: a connected graph, plus a per-node edge
    labeling iff mode is one-to-each.  Deterministic for a given
    (adversary, seed, round, digests)."""
    g = adv.graph(ctx.round, ctx)
    if not is_connected(g):
        raise AdversaryError(
            f"adversary produced a disconnected graph in round {ctx.round}"
        )
    if mode != "one-to-each":
        return g, None
    lab = adv.labeling(ctx.round, g, ctx)
    if lab is None:
        lab = _random_labeling(g, f"labels|{ctx.seed}|{adv.seed}|{ctx.round}")
    _check_labeling(g, lab)
    return g, lab


def _check_labeling(g: InstantGraph, lab: dict):
    for u in range(g.n):
        nbrs = g.neighbors(u)
        labels = sorted(lab.get(u, {}))
        if labels != list(range(1, len(nbrs) + 1)):
            raise AdversaryError(f"labels at node {u} are not 1..deg: {labels}")
        if sorted(lab[u].values()) != nbrs:
            raise AdversaryError(f"labeling at node {u} is not onto its edges")
