"""Instantaneous and dynamic graphs, 1-interval connectivity, and the
causal order with its derived quantities (future sets, arrivals,
maximum expansion).

Node indices 0..n-1 exist only here and in the simulator; protocol code
never sees them.  Round indexing is 1-based: rounds[r-1] is the edge set
E(r) active in round r.  E(0) is empty, so round-0 states influence only
through E(1) onward.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


class GraphError(ValueError):
    pass


class HorizonError(ValueError):
    """A computation needs more rounds than the schedule prefix holds."""


def _norm_edge(u: int, v: int) -> tuple[int, int]:
    if u == v:
        raise GraphError(f"self-loop at node {u}")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class InstantGraph:
    n: int
    edges: frozenset = frozenset()

    def __post_init__(self):
        if self.n < 1:
            raise GraphError(f"need at least one node, got n={self.n}")
        norm = frozenset(_norm_edge(u, v) for u, v in self.edges)
        object.__setattr__(self, "edges", norm)
        for u, v in norm:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise GraphError(f"edge ({u},{v}) out of range for n={self.n}")

    def neighbors(self, u: int) -> list[int]:
        out = [v if a == u else a for a, v in self.edges if u in (a, v)]
        return sorted(out)

    def degree(self, u: int) -> int:
        return sum(1 for e in self.edges if u in e)

    def max_degree(self) -> int:
        return max((self.degree(u) for u in range(self.n)), default=0)

    def adjacency_masks(self) -> list[int]:
        adj = [0] * self.n
        for u, v in self.edges:
            adj[u] |= 1 << v
            adj[v] |= 1 << u
        return adj


def is_connected(g: InstantGraph) -> bool:
    """True iff g has a single connected component (true for n=1)."""
    if g.n == 1:
        return True
    adj = g.adjacency_masks()
    seen = 1
    frontier = 1
    while frontier:
        grow = 0
        u = 0
        f = frontier
        while f:
            if f & 1:
                grow |= adj[u]
            f >>= 1
            u += 1
        frontier = grow & ~seen
        seen |= frontier
    return seen == (1 << g.n) - 1


@dataclass(frozen=True)
class DynamicSchedule:
    n: int
    rounds: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "rounds", tuple(self.rounds))
        for i, g in enumerate(self.rounds):
            if g.n != self.n:
                raise GraphError(
                    f"round {i + 1} has n={g.n}, schedule has n={self.n}"
                )

    def __len__(self):
        return len(self.rounds)

    def graph(self, r: int) -> InstantGraph:
        """Edge set E(r), r >= 1."""
        if not 1 <= r <= len(self.rounds):
            raise HorizonError(f"round {r} beyond schedule of {len(self.rounds)}")
        return self.rounds[r - 1]

    def to_json(self) -> str:
        rounds = [sorted([u, v] for u, v in g.edges) for g in self.rounds]
        return json.dumps({"n": self.n, "rounds": rounds})

    @classmethod
    def from_json(cls, text: str) -> "DynamicSchedule":
        try:
            doc = json.loads(text)
            n = doc["n"]
            rounds = tuple(
                InstantGraph(n, frozenset((u, v) for u, v in rnd))
                for rnd in doc["rounds"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphError(f"malformed schedule document: {exc}") from exc
        return cls(n, rounds)


def validate_one_interval(s: DynamicSchedule) -> list[int]:
    """Round indices (1-based, ascending) whose graph is disconnected."""
    return [r for r in range(1, len(s) + 1) if not is_connected(s.graph(r))]


@dataclass(frozen=True)
class CausalReachability:
    """The causal order materialized for a schedule prefix.

    fut[(u, r)][i] is the bitmask of nodes v with (u,r) ~> (v, r+i),
    for r+i <= horizon.  Only the requested start pairs are present.
    """

    n: int
    horizon: int
    fut: dict = field(hash=False)

    def future_set(self, u: int, r: int, r_prime: int) -> frozenset:
        if not (0 <= r <= r_prime <= self.horizon):
            raise HorizonError(
                f"need 0 <= {r} <= {r_prime} <= horizon {self.horizon}"
            )
        if (u, r) not in self.fut:
            raise KeyError(f"closure was not computed from start ({u},{r})")
        mask = self.fut[(u, r)][r_prime - r]
        return frozenset(v for v in range(self.n) if mask >> v & 1)

    def reaches(self, u: int, r: int, v: int, r_prime: int) -> bool:
        return v in self.future_set(u, r, r_prime)

    def arrival(self, u: int, r: int, v: int):
        """First r' > r with (u,r) ~> (v,r'), or None within the horizon."""
        row = self.fut[(u, r)]
        for i in range(1, len(row)):
            if row[i] >> v & 1:
                return r + i
        return None


def causal_closure(
    s: DynamicSchedule, horizon: int, starts=None
) -> CausalReachability:
    """Reflexive-transitive closure of (u,r) -> (v,r+1) iff u=v or
    {u,v} in E(r+1), propagated frontier-by-frontier.

    starts: iterable of (u, r) pairs to close from; defaults to every
    (u, r) with 0 <= r <= horizon.
    """
    if horizon > len(s):
        raise HorizonError(
            f"horizon {horizon} exceeds schedule length {len(s)}"
        )
    n = s.n
    adj = [s.graph(r).adjacency_masks() for r in range(1, horizon + 1)]
    if starts is None:
        starts = [(u, r) for u in range(n) for r in range(horizon + 1)]
    fut = {}
    for u, r0 in starts:
        if not 0 <= r0 <= horizon:
            raise HorizonError(f"start round {r0} outside 0..{horizon}")
        mask = 1 << u
        row = [mask]
        for r in range(r0 + 1, horizon + 1):
            grow = mask
            m = mask
            v = 0
            while m:
                if m & 1:
                    grow |= adj[r - 1][v]
                m >>= 1
                v += 1
            mask = grow
            row.append(mask)
        fut[(u, r0)] = row
    return CausalReachability(n=n, horizon=horizon, fut=fut)


def future_set(c: CausalReachability, u: int, r: int, r_prime: int) -> frozenset:
    return c.future_set(u, r, r_prime)


def check_influence_lemma(s: DynamicSchedule, horizon: int) -> bool:
    """Both influence bounds |{v:(u,0)~>(v,r)}| >= min(r+1, n) and
    |{v:(v,0)~>(u,r)}| >= min(r+1, n), for all u and r <= horizon.

    Presupposes 1-interval connectivity of the checked prefix.
    """
    bad = [r for r in validate_one_interval(s) if r <= horizon]
    if bad:
        raise GraphError(f"schedule disconnected in rounds {bad}")
    n = s.n
    c = causal_closure(s, horizon, starts=[(u, 0) for u in range(n)])
    for r in range(horizon + 1):
        need = min(r + 1, n)
        incount = [0] * n
        for u in range(n):
            mask = c.fut[(u, 0)][r]
            if mask.bit_count() < need:
                return False
            v = 0
            while mask:
                if mask & 1:
                    incount[v] += 1
                mask >>= 1
                v += 1
        if any(cnt < need for cnt in incount):
            return False
    return True


def max_expansion(s: DynamicSchedule, horizon: int) -> int:
    """Largest one-round growth of any future set over the prefix:
    max over u, r <= r' < horizon of |future_(u,r)(r'+1)| - |future_(u,r)(r')|."""
    if horizon > len(s):
        raise HorizonError(
            f"horizon {horizon} exceeds schedule length {len(s)}"
        )
    c = causal_closure(s, horizon)
    best = 0
    for (_, r0), row in c.fut.items():
        for i in range(len(row) - 1):
            best = max(best, row[i + 1].bit_count() - row[i].bit_count())
    return best
