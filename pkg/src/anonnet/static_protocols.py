"""Static-network broadcast protocols with a leader: eccentricity-based
distance labeling, exact counting on top of it, and leaderless degree
labeling.

Behavior on dynamic schedules is unspecified; correctness is only
claimed on connected static schedules.
"""

from __future__ import annotations

from fractions import Fraction

from .encoding import term_key
from .engine import BROADCAST, ProtocolError, ProtocolMachine


def _flatten(inbox):
    return [m for payload in inbox for m in sorted(payload, key=term_key)]


def _ecc_step(st: dict, msgs, r: int):
    """One round of the distance-labeling phase.  Mutates st; returns
    (message parts, finished) where finished marks the synchronized
    final round (all nodes finish in the same global round)."""
    parts = set()
    if st["role"] == "leader":
        if r == 1:
            parts.add(("assign", 1))
        for m in msgs:
            if m[0] == "ack" and m[1] > st["max_asgned"]:
                st["max_asgned"] = m[1]
        if st["halt_at"] is None and r > 2 * (st["max_asgned"] + 1):
            st["eps"] = st["max_asgned"]
            st["halt_at"] = r + st["max_asgned"]
            parts.add(("halt", st["max_asgned"]))
    else:
        if st["label"] is None:
            assigns = sorted(m[1] for m in msgs if m[0] == "assign")
            if assigns:
                st["label"] = assigns[0]
                st["up"] = sum(1 for a in assigns if a == st["label"])
                parts.add(("assign", st["label"] + 1))
                parts.add(("ack", st["label"]))
        if st["label"] is not None:
            heard = {
                m[1] for m in msgs if m[0] == "ack" and m[1] > st["label"]
            }
            fresh = heard - set(st["fwd_acks"])
            for a in fresh:
                parts.add(("ack", a))
            if fresh:
                st["fwd_acks"] = st["fwd_acks"] | frozenset(fresh)
            if st["halt_at"] is None:
                halts = [m for m in msgs if m[0] == "halt"]
                if halts:
                    eps = halts[0][1]
                    st["eps"] = eps
                    st["halt_at"] = r + eps - st["label"]
                    parts.add(("halt", eps))
    finished = st["halt_at"] is not None and r >= st["halt_at"]
    return parts, finished


def _ecc_initial(is_leader: bool) -> dict:
    return {
        "role": "leader" if is_leader else "node",
        "label": 0 if is_leader else None,
        "up": 0,
        "max_asgned": 0,
        "fwd_acks": frozenset(),
        "eps": None,
        "halt_at": None,
    }


class LeaderEccentricity(ProtocolMachine):
    """Every node outputs its distance from the leader; all nodes halt in
    the same round."""

    mode = BROADCAST

    def initial_state(self, is_leader):
        return _ecc_initial(is_leader)

    def step(self, state, inbox, r, labels):
        st = dict(state)
        parts, finished = _ecc_step(st, _flatten(inbox), r)
        outbox = frozenset(parts) if parts else None
        return st, outbox, (st["label"] if finished else None)


def leader_eccentricity() -> LeaderEccentricity:
    return LeaderEccentricity()


class AnonymousCounting(ProtocolMachine):
    """Distance labeling, then an exact-rational partial-count wave from
    the deepest level back to the leader; every node outputs n."""

    mode = BROADCAST

    def initial_state(self, is_leader):
        st = _ecc_initial(is_leader)
        st["phase"] = 1
        st["p2_start"] = None
        return st

    def step(self, state, inbox, r, labels):
        st = dict(state)
        msgs = _flatten(inbox)
        if st["phase"] == 1:
            parts, finished = _ecc_step(st, msgs, r)
            if finished:
                # round counters reset: the next round is phase-2 round 1
                st["phase"] = 2
                st["p2_start"] = r
            return st, frozenset(parts) if parts else None, None
        return self._count_step(st, msgs, r)

    def _count_step(self, st, msgs, r):
        rp = r - st["p2_start"]
        eps = st["eps"]
        rvals = [Fraction(m[1], m[2]) for m in msgs if m[0] == "pc"]
        if st["role"] == "leader":
            if rp == eps + 1:
                total = 1 + sum(rvals)
                if total.denominator != 1 or total < 1:
                    raise ProtocolError(f"count is not a positive integer: {total}")
                count = int(total)
                return st, frozenset({("halt2", count)}), count
            return st, None, None
        parts = set()
        for m in msgs:
            if m[0] == "halt2":
                return st, frozenset({("halt2", m[1])}), m[1]
        if st["label"] == eps - rp + 1 and st["label"] >= 1:
            if st["up"] == 0:
                raise ProtocolError("labeled node with no upper-level neighbors")
            val = (Fraction(1) + sum(rvals)) / st["up"]
            parts.add(("pc", val.numerator, val.denominator))
        return st, frozenset(parts) if parts else None, None


def anonymous_counting() -> AnonymousCounting:
    return AnonymousCounting()


class DegreeKLabeling(ProtocolMachine):
    """Each node outputs its degree at round 2: a k-labeling for k equal
    to the number of distinct degrees.  No leader needed."""

    mode = BROADCAST
    needs_leader = False

    def initial_state(self, is_leader):
        return {"role": "node"}

    def step(self, state, inbox, r, labels):
        if r == 1:
            return state, frozenset({("ping",)}), None
        return state, None, len(inbox)


def degree_klabeling() -> DegreeKLabeling:
    return DegreeKLabeling()
