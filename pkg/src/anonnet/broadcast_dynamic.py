"""Broadcast protocols for dynamic networks.

Counting under a known degree bound d (count grows as (1+d)^m) or a
known per-round expansion bound e (count grows as 1+e*m), an
arrival-vector checker for the k-round high-dynamicity condition, and a
naming protocol that exploits that condition on duplicated schedules.
"""

from __future__ import annotations

from fractions import Fraction

from .adversary import AdversaryContext
from .encoding import term_key
from .engine import BROADCAST, ProtocolError, ProtocolMachine
from .graphs import DynamicSchedule, HorizonError, causal_closure, validate_one_interval


def _flatten(inbox):
    return [m for payload in inbox for m in sorted(payload, key=term_key)]


class _BoundedCounting(ProtocolMachine):
    """Leader-driven counting where the leader jumps its population
    estimate to count_fn(m) whenever it hears evidence (a label value or
    an unassigned timestamp) newer than everything seen so far, and
    halts once the estimate has gone count rounds without such news."""

    mode = BROADCAST

    def __init__(self, bound):
        if bound < 1:
            raise ProtocolError("bound must be >= 1")
        self.bound = bound

    def count_fn(self, m):
        raise NotImplementedError

    def initial_state(self, is_leader):
        if is_leader:
            return {
                "role": "leader",
                "label": 0,
                "count": 1,
                "max_label": 0,
                "latest_event": 0,
                "halt_left": None,
            }
        return {
            "role": "node",
            "label": None,
            "count": None,
            "max_ml": 0,
            "max_un": 0,
            "halt_left": None,
        }

    def step(self, state, inbox, r, labels):
        st = dict(state)
        msgs = _flatten(inbox)
        if st["halt_left"] is not None:
            return self._drain(st)
        if st["role"] == "leader":
            return self._leader(st, msgs, r)
        return self._node(st, msgs, r)

    def _drain(self, st):
        st["halt_left"] -= 1
        out = frozenset({("halt", st["count"])})
        return st, out, (st["count"] if st["halt_left"] == 0 else None)

    def _leader(self, st, msgs, r):
        un = [m[1] for m in msgs if m[0] == "unassigned"]
        ml = [m[1] for m in msgs if m[0] == "my_label"]
        # an event is any label or unassigned timestamp newer than every
        # previous event; max_label tracks that high-water mark
        event = max(
            [v for v in un + ml if v > st["max_label"]], default=0
        )
        if event:
            st["count"] = self.count_fn(event)
            st["max_label"] = max(st["max_label"], event)
            st["latest_event"] = r
        # nothing can have arrived before round 2, so the quiet-window
        # test only starts there (it would fire vacuously at round 1)
        if r > 1 and r > st["count"] + st["latest_event"] - 1:
            st["halt_left"] = st["count"]
            return self._drain(st)
        return st, frozenset({("assign", r)}), None

    def _node(self, st, msgs, r):
        halts = [m[1] for m in msgs if m[0] == "halt"]
        if halts:
            st["count"] = halts[0]
            st["halt_left"] = halts[0]
            return self._drain(st)
        ml = [m[1] for m in msgs if m[0] == "my_label"]
        un = [m[1] for m in msgs if m[0] == "unassigned"]
        if ml:
            st["max_ml"] = max(st["max_ml"], max(ml))
        if un:
            st["max_un"] = max(st["max_un"], max(un))
        if st["label"] is None:
            assigns = [m[1] for m in msgs if m[0] == "assign"]
            if assigns:
                st["label"] = max(assigns)
        parts = set()
        if st["label"] is None:
            parts.add(("unassigned", r))
            if st["max_ml"]:
                parts.add(("my_label", st["max_ml"]))
        else:
            parts.add(("assign", r))
            parts.add(("my_label", st["label"]))
            if st["max_ml"] > st["label"]:
                parts.add(("my_label", st["max_ml"]))
            if st["max_un"]:
                parts.add(("unassigned", st["max_un"]))
        return st, frozenset(parts), None


class DegreeCounting(_BoundedCounting):
    def count_fn(self, m):
        return (1 + self.bound) ** m


class ExpansionCounting(_BoundedCounting):
    def count_fn(self, m):
        return 1 + self.bound * m


def degree_counting(d: int) -> DegreeCounting:
    return DegreeCounting(d)


def expansion_counting(e: int) -> ExpansionCounting:
    return ExpansionCounting(e)


def max_degree_seen(adversary, rounds: int, seed=0) -> int:
    """Largest instantaneous degree over rounds 1..rounds; used to check
    post hoc that a schedule respected a promised degree bound."""
    worst = 0
    for r in range(1, rounds + 1):
        ctx = AdversaryContext(round=r, state_digests=lambda: {}, seed=seed)
        worst = max(worst, adversary.graph(r, ctx).max_degree())
    return worst


def check_high_dynamicity(schedule: DynamicSchedule, k: int):
    """True iff for every node u and every checkable start round r, the
    length-k arrival vectors of the other nodes (relative to u) are
    pairwise distinct.  Returns (ok, witness); witness names the first
    colliding (u, r, v, w) if any."""
    if k < 1:
        raise ValueError("k must be >= 1")
    bad = validate_one_interval(schedule)
    if bad:
        raise HorizonError(f"schedule disconnected at rounds {bad}")
    n = schedule.n
    horizon = len(schedule)
    # arrivals resolve within n rounds, so later starts have vectors
    # running off the end of the schedule
    r_last = horizon - (k - 1) - n
    if r_last < 0:
        raise HorizonError(
            f"horizon {horizon} too short for k={k}, n={n} (need {(k - 1) + n})"
        )
    if n <= 2:
        return True, None
    reach = causal_closure(schedule, horizon)
    for u in range(n):
        for r in range(r_last + 1):
            seen = {}
            for v in range(n):
                if v == u:
                    continue
                vec = tuple(reach.arrival(u, r + i, v) for i in range(k))
                if vec in seen:
                    return False, (u, r, seen[vec], v)
                seen[vec] = v
    return True, None


class HighDynamicityNaming(ProtocolMachine):
    """Names every node under a high-dynamicity promise on a schedule in
    which every graph appears twice in a row.

    Unnamed nodes are handed a cohort number by current id holders, who
    transmit it on odd rounds only; graph duplication then guarantees a
    receipt confirmation makes it back, carrying the number of
    simultaneous offers l, and each offerer credits itself 1/l.  The sum
    of credits is the exact cohort size, which tells the leader how many
    distinct arrival-time signatures to wait for before it fixes the new
    ids.  Leader cycles stall (no halt) if the promise is violated.
    """

    def run_flags(self, states):
        if any(st.get("phase") == "stalled" for st in states):
            return {"stalled": True}
        return {}

    mode = BROADCAST

    def __init__(self, k_cap: int = 96):
        self.k_cap = k_cap

    def initial_state(self, is_leader):
        st = {
            "role": "leader" if is_leader else "node",
            "id": 0 if is_leader else None,
            "base": None,  # cohort number once reached by an offer
            "arr": {},  # leader-round index -> first round heard
            "lr": frozenset(),
            "vecs": frozenset(),
            "best": None,
            "last_req": -1,
            "reply_at": None,
            "reply": None,
            "assigning": False,
            "abase": None,
            "arounds": frozenset(),
            "credit": (0, 1),
            "halt_at": None,
            "halt_n": None,
        }
        if is_leader:
            st.update(
                {
                    "phase": "boot",
                    "expected": None,
                    "await_base": None,
                    "await_from": None,
                    "fix_t": None,
                    "queue": (),
                    "conv": None,
                    "ids": (),
                    "next_base": 2,
                    "jsum": (0, 1),
                }
            )
        return st

    # -- shared plumbing ------------------------------------------------

    def _absorb(self, st, inbox, r):
        msgs = _flatten(inbox)
        arr = dict(st["arr"])
        lr = set(st["lr"])
        vecs = set(st["vecs"])
        best = st["best"]
        for m in msgs:
            if m[0] == "lr":
                lr.add(m[1])
                if m[1] not in arr:
                    arr[m[1]] = r
            elif m[0] == "vec":
                vecs.add(m)
            elif m[0] == "ctrl":
                if best is None or (m[4], term_key(m)) > (best[4], term_key(best)):
                    best = m
        st["arr"] = arr
        st["lr"] = frozenset(lr)
        st["vecs"] = frozenset(vecs)
        st["best"] = best
        return msgs

    def _sig(self, st, upto=None):
        """Arrival-time signature: cohort number then arrival rounds of
        the leader's round-2, round-3, ... broadcasts (a contiguous
        prefix, optionally cut at upto)."""
        arr = st["arr"]
        tail = []
        i = 2
        while i in arr and (upto is None or arr[i] <= upto):
            tail.append(arr[i])
            i += 1
        return (st["base"],) + tuple(tail)

    def _credit_gots(self, st, msgs):
        if not st["arounds"]:
            return
        total = Fraction(*st["credit"])
        for m in msgs:
            if m[0] == "got" and m[1] == st["abase"] and m[3] - 1 in st["arounds"]:
                total += Fraction(1, m[2])
        st["credit"] = (total.numerator, total.denominator)

    def _common_parts(self, st, r):
        parts = {("ping",)}
        for i in st["lr"]:
            parts.add(("lr", i))
        parts |= set(st["vecs"])
        if st["best"] is not None:
            parts.add(st["best"])
        if st["assigning"] and r % 2 == 1:
            parts.add(("assign", st["abase"]))
            st["arounds"] = st["arounds"] | frozenset({r})
        return parts

    # -- top level ------------------------------------------------------

    def step(self, state, inbox, r, labels):
        st = dict(state)
        msgs = self._absorb(st, inbox, r)
        self._credit_gots(st, msgs)
        if st["best"] is not None and st["best"][1] == "halt" and st["halt_at"] is None:
            c = st["best"]
            st["halt_n"] = c[3]
            st["halt_at"] = c[4] + 2 * c[3] + 4
        if st["role"] == "leader":
            parts = self._leader_round(st, inbox, msgs, r)
        else:
            parts = self._node_round(st, inbox, msgs, r)
        parts |= self._common_parts(st, r)
        out = frozenset(parts)
        if st["halt_at"] is not None and r >= st["halt_at"]:
            return st, out, (st["id"], st["halt_n"])
        return st, out, None

    # -- non-leader -----------------------------------------------------

    def _node_round(self, st, inbox, msgs, r):
        parts = set()
        if st["base"] is None:
            bases = [m[1] for m in msgs if m[0] == "assign"]
            if bases:
                b = min(bases)
                l = sum(
                    1
                    for payload in inbox
                    if any(p[0] == "assign" and p[1] == b for p in payload)
                )
                st["base"] = b
                parts.add(("got", b, l, r))
        if st["base"] is not None and st["id"] is None:
            parts.add(("vec", st["base"]) + self._sig(st)[1:] + (r,))
        c = st["best"]
        if (
            c is not None
            and c[1] in ("fix", "unfreeze", "freeze")
            and c[4] != st["last_req"]
        ):
            if self._handle_request(st, c, r):
                st["last_req"] = c[4]
        if st["reply_at"] is not None and r >= st["reply_at"]:
            st["best"] = st["reply"][:4] + (r,)
            st["reply_at"] = None
            st["reply"] = None
        return parts

    def _handle_request(self, st, c, r):
        kind, target, payload = c[1], c[2], c[3]
        if kind == "fix":
            if st["base"] is None or st["id"] is not None:
                return False
            if self._sig(st, upto=payload) != target:
                return False
            st["id"] = target
            st["best"] = ("ctrl", "fixed", target, c[4], r)
            return True
        if st["id"] is None or target != st["id"]:
            return False
        if kind == "unfreeze":
            st["assigning"] = True
            st["abase"] = payload
            st["arounds"] = frozenset()
            st["credit"] = (0, 1)
            st["best"] = ("ctrl", "unfrozen", st["id"], c[4], r)
            return True
        # freeze: stop offering now, but let in-flight confirmations
        # (due two rounds after the last odd offer round) land first
        st["assigning"] = False
        st["reply_at"] = r + 2
        st["reply"] = ("ctrl", "count", st["id"], (c[4],) + st["credit"], 0)
        return True

    # -- leader ---------------------------------------------------------

    def _vec_ready(self, st):
        """Smallest emission round at which `expected` distinct
        signatures of the awaited cohort were broadcast, or None."""
        by_ts = {}
        for m in st["vecs"]:
            if m[1] == st["await_base"]:
                by_ts.setdefault(m[-1], set()).add(m[1:-1])
        for ts in sorted(by_ts):
            if len(by_ts[ts]) >= st["expected"]:
                return ts, sorted(by_ts[ts], key=term_key)
        return None

    def _send_conv(self, st, kind, target, payload, r):
        st["conv"] = ("ctrl", kind, target, payload, r)
        st["best"] = st["conv"]

    def _reply(self, st, want_kind):
        c = st["best"]
        if c is None or st["conv"] is None or c[1] != want_kind:
            return None
        echo = c[3][0] if isinstance(c[3], tuple) else c[3]
        return c if echo == st["conv"][4] else None

    def _leader_round(self, st, inbox, msgs, r):
        parts = {("lr", r)}
        st["lr"] = st["lr"] | frozenset({r})
        if r not in st["arr"]:
            st["arr"] = {**st["arr"], r: r}
        ph = st["phase"]

        if ph == "boot":
            if r == 1:
                # single-shot cohort-1 offer; travels a doubled graph so
                # every confirmation is back by round 3
                parts.add(("assign", 1))
                st["abase"] = 1
                st["arounds"] = frozenset({1})
            elif r >= 3:
                self._finish_cycle(st, r, own_only=True)
            return parts

        if ph == "await":
            ready = self._vec_ready(st)
            if ready is not None:
                t_star, sigs = ready
                st["fix_t"] = t_star
                st["queue"] = tuple(sigs)
                st["conv"] = None
                st["phase"] = "fix"
            elif r - st["await_from"] > self.k_cap:
                st["phase"] = "stalled"
            return parts

        if ph == "fix":
            if st["conv"] is not None:
                rep = self._reply(st, "fixed")
                if rep is None:
                    return parts
                st["ids"] = st["ids"] + (rep[2],)
                st["queue"] = st["queue"][1:]
                st["conv"] = None
            if st["queue"]:
                self._send_conv(st, "fix", st["queue"][0], st["fix_t"], r)
            else:
                st["phase"] = "unfreeze"
                st["queue"] = st["ids"]
                st["abase"] = st["next_base"]
                st["next_base"] += 1
            return parts

        if ph == "unfreeze":
            if st["conv"] is not None:
                if self._reply(st, "unfrozen") is None:
                    return parts
                st["queue"] = st["queue"][1:]
                st["conv"] = None
            if st["queue"]:
                self._send_conv(st, "unfreeze", st["queue"][0], st["abase"], r)
            else:
                # leader's own single offer round comes last in the cycle
                st["arounds"] = frozenset()
                st["credit"] = (0, 1)
                st["assigning"] = True
                st["phase"] = "selfassign"
            return parts

        if ph == "selfassign":
            if st["arounds"]:
                st["assigning"] = False
                st["phase"] = "cooldown"
            return parts

        if ph == "cooldown":
            if r >= max(st["arounds"]) + 2:
                st["phase"] = "freeze"
                st["queue"] = st["ids"]
                st["jsum"] = (0, 1)
                st["conv"] = None
            return parts

        if ph == "freeze":
            if st["conv"] is not None:
                rep = self._reply(st, "count")
                if rep is None:
                    return parts
                tot = Fraction(*st["jsum"]) + Fraction(rep[3][1], rep[3][2])
                st["jsum"] = (tot.numerator, tot.denominator)
                st["queue"] = st["queue"][1:]
                st["conv"] = None
            if st["queue"]:
                self._send_conv(st, "freeze", st["queue"][0], 0, r)
            else:
                self._finish_cycle(st, r, own_only=False)
            return parts

        return parts  # stalled / halting

    def _finish_cycle(self, st, r, own_only):
        j = Fraction(*st["credit"])
        if not own_only:
            j += Fraction(*st["jsum"])
        if j.denominator != 1:
            # a lost or duplicated confirmation: the duplication or
            # dynamicity promise was broken, so give up (no halt)
            st["phase"] = "stalled"
            return
        j = int(j)
        if j == 0:
            n = 1 + len(st["ids"])
            halt = ("ctrl", "halt", "all", n, r)
            st["best"] = halt
            st["halt_n"] = n
            st["halt_at"] = r + 2 * n + 4
            st["phase"] = "halting"
            return
        st["expected"] = j
        st["await_base"] = st["abase"]
        st["await_from"] = r
        st["phase"] = "await"


def high_dynamicity_naming(k_cap: int = 96) -> HighDynamicityNaming:
    return HighDynamicityNaming(k_cap)


def shipped_hd_schedule() -> DynamicSchedule:
    """The packaged n=4 duplicated schedule satisfying the k=5
    arrival-vector distinctness condition."""
    from importlib import resources

    text = resources.files("anonnet").joinpath("data/hd_n4.json").read_text()
    return DynamicSchedule.from_json(text)
