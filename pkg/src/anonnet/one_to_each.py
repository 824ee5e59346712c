"""One-to-each (locally labeled edges) naming protocols.

Fair and delegation-based stabilizing naming, terminating naming with
counting for mortal adversaries, a post-processing renamer onto
0..n-1, and a conversation-driven protocol that keeps the namespace
minimal while the run is still going.
"""

from __future__ import annotations

from .encoding import bit_cost, term_key
from .engine import ONE_TO_EACH, ProtocolError, ProtocolMachine

LEADER_ID = 0


def id_key(x):
    """Total order on nested ids: ints before tuples, tuples compared
    element-wise recursively."""
    if isinstance(x, tuple):
        return (1, tuple(id_key(e) for e in x))
    return (0, x)


def _parts(inbox):
    out = []
    for lab, payload in inbox:
        for p in sorted(payload, key=term_key):
            out.append((lab, p))
    return out


class FairNaming(ProtocolMachine):
    """Stabilizing naming where only the leader hands out ids of the form
    (clock, leader_id, counter).  Ids churn while the adversary keeps the
    leader meeting new nodes; under a fair schedule each node eventually
    keeps the oldest offer it ever saw."""

    mode = ONE_TO_EACH
    stabilizing = True

    def initial_state(self, is_leader):
        if is_leader:
            return {"role": "leader", "id": (0, LEADER_ID, 1), "counter": 1}
        return {"role": "node", "id": None}

    def observe(self, state):
        return state["id"]

    def step(self, state, inbox, r, labels):
        st = dict(state)
        if st["role"] == "leader":
            outbox = {}
            for idx, lab in enumerate(labels, 1):
                outbox[lab] = frozenset(
                    {("assign", (r - 1, st["id"], st["counter"] + idx))}
                )
            st["counter"] += len(labels)
            return st, outbox, None
        offers = [p[1] for _, p in _parts(inbox) if p[0] == "assign"]
        if offers:
            best = min(offers, key=lambda t: (t[0], id_key(t[1]), t[2]))
            if st["id"] is None or (best[0], id_key(best[1]), best[2]) < (
                st["id"][0],
                id_key(st["id"][1]),
                st["id"][2],
            ):
                st["id"] = best
        return st, None, None


class DelegateNaming(FairNaming):
    """Like fair naming but every named node hands out ids built on its
    own, so nodes can be named without ever meeting the leader.  Nodes
    keep the offer with the structurally smallest parent id."""

    def step(self, state, inbox, r, labels):
        st = dict(state)
        offers = [p[1] for _, p in _parts(inbox) if p[0] == "assign"]
        if st["role"] != "leader" and offers:
            best = min(offers, key=lambda t: (id_key(t[1]), t[0], t[2]))
            if st["id"] is None or (id_key(best[1]), best[0], best[2]) < (
                id_key(st["id"][1]),
                st["id"][0],
                st["id"][2],
            ):
                st["id"] = best
        if st["id"] is None:
            return st, None, None
        if "counter" not in st:
            st["counter"] = 0
        outbox = {}
        for idx, lab in enumerate(labels, 1):
            outbox[lab] = frozenset(
                {("assign", (r - 1, st["id"], st["counter"] + idx))}
            )
        st["counter"] += len(labels)
        return st, outbox, None


def fair_naming() -> FairNaming:
    return FairNaming()


def delegate_naming() -> DelegateNaming:
    return DelegateNaming()


class DynamicNaming(ProtocolMachine):
    """Terminating naming-and-counting.  Named nodes hand hierarchical
    ids (parent, counter) to every neighbor each round; acks flood the
    full set of known ids back to the leader, unnamed nodes flood fresh
    timestamps, and the leader halts once a full quiet window passes
    with every known id acked and no younger unnamed timestamp."""

    mode = ONE_TO_EACH

    def initial_state(self, is_leader):
        if is_leader:
            return {
                "role": "leader",
                "id": LEADER_ID,
                "count": 0,
                "known": frozenset({LEADER_ID}),
                "latest_new": 0,
                "time_bound": 0,
                "latest_unassigned": 0,
                "halt_left": None,
                "n": None,
            }
        return {
            "role": "node",
            "id": None,
            "count": 0,
            "acks": frozenset(),
            "latest_unassigned": 0,
            "halt_left": None,
            "n": None,
        }

    def step(self, state, inbox, r, labels):
        st = dict(state)
        if st["halt_left"] is not None:
            return self._drain(st, labels)
        parts = _parts(inbox)
        if st["role"] == "leader":
            return self._leader(st, parts, r, labels)
        return self._node(st, parts, r, labels)

    def _drain(self, st, labels):
        if st["halt_left"] == 0:
            return st, None, (st["id"], st["n"])
        st["halt_left"] -= 1
        out = {lab: frozenset({("halt", st["n"])}) for lab in labels}
        return st, out, ((st["id"], st["n"]) if st["halt_left"] == 0 else None)

    def _assign_out(self, st, labels, extra):
        out = {}
        for idx, lab in enumerate(labels, 1):
            out[lab] = frozenset({("assign", (st["id"], st["count"] + idx))} | extra)
        st["count"] += len(labels)
        return out

    def _leader(self, st, parts, r, labels):
        for _, p in parts:
            if p[0] == "unassigned":
                st["latest_unassigned"] = max(st["latest_unassigned"], p[1])
        acked = frozenset().union(
            *[p[1] for _, p in parts if p[0] == "ack"], frozenset()
        )
        fresh = acked - st["known"]
        if fresh:
            st["known"] = st["known"] | fresh
            st["latest_new"] = r
            st["time_bound"] = r + len(st["known"])
        if r == 1:
            out = self._assign_out(st, labels, frozenset())
            st["known"] = st["known"] | frozenset(
                {(LEADER_ID, i + 1) for i in range(len(labels))}
            )
            st["time_bound"] = 1 + len(st["known"])
            st["latest_new"] = 1
            return st, out, None
        if r > st["time_bound"] and st["latest_unassigned"] < st["latest_new"]:
            st["n"] = len(st["known"])
            st["halt_left"] = max(st["n"] - 1, 0)
            return self._drain(st, labels)
        return st, self._assign_out(st, labels, frozenset()), None

    def _node(self, st, parts, r, labels):
        halts = [p[1] for _, p in parts if p[0] == "halt"]
        if halts:
            st["n"] = halts[0]
            st["halt_left"] = max(st["n"] - 2, 0)
            return self._drain(st, labels)
        for _, p in parts:
            if p[0] == "ack":
                st["acks"] = st["acks"] | p[1]
            elif p[0] == "unassigned":
                st["latest_unassigned"] = max(st["latest_unassigned"], p[1])
        if st["id"] is None:
            offers = [p[1] for _, p in parts if p[0] == "assign"]
            if offers:
                st["id"] = min(offers, key=lambda t: (bit_cost(t), term_key(t)))
                st["acks"] = st["acks"] | frozenset({st["id"]})
        if st["id"] is None:
            # round 1 is skipped: nothing has been delivered yet, so an
            # unassigned(1) would only shadow the leader's first offers
            if r == 1:
                return st, None, None
            out = {lab: frozenset({("unassigned", r)}) for lab in labels}
            return st, out, None
        extra = {("ack", st["acks"])}
        if st["latest_unassigned"] > 0:
            extra.add(("unassigned", st["latest_unassigned"]))
        return st, self._assign_out(st, labels, frozenset(extra)), None


def dynamic_naming() -> DynamicNaming:
    return DynamicNaming()


def minimal_renaming_postprocess(ids: dict) -> dict:
    """Map unique ids (as produced by the naming protocols) onto 0..n-1,
    leader id 0 first, preserving the id order."""
    vals = list(ids.values())
    if len(set(vals)) != len(vals):
        raise ProtocolError("ids are not unique")
    ranked = sorted(vals, key=id_key)
    rank = {v: i for i, v in enumerate(ranked)}
    return {u: rank[v] for u, v in ids.items()}


class IndividualConversations(ProtocolMachine):
    """Terminating minimal naming-and-counting for mortal adversaries.

    Named nodes offer candidate ids k*d+j to their edges; an offer is
    kept only by a node that reported itself anonymous on the same edge
    the next round, so every id holder knows which offers possibly
    stuck.  Between assignment bursts the leader runs one conversation
    at a time (flooded by largest timestamp) to freeze assigners,
    collect possibly-assigned ids, locate each surviving id and compact
    it onto the next free consecutive id.  When a full cycle assigns
    nothing, the d known nodes hold exactly 0..d-1 and everyone halts
    2d+2 rounds after the announcement."""

    mode = ONE_TO_EACH

    def __init__(self):
        pass

    def initial_state(self, is_leader):
        st = {
            "role": "leader" if is_leader else "node",
            "id": LEADER_ID if is_leader else None,
            "rejected": frozenset(),
            "best": None,
            "last_req": -1,
            "frozen": True,
            "d": 1,
            "j": LEADER_ID if is_leader else None,
            "next_k": 1,
            "free": frozenset(),
            "offers": (),  # (label, offered id, k) sent last round
            "poss": (),
            "halt_at": None,
            "halt_n": None,
        }
        if is_leader:
            st.update(
                {
                    "phase": "unfreeze",
                    "queue": (),
                    "conv": None,
                    "pend": (),
                    "nextc": 1,
                    "cool": None,
                    "ids_n": 1,
                }
            )
        return st

    # -- plumbing --------------------------------------------------------

    def _resolve_offers(self, st, inbox):
        got = {lab: payload for lab, payload in inbox}
        poss = list(st["poss"])
        free = set(st["free"])
        for lab, offered, k in st["offers"]:
            reply = got.get(lab)
            taken = reply is not None and ("id", "anon") in reply
            if taken:
                poss.append(offered)
            else:
                free.add(k)
        st["offers"] = ()
        st["poss"] = tuple(poss)
        st["free"] = frozenset(free)

    def _absorb_ctrl(self, st, inbox):
        best = st["best"]
        for _, payload in inbox:
            for p in payload:
                if p[0] == "ctrl":
                    if best is None or (p[4], term_key(p)) > (
                        best[4],
                        term_key(best),
                    ):
                        best = p
        st["best"] = best

    def _take_k(self, st):
        if st["free"]:
            k = min(st["free"])
            st["free"] = st["free"] - {k}
            return k
        k = st["next_k"]
        st["next_k"] += 1
        return k

    def _outbox(self, st, labels, r):
        idpart = ("id", "anon" if st["id"] is None else st["id"])
        base = {idpart}
        if st["best"] is not None:
            base.add(st["best"])
        out = {}
        offers = []
        for lab in labels:
            payload = set(base)
            if not st["frozen"] and st["j"] is not None:
                k = self._take_k(st)
                val = k * st["d"] + st["j"]
                payload.add(("asg", val))
                offers.append((lab, val, k))
            out[lab] = frozenset(payload)
        st["offers"] = tuple(offers)
        return out

    # -- top level --------------------------------------------------------

    def step(self, state, inbox, r, labels):
        st = dict(state)
        self._resolve_offers(st, inbox)
        self._absorb_ctrl(st, inbox)
        if st["best"] is not None and st["best"][1] == "halt" and st["halt_at"] is None:
            c = st["best"]
            st["halt_n"] = c[3]
            st["halt_at"] = c[4] + 2 * c[3] + 2
        if st["id"] is None:
            offers = sorted(
                p[1]
                for _, payload in inbox
                for p in payload
                if p[0] == "asg"
            )
            if offers:
                st["id"] = offers[0]
                st["rejected"] = st["rejected"] | frozenset(offers[1:])
        if st["role"] == "leader":
            self._drive(st, r)
        else:
            self._serve(st, r)
        out = self._outbox(st, labels, r)
        if st["halt_at"] is not None and r >= st["halt_at"]:
            return st, out, (st["id"], st["halt_n"])
        return st, out, None

    # -- non-leader request handling ---------------------------------------

    def _serve(self, st, r):
        c = st["best"]
        if c is None or c[1].startswith("r_") or c[1] == "halt":
            return
        if c[4] == st["last_req"] or st["id"] is None:
            return
        kind, target, payload = c[1], c[2], c[3]
        if target != st["id"]:
            return
        reply = None
        if kind == "unfreeze":
            st["frozen"] = False
            st["d"] = payload
            st["j"] = st["id"]
            st["next_k"] = 1
            st["free"] = frozenset()
            reply = ("r_unfreeze", st["id"])
        elif kind == "freeze":
            st["frozen"] = True
            reply = ("r_freeze", st["id"])
        elif kind == "report":
            if st["poss"]:
                item, st["poss"] = st["poss"][0], st["poss"][1:]
                reply = ("r_report", ("item", item))
            else:
                reply = ("r_report", ("done",))
        elif kind == "seek":
            reply = ("r_seek", st["id"])
        elif kind == "getrej":
            if st["rejected"]:
                item = min(st["rejected"])
                st["rejected"] = st["rejected"] - {item}
                reply = ("r_getrej", ("item", item))
            else:
                reply = ("r_getrej", ("done",))
        elif kind == "reassign":
            st["id"] = payload
            reply = ("r_reassign", payload)
        if reply is not None:
            st["last_req"] = c[4]
            st["best"] = ("ctrl", reply[0], c[4], reply[1], r)

    # -- leader driver ------------------------------------------------------

    def _conv(self, st, kind, target, payload, r):
        st["conv"] = ("ctrl", kind, target, payload, r)
        st["best"] = st["conv"]

    def _creply(self, st, want):
        c = st["best"]
        if c is None or st["conv"] is None or c[1] != want:
            return None
        return c if c[2] == st["conv"][4] else None

    def _drive(self, st, r):
        ph = st["phase"]

        if ph == "unfreeze":
            if st["conv"] is not None:
                if self._creply(st, "r_unfreeze") is None:
                    return
                st["queue"] = st["queue"][1:]
                st["conv"] = None
            if st["queue"]:
                self._conv(st, "unfreeze", st["queue"][0], st["d"], r)
            else:
                # leader offers for exactly this round, then cools off so
                # its own offers resolve before freezing starts
                st["frozen"] = False
                st["next_k"] = 1
                st["free"] = frozenset()
                st["cool"] = r + 1
                st["phase"] = "cooling"
            return

        if ph == "cooling":
            st["frozen"] = True
            if r >= st["cool"]:
                st["phase"] = "freeze"
                st["queue"] = tuple(range(1, st["d"]))
                st["pend"] = ()
                st["conv"] = None
            return

        if ph == "freeze":
            if st["conv"] is not None:
                if st["conv"][1] == "freeze":
                    if self._creply(st, "r_freeze") is None:
                        return
                    self._conv(st, "report", st["conv"][2], 0, r)
                    return
                rep = self._creply(st, "r_report")
                if rep is None:
                    return
                if rep[3][0] == "item":
                    st["pend"] = st["pend"] + (rep[3][1],)
                    self._conv(st, "report", st["conv"][2], 0, r)
                    return
                st["queue"] = st["queue"][1:]
                st["conv"] = None
            if st["queue"]:
                self._conv(st, "freeze", st["queue"][0], 0, r)
                return
            pend = sorted(set(st["pend"]) | set(st["poss"]))
            st["poss"] = ()
            st["pend"] = tuple(pend)
            if not pend:
                n = st["nextc"]
                halt = ("ctrl", "halt", "all", n, r)
                st["best"] = halt
                st["halt_n"] = n
                st["halt_at"] = r + 2 * n + 2
                st["phase"] = "halting"
                return
            st["phase"] = "resolve"
            st["conv"] = None
            return

        if ph == "resolve":
            if st["conv"] is not None:
                kind = st["conv"][1]
                if kind == "seek":
                    if self._creply(st, "r_seek") is None:
                        return
                    self._conv(st, "getrej", st["conv"][2], 0, r)
                    return
                if kind == "getrej":
                    rep = self._creply(st, "r_getrej")
                    if rep is None:
                        return
                    if rep[3][0] == "item":
                        st["pend"] = tuple(
                            x for x in st["pend"] if x != rep[3][1]
                        )
                        self._conv(st, "getrej", st["conv"][2], 0, r)
                        return
                    self._conv(st, "reassign", st["conv"][2], st["nextc"], r)
                    return
                if self._creply(st, "r_reassign") is None:
                    return
                st["pend"] = st["pend"][1:]
                st["nextc"] += 1
                st["conv"] = None
            if st["pend"]:
                self._conv(st, "seek", st["pend"][0], 0, r)
                return
            st["d"] = st["nextc"]
            st["phase"] = "unfreeze"
            st["queue"] = tuple(range(1, st["d"]))
            st["conv"] = None
            return

        # halting: nothing left to drive


def individual_conversations() -> IndividualConversations:
    return IndividualConversations()
