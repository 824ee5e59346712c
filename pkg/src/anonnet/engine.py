"""Synchronous execution: each round the adversary picks edges (seeing
current states), every non-halted node steps on the previous round's
inbox and emits new messages, and those messages travel along this
round's edges for processing next round.

Anonymity is an interface property: a step never sees node indices, n,
or topology beyond its inbox (and, in one-to-each mode, its current
label set).  Broadcast inboxes are delivered in canonical payload order
so index information cannot leak through ordering.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .adversary import Adversary, AdversaryContext, next_round
from .encoding import bit_cost, state_digest, term_key

BROADCAST = "broadcast"
ONE_TO_EACH = "one-to-each"


class ProtocolError(RuntimeError):
    pass


class ProtocolMachine:
    """A per-node anonymous state machine.

    mode: "broadcast" or "one-to-each".
    stabilizing: True for protocols that converge without halting; the
    engine then reports observe(state) per node at the round budget.
    """

    mode = BROADCAST
    stabilizing = False
    needs_leader = True

    def initial_state(self, is_leader: bool) -> dict:
        raise NotImplementedError

    def step(self, state: dict, inbox, r: int, labels):
        """-> (new_state, outbox, output).

        inbox: broadcast mode: tuple of payloads in canonical order;
        one-to-each: tuple of (previous-round receive label, payload).
        labels: None in broadcast; tuple of this round's labels 1..d in
        one-to-each (the outbox keys must be drawn from it).
        outbox: broadcast: one payload or None; one-to-each: dict
        label -> payload (missing labels send nothing).
        output: None to continue, anything else to output-and-halt; the
        outbox of the halting step is still delivered.
        """
        raise NotImplementedError

    def observe(self, state: dict):
        """Current output of a stabilizing protocol, or None."""
        return None

    def run_flags(self, states) -> dict:
        """Diagnostics attached to the RunResult (e.g. a stall notice)."""
        return {}


@dataclass
class RunResult:
    halted: bool
    rounds_executed: int
    outputs: dict
    max_message_bits: int
    total_message_bits: int
    total_messages: int
    trace: list = field(repr=False, default_factory=list)
    n: int = 0
    flags: dict = field(default_factory=dict)


def _payload_kind(payload) -> str:
    if isinstance(payload, tuple) and payload and isinstance(payload[0], str):
        return payload[0]
    if isinstance(payload, frozenset):
        return "+".join(sorted({_payload_kind(p) for p in payload}))
    return "msg"


def run(
    protocol: ProtocolMachine,
    adversary: Adversary,
    n: int | None = None,
    seed: int = 0,
    mode: str | None = None,
    max_rounds: int | None = None,
    record_trace: bool = False,
) -> RunResult:
    """Execute rounds 1, 2, ... until every node halts or max_rounds is
    reached.  Deterministic in (protocol, adversary, n, seed, mode,
    max_rounds)."""
    if n is None:
        n = adversary.n
    if n != adversary.n:
        raise ValueError(f"n={n} but adversary built for n={adversary.n}")
    if mode is None:
        mode = protocol.mode
    if mode != protocol.mode:
        raise ProtocolError(
            f"protocol requires mode {protocol.mode!r}, got {mode!r}"
        )
    if max_rounds is None:
        max_rounds = 20 * n + 100
    if n < 1 or max_rounds < 1:
        raise ValueError("need n >= 1 and max_rounds >= 1")

    states = [protocol.initial_state(i == 0) for i in range(n)]
    halted = [False] * n
    outputs = {}
    pending = [[] for _ in range(n)]  # (recv_label or None, payload)
    trace = []
    max_bits = total_bits = total_msgs = 0
    rounds_executed = 0

    for r in range(1, max_rounds + 1):
        snapshot = states  # adversary sees states at the start of the round
        ctx = AdversaryContext(
            round=r,
            state_digests=lambda s=snapshot: tuple(state_digest(x) for x in s),
            seed=seed,
        )
        g, labeling = next_round(adversary, ctx, mode)
        rounds_executed = r

        outboxes = {}
        halting_now = []
        for u in range(n):
            if halted[u]:
                continue
            if mode == BROADCAST:
                inbox = tuple(
                    sorted((p for _, p in pending[u]), key=term_key)
                )
                labels = None
            else:
                inbox = tuple(sorted(pending[u], key=lambda e: e[0]))
                labels = tuple(sorted(labeling[u]))
            st, outbox, out = protocol.step(states[u], inbox, r, labels)
            states[u] = st
            outboxes[u] = outbox
            if out is not None:
                outputs[u] = out
                halting_now.append(u)

        # Deliver along E(r); nodes halting this round still send their
        # final outbox but receive nothing afterwards.
        next_pending = [[] for _ in range(n)]
        msgs = []
        stopping = set(halting_now)
        if mode == BROADCAST:
            for u, outbox in outboxes.items():
                if outbox is None:
                    continue
                receivers = [
                    v
                    for v in g.neighbors(u)
                    if not halted[v] and v not in stopping
                ]
                if not receivers:
                    continue
                bits = bit_cost(outbox)
                max_bits = max(max_bits, bits)
                total_bits += bits
                total_msgs += 1
                for v in receivers:
                    next_pending[v].append((None, outbox))
                    if record_trace:
                        msgs.append((u, v, bits, _payload_kind(outbox)))
        else:
            inverse = {
                u: {v: lab for lab, v in labeling[u].items()} for u in range(n)
            }
            for u, outbox in outboxes.items():
                if not outbox:
                    continue
                for lab, payload in sorted(outbox.items()):
                    if lab not in labeling[u]:
                        raise ProtocolError(
                            f"node sent on label {lab} it does not hold in round {r}"
                        )
                    if payload is None:
                        continue
                    v = labeling[u][lab]
                    if halted[v] or v in stopping:
                        continue
                    bits = bit_cost(payload)
                    max_bits = max(max_bits, bits)
                    total_bits += bits
                    total_msgs += 1
                    next_pending[v].append((inverse[v][u], payload))
                    if record_trace:
                        msgs.append((u, v, bits, _payload_kind(payload)))

        for u in halting_now:
            halted[u] = True
        for u in range(n):
            if not halted[u]:
                pending[u] = next_pending[u]
            else:
                pending[u] = []

        if record_trace:
            trace.append(
                {
                    "round": r,
                    "edges": sorted([u, v] for u, v in g.edges),
                    "messages": [
                        {"from": u, "to": v, "bits": b, "kind": k}
                        for u, v, b, k in sorted(msgs)
                    ],
                    "digests": [state_digest(s) for s in states],
                }
            )

        if all(halted):
            break

    all_halted = all(halted)
    if not all_halted and protocol.stabilizing:
        for u in range(n):
            if u not in outputs:
                outputs[u] = protocol.observe(states[u])
    return RunResult(
        halted=all_halted,
        rounds_executed=rounds_executed,
        outputs=outputs,
        max_message_bits=max_bits,
        total_message_bits=total_bits,
        total_messages=total_msgs,
        trace=trace,
        n=n,
        flags=protocol.run_flags(states),
    )


def write_trace(result: RunResult, path) -> None:
    """One JSON record per round: round number, edge list, messages
    ({from,to,bits,kind}) and per-node state digests."""
    with open(path, "w") as fh:
        for rec in result.trace:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


METRICS_HEADER = (
    "protocol\tadversary\tn\tseed\trounds\tmax_bits\ttotal_bits\tverdict"
)


def metrics_row(protocol, adversary, n, seed, result: RunResult, verdict) -> str:
    return (
        f"{protocol}\t{adversary}\t{n}\t{seed}\t{result.rounds_executed}"
        f"\t{result.max_message_bits}\t{result.total_message_bits}\t{verdict}"
    )
