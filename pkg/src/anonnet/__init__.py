"""Deterministic simulator and protocol library for anonymous unknown
networks under per-round connectivity."""

from .adversary import (
    Adversary,
    AdversaryContext,
    AdversaryError,
    DuplicatingAdversary,
    FairMeetAllAdversary,
    RandomConnectedAdversary,
    ReplayAdversary,
    StaticAdversary,
    SymmetricMirrorAdversary,
    duplicate_schedule,
    line,
    ring,
    star,
    symmetric_tree,
)
from .analysis import (
    GrowthFit,
    VerdictUndefined,
    doubling_deltas,
    growth_fit,
    lockstep_check,
    lockstep_holds,
    ring_indistinguishability_demo,
    verdict,
)
from .broadcast_dynamic import (
    shipped_hd_schedule,
    check_high_dynamicity,
    degree_counting,
    expansion_counting,
    high_dynamicity_naming,
    max_degree_seen,
)
from .encoding import EncodingError, bit_cost, canonical, state_digest, term_key
from .engine import (
    BROADCAST,
    ONE_TO_EACH,
    ProtocolError,
    ProtocolMachine,
    RunResult,
    run,
    write_trace,
)
from .graphs import (
    CausalReachability,
    DynamicSchedule,
    GraphError,
    HorizonError,
    InstantGraph,
    causal_closure,
    check_influence_lemma,
    is_connected,
    max_expansion,
    validate_one_interval,
)
from .one_to_each import (
    delegate_naming,
    dynamic_naming,
    fair_naming,
    individual_conversations,
    minimal_renaming_postprocess,
)
from .static_protocols import (
    anonymous_counting,
    degree_klabeling,
    leader_eccentricity,
)

__all__ = [n for n in dir() if not n.startswith("_")]
__version__ = "0.1.0"
