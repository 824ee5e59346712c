"""Canonical message/state terms: bit accounting, ordering, digests.

Terms are built from nonnegative ints, short symbol strings (finite
protocol alphabets, charged a flat cost), tuples, frozensets and
Fractions.  States may additionally contain dicts, lists and None.
"""

from __future__ import annotations

import hashlib
from fractions import Fraction
from functools import lru_cache


class EncodingError(ValueError):
    pass


def _int_bits(v: int) -> int:
    # value bits b = floor(log2(v+1)) + 1, plus a unary length prefix of
    # b bits and one terminator bit: cost = 2*b + 1.
    b = (v + 1).bit_length()
    return 2 * b + 1


_SYMBOL_BITS = 4  # symbols come from a fixed finite alphabet per protocol


@lru_cache(maxsize=None)
def bit_cost(payload) -> int:
    """Deterministic bit size of a message payload.

    ints: 2*(floor(log2(v+1))+1) + 1; symbols: flat 4; tuples: parts plus
    2 bits of structure each; frozensets: elements plus 2 bits each plus
    the element count as an int; Fractions: as a 2-tuple of ints.
    Monotone in every part.
    """
    if isinstance(payload, bool):
        raise EncodingError("bool is not an encodable term")
    if isinstance(payload, int):
        if payload < 0:
            raise EncodingError(f"negative integer not encodable: {payload}")
        return _int_bits(payload)
    if isinstance(payload, str):
        return _SYMBOL_BITS
    if isinstance(payload, Fraction):
        if payload < 0:
            raise EncodingError(f"negative rational not encodable: {payload}")
        return _int_bits(payload.numerator) + _int_bits(payload.denominator) + 4
    if isinstance(payload, tuple):
        return sum(bit_cost(p) for p in payload) + 2 * len(payload)
    if isinstance(payload, frozenset):
        return (
            sum(bit_cost(p) for p in payload)
            + 2 * len(payload)
            + _int_bits(len(payload))
        )
    raise EncodingError(f"not an encodable term: {type(payload).__name__}")


_RANK = {int: 0, str: 1, Fraction: 2, tuple: 3, frozenset: 4}


@lru_cache(maxsize=None)
def term_key(term):
    """Total-order key over terms, usable across mixed types."""
    if isinstance(term, int) and not isinstance(term, bool):
        return (0, term)
    if isinstance(term, str):
        return (1, term)
    if isinstance(term, Fraction):
        return (2, term.numerator, term.denominator)
    if isinstance(term, tuple):
        return (3, tuple(term_key(t) for t in term))
    if isinstance(term, frozenset):
        return (4, tuple(sorted(term_key(t) for t in term)))
    raise EncodingError(f"not an orderable term: {type(term).__name__}")


def canonical(value) -> str:
    """Stable textual form; equal values give equal strings, independent
    of set/dict iteration order."""
    if value is None:
        return "N"
    if isinstance(value, bool):
        return "B1" if value else "B0"
    if isinstance(value, int):
        return f"I{value}"
    if isinstance(value, str):
        return "R" + repr(value)
    if isinstance(value, Fraction):
        return f"F{value.numerator}/{value.denominator}"
    if isinstance(value, tuple):
        return "T(" + ",".join(canonical(v) for v in value) + ")"
    if isinstance(value, (list,)):
        return "L(" + ",".join(canonical(v) for v in value) + ")"
    if isinstance(value, (set, frozenset)):
        return "S(" + ",".join(sorted(canonical(v) for v in value)) + ")"
    if isinstance(value, dict):
        items = sorted((canonical(k), canonical(v)) for k, v in value.items())
        return "D(" + ",".join(f"{k}:{v}" for k, v in items) + ")"
    raise EncodingError(f"not canonicalizable: {type(value).__name__}")


def state_digest(state) -> str:
    """Opaque digest of a protocol state; equal states give equal digests,
    stable across runs and processes."""
    return hashlib.sha256(canonical(state).encode()).hexdigest()
