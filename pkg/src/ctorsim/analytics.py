"""Exact interruption probabilities via hypergeometric tail sums.

Selecting n bridges uniformly without replacement from a pool with
`known` censor-known members, the chance that i of them are known is
C(unknown, n-i) * C(known, i) / C(unknown+known, n). Communication is
interrupted when i exceeds what the code absorbs: i >= 1 for the
uncoded variants, i > r with redundancy r. Everything is computed in
exact rational arithmetic (fractions.Fraction); floats appear only when
callers convert at the output boundary.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .onion import Variant

ORACLE_SUBSET_LIMIT = 10**7

DEFAULT_UNKNOWN = 25
DEFAULT_KNOWN_RANGE = range(0, 26)
DEFAULT_CONFIGS: tuple[tuple[Variant, int, int], ...] = (
    (Variant.OTOR, 1, 0),
    (Variant.MTOR, 4, 0),
    (Variant.MTOR, 5, 0),
    (Variant.MTOR, 8, 0),
    (Variant.MTOR, 10, 0),
    (Variant.CTOR, 5, 2),
    (Variant.CTOR, 10, 4),
)


class ResourceLimitError(RuntimeError):
    """An enumeration request exceeds the subset guard."""


def binomial(a: int, b: int) -> int:
    """C(a, b); zero outside 0 <= b <= a."""
    if b < 0 or b > a:
        return 0
    return math.comb(a, b)


def _check_pool(unknown: int, known: int, circuits: int) -> None:
    if unknown < 0 or known < 0:
        raise ValueError("bridge counts must be non-negative")
    if circuits < 1:
        raise ValueError("at least one circuit is required")
    if circuits > unknown + known:
        raise ValueError(
            f"cannot select {circuits} bridges from a pool of {unknown + known}"
        )


def _blocked_tail(unknown: int, known: int, circuits: int, absorbable: int) -> Fraction:
    total = binomial(unknown + known, circuits)
    upper = min(circuits, known)
    hits = sum(
        binomial(unknown, circuits - i) * binomial(known, i)
        for i in range(absorbable + 1, upper + 1)
    )
    return Fraction(hits, total)


def p_block_plain(unknown: int, known: int, circuits: int) -> Fraction:
    """Probability that at least one selected entry bridge is censor-known.

    This is the interruption probability for the uncoded variants, where a
    single blocked circuit already kills the transfer.
    """
    _check_pool(unknown, known, circuits)
    p = _blocked_tail(unknown, known, circuits, absorbable=0)
    # complement identity: same event as "not every bridge drawn unknown"
    assert p == 1 - Fraction(binomial(unknown, circuits), binomial(unknown + known, circuits))
    return p


def p_block_lnc(unknown: int, known: int, circuits: int, redundancy: int) -> Fraction:
    """Probability that more than `redundancy` selected bridges are censor-known.

    With r redundant cells per generation the transfer survives up to r
    blocked circuits, so only deeper blocking interrupts it. Zero whenever
    the censor knows at most r bridges in total.
    """
    _check_pool(unknown, known, circuits)
    if not 0 <= redundancy < circuits:
        raise ValueError(f"redundancy must satisfy 0 <= r < n, got r={redundancy}, n={circuits}")
    return _blocked_tail(unknown, known, circuits, absorbable=redundancy)


def enumerate_oracle(unknown: int, known: int, circuits: int, threshold: int) -> Fraction:
    """Brute-force ground truth: walk every bridge selection and count the
    ones with more than `threshold` known bridges.

    Deliberately avoids the closed form so it can validate it. Guarded to
    at most ORACLE_SUBSET_LIMIT subsets.
    """
    _check_pool(unknown, known, circuits)
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    if binomial(unknown + known, circuits) > ORACLE_SUBSET_LIMIT:
        raise ResourceLimitError(
            f"C({unknown + known}, {circuits}) subsets exceed the {ORACLE_SUBSET_LIMIT} guard"
        )
    flags = (1,) * known + (0,) * unknown
    total = 0
    blocked = 0
    for combo in itertools.combinations(flags, circuits):
        total += 1
        if sum(combo) > threshold:
            blocked += 1
    return Fraction(blocked, total)


@dataclass(frozen=True)
class SweepRow:
    m_known: int
    variant: Variant
    n: int
    r: int
    probability: Fraction


def _validate_config(variant: Variant, n: int, r: int) -> None:
    if variant is Variant.OTOR and (n, r) != (1, 0):
        raise ValueError("otor rows are n=1, r=0")
    if variant is Variant.MTOR and r != 0:
        raise ValueError("mtor rows carry r=0")
    if variant is Variant.CTOR and not 1 <= r < n:
        raise ValueError(f"ctor rows need 1 <= r < n, got n={n}, r={r}")


def sweep(
    unknown: int,
    known_range: Iterable[int],
    configs: Sequence[tuple[Variant | str, int, int]] = DEFAULT_CONFIGS,
) -> list[SweepRow]:
    """Exact probability grid over known-bridge counts and variant configs,
    sorted by (m_known, variant, n)."""
    rows = []
    for m_known in known_range:
        for variant, n, r in configs:
            variant = Variant(variant)
            _validate_config(variant, n, r)
            p = (
                p_block_plain(unknown, m_known, n)
                if r == 0
                else p_block_lnc(unknown, m_known, n, r)
            )
            rows.append(SweepRow(m_known, variant, n, r, p))
    rows.sort(key=lambda row: (row.m_known, row.variant.value, row.n))
    return rows
