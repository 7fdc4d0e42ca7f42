"""Bridge pools, the censor's knowledge set, and the Monte Carlo trial engine.

The censor model is static: a fixed subset of the bridge pool is known to
the censor, and every circuit whose entry bridge is known gets blocked.
The client samples bridges uniformly without replacement and cannot tell
known from unknown. A trial is interrupted when more circuits are blocked
than the code can absorb (any blocking at all for otor/mtor).

Randomness is Python's random.Random (MT19937). Campaign substreams are
derived by seeding fresh generators from SHAKE-256 over (seed, label), so
results are bit-reproducible for a fixed seed and the bridge-selection
stream does not shift when the full-pipeline fraction changes.
"""

from __future__ import annotations

import functools
import hashlib
import math
import random
from dataclasses import dataclass
from functools import cached_property

from .codec import CodeParams
from .onion import (
    RouterRegistry,
    Variant,
    build_circuits,
    run_transfer,
    validate_variant_params,
)

DEFAULT_FULL_PIPELINE_FRACTION = 0.01

# fixed payload for trials that only need the interruption bit
_DEFAULT_MESSAGE = hashlib.shake_256(b"trial-payload").digest(1024)


class ConsistencyError(RuntimeError):
    """The transport pipeline and the blocked-count rule disagreed on a trial."""


@dataclass(frozen=True)
class BridgePool:
    """Disjoint sets of bridges the censor does not / does know about."""

    unknown: frozenset[str]
    known: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "unknown", frozenset(self.unknown))
        object.__setattr__(self, "known", frozenset(self.known))
        if self.unknown & self.known:
            raise ValueError("a bridge cannot be both known and unknown to the censor")

    @classmethod
    def build(cls, num_unknown: int, num_known: int) -> "BridgePool":
        if num_unknown < 0 or num_known < 0:
            raise ValueError("bridge counts must be non-negative")
        return cls(
            unknown=frozenset(f"u{i:03d}" for i in range(num_unknown)),
            known=frozenset(f"k{i:03d}" for i in range(num_known)),
        )

    @cached_property
    def ordered(self) -> tuple[str, ...]:
        """Canonical selection order, so sampling is reproducible."""
        return tuple(sorted(self.unknown | self.known))

    def __len__(self) -> int:
        return len(self.unknown) + len(self.known)


@dataclass(frozen=True)
class CensorScenario:
    """One experiment point: a bridge pool plus a variant and its code shape."""

    pool: BridgePool
    variant: Variant
    params: CodeParams

    def __post_init__(self):
        validate_variant_params(self.variant, self.params)
        if self.params.n > len(self.pool):
            raise ValueError(
                f"cannot select {self.params.n} bridges from a pool of {len(self.pool)}"
            )

    @property
    def n(self) -> int:
        return self.params.n

    @classmethod
    def for_variant(cls, pool: BridgePool, variant: Variant | str, n: int, r: int = 0) -> "CensorScenario":
        variant = Variant(variant)
        if variant is Variant.OTOR:
            if n != 1 or r != 0:
                raise ValueError("otor is a single uncoded circuit: n=1, r=0")
            params = CodeParams(1, 1, 0)
        elif variant is Variant.MTOR:
            if r != 0:
                raise ValueError("mtor carries no redundancy: r=0")
            params = CodeParams(n, n, 0)
        else:
            params = CodeParams(n, n - r, r)
        return cls(pool, variant, params)


@dataclass(frozen=True)
class TrialOutcome:
    chosen_bridges: tuple[str, ...]
    blocked_count: int
    interrupted: bool


@dataclass(frozen=True)
class CampaignResult:
    trials: int
    interruptions: int
    p_empirical: float
    ci95: float
    seed: int


def derive_seed(seed: int, label: str) -> int:
    """Deterministic sub-seed for a named substream of a campaign seed."""
    return int.from_bytes(hashlib.shake_256(f"{seed}:{label}".encode()).digest(16), "big")


def derive_rng(seed: int, label: str) -> random.Random:
    return random.Random(derive_seed(seed, label))


@functools.lru_cache(maxsize=1)
def default_registry() -> RouterRegistry:
    return RouterRegistry.build()


def select_bridges(pool: BridgePool, n: int, rng: random.Random) -> list[str]:
    """Uniform sample of n bridges without replacement over the whole pool."""
    if n < 1:
        raise ValueError("must select at least one bridge")
    if n > len(pool):
        raise ValueError(f"cannot select {n} bridges from a pool of {len(pool)}")
    return rng.sample(pool.ordered, n)


def interrupted_by_rule(blocked_count: int, params: CodeParams) -> bool:
    """Communication is lost once more circuits are blocked than the code absorbs."""
    return blocked_count > params.r


def run_trial(
    scenario: CensorScenario,
    message: bytes | None,
    rng: random.Random,
    *,
    circuit_rng: random.Random | None = None,
    registry: RouterRegistry | None = None,
) -> TrialOutcome:
    """One full trial: select bridges, build circuits, run the byte pipeline.

    Raises ConsistencyError if the transport outcome ever disagrees with
    the blocked-count rule; the two models must be interchangeable.
    """
    if message is None:
        message = _DEFAULT_MESSAGE
    if circuit_rng is None:
        circuit_rng = rng
    if registry is None:
        registry = default_registry()
    chosen = select_bridges(scenario.pool, scenario.n, rng)
    blocked_count = sum(1 for b in chosen if b in scenario.pool.known)
    circuits = build_circuits(chosen, registry, circuit_rng)
    for circuit in circuits:
        circuit.blocked = circuit.entry.router_id in scenario.pool.known
    result = run_transfer(scenario.variant, scenario.params, message, circuits)
    interrupted = not result.success
    if interrupted != interrupted_by_rule(blocked_count, scenario.params):
        raise ConsistencyError(
            f"pipeline interrupted={interrupted} but blocked_count={blocked_count} "
            f"with r={scenario.params.r}"
        )
    return TrialOutcome(tuple(chosen), blocked_count, interrupted)


def run_campaign(
    scenario: CensorScenario,
    trials: int,
    seed: int,
    *,
    full_pipeline_fraction: float = DEFAULT_FULL_PIPELINE_FRACTION,
    message: bytes | None = None,
    registry: RouterRegistry | None = None,
) -> CampaignResult:
    """Estimate the interruption probability over many independent trials.

    Most trials take the fast path (bridge selection and the blocked-count
    rule only); a deterministic stride of them additionally runs the full
    encode/transmit/decode pipeline, which cross-checks the rule on every
    such trial. The empirical fraction comes with a 95% binomial
    confidence half-width.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0.0 <= full_pipeline_fraction <= 1.0:
        raise ValueError("full_pipeline_fraction must be in [0, 1]")
    select_rng = derive_rng(seed, "bridge-selection")
    circuit_rng = derive_rng(seed, "circuit-construction")
    stride = round(1 / full_pipeline_fraction) if full_pipeline_fraction > 0 else 0

    ordered = scenario.pool.ordered
    known = scenario.pool.known
    n = scenario.n
    absorbable = scenario.params.r
    sample = select_rng.sample
    interruptions = 0
    for i in range(trials):
        if stride and i % stride == 0:
            outcome = run_trial(
                scenario, message, select_rng, circuit_rng=circuit_rng, registry=registry
            )
            interruptions += outcome.interrupted
        else:
            blocked = sum(1 for b in sample(ordered, n) if b in known)
            interruptions += blocked > absorbable
    p = interruptions / trials
    ci95 = 1.96 * math.sqrt(p * (1.0 - p) / trials)
    return CampaignResult(trials, interruptions, p, ci95, seed)
