"""Transport model: relays, three-hop circuits sharing one exit, layered
stream encryption, and the client-to-exit pipeline for all three variants.

The single-circuit (otor), multi-circuit (mtor), and coded multi-circuit
(ctor) variants share one code path and differ only in their CodeParams:
otor is (n=1, k=1, r=0), mtor is (n=k, r=0), ctor has r >= 1.

Layer encryption is a keyed pseudorandom stream XOR, not real cryptography:
the keystream is SHAKE-256 over (router key, circuit id, cell sequence,
layer position). Binding the layer position is what makes out-of-order
peeling detectable; bare XOR layers would commute.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence

from .codec import (
    CodeParams,
    CodedCell,
    Generation,
    GeneratorMatrix,
    UnrecoverableGeneration,
    build_generator,
    decode_generation,
    encode_generation,
    reassemble_message,
    split_message,
)
from .gf256 import xor_bytes

DEFAULT_MIDDLE_POOL = 50
DEFAULT_EXIT_POOL = 10


class Variant(str, Enum):
    OTOR = "otor"
    MTOR = "mtor"
    CTOR = "ctor"


class RouterKind(str, Enum):
    BRIDGE = "bridge"
    MIDDLE = "middle"
    EXIT = "exit"


@dataclass(frozen=True)
class OnionRouter:
    router_id: str
    kind: RouterKind
    layer_key: bytes


def derive_layer_key(router_id: str) -> bytes:
    """Deterministic per-router key material; stands in for real key exchange."""
    return hashlib.shake_256(b"layer-key:" + router_id.encode()).digest(16)


def bridge_router(bridge_id: str) -> OnionRouter:
    return OnionRouter(bridge_id, RouterKind.BRIDGE, derive_layer_key(bridge_id))


@dataclass(frozen=True)
class RouterRegistry:
    """Immutable pool of middle and exit relays available to a client."""

    middles: tuple[OnionRouter, ...]
    exits: tuple[OnionRouter, ...]

    @classmethod
    def build(cls, middles: int = DEFAULT_MIDDLE_POOL, exits: int = DEFAULT_EXIT_POOL) -> "RouterRegistry":
        """Registry with generated relays; the default pool sizes are an
        operational stand-in, not a measured network topology."""
        if middles < 1 or exits < 1:
            raise ValueError("registry needs at least one middle and one exit")
        return cls(
            middles=tuple(
                OnionRouter(f"middle-{i:03d}", RouterKind.MIDDLE, derive_layer_key(f"middle-{i:03d}"))
                for i in range(middles)
            ),
            exits=tuple(
                OnionRouter(f"exit-{i:02d}", RouterKind.EXIT, derive_layer_key(f"exit-{i:02d}"))
                for i in range(exits)
            ),
        )


@dataclass
class Circuit:
    """entry -> middle -> exit relay chain; blocked when its entry is censored."""

    entry: OnionRouter
    middle: OnionRouter
    exit: OnionRouter
    blocked: bool = False

    @property
    def circuit_id(self) -> str:
        # entries are unique within a circuit set, so the entry id names the circuit
        return self.entry.router_id


@dataclass(frozen=True)
class CircuitSet:
    """n disjoint circuits sharing exactly one exit: 2n+1 distinct relays."""

    circuits: tuple[Circuit, ...]

    def __post_init__(self):
        if not self.circuits:
            raise ValueError("a circuit set holds at least one circuit")
        entries = {c.entry.router_id for c in self.circuits}
        middles = {c.middle.router_id for c in self.circuits}
        exits = {c.exit.router_id for c in self.circuits}
        n = len(self.circuits)
        if len(entries) != n:
            raise ValueError("entry relays must be pairwise distinct")
        if len(middles) != n:
            raise ValueError("middle relays must be pairwise distinct")
        if len(exits) != 1:
            raise ValueError("all circuits must share one exit relay")
        if entries & middles or exits & (entries | middles):
            raise ValueError("relay roles must not overlap within a circuit set")

    def __len__(self) -> int:
        return len(self.circuits)

    def __iter__(self) -> Iterator[Circuit]:
        return iter(self.circuits)

    def __getitem__(self, i: int) -> Circuit:
        return self.circuits[i]


def build_circuits(
    bridge_ids: Sequence[str], registry: RouterRegistry, rng: random.Random
) -> CircuitSet:
    """Build one circuit per chosen bridge, middles and the shared exit drawn
    uniformly without replacement from the registry."""
    n = len(bridge_ids)
    if n < 1:
        raise ValueError("need at least one bridge")
    if len(set(bridge_ids)) != n:
        raise ValueError("bridge ids must be distinct")
    if len(registry.middles) < n:
        raise ValueError(f"registry has {len(registry.middles)} middles, need {n}")
    if not registry.exits:
        raise ValueError("registry has no exit relays")
    middles = rng.sample(registry.middles, n)
    shared_exit = rng.choice(registry.exits)
    return CircuitSet(
        tuple(
            Circuit(bridge_router(bridge_id), middle, shared_exit)
            for bridge_id, middle in zip(bridge_ids, middles)
        )
    )


@dataclass(frozen=True)
class LayeredCell:
    """Wire bytes under 0..3 encryption layers, tagged with routing context."""

    payload: bytes
    layers_remaining: int
    circuit_id: str
    seq: int


def _keystream(key: bytes, circuit_id: str, seq: int, depth: int, size: int) -> bytes:
    if not key:
        raise ValueError("router layer key must be non-empty")
    h = hashlib.shake_256()
    h.update(len(key).to_bytes(2, "big"))
    h.update(key)
    cid = circuit_id.encode()
    h.update(len(cid).to_bytes(2, "big"))
    h.update(cid)
    h.update(seq.to_bytes(8, "big"))
    h.update(bytes([depth]))
    return h.digest(size)


def wrap_layers(cell_bytes: bytes, circuit: Circuit, seq: int = 0) -> LayeredCell:
    """Apply the exit, middle, and entry stream layers, in that order, so that
    peeling proceeds entry -> middle -> exit."""
    data = bytes(cell_bytes)
    for depth, router in ((1, circuit.exit), (2, circuit.middle), (3, circuit.entry)):
        data = xor_bytes(data, _keystream(router.layer_key, circuit.circuit_id, seq, depth, len(data)))
    return LayeredCell(data, 3, circuit.circuit_id, seq)


def peel_layer(cell: LayeredCell, router: OnionRouter) -> LayeredCell:
    """Remove one layer with the router's key."""
    if cell.layers_remaining <= 0:
        raise ValueError("no encryption layers left to peel")
    data = xor_bytes(
        cell.payload,
        _keystream(router.layer_key, cell.circuit_id, cell.seq, cell.layers_remaining, len(cell.payload)),
    )
    return LayeredCell(data, cell.layers_remaining - 1, cell.circuit_id, cell.seq)


def transmit(
    circuits: CircuitSet, coded_generations: Sequence[Sequence[CodedCell]]
) -> list[CodedCell]:
    """Carry every generation across the circuit set; sub-flow i rides circuit i.

    Blocked circuits drop their whole sub-flow silently. Surviving cells are
    wrapped, peeled hop by hop, and reparsed from wire bytes, so the returned
    cells are exactly what the exit relay can see.
    """
    n = len(circuits)
    delivered: list[CodedCell] = []
    for gen_cells in coded_generations:
        if len(gen_cells) != n:
            raise ValueError(f"generation carries {len(gen_cells)} cells for {n} circuits")
        for idx, (circuit, cell) in enumerate(zip(circuits, gen_cells)):
            if cell.subflow_index != idx:
                raise ValueError(
                    f"sub-flow {cell.subflow_index} offered to circuit {idx}; order mismatch"
                )
            if circuit.blocked:
                continue
            layered = wrap_layers(cell.to_wire(), circuit, seq=cell.generation_id)
            for router in (circuit.entry, circuit.middle, circuit.exit):
                layered = peel_layer(layered, router)
            delivered.append(CodedCell.from_wire(layered.payload))
    return delivered


@dataclass(frozen=True)
class TransferResult:
    success: bool
    data: bytes | None
    failed_generations: tuple[int, ...]
    delivered_counts: tuple[int, ...]


def validate_variant_params(variant: Variant, params: CodeParams) -> None:
    """Reject CodeParams that do not fit the variant's shape."""
    variant = Variant(variant)
    if variant is Variant.OTOR and (params.n, params.k, params.r) != (1, 1, 0):
        raise ValueError(f"otor runs one uncoded circuit (n=1, k=1, r=0), got {params}")
    if variant is Variant.MTOR and params.r != 0:
        raise ValueError(f"mtor carries no redundancy (r=0), got {params}")
    if variant is Variant.CTOR and params.r < 1:
        raise ValueError(f"ctor needs redundancy (r >= 1), got {params}")


def run_transfer(
    variant: Variant,
    params: CodeParams,
    message: bytes,
    circuits: CircuitSet,
    matrix: GeneratorMatrix | None = None,
) -> TransferResult:
    """One full client-to-exit transfer of a message over a circuit set.

    Success means every generation decoded and the reassembled bytes equal
    the message; for otor and mtor that reduces to no circuit being blocked.
    """
    validate_variant_params(variant, params)
    if len(circuits) != params.n:
        raise ValueError(f"{len(circuits)} circuits for code with n={params.n}")
    if matrix is None:
        matrix = build_generator(params)
    elif matrix.params != params:
        raise ValueError("generator matrix was built for different code parameters")

    generations = split_message(message, params.k)
    coded = [encode_generation(g, matrix) for g in generations]
    arrived = transmit(circuits, coded)

    by_generation: dict[int, list[CodedCell]] = {}
    for cell in arrived:
        by_generation.setdefault(cell.generation_id, []).append(cell)

    decoded: list[Generation] = []
    failed: list[int] = []
    counts: list[int] = []
    for generation in generations:
        cells = by_generation.get(generation.generation_id, [])
        counts.append(len(cells))
        if len(cells) < params.k:
            failed.append(generation.generation_id)
            continue
        try:
            decoded.append(decode_generation(cells, params))
        except UnrecoverableGeneration:
            failed.append(generation.generation_id)
    if failed:
        return TransferResult(False, None, tuple(failed), tuple(counts))
    recovered = reassemble_message(decoded)
    return TransferResult(recovered == bytes(message), recovered, (), tuple(counts))
