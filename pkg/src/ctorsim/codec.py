"""Generation-based systematic (n, k) erasure codec over GF(2^8).

Traffic is framed, chopped into 512-byte cells, and grouped k cells at a
time into generations. Each generation is expanded to n coded cells: the
first k carry the originals verbatim, the remaining r = n - k are parity
rows taken from a column-normalized Cauchy block, which makes every k-row
subset of the generator invertible. Any k surviving coded cells therefore
rebuild the generation exactly; with k-1 or fewer the generation is lost.

Encoder and decoder are stateless given (params, matrix); generations can
be processed independently and concurrently.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from . import gf256

CELL_SIZE = 512
_LENGTH_PREFIX = 8  # big-endian message length, first bytes of the cell stream
_WIRE_FIXED = 4 + 1  # generation id + sub-flow index


class UnrecoverableGeneration(Exception):
    """Raised when fewer than k independent coded cells survive for a generation."""

    def __init__(self, generation_id: int, received: int | None = None):
        self.generation_id = generation_id
        self.received = received
        detail = f" ({received} cells received)" if received is not None else ""
        super().__init__(f"generation {generation_id} cannot be recovered{detail}")


@dataclass(frozen=True)
class CodeParams:
    """Code shape: n coded cells per generation, k of them data, r parity."""

    n: int
    k: int
    r: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.r < 0:
            raise ValueError(f"r must be >= 0, got {self.r}")
        if self.n != self.k + self.r:
            raise ValueError(f"n must equal k + r, got n={self.n}, k={self.k}, r={self.r}")
        if self.n > 255:
            raise ValueError(f"n must be <= 255 (field size bound), got {self.n}")


@dataclass(frozen=True)
class Generation:
    """k original cells encoded (and decoded) together."""

    generation_id: int
    cells: tuple[bytes, ...]

    def __post_init__(self):
        if self.generation_id < 0:
            raise ValueError("generation_id must be non-negative")
        object.__setattr__(self, "cells", tuple(self.cells))
        if not self.cells:
            raise ValueError("a generation holds at least one cell")
        for cell in self.cells:
            if len(cell) != CELL_SIZE:
                raise ValueError(f"cells are exactly {CELL_SIZE} bytes, got {len(cell)}")


@dataclass(frozen=True)
class CodedCell:
    """One coded cell: payload plus the coefficient row that produced it."""

    generation_id: int
    subflow_index: int
    coefficients: bytes
    payload: bytes

    def __post_init__(self):
        if not 0 <= self.generation_id < 2**32:
            raise ValueError("generation_id must fit 4 bytes")
        if not 0 <= self.subflow_index <= 255:
            raise ValueError("subflow_index must fit 1 byte")
        if not self.coefficients:
            raise ValueError("coefficient vector must be non-empty")
        if len(self.payload) != CELL_SIZE:
            raise ValueError(f"payload is exactly {CELL_SIZE} bytes, got {len(self.payload)}")

    def to_wire(self) -> bytes:
        """Wire layout: generation_id (4B BE) | subflow_index (1B) | k coefficients | payload."""
        return (
            self.generation_id.to_bytes(4, "big")
            + bytes([self.subflow_index])
            + self.coefficients
            + self.payload
        )

    @classmethod
    def from_wire(cls, data: bytes) -> "CodedCell":
        if len(data) < _WIRE_FIXED + 1 + CELL_SIZE:
            raise ValueError(f"wire cell too short: {len(data)} bytes")
        k = len(data) - _WIRE_FIXED - CELL_SIZE
        return cls(
            generation_id=int.from_bytes(data[:4], "big"),
            subflow_index=data[4],
            coefficients=bytes(data[5 : 5 + k]),
            payload=bytes(data[5 + k :]),
        )


@dataclass(frozen=True)
class GeneratorMatrix:
    """n coefficient rows of length k; rows 0..k-1 are the identity."""

    params: CodeParams
    rows: tuple[bytes, ...]

    def __post_init__(self):
        if len(self.rows) != self.params.n:
            raise ValueError(f"expected {self.params.n} rows, got {len(self.rows)}")
        k = self.params.k
        for i, row in enumerate(self.rows):
            if len(row) != k:
                raise ValueError(f"row {i} has length {len(row)}, expected {k}")
            if i < k and row != _unit_row(k, i):
                raise ValueError(f"row {i} must be the unit vector (systematic form)")


def _unit_row(k: int, i: int) -> bytes:
    row = bytearray(k)
    row[i] = 1
    return bytes(row)


def build_generator(params: CodeParams) -> GeneratorMatrix:
    """Deterministic systematic generator whose every k-row subset is invertible.

    Parity rows come from the Cauchy block 1/(x_i + y_j) on the distinct
    points x_i = i, y_j = r + j, with each column scaled so the first parity
    row is all ones (for r = 1 the parity cell is then a plain XOR of the
    data cells). Column scaling by nonzero constants preserves invertibility
    of every square minor, so the any-k property survives the normalization.
    """
    k, r = params.k, params.r
    rows = [_unit_row(k, i) for i in range(k)]
    if r:
        block = [[gf256.inv(i ^ (r + j)) for j in range(k)] for i in range(r)]
        for j in range(k):
            s = gf256.inv(block[0][j])
            for i in range(r):
                block[i][j] = gf256.mul(block[i][j], s)
        rows.extend(bytes(row) for row in block)
    return GeneratorMatrix(params, tuple(rows))


def build_random_generator(params: CodeParams, rng: random.Random) -> GeneratorMatrix:
    """Systematic generator with uniformly random parity coefficients.

    Experimental mode without the any-k guarantee: a k-subset touching the
    random rows may be singular, in which case decoding reports the
    generation as unrecoverable rather than silently mis-decoding.
    """
    k, r = params.k, params.r
    rows = [_unit_row(k, i) for i in range(k)]
    rows.extend(bytes(rng.randrange(256) for _ in range(k)) for _ in range(r))
    return GeneratorMatrix(params, tuple(rows))


def _combine(coefficients: Sequence[int], payloads: Sequence[bytes], size: int) -> bytes:
    acc = 0
    for c, data in zip(coefficients, payloads):
        if c == 0:
            continue
        acc ^= int.from_bytes(gf256.scale_bytes(data, c), "big")
    return acc.to_bytes(size, "big")


def encode_generation(generation: Generation, matrix: GeneratorMatrix) -> list[CodedCell]:
    """Expand k original cells into n coded cells, originals first."""
    params = matrix.params
    if len(generation.cells) != params.k:
        raise ValueError(
            f"generation has {len(generation.cells)} cells, code expects {params.k}"
        )
    out = []
    for idx in range(params.n):
        row = matrix.rows[idx]
        payload = generation.cells[idx] if idx < params.k else _combine(row, generation.cells, CELL_SIZE)
        out.append(CodedCell(generation.generation_id, idx, row, payload))
    return out


def decode_generation(received: Sequence[CodedCell], params: CodeParams) -> Generation:
    """Recover the original k cells from any k independent coded cells.

    Takes the systematic shortcut when all k original cells arrived;
    otherwise runs Gaussian elimination over GF(2^8) on the coefficient
    rows with the payloads as the augmented part.
    """
    if not received:
        raise ValueError("decode needs at least one coded cell")
    generation_id = received[0].generation_id
    k = params.k
    originals: dict[int, bytes] = {}
    for cell in received:
        if cell.generation_id != generation_id:
            raise ValueError("coded cells from mixed generations")
        if len(cell.coefficients) != k:
            raise ValueError(f"coefficient vector length {len(cell.coefficients)}, expected {k}")
        if cell.subflow_index < k and cell.coefficients == _unit_row(k, cell.subflow_index):
            originals[cell.subflow_index] = cell.payload
    if len(originals) == k:
        return Generation(generation_id, tuple(originals[i] for i in range(k)))

    # forward elimination: keep one normalized row per pivot column
    reduced: list[tuple[list[int], bytes]] = []
    pivot_of: dict[int, int] = {}
    for cell in received:
        coeffs = list(cell.coefficients)
        payload = cell.payload
        for col, ridx in pivot_of.items():
            f = coeffs[col]
            if f:
                prow, ppay = reduced[ridx]
                coeffs = [a ^ gf256.mul(f, b) for a, b in zip(coeffs, prow)]
                payload = gf256.xor_bytes(payload, gf256.scale_bytes(ppay, f))
        lead = next((j for j in range(k) if coeffs[j]), None)
        if lead is None:
            continue  # linearly dependent on what we already have
        s = gf256.inv(coeffs[lead])
        coeffs = [gf256.mul(s, a) for a in coeffs]
        payload = gf256.scale_bytes(payload, s)
        pivot_of[lead] = len(reduced)
        reduced.append((coeffs, payload))
        if len(reduced) == k:
            break
    if len(reduced) < k:
        raise UnrecoverableGeneration(generation_id, received=len(received))

    # back substitution: clear the remaining off-pivot entries
    for col in sorted(pivot_of, reverse=True):
        prow, ppay = reduced[pivot_of[col]]
        for i, (coeffs, payload) in enumerate(reduced):
            f = coeffs[col]
            if i != pivot_of[col] and f:
                reduced[i] = (
                    [a ^ gf256.mul(f, b) for a, b in zip(coeffs, prow)],
                    gf256.xor_bytes(payload, gf256.scale_bytes(ppay, f)),
                )
    return Generation(generation_id, tuple(reduced[pivot_of[col]][1] for col in range(k)))


def split_message(message: bytes, k: int) -> list[Generation]:
    """Frame a message and cut it into generations of k zero-padded cells.

    The cell stream starts with an 8-byte big-endian length so reassembly
    needs no out-of-band information; padding bytes are zero.
    """
    if not message:
        raise ValueError("cannot split an empty message")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    framed = len(message).to_bytes(_LENGTH_PREFIX, "big") + bytes(message)
    cells = -(-len(framed) // CELL_SIZE)
    cells = -(-cells // k) * k
    padded = framed.ljust(cells * CELL_SIZE, b"\x00")
    return [
        Generation(
            g,
            tuple(
                padded[(g * k + j) * CELL_SIZE : (g * k + j + 1) * CELL_SIZE]
                for j in range(k)
            ),
        )
        for g in range(cells // k)
    ]


def reassemble_message(generations: Sequence[Generation]) -> bytes:
    """Exact inverse of split_message over fully decoded generations."""
    if not generations:
        raise ValueError("no generations to reassemble")
    ordered = sorted(generations, key=lambda g: g.generation_id)
    ids = [g.generation_id for g in ordered]
    if ids != list(range(len(ordered))):
        raise ValueError(f"generation ids must be contiguous from 0, got {ids}")
    stream = b"".join(b"".join(g.cells) for g in ordered)
    length = int.from_bytes(stream[:_LENGTH_PREFIX], "big")
    if _LENGTH_PREFIX + length > len(stream):
        raise ValueError("length prefix exceeds the decoded stream")
    return stream[_LENGTH_PREFIX : _LENGTH_PREFIX + length]
