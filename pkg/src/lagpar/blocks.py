"""Parity-block encoding, recovery, verification, and corruption location.

k data values sit at x = 0..k-1 on the unique polynomial of degree <= k-1
through them; parity blocks are further samples of that polynomial at
x = k, k+1, ...  Any k distinct blocks reconstruct the polynomial and hence
the originals, bit-exactly.  Corruption location is an exhaustive
maximum-agreement search over k-subsets, intended for desk-scale sets
(at most 16 blocks): the answer is guaranteed unique when the number of
corrupted blocks e satisfies n >= k + 2e.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .errors import (
    AmbiguityError,
    DuplicateIndexError,
    EmptyInputError,
    InconsistentBlocksError,
    InputError,
    InsufficientBlocksError,
    InsufficientRedundancyError,
    MixedDatasetError,
)
from .poly import Point, evaluate, evaluate_many, interpolate

DEFAULT_MAX_PARITY = 1024
DEFAULT_MAX_LOCATE_BLOCKS = 16


class BlockRole(Enum):
    ORIGINAL = "original"
    PARITY = "parity"


@dataclass(frozen=True)
class CodedBlock:
    """One sample (index, value) of the interpolant, tagged with its role."""

    index: int
    value: Fraction
    role: BlockRole
    k: int
    dataset_id: str

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"threshold k must be >= 1, got {self.k}")
        if self.index < 0:
            raise ValueError(f"block index must be >= 0, got {self.index}")
        expected = BlockRole.ORIGINAL if self.index < self.k else BlockRole.PARITY
        if self.role is not expected:
            raise ValueError(
                f"index {self.index} with k={self.k} must have role {expected.value}"
            )


def make_block(index: int, value: Fraction, k: int, dataset_id: str) -> CodedBlock:
    """Build a block with the role implied by its index."""
    role = BlockRole.ORIGINAL if index < k else BlockRole.PARITY
    return CodedBlock(index, Fraction(value), role, k, dataset_id)


@dataclass(frozen=True)
class RecoverySet:
    """A bag of distinct-index blocks from one dataset, ready for recovery."""

    blocks: tuple[CodedBlock, ...]
    k: int

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if self.k < 1:
            raise ValueError(f"threshold k must be >= 1, got {self.k}")
        ids = {b.dataset_id for b in self.blocks}
        if len(ids) > 1:
            raise MixedDatasetError(f"blocks span several datasets: {sorted(ids)}")
        thresholds = {b.k for b in self.blocks}
        if any(t != self.k for t in thresholds):
            raise MixedDatasetError(
                f"blocks disagree on threshold: {sorted(thresholds)} vs k={self.k}"
            )
        indices = [b.index for b in self.blocks]
        if len(set(indices)) != len(indices):
            raise DuplicateIndexError(f"duplicate block indices: {sorted(indices)}")


@dataclass(frozen=True)
class VerifyReport:
    consistent: bool
    residual_indices: tuple[int, ...]


@dataclass(frozen=True)
class CorrectionResult:
    recovered: tuple[Fraction, ...]
    suspects: tuple[int, ...]


def original_blocks(values: Sequence[Fraction], dataset_id: str) -> list[CodedBlock]:
    """Wrap k data values as the original blocks at indices 0..k-1."""
    if not values:
        raise EmptyInputError("no values to wrap")
    k = len(values)
    return [make_block(i, v, k, dataset_id) for i, v in enumerate(values)]


def encode(
    values: Sequence[Fraction],
    m: int,
    dataset_id: str,
    *,
    max_parity: int = DEFAULT_MAX_PARITY,
) -> list[CodedBlock]:
    """Sample m parity blocks at indices k..k+m-1 from the interpolant.

    Deterministic: equal inputs always produce equal blocks.
    """
    if not values:
        raise EmptyInputError("no values to encode")
    if m < 0:
        raise InputError(f"parity count must be >= 0, got {m}")
    if m > max_parity:
        raise InputError(f"parity count {m} exceeds sanity limit {max_parity}")
    k = len(values)
    p = interpolate([Point(Fraction(i), Fraction(v)) for i, v in enumerate(values)])
    parity_values = evaluate_many(p, [Fraction(k + j) for j in range(m)])
    return [make_block(k + j, v, k, dataset_id) for j, v in enumerate(parity_values)]


def _interpolate_blocks(blocks: Sequence[CodedBlock]):
    return interpolate([Point(Fraction(b.index), b.value) for b in blocks])


def _fit_report(blocks: Sequence[CodedBlock], p) -> tuple[int, ...]:
    """Indices of blocks whose value is off the polynomial p."""
    return tuple(
        b.index for b in sorted(blocks, key=lambda b: b.index)
        if evaluate(p, Fraction(b.index)) != b.value
    )


def recover(recovery_set: RecoverySet) -> list[Fraction]:
    """Reconstruct the original k values from any k consistent blocks.

    Interpolates through the k lowest-index blocks, then insists every
    provided block lies on that polynomial; extra blocks that disagree raise
    InconsistentBlocksError (callers should fall back to locate_corruption).
    """
    k = recovery_set.k
    blocks = sorted(recovery_set.blocks, key=lambda b: b.index)
    if len(blocks) < k:
        raise InsufficientBlocksError(f"need {k} blocks, have {len(blocks)}")
    p = _interpolate_blocks(blocks[:k])
    residuals = _fit_report(blocks, p)
    if residuals:
        raise InconsistentBlocksError(
            f"blocks at indices {list(residuals)} are off the interpolant", residuals
        )
    return evaluate_many(p, [Fraction(i) for i in range(k)])


def verify(recovery_set: RecoverySet) -> VerifyReport:
    """Report which blocks disagree with the k lowest-index blocks' interpolant."""
    k = recovery_set.k
    blocks = sorted(recovery_set.blocks, key=lambda b: b.index)
    if len(blocks) < k:
        raise InsufficientBlocksError(f"need {k} blocks, have {len(blocks)}")
    p = _interpolate_blocks(blocks[:k])
    residuals = _fit_report(blocks, p)
    return VerifyReport(consistent=not residuals, residual_indices=residuals)


def locate_corruption(
    recovery_set: RecoverySet,
    *,
    max_blocks: int = DEFAULT_MAX_LOCATE_BLOCKS,
) -> CorrectionResult:
    """Find the polynomial consistent with the most blocks; outliers are suspects.

    Exhaustively interpolates k-subsets of the n provided blocks, keeping the
    candidate with maximal agreement.  Subsets lying entirely inside an
    already-found candidate's agreement set are skipped: by uniqueness of
    interpolation they would reproduce that same candidate.  Raises
    AmbiguityError when two distinct polynomials tie for maximal agreement,
    which can only happen when n < k + 2e.
    """
    k = recovery_set.k
    blocks = sorted(recovery_set.blocks, key=lambda b: b.index)
    n = len(blocks)
    if n <= k:
        raise InsufficientRedundancyError(
            f"corruption location needs more than k={k} blocks, have {n}"
        )
    if n > max_blocks:
        raise InputError(f"{n} blocks exceeds the exhaustive-search limit {max_blocks}")

    candidates: dict = {}  # polynomial -> frozenset of agreeing block positions
    # only agreement sets larger than k can strictly contain another k-subset
    prunable: list[frozenset] = []
    for subset in combinations(range(n), k):
        if any(agree.issuperset(subset) for agree in prunable):
            continue
        p = _interpolate_blocks([blocks[i] for i in subset])
        if p in candidates:
            continue
        agree = frozenset(
            i for i, b in enumerate(blocks) if evaluate(p, Fraction(b.index)) == b.value
        )
        candidates[p] = agree
        if len(agree) > k:
            prunable.append(agree)

    best = max(len(agree) for agree in candidates.values())
    winners = [p for p, agree in candidates.items() if len(agree) == best]
    if len(winners) > 1:
        raise AmbiguityError(
            f"{len(winners)} distinct polynomials each agree with {best} of {n} blocks"
        )
    winner = winners[0]
    suspects = _fit_report(blocks, winner)
    recovered = tuple(evaluate_many(winner, [Fraction(i) for i in range(k)]))
    return CorrectionResult(recovered=recovered, suspects=suspects)
