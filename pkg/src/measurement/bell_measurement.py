"""Joint Bell measurement on qubit k of copy A and qubit k of copy B

Two-copy operators are ordered (all qubits of A, then all of B). The direct
method permutes them into pair order (A1, B1, A2, B2, ...) internally, so the
single-copy modules never see the doubling.
"""
import asyncio
from dataclasses import dataclass
from functools import reduce
from typing import Any, Dict, Iterator, List, Sequence, Tuple

import numpy as np
from loguru import logger

from src.errors import ArgumentError
from src.quantum.pauli import (
    Bits,
    as_bits,
    bits_to_int,
    check_qubit_count,
    hadamard_transform,
    int_to_bits,
    label_bits,
    label_phase_signs,
)
from src.quantum.states import DensityMatrix, pauli_decompose
from src.seeding import chunk_seeds, make_rng

DISTRIBUTION_ORDER = "(a||b) lexicographic"

_SQRT_HALF = 1 / np.sqrt(2)


@dataclass(frozen=True)
class BellOutcome:
    """(a_k, b_k) names the Bell state detected on pair k"""
    a: Bits
    b: Bits

    def __post_init__(self):
        a, b = as_bits(self.a), as_bits(self.b)
        if len(a) != len(b):
            raise ArgumentError(f"Outcome parts must have equal length, got {len(a)} and {len(b)}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def index(self) -> int:
        return (bits_to_int(self.a) << self.n) | bits_to_int(self.b)

    def __str__(self) -> str:
        return f"a={''.join(map(str, self.a))},b={''.join(map(str, self.b))}"


@dataclass
class BellDistribution:
    """Prob(a,b) over all 4**n outcomes in (a||b)-lexicographic order"""
    n: int
    prob: np.ndarray

    def __post_init__(self):
        prob = np.asarray(self.prob, dtype=np.float64)
        if prob.shape != (4 ** self.n,):
            raise ArgumentError(f"Expected {4 ** self.n} probabilities for n={self.n}, got {prob.shape}")
        if prob.min() < -1e-12:
            raise ArgumentError(f"Negative probability {prob.min():.3e}")
        prob = np.clip(prob, 0.0, None)
        total = prob.sum()
        if abs(total - 1) > 1e-10:
            raise ArgumentError(f"Probabilities sum to {total:.12f}, expected 1")
        self.prob = prob

    def __getitem__(self, outcome: BellOutcome) -> float:
        return float(self.prob[outcome.index])

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "prob": [float(x) for x in self.prob], "order": DISTRIBUTION_ORDER}


@dataclass
class BellOutcomes:
    """Sampled outcomes stored column-wise: a and b are (shots, n) uint8 bit arrays"""
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=np.uint8)
        self.b = np.asarray(self.b, dtype=np.uint8)
        if self.a.ndim != 2 or self.a.shape != self.b.shape:
            raise ArgumentError(f"Outcome arrays must share a (shots, n) shape, got {self.a.shape} and {self.b.shape}")

    @property
    def n(self) -> int:
        return self.a.shape[1]

    def __len__(self) -> int:
        return self.a.shape[0]

    def __iter__(self) -> Iterator[BellOutcome]:
        for a_row, b_row in zip(self.a, self.b):
            yield BellOutcome(tuple(int(x) for x in a_row), tuple(int(x) for x in b_row))

    @classmethod
    def from_outcomes(cls, outcomes: Sequence[BellOutcome], n: int) -> "BellOutcomes":
        a = np.array([o.a for o in outcomes], dtype=np.uint8).reshape(len(outcomes), n)
        b = np.array([o.b for o in outcomes], dtype=np.uint8).reshape(len(outcomes), n)
        return cls(a, b)

    @classmethod
    def concat(cls, parts: Sequence["BellOutcomes"], n: int) -> "BellOutcomes":
        if not parts:
            return cls(np.zeros((0, n), dtype=np.uint8), np.zeros((0, n), dtype=np.uint8))
        return cls(np.concatenate([p.a for p in parts]), np.concatenate([p.b for p in parts]))


def bell_state(a: int, b: int) -> np.ndarray:
    """|beta_ab>: X x X eigenvalue (-1)^a, Z x Z eigenvalue (-1)^b, first nonzero amplitude positive"""
    if a not in (0, 1) or b not in (0, 1):
        raise ArgumentError(f"Bell indices must be bits, got ({a}, {b})")
    vec = np.zeros(4, dtype=np.complex128)
    vec[b] = _SQRT_HALF  # |0 b>
    vec[3 - b] = (-1) ** a * _SQRT_HALF  # |1 (1-b)>
    return vec


# columns are |beta_ab> at position 2a + b
BELL_BASIS = np.column_stack([bell_state(a, b) for a in (0, 1) for b in (0, 1)])


def _pair_permutation(n: int) -> List[int]:
    """Qubit order (A1, B1, A2, B2, ...) expressed in (A..., B...) positions"""
    return [q for k in range(n) for q in (k, n + k)]


def to_pair_order(operator: np.ndarray, n: int) -> np.ndarray:
    """Reorder a two-copy operator from (A..., B...) to (A1, B1, A2, B2, ...)"""
    perm = _pair_permutation(n)
    axes = perm + [2 * n + x for x in perm]
    dim = 4 ** n
    return operator.reshape((2,) * (4 * n)).transpose(axes).reshape(dim, dim)


def from_pair_order(operator: np.ndarray, n: int) -> np.ndarray:
    """Inverse of to_pair_order"""
    inverse = list(np.argsort(_pair_permutation(n)))
    axes = inverse + [2 * n + x for x in inverse]
    dim = 4 ** n
    return operator.reshape((2,) * (4 * n)).transpose(axes).reshape(dim, dim)


def _pair_digits_to_lexicographic(values: np.ndarray, n: int) -> np.ndarray:
    """Reindex from pair digits (a1 b1 a2 b2 ...) to (a1..an b1..bn)"""
    axes = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    return values.reshape((2,) * (2 * n)).transpose(axes).reshape(-1)


def bell_povm(n: int) -> List[Tuple[str, np.ndarray]]:
    """The 4**n joint Bell projectors on the two-copy space, in (A..., B...) order"""
    check_qubit_count(n)
    basis = reduce(np.kron, [BELL_BASIS] * n)
    order = _pair_digits_to_lexicographic(np.arange(4 ** n), n)
    elements = []
    for index in range(4 ** n):
        column = basis[:, order[index]]
        outcome = BellOutcome(int_to_bits(index >> n, n), int_to_bits(index & ((1 << n) - 1), n))
        elements.append((str(outcome), from_pair_order(np.outer(column, column.conj()), n)))
    return elements


def _direct_distribution(rho_a: DensityMatrix, rho_b: DensityMatrix) -> np.ndarray:
    n = rho_a.n
    joint = to_pair_order(np.kron(rho_a.matrix, rho_b.matrix), n)
    basis = reduce(np.kron, [BELL_BASIS] * n)
    pair_probs = np.real(np.sum(basis.conj() * (joint @ basis), axis=0))
    return _pair_digits_to_lexicographic(pair_probs, n)


def _closed_form_distribution(rho_a: DensityMatrix, rho_b: DensityMatrix) -> np.ndarray:
    n = rho_a.n
    c_a = pauli_decompose(rho_a).c
    c_b = c_a if rho_b is rho_a else pauli_decompose(rho_b).c
    weighted = label_phase_signs(n) * c_a * c_b
    return hadamard_transform(weighted) / 4 ** n


_METHODS = {
    "direct": _direct_distribution,
    "closed-form": _closed_form_distribution,
}


def exact_distribution(rho_a: DensityMatrix, rho_b: DensityMatrix, method: str = "closed-form") -> BellDistribution:
    """Exact Prob(a,b) for the pairwise Bell measurement on rho_a x rho_b

    closed-form: sum_{q,p} (-1)^(aq + bp + qp) c^A_{q,p} c^B_{q,p} / N**2
    direct: expectation of the product of pair projectors on the permuted state
    """
    if rho_a.n != rho_b.n:
        raise ArgumentError(f"States have {rho_a.n} and {rho_b.n} qubits")
    check_qubit_count(rho_a.n)
    try:
        compute = _METHODS[method]
    except KeyError:
        raise ArgumentError(f"Unknown method '{method}', expected one of {sorted(_METHODS)}")
    prob = compute(rho_a, rho_b)
    prob[np.abs(prob) < 1e-15] = 0.0
    return BellDistribution(rho_a.n, prob)


def outcome_bits(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """(A, B) bit arrays for every outcome in distribution order"""
    return label_bits(n)


def sample_outcomes(dist: BellDistribution, shots: int, seed: int) -> BellOutcomes:
    """Draw i.i.d. outcomes by inverse-CDF lookup over the 4**n table"""
    if shots < 0:
        raise ArgumentError(f"Shot count must be >= 0, got {shots}")
    n = dist.n
    if shots == 0:
        return BellOutcomes.concat([], n)
    cdf = np.cumsum(dist.prob)
    uniforms = make_rng(seed).random(shots) * cdf[-1]
    index = np.minimum(np.searchsorted(cdf, uniforms, side="right"), 4 ** n - 1)
    a_bits, b_bits = outcome_bits(n)
    return BellOutcomes(a_bits[index], b_bits[index])


async def sample_outcomes_parallel(dist: BellDistribution, shots: int, seed: int, chunk_shots: int) -> BellOutcomes:
    """Split the run into chunks (chunk i seeded with seed + i) and sample them concurrently

    The result depends on chunk_shots as well as the seed; chunks are
    concatenated in chunk order.
    """
    if chunk_shots < 1:
        raise ArgumentError(f"chunk_shots must be >= 1, got {chunk_shots}")
    sizes = [min(chunk_shots, shots - start) for start in range(0, shots, chunk_shots)]
    seeds = chunk_seeds(seed, len(sizes))
    parts = await asyncio.gather(
        *(asyncio.to_thread(sample_outcomes, dist, size, chunk_seed) for size, chunk_seed in zip(sizes, seeds))
    )
    logger.info(f"Sampled {shots} shots in {len(sizes)} chunks")
    return BellOutcomes.concat(list(parts), dist.n)


def csq_from_distribution(dist: BellDistribution) -> np.ndarray:
    """All 4**n squared coefficients by inverting the Bell kernel

    Needs every one of the 4**n exponentially small probabilities, so this is
    a reference computation rather than an estimation strategy.
    """
    return label_phase_signs(dist.n) * hadamard_transform(dist.prob)
