"""Generalized Pauli operators T(q,p) in the binary symplectic representation"""
import re
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Iterator, NamedTuple, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from src.config import get_settings
from src.errors import ArgumentError, ResourceLimitError

Bits = Tuple[int, ...]
BitsLike = Union[str, Sequence[int]]

# i**k for k = 0..3, kept exact so T(q,p) carries no floating phase drift
_I_POWERS = (1, 1j, -1, -1j)

_SINGLE_QUBIT = {
    (0, 0): np.eye(2, dtype=np.complex128),
    (1, 0): np.array([[0, 1], [1, 0]], dtype=np.complex128),
    (0, 1): np.array([[1, 0], [0, -1]], dtype=np.complex128),
    # X @ Z, the i**(qp) phase is applied once for the whole product
    (1, 1): np.array([[0, -1], [1, 0]], dtype=np.complex128),
}

_LABEL_PATTERN = re.compile(r"^\s*q=([01]+)\s*,\s*p=([01]+)\s*$")


def as_bits(value: BitsLike, n: int = None) -> Bits:
    """Normalize a bit string ("101") or an int sequence into a tuple of 0/1"""
    if isinstance(value, str):
        text = value.strip()
        if not text or any(ch not in "01" for ch in text):
            raise ArgumentError(f"Invalid bit string '{value}'")
        bits = tuple(int(ch) for ch in text)
    else:
        bits = tuple(int(b) for b in value)
        if any(b not in (0, 1) for b in bits):
            raise ArgumentError(f"Bits must be 0 or 1, got {list(value)}")
    if n is not None and len(bits) != n:
        raise ArgumentError(f"Expected {n} bits, got {len(bits)}")
    return bits


def bits_to_int(bits: Sequence[int]) -> int:
    """Bit k=1 is the most significant (leftmost tensor factor)"""
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def int_to_bits(value: int, n: int) -> Bits:
    return tuple((value >> (n - 1 - k)) & 1 for k in range(n))


def check_qubit_count(n: int) -> int:
    """Validate n against the dense-operation cap"""
    if n < 1:
        raise ArgumentError(f"Qubit count must be >= 1, got {n}")
    cap = get_settings().max_qubits
    if n > cap:
        logger.error(f"Requested {n} qubits, cap is {cap}")
        raise ResourceLimitError(f"{n} qubits exceeds the dense-operation cap of {cap}")
    return n


@dataclass(frozen=True)
class PauliLabel:
    """Label (q, p) of T(q,p): q is the X-part, p the Z-part"""
    q: Bits
    p: Bits

    def __post_init__(self):
        q = as_bits(self.q)
        p = as_bits(self.p)
        if len(q) != len(p) or not q:
            raise ArgumentError(f"Label parts must have equal nonzero length, got {len(q)} and {len(p)}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return len(self.q)

    @property
    def qp(self) -> int:
        """Inner product q.p = sum_k q_k p_k"""
        return sum(a * b for a, b in zip(self.q, self.p))

    @property
    def index(self) -> int:
        """Position in the (q||p)-lexicographic enumeration"""
        return (bits_to_int(self.q) << self.n) | bits_to_int(self.p)

    @property
    def is_identity(self) -> bool:
        return not any(self.q) and not any(self.p)

    @classmethod
    def from_index(cls, index: int, n: int) -> "PauliLabel":
        if not 0 <= index < 4 ** n:
            raise ArgumentError(f"Label index {index} out of range for n={n}")
        return cls(int_to_bits(index >> n, n), int_to_bits(index & ((1 << n) - 1), n))

    @classmethod
    def identity(cls, n: int) -> "PauliLabel":
        return cls((0,) * n, (0,) * n)

    @classmethod
    def parse(cls, text: str) -> "PauliLabel":
        """Parse the textual form "q=110,p=011" """
        match = _LABEL_PATTERN.match(text)
        if not match:
            raise ArgumentError(f"Cannot parse Pauli label '{text}', expected 'q=<bits>,p=<bits>'")
        return cls(match.group(1), match.group(2))

    def __str__(self) -> str:
        q = "".join(str(b) for b in self.q)
        p = "".join(str(b) for b in self.p)
        return f"q={q},p={p}"


class WeightProfile(NamedTuple):
    alpha_0: int
    alpha_x: int
    alpha_y: int
    alpha_z: int


def all_labels(n: int) -> Iterator[PauliLabel]:
    """All 4**n labels in (q||p)-lexicographic order"""
    for index in range(4 ** n):
        yield PauliLabel.from_index(index, n)


def pauli_matrix(label: PauliLabel) -> np.ndarray:
    """Dense Hermitian unitary T(q,p) = X^q1 Z^p1 x ... x X^qn Z^pn * i^(qp)"""
    check_qubit_count(label.n)
    factors = [_SINGLE_QUBIT[(q, p)] for q, p in zip(label.q, label.p)]
    return _I_POWERS[label.qp % 4] * reduce(np.kron, factors)


def weight_profile(label: PauliLabel) -> WeightProfile:
    """Count identity, X, Y and Z factors of T(q,p)"""
    counts = {(0, 0): 0, (1, 0): 0, (1, 1): 0, (0, 1): 0}
    for pair in zip(label.q, label.p):
        counts[pair] += 1
    return WeightProfile(counts[(0, 0)], counts[(1, 0)], counts[(1, 1)], counts[(0, 1)])


@lru_cache(maxsize=16)
def label_bits(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """(Q, P) bit arrays of shape (4**n, n) for every label in flat order"""
    index = np.arange(4 ** n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    q = ((index >> n)[:, None] >> shifts) & 1
    p = ((index & ((1 << n) - 1))[:, None] >> shifts) & 1
    q, p = q.astype(np.uint8), p.astype(np.uint8)
    q.setflags(write=False)
    p.setflags(write=False)
    return q, p


def label_weight_profiles(n: int, keep: Sequence[int] = None) -> WeightProfile:
    """Vectorized alpha counts over all labels, optionally restricted to the qubits in `keep`"""
    q, p = label_bits(n)
    mask = np.ones(n, dtype=bool) if keep is None else np.asarray(as_bits(keep, n), dtype=bool)
    q, p = q[:, mask], p[:, mask]
    alpha_0 = np.sum((q == 0) & (p == 0), axis=1)
    alpha_x = np.sum((q == 1) & (p == 0), axis=1)
    alpha_y = np.sum((q == 1) & (p == 1), axis=1)
    alpha_z = np.sum((q == 0) & (p == 1), axis=1)
    return WeightProfile(alpha_0, alpha_x, alpha_y, alpha_z)


def label_phase_signs(n: int) -> np.ndarray:
    """(-1)**(q.p) for every label"""
    q, p = label_bits(n)
    return 1 - 2 * (np.sum(q & p, axis=1) % 2).astype(np.int64)


def label_i_powers(n: int) -> np.ndarray:
    """i**(q.p) arranged as an (N, N) array indexed [q, p]"""
    q, p = label_bits(n)
    exponent = np.sum(q & p, axis=1) % 4
    return np.asarray(_I_POWERS, dtype=np.complex128)[exponent].reshape(2 ** n, 2 ** n)


def hadamard_transform(vec: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis

    out[..., y] = sum_x (-1)**(x.y) vec[..., x], with bit 1 of x, y the most
    significant. Applying it twice multiplies by the length.
    """
    vec = np.asarray(vec)
    size = vec.shape[-1]
    n_bits = size.bit_length() - 1
    if size != 1 << n_bits:
        raise ArgumentError(f"Hadamard transform needs a power-of-two length, got {size}")
    lead = vec.shape[:-1]
    out = vec.astype(np.result_type(vec.dtype, np.float64)).reshape(lead + (2,) * n_bits)
    for axis in range(len(lead), len(lead) + n_bits):
        lo = np.take(out, 0, axis=axis)
        hi = np.take(out, 1, axis=axis)
        out = np.stack((lo + hi, lo - hi), axis=axis)
    return out.reshape(lead + (size,))
