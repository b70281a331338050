"""Density matrices, Pauli decompositions, Bloch vectors and named states"""
import math
from dataclasses import dataclass
from functools import reduce
from typing import Any, Dict, List, Sequence

import numpy as np
from loguru import logger

from src.config import get_settings
from src.seeding import make_rng
from src.errors import ArgumentError, InvalidBlochError, InvalidStateError, NonPhysicalCoefficientsError
from src.quantum.pauli import (
    BitsLike,
    PauliLabel,
    as_bits,
    check_qubit_count,
    hadamard_transform,
    int_to_bits,
    label_i_powers,
)


@dataclass
class DensityMatrix:
    """An n-qubit state as a dense 2**n x 2**n complex matrix"""
    n: int
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.complex128)
        dim = 2 ** self.n
        if self.matrix.shape != (dim, dim):
            raise ArgumentError(f"Expected a {dim}x{dim} matrix for n={self.n}, got {self.matrix.shape}")

    @property
    def dim(self) -> int:
        return 2 ** self.n

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def min_eigenvalue(self) -> float:
        hermitian = (self.matrix + self.matrix.conj().T) / 2
        return float(np.linalg.eigvalsh(hermitian)[0])

    def validate(self) -> "DensityMatrix":
        """Check Hermiticity, unit trace and positivity within tolerance"""
        settings = get_settings()
        herm = self.hermiticity_error()
        if herm > settings.hermitian_tol:
            raise InvalidStateError(f"Matrix is not Hermitian (max |M - M^dag| = {herm:.3e})")
        trace = complex(np.trace(self.matrix))
        if abs(trace - 1) > settings.hermitian_tol:
            raise InvalidStateError(f"Trace is {trace.real:.12f}, expected 1")
        min_eig = self.min_eigenvalue()
        if min_eig < -settings.psd_tol:
            raise InvalidStateError(f"Matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")
        return self

    def to_dict(self) -> Dict[str, Any]:
        flat = self.matrix.reshape(-1)
        return {"n": self.n, "matrix": [[float(z.real), float(z.imag)] for z in flat]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DensityMatrix":
        """Accepts a flat row-major list of [re, im] pairs or a nested list of rows"""
        try:
            n = int(data["n"])
            entries = np.asarray(data["matrix"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidStateError(f"Malformed state document: {e}")
        if n < 1:
            raise InvalidStateError(f"State document needs n >= 1, got {n}")
        if entries.ndim == 0 or entries.shape[-1] != 2:
            raise InvalidStateError("State entries must be [re, im] pairs")
        try:
            matrix = (entries[..., 0] + 1j * entries[..., 1]).reshape(2 ** n, 2 ** n)
        except (ValueError, IndexError) as e:
            raise InvalidStateError(f"State document has {entries.size // 2} entries, expected {4 ** n}: {e}")
        return cls(n, matrix).validate()


@dataclass
class PauliCoefficients:
    """c_{q,p} = Tr(rho T(q,p)) in (q||p)-lexicographic order"""
    n: int
    c: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=np.float64)
        if self.c.shape != (4 ** self.n,):
            raise ArgumentError(f"Expected {4 ** self.n} coefficients for n={self.n}, got {self.c.shape}")

    def __getitem__(self, label: PauliLabel) -> float:
        return float(self.c[label.index])

    def squares(self) -> np.ndarray:
        return self.c ** 2

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "c": [float(x) for x in self.c]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PauliCoefficients":
        return cls(int(data["n"]), np.asarray(data["c"], dtype=np.float64))


@dataclass(frozen=True)
class BlochVector:
    p_x: float
    p_y: float
    p_z: float

    @property
    def norm(self) -> float:
        return math.sqrt(self.p_x ** 2 + self.p_y ** 2 + self.p_z ** 2)

    def as_array(self) -> np.ndarray:
        return np.array([self.p_x, self.p_y, self.p_z])

    def reflected(self, a: int, b: int) -> "BlochVector":
        """Polarization of C_{a,b}(rho): ((-1)^a p_x, (-1)^(a+b+1) p_y, (-1)^b p_z)"""
        return BlochVector((-1) ** a * self.p_x, (-1) ** (a + b + 1) * self.p_y, (-1) ** b * self.p_z)

    @classmethod
    def from_state(cls, rho: DensityMatrix) -> "BlochVector":
        if rho.n != 1:
            raise ArgumentError(f"Bloch vectors describe single qubits, got n={rho.n}")
        coeffs = pauli_decompose(rho)
        return cls(coeffs.c[2], coeffs.c[3], coeffs.c[1])


def pauli_decompose(rho: DensityMatrix) -> PauliCoefficients:
    """Compute all 4**n coefficients c_{q,p} = Tr(rho T(q,p))

    Tr(rho X^q Z^p) = sum_j rho[j, j^q] (-1)^(p.j), so each q-row is a
    Hadamard transform of one generalized diagonal of rho.
    """
    n = check_qubit_count(rho.n)
    dim = rho.dim
    rows = np.arange(dim)
    diagonals = rho.matrix[rows[None, :], rows[None, :] ^ rows[:, None]]
    coeffs = label_i_powers(n) * hadamard_transform(diagonals)
    residue = float(np.max(np.abs(coeffs.imag)))
    if residue > get_settings().hermitian_tol:
        logger.error(f"Imaginary Pauli coefficient residue {residue:.3e}")
        raise InvalidStateError(f"State is not Hermitian: imaginary coefficient residue {residue:.3e}")
    return PauliCoefficients(n, coeffs.real.reshape(-1))


def reconstruct(coeffs: PauliCoefficients) -> DensityMatrix:
    """Rebuild rho = sum_{q,p} c_{q,p} T(q,p) / N and check it is physical"""
    n = check_qubit_count(coeffs.n)
    if abs(coeffs.c[0] - 1) > get_settings().hermitian_tol:
        raise ArgumentError(f"Identity coefficient must be 1, got {coeffs.c[0]}")
    dim = 2 ** n
    table = coeffs.c.reshape(dim, dim) * np.conj(label_i_powers(n))
    diagonals = hadamard_transform(table) / dim
    rows = np.arange(dim)
    matrix = np.zeros((dim, dim), dtype=np.complex128)
    matrix[rows[None, :], rows[None, :] ^ rows[:, None]] = diagonals
    rho = DensityMatrix(n, matrix)
    min_eig = rho.min_eigenvalue()
    if min_eig < -get_settings().psd_tol:
        logger.error(f"Coefficients reconstruct to min eigenvalue {min_eig:.3e}")
        raise NonPhysicalCoefficientsError(f"Coefficients are not physical: min eigenvalue {min_eig:.6g}")
    return rho.validate()


def qubit_from_bloch(p: BlochVector) -> DensityMatrix:
    """rho = (I + p.sigma)/2 with c_{1,0}=p_x, c_{1,1}=p_y, c_{0,1}=p_z"""
    if p.norm > 1 + 1e-12:
        raise InvalidBlochError(f"Bloch vector norm {p.norm:.6g} exceeds 1")
    # flat order: (q,p) = (0,0), (0,1), (1,0), (1,1)
    return reconstruct(PauliCoefficients(1, [1.0, p.p_z, p.p_x, p.p_y]))


def random_state(n: int, rank: int, seed: int) -> DensityMatrix:
    """Ginibre-style random state G G^dag / Tr(G G^dag) with G of shape (2**n, rank)"""
    check_qubit_count(n)
    dim = 2 ** n
    if not 1 <= rank <= dim:
        raise ArgumentError(f"Rank must lie in [1, {dim}], got {rank}")
    rng = make_rng(seed)
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    matrix = g @ g.conj().T
    matrix = (matrix + matrix.conj().T) / 2
    return DensityMatrix(n, matrix / np.trace(matrix).real).validate()


def partial_trace(rho: DensityMatrix, keep: BitsLike) -> DensityMatrix:
    """Reduce rho to the qubits whose bit in `keep` is 1, keeping their order"""
    n = rho.n
    mask = as_bits(keep, n)
    if not any(mask):
        raise ArgumentError("Partial trace needs at least one kept qubit")
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = [letters[n + k] if mask[k] else row[k] for k in range(n)]
    kept_rows = "".join(row[k] for k in range(n) if mask[k])
    kept_cols = "".join(col[k] for k in range(n) if mask[k])
    subscripts = f"{''.join(row)}{''.join(col)}->{kept_rows}{kept_cols}"
    reduced = np.einsum(subscripts, rho.matrix.reshape((2,) * (2 * n)))
    kept = sum(mask)
    return DensityMatrix(kept, reduced.reshape(2 ** kept, 2 ** kept))


def purity(rho: DensityMatrix) -> float:
    """Tr(rho^2)"""
    return float(np.real(np.vdot(rho.matrix.conj().T, rho.matrix)))


def pure_state(ket: Sequence[complex]) -> DensityMatrix:
    vec = np.asarray(ket, dtype=np.complex128)
    n = int(round(math.log2(vec.shape[0])))
    if vec.shape[0] != 2 ** n:
        raise ArgumentError(f"Ket length {vec.shape[0]} is not a power of two")
    vec = vec / np.linalg.norm(vec)
    return DensityMatrix(n, np.outer(vec, vec.conj()))


def tensor(*states: DensityMatrix) -> DensityMatrix:
    """Kronecker product, first argument is the leftmost factor"""
    if not states:
        raise ArgumentError("tensor() needs at least one state")
    n = sum(s.n for s in states)
    check_qubit_count(n)
    return DensityMatrix(n, reduce(np.kron, [s.matrix for s in states]))


def product_zero_state(n: int) -> DensityMatrix:
    check_qubit_count(n)
    ket = np.zeros(2 ** n)
    ket[0] = 1
    return pure_state(ket)


def ghz_state(n: int) -> DensityMatrix:
    """(|0...0> + |1...1>)/sqrt(2)"""
    check_qubit_count(n)
    ket = np.zeros(2 ** n)
    ket[0] = ket[-1] = 1
    return pure_state(ket)


def bell_pairs_state(n: int) -> DensityMatrix:
    """|beta_00> on qubit pairs (1,2), (3,4), ...; n must be even"""
    if n % 2:
        raise ArgumentError(f"A Bell-pair state needs an even qubit count, got {n}")
    pair = pure_state([1, 0, 0, 1])
    return tensor(*([pair] * (n // 2)))


NAMED_STATES = {
    "ghz": ghz_state,
    "bell": bell_pairs_state,
    "product-zero": product_zero_state,
}


def named_state(name: str, n: int) -> DensityMatrix:
    try:
        builder = NAMED_STATES[name]
    except KeyError:
        raise ArgumentError(f"Unknown named state '{name}', expected one of {sorted(NAMED_STATES)}")
    return builder(n)


def marginal_masks(n: int) -> List[tuple]:
    """Every nontrivial qubit subset (neither empty nor all qubits) as a bit tuple"""
    return [int_to_bits(value, n) for value in range(1, 2 ** n - 1)]
