"""Superoperators as Choi matrices and the two-copy POVM to ccP-map decomposition

Choi convention: C_hat = (C_tilde x I)(|I><I|) with |I> = sum_i |ii> in the
computational basis. The first tensor factor is the map's output space, so
C_hat[(r, i), (s, j)] = C_tilde(|i><j|)[r, s].
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from src.config import get_settings
from src.seeding import make_rng
from src.errors import ArgumentError, InvalidPOVMError, InvalidStateError
from src.quantum.pauli import PauliLabel, as_bits, check_qubit_count, pauli_matrix
from src.quantum.states import DensityMatrix


@dataclass
class ChoiMatrix:
    """Choi matrix of a superoperator acting on n qubits (dimension N**2 x N**2)"""
    n: int
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.complex128)
        dim = 4 ** self.n
        if self.matrix.shape != (dim, dim):
            raise ArgumentError(f"Expected a {dim}x{dim} Choi matrix for n={self.n}, got {self.matrix.shape}")
        herm = float(np.max(np.abs(self.matrix - self.matrix.conj().T)))
        if herm > get_settings().hermitian_tol:
            raise InvalidStateError(f"Choi matrix is not Hermitian (max |M - M^dag| = {herm:.3e})")

    @property
    def dim(self) -> int:
        """Dimension N of the space the map acts on"""
        return 2 ** self.n

    def tensor(self) -> np.ndarray:
        """View as C[r, i, s, j]"""
        d = self.dim
        return self.matrix.reshape(d, d, d, d)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def to_dict(self) -> Dict[str, Any]:
        flat = self.matrix.reshape(-1)
        return {"n": self.n, "matrix": [[float(z.real), float(z.imag)] for z in flat]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ChoiMatrix":
        try:
            n = int(data["n"])
            entries = np.asarray(data["matrix"], dtype=np.float64)
            matrix = (entries[..., 0] + 1j * entries[..., 1]).reshape(4 ** n, 4 ** n)
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise ArgumentError(f"Malformed Choi document: {e}")
        return cls(n, matrix)


class PositivityClass(str, Enum):
    CP_ONLY = "CP-only"
    CCP_ONLY = "ccP-only"
    BOTH = "both"
    NEITHER = "neither"


@dataclass(frozen=True)
class PositivityReport:
    classification: PositivityClass
    min_eig_cp: float
    min_eig_ccp: float

    @property
    def is_cp(self) -> bool:
        return self.classification in (PositivityClass.CP_ONLY, PositivityClass.BOTH)

    @property
    def is_ccp(self) -> bool:
        return self.classification in (PositivityClass.CCP_ONLY, PositivityClass.BOTH)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "classification": self.classification.value,
            "min_eig_cp": self.min_eig_cp,
            "min_eig_ccp": self.min_eig_ccp,
        }


@dataclass
class CcpmvmFamily:
    """ccP maps C_mu (stored as Choi matrices) whose fidelities are the POVM probabilities"""
    n: int
    members: List[Tuple[str, ChoiMatrix]] = field(default_factory=list)

    def total_choi(self) -> np.ndarray:
        return sum(choi.matrix for _, choi in self.members)

    def depolarizing_deviation(self) -> float:
        """max |sum_mu Choi(C_mu) - I|; the sum must be the fully depolarizing map"""
        total = self.total_choi()
        return float(np.max(np.abs(total - np.eye(total.shape[0]))))

    def probabilities(self, rho: DensityMatrix) -> Dict[str, float]:
        return {label: map_fidelity(choi, rho) for label, choi in self.members}

    def certify(self, tol: Optional[float] = None) -> List[PositivityReport]:
        return [positivity_class(choi, tol) for _, choi in self.members]


def choi_from_map(fn: Callable[[np.ndarray], np.ndarray], n: int) -> ChoiMatrix:
    """Forward isomorphism: sum_ij fn(|i><j|) x |i><j|"""
    d = 2 ** check_qubit_count(n)
    out = np.zeros((d, d, d, d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            unit = np.zeros((d, d), dtype=np.complex128)
            unit[i, j] = 1
            out[:, i, :, j] = fn(unit)
    return ChoiMatrix(n, out.reshape(d * d, d * d))


def apply_choi(choi: ChoiMatrix, x) -> np.ndarray:
    """C_tilde(x) = sum_ij x[i, j] C_hat[(., i), (., j)]"""
    operator = x.matrix if isinstance(x, DensityMatrix) else np.asarray(x, dtype=np.complex128)
    if operator.shape != (choi.dim, choi.dim):
        raise ArgumentError(f"Operator shape {operator.shape} does not match Choi dimension {choi.dim}")
    return np.einsum("risj,ij->rs", choi.tensor(), operator)


def identity_choi(n: int) -> ChoiMatrix:
    """|I><I|, the Choi matrix of the identity map"""
    d = 2 ** check_qubit_count(n)
    vec = np.eye(d, dtype=np.complex128).reshape(-1)
    return ChoiMatrix(n, np.outer(vec, vec.conj()))


def transposition_choi(n: int) -> ChoiMatrix:
    """The Swap operator, Choi matrix of the transposition T"""
    d = 2 ** check_qubit_count(n)
    swap = np.eye(d * d, dtype=np.complex128).reshape(d, d, d, d).transpose(1, 0, 2, 3)
    return ChoiMatrix(n, swap.reshape(d * d, d * d))


def depolarizing_choi(n: int) -> ChoiMatrix:
    """Identity on N**2, the Choi matrix of E(rho) = Tr(rho) I"""
    d = 2 ** check_qubit_count(n)
    return ChoiMatrix(n, np.eye(d * d, dtype=np.complex128))


def compose_with_transposition(choi: ChoiMatrix) -> ChoiMatrix:
    """Choi matrix of C o T: partial transpose on the input factor"""
    d = choi.dim
    return ChoiMatrix(choi.n, choi.tensor().transpose(0, 3, 2, 1).reshape(d * d, d * d))


def positivity_class(choi: ChoiMatrix, tol: Optional[float] = None) -> PositivityReport:
    """CP iff Choi(C) is PSD, ccP iff Choi(C o T) is PSD"""
    tol = get_settings().psd_tol if tol is None else tol
    min_cp = choi.min_eigenvalue()
    min_ccp = compose_with_transposition(choi).min_eigenvalue()
    cp, ccp = min_cp >= -tol, min_ccp >= -tol
    if cp and ccp:
        classification = PositivityClass.BOTH
    elif cp:
        classification = PositivityClass.CP_ONLY
    elif ccp:
        classification = PositivityClass.CCP_ONLY
    else:
        classification = PositivityClass.NEITHER
    return PositivityReport(classification, min_cp, min_ccp)


def povm_to_ccpmvm(povm: Sequence[np.ndarray], labels: Optional[Sequence[str]] = None) -> CcpmvmFamily:
    """Decompose a POVM on rho x rho into ccP maps C_mu = C_tilde_mu o T

    Each element A_mu acts on (copy A) x (copy B). Read as a Choi matrix, copy A
    is the output space and copy B the input, so the transposed copy B becomes
    the argument: Tr(rho x rho A_mu) = Tr(rho C_mu(rho)).
    """
    if not povm:
        raise InvalidPOVMError("POVM has no elements")
    elements = [np.asarray(el, dtype=np.complex128) for el in povm]
    dim = elements[0].shape[0]
    n = (dim.bit_length() - 1) // 2
    if dim != 4 ** n or n < 1:
        raise InvalidPOVMError(f"POVM elements must act on two copies of n qubits, got dimension {dim}")
    check_qubit_count(n)
    labels = list(labels) if labels is not None else [str(mu) for mu in range(len(elements))]
    if len(labels) != len(elements):
        raise ArgumentError(f"{len(labels)} labels given for {len(elements)} POVM elements")

    settings = get_settings()
    tol = settings.psd_tol
    for mu, element in enumerate(elements):
        if element.shape != (dim, dim):
            raise InvalidPOVMError(f"POVM element {mu} has shape {element.shape}, expected {(dim, dim)}", index=mu)
        asymmetry = float(np.max(np.abs(element - element.conj().T)))
        if asymmetry > settings.hermitian_tol:
            logger.error(f"POVM element {mu} is not Hermitian (deviation {asymmetry:.3e})")
            raise InvalidPOVMError(f"POVM element {mu} is not Hermitian: max |A - A^dagger| = {asymmetry:.3e}", index=mu)
        min_eig = float(np.linalg.eigvalsh((element + element.conj().T) / 2)[0])
        if min_eig < -tol:
            logger.error(f"POVM element {mu} has eigenvalue {min_eig:.3e}")
            raise InvalidPOVMError(f"POVM element {mu} is not positive: eigenvalue {min_eig:.6g}", index=mu, eigenvalue=min_eig)
    deviation = float(np.max(np.abs(sum(elements) - np.eye(dim))))
    if deviation > tol:
        logger.error(f"POVM elements sum to identity only within {deviation:.3e}")
        raise InvalidPOVMError(f"POVM elements do not sum to the identity (max deviation {deviation:.3e})")

    members = [
        (label, compose_with_transposition(ChoiMatrix(n, element)))
        for label, element in zip(labels, elements)
    ]
    logger.info(f"Decomposed {len(members)}-element POVM on 2x{n} qubits into ccP maps")
    return CcpmvmFamily(n, members)


def map_fidelity(choi: ChoiMatrix, rho: DensityMatrix) -> float:
    """Tr(rho C(rho))"""
    if rho.n != choi.n:
        raise ArgumentError(f"State has {rho.n} qubits, map acts on {choi.n}")
    return float(np.real(np.trace(rho.matrix @ apply_choi(choi, rho))))


def random_povm(n: int, elements: int, seed: int) -> List[np.ndarray]:
    """m random positive operators on two copies, symmetrized by S^(-1/2) A S^(-1/2)"""
    check_qubit_count(n)
    if elements < 1:
        raise ArgumentError(f"A POVM needs at least one element, got {elements}")
    dim = 4 ** n
    rng = make_rng(seed)
    raw = []
    for _ in range(elements):
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        raw.append(g @ g.conj().T)
    eigvals, eigvecs = np.linalg.eigh(sum(raw))
    inv_sqrt = (eigvecs / np.sqrt(eigvals)) @ eigvecs.conj().T
    povm = []
    for a in raw:
        el = inv_sqrt @ a @ inv_sqrt
        povm.append((el + el.conj().T) / 2)
    return povm


def bell_map_choi(a: Sequence[int], b: Sequence[int]) -> ChoiMatrix:
    """Choi matrix of C_{a,b}(rho) = T(b,a) rho^T T(b,a) / N"""
    a, b = as_bits(a), as_bits(b)
    if len(a) != len(b):
        raise ArgumentError("Bell outcome parts must have equal length")
    t = pauli_matrix(PauliLabel(b, a))
    d = t.shape[0]
    return choi_from_map(lambda x: t @ x.T @ t / d, len(a))
