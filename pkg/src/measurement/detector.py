"""Ancilla-based universal detector: Bell measurements on rho x rho0 with rho0 known

Coefficient c_{q,p} is recovered from <T x T> = c_{q,p} c0_{q,p}, so labels
where c0 vanishes are invisible and small |c0| inflate the variance by 1/c0^2.
"""
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence

import numpy as np
from loguru import logger

from src.errors import ArgumentError, UnrecoverableCoefficientError
from src.measurement.bell_measurement import exact_distribution
from src.measurement.estimators import Estimate, ShotPlan, Source, ceil_shots, estimate_correlator
from src.quantum.pauli import PauliLabel, all_labels, check_qubit_count, label_bits, pauli_matrix
from src.quantum.states import (
    DensityMatrix,
    PauliCoefficients,
    pauli_decompose,
    purity,
    reconstruct,
)

RECOVERY_THRESHOLD = 1e-12


@dataclass
class AncillaSpec:
    rho0: DensityMatrix
    c0: PauliCoefficients
    min_abs_c0: float

    @property
    def n(self) -> int:
        return self.rho0.n

    def recoverable(self) -> np.ndarray:
        return np.abs(self.c0.c) > RECOVERY_THRESHOLD


def ancilla_from_state(rho0: DensityMatrix) -> AncillaSpec:
    c0 = pauli_decompose(rho0)
    off_identity = np.abs(c0.c[1:])
    min_abs = 0.0 if np.any(off_identity <= RECOVERY_THRESHOLD) else float(off_identity.min())
    return AncillaSpec(rho0, c0, min_abs)


def stabilizer_ancilla(generators: Sequence[PauliLabel]) -> AncillaSpec:
    """Ancilla in the common +1 eigenstate of n commuting generators, prod_g (I + T_g)/2"""
    if not generators:
        raise ArgumentError("At least one stabilizer generator is required")
    n = check_qubit_count(generators[0].n)
    if len(generators) != n:
        raise ArgumentError(f"{n} qubits need {n} independent generators, got {len(generators)}")
    dim = 2 ** n
    projector = np.eye(dim, dtype=np.complex128)
    for label in generators:
        t = pauli_matrix(label)
        projector = projector @ (np.eye(dim) + t) / 2
    if abs(np.trace(projector).real - 1) > 1e-9:
        raise ArgumentError("Generators do not define a unique stabilizer state")
    return ancilla_from_state(DensityMatrix(n, projector).validate())


def zero_stabilizer_ancilla(n: int) -> AncillaSpec:
    """|0...0>, stabilized by Z on each qubit"""
    generators = [PauliLabel((0,) * n, tuple(int(j == k) for j in range(n))) for k in range(n)]
    return stabilizer_ancilla(generators)


def unbiased_ancilla(n: int) -> AncillaSpec:
    """All non-identity c0 equal to u, with u pushed to the PSD boundary

    A = sum of all non-identity T(q,p) and u = 1/|lambda_min(A)|, so
    rho0 = (I + u A)/N has a zero eigenvalue.
    """
    dim = 2 ** check_qubit_count(n)
    total = np.zeros((dim, dim), dtype=np.complex128)
    for label in all_labels(n):
        if not label.is_identity:
            total += pauli_matrix(label)
    u = 1 / abs(float(np.linalg.eigvalsh(total)[0]))
    coeffs = np.full(4 ** n, u)
    coeffs[0] = 1.0
    return ancilla_from_state(reconstruct(PauliCoefficients(n, coeffs)))


def unbiased_amplification_bound(n: int, ancilla_purity: float = 1.0) -> float:
    """Smallest possible worst-case 1/c0^2 when every |c0| is equal: (N^2 - 1)/(N Tr rho0^2 - 1)"""
    dim = 2 ** n
    excess = dim * ancilla_purity - 1
    if excess <= 0:
        # maximally mixed ancilla: every non-identity c0 vanishes
        return math.inf
    return (dim ** 2 - 1) / excess


def ancilla_joint_expectation(rho: DensityMatrix, ancilla: AncillaSpec, label: PauliLabel) -> float:
    """<T(q,p) x T(q,p)> on rho x rho0, equal to c_{q,p} c0_{q,p}"""
    if rho.n != ancilla.n or label.n != rho.n:
        raise ArgumentError(f"State, ancilla and label sizes differ: {rho.n}, {ancilla.n}, {label.n}")
    dist = exact_distribution(rho, ancilla.rho0)
    return estimate_correlator(dist, label).value


def estimate_c_ancilla(source: Source, ancilla: AncillaSpec, label: PauliLabel) -> Estimate:
    """Signed c_{q,p} = <T x T> / c0_{q,p}, from outcomes (or the exact distribution) of rho x rho0"""
    c0 = ancilla.c0[label]
    if abs(c0) <= RECOVERY_THRESHOLD:
        logger.error(f"Ancilla coefficient vanishes at {label}")
        raise UnrecoverableCoefficientError(f"c0 at {label} is zero; c_{{q,p}} cannot be recovered")
    raw = estimate_correlator(source, label)
    return Estimate(
        raw.value / c0,
        raw.std_error / abs(c0),
        raw.shots,
        list(raw.flags),
        {"c0": c0, "raw_value": raw.value, "raw_std_error": raw.std_error},
    )


def efficiency_report(ancilla: AncillaSpec, plan: ShotPlan) -> Dict[str, Any]:
    """Per-label variance amplification 1/c0^2 against the copy method's shot count"""
    n = ancilla.n
    q_bits, p_bits = label_bits(n)
    rows: List[Dict[str, Any]] = []
    for index, c0 in enumerate(ancilla.c0.c):
        if abs(c0) <= RECOVERY_THRESHOLD:
            continue
        label = PauliLabel(tuple(q_bits[index]), tuple(p_bits[index]))
        amplification = 1 / c0 ** 2
        rows.append({
            "label": str(label),
            "c0": float(c0),
            "amplification": float(amplification),
            "shots_needed": ceil_shots(plan.shots * amplification),
        })
    total = 4 ** n
    universal = len(rows) == total
    if not universal:
        logger.warning(f"Ancilla recovers {len(rows)} of {total} coefficients; detector is non-universal")
    worst = max(row["amplification"] for row in rows)
    return {
        "labels": rows,
        "summary": {
            "recoverable": len(rows),
            "total": total,
            "universal": universal,
            "worst_amplification": worst,
            "copy_baseline_shots": plan.shots,
            "ancilla_purity": purity(ancilla.rho0),
        },
    }
