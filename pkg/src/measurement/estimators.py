"""Two-copy estimators built on per-pair Bell outcomes

Every estimator is the mean of a per-shot statistic that is a product over
pairs. Given a BellDistribution the mean is exact (shots=0, std_error=0);
given sampled BellOutcomes it is the sample mean with its standard error.
"""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
from loguru import logger
from scipy.special import erfinv

from src.errors import ArgumentError, PreconditionError
from src.measurement.bell_measurement import BellDistribution, BellOutcomes, outcome_bits
from src.quantum.pauli import BitsLike, PauliLabel, as_bits, label_weight_profiles
from src.quantum.states import DensityMatrix, marginal_masks, partial_trace, purity as state_purity

Source = Union[BellDistribution, BellOutcomes]

SHOT_RTOL = 1e-12

FLAG_EXACT = "exact"
FLAG_CLAMPED = "clamped-at-zero"
FLAG_NEAR_BRANCH = "near-branch-point"


@dataclass
class Estimate:
    value: float
    std_error: float
    shots: int
    flags: List[str] = field(default_factory=list)
    extras: Dict[str, float] = field(default_factory=dict)

    def to_report(self, estimator: str, params: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        report = {
            "estimator": estimator,
            "params": params or {},
            "value": self.value,
            "std_error": self.std_error,
            "shots": self.shots,
            "flags": list(self.flags),
        }
        if self.extras:
            report["extras"] = dict(self.extras)
        return report


@dataclass(frozen=True)
class ShotPlan:
    """shots = ceil(raw_shots), with raw_shots within a relative 1e-12 of an integer counted as that integer"""
    delta: float
    epsilon: float
    p_conf: float
    k: float
    raw_shots: float
    shots: int

    def half_width(self, estimate: Estimate) -> float:
        """Width k*sigma/(2|c~|) of the |c| interval around an estimate of c^2"""
        abs_c = estimate.extras.get("abs_c", math.sqrt(max(estimate.value, 0.0)))
        if abs_c == 0:
            return math.inf
        return self.k * estimate.std_error / (2 * abs_c)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "delta": self.delta,
            "epsilon": self.epsilon,
            "p_conf": self.p_conf,
            "k": self.k,
            "raw_shots": self.raw_shots,
            "shots": self.shots,
        }


@dataclass(frozen=True)
class PairSelector:
    """Per-pair sign tables h_k(a, b) in {+1, -1}, shape (n, 2, 2)"""
    tables: Tuple[Tuple[Tuple[int, int], Tuple[int, int]], ...]

    def __post_init__(self):
        arr = np.asarray(self.tables)
        if arr.ndim != 3 or arr.shape[1:] != (2, 2) or arr.shape[0] < 1:
            raise ArgumentError(f"Selector tables must have shape (n, 2, 2), got {arr.shape}")
        if not np.all(np.isin(arr, (-1, 1))):
            raise ArgumentError("Selector values must be +1 or -1")
        object.__setattr__(self, "tables", tuple(tuple(tuple(int(v) for v in row) for row in t) for t in arr))

    @property
    def n(self) -> int:
        return len(self.tables)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.tables, dtype=np.float64)

    @classmethod
    def from_tables(cls, tables) -> "PairSelector":
        return cls(tuple(map(tuple, np.asarray(tables).tolist())))

    @classmethod
    def from_groups(cls, groups: Sequence[Set[Tuple[int, int]]]) -> "PairSelector":
        """Pair k maps the Bell outcomes in groups[k] to -1 and the rest to +1"""
        tables = np.ones((len(groups), 2, 2), dtype=int)
        for k, group in enumerate(groups):
            for a, b in group:
                _check_bell_bits(a, b)
                tables[k, a, b] = -1
        return cls.from_tables(tables)

    @classmethod
    def single_bell(cls, n: int, m: int, n_bit: int, keep: Optional[BitsLike] = None) -> "PairSelector":
        """-1 exactly for |beta_{m,n_bit}> on the pairs in `keep` (all pairs by default)"""
        _check_bell_bits(m, n_bit)
        mask = (1,) * n if keep is None else as_bits(keep, n)
        return cls.from_groups([{(m, n_bit)} if bit else set() for bit in mask])


def _check_bell_bits(m: int, n_bit: int):
    if m not in (0, 1) or n_bit not in (0, 1):
        raise ArgumentError(f"Bell indices must be bits, got ({m}, {n_bit})")


def _check_source(source: Source, n: int):
    if source.n != n:
        raise ArgumentError(f"Source has {source.n} qubits, expected {n}")
    if isinstance(source, BellOutcomes) and len(source) == 0:
        raise ArgumentError("No outcomes to estimate from")


def _per_pair_product(a: np.ndarray, b: np.ndarray, tables: np.ndarray) -> np.ndarray:
    """prod_k tables[k, a_k, b_k] for each row"""
    pairs = np.arange(tables.shape[0])
    return np.prod(tables[pairs, a, b], axis=1)


def _reduce(source: Source, statistic_of) -> Estimate:
    """Mean and standard error of a per-shot statistic over a source"""
    if isinstance(source, BellDistribution):
        a, b = outcome_bits(source.n)
        values = statistic_of(a.astype(np.int64), b.astype(np.int64))
        return Estimate(float(np.dot(source.prob, values)), 0.0, 0, [FLAG_EXACT])
    values = statistic_of(source.a.astype(np.int64), source.b.astype(np.int64)).astype(np.float64)
    shots = values.shape[0]
    return Estimate(float(np.mean(values)), float(np.std(values)) / math.sqrt(shots), shots)


def estimate_correlator(source: Source, label: PauliLabel) -> Estimate:
    """Mean of (-1)^(a.q + b.p + q.p), i.e. <T(q,p) x T(q,p)> on the measured pair of states"""
    _check_source(source, label.n)
    q = np.asarray(label.q, dtype=np.int64)
    p = np.asarray(label.p, dtype=np.int64)

    def statistic(a, b):
        return 1 - 2 * ((a @ q + b @ p + label.qp) % 2)

    return _reduce(source, statistic)


def estimate_csq(source: Source, label: PauliLabel) -> Estimate:
    """Estimate c^2_{q,p} on rho x rho; |c| is derived, the sign of c is not observable"""
    estimate = estimate_correlator(source, label)
    abs_c = math.sqrt(max(estimate.value, 0.0))
    if estimate.value < 0:
        estimate.flags.append(FLAG_CLAMPED)
        logger.warning(f"Negative c^2 mean {estimate.value:.3e} at {label}; |c| clamped to 0")
    estimate.extras["abs_c"] = abs_c
    estimate.extras["abs_c_std_error"] = estimate.std_error / (2 * abs_c) if abs_c > 0 else math.inf
    return estimate


def ceil_shots(raw: float) -> int:
    """Ceiling that forgives float noise below SHOT_RTOL, so an exact k=2 plan does not gain a shot"""
    return math.ceil(raw * (1 - SHOT_RTOL))


def _confidence_multiplier(p_conf: float) -> float:
    """k with erf(k / sqrt(2)) = p_conf"""
    return float(math.sqrt(2) * erfinv(p_conf))


def plan_shots(delta: float, epsilon: float, p_conf: float) -> ShotPlan:
    """Repetitions needed to get every |c| >= delta within epsilon with probability p_conf

    Depends only on the precision targets, never on the qubit count.
    """
    if delta <= 0 or epsilon <= 0:
        raise ArgumentError(f"delta and epsilon must be positive, got {delta} and {epsilon}")
    if not 0 < p_conf < 1:
        raise ArgumentError(f"p_conf must lie in (0, 1), got {p_conf}")
    k = _confidence_multiplier(p_conf)
    raw = k ** 2 / (4 * delta ** 2 * epsilon ** 2)
    shots = ceil_shots(raw)
    return ShotPlan(delta, epsilon, p_conf, k, raw, shots)


def _pair_weight_factors(table: np.ndarray) -> np.ndarray:
    """g(q, p) = sum_{a,b} h(a,b) (-1)^(aq + bp + qp) for one pair, indexed [q, p]"""
    out = np.zeros((2, 2))
    for q in (0, 1):
        for p in (0, 1):
            out[q, p] = sum(
                table[a, b] * (-1) ** (a * q + b * p + q * p) for a in (0, 1) for b in (0, 1)
            )
    return out


def _product_weights(tables: np.ndarray) -> np.ndarray:
    """w_{q,p} with E[prod_k h_k] = sum_{q,p} w_{q,p} c^A c^B"""
    n = tables.shape[0]
    q_bits, p_bits = outcome_bits(n)
    factors = np.stack([_pair_weight_factors(t) for t in tables])
    pairs = np.arange(n)
    return np.prod(factors[pairs, q_bits, p_bits], axis=1) / 4 ** n


def selector_weights(selector: PairSelector) -> np.ndarray:
    """Weights of the coarse parity: Delta P = sum_{q,p} w_{q,p} c^2_{q,p}"""
    return _product_weights(selector.as_array())


def bell_sign_vector(m: int, n_bit: int, n: int) -> np.ndarray:
    """s_{q,p} = (-1)^((m+1)(alpha_x+alpha_y)) (-1)^((n+1)(alpha_z+alpha_y))"""
    _check_bell_bits(m, n_bit)
    _, alpha_x, alpha_y, alpha_z = label_weight_profiles(n)
    exponent = (m + 1) * (alpha_x + alpha_y) + (n_bit + 1) * (alpha_z + alpha_y)
    return 1 - 2 * (exponent % 2)


def all_orthogonal_weights(m: int, n_bit: int, n: int, keep: Optional[BitsLike] = None) -> np.ndarray:
    """f_{q,p} with p^(all)_{m,n} = sum f_{q,p} c^2_{q,p} / N**2

    Full mask: f = 3^alpha_0 (-1)^((m+1)(alpha_x+alpha_y) + (n+1)(alpha_z+alpha_y)).
    Partial mask J: labels must be identity outside J, each unmasked qubit
    contributes 4 and the alpha counts run over J only.
    """
    _check_bell_bits(m, n_bit)
    mask = (1,) * n if keep is None else as_bits(keep, n)
    alpha_0, alpha_x, alpha_y, alpha_z = label_weight_profiles(n, mask)
    exponent = (m + 1) * (alpha_x + alpha_y) + (n_bit + 1) * (alpha_z + alpha_y)
    f = 3.0 ** alpha_0 * (1 - 2 * (exponent % 2))
    outside = [k for k in range(n) if not mask[k]]
    if outside:
        q_bits, p_bits = outcome_bits(n)
        identity_outside = np.all((q_bits[:, outside] == 0) & (p_bits[:, outside] == 0), axis=1)
        f = np.where(identity_outside, f * 4.0 ** len(outside), 0.0)
    return f


def coarse_parity(source: Source, selector: PairSelector) -> Estimate:
    """Mean of prod_k h_k(a_k, b_k); for a single-Bell selector this is Prob(even #) - Prob(odd #)"""
    _check_source(source, selector.n)
    tables = selector.as_array()
    return _reduce(source, lambda a, b: _per_pair_product(a, b, tables))


def purity(source: Source, keep: BitsLike) -> Estimate:
    """Tr(rho_J^2): singlet parity counted only on the pairs in J"""
    mask = as_bits(keep, source.n)
    if not any(mask):
        raise ArgumentError("Purity mask must select at least one qubit")
    return coarse_parity(source, PairSelector.single_bell(source.n, 1, 1, mask))


def p_all(source: Source, m: int, n_bit: int, keep: Optional[BitsLike] = None) -> Estimate:
    """Probability that no pair in the mask shows |beta_{m,n_bit}>"""
    _check_bell_bits(m, n_bit)
    n = source.n
    mask = (1,) * n if keep is None else as_bits(keep, n)
    _check_source(source, n)
    tables = np.ones((n, 2, 2))
    for k in range(n):
        if mask[k]:
            tables[k, m, n_bit] = 0.0
    return _reduce(source, lambda a, b: _per_pair_product(a, b, tables))


def concurrence_pure(source: Source) -> Estimate:
    """C = 2 sqrt(1 - p^(all)_{1,1}) for a pure global state"""
    p = p_all(source, 1, 1)
    gap = 1 - p.value
    flags = list(p.flags)
    if gap < 0:
        flags.append(FLAG_CLAMPED)
        logger.warning(f"p_all = {p.value:.6f} exceeds 1; concurrence clamped to 0")
    value = 2 * math.sqrt(max(gap, 0.0))
    if p.shots == 0:
        std_error = 0.0
    elif gap <= p.std_error:
        std_error = math.inf
        flags.append(FLAG_NEAR_BRANCH)
        logger.warning(f"1 - p_all = {gap:.3e} within one standard error; error propagation degraded")
    else:
        std_error = p.std_error / math.sqrt(gap)
    return Estimate(value, std_error, p.shots, flags, {"p_all": p.value, "p_all_std_error": p.std_error})


def concurrence_direct(rho: DensityMatrix) -> float:
    """2^(1-n/2) sqrt((2^n - 2) - sum_l Tr(rho_l^2)) over every nontrivial subset l"""
    n = rho.n
    if n < 2:
        raise ArgumentError(f"Multipartite concurrence needs n >= 2, got {n}")
    state_p = state_purity(rho)
    if state_p < 1 - 1e-8:
        raise PreconditionError(f"Concurrence formula needs a pure state, Tr(rho^2) = {state_p:.10f}")
    marginal_sum = sum(state_purity(partial_trace(rho, mask)) for mask in marginal_masks(n))
    return 2 ** (1 - n / 2) * math.sqrt(max((2 ** n - 2) - marginal_sum, 0.0))


def swap_purity(rho: DensityMatrix) -> float:
    """Tr(Swap rho x rho) with Swap exchanging the two copies"""
    dim = rho.dim
    swap = np.eye(dim * dim).reshape(dim, dim, dim, dim).transpose(1, 0, 2, 3).reshape(dim * dim, dim * dim)
    return float(np.real(np.trace(swap @ np.kron(rho.matrix, rho.matrix))))
