"""Experiment configuration and the run_experiment orchestrator"""
import asyncio
import math
import time
from typing import Annotated, Any, Callable, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, StringConstraints, TypeAdapter, model_validator

from src.config import get_settings
from src.errors import ArgumentError, TwoCopyError, UsageError
from src.measurement.bell_measurement import (
    BellDistribution,
    bell_povm,
    exact_distribution,
    sample_outcomes,
    sample_outcomes_parallel,
)
from src.measurement.detector import (
    AncillaSpec,
    ancilla_from_state,
    efficiency_report,
    estimate_c_ancilla,
    unbiased_amplification_bound,
    unbiased_ancilla,
    zero_stabilizer_ancilla,
)
from src.measurement.estimators import (
    Source,
    all_orthogonal_weights,
    concurrence_direct,
    concurrence_pure,
    estimate_csq,
    p_all,
    plan_shots,
    purity as estimate_purity,
    swap_purity,
)
from src.quantum.channels import bell_map_choi, povm_to_ccpmvm, random_povm
from src.quantum.pauli import PauliLabel, all_labels, int_to_bits
from src.quantum.states import (
    BlochVector,
    DensityMatrix,
    named_state,
    partial_trace,
    pauli_decompose,
    purity,
    qubit_from_bloch,
    random_state,
)
from src.reports.report_io import load_state_file

Task = Literal[
    "tomography",
    "purity",
    "partial-purity",
    "concurrence",
    "pall",
    "ccpmvm-check",
    "detector-compare",
    "distribution",
]
BitString = Annotated[str, StringConstraints(pattern=r"^[01]+$")]
Seed = Annotated[int, Field(ge=0, lt=2 ** 64)]

# p_conf = erf(sqrt 2), i.e. k = 2
DEFAULT_P_CONF = math.erf(math.sqrt(2))


# --- state sources ---

class RandomSource(BaseModel):
    kind: Literal["random"]
    n: int = Field(ge=1)
    rank: int = Field(default=1, ge=1)
    seed: Seed

    def build(self) -> DensityMatrix:
        return random_state(self.n, self.rank, self.seed)


class BlochSource(BaseModel):
    kind: Literal["bloch"]
    p_x: float
    p_y: float
    p_z: float

    def build(self) -> DensityMatrix:
        return qubit_from_bloch(BlochVector(self.p_x, self.p_y, self.p_z))


class FileSource(BaseModel):
    kind: Literal["file"]
    path: str

    def build(self) -> DensityMatrix:
        return load_state_file(self.path)


class NamedSource(BaseModel):
    kind: Literal["named"]
    name: Literal["ghz", "bell", "product-zero"]
    n: int = Field(ge=1)

    def build(self) -> DensityMatrix:
        return named_state(self.name, self.n)


StateSource = Annotated[
    Union[RandomSource, BlochSource, FileSource, NamedSource],
    Field(discriminator="kind"),
]
_STATE_SOURCE = TypeAdapter(StateSource)


def parse_state_source(text: str) -> StateSource:
    """Short forms random:n=2,rank=1,seed=7 | bloch:0,0,1 | named:ghz:3 | <path to state JSON>"""
    kind, _, rest = text.partition(":")
    try:
        if kind == "random":
            fields = dict(item.split("=", 1) for item in rest.split(",") if item)
            return _STATE_SOURCE.validate_python({"kind": "random", **fields})
        if kind == "bloch":
            p_x, p_y, p_z = (float(v) for v in rest.split(","))
            return _STATE_SOURCE.validate_python({"kind": "bloch", "p_x": p_x, "p_y": p_y, "p_z": p_z})
        if kind == "named":
            name, _, n = rest.partition(":")
            return _STATE_SOURCE.validate_python({"kind": "named", "name": name, "n": n})
    except ValueError as e:
        raise UsageError(f"Cannot parse state source '{text}': {e}")
    return _STATE_SOURCE.validate_python({"kind": "file", "path": text})


# --- task parameters ---

class PlanConfig(BaseModel):
    delta: float = Field(gt=0)
    epsilon: float = Field(gt=0)
    p_conf: float = Field(gt=0, lt=1)


class RandomPovmSpec(BaseModel):
    elements: int = Field(ge=1)
    seed: Seed


class RandomPovmChoice(BaseModel):
    random: RandomPovmSpec


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    task: Task
    state: StateSource
    shots: Union[Literal["exact"], Annotated[int, Field(ge=1)], None] = None
    seed: Seed = 0
    plan: Optional[PlanConfig] = None
    chunk_shots: Optional[int] = Field(default=None, ge=1)
    labels: Optional[List[str]] = None
    masks: Optional[List[BitString]] = None
    keep: Optional[BitString] = None
    bell: Tuple[int, int] = (1, 1)
    method: Literal["closed-form", "direct"] = "closed-form"
    povm: Union[Literal["bell"], RandomPovmChoice] = "bell"
    ancilla: Union[Literal["stabilizer-zero", "unbiased"], StateSource, None] = None

    @model_validator(mode="after")
    def check_task_params(self) -> "ExperimentConfig":
        if self.task == "partial-purity" and not self.masks:
            raise ValueError("task 'partial-purity' needs a non-empty 'masks' list")
        if self.task == "detector-compare" and self.ancilla is None:
            raise ValueError("task 'detector-compare' needs an 'ancilla'")
        if any(bit not in (0, 1) for bit in self.bell):
            raise ValueError(f"'bell' must be a pair of bits, got {list(self.bell)}")
        if self.shots is None and self.plan is None:
            self.shots = "exact"
        return self

    def resolved_shots(self) -> Union[str, int]:
        """Explicit shots win; otherwise the plan's repetition count"""
        if self.shots is not None:
            return self.shots
        return plan_shots(self.plan.delta, self.plan.epsilon, self.plan.p_conf).shots


# --- helpers ---

def _acquire(dist: BellDistribution, config: ExperimentConfig) -> Source:
    """The exact distribution, or sampled outcomes drawn from it"""
    shots = config.resolved_shots()
    if shots == "exact":
        return dist
    if config.chunk_shots:
        return asyncio.run(sample_outcomes_parallel(dist, shots, config.seed, config.chunk_shots))
    return sample_outcomes(dist, shots, config.seed)


def _labels(config: ExperimentConfig, n: int) -> List[PauliLabel]:
    if config.labels is None:
        return list(all_labels(n))
    labels = [PauliLabel.parse(text) for text in config.labels]
    for label in labels:
        if label.n != n:
            raise ArgumentError(f"Label {label} has {label.n} qubits, state has {n}")
    return labels


def _plan(config: ExperimentConfig):
    if config.plan is None:
        return None
    return plan_shots(config.plan.delta, config.plan.epsilon, config.plan.p_conf)


# --- tasks ---

def run_distribution(rho: DensityMatrix, config: ExperimentConfig) -> Dict[str, Any]:
    dist = exact_distribution(rho, rho, method=config.method)
    results = {"method": config.method, **dist.to_dict()}
    source = _acquire(dist, config)
    if source is not dist:
        powers = 1 << np.arange(rho.n - 1, -1, -1)
        index = ((source.a.astype(np.int64) @ powers) << rho.n) | (source.b.astype(np.int64) @ powers)
        counts = np.bincount(index, minlength=4 ** rho.n)
        results["shots"] = len(source)
        results["frequencies"] = [float(x) for x in counts / len(source)]
    return results


def run_tomography(rho: DensityMatrix, config: ExperimentConfig) -> Dict[str, Any]:
    source = _acquire(exact_distribution(rho, rho), config)
    reference = pauli_decompose(rho)
    plan = _plan(config)
    rows = []
    max_deviation = 0.0
    for label in _labels(config, rho.n):
        estimate = estimate_csq(source, label)
        row = estimate.to_report("csq", {"label": str(label)})
        row["reference"] = reference[label] ** 2
        if plan is not None:
            row["half_width"] = plan.half_width(estimate)
        max_deviation = max(max_deviation, abs(estimate.value - row["reference"]))
        rows.append(row)
    results = {"estimates": rows, "max_csq_deviation": max_deviation}
    if plan is not None:
        results["plan"] = plan.to_dict()
    return results


def run_purity(rho: DensityMatrix, config: ExperimentConfig) -> Dict[str, Any]:
    source = _acquire(exact_distribution(rho, rho), config)
    keep = (1,) * rho.n
    estimate = estimate_purity(source, keep)
    return {
        "estimate": estimate.to_report("purity", {"keep": "1" * rho.n}),
        "reference": {"trace_rho_squared": purity(rho), "swap": swap_purity(rho)},
    }


def run_partial_purity(rho: DensityMatrix, config: ExperimentConfig) -> Dict[str, Any]:
    source = _acquire(exact_distribution(rho, rho), config)
    rows = []
    for mask in config.masks:
        row = estimate_purity(source, mask).to_report("purity", {"keep": mask})
        row["reference"] = purity(partial_trace(rho, mask))
        rows.append(row)
    return {"estimates": rows}


def run_pall(rho: DensityMatrix, config: ExperimentConfig) -> Dict[str, Any]:
    source = _acquire(exact_distribution(rho, rho), config)
    m, n_bit = config.bell
    estimate = p_all(source, m, n_bit, config.keep)
    weights = all_orthogonal_weights(m, n_bit, rho.n, config.keep)
    reference = float(np.dot(weights, pauli_decompose(rho).squares())) / 4 ** rho.n
    params = {"m": m, "n": n_bit, "keep": config.keep or "1" * rho.n}
    return {"estimate": estimate.to_report("p_all", params), "reference": reference}


def run_concurrence(rho: DensityMatrix, config: ExperimentConfig) -> Dict[str, Any]:
    source = _acquire(exact_distribution(rho, rho), config)
    estimate = concurrence_pure(source)
    reference = None
    if rho.n >= 2 and purity(rho) >= 1 - 1e-8:
        reference = concurrence_direct(rho)
    else:
        logger.warning("Concurrence reference needs a pure state on n >= 2 qubits; skipped")
    return {"estimate": estimate.to_report("concurrence", {}), "reference": reference}


def _povm_elements(config: ExperimentConfig, n: int) -> Tuple[List[str], List[np.ndarray], List[Optional[Tuple]]]:
    """Labels, elements and (for the Bell POVM) the (a, b) outcome of each element"""
    if config.povm == "bell":
        labelled = bell_povm(n)
        outcomes = [(int_to_bits(i >> n, n), int_to_bits(i & ((1 << n) - 1), n)) for i in range(4 ** n)]
        return [label for label, _ in labelled], [el for _, el in labelled], outcomes
    random_spec = config.povm.random
    elements = random_povm(n, random_spec.elements, random_spec.seed)
    return [str(mu) for mu in range(len(elements))], elements, [None] * len(elements)


def run_ccpmvm_check(rho: DensityMatrix, config: ExperimentConfig) -> Dict[str, Any]:
    n = rho.n
    labels, elements, outcomes = _povm_elements(config, n)
    family = povm_to_ccpmvm(elements, labels)
    two_copy = np.kron(rho.matrix, rho.matrix)
    map_probs = family.probabilities(rho)
    rows = []
    reports = family.certify()
    for (label, choi), element, outcome, positivity in zip(family.members, elements, outcomes, reports):
        povm_prob = float(np.real(np.trace(two_copy @ element)))
        row = {
            "label": label,
            **positivity.to_dict(),
            "povm_probability": povm_prob,
            "map_probability": map_probs[label],
        }
        if outcome is not None:
            row["closed_form_deviation"] = float(np.max(np.abs(choi.matrix - bell_map_choi(*outcome).matrix)))
        rows.append(row)
    all_ccp = all(r.is_ccp for r in reports)
    if not all_ccp:
        logger.warning("Some decomposed maps failed the ccP test")
    return {
        "members": rows,
        "summary": {
            "elements": len(rows),
            "all_ccp": all_ccp,
            "depolarizing_deviation": family.depolarizing_deviation(),
            "max_probability_deviation": max(abs(r["povm_probability"] - r["map_probability"]) for r in rows),
        },
    }


def _ancilla(config: ExperimentConfig, n: int) -> AncillaSpec:
    if config.ancilla == "stabilizer-zero":
        return zero_stabilizer_ancilla(n)
    if config.ancilla == "unbiased":
        return unbiased_ancilla(n)
    rho0 = config.ancilla.build()
    if rho0.n != n:
        raise ArgumentError(f"Ancilla has {rho0.n} qubits, state has {n}")
    return ancilla_from_state(rho0)


def run_detector_compare(rho: DensityMatrix, config: ExperimentConfig) -> Dict[str, Any]:
    ancilla = _ancilla(config, rho.n)
    plan = _plan(config) or plan_shots(0.1, 0.1, DEFAULT_P_CONF)
    efficiency = efficiency_report(ancilla, plan)
    source = _acquire(exact_distribution(rho, ancilla.rho0), config)
    reference = pauli_decompose(rho)
    recoverable = ancilla.recoverable()
    rows = []
    for label in _labels(config, rho.n):
        if not recoverable[label.index]:
            continue
        row = estimate_c_ancilla(source, ancilla, label).to_report("c_ancilla", {"label": str(label)})
        row["reference"] = reference[label]
        rows.append(row)
    efficiency["summary"]["unbiased_bound"] = unbiased_amplification_bound(rho.n, purity(ancilla.rho0))
    return {"efficiency": efficiency, "estimates": rows, "plan": plan.to_dict()}


TASKS: Dict[str, Callable[[DensityMatrix, ExperimentConfig], Dict[str, Any]]] = {
    "tomography": run_tomography,
    "purity": run_purity,
    "partial-purity": run_partial_purity,
    "concurrence": run_concurrence,
    "pall": run_pall,
    "ccpmvm-check": run_ccpmvm_check,
    "detector-compare": run_detector_compare,
    "distribution": run_distribution,
}


def run_experiment(config: ExperimentConfig) -> Dict[str, Any]:
    """Run one task and return the report document

    Everything but duration_s is a function of the config alone.
    """
    start = time.perf_counter()
    try:
        logger.info(f"Running task '{config.task}' on a {config.state.kind} state")
        rho = config.state.build()
        results = TASKS[config.task](rho, config)
    except TwoCopyError as e:
        logger.error(f"Error in task '{config.task}': {e}")
        raise
    return {
        "schema_version": get_settings().report_schema_version,
        "config": config.model_dump(mode="json"),
        "results": results,
        "duration_s": time.perf_counter() - start,
    }
