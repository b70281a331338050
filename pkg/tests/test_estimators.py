import inspect
import math

import numpy as np
import pytest

from src.errors import ArgumentError, PreconditionError
from src.measurement.bell_measurement import BellOutcomes, exact_distribution, sample_outcomes
from src.measurement.estimators import (
    FLAG_CLAMPED,
    FLAG_EXACT,
    FLAG_NEAR_BRANCH,
    Estimate,
    PairSelector,
    all_orthogonal_weights,
    bell_sign_vector,
    ceil_shots,
    coarse_parity,
    concurrence_direct,
    concurrence_pure,
    estimate_correlator,
    estimate_csq,
    p_all,
    plan_shots,
    purity,
    selector_weights,
    swap_purity,
)
from src.quantum.pauli import PauliLabel, all_labels
from src.quantum.states import (
    BlochVector,
    ghz_state,
    marginal_masks,
    partial_trace,
    pauli_decompose,
    product_zero_state,
    pure_state,
    purity as state_purity,
    qubit_from_bloch,
    random_state,
    tensor,
)

K2_P_CONF = math.erf(math.sqrt(2))


def two_copy(rho):
    return exact_distribution(rho, rho)


def random_pure_product(n, seed):
    rng = np.random.default_rng(seed)
    return tensor(*[pure_state(rng.standard_normal(2) + 1j * rng.standard_normal(2)) for _ in range(n)])


# --- estimate_csq ---
def test_identity_label_is_one_with_zero_error(mixed_rho2):
    outcomes = sample_outcomes(two_copy(mixed_rho2), 200, seed=4)
    estimate = estimate_csq(outcomes, PauliLabel.identity(2))
    assert estimate.value == 1.0
    assert estimate.std_error == 0.0
    assert estimate.shots == 200


def test_exact_csq_matches_decomposition(mixed_rho3):
    dist = two_copy(mixed_rho3)
    coeffs = pauli_decompose(mixed_rho3)
    for label in all_labels(3):
        estimate = estimate_csq(dist, label)
        assert estimate.value == pytest.approx(coeffs[label] ** 2, abs=1e-10)
        assert estimate.flags == [FLAG_EXACT]
        assert estimate.extras["abs_c"] == pytest.approx(abs(coeffs[label]), abs=1e-5)


def test_zero_state_z_label_is_one():
    rho = product_zero_state(1)
    outcomes = sample_outcomes(two_copy(rho), 300, seed=8)
    assert estimate_csq(outcomes, PauliLabel((0,), (1,))).value == 1.0


def test_sampled_std_error_bounded(mixed_rho2):
    outcomes = sample_outcomes(two_copy(mixed_rho2), 400, seed=2)
    for label in all_labels(2):
        assert 0 <= estimate_csq(outcomes, label).std_error <= 1 / math.sqrt(400) + 1e-15


def test_negative_mean_clamps_abs_c():
    outcomes = BellOutcomes([[0], [1]], [[1], [1]])
    estimate = estimate_csq(outcomes, PauliLabel((0,), (1,)))
    assert estimate.value == -1.0
    assert estimate.extras["abs_c"] == 0.0
    assert FLAG_CLAMPED in estimate.flags


def test_estimate_argument_errors(mixed_rho2):
    with pytest.raises(ArgumentError):
        estimate_csq(BellOutcomes(np.zeros((0, 2)), np.zeros((0, 2))), PauliLabel.identity(2))
    with pytest.raises(ArgumentError):
        estimate_csq(two_copy(mixed_rho2), PauliLabel.identity(3))


def test_estimate_report_layout():
    report = Estimate(0.5, 0.01, 100, ["x"]).to_report("csq", {"label": "q=1,p=0"})
    assert list(report) == ["estimator", "params", "value", "std_error", "shots", "flags"]


# --- plan_shots ---
def test_plan_for_two_sigma():
    plan = plan_shots(0.1, 0.1, K2_P_CONF)
    assert plan.k == pytest.approx(2.0, abs=1e-10)
    assert plan.shots == 10000


def test_plan_inverts_erf():
    plan = plan_shots(0.2, 0.05, 0.9)
    assert math.erf(plan.k / math.sqrt(2)) == pytest.approx(0.9, abs=1e-10)
    assert plan.shots == math.ceil(plan.k ** 2 / (4 * 0.2 ** 2 * 0.05 ** 2))


def test_doubling_epsilon_quarters_raw_shots():
    base = plan_shots(0.1, 0.1, 0.95)
    doubled = plan_shots(0.1, 0.2, 0.95)
    assert doubled.raw_shots == pytest.approx(base.raw_shots / 4, rel=1e-12)


@pytest.mark.parametrize("args", [(0.1, 0.1, 1.0), (0.1, 0.1, 0.0), (0.0, 0.1, 0.9), (0.1, -1, 0.9)])
def test_plan_argument_errors(args):
    with pytest.raises(ArgumentError):
        plan_shots(*args)


def test_plan_rounds_up_raw_counts_just_above_an_integer(mocker):
    mocker.patch("src.measurement.estimators._confidence_multiplier", return_value=2 * math.sqrt(1 + 4e-11))
    plan = plan_shots(0.1, 0.1, 0.9)
    assert plan.raw_shots > 10000
    assert plan.shots == 10001


def test_float_noise_does_not_add_a_shot():
    assert ceil_shots(10000 * (1 + 1e-15)) == 10000
    assert ceil_shots(10000.0000004) == 10001
    assert ceil_shots(9999.5) == 10000


def test_plan_does_not_take_qubit_count():
    assert list(inspect.signature(plan_shots).parameters) == ["delta", "epsilon", "p_conf"]


def test_half_width():
    plan = plan_shots(0.1, 0.1, K2_P_CONF)
    estimate = Estimate(0.25, 0.01, 10000, extras={"abs_c": 0.5})
    assert plan.half_width(estimate) == pytest.approx(0.02, abs=1e-10)


def test_planned_shots_cover_true_value():
    rho = qubit_from_bloch(BlochVector(0.6, 0.0, 0.3))
    label = PauliLabel((1,), (0,))
    true_csq = 0.36
    plan = plan_shots(0.1, 0.1, K2_P_CONF)
    dist = two_copy(rho)
    trials = 200
    hits = 0
    for seed in range(trials):
        estimate = estimate_csq(sample_outcomes(dist, plan.shots, seed), label)
        hits += abs(estimate.value - true_csq) <= plan.k * estimate.std_error
    p = plan.p_conf
    assert hits / trials >= p - 3 * math.sqrt(p * (1 - p) / trials)


# --- selectors and coarse parities ---
def test_selector_values_must_be_signs():
    with pytest.raises(ArgumentError):
        PairSelector.from_tables([[[1, 0], [1, 1]]])
    with pytest.raises(ArgumentError):
        PairSelector.from_tables([[1, 1]])


def test_singlet_parity_of_pure_and_mixed(ghz_rho3, maximally_mixed):
    singlet = PairSelector.single_bell(3, 1, 1)
    assert coarse_parity(two_copy(ghz_rho3), singlet).value == pytest.approx(1.0, abs=1e-12)
    assert coarse_parity(two_copy(maximally_mixed(3)), singlet).value == pytest.approx(1 / 8, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_swap_identity(n):
    for seed in range(5):
        rho = random_state(n, 2, seed=seed)
        parity = coarse_parity(two_copy(rho), PairSelector.single_bell(n, 1, 1)).value
        assert parity == pytest.approx(state_purity(rho), abs=1e-10)
        assert swap_purity(rho) == pytest.approx(state_purity(rho), abs=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_sign_formula_matches_per_pair_sums(n):
    for m in (0, 1):
        for n_bit in (0, 1):
            weights = selector_weights(PairSelector.single_bell(n, m, n_bit))
            np.testing.assert_allclose(weights, bell_sign_vector(m, n_bit, n) / 2 ** n, atol=1e-12)


def test_bell_selector_parity_matches_sign_formula(mixed_rho2):
    dist = two_copy(mixed_rho2)
    csq = pauli_decompose(mixed_rho2).squares()
    for m in (0, 1):
        for n_bit in (0, 1):
            parity = coarse_parity(dist, PairSelector.single_bell(2, m, n_bit)).value
            expected = np.dot(bell_sign_vector(m, n_bit, 2), csq) / 4
            assert parity == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_sign_vector_structure(n):
    assert np.all(bell_sign_vector(1, 1, n) == 1)
    for m, n_bit in [(0, 0), (0, 1), (1, 0)]:
        assert np.sum(bell_sign_vector(m, n_bit, n) == 1) == 4 ** n // 2


def test_grouped_selector_weights(mixed_rho2):
    selector = PairSelector.from_groups([{(0, 1), (1, 1)}, {(1, 0)}])
    csq = pauli_decompose(mixed_rho2).squares()
    parity = coarse_parity(two_copy(mixed_rho2), selector).value
    assert parity == pytest.approx(np.dot(selector_weights(selector), csq), abs=1e-10)


# --- purity ---
def test_full_mask_purity_of_pure_state(ghz_rho3):
    assert purity(two_copy(ghz_rho3), "111").value == pytest.approx(1.0, abs=1e-12)


def test_bell_marginal_purity(bell_rho):
    assert purity(two_copy(bell_rho), "10").value == pytest.approx(0.5, abs=1e-12)


def test_masked_purity_matches_partial_trace(mixed_rho3):
    dist = two_copy(mixed_rho3)
    for mask in marginal_masks(3):
        expected = state_purity(partial_trace(mixed_rho3, mask))
        assert purity(dist, mask).value == pytest.approx(expected, abs=1e-10)


def test_product_marginal_purity_exact_and_sampled():
    rho_1, rho_2 = random_state(1, 2, seed=21), random_state(1, 2, seed=22)
    dist = two_copy(tensor(rho_1, rho_2))
    assert purity(dist, "10").value == pytest.approx(state_purity(rho_1), abs=1e-10)
    sampled = purity(sample_outcomes(dist, 10 ** 5, seed=7), "10")
    assert abs(sampled.value - state_purity(rho_1)) <= 5 * sampled.std_error


def test_empty_purity_mask(mixed_rho2):
    with pytest.raises(ArgumentError):
        purity(two_copy(mixed_rho2), "00")


# --- p_all ---
@pytest.mark.parametrize("n", [1, 2, 3])
def test_all_orthogonal_formula(n):
    rho = random_state(n, 2, seed=30 + n)
    dist = two_copy(rho)
    csq = pauli_decompose(rho).squares()
    for m in (0, 1):
        for n_bit in (0, 1):
            expected = np.dot(all_orthogonal_weights(m, n_bit, n), csq) / 4 ** n
            assert p_all(dist, m, n_bit).value == pytest.approx(expected, abs=1e-10)


def test_single_pair_p_all_is_complement(mixed_rho2):
    rho = random_state(1, 2, seed=3)
    dist = two_copy(rho)
    assert p_all(dist, 1, 1).value == pytest.approx(1 - dist.prob[3], abs=1e-12)


@pytest.mark.parametrize("m, n_bit", [(-1, -1), (2, 0), (0, 2)])
def test_bell_indices_must_be_bits(mixed_rho2, m, n_bit):
    dist = two_copy(mixed_rho2)
    with pytest.raises(ArgumentError):
        p_all(dist, m, n_bit)
    with pytest.raises(ArgumentError):
        PairSelector.single_bell(2, m, n_bit)
    with pytest.raises(ArgumentError):
        all_orthogonal_weights(m, n_bit, 2)
    with pytest.raises(ArgumentError):
        bell_sign_vector(m, n_bit, 2)


def test_grouped_selector_rejects_non_bit_outcomes():
    with pytest.raises(ArgumentError):
        PairSelector.from_groups([{(1, 2)}])


def test_pure_product_p_all_is_one():
    for seed in range(3):
        assert p_all(two_copy(random_pure_product(3, seed)), 1, 1).value == pytest.approx(1.0, abs=1e-10)


def test_masked_p_all_matches_marginal_and_formula(mixed_rho3):
    dist = two_copy(mixed_rho3)
    csq = pauli_decompose(mixed_rho3).squares()
    for mask in marginal_masks(3):
        marginal = partial_trace(mixed_rho3, mask)
        value = p_all(dist, 0, 1, mask).value
        assert value == pytest.approx(p_all(two_copy(marginal), 0, 1).value, abs=1e-10)
        assert value == pytest.approx(np.dot(all_orthogonal_weights(0, 1, 3, mask), csq) / 64, abs=1e-10)


# --- concurrence ---
def test_concurrence_reference_values(bell_rho, ghz_rho3):
    assert concurrence_pure(two_copy(bell_rho)).value == pytest.approx(1.0, abs=1e-8)
    assert concurrence_pure(two_copy(ghz_rho3)).value == pytest.approx(math.sqrt(1.5), abs=1e-8)
    assert concurrence_direct(bell_rho) == pytest.approx(1.0, abs=1e-10)
    assert concurrence_direct(ghz_rho3) == pytest.approx(math.sqrt(1.5), abs=1e-10)


def test_concurrence_of_product_states():
    for n in (2, 3, 4):
        rho = random_pure_product(n, seed=n)
        assert concurrence_pure(two_copy(rho)).value == pytest.approx(0.0, abs=1e-6)
        assert concurrence_direct(rho) == pytest.approx(0.0, abs=1e-7)


def test_exact_concurrence_has_no_error(bell_rho):
    estimate = concurrence_pure(two_copy(bell_rho))
    assert estimate.std_error == 0.0
    assert estimate.extras["p_all"] == pytest.approx(0.75)


def test_sampled_concurrence_within_propagated_error(ghz_rho3):
    estimate = concurrence_pure(sample_outcomes(two_copy(ghz_rho3), 10 ** 5, seed=17))
    assert abs(estimate.value - math.sqrt(1.5)) <= 5 * estimate.std_error


def test_sampled_product_state_flags_branch_point():
    rho = product_zero_state(2)
    estimate = concurrence_pure(sample_outcomes(two_copy(rho), 1000, seed=1))
    assert estimate.value == 0.0
    assert math.isinf(estimate.std_error)
    assert FLAG_NEAR_BRANCH in estimate.flags


def test_concurrence_direct_preconditions(mixed_rho2):
    with pytest.raises(PreconditionError):
        concurrence_direct(mixed_rho2)
    with pytest.raises(ArgumentError):
        concurrence_direct(product_zero_state(1))


# --- raw correlator ---
def test_correlator_on_different_states(mixed_rho2):
    other = random_state(2, 1, seed=77)
    dist = exact_distribution(mixed_rho2, other)
    c_a, c_b = pauli_decompose(mixed_rho2), pauli_decompose(other)
    for label in all_labels(2):
        assert estimate_correlator(dist, label).value == pytest.approx(c_a[label] * c_b[label], abs=1e-10)
