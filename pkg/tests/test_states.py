import numpy as np
import pytest

from src.errors import ArgumentError, InvalidBlochError, InvalidStateError, NonPhysicalCoefficientsError
from src.quantum.pauli import PauliLabel, all_labels, pauli_matrix
from src.quantum.states import (
    BlochVector,
    DensityMatrix,
    PauliCoefficients,
    bell_pairs_state,
    ghz_state,
    marginal_masks,
    named_state,
    partial_trace,
    pauli_decompose,
    product_zero_state,
    pure_state,
    purity,
    qubit_from_bloch,
    random_state,
    reconstruct,
    tensor,
)

# --- pauli_decompose / reconstruct ---
def test_decompose_matches_trace_definition(mixed_rho2):
    coeffs = pauli_decompose(mixed_rho2)
    for label in all_labels(2):
        expected = np.trace(mixed_rho2.matrix @ pauli_matrix(label)).real
        assert coeffs[label] == pytest.approx(expected, abs=1e-12)
    assert coeffs.c[0] == pytest.approx(1.0)


def test_reconstruct_inverts_decompose(mixed_rho3):
    rebuilt = reconstruct(pauli_decompose(mixed_rho3))
    np.testing.assert_allclose(rebuilt.matrix, mixed_rho3.matrix, atol=1e-12)


def test_zero_state_coefficients():
    coeffs = pauli_decompose(product_zero_state(1))
    assert coeffs[PauliLabel((0,), (1,))] == pytest.approx(1.0)
    assert coeffs[PauliLabel((1,), (0,))] == pytest.approx(0.0)


def test_decompose_rejects_non_hermitian_input():
    with pytest.raises(InvalidStateError):
        pauli_decompose(DensityMatrix(1, [[1, 1], [0, 0]]))


def test_reconstruct_requires_unit_identity_coefficient():
    with pytest.raises(ArgumentError):
        reconstruct(PauliCoefficients(1, [0.5, 0, 0, 0]))


def test_reconstruct_rejects_non_physical_coefficients():
    with pytest.raises(NonPhysicalCoefficientsError):
        reconstruct(PauliCoefficients(1, [1.0, 1.0, 1.0, 0.0]))


# --- Bloch vectors ---
def test_bloch_north_pole_is_zero_state():
    rho = qubit_from_bloch(BlochVector(0, 0, 1))
    np.testing.assert_allclose(rho.matrix, [[1, 0], [0, 0]], atol=1e-15)


def test_bloch_vector_recovered_from_state():
    rho = qubit_from_bloch(BlochVector(0.3, -0.2, 0.5))
    p = BlochVector.from_state(rho)
    np.testing.assert_allclose(p.as_array(), [0.3, -0.2, 0.5], atol=1e-12)


def test_bloch_vector_outside_ball_rejected():
    with pytest.raises(InvalidBlochError):
        qubit_from_bloch(BlochVector(0.8, 0.8, 0))


# --- random_state ---
def test_random_state_is_valid_and_seeded():
    rho = random_state(2, 2, seed=5)
    assert np.trace(rho.matrix).real == pytest.approx(1.0)
    assert rho.min_eigenvalue() > -1e-12
    np.testing.assert_array_equal(rho.matrix, random_state(2, 2, seed=5).matrix)
    assert not np.allclose(rho.matrix, random_state(2, 2, seed=6).matrix)


def test_rank_one_random_state_is_pure():
    assert purity(random_state(3, 1, seed=9)) == pytest.approx(1.0)


@pytest.mark.parametrize("rank", [0, 5])
def test_random_state_rank_bounds(rank):
    with pytest.raises(ArgumentError):
        random_state(2, rank, seed=1)


# --- partial_trace / purity ---
def test_bell_marginal_is_maximally_mixed(bell_rho):
    np.testing.assert_allclose(partial_trace(bell_rho, "10").matrix, np.eye(2) / 2, atol=1e-15)
    np.testing.assert_allclose(partial_trace(bell_rho, "01").matrix, np.eye(2) / 2, atol=1e-15)


def test_partial_trace_of_product_returns_factor():
    a, b, c = random_state(1, 2, seed=1), random_state(1, 2, seed=2), random_state(1, 1, seed=3)
    rho = tensor(a, b, c)
    np.testing.assert_allclose(partial_trace(rho, "010").matrix, b.matrix, atol=1e-12)
    np.testing.assert_allclose(partial_trace(rho, "101").matrix, tensor(a, c).matrix, atol=1e-12)


def test_partial_trace_needs_a_kept_qubit(bell_rho):
    with pytest.raises(ArgumentError):
        partial_trace(bell_rho, "00")


def test_purity_of_maximally_mixed(maximally_mixed):
    assert purity(maximally_mixed(3)) == pytest.approx(1 / 8)


def test_marginal_masks_are_nontrivial():
    masks = marginal_masks(3)
    assert len(masks) == 6
    assert (0, 0, 0) not in masks and (1, 1, 1) not in masks


# --- named states ---
def test_named_states(ghz_rho3):
    assert purity(ghz_rho3) == pytest.approx(1.0)
    np.testing.assert_allclose(named_state("ghz", 3).matrix, ghz_rho3.matrix)
    assert named_state("product-zero", 2).matrix[0, 0] == pytest.approx(1.0)
    np.testing.assert_allclose(bell_pairs_state(2).matrix, pure_state([1, 0, 0, 1]).matrix)


def test_named_state_errors():
    with pytest.raises(ArgumentError):
        bell_pairs_state(3)
    with pytest.raises(ArgumentError):
        named_state("w", 3)


# --- validation and serialization ---
def test_validate_rejects_bad_matrices():
    with pytest.raises(InvalidStateError):
        DensityMatrix(1, [[0.5, 0.1], [0.2, 0.5]]).validate()
    with pytest.raises(InvalidStateError):
        DensityMatrix(1, np.eye(2)).validate()
    with pytest.raises(InvalidStateError):
        DensityMatrix(1, [[1.5, 0], [0, -0.5]]).validate()


def test_shape_mismatch_is_an_argument_error():
    with pytest.raises(ArgumentError):
        DensityMatrix(2, np.eye(2))


def test_state_document(mixed_rho2):
    restored = DensityMatrix.from_dict(mixed_rho2.to_dict())
    np.testing.assert_allclose(restored.matrix, mixed_rho2.matrix)


def test_malformed_state_document():
    with pytest.raises(InvalidStateError):
        DensityMatrix.from_dict({"matrix": []})
    with pytest.raises(InvalidStateError):
        DensityMatrix.from_dict({"n": 1, "matrix": [[1, 0, 0], [0, 0, 0]]})
    with pytest.raises(InvalidStateError):
        DensityMatrix.from_dict({"n": 2, "matrix": [[1, 0]]})
    with pytest.raises(InvalidStateError):
        DensityMatrix.from_dict({"n": 0, "matrix": [[1, 0]]})
    with pytest.raises(InvalidStateError):
        DensityMatrix.from_dict({"n": 1, "matrix": 5})
