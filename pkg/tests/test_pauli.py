import numpy as np
import pytest

from src.config import get_settings
from src.errors import ArgumentError, ResourceLimitError
from src.quantum.pauli import (
    PauliLabel,
    all_labels,
    as_bits,
    check_qubit_count,
    hadamard_transform,
    label_phase_signs,
    label_weight_profiles,
    pauli_matrix,
    weight_profile,
)

# --- PauliLabel ---
def test_label_text_form():
    label = PauliLabel.parse("q=110,p=011")
    assert label.q == (1, 1, 0)
    assert label.p == (0, 1, 1)
    assert str(label) == "q=110,p=011"
    assert label.qp == 1


def test_label_index_is_q_then_p():
    label = PauliLabel((1, 0), (0, 1))
    assert label.index == (0b10 << 2) | 0b01
    assert PauliLabel.from_index(label.index, 2) == label


def test_all_labels_are_enumerated_in_flat_order():
    labels = list(all_labels(2))
    assert len(labels) == 16
    assert [label.index for label in labels] == list(range(16))
    assert labels[0].is_identity


@pytest.mark.parametrize("text", ["q=11,p=0", "q=12,p=01", "x=1,p=1", ""])
def test_label_parse_rejects_malformed(text):
    with pytest.raises(ArgumentError):
        PauliLabel.parse(text)


def test_as_bits_rejects_non_binary():
    with pytest.raises(ArgumentError):
        as_bits([0, 2])
    with pytest.raises(ArgumentError):
        as_bits("101", 2)


# --- operators ---
def test_single_qubit_operators():
    y = np.array([[0, -1j], [1j, 0]])
    np.testing.assert_allclose(pauli_matrix(PauliLabel((0,), (0,))), np.eye(2))
    np.testing.assert_allclose(pauli_matrix(PauliLabel((1,), (0,))), [[0, 1], [1, 0]])
    np.testing.assert_allclose(pauli_matrix(PauliLabel((0,), (1,))), [[1, 0], [0, -1]])
    np.testing.assert_allclose(pauli_matrix(PauliLabel((1,), (1,))), y)


def test_operators_are_hermitian_unitary_and_orthogonal():
    mats = [pauli_matrix(label) for label in all_labels(2)]
    for m in mats:
        np.testing.assert_allclose(m, m.conj().T, atol=1e-15)
        np.testing.assert_allclose(m @ m, np.eye(4), atol=1e-15)
    gram = np.array([[np.trace(a @ b) for b in mats] for a in mats])
    np.testing.assert_allclose(gram, 4 * np.eye(16), atol=1e-12)


def test_weight_profile_counts_each_factor():
    profile = weight_profile(PauliLabel.parse("q=1100,p=0110"))
    # factors X, Y, Z, I
    assert profile == (1, 1, 1, 1)


def test_vectorized_profiles_match_per_label():
    alpha_0, alpha_x, alpha_y, alpha_z = label_weight_profiles(3)
    for label in all_labels(3):
        assert weight_profile(label) == (
            alpha_0[label.index], alpha_x[label.index], alpha_y[label.index], alpha_z[label.index]
        )


def test_masked_profiles_ignore_unselected_qubits():
    alpha_0, alpha_x, _, _ = label_weight_profiles(2, keep="10")
    label = PauliLabel.parse("q=01,p=00")
    assert alpha_0[label.index] == 1
    assert alpha_x[label.index] == 0


def test_phase_signs_single_qubit():
    np.testing.assert_array_equal(label_phase_signs(1), [1, 1, 1, -1])


# --- hadamard_transform ---
def test_hadamard_of_delta_is_all_ones():
    np.testing.assert_allclose(hadamard_transform([1, 0, 0, 0]), np.ones(4))


def test_hadamard_applied_twice_scales_by_length(rng):
    vec = rng.standard_normal(16)
    np.testing.assert_allclose(hadamard_transform(hadamard_transform(vec)), 16 * vec, atol=1e-12)


def test_hadamard_rejects_non_power_of_two():
    with pytest.raises(ArgumentError):
        hadamard_transform(np.ones(3))


# --- qubit cap ---
def test_check_qubit_count_bounds():
    assert check_qubit_count(6) == 6
    with pytest.raises(ArgumentError):
        check_qubit_count(0)
    with pytest.raises(ResourceLimitError):
        check_qubit_count(7)


def test_cap_can_be_lowered_from_environment(monkeypatch):
    monkeypatch.setenv("TWOCOPY_MAX_QUBITS", "3")
    get_settings.cache_clear()
    assert check_qubit_count(3) == 3
    with pytest.raises(ResourceLimitError):
        pauli_matrix(PauliLabel.identity(4))
