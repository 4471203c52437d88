import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pepsdual.errors import ContractionTooLarge, NetworkError, OracleInconsistency
from pepsdual.oracles import naive_contract
from pepsdual.samples import random_grid_network, random_network
from pepsdual.tensornet import (
    Tensor,
    TensorNetwork,
    append_scalar,
    conjugate_network,
    contract_network,
    contract_pair,
    contraction_value,
    dumps_network,
    loads_network,
    loop_network,
    network_direct_sum,
    network_tensor_product,
    norm_oracle,
    phase_rotate,
    recover_complex_contraction,
    scalar_network,
)

from conftest import rel


def with_value(net, value):
    """Rescale one tensor so the network contracts to ``value``."""
    return phase_rotate(net, value / contraction_value(net))


# --- validation -------------------------------------------------------------


def test_tensor_rejects_non_finite():
    with pytest.raises(NetworkError):
        Tensor("a", np.array([1.0, np.nan]))


def test_bond_dimension_mismatch():
    with pytest.raises(NetworkError):
        TensorNetwork((Tensor("a", np.ones(2)), Tensor("b", np.ones(3))), (("a", 0, "b", 0),))


def test_leg_must_be_bonded_or_open():
    with pytest.raises(NetworkError):
        TensorNetwork((Tensor("a", np.ones(2)),))


def test_leg_cannot_bond_to_itself():
    with pytest.raises(NetworkError):
        TensorNetwork((Tensor("a", np.ones((2, 2))),), (("a", 0, "a", 0), ("a", 1, "a", 1)))


def test_trace_edge_between_distinct_legs_is_allowed():
    assert contraction_value(loop_network([[1, 2], [3, 4]])) == 5


# --- contract_pair ----------------------------------------------------------


def test_contract_pair_dot_product():
    net = TensorNetwork((Tensor("u", np.array([1, 2])), Tensor("v", np.array([3, 4]))), (("u", 0, "v", 0),))
    out = contract_pair(net, "u", "v")
    assert len(out.tensors) == 1
    assert out.tensors[0].data == 11


def test_contract_pair_with_identity_returns_matrix(rng):
    m = rng.normal(size=(2, 3))
    net = TensorNetwork(
        (Tensor("m", m), Tensor("i", np.eye(3))),
        (("m", 1, "i", 0),),
        (("m", 0), ("i", 1)),
    )
    out = contract_pair(net, "m", "i")
    np.testing.assert_allclose(contract_network(out).data, m)


def test_contract_pair_two_shared_bonds(rng):
    a = rng.normal(size=(2, 2, 2)) + 1j * rng.normal(size=(2, 2, 2))
    b = rng.normal(size=(2, 2, 2)) + 1j * rng.normal(size=(2, 2, 2))
    net = TensorNetwork(
        (Tensor("a", a), Tensor("b", b)),
        (("a", 1, "b", 0), ("a", 2, "b", 1)),
        (("a", 0), ("b", 2)),
    )
    expect = sum(a[:, i, j][:, None] * b[i, j, :][None, :] for i in range(2) for j in range(2))
    np.testing.assert_allclose(contract_network(contract_pair(net, "a", "b")).data, expect, atol=1e-12)


def test_contract_pair_unknown_id():
    with pytest.raises(NetworkError):
        contract_pair(loop_network(np.eye(2)), "m", "nope")


# --- contract_network -------------------------------------------------------


def test_scalar_and_trace():
    assert contraction_value(scalar_network(3)) == 3
    assert contraction_value(loop_network(np.eye(2))) == 2


def test_grid_3x3_matches_naive_oracle(rng):
    net = random_grid_network(rng, 3, 3, 2)
    assert rel(contraction_value(net), complex(naive_contract(net))) <= 1e-10


@pytest.mark.parametrize("seed", range(10))
def test_open_network_matches_naive_oracle(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, int(rng.integers(1, 7)), traces=int(rng.integers(0, 2)), open_legs=2)
    got = contract_network(net).data
    want = naive_contract(net)
    np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-10 * np.abs(want).max())


@pytest.mark.parametrize("seed", range(10))
def test_order_independence(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, int(rng.integers(2, 9)), extra_bonds=3, traces=1)
    ref = contraction_value(net)
    for _ in range(5):
        order = rng.permutation(len(net.bonds))
        assert rel(contraction_value(net, order), ref) <= 1e-10


def test_invalid_order():
    net = random_network(np.random.default_rng(0), 3)
    with pytest.raises(NetworkError):
        contract_network(net, order=[0, 0])


def test_size_cap():
    net = random_grid_network(np.random.default_rng(0), 3, 3, 3)
    with pytest.raises(ContractionTooLarge):
        contract_network(net, cap=8)


# --- composition ------------------------------------------------------------


def test_tensor_product_scalars():
    assert contraction_value(network_tensor_product(scalar_network(2), scalar_network(3))) == 6


def test_tensor_product_with_unit(rng):
    a = random_network(rng, 4)
    assert rel(contraction_value(network_tensor_product(a, scalar_network(1))), contraction_value(a)) <= 1e-12


def test_tensor_product_rejects_open_legs(rng):
    a = random_network(rng, 3, open_legs=1)
    with pytest.raises(NetworkError):
        network_tensor_product(a, scalar_network(1))


@pytest.mark.parametrize("seed", range(10))
def test_product_multiplicative_and_conjugate(seed):
    rng = np.random.default_rng(seed)
    a, b = random_network(rng, 3), random_network(rng, 4)
    ca, cb = contraction_value(a), contraction_value(b)
    assert rel(contraction_value(network_tensor_product(a, b)), ca * cb) <= 1e-10
    sq = contraction_value(network_tensor_product(a, conjugate_network(a)))
    assert abs(sq.imag) <= 1e-10 * abs(sq) and sq.real >= 0
    assert rel(sq, abs(ca) ** 2) <= 1e-10


def test_conjugate_examples(rng):
    real = random_grid_network(rng, 2, 2)
    real = TensorNetwork(tuple(t.with_data(t.data.real) for t in real.tensors), real.bonds)
    assert all(np.array_equal(s.data, t.data) for s, t in zip(real.tensors, conjugate_network(real).tensors))
    assert contraction_value(conjugate_network(scalar_network(1j))) == -1j
    a = random_network(rng, 5)
    assert abs(contraction_value(conjugate_network(a)) - np.conj(contraction_value(a))) <= 1e-12 * abs(
        contraction_value(a)
    )


def test_direct_sum_examples(rng):
    assert contraction_value(network_direct_sum(loop_network(np.eye(2)), loop_network(np.eye(2)))) == 4
    two, three = loop_network(np.diag([1.5, 0.5])), loop_network(np.diag([1.0, 2.0]))
    assert abs(contraction_value(network_direct_sum(two, three)) - 5) <= 1e-12
    a = random_network(rng, 4)
    assert rel(contraction_value(network_direct_sum(a, a)), 2 * contraction_value(a)) <= 1e-10


@pytest.mark.parametrize("seed", range(10))
def test_direct_sum_additive(seed):
    rng = np.random.default_rng(seed)
    a, b = random_network(rng, int(rng.integers(1, 6))), random_network(rng, int(rng.integers(1, 6)))
    ca, cb = contraction_value(a), contraction_value(b)
    assert abs(contraction_value(network_direct_sum(a, b)) - (ca + cb)) <= 1e-10 * (abs(ca) + abs(cb))


def test_direct_sum_rejects_bad_operands(rng):
    disconnected = network_tensor_product(scalar_network(1, "p"), scalar_network(2, "q"))
    with pytest.raises(NetworkError):
        network_direct_sum(disconnected, scalar_network(1))
    with pytest.raises(NetworkError):
        network_direct_sum(random_network(rng, 2, open_legs=1), scalar_network(1))


@pytest.mark.parametrize("value,c,expect", [(-1, 3, 2), (0, 1, 1), (5, 0.5, 5.5)])
def test_append_scalar(value, c, expect):
    net = with_value(random_network(np.random.default_rng(7), 3), value) if value else scalar_network(0)
    assert abs(contraction_value(append_scalar(net, c)) - expect) <= 1e-12


def test_append_scalar_rejects_nonpositive():
    with pytest.raises(NetworkError):
        append_scalar(scalar_network(1), 0)


# --- recovery from |C|^2 ----------------------------------------------------


@pytest.mark.parametrize("value", [5, -2, 3j, -1 - 2j, 0.25 + 1e-3j])
def test_recover_complex_contraction(value):
    net = with_value(random_network(np.random.default_rng(3), 4), value)
    assert abs(recover_complex_contraction(None, net) - value) <= 1e-8 * abs(value)


def test_recover_uses_only_the_oracle(rng):
    net = random_network(rng, 3)
    calls = []

    def oracle(t):
        calls.append(t)
        return norm_oracle(t)

    got = recover_complex_contraction(oracle, net)
    assert rel(got, contraction_value(net)) <= 1e-8
    assert len(calls) >= 3


def test_recover_flags_inconsistent_oracle(rng):
    with pytest.raises(OracleInconsistency):
        recover_complex_contraction(lambda t: -1.0, random_network(rng, 3))
    with pytest.raises(OracleInconsistency):
        recover_complex_contraction(lambda t: 1.0, random_network(rng, 3))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_recovery_property(seed, n):
    net = random_network(np.random.default_rng(seed), n)
    c = contraction_value(net)
    assert abs(recover_complex_contraction(None, net) - c) <= 1e-8 * abs(c)


# --- file format ------------------------------------------------------------


def test_round_trip_is_exact(rng):
    net = random_network(rng, 4, open_legs=1)
    back = loads_network(dumps_network(net))
    assert back.bonds == net.bonds and back.open_legs == net.open_legs
    assert all(np.array_equal(a.data, b.data) for a, b in zip(net.tensors, back.tensors))


def test_malformed_document():
    with pytest.raises(NetworkError):
        loads_network("{not json")
