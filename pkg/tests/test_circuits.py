import itertools

import numpy as np
import pytest

from pepsdual.circuits import (
    CNF,
    Gate,
    PostselectedCircuit,
    amplitude,
    brute_force_count,
    cnf_oracle_circuit,
    cnot,
    evolve,
    format_circuit,
    format_dimacs,
    h,
    marginal_expectation,
    mcx_borrowed,
    mcx_clean,
    parse_circuit,
    parse_dimacs,
    project,
    simulate,
    unitary,
    x,
)
from pepsdual.errors import InvalidPostselection, ParseError
from pepsdual.samples import random_3cnf, random_circuit

SZ = np.diag([1.0, -1.0])


def test_h_then_postselect_zero():
    state, p = simulate(PostselectedCircuit(1, (h(0),), ((0, 0),)))
    np.testing.assert_allclose(state, [1, 0], atol=1e-15)
    assert abs(p - 0.5) <= 1e-15


def test_x_then_postselect_zero_is_invalid():
    with pytest.raises(InvalidPostselection):
        simulate(PostselectedCircuit(1, (x(0),), ((0, 0),)))


def test_bell_branch():
    state, p = simulate(PostselectedCircuit(2, (h(0), cnot(0, 1)), ((0, 0),)))
    np.testing.assert_allclose(state, [1, 0, 0, 0], atol=1e-15)
    assert abs(p - 0.5) <= 1e-15


def test_amplitude_examples():
    assert amplitude(PostselectedCircuit(3), "000") == 1
    assert abs(amplitude(PostselectedCircuit(1, (h(0),)), "1") - 2**-0.5) <= 1e-15


def test_gate_action_matches_permuted_matrix(rng):
    c = random_circuit(rng, 4, 10, 0)
    psi = np.zeros(16, dtype=complex)
    psi[0] = 1
    for g in c.gates:
        # permute the gate's targets to the front, apply, permute back
        rest = [q for q in range(4) if q not in g.targets]
        perm = list(g.targets) + rest
        t = psi.reshape((2,) * 4).transpose(perm).reshape(2 ** len(g.targets), -1)
        t = (g.unitary() @ t).reshape((2,) * 4)
        psi = t.transpose(np.argsort(perm)).reshape(-1)
    np.testing.assert_allclose(evolve(c), psi, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_unitarity_and_completeness(seed):
    c = random_circuit(np.random.default_rng(seed), 4, 10, 0)
    assert abs(np.linalg.norm(evolve(c)) - 1) <= 1e-12
    total = sum(abs(amplitude(c, i)) ** 2 for i in range(16))
    assert abs(total - 1) <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_success_probability_composition(seed):
    rng = np.random.default_rng(seed)
    c = random_circuit(rng, 3, 8, 0)
    probs = np.abs(evolve(c).reshape(2, 2, 2)) ** 2
    a, _, b = np.unravel_index(np.argmax(probs), probs.shape)  # a branch of nonzero weight
    posts = ((0, int(a)), (2, int(b)))
    raw = project(evolve(c), 3, posts)
    _, p_fwd = simulate(c.with_gates(c.gates, postselections=posts))
    _, p_rev = simulate(c.with_gates(c.gates, postselections=posts[::-1]))
    assert abs(p_fwd - np.vdot(raw, raw).real) <= 1e-12
    assert abs(p_fwd - p_rev) <= 1e-12


def test_projector_idempotent(rng):
    c = random_circuit(rng, 3, 6, 0)
    once = project(evolve(c), 3, ((1, 0),))
    np.testing.assert_array_equal(project(once, 3, ((1, 0),)), once)


def test_circuit_validation():
    with pytest.raises(ValueError):
        PostselectedCircuit(2, (cnot(0, 2),))
    with pytest.raises(ValueError):
        PostselectedCircuit(2, (), ((0, 0), (0, 1)))
    with pytest.raises(ValueError):
        Gate("CNOT", (1, 1))
    with pytest.raises(ValueError):
        unitary([0], np.array([[1, 1], [0, 1]]))


# --- multi-controlled X -----------------------------------------------------


def _truth_table(gates, n, k, target):
    for bits in itertools.product((0, 1), repeat=n):
        out = evolve(PostselectedCircuit(n, (), ()).with_gates(_prep(bits) + gates))
        want = list(bits)
        want[target] ^= int(all(bits[:k]))
        assert abs(out[int("".join(map(str, want)), 2)] - 1) <= 1e-12


def _prep(bits):
    return [x(q) for q, b in enumerate(bits) if b]


@pytest.mark.parametrize("k", [0, 1, 2, 3, 4])
def test_mcx_borrowed_truth_table(k):
    n = 2 * k if k >= 3 else k + 1
    target = k
    borrowed = list(range(k + 1, n))
    _truth_table(mcx_borrowed(list(range(k)), target, borrowed), n, k, target)


def test_mcx_clean_truth_table():
    k = 4
    gates = mcx_clean(list(range(k)), k, [5, 6])
    for bits in itertools.product((0, 1), repeat=k + 1):
        full = list(bits) + [0, 0]
        out = evolve(PostselectedCircuit(7).with_gates(_prep(full) + gates))
        want = full.copy()
        want[k] ^= int(all(bits[:k]))
        assert abs(out[int("".join(map(str, want)), 2)] - 1) <= 1e-12


# --- CNF oracle -------------------------------------------------------------


def _oracle_table(f):
    c = cnf_oracle_circuit(f)
    psi = evolve(c).reshape((2,) * c.n_qubits)
    n = f.n_vars
    scale = 2 ** (-n / 2)
    for bits in itertools.product((0, 1), repeat=n):
        idx = list(bits) + [int(f.evaluate(bits))] + [0] * (c.n_qubits - n - 1)
        assert abs(psi[tuple(idx)] - scale) <= 1e-12
    return c


def test_oracle_true_formula():
    c = _oracle_table(CNF(3, ()))
    state = evolve(c)
    assert abs(marginal_expectation(state, c.n_qubits, c.meta["output_qubit"], SZ) + 1) <= 1e-12


def test_oracle_single_literal():
    c = _oracle_table(CNF(2, ((1,),)))
    assert abs(marginal_expectation(evolve(c), c.n_qubits, c.meta["output_qubit"], SZ)) <= 1e-12


@pytest.mark.parametrize("seed", range(8))
def test_oracle_random_3cnf(seed):
    rng = np.random.default_rng(seed)
    _oracle_table(random_3cnf(rng, int(rng.integers(2, 7))))


def test_oracle_wide_clause_and_tautology():
    _oracle_table(CNF(5, ((1, -2, 3, 4, -5), (2, -2), (1,))))


def test_brute_force_count():
    assert brute_force_count(CNF(3, ((1,), (-1,)))) == 0
    assert brute_force_count(CNF(3, ())) == 8
    assert brute_force_count(CNF(3, ((1, 2),))) == 6


# --- file formats -----------------------------------------------------------


def test_circuit_round_trip(rng):
    c = random_circuit(rng, 3, 8, 2)
    back, header = parse_circuit(format_circuit(c, ["scale 2"]))
    assert header == {"scale": "2"}
    assert back.postselections == c.postselections
    np.testing.assert_array_equal(evolve(back), evolve(c))


def test_parse_circuit_rejects_gate_after_postselect():
    with pytest.raises(ParseError):
        parse_circuit("qubits 1\npost 0 0\nh 0\n")
    with pytest.raises(ParseError):
        parse_circuit("h 0\n")
    with pytest.raises(ParseError):
        parse_circuit("qubits 1\nfoo 0\n")


def test_mid_circuit_postselect_commutes():
    c, _ = parse_circuit("qubits 2\nh 0\npost 0 0\nh 1\n")
    assert c.postselections == ((0, 0),)


def test_dimacs_round_trip(rng):
    f = random_3cnf(rng, 6)
    assert parse_dimacs(format_dimacs(f)) == f
    with pytest.raises(ParseError):
        parse_dimacs("1 2 0\n")


def test_untouched_qubits_stay_zero():
    out = evolve(PostselectedCircuit(4, (x(2), h(0), cnot(0, 1))))
    want = np.zeros(16, dtype=complex)
    want[0b0010] = want[0b1110] = 2**-0.5
    np.testing.assert_allclose(out, want, atol=1e-15)
