import numpy as np
import pytest
from scipy.linalg import expm

from pepsdual.cooling import (
    CoolingSchedule,
    LocalHamiltonian,
    contract_cooling,
    convergence_report,
    cooling_network,
    exact_evolve,
    exact_ground_state,
    fidelity,
    format_hamiltonian,
    haar_product_state,
    imaginary_time_evolve,
    parse_hamiltonian,
    plus_state,
    tfi,
    trotter_evolve,
)
from pepsdual.errors import DegenerateGroundState, ParseError, ZeroNormError
from pepsdual.oracles import dense_hamiltonian, ground_state_by_power
from pepsdual.peps import random_hermitian

SZ = np.diag([1.0, -1.0])
DIAG01 = np.diag([0.0, 1.0])


def qubit(m):
    return LocalHamiltonian(1, (((0,), np.asarray(m, dtype=complex)),))


def random_chain(rng, n=3):
    terms = [((i, i + 1), random_hermitian(rng, 4)) for i in range(n - 1)]
    terms += [((i,), random_hermitian(rng, 2)) for i in range(n)]
    return LocalHamiltonian(n, tuple(terms))


# --- exact diagonalization ---------------------------------------------------


def test_ground_state_of_diag01():
    e, psi, gap = exact_ground_state(qubit(DIAG01))
    assert e == pytest.approx(0, abs=1e-14) and gap == pytest.approx(1)
    np.testing.assert_allclose(psi, [1, 0], atol=1e-14)


def test_ground_state_with_symmetry_breaking_field():
    zz = -np.kron(SZ, SZ)
    h = LocalHamiltonian(2, (((0, 1), zz), ((0,), -0.1 * SZ), ((1,), -0.1 * SZ)))
    _, psi, _ = exact_ground_state(h)
    assert abs(psi[0]) == pytest.approx(1, abs=1e-12)


def test_tfi_ground_energy_cross_check():
    h = tfi(6, 2.0)
    e, _, gap = exact_ground_state(h)
    dense = dense_hamiltonian(h)
    np.testing.assert_allclose(dense, h.dense(), atol=1e-12)
    assert gap > 0
    assert e == pytest.approx(ground_state_by_power(dense), abs=1e-9)


def test_degenerate_ground_state_flagged():
    with pytest.raises(DegenerateGroundState):
        exact_ground_state(LocalHamiltonian(2, (((0, 1), -np.kron(SZ, SZ)),)))


# --- imaginary-time evolution -----------------------------------------------


def test_closed_form_single_qubit():
    beta = 5.0
    psi = imaginary_time_evolve(qubit(DIAG01), CoolingSchedule(beta, 1000), plus_state(1))
    assert fidelity(psi, [1, 0]) == pytest.approx(1 / np.sqrt(1 + np.exp(-2 * beta)), abs=1e-6)


def test_beta_zero_returns_chi(rng):
    chi = haar_product_state(4, rng)
    h = tfi(4, 1.0)
    np.testing.assert_array_equal(imaginary_time_evolve(h, CoolingSchedule(0.0, 3), chi), chi)
    net = contract_cooling(cooling_network(h, CoolingSchedule(0.0, 3), chi))
    np.testing.assert_allclose(net, chi, atol=1e-15)


def test_tfi8_reaches_ground_state():
    h = tfi(8, 2.0)
    _, gs, _ = exact_ground_state(h)
    psi = imaginary_time_evolve(h, CoolingSchedule(6.0, 200, "second"))
    assert fidelity(psi, gs) >= 0.999


def test_vanishing_norm():
    h = qubit(np.diag([0.0, 1e6]))
    with pytest.raises(ZeroNormError):
        imaginary_time_evolve(h, CoolingSchedule(1.0, 1), np.array([0, 1], dtype=complex))


def test_energy_monotone_along_exact_flow(rng):
    h = random_chain(rng, 4)
    dense = h.dense()
    chi = haar_product_state(4, rng)
    energies = [np.vdot(p, dense @ p).real for p in (exact_evolve(h, b, chi) for b in np.linspace(0, 4, 21))]
    assert all(b <= a + 1e-10 for a, b in zip(energies, energies[1:]))


@pytest.mark.parametrize("order,lo,hi", [("first", 1.7, 2.3), ("second", 3.4, 4.6)])
@pytest.mark.parametrize("seed", range(3))
def test_trotter_error_order(order, lo, hi, seed):
    rng = np.random.default_rng(seed)
    h = random_chain(rng, 3)
    chi = haar_product_state(3, rng)
    beta = 0.5
    exact = exact_evolve(h, beta, chi)
    err = [np.linalg.norm(imaginary_time_evolve(h, CoolingSchedule(beta, m, order), chi) - exact) for m in (40, 80)]
    assert lo <= err[0] / err[1] <= hi


# --- cooling network --------------------------------------------------------


def test_network_single_term_single_step(rng):
    m = random_hermitian(rng, 4)
    h = LocalHamiltonian(2, (((0, 1), m),))
    chi = haar_product_state(2, rng)
    out = contract_cooling(cooling_network(h, CoolingSchedule(0.3, 1), chi))
    np.testing.assert_allclose(out, expm(-0.3 * m) @ chi, atol=1e-10)


def test_network_zero_hamiltonian_keeps_chi(rng):
    z = np.zeros((4, 4), dtype=complex)
    h = LocalHamiltonian(3, (((0, 1), z), ((1, 2), z)))
    chi = haar_product_state(3, rng)
    for beta in (0.5, 3.0):
        out = contract_cooling(cooling_network(h, CoolingSchedule(beta, 4, "second"), chi))
        np.testing.assert_allclose(out, chi, atol=1e-12)


@pytest.mark.parametrize("order", ["first", "second"])
def test_network_matches_dense(rng, order):
    h = random_chain(rng, 4)
    chi = haar_product_state(4, rng)
    sched = CoolingSchedule(1.2, 7, order)
    net = contract_cooling(cooling_network(h, sched, chi))
    dense, log_scale = trotter_evolve(h, sched, chi)
    ref = dense * np.exp(log_scale)
    assert np.linalg.norm(net - ref) <= 1e-8 * np.linalg.norm(ref)


def test_network_tfi6_fidelity():
    h = tfi(6, 2.0)
    _, gs, _ = exact_ground_state(h)
    out = contract_cooling(cooling_network(h, CoolingSchedule(4.0, 100, "second")))
    assert fidelity(out / np.linalg.norm(out), gs) >= 0.995


def test_network_rejects_non_chain():
    h = LocalHamiltonian(3, (((0, 2), np.eye(4)),))
    with pytest.raises(ValueError):
        cooling_network(h, CoolingSchedule(1.0, 1))


def test_network_needs_product_state(rng):
    with pytest.raises(ValueError):
        cooling_network(tfi(2, 1.0), CoolingSchedule(1.0, 1), np.array([1, 0, 0, 1]) / np.sqrt(2))


# --- convergence report -----------------------------------------------------


def test_report_closed_form():
    betas = np.linspace(0.5, 6, 12)
    rep = convergence_report(qubit(DIAG01), betas, chi=plus_state(1))
    want = np.exp(-2 * betas) / (1 + np.exp(-2 * betas))
    np.testing.assert_allclose([r.fidelity_error for r in rep.rows], want, rtol=1e-10)
    assert rep.slope == pytest.approx(-2, rel=0.02)


def test_report_tfi6_slope():
    rep = convergence_report(tfi(6, 2.0), np.linspace(0.5, 8, 16))
    assert rep.slope == pytest.approx(rep.predicted_slope, rel=0.2)


def test_report_single_beta():
    rep = convergence_report(tfi(4, 2.0), [1.0], m_per_beta=10)
    assert len(rep.rows) == 1 and rep.slope is None
    assert rep.rows[0].steps == 10


# --- file format ------------------------------------------------------------


def test_hamiltonian_round_trip(rng):
    h = random_chain(rng, 3)
    back = parse_hamiltonian(format_hamiltonian(h))
    np.testing.assert_array_equal(back.dense(), h.dense())
    np.testing.assert_array_equal(parse_hamiltonian("tfi 5 2.0 1.0").dense(), tfi(5, 2.0).dense())
    for bad in ("", "sites 2 dim 2\nterm 0 1 2", "bogus"):
        with pytest.raises(ParseError):
            parse_hamiltonian(bad)
