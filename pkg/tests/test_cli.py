import json
import subprocess
import sys

import numpy as np
import pytest

from pepsdual import cli
from pepsdual.circuits import CNF, PostselectedCircuit, brute_force_count, format_circuit, format_dimacs, parse_circuit, simulate
from pepsdual.cooling import exact_ground_state, plus_state, tfi
from pepsdual.duality import CompiledCircuit, fidelity
from pepsdual.peps import PAULI, Observable, Peps, PepsGraph, dumps_peps, loads_peps, nev, norm_squared, peps_state, random_peps
from pepsdual.samples import random_3cnf, random_network
from pepsdual.tensornet import contraction_value, dumps_network, loop_network, scalar_network


def run(*argv):
    return cli.quiet_run([str(a) for a in argv])


@pytest.fixture
def bell_file(tmp_path):
    p = Peps(PepsGraph((0, 1), ((0, 1),), (2,), (2, 2)), (np.eye(2), np.eye(2)))
    path = tmp_path / "bell.json"
    path.write_text(dumps_peps(p))
    return path


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


# --- contract / norm / nev --------------------------------------------------


def test_contract_examples(tmp_path):
    assert run("contract", write(tmp_path, "s.json", dumps_network(scalar_network(3)))) == (0, "3 0\n")
    assert run("contract", write(tmp_path, "t.json", dumps_network(loop_network(np.eye(2))))) == (0, "2 0\n")


def test_contract_random_is_bit_identical(tmp_path, rng):
    net = random_network(rng, 5)
    code, out = run("contract", write(tmp_path, "r.json", dumps_network(net)))
    re, im = map(float, out.split())
    c = contraction_value(net)
    assert code == 0 and (re, im) == (c.real, c.imag)


def test_norm_and_nev_of_bell_pair(bell_file):
    assert run("norm", bell_file) == (0, "2\n")
    assert run("nev", bell_file, "--obs", "sz@0") == (0, "0\n")


def test_random_peps_matches_library(tmp_path, rng):
    p = random_peps(rng, 2, 2)
    path = write(tmp_path, "p.json", dumps_peps(p))
    _, out = run("norm", path)
    assert abs(float(out) - norm_squared(p)) <= 1e-12 * norm_squared(p)
    _, out = run("nev", path, "--obs", "sx@2")
    assert abs(float(out) - nev(p, Observable((2,), PAULI["sx"]))) <= 1e-12


def test_json_format(bell_file):
    code, out = run("norm", bell_file, "--format", "json")
    assert code == 0 and json.loads(out) == {"norm_squared": 2.0}


# --- compile ----------------------------------------------------------------


def test_p2c_bell_pair(tmp_path, bell_file):
    out_path = tmp_path / "bell.circ"
    code, _ = run("compile", "p2c", bell_file, "-o", out_path)
    assert code == 0
    c, header = parse_circuit(out_path.read_text())
    _, p = simulate(c)
    assert abs(float(header["scale"]) ** 2 * p - 2) <= 1e-10


def test_c2p_empty_circuit(tmp_path):
    src = write(tmp_path, "e.circ", format_circuit(PostselectedCircuit(1)))
    code, text = run("compile", "c2p", src)
    assert code == 0
    p, extras = loads_peps(text)
    assert extras["scale"] == 1 and extras["mode"] == "spacetime"
    np.testing.assert_allclose(peps_state(p), [1, 0], atol=1e-15)


def test_round_trip_p2c_c2p(tmp_path, rng):
    p = random_peps(rng, 1, 2)
    src = write(tmp_path, "p.json", dumps_peps(p))
    run("compile", "p2c", src, "-o", tmp_path / "p.circ")
    run("compile", "c2p", tmp_path / "p.circ", "-o", tmp_path / "back.json")
    back, extras = loads_peps((tmp_path / "back.json").read_text())
    c, header = parse_circuit((tmp_path / "p.circ").read_text())
    outq = {int(v): tuple(int(q) for q in qs.split(",")) for v, qs in (kv.split(":") for kv in header["output_qubits"].split(";"))}
    cc = CompiledCircuit(c, float(header["scale"]), outq, {0: 2, 1: 2})
    # the compiled PEPS has one output site per circuit qubit, in qubit order
    state = peps_state(back)
    assert len(extras["output_sites"]) == c.n_qubits
    assert fidelity(cc.peps_vector(state), peps_state(p)) >= 1 - 1e-9


# --- pathsum ----------------------------------------------------------------


def test_pathsum_output(tmp_path):
    src = write(tmp_path, "h.circ", "qubits 1\nh 0\nh 0\n")
    code, out = run("pathsum", src)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "qubits 1 hadamards 2"
    assert "0 plus 2 minus 0 p 1/2^0" in lines
    assert "1 plus 1 minus 1 p 0/2^0" in lines
    assert lines[-1].endswith("identity ok")


def test_pathsum_single_x(tmp_path):
    src = write(tmp_path, "h.circ", "qubits 2\nh 0\npost 1 0\n")
    code, out = run("pathsum", src, "--x", "10")
    assert code == 0 and "10 plus 1 minus 0 p 1/2^1" in out
    assert "norm 1/2^0" in out


def test_pathsum_rejects_non_th(tmp_path):
    src = write(tmp_path, "cz.circ", "qubits 2\ncz 0 1\n")
    assert run("pathsum", src)[0] == 2


# --- countsat / majority ----------------------------------------------------


def test_countsat_trivial_formulas(tmp_path):
    false = write(tmp_path, "f.cnf", format_dimacs(CNF(1, ((1,), (-1,)))))
    true = write(tmp_path, "t.cnf", "p cnf 3 0\n")
    assert run("countsat", false) == (0, "0\n")
    assert run("countsat", true) == (0, "8\n")
    assert run("majority", true) == (0, "yes\n")
    assert run("majority", false) == (0, "no\n")


@pytest.mark.parametrize("seed", range(3))
def test_countsat_random_n8(tmp_path, seed):
    f = random_3cnf(np.random.default_rng(seed), 8)
    path = write(tmp_path, "r.cnf", format_dimacs(f))
    truth = brute_force_count(f)
    assert run("countsat", path) == (0, f"{truth}\n")
    assert run("majority", path)[1] == ("yes\n" if 2 * truth >= 256 else "no\n")


def test_majority_tie(tmp_path):
    path = write(tmp_path, "tie.cnf", format_dimacs(CNF(5, ((1, 2), (-1, -2)))))
    assert run("countsat", path) == (0, "16\n")
    assert run("majority", path) == (0, "yes\n")


def test_countsat_residue_gate(tmp_path, monkeypatch):
    path = write(tmp_path, "t.cnf", "p cnf 2 1\n1 0\n")
    monkeypatch.setattr(cli.peps, "nev", lambda *a, **k: 0.3)
    assert run("countsat", path)[0] == 4


def test_countsat_variable_cap(tmp_path):
    path = write(tmp_path, "big.cnf", format_dimacs(CNF(11, ((1,),))))
    assert run("countsat", path)[0] == 3


# --- cool -------------------------------------------------------------------


def _table(out):
    lines = out.splitlines()
    start = lines.index("beta steps fidelity_trotter fidelity_exact") + 1
    rows = []
    for ln in lines[start:]:
        parts = ln.split()
        if len(parts) != 4:
            break
        rows.append([float(t) for t in parts])
    return rows, lines


def test_cool_tfi6():
    code, out = run("cool", "tfi 6 2.0 1.0", "--beta", 6, "--steps", 200)
    assert code == 0
    rows, lines = _table(out)
    assert rows[-1][2] >= 0.999
    assert any(ln.startswith("final_fidelity 0.999") for ln in lines)
    rel = float(next(ln for ln in lines if ln.startswith("network_vs_dense")).split()[-1])
    assert rel <= 1e-8


def test_cool_beta_zero_is_initial_overlap():
    code, out = run("cool", "tfi 4 1.5", "--beta", 0, "--steps", 1, "--points", 1)
    assert code == 0
    rows, _ = _table(out)
    _, gs, _ = exact_ground_state(tfi(4, 1.5))
    assert rows[0][2] == pytest.approx(abs(np.vdot(gs, plus_state(4))), abs=1e-11)


def test_cool_identity_hamiltonian_is_constant(tmp_path):
    eye = " ".join("1 0" if i % 5 == 0 else "0 0" for i in range(16))
    path = write(tmp_path, "id.ham", f"sites 3 dim 2\nterm 0 1 {eye}\nterm 1 2 {eye}\n")
    code, out = run("cool", path, "--beta", 3, "--steps", 10, "--chi", "haar")
    assert code == 0
    rows, _ = _table(out)
    assert len({r[2] for r in rows}) == 1 and len({r[3] for r in rows}) == 1


# --- exit codes and determinism ---------------------------------------------


def test_parse_errors(tmp_path):
    assert run("contract", tmp_path / "missing.json")[0] == 2
    assert run("contract", write(tmp_path, "bad.json", "{"))[0] == 2
    assert run("frobnicate")[0] == 2
    assert run("norm", "x.json", "--no-such-flag")[0] == 2


def test_cap_exit_code(tmp_path, rng):
    path = write(tmp_path, "r.json", dumps_network(random_network(rng, 6, extra_bonds=4)))
    assert run("contract", path, "--cap", 1)[0] == 3


def test_zero_norm_exit_code(tmp_path):
    p = Peps(PepsGraph((0,), (), (), (2,)), (np.zeros((2, 1)),))
    path = write(tmp_path, "z.json", dumps_peps(p))
    assert run("nev", path, "--obs", "sz@0")[0] == 4


def test_repeated_runs_identical(tmp_path, rng):
    path = write(tmp_path, "p.json", dumps_peps(random_peps(rng, 2, 2)))
    first = [run("norm", path), run("cool", "tfi 3 1.0", "--beta", 1, "--steps", 5, "--chi", "haar", "--seed", 9)]
    second = [run("norm", path), run("cool", "tfi 3 1.0", "--beta", 1, "--steps", 5, "--chi", "haar", "--seed", 9)]
    assert first == second


def test_console_entry_point(bell_file):
    proc = subprocess.run([sys.executable, "-m", "pepsdual.cli", "norm", str(bell_file)], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "2\n"
    proc = subprocess.run([sys.executable, "-m", "pepsdual.cli", "norm", "/nonexistent"], capture_output=True, text=True)
    assert proc.returncode == 2 and "error" in proc.stderr
