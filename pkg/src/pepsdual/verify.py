"""Cross-representation checks shared by the ``verify`` verb and the tests.

Each ``criterion_*`` function runs one seeded battery and returns a
:class:`CriterionResult`; details contain only deterministic numbers so the
printed report is reproducible byte for byte.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import circuits, cooling, duality, pathsum, peps, tensornet
from .oracles import peps_state_oracle
from .samples import (
    majority_tie_cnf,
    random_3cnf,
    random_circuit,
    random_network,
    random_th_circuit,
)


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"criterion {self.number} [{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng([seed, *key])


GRID_SHAPES = ((1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3))


def criterion_1(seed: int = 0, count: int = 200) -> CriterionResult:
    """NORM by contraction, by the definition oracle and by the compiled circuit."""
    worst = 0.0
    for i in range(count):
        rng = _rng(seed, 1, i)
        w, h = GRID_SHAPES[i % len(GRID_SHAPES)]
        p = peps.random_peps(rng, w, h)
        by_net = peps.norm_squared(p)
        psi = peps_state_oracle(p)
        by_def = float(np.vdot(psi, psi).real)
        cc = duality.peps_to_circuit(p)
        _, p_success = circuits.simulate(cc.circuit)
        by_circ = cc.scale**2 * p_success
        worst = max(worst, _rel(by_net, by_def), _rel(by_net, by_circ), _rel(by_def, by_circ))
    return CriterionResult(
        1, "cross-representation NORM", worst <= 1e-9, f"{count} PEPS, worst pairwise rel err {worst:.1e}"
    )


def criterion_2(seed: int = 0, count: int = 100, mbqc_count: int = 25) -> CriterionResult:
    """Circuit -> PEPS output fidelity in both modes."""
    worst_st = worst_mb = 0.0
    for i in range(count):
        c = random_circuit(_rng(seed, 2, i), 3, 8, 2)
        state, _ = circuits.simulate(c)
        out = duality.circuit_to_peps(c, "spacetime").output_state()
        worst_st = max(worst_st, 1 - duality.fidelity(out, state))
    kinds = ("H", "X", "CNOT", "CZ", "U1")
    for i in range(mbqc_count):
        c = random_circuit(_rng(seed, 22, i), 3, 8, 2, kinds=kinds)
        state, _ = circuits.simulate(c)
        out = duality.circuit_to_peps(c, "mbqc").output_state()
        worst_mb = max(worst_mb, 1 - duality.fidelity(out, state))
    ok = worst_st <= 1e-9 and worst_mb <= 1e-9
    return CriterionResult(
        2,
        "duality round trip",
        ok,
        f"{count} spacetime worst infidelity {worst_st:.1e}; {mbqc_count} mbqc worst infidelity {worst_mb:.1e}",
    )


def criterion_3(seed: int = 0, count: int = 100) -> CriterionResult:
    """Path-sum probabilities, completeness and the counting identity."""
    worst = 0.0
    complete = identity = True
    for i in range(count):
        rng = _rng(seed, 3, i)
        n = int(rng.integers(1, 6))
        c = random_th_circuit(rng, n, int(rng.integers(1, 21)), 12, max_posts=2)
        plus, minus, h = pathsum.path_counts(c)
        state = circuits.evolve(c.without_postselection())
        probs = [Fraction(int(wt) ** 2, 2**h) for wt in plus - minus]
        worst = max(worst, float(np.max(np.abs(np.array([float(q) for q in probs]) - np.abs(state) ** 2))))
        complete &= sum(probs) == 1
        chk = pathsum.counting_identity_check(c)
        identity &= chk.identity_holds and chk.norm_matches
    ok = worst <= 1e-12 and complete and identity
    return CriterionResult(
        3,
        "path-sum exactness",
        ok,
        f"{count} circuits, worst |p - p_sv| {worst:.1e}, sum p == 1: {complete}, identity exact: {identity}",
    )


def criterion_4(seed: int = 0, count: int = 50) -> CriterionResult:
    """countsat / majority through the CLI against brute-force counts."""
    from . import cli

    formulas = []
    for i in range(count):
        rng = _rng(seed, 4, i)
        n = 4 + i % 5
        formulas.append(random_3cnf(rng, n, int(rng.integers(1, n + 2))))
    ties = [majority_tie_cnf(n) for n in range(4, 9)]
    ties += [circuits.CNF(n, ((1, 2), (-1, -2))) for n in range(4, 9)]  # x1 xor x2
    count_ok = major_ok = True
    with tempfile.TemporaryDirectory() as tmp:
        for j, f in enumerate(formulas + ties):
            path = os.path.join(tmp, f"f{j}.cnf")
            with open(path, "w") as fh:
                fh.write(circuits.format_dimacs(f))
            truth = circuits.brute_force_count(f)
            code, out = cli.quiet_run(["countsat", path])
            count_ok &= code == 0 and int(out.split()[0]) == truth
            code, out = cli.quiet_run(["majority", path])
            expect = "yes" if 2 * truth >= 2**f.n_vars else "no"
            major_ok &= code == 0 and out.strip() == expect
    return CriterionResult(
        4,
        "#P demo",
        count_ok and major_ok,
        f"{count} random 3-CNFs + {len(ties)} ties; counts exact: {count_ok}; majority agrees: {major_ok}",
    )


def _shape_value(net: tensornet.TensorNetwork, kind: int) -> tensornet.TensorNetwork:
    """Rotate one tensor so C is generic / negative real / imaginary / positive real."""
    if kind == 0:
        return net
    c = tensornet.contraction_value(net)
    target = {1: -1.0, 2: 1j, 3: 1.0}[kind]
    return tensornet.phase_rotate(net, target * abs(c) / c)


def criterion_5(seed: int = 0, count: int = 100) -> CriterionResult:
    worst_prod = worst_sum = worst_rec = 0.0
    for i in range(count):
        rng = _rng(seed, 5, i)
        a = _shape_value(random_network(rng, int(rng.integers(1, 6)), extra_bonds=int(rng.integers(0, 3))), i % 4)
        b = random_network(rng, int(rng.integers(1, 5)), extra_bonds=int(rng.integers(0, 3)))
        ca, cb = tensornet.contraction_value(a), tensornet.contraction_value(b)
        prod = tensornet.contraction_value(tensornet.network_tensor_product(a, tensornet.conjugate_network(a)))
        worst_prod = max(worst_prod, abs(prod - abs(ca) ** 2) / abs(ca) ** 2)
        summed = tensornet.contraction_value(tensornet.network_direct_sum(a, b))
        worst_sum = max(worst_sum, abs(summed - (ca + cb)) / (abs(ca) + abs(cb)))
        rec = tensornet.recover_complex_contraction(None, a)
        worst_rec = max(worst_rec, abs(rec - ca) / abs(ca))
    ok = worst_prod <= 1e-10 and worst_sum <= 1e-10 and worst_rec <= 1e-8
    return CriterionResult(
        5,
        "tensor-network identities",
        ok,
        f"{count} networks; product {worst_prod:.1e}, direct sum {worst_sum:.1e}, recovery {worst_rec:.1e}",
    )


def criterion_6(seed: int = 0, count: int = 100, compiled: int = 50) -> CriterionResult:
    worst_uev = worst_norm = 0.0
    for i in range(count):
        rng = _rng(seed, 6, i)
        w, h = GRID_SHAPES[i % len(GRID_SHAPES)]
        p = peps.random_peps(rng, w, h)
        v = p.graph.vertices[int(rng.integers(0, len(p.graph.vertices)))]
        obs = peps.Observable((v,), peps.random_hermitian(rng, 2))
        direct = peps.uev(p, obs)
        via = peps.uev_via_norm(p, obs)
        scale = peps.operator_norm(obs.matrix) * peps.norm_squared(p)
        worst_uev = max(worst_uev, abs(direct - via) / scale)
    for i in range(compiled):
        rng = _rng(seed, 66, i)
        w, h = GRID_SHAPES[i % 5]
        p = peps.random_peps(rng, w, h)
        cc = duality.peps_to_circuit(p)
        worst_norm = max(worst_norm, _rel(duality.norm_via_nev(cc), peps.norm_squared(p)))
    ok = worst_uev <= 1e-9 and worst_norm <= 1e-9
    return CriterionResult(
        6,
        "NORM / UEV / NEV reductions",
        ok,
        f"{count} uev_via_norm worst {worst_uev:.1e}; {compiled} NORM-as-NEV worst {worst_norm:.1e}",
    )


def criterion_7(seed: int = 0) -> CriterionResult:
    h8 = cooling.tfi(8, 2.0)
    _, gs8, _ = cooling.exact_ground_state(h8)
    psi = cooling.imaginary_time_evolve(h8, cooling.CoolingSchedule(6.0, 200, "second"))
    fid = cooling.fidelity(psi, gs8)

    h6 = cooling.tfi(6, 2.0)
    rep = cooling.convergence_report(h6, np.linspace(0.5, 8.0, 16), seed=seed)
    slope_ratio = rep.slope / rep.predicted_slope

    sched = cooling.CoolingSchedule(4.0, 100, "second")
    net = cooling.contract_cooling(cooling.cooling_network(h6, sched))
    dense, log_scale = cooling.trotter_evolve(h6, sched)
    ref = dense * np.exp(log_scale)
    agree = float(np.linalg.norm(net - ref) / np.linalg.norm(ref))

    ok = fid >= 0.999 and abs(slope_ratio - 1) <= 0.2 and agree <= 1e-8
    return CriterionResult(
        7,
        "cooling",
        ok,
        f"N=8 fidelity {fid:.6f}; slope/(-2 gap) {slope_ratio:.4f}; network vs dense {agree:.1e}",
    )


def determinism_script(tmp: str, seed: int = 0) -> list[list[str]]:
    """A fixed set of CLI invocations touching every verb."""
    rng = _rng(seed, 8)
    net = random_network(rng, 4)
    with open(os.path.join(tmp, "net.json"), "w") as fh:
        fh.write(tensornet.dumps_network(net))
    p = peps.random_peps(rng, 2, 2)
    with open(os.path.join(tmp, "peps.json"), "w") as fh:
        fh.write(peps.dumps_peps(p))
    c = random_circuit(rng, 3, 6, 1, kinds=("H", "CNOT", "CZ", "U1"))
    with open(os.path.join(tmp, "c.circ"), "w") as fh:
        fh.write(circuits.format_circuit(c))
    th = random_th_circuit(rng, 3, 8, 5, max_posts=1)
    with open(os.path.join(tmp, "th.circ"), "w") as fh:
        fh.write(circuits.format_circuit(th))
    with open(os.path.join(tmp, "f.cnf"), "w") as fh:
        fh.write(circuits.format_dimacs(random_3cnf(rng, 5, 4)))
    j = lambda name: os.path.join(tmp, name)  # noqa: E731
    return [
        ["contract", j("net.json")],
        ["norm", j("peps.json")],
        ["nev", j("peps.json"), "--obs", "sz@0"],
        ["compile", "p2c", j("peps.json"), "-o", j("p2c.circ")],
        ["compile", "c2p", j("c.circ"), "--mode", "mbqc", "-o", j("c2p.json")],
        ["norm", j("c2p.json")],
        ["pathsum", j("th.circ")],
        ["countsat", j("f.cnf")],
        ["majority", j("f.cnf")],
        ["cool", "tfi 4 2.0 1.0", "--beta", "2", "--steps", "20"],
        ["verify", "--quick", "--only", "3,5"],
    ]


def criterion_8(seed: int = 0) -> CriterionResult:
    from . import cli

    outputs = []
    for _ in range(2):
        with tempfile.TemporaryDirectory() as tmp:
            text = []
            for argv in determinism_script(tmp, seed):
                code, out = cli.quiet_run(argv + ["--seed", str(seed)])
                text.append(f"$ {argv[0]} -> {code}\n{out.replace(tmp, '<tmp>')}")
                for name in ("p2c.circ", "c2p.json"):
                    path = os.path.join(tmp, name)
                    if os.path.exists(path) and argv[0] == "compile":
                        with open(path) as fh:
                            text.append(fh.read())
            outputs.append("".join(text).encode())
    same = outputs[0] == outputs[1]
    return CriterionResult(8, "determinism", same, f"{len(outputs[0])} bytes of CLI output, identical: {same}")


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
}

QUICK = {
    1: {"count": 12},
    2: {"count": 10, "mbqc_count": 4},
    3: {"count": 10},
    4: {"count": 5},
    5: {"count": 12},
    6: {"count": 10, "compiled": 5},
    7: {},
    8: {},
}


def run(numbers=None, *, seed: int = 0, quick: bool = False) -> list[CriterionResult]:
    numbers = sorted(CRITERIA) if numbers is None else list(numbers)
    results = []
    for k in numbers:
        kwargs = QUICK[k] if quick else {}
        results.append(CRITERIA[k](seed, **kwargs))
    return results

