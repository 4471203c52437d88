"""Seeded random instances for tests, the acceptance suite and the CLI."""

from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from .circuits import CNF, Gate, PostselectedCircuit, simulate, unitary
from .errors import InvalidPostselection
from .tensornet import Tensor, TensorNetwork


def _cplx(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def random_network(
    rng: np.random.Generator,
    n_tensors: int = 4,
    *,
    max_dim: int = 3,
    extra_bonds: int = 2,
    traces: int = 0,
    open_legs: int = 0,
) -> TensorNetwork:
    """Random connected network: a random spanning tree plus extra bonds.

    ``traces`` adds self-bonds (two legs of one tensor), ``open_legs``
    dangling legs on random tensors.
    """
    legs: list[list[int]] = [[] for _ in range(n_tensors)]
    bonds = []

    def add_leg(t, dim):
        legs[t].append(dim)
        return len(legs[t]) - 1

    pairs = [(int(rng.integers(0, i)), i) for i in range(1, n_tensors)]
    for _ in range(extra_bonds if n_tensors > 1 else 0):
        a, b = rng.choice(n_tensors, size=2, replace=False)
        pairs.append((int(a), int(b)))
    for _ in range(traces):
        t = int(rng.integers(0, n_tensors))
        pairs.append((t, t))
    for a, b in pairs:
        d = int(rng.integers(1, max_dim + 1))
        la = add_leg(a, d)
        lb = add_leg(b, d)
        bonds.append((f"t{a}", la, f"t{b}", lb))
    opens = []
    for _ in range(open_legs):
        t = int(rng.integers(0, n_tensors))
        opens.append((f"t{t}", add_leg(t, int(rng.integers(1, max_dim + 1)))))
    tensors = tuple(Tensor(f"t{i}", _cplx(rng, tuple(legs[i])) / np.sqrt(2)) for i in range(n_tensors))
    return TensorNetwork(tensors, tuple(bonds), tuple(opens))


def random_grid_network(rng: np.random.Generator, w: int, h: int, dim: int = 2) -> TensorNetwork:
    """Closed ``w x h`` grid of random tensors with uniform bond dimension."""
    legs = {(r, c): [] for r in range(h) for c in range(w)}
    bonds = []
    for r in range(h):
        for c in range(w):
            for nb in ((r, c + 1), (r + 1, c)):
                if nb in legs:
                    legs[(r, c)].append(dim)
                    legs[nb].append(dim)
                    bonds.append((f"g{r}_{c}", len(legs[(r, c)]) - 1, f"g{nb[0]}_{nb[1]}", len(legs[nb]) - 1))
    tensors = tuple(Tensor(f"g{r}_{c}", _cplx(rng, tuple(legs[(r, c)]))) for (r, c) in legs)
    return TensorNetwork(tensors, tuple(bonds))


def random_u1(rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(2, random_state=rng)


def random_circuit(
    rng: np.random.Generator,
    n_qubits: int = 3,
    max_gates: int = 8,
    max_posts: int = 2,
    *,
    kinds: tuple[str, ...] = ("H", "X", "CNOT", "CZ", "TOFFOLI", "U1", "U2"),
) -> PostselectedCircuit:
    """Random circuit with a valid (nonzero-probability) postselection set."""
    while True:
        gates: list[Gate] = []
        for _ in range(int(rng.integers(1, max_gates + 1))):
            kind = str(rng.choice(kinds))
            arity = {"H": 1, "X": 1, "U1": 1, "CNOT": 2, "CZ": 2, "U2": 2, "TOFFOLI": 3}[kind]
            if arity > n_qubits:
                continue
            qs = [int(q) for q in rng.choice(n_qubits, size=arity, replace=False)]
            if kind == "U1":
                gates.append(unitary(qs, random_u1(rng)))
            elif kind == "U2":
                gates.append(unitary(qs, unitary_group.rvs(4, random_state=rng)))
            else:
                gates.append(Gate(kind, tuple(qs)))
        n_post = int(rng.integers(0, min(max_posts, n_qubits) + 1))
        qs = rng.choice(n_qubits, size=n_post, replace=False)
        posts = tuple((int(q), int(rng.integers(0, 2))) for q in qs)
        c = PostselectedCircuit(n_qubits, tuple(gates), posts)
        try:
            _, p = simulate(c)
        except InvalidPostselection:
            continue
        if p > 1e-6:
            return c


def random_th_circuit(
    rng: np.random.Generator, n_qubits: int = 4, n_gates: int = 12, max_h: int = 10, max_posts: int = 0
) -> PostselectedCircuit:
    """Random Toffoli-Hadamard circuit (H, X, CNOT, TOFFOLI) with at most ``max_h`` H gates."""
    gates: list[Gate] = []
    h_used = 0
    while len(gates) < n_gates:
        kind = str(rng.choice(["H", "H", "X", "CNOT", "TOFFOLI"]))
        if kind == "H" and h_used >= max_h:
            continue
        arity = {"H": 1, "X": 1, "CNOT": 2, "TOFFOLI": 3}[kind]
        if arity > n_qubits:
            continue
        qs = tuple(int(q) for q in rng.choice(n_qubits, size=arity, replace=False))
        gates.append(Gate(kind, qs))
        h_used += kind == "H"
    n_post = int(rng.integers(0, min(max_posts, n_qubits) + 1))
    qs = rng.choice(n_qubits, size=n_post, replace=False)
    posts = tuple((int(q), int(rng.integers(0, 2))) for q in qs)
    return PostselectedCircuit(n_qubits, tuple(gates), posts)


def random_3cnf(rng: np.random.Generator, n_vars: int, n_clauses: int | None = None) -> CNF:
    if n_clauses is None:
        n_clauses = int(rng.integers(1, n_vars + 2))
    clauses = []
    for _ in range(n_clauses):
        width = min(3, n_vars)
        vs = rng.choice(n_vars, size=width, replace=False) + 1
        signs = rng.choice([-1, 1], size=width)
        clauses.append(tuple(int(v * s) for v, s in zip(vs, signs)))
    return CNF(n_vars, tuple(clauses))


def majority_tie_cnf(n_vars: int) -> CNF:
    """A formula with exactly ``2^{n-1}`` models: the single clause ``(x1)``."""
    return CNF(n_vars, ((1,),))

