"""Slow, independent reference implementations used to check the fast paths.

Nothing here shares code with the engines it checks: sums are taken over
explicit index assignments, states are built from their defining formulas.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from .circuits import PostselectedCircuit
from .tensornet import TensorNetwork


def naive_contract(net: TensorNetwork) -> np.ndarray:
    """Sum over every assignment of bond indices; returns an array over open legs."""
    dims = [net.tensor(a).shape[la] for a, la, _, _ in net.bonds]
    out_shape = net.open_shape()
    out = np.zeros(out_shape, dtype=complex)
    for bond_vals in itertools.product(*[range(d) for d in dims]):
        for open_vals in itertools.product(*[range(d) for d in out_shape]):
            idx = {t.id: [0] * t.rank for t in net.tensors}
            for (a, la, b, lb), v in zip(net.bonds, bond_vals):
                idx[a][la] = v
                idx[b][lb] = v
            for (t, l), v in zip(net.open_legs, open_vals):
                idx[t][l] = v
            term = 1 + 0j
            for t in net.tensors:
                term *= t.data[tuple(idx[t.id])]
            out[open_vals] += term
    return out


def peps_state_oracle(p) -> np.ndarray:
    """Build ``(x)_v P_v`` applied to the explicit product of edge pairs.

    Virtual legs are laid out vertex by vertex in canonical order; the pair
    vector has a 1 wherever both ends of every edge carry equal indices.
    """
    g = p.graph
    slots = []  # (vertex, edge) per virtual leg, in global order
    for v in g.vertices:
        slots.extend((v, k) for k in g.incident(v))
    dims = [g.bond_dims[k] for _, k in slots]
    pairs = np.ones(dims, dtype=complex) if dims else np.ones((), dtype=complex)
    for k in range(len(g.edges)):
        i, j = [s for s, (_, e) in enumerate(slots) if e == k]
        shape = [1] * len(dims)
        shape[i] = shape[j] = dims[i]
        eye = np.eye(dims[i]).reshape([dims[i] if s in (i, j) else 1 for s in range(len(dims))])
        pairs = pairs * eye
    big = np.ones((1, 1), dtype=complex)
    for v in g.vertices:
        big = np.kron(big, p.projector(v))
    return big @ pairs.reshape(-1)


def cluster_state_oracle(w: int, h: int) -> np.ndarray:
    """Normalized ``prod CZ |+>^{wh}`` on the grid (vertex ``r*w + c``)."""
    n = w * h
    edges = [(r * w + c, r * w + c + 1) for r in range(h) for c in range(w - 1)]
    edges += [(r * w + c, (r + 1) * w + c) for r in range(h - 1) for c in range(w)]
    psi = np.full(2**n, 2 ** (-n / 2), dtype=complex)
    for idx in range(2**n):
        bits = [(idx >> (n - 1 - q)) & 1 for q in range(n)]
        if sum(bits[u] & bits[v] for u, v in edges) % 2:
            psi[idx] = -psi[idx]
    return psi


def literal_path_amplitude(c: PostselectedCircuit, x) -> Fraction:
    """Amplitude times ``2^{h/2}`` by summing over full basis-state sequences.

    Every intermediate computational basis state is enumerated independently,
    so the cost is ``2^{n * gates}``; keep to tiny circuits.
    """
    n = c.n_qubits
    target = int("".join(map(str, x)), 2) if not isinstance(x, int) else x
    mats = [g.unitary() for g in c.gates]
    h_count = sum(g.kind == "H" for g in c.gates)
    total = 0.0
    for seq in itertools.product(range(2**n), repeat=len(c.gates)):
        if seq and seq[-1] != target:
            continue
        if not seq and target != 0:
            continue
        prev, w = 0, 1.0
        for g, m, cur in zip(c.gates, mats, seq):
            w *= _matrix_element(n, g.targets, m, cur, prev)
            if w == 0:
                break
            prev = cur
        total += w
    return Fraction(round(total * 2 ** (h_count / 2)))


def _matrix_element(n, targets, m, out_idx, in_idx) -> float:
    rest = [q for q in range(n) if q not in targets]
    for q in rest:
        if (out_idx >> (n - 1 - q)) & 1 != (in_idx >> (n - 1 - q)) & 1:
            return 0.0
    row = col = 0
    for q in targets:
        row = 2 * row + ((out_idx >> (n - 1 - q)) & 1)
        col = 2 * col + ((in_idx >> (n - 1 - q)) & 1)
    return float(m[row, col].real)


def dense_hamiltonian(h) -> np.ndarray:
    """Assemble a local Hamiltonian by explicit index loops (no kron tricks)."""
    d, n = h.site_dim, h.n_sites
    dim = d**n
    out = np.zeros((dim, dim), dtype=complex)
    for support, m in h.terms:
        for a in range(dim):
            digits = [(a // d ** (n - 1 - s)) % d for s in range(n)]
            col = 0
            for s in support:
                col = col * d + digits[s]
            for row in range(m.shape[0]):
                new = list(digits)
                r = row
                for s in reversed(support):
                    new[s] = r % d
                    r //= d
                b = sum(dig * d ** (n - 1 - s) for s, dig in enumerate(new))
                out[b, a] += m[row, col]
    return out


def ground_state_by_power(h_dense: np.ndarray, iters: int = 20000, tol: float = 1e-13) -> float:
    """Lowest eigenvalue via power iteration on ``c - H`` (second implementation)."""
    c = float(np.abs(h_dense).sum(axis=1).max())
    rng = np.random.default_rng(1234)
    v = rng.normal(size=h_dense.shape[0]) + 0j
    v /= np.linalg.norm(v)
    shifted = c * np.eye(h_dense.shape[0]) - h_dense
    lam = 0.0
    for _ in range(iters):
        w = shifted @ v
        new = float(np.vdot(v, w).real)
        v = w / np.linalg.norm(w)
        if abs(new - lam) < tol * max(1.0, abs(new)):
            break
        lam = new
    return c - float(np.vdot(v, shifted @ v).real)


def binom_tail(n: int, k: int) -> int:
    return sum(math.comb(n, j) for j in range(k, n + 1))
