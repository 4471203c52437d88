"""Compilation between postselected circuits and PEPS, in both directions.

Circuit -> PEPS comes in two flavours:

* ``spacetime``: every gate becomes a vertex with physical dimension 1;
  wires are bonds of dimension 2 (parallel wires between the same pair of
  vertices are merged into one bond of dimension ``2^k``).  Each qubit has
  an input vertex fixed to ``|0>`` and an output vertex with ``d = 2``.
* ``mbqc``: a square-lattice cluster state in which every site except the
  outputs is projected onto a single-qubit state.  Logical qubit ``i`` lives
  on lattice row ``2i``; odd rows are spacers projected onto ``<0|`` except
  where a vertical "bridge" site realises a CZ.  Projecting a logical site
  onto ``(|0> + e^{i t}|1>)/sqrt 2`` moves its state one column right under
  ``J(t) = H diag(1, e^{-i t})``, so three columns give any single-qubit
  unitary and one bridge column gives ``(H (x) H) CZ``.

PEPS -> circuit dilates each projector to a unitary with one ancilla,
prepares the bonds as Bell pairs and gathers all ancilla postselections
into a single qubit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuits import (
    Gate,
    PostselectedCircuit,
    cnot,
    h,
    mcx_borrowed,
    unitary,
    x,
)
from .errors import InvalidPostselection
from .peps import Observable, Peps, PepsGraph, cluster_peps, nev, peps_state, psd_sqrt
from .tensornet import DEFAULT_CAP

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
MBQC_KINDS = {"H", "X", "CZ", "CNOT", "U1"}


@dataclass(frozen=True, eq=False)
class CompiledPeps:
    """PEPS whose output sites carry a circuit's projected output vector.

    ``circuit output = scale^{-1} * (PEPS state on output_sites)`` up to a
    global phase; every other vertex has physical dimension 1.  ``frozen``
    maps mbqc-mode lattice sites to the single-qubit state they were
    projected onto.
    """

    peps: Peps
    scale: float
    output_sites: tuple
    mode: str
    frozen: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if len(set(self.output_sites)) != len(self.output_sites):
            raise ValueError("output sites must be distinct")
        g = self.peps.graph
        for v in self.output_sites:
            if g.phys_dim(v) != 2:
                raise ValueError(f"output site {v} must have physical dimension 2")
        for v, d in zip(g.vertices, g.phys_dims):
            if v not in self.output_sites and d != 1:
                raise ValueError(f"non-output vertex {v} must have physical dimension 1")

    def output_state(self, *, cap: int = DEFAULT_CAP) -> np.ndarray:
        """Unnormalized state on the output sites (in vertex order)."""
        return peps_state(self.peps, cap=cap)


@dataclass(frozen=True, eq=False)
class CompiledCircuit:
    """Circuit whose postselected output is the PEPS state divided by ``scale``.

    ``output_qubits[v]`` lists the qubits (most significant first) holding
    vertex ``v``'s physical index; every other qubit ends in ``|0>``.
    """

    circuit: PostselectedCircuit
    scale: float
    output_qubits: dict
    phys_dims: dict

    def peps_vector(self, state: np.ndarray) -> np.ndarray:
        """Restrict a simulator output to the PEPS physical space."""
        n = self.circuit.n_qubits
        idx = np.zeros(1, dtype=np.int64)
        for v, qs in self.output_qubits.items():
            d = self.phys_dims[v]
            local = np.zeros(d, dtype=np.int64)
            for j in range(d):
                for pos, q in enumerate(qs):
                    if (j >> (len(qs) - 1 - pos)) & 1:
                        local[j] += 1 << (n - 1 - q)
            idx = (idx[:, None] + local[None, :]).reshape(-1)
        return np.asarray(state).reshape(-1)[idx]


# ---------------------------------------------------------------------------
# circuit -> PEPS, spacetime mode
# ---------------------------------------------------------------------------


def _spacetime(c: PostselectedCircuit) -> CompiledPeps:
    n, ng = c.n_qubits, len(c.gates)
    out_v = [n + ng + q for q in range(n)]
    owner = list(range(n))
    segs: list[tuple[int, int, int]] = []  # (qubit, source vertex, sink vertex)
    for j, g in enumerate(c.gates):
        for q in g.targets:
            segs.append((q, owner[q], n + j))
            owner[q] = n + j
    for q in range(n):
        segs.append((q, owner[q], out_v[q]))

    groups: dict[tuple[int, int], list[int]] = {}
    for q, a, b in segs:
        groups.setdefault((a, b), []).append(q)
    edges = tuple(groups)
    for key in edges:
        groups[key].sort()
    n_vert = 2 * n + ng
    phys = tuple(1 if v < n + ng else 2 for v in range(n_vert))
    graph = PepsGraph(tuple(range(n_vert)), edges, tuple(2 ** len(groups[e]) for e in edges), phys)

    post = dict(c.postselections)
    mats = []
    for v in range(n_vert):
        # axes of the local tensor, keyed by (qubit, "in"/"out")
        if v < n:
            t = np.array([1, 0], dtype=complex)
            axes = {(v, "out"): 0}
            lead = []
        elif v < n + ng:
            g = c.gates[v - n]
            k = len(g.targets)
            t = g.unitary().reshape((2,) * (2 * k))
            axes = {(q, "out"): i for i, q in enumerate(g.targets)}
            axes.update({(q, "in"): k + i for i, q in enumerate(g.targets)})
            lead = []
        else:
            q = v - n - ng
            t = np.eye(2, dtype=complex)
            if q in post:
                t = np.diag([1.0 - post[q], float(post[q])]).astype(complex)
            axes = {(q, "in"): 1}
            lead = [0]
        perm = list(lead)
        for e in graph.incident(v):
            a, b = edges[e]
            role = "out" if a == v else "in"
            perm += [axes[(q, role)] for q in groups[(a, b)]]
        mats.append(t.transpose(perm).reshape(phys[v], -1))
    peps = Peps(graph, tuple(mats))
    return CompiledPeps(peps, 1.0, tuple(out_v), "spacetime")


# ---------------------------------------------------------------------------
# circuit -> PEPS, mbqc mode
# ---------------------------------------------------------------------------


def _zxz_angles(u: np.ndarray) -> tuple[float, float, float]:
    """Angles ``(a, b, c)`` with ``u ~ Rz(a) Rx(b) Rz(c)`` up to global phase."""
    v = u / np.sqrt(np.linalg.det(u))
    b = 2 * math.atan2(abs(v[0, 1]), abs(v[0, 0]))
    s = -2 * np.angle(v[0, 0]) if abs(v[0, 0]) > 1e-12 else 0.0
    d = -2 * (np.angle(v[0, 1]) + math.pi / 2) if abs(v[0, 1]) > 1e-12 else 0.0
    return (s + d) / 2, b, (s - d) / 2


def j_gate(theta: float) -> np.ndarray:
    """Single-column teleportation map ``H diag(1, e^{-i theta})``."""
    return _H @ np.diag([1, np.exp(-1j * theta)])


def euler_columns(u: np.ndarray) -> tuple[float, float, float]:
    """Measurement angles ``(t1, t2, t3)`` with ``J(t3) J(t2) J(t1) ~ u``."""
    a, b, c = _zxz_angles(_H @ u)
    return -c, -b, -a


def _plus_angle(theta: float) -> np.ndarray:
    return np.array([1, np.exp(1j * theta)], dtype=complex) / math.sqrt(2)


def _cz_ops(a: int, b: int) -> list[tuple]:
    lo, hi = sorted((a, b))
    if hi - lo == 1:
        return [("cz", lo)]
    swaps = []
    for k in range(hi, lo + 1, -1):
        for ctl, tgt in ((k - 1, k), (k, k - 1), (k - 1, k)):
            swaps += [("1q", tgt, _H), ("cz", k - 1), ("1q", tgt, _H)]
    # swaps bring qubit hi next to lo; the same sequence reversed undoes them
    return swaps + [("cz", lo)] + swaps[::-1]


def _mbqc_ops(c: PostselectedCircuit) -> list[tuple]:
    ops: list[tuple] = [("1q", q, _H) for q in range(c.n_qubits)]
    for g in c.gates:
        if g.kind not in MBQC_KINDS:
            raise ValueError(f"gate {g.kind} is not supported in mbqc mode")
        if g.kind in ("H", "X", "U1"):
            ops.append(("1q", g.targets[0], g.unitary()))
        elif g.kind == "CZ":
            ops += _cz_ops(*g.targets)
        else:
            ctl, tgt = g.targets
            ops += [("1q", tgt, _H)] + _cz_ops(ctl, tgt) + [("1q", tgt, _H)]
    return ops


def _mbqc_columns(n: int, ops: list[tuple]) -> list[dict]:
    """Per column: logical angles and, optionally, the bridged spacer row."""
    cols: list[dict] = []
    pending = [np.eye(2, dtype=complex) for _ in range(n)]

    def flush():
        angles = [euler_columns(pending[q]) for q in range(n)]
        for k in range(3):
            cols.append({"angles": [angles[q][k] for q in range(n)], "bridge": None})
        for q in range(n):
            pending[q] = np.eye(2, dtype=complex)

    for op in ops:
        if op[0] == "1q":
            _, q, u = op
            pending[q] = u @ pending[q]
            continue
        lo = op[1]
        if any(not _is_identity(m) for m in pending):
            flush()
        angles = [0.0] * n
        angles[lo] = angles[lo + 1] = -math.pi / 2
        cols.append({"angles": angles, "bridge": lo})
        for q in range(n):
            pending[q] = _H.copy()  # each bridge column also applies H to every qubit
    if any(not _is_identity(m) for m in pending) or not cols:
        flush()
    return cols


def _is_identity(u: np.ndarray) -> bool:
    return abs(abs(np.trace(u)) - 2) < 1e-12


def _mbqc(c: PostselectedCircuit, renormalize_sites: bool) -> CompiledPeps:
    n = c.n_qubits
    cols = _mbqc_columns(n, _mbqc_ops(c))
    w, hgt = len(cols) + 1, 2 * n - 1
    base = cluster_peps(w, hgt)
    g = base.graph
    post = dict(c.postselections)
    zero = np.array([1, 0], dtype=complex)
    boost = math.sqrt(2) if renormalize_sites else 1.0
    outputs = tuple(2 * q * w + (w - 1) for q in range(n))
    frozen: dict = {}
    mats, phys = [], []
    for v in g.vertices:
        r, col = divmod(v, w)
        pc = base.projector(v)
        if v in outputs:
            q = r // 2
            m = pc
            if q in post:
                m = np.diag([1.0 - post[q], float(post[q])]).astype(complex) @ pc
            mats.append(m)
            phys.append(2)
            continue
        if col == w - 1:
            a = zero
        elif r % 2 == 0:
            a = _plus_angle(cols[col]["angles"][r // 2])
        elif cols[col]["bridge"] == r // 2:
            a = _plus_angle(-math.pi / 2)
        else:
            a = zero
        frozen[v] = a
        mats.append(boost * (a.conj() @ pc)[None, :])
        phys.append(1)
    graph = PepsGraph(g.vertices, g.edges, g.bond_dims, tuple(phys))
    scale = 1.0 if renormalize_sites else 2.0 ** (-len(frozen) / 2)
    return CompiledPeps(
        Peps(graph, tuple(mats)), scale, outputs, "mbqc", frozen, {"width": w, "height": hgt}
    )


def circuit_to_peps(c: PostselectedCircuit, mode: str = "spacetime", *, renormalize_sites: bool = True) -> CompiledPeps:
    """Compile a postselected circuit into a PEPS (see module docstring).

    In mbqc mode every projected site is multiplied by ``sqrt 2`` (the
    inverse amplitude of its outcome) so ``scale`` is 1; with
    ``renormalize_sites=False`` the raw cluster projections are kept and
    ``scale = 2^{-m/2}`` for ``m`` projected sites.
    """
    if mode == "spacetime":
        return _spacetime(c)
    if mode == "mbqc":
        return _mbqc(c, renormalize_sites)
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# PEPS -> circuit
# ---------------------------------------------------------------------------


def dilate(p: np.ndarray) -> tuple[np.ndarray, float]:
    """Unitary ``U`` on ``ancilla (x) system`` with ``<0|U|0> = P~ / s``.

    ``P`` is zero-padded to a square ``P~``; ``s`` is its largest singular
    value; the ancilla is the most significant index.
    """
    p = np.asarray(p, dtype=complex)
    if p.ndim != 2:
        raise ValueError("dilate needs a matrix")
    n = max(p.shape)
    sq = np.zeros((n, n), dtype=complex)
    sq[: p.shape[0], : p.shape[1]] = p
    s = float(np.linalg.norm(sq, 2))
    if s == 0.0:
        raise ValueError("cannot dilate the zero matrix")
    t = sq / s
    eye = np.eye(n)
    top = np.hstack([t, psd_sqrt(eye - t @ t.conj().T)])
    bottom = np.hstack([psd_sqrt(eye - t.conj().T @ t), -t.conj().T])
    return np.vstack([top, bottom]), s


def _log2_exact(d: int) -> int:
    k = d.bit_length() - 1
    if 1 << k != d:
        raise ValueError(f"bond dimension {d} is not a power of two")
    return k


def peps_to_circuit(p: Peps, *, gather: bool = True) -> CompiledCircuit:
    """Postselected circuit preparing the normalized PEPS state.

    Vertex registers hold their virtual qubits in canonical leg order (extra
    ``|0>`` qubits first when ``d`` exceeds the virtual dimension).  Bonds
    start as Bell pairs, each register gets its dilated projector with one
    ancilla, and the ancilla postselections are gathered into one (unless
    ``gather=False``).  ``scale = prod s_v * prod sqrt(D_e)``.
    """
    g = p.graph
    bond_bits = [_log2_exact(d) for d in g.bond_dims]
    nq = 0
    reg: dict = {}
    leg_qubits: dict = {}
    for v in g.vertices:
        k = sum(bond_bits[e] for e in g.incident(v))
        d = g.phys_dim(v)
        extra = max(0, math.ceil(math.log2(d)) - k) if d > 1 else 0
        qs = list(range(nq, nq + extra + k))
        nq += extra + k
        reg[v] = qs
        pos = extra
        for e in g.incident(v):
            leg_qubits[(v, e)] = qs[pos : pos + bond_bits[e]]
            pos += bond_bits[e]
    anc = {}
    for v in g.vertices:
        anc[v] = nq
        nq += 1

    gates: list[Gate] = []
    for e, (u, v) in enumerate(g.edges):
        for qa, qb in zip(leg_qubits[(u, e)], leg_qubits[(v, e)]):
            gates += [h(qa), cnot(qa, qb)]
    scale = math.prod(math.sqrt(d) for d in g.bond_dims)
    out_qubits = {}
    for v in g.vertices:
        size = 1 << len(reg[v])
        m = np.zeros((size, size), dtype=complex)
        pm = p.projector(v)
        m[: pm.shape[0], : pm.shape[1]] = pm
        u, s = dilate(m)
        scale *= s
        gates.append(unitary([anc[v]] + reg[v], u))
        nbits = math.ceil(math.log2(g.phys_dim(v))) if g.phys_dim(v) > 1 else 0
        out_qubits[v] = tuple(reg[v][len(reg[v]) - nbits :])
    circuit = PostselectedCircuit(nq, tuple(gates), tuple((anc[v], 0) for v in g.vertices))
    if gather:
        circuit = gather_postselections(circuit)
    return CompiledCircuit(circuit, scale, out_qubits, {v: g.phys_dim(v) for v in g.vertices})


def gather_postselections(c: PostselectedCircuit) -> PostselectedCircuit:
    """Replace all postselections by a single ``target = 0`` event.

    The target (a fresh last qubit) receives ``NOT AND_q [q == outcome_q]``
    through one multi-controlled X that borrows idle qubits; fresh qubits
    are added only when too few idle ones exist.
    """
    posts = list(c.postselections)
    k = len(posts)
    target = c.n_qubits
    controls = [q for q, _ in posts]
    shortfall = max(0, (k - 2) - (c.n_qubits - k))
    n_total = c.n_qubits + 1 + shortfall
    idle = [q for q in range(n_total) if q not in controls and q != target]
    flips = [x(q) for q, v in posts if v == 0]
    gates = list(c.gates) + flips + mcx_borrowed(controls, target, idle) + flips + [x(target)]
    meta = dict(c.meta)
    meta["gather_target"] = target
    return PostselectedCircuit(n_total, tuple(gates), ((target, 0),), meta)


def norm_via_nev(cc: CompiledCircuit, *, cap: int = DEFAULT_CAP) -> float:
    """``gamma^2 * <diag(1,0)>`` on the gathered qubit of the unpostselected circuit.

    The expectation is evaluated as an NEV on the spacetime PEPS of the
    circuit without its final postselection.
    """
    c = cc.circuit
    if len(c.postselections) != 1:
        raise ValueError("expected a gathered circuit with exactly one postselection")
    (q, v), = c.postselections
    cp = circuit_to_peps(c.without_postselection(), "spacetime")
    proj = np.diag([1.0 - v, float(v)]).astype(complex)
    val = nev(cp.peps, Observable((cp.output_sites[q],), proj), cap=cap, strategy="state")
    return cc.scale**2 * val


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """``|<a|b>|^2 / (<a|a><b|b>)`` for unnormalized vectors."""
    a = np.asarray(a).reshape(-1)
    b = np.asarray(b).reshape(-1)
    na, nb = np.vdot(a, a).real, np.vdot(b, b).real
    if na == 0 or nb == 0:
        raise InvalidPostselection("fidelity with a zero vector is undefined")
    return float(abs(np.vdot(a, b)) ** 2 / (na * nb))


def reduced_output(state: np.ndarray, keep: Sequence[int], n: int) -> np.ndarray:
    """Amplitudes over ``keep`` qubits with every other qubit fixed to 0."""
    arr = np.asarray(state).reshape((2,) * n)
    idx = tuple(slice(None) if q in keep else 0 for q in range(n))
    return arr[idx].reshape(-1)
