"""PEPS on arbitrary graphs and the NORM / UEV / NEV problems.

Each edge carries the unnormalized pair ``sum_i |ii>``, so gluing two
virtual legs is plain index identification.  The projector at a vertex is a
``d x prod(D)`` matrix whose columns run over the vertex's virtual legs in
canonical order: incident edges sorted by ``(neighbour id, edge index)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .errors import ParseError, ZeroNormError
from .tensornet import DEFAULT_CAP, Tensor, TensorNetwork, contract_network

DEGREE_CAP = 16
HERMITIAN_TOL = 1e-12
ZERO_NORM_TOL = 1e-14


@dataclass(frozen=True)
class PepsGraph:
    vertices: tuple
    edges: tuple[tuple[Hashable, Hashable], ...]
    bond_dims: tuple[int, ...]
    phys_dims: tuple[int, ...]
    degree_cap: int = DEGREE_CAP

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple((u, v) for u, v in self.edges))
        object.__setattr__(self, "bond_dims", tuple(int(d) for d in self.bond_dims))
        object.__setattr__(self, "phys_dims", tuple(int(d) for d in self.phys_dims))
        if len(set(self.vertices)) != len(self.vertices):
            raise ValueError("duplicate vertex ids")
        if len(self.bond_dims) != len(self.edges) or len(self.phys_dims) != len(self.vertices):
            raise ValueError("bond_dims / phys_dims must align with edges / vertices")
        known = set(self.vertices)
        seen = set()
        degree = dict.fromkeys(self.vertices, 0)
        for (u, v), dim in zip(self.edges, self.bond_dims):
            if u not in known or v not in known:
                raise ValueError(f"edge ({u}, {v}) uses an unknown vertex")
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            key = frozenset((u, v))
            if key in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            seen.add(key)
            if dim < 1:
                raise ValueError("bond dimensions must be >= 1")
            degree[u] += 1
            degree[v] += 1
        if any(d < 1 for d in self.phys_dims):
            raise ValueError("physical dimensions must be >= 1")
        worst = max(degree.values(), default=0)
        if worst > self.degree_cap:
            raise ValueError(f"vertex degree {worst} exceeds cap {self.degree_cap}")
        pos = {v: i for i, v in enumerate(self.vertices)}
        legs = {v: [] for v in self.vertices}
        for k, (u, v) in enumerate(self.edges):
            legs[u].append((v, k))
            legs[v].append((u, k))
        for v in legs:
            legs[v].sort()
        object.__setattr__(self, "_pos", pos)
        object.__setattr__(self, "_legs", {v: tuple(k for _, k in legs[v]) for v in legs})

    def index(self, v) -> int:
        return self._pos[v]

    def incident(self, v) -> tuple[int, ...]:
        """Edge indices at ``v`` in canonical virtual-leg order."""
        return self._legs[v]

    def virtual_dims(self, v) -> tuple[int, ...]:
        return tuple(self.bond_dims[k] for k in self.incident(v))

    def phys_dim(self, v) -> int:
        return self.phys_dims[self._pos[v]]

    def leg_of(self, v, edge: int) -> int:
        """Position of ``edge`` among the virtual legs of ``v``."""
        return self._legs[v].index(edge)


@dataclass(frozen=True, eq=False)
class Peps:
    graph: PepsGraph
    projectors: tuple[np.ndarray, ...]

    def __post_init__(self):
        mats = []
        if len(self.projectors) != len(self.graph.vertices):
            raise ValueError("one projector per vertex is required")
        for v, p in zip(self.graph.vertices, self.projectors):
            m = np.array(p, dtype=complex)
            d = self.graph.phys_dim(v)
            cols = int(np.prod(self.graph.virtual_dims(v), dtype=np.int64))
            if m.shape != (d, cols):
                m = m.reshape(d, cols) if m.size == d * cols else None
            if m is None:
                raise ValueError(f"projector at {v} must have shape ({d}, {cols})")
            if not np.all(np.isfinite(m)):
                raise ValueError(f"projector at {v} has non-finite entries")
            m.setflags(write=False)
            mats.append(m)
        object.__setattr__(self, "projectors", tuple(mats))

    def projector(self, v) -> np.ndarray:
        return self.projectors[self.graph.index(v)]

    def site_tensor(self, v) -> np.ndarray:
        """Projector reshaped to ``(d, D_1, ..., D_k)`` in canonical leg order."""
        return self.projector(v).reshape((self.graph.phys_dim(v),) + self.graph.virtual_dims(v))

    def replace(self, v, matrix) -> "Peps":
        mats = list(self.projectors)
        mats[self.graph.index(v)] = np.asarray(matrix, dtype=complex)
        return Peps(self.graph, tuple(mats))


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian operator on the product of the support's physical spaces."""

    support: tuple
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(self.support))
        m = np.array(self.matrix, dtype=complex)
        if len(set(self.support)) != len(self.support):
            raise ValueError("observable support vertices must be distinct")
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("observable matrix must be square")
        if not np.allclose(m, m.conj().T, atol=HERMITIAN_TOL * max(1.0, np.abs(m).max(initial=0.0)), rtol=0):
            raise ValueError("observable matrix is not Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


PAULI = {
    "id": np.eye(2, dtype=complex),
    "sx": np.array([[0, 1], [1, 0]], dtype=complex),
    "sy": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "sz": np.array([[1, 0], [0, -1]], dtype=complex),
    "p0": np.diag([1, 0]).astype(complex),
    "p1": np.diag([0, 1]).astype(complex),
}


def local_observable(name: str, v) -> Observable:
    return Observable((v,), PAULI[name])


# ---------------------------------------------------------------------------
# networks
# ---------------------------------------------------------------------------


def _tid(v) -> str:
    return f"v{v}"


def peps_to_network(p: Peps) -> TensorNetwork:
    """Single-layer network; open legs are the physical legs in vertex order.

    Vertices with physical dimension 1 get no physical leg at all (a unit
    leg carries no index), so frozen sites of compiled circuits cost nothing.
    """
    g = p.graph
    off = {v: 0 if g.phys_dim(v) == 1 else 1 for v in g.vertices}
    tensors = tuple(
        Tensor(_tid(v), p.site_tensor(v)[0] if off[v] == 0 else p.site_tensor(v)) for v in g.vertices
    )
    bonds = tuple(
        (_tid(u), off[u] + g.leg_of(u, k), _tid(v), off[v] + g.leg_of(v, k)) for k, (u, v) in enumerate(g.edges)
    )
    return TensorNetwork(tensors, bonds, tuple((_tid(v), 0) for v in g.vertices if off[v]))


def sandwich_network(p: Peps, obs: Observable | None = None) -> TensorNetwork:
    """Closed network for ``<psi|A|psi>`` (``<psi|psi>`` when ``obs`` is None).

    Vertices outside the observable's support are fused bra-ket tensors;
    their legs are fused to ``D^2`` along edges whose other end is also
    outside the support and split into separate ket/bra legs otherwise.
    """
    g = p.graph
    support = tuple(obs.support) if obs is not None else ()
    sset = set(support)
    for v in support:
        if v not in g._pos:
            raise ValueError(f"observable support vertex {v!r} is not in the PEPS")
    if obs is not None:
        dim = int(np.prod([g.phys_dim(v) for v in support]))
        if obs.matrix.shape != (dim, dim):
            raise ValueError(f"observable needs a {dim}x{dim} matrix for its support")

    fused = [u not in sset and v not in sset for u, v in g.edges]
    tensors: list[Tensor] = []
    # leg lookup: (vertex, edge, layer) -> (tensor id, leg); layer in {"f", "k", "b"}
    where: dict[tuple, tuple[str, int]] = {}
    for v in g.vertices:
        t = p.site_tensor(v)
        inc = g.incident(v)
        dims = g.virtual_dims(v)
        if v in sset:
            tensors.append(Tensor(f"k{v}", t))
            tensors.append(Tensor(f"b{v}", np.conj(t)))
            for j, k in enumerate(inc):
                where[(v, k, "k")] = (f"k{v}", 1 + j)
                where[(v, k, "b")] = (f"b{v}", 1 + j)
            continue
        e = np.tensordot(t, np.conj(t), axes=(0, 0))
        nlegs = len(inc)
        e = e.transpose([i for j in range(nlegs) for i in (j, j + nlegs)]) if nlegs else e
        shape, leg = [], 0
        for j, k in enumerate(inc):
            if fused[k]:
                shape.append(dims[j] ** 2)
                where[(v, k, "f")] = (f"e{v}", leg)
                leg += 1
            else:
                shape += [dims[j], dims[j]]
                where[(v, k, "k")] = (f"e{v}", leg)
                where[(v, k, "b")] = (f"e{v}", leg + 1)
                leg += 2
        tensors.append(Tensor(f"e{v}", e.reshape(shape)))
    bonds = []
    for k, (u, v) in enumerate(g.edges):
        layers = ("f",) if fused[k] else ("k", "b")
        for layer in layers:
            bonds.append((*where[(u, k, layer)], *where[(v, k, layer)]))
    if obs is not None:
        dims = [g.phys_dim(v) for v in support]
        tensors.append(Tensor("A", obs.matrix.reshape(dims + dims)))
        n = len(support)
        for i, v in enumerate(support):
            bonds.append(("A", i, f"b{v}", 0))
            bonds.append(("A", n + i, f"k{v}", 0))
    return TensorNetwork(tuple(tensors), tuple(bonds))


def peps_state(p: Peps, *, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Flat state vector; the first vertex is the most significant factor."""
    return contract_network(peps_to_network(p), cap=cap).data.reshape(-1)


def _state_values(p: Peps, obs: Observable | None, cap: int) -> tuple[complex, complex | None]:
    """``(<psi|psi>, <psi|A|psi>)`` from one single-layer contraction."""
    g = p.graph
    live = [v for v in g.vertices if g.phys_dim(v) > 1]
    psi = contract_network(peps_to_network(p), cap=cap).data.reshape([g.phys_dim(v) for v in live])
    n2 = complex(np.vdot(psi, psi))
    if obs is None:
        return n2, None
    axes = [live.index(v) for v in obs.support if g.phys_dim(v) > 1]
    k = len(axes)
    moved = np.moveaxis(psi, axes, list(range(k)))
    flat = moved.reshape(obs.matrix.shape[0], -1)
    return n2, complex(np.vdot(flat, obs.matrix @ flat))


def _value(p: Peps, obs: Observable | None, cap: int, strategy: str) -> complex:
    if strategy == "greedy":
        return complex(contract_network(sandwich_network(p, obs), cap=cap).data)
    if strategy == "state":
        n2, val = _state_values(p, obs, cap)
        return n2 if obs is None else val
    raise ValueError(f"unknown strategy {strategy!r}")


def norm_squared(p: Peps, *, cap: int = DEFAULT_CAP, strategy: str = "greedy") -> float:
    """``<psi|psi>`` by exact contraction of the double-layer network.

    ``strategy="state"`` instead contracts the single layer to the state
    vector first, which is cheaper when most physical dimensions are 1.
    """
    return float(_value(p, None, cap, strategy).real)


def uev_complex(p: Peps, obs: Observable, *, cap: int = DEFAULT_CAP, strategy: str = "greedy") -> complex:
    return _value(p, obs, cap, strategy)


def uev(p: Peps, obs: Observable, *, cap: int = DEFAULT_CAP, strategy: str = "greedy") -> float:
    """Unnormalized expectation ``<psi|A|psi>``."""
    return float(uev_complex(p, obs, cap=cap, strategy=strategy).real)


def nev(
    p: Peps,
    obs: Observable,
    *,
    cap: int = DEFAULT_CAP,
    strategy: str = "greedy",
    zero_tol: float = ZERO_NORM_TOL,
    scale: float = 1.0,
) -> float:
    """Normalized expectation ``<psi|A|psi> / <psi|psi>``.

    Raises :class:`ZeroNormError` when the norm is at most ``zero_tol * scale``.
    """
    if strategy == "state":
        n2c, val = _state_values(p, obs, cap)
        n2, num = n2c.real, val.real
    else:
        n2 = norm_squared(p, cap=cap, strategy=strategy)
        num = None
    if n2 <= zero_tol * scale:
        raise ZeroNormError(f"PEPS norm^2 {n2:.3g} is zero within tolerance")
    if num is None:
        num = uev(p, obs, cap=cap, strategy=strategy)
    return num / n2


def psd_sqrt(m: np.ndarray, clamp: float = 1e-14) -> np.ndarray:
    """Square root of a Hermitian PSD matrix, eigenvalues below ``clamp`` set to 0."""
    w, u = np.linalg.eigh(m)
    w = np.where(w < clamp, 0.0, w)
    return (u * np.sqrt(w)) @ u.conj().T


def operator_norm(a: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvalsh(a))))


def uev_via_norm(p: Peps, obs: Observable, *, cap: int = DEFAULT_CAP, strategy: str = "greedy") -> float:
    """UEV from two NORM calls: ``<psi~|psi~> - ||A|| <psi|psi>``.

    ``psi~`` replaces the projector at the observable's vertex by
    ``(A + ||A|| 1)^{1/2} P``.
    """
    if len(obs.support) != 1:
        raise ValueError("uev_via_norm handles single-vertex observables only")
    (v,) = obs.support
    a = obs.matrix
    if a.shape != (p.graph.phys_dim(v),) * 2:
        raise ValueError("observable dimension does not match the vertex")
    anorm = operator_norm(a)
    root = psd_sqrt(a + anorm * np.eye(a.shape[0]))
    tilde = p.replace(v, root @ p.projector(v))
    return norm_squared(tilde, cap=cap, strategy=strategy) - anorm * norm_squared(p, cap=cap, strategy=strategy)


def rescale_projector(p: Peps, v, c: complex) -> Peps:
    """Multiply the projector at ``v`` by a nonzero scalar."""
    if c == 0:
        raise ValueError("rescale factor must be nonzero")
    return p.replace(v, p.projector(v) * c)


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def grid_graph(w: int, h: int, bond_dim: int = 2, phys_dim: int = 2) -> PepsGraph:
    """``w`` columns by ``h`` rows; vertex ``r*w + c``, horizontal edges first."""
    if w < 1 or h < 1:
        raise ValueError("grid needs w, h >= 1")
    verts = tuple(range(w * h))
    edges = [(r * w + c, r * w + c + 1) for r in range(h) for c in range(w - 1)]
    edges += [(r * w + c, (r + 1) * w + c) for r in range(h - 1) for c in range(w)]
    return PepsGraph(verts, tuple(edges), (bond_dim,) * len(edges), (phys_dim,) * len(verts))


def cluster_peps(w: int, h: int) -> Peps:
    """Cluster state ``prod_edges CZ |+>^{wh}`` on a ``w x h`` grid, D = d = 2.

    Each CZ on edge ``(u, v)``, ``u < v``, is split as
    ``sum_k |k><k|_u (x) Z_v^k``; absorbing ``|+>`` gives
    ``P_v[s, k...] = 2^{-1/2} prod_{v=u-end} [s == k] prod_{v=v-end} (-1)^{s k}``.
    """
    g = grid_graph(w, h)
    mats = []
    for v in g.vertices:
        inc = g.incident(v)
        t = np.zeros((2,) + (2,) * len(inc), dtype=complex)
        for idx in np.ndindex(*t.shape):
            s, ks = idx[0], idx[1:]
            val = 1 / math.sqrt(2)
            for k, e in zip(ks, inc):
                u_end = g.edges[e][0] == v
                if u_end:
                    val *= 1.0 if s == k else 0.0
                else:
                    val *= -1.0 if (s and k) else 1.0
            t[idx] = val
        mats.append(t.reshape(2, -1))
    return Peps(g, tuple(mats))


def random_peps(
    rng: np.random.Generator, w: int, h: int, bond_dim: int = 2, phys_dim: int = 2
) -> Peps:
    g = grid_graph(w, h, bond_dim, phys_dim)
    mats = []
    for v in g.vertices:
        cols = int(np.prod(g.virtual_dims(v), dtype=np.int64))
        mats.append(rng.normal(size=(phys_dim, cols)) + 1j * rng.normal(size=(phys_dim, cols)))
    return Peps(g, tuple(mats))


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (m + m.conj().T) / 2


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------


def _pairs(m: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(m).reshape(-1)]


def peps_to_dict(p: Peps) -> dict:
    g = p.graph
    return {
        "graph": {
            "vertices": list(g.vertices),
            "edges": [[u, v, d] for (u, v), d in zip(g.edges, g.bond_dims)],
            "phys_dims": list(g.phys_dims),
        },
        "projectors": [_pairs(m) for m in p.projectors],
    }


def peps_from_dict(doc: dict) -> Peps:
    try:
        gd = doc["graph"]
        verts = tuple(gd["vertices"])
        edges = tuple((u, v) for u, v, _ in gd["edges"])
        dims = tuple(int(d) for _, _, d in gd["edges"])
        g = PepsGraph(verts, edges, dims, tuple(int(d) for d in gd["phys_dims"]))
        mats = []
        for v, flat in zip(g.vertices, doc["projectors"]):
            arr = np.array([complex(re, im) for re, im in flat], dtype=complex)
            cols = int(np.prod(g.virtual_dims(v), dtype=np.int64))
            mats.append(arr.reshape(g.phys_dim(v), cols))
        return Peps(g, tuple(mats))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed PEPS document: {exc}") from exc


def dumps_peps(p: Peps, **extra) -> str:
    doc = peps_to_dict(p)
    doc.update(extra)
    return json.dumps(doc)


def loads_peps(text: str) -> tuple[Peps, dict]:
    """Parse a PEPS document; returns the PEPS and any extra top-level fields."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc}") from exc
    extras = {k: v for k, v in doc.items() if k not in ("graph", "projectors")}
    return peps_from_dict(doc), extras


def parse_observable(spec: str, vertices: Sequence) -> Observable:
    """``sz@0`` style spec; ``*`` joins single-site factors on distinct vertices."""
    by_name = {str(v): v for v in vertices}
    factors = []
    for part in spec.split("*"):
        part = part.strip()
        if "@" not in part:
            raise ParseError(f"observable factor {part!r} must look like 'sz@vertex'")
        name, vert = part.split("@", 1)
        name = name.strip().lower()
        if name not in PAULI:
            raise ParseError(f"unknown single-site operator {name!r}; choose from {sorted(PAULI)}")
        if vert.strip() not in by_name:
            raise ParseError(f"unknown vertex {vert!r}")
        factors.append((by_name[vert.strip()], PAULI[name]))
    mat = np.ones((1, 1), dtype=complex)
    for _, m in factors:
        mat = np.kron(mat, m)
    try:
        return Observable(tuple(v for v, _ in factors), mat)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
