"""Dense tensors, closed/open tensor networks and exact contraction.

A network is a tuple of :class:`Tensor` objects plus bonds that glue pairs
of legs together.  Every leg is either bonded exactly once or listed once in
``open_legs``.  Contraction is exact (double precision complex) and proceeds
by pairwise merges, either along a user supplied elimination order or along a
deterministic greedy order that always picks the merge with the smallest
result.

Composition helpers implement the scalar identities used to place network
contraction inside counting classes: tensor product multiplies values,
conjugation conjugates them, and the block direct sum adds them.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ContractionTooLarge, NetworkError, OracleInconsistency

DEFAULT_CAP = 2**26

Bond = tuple[str, int, str, int]
Leg = tuple[str, int]


@dataclass(frozen=True, eq=False)
class Tensor:
    """A dense complex array with an identifier; legs are the array axes."""

    id: str
    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.complex128)
        if any(s < 1 for s in arr.shape):
            raise NetworkError(f"tensor {self.id!r}: leg dimensions must be positive, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NetworkError(f"tensor {self.id!r} has non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "id", str(self.id))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def rank(self) -> int:
        return self.data.ndim

    def with_data(self, data: np.ndarray) -> "Tensor":
        return Tensor(self.id, data)


@dataclass(frozen=True, eq=False)
class TensorNetwork:
    """Tensors joined by bonds ``(idA, legA, idB, legB)`` with ordered open legs."""

    tensors: tuple[Tensor, ...]
    bonds: tuple[Bond, ...] = ()
    open_legs: tuple[Leg, ...] = ()
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        tensors = tuple(self.tensors)
        bonds = tuple((str(a), int(la), str(b), int(lb)) for a, la, b, lb in self.bonds)
        open_legs = tuple((str(t), int(l)) for t, l in self.open_legs)
        object.__setattr__(self, "tensors", tensors)
        object.__setattr__(self, "bonds", bonds)
        object.__setattr__(self, "open_legs", open_legs)
        index = {}
        for t in tensors:
            if t.id in index:
                raise NetworkError(f"duplicate tensor id {t.id!r}")
            index[t.id] = t
        object.__setattr__(self, "_index", index)
        self._validate()

    def _validate(self):
        used: dict[Leg, str] = {}

        def claim(tid, leg, what):
            if tid not in self._index:
                raise NetworkError(f"{what} refers to unknown tensor {tid!r}")
            t = self._index[tid]
            if not 0 <= leg < t.rank:
                raise NetworkError(f"{what} refers to leg {leg} of rank-{t.rank} tensor {tid!r}")
            if (tid, leg) in used:
                raise NetworkError(f"leg ({tid!r}, {leg}) used twice ({used[(tid, leg)]} and {what})")
            used[(tid, leg)] = what

        for k, (a, la, b, lb) in enumerate(self.bonds):
            if a == b and la == lb:
                raise NetworkError(f"bond {k} joins leg ({a!r}, {la}) to itself")
            claim(a, la, f"bond {k}")
            claim(b, lb, f"bond {k}")
            if self._index[a].shape[la] != self._index[b].shape[lb]:
                raise NetworkError(
                    f"bond {k}: dimension mismatch {self._index[a].shape[la]} vs {self._index[b].shape[lb]}"
                )
        for j, (t, l) in enumerate(self.open_legs):
            claim(t, l, f"open leg {j}")
        for t in self.tensors:
            for l in range(t.rank):
                if (t.id, l) not in used:
                    raise NetworkError(f"leg ({t.id!r}, {l}) is neither bonded nor open")

    def tensor(self, tid: str) -> Tensor:
        try:
            return self._index[str(tid)]
        except KeyError:
            raise NetworkError(f"unknown tensor id {tid!r}") from None

    def __contains__(self, tid) -> bool:
        return str(tid) in self._index

    @property
    def ids(self) -> list[str]:
        return [t.id for t in self.tensors]

    @property
    def is_closed(self) -> bool:
        return not self.open_legs

    def is_connected(self) -> bool:
        if not self.tensors:
            return False
        adj: dict[str, set[str]] = {t.id: set() for t in self.tensors}
        for a, _, b, _ in self.bonds:
            adj[a].add(b)
            adj[b].add(a)
        seen = {self.tensors[0].id}
        stack = [self.tensors[0].id]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return len(seen) == len(self.tensors)

    def open_shape(self) -> tuple[int, ...]:
        return tuple(self._index[t].shape[l] for t, l in self.open_legs)


def scalar_network(value: complex, tid: str = "s") -> TensorNetwork:
    """A network made of a single rank-0 tensor."""
    return TensorNetwork((Tensor(tid, np.asarray(value, dtype=complex)),))


def loop_network(matrix, tid: str = "m") -> TensorNetwork:
    """A single square matrix whose two legs are traced together."""
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NetworkError("loop_network needs a square matrix")
    return TensorNetwork((Tensor(tid, m),), ((tid, 0, tid, 1),))


# ---------------------------------------------------------------------------
# contraction engine
# ---------------------------------------------------------------------------


class _Work:
    """Mutable labelled-array bookkeeping used while contracting one network.

    With ``symbolic=True`` only labels are tracked, which lets the greedy
    strategy be replayed to report its order without doing arithmetic.
    """

    def __init__(self, net: TensorNetwork, cap: int, symbolic: bool = False):
        self.cap = cap
        self.symbolic = symbolic
        self.dims: dict[int, int] = {}
        labels: dict[str, list[int]] = {t.id: [None] * t.rank for t in net.tensors}
        for k, (a, la, b, lb) in enumerate(net.bonds):
            labels[a][la] = k
            labels[b][lb] = k
            self.dims[k] = net.tensor(a).shape[la]
        nb = len(net.bonds)
        self.n_bonds = nb
        self.open_labels = []
        for j, (t, l) in enumerate(net.open_legs):
            labels[t][l] = nb + j
            self.dims[nb + j] = net.tensor(t).shape[l]
            self.open_labels.append(nb + j)
        self.trace_bonds = [k for k, (a, _, b, _) in enumerate(net.bonds) if a == b]

        # node ids are ints; originals ranked by lexicographic tensor id
        self.arrays: dict[int, np.ndarray | None] = {}
        self.labels: dict[int, list[int]] = {}
        self.owner: dict[int, set[int]] = {}
        order = sorted(range(len(net.tensors)), key=lambda i: net.tensors[i].id)
        for rank, i in enumerate(order):
            t = net.tensors[i]
            if symbolic:
                labs = [lab for lab in labels[t.id] if labels[t.id].count(lab) == 1]
                arr = None
            else:
                arr, labs = _self_trace(t.data, labels[t.id])
            # unit open legs carry no information; restored by finish()
            unit = [i for i, lab in enumerate(labs) if lab >= nb and self.dims[lab] == 1]
            if unit:
                if arr is not None:
                    arr = arr[tuple(0 if i in unit else slice(None) for i in range(len(labs)))]
                labs = [lab for i, lab in enumerate(labs) if i not in unit]
            self.arrays[rank] = arr
            self.labels[rank] = labs
            for lab in labs:
                self.owner.setdefault(lab, set()).add(rank)
        self.next_node = len(net.tensors)

    def size_after(self, x: int, y: int) -> int:
        lx, ly = self.labels[x], self.labels[y]
        shared = set(lx).intersection(ly)
        size = 1
        for lab in lx:
            if lab not in shared:
                size *= self.dims[lab]
        for lab in ly:
            if lab not in shared:
                size *= self.dims[lab]
        return size

    def neighbours(self, x: int) -> set[int]:
        out = set()
        for lab in self.labels[x]:
            out |= self.owner.get(lab, set())
        out.discard(x)
        return out

    def merge(self, x: int, y: int) -> tuple[int, list[int]]:
        """Merge nodes x and y; returns the new node and the summed labels."""
        size = self.size_after(x, y)
        if size > self.cap:
            raise ContractionTooLarge(size, self.cap)
        lx, ly = self.labels.pop(x), self.labels.pop(y)
        sy = set(ly)
        shared = [lab for lab in lx if lab in sy]
        sh = set(shared)
        ax = [lx.index(lab) for lab in shared]
        ay = [ly.index(lab) for lab in shared]
        ax_arr, ay_arr = self.arrays.pop(x), self.arrays.pop(y)
        arr = None if self.symbolic else np.tensordot(ax_arr, ay_arr, axes=(ax, ay))
        new_labels = [lab for lab in lx if lab not in sh] + [lab for lab in ly if lab not in sh]
        node = self.next_node
        self.next_node += 1
        for lab in shared:
            del self.owner[lab]
        for lab in new_labels:
            s = self.owner[lab]
            s.discard(x)
            s.discard(y)
            s.add(node)
        self.arrays[node] = arr
        self.labels[node] = new_labels
        return node, shared

    def finish(self) -> np.ndarray:
        # disconnected components: outer products, smallest first
        while len(self.arrays) > 1:
            nodes = sorted(self.arrays, key=lambda n: (self.arrays[n].size, n))
            self.merge(nodes[0], nodes[1])
        (node,) = self.arrays
        arr, labs = self.arrays[node], self.labels[node]
        perm = [labs.index(lab) for lab in self.open_labels if self.dims[lab] > 1]
        arr = np.transpose(arr, perm) if perm else arr
        return arr.reshape([self.dims[lab] for lab in self.open_labels])


def _self_trace(arr: np.ndarray, labels: list[int]) -> tuple[np.ndarray, list[int]]:
    labels = list(labels)
    while True:
        seen = {}
        pair = None
        for i, lab in enumerate(labels):
            if lab in seen:
                pair = (seen[lab], i)
                break
            seen[lab] = i
        if pair is None:
            return arr, labels
        i, j = pair
        arr = np.trace(arr, axis1=i, axis2=j)
        labels = [lab for k, lab in enumerate(labels) if k not in (i, j)]


def _greedy(work: _Work) -> list[int]:
    """Merge smallest-result pairs first; ties go to the lower node ranks."""
    order = list(work.trace_bonds)
    heap = []

    def push(x, y):
        if x > y:
            x, y = y, x
        heapq.heappush(heap, (work.size_after(x, y), x, y))

    for x in list(work.arrays):
        for y in work.neighbours(x):
            if x < y:
                push(x, y)
    while heap:
        _, x, y = heapq.heappop(heap)
        if x not in work.arrays or y not in work.arrays:
            continue
        node, shared = work.merge(x, y)
        order.extend(sorted(lab for lab in shared if lab < work.n_bonds))
        for nb in work.neighbours(node):
            push(nb, node)
    return order


def greedy_order(net: TensorNetwork) -> list[int]:
    """The bond order followed by the default greedy strategy."""
    return _greedy(_Work(net, cap=2**62, symbolic=True))


def _check_order(net: TensorNetwork, order: Sequence[int]) -> list[int]:
    order = [int(k) for k in order]
    if sorted(order) != list(range(len(net.bonds))):
        raise NetworkError("elimination order must list every bond index exactly once")
    return order


def contract_network(
    net: TensorNetwork, order: Sequence[int] | None = None, *, cap: int = DEFAULT_CAP
) -> Tensor:
    """Contract ``net`` exactly.

    ``order`` is a sequence of bond indices; each step merges the two tensors
    currently holding that bond (bonds already summed by an earlier merge are
    skipped).  Without an order, the greedy smallest-result strategy is used.
    The result's legs follow ``net.open_legs``; a closed network yields a
    rank-0 tensor.
    """
    work = _Work(net, cap)
    if order is None:
        _greedy(work)
    else:
        for k in _check_order(net, order):
            owners = work.owner.get(k)
            if not owners:
                continue
            if len(owners) == 1:
                continue
            x, y = sorted(owners)
            work.merge(x, y)
    return Tensor("result", work.finish())


def contraction_value(net: TensorNetwork, order: Sequence[int] | None = None, *, cap: int = DEFAULT_CAP) -> complex:
    """The scalar C(T) of a closed network."""
    if not net.is_closed:
        raise NetworkError("contraction value needs a closed network")
    return complex(contract_network(net, order, cap=cap).data)


def contract_pair(net: TensorNetwork, a: str, b: str) -> TensorNetwork:
    """Replace tensors ``a`` and ``b`` by their contraction over all shared bonds."""
    a, b = str(a), str(b)
    if a == b:
        raise NetworkError("contract_pair needs two distinct tensors")
    ta, tb = net.tensor(a), net.tensor(b)
    between = [k for k, (x, _, y, _) in enumerate(net.bonds) if {x, y} == {a, b}]
    axa, axb = [], []
    for k in between:
        x, lx, y, ly = net.bonds[k]
        if x == a:
            axa.append(lx)
            axb.append(ly)
        else:
            axa.append(ly)
            axb.append(lx)
    data = np.tensordot(ta.data, tb.data, axes=(axa, axb))
    rest_a = [l for l in range(ta.rank) if l not in axa]
    rest_b = [l for l in range(tb.rank) if l not in axb]
    remap = {(a, l): i for i, l in enumerate(rest_a)}
    remap.update({(b, l): len(rest_a) + i for i, l in enumerate(rest_b)})
    new_id = f"{a}*{b}"
    while new_id in net and new_id not in (a, b):
        new_id += "'"

    def fix(tid, leg):
        if (tid, leg) in remap:
            return new_id, remap[(tid, leg)]
        return tid, leg

    tensors = []
    for t in net.tensors:
        if t.id == a:
            tensors.append(Tensor(new_id, data))
        elif t.id != b:
            tensors.append(t)
    bonds = []
    for k, (x, lx, y, ly) in enumerate(net.bonds):
        if k in between:
            continue
        bonds.append((*fix(x, lx), *fix(y, ly)))
    open_legs = [fix(t, l) for t, l in net.open_legs]
    return TensorNetwork(tuple(tensors), tuple(bonds), tuple(open_legs))


# ---------------------------------------------------------------------------
# composition identities
# ---------------------------------------------------------------------------


def relabel(net: TensorNetwork, prefix: str) -> TensorNetwork:
    """Prefix every tensor id (keeps structure and values)."""
    tensors = tuple(Tensor(prefix + t.id, t.data) for t in net.tensors)
    bonds = tuple((prefix + a, la, prefix + b, lb) for a, la, b, lb in net.bonds)
    open_legs = tuple((prefix + t, l) for t, l in net.open_legs)
    return TensorNetwork(tensors, bonds, open_legs)


def network_tensor_product(a: TensorNetwork, b: TensorNetwork) -> TensorNetwork:
    """Disjoint union of two closed networks; C(result) = C(a) C(b)."""
    if not (a.is_closed and b.is_closed):
        raise NetworkError("tensor product is defined here for closed networks only")
    la, lb = relabel(a, "a/"), relabel(b, "b/")
    return TensorNetwork(la.tensors + lb.tensors, la.bonds + lb.bonds)


def conjugate_network(a: TensorNetwork) -> TensorNetwork:
    """Entrywise complex conjugate of every tensor; C(result) = conj C(a)."""
    return TensorNetwork(tuple(t.with_data(np.conj(t.data)) for t in a.tensors), a.bonds, a.open_legs)


def same_graph(a: TensorNetwork, b: TensorNetwork) -> bool:
    """True when both networks have identical ids, ranks, bonds and open legs."""
    return (
        a.ids == b.ids
        and a.bonds == b.bonds
        and a.open_legs == b.open_legs
        and all(a.tensor(t).rank == b.tensor(t).rank for t in a.ids)
    )


def _embed(data: np.ndarray, shape: Sequence[int], offset: Sequence[int]) -> np.ndarray:
    out = np.zeros(shape, dtype=complex)
    out[tuple(slice(o, o + s) for o, s in zip(offset, data.shape))] = data
    return out


def _block_sum_same_graph(a: TensorNetwork, b: TensorNetwork) -> TensorNetwork:
    # leg dims add; a-block at offset 0, b-block at the a-dimension offset
    tensors = []
    for ta in a.tensors:
        tb = b.tensor(ta.id)
        shape = [x + y for x, y in zip(ta.shape, tb.shape)]
        data = _embed(ta.data, shape, [0] * ta.rank) + _embed(tb.data, shape, ta.shape)
        if ta.rank == 0:
            data = np.asarray(ta.data + tb.data)
        tensors.append(Tensor(ta.id, data))
    return TensorNetwork(tuple(tensors), a.bonds)


def _with_unit_block(net: TensorNetwork, prefix: str, original_first: bool) -> tuple[list[Tensor], list[Bond]]:
    """Extend every bond by one extra index value carrying a unit network.

    The returned tensors get one extra trailing "selector" leg on the first
    tensor only (added by the caller).  Every other leg dimension grows by
    one; entries with all legs in the original range reproduce the tensor,
    the all-extra entry is 1, and mixed entries vanish.
    """
    out = []
    for t in net.tensors:
        shape = [s + 1 for s in t.shape]
        if t.rank == 0:
            out.append((prefix + t.id, t.data, None))
            continue
        data = _embed(t.data, shape, [0 if original_first else 1] * t.rank)
        corner = tuple((s if original_first else 0) for s in t.shape)
        data[corner] = 1.0
        out.append((prefix + t.id, data, t.shape))
    bonds = [(prefix + x, lx, prefix + y, ly) for x, lx, y, ly in net.bonds]
    return out, bonds


def _block_sum_bridge(a: TensorNetwork, b: TensorNetwork) -> TensorNetwork:
    tensors = []
    bonds: list[Bond] = []
    for net, prefix, select in ((a, "L/", 0), (b, "R/", 1)):
        parts, nbonds = _with_unit_block(net, prefix, original_first=True)
        bonds.extend(nbonds)
        for i, (tid, data, orig_shape) in enumerate(parts):
            if i == 0:
                # attach bridge leg: value `select` picks the original block,
                # the other value picks the unit block
                if orig_shape is None:
                    scalar = complex(data)
                    bridged = np.ones(2, dtype=complex)
                    bridged[select] = scalar
                else:
                    orig = tuple(slice(0, s) for s in orig_shape)
                    bridged = np.zeros(data.shape + (2,), dtype=complex)
                    bridged[orig + (select,)] = data[orig]
                    corner = tuple(orig_shape)
                    bridged[corner + (1 - select,)] = 1.0
                tensors.append(Tensor(tid, bridged))
            else:
                tensors.append(Tensor(tid, data))
    ta, tb = tensors[0], tensors[len(a.tensors)]
    bonds.append((ta.id, ta.rank - 1, tb.id, tb.rank - 1))
    return TensorNetwork(tuple(tensors), tuple(bonds))


def network_direct_sum(a: TensorNetwork, b: TensorNetwork, method: str = "auto") -> TensorNetwork:
    """Block direct sum of two closed connected networks; C(result) = C(a) + C(b).

    ``method="same_graph"`` needs structurally identical networks and stacks
    every leg as ``D_a + D_b`` with a-blocks first.  ``method="bridge"`` works
    for arbitrary connected operands: each operand gets a unit block (bond
    dimension ``D + 1``) and a dimension-2 bridge bond selects which operand
    is "live".  ``"auto"`` picks ``same_graph`` when possible.
    """
    for name, net in (("first", a), ("second", b)):
        if not net.tensors:
            raise NetworkError(f"{name} operand of direct sum is empty")
        if not net.is_closed:
            raise NetworkError(f"{name} operand of direct sum has open legs")
        if not net.is_connected():
            raise NetworkError(f"{name} operand of direct sum is disconnected")
    if method == "auto":
        method = "same_graph" if same_graph(a, b) else "bridge"
    if method == "same_graph":
        if not same_graph(a, b):
            raise NetworkError("same_graph direct sum needs structurally identical networks")
        return _block_sum_same_graph(a, b)
    if method == "bridge":
        return _block_sum_bridge(a, b)
    raise NetworkError(f"unknown direct-sum method {method!r}")


def append_scalar(a: TensorNetwork, c: float) -> TensorNetwork:
    """Network with C = C(a) + c, built from a one-tensor loop of value c."""
    if not c > 0:
        raise NetworkError("append_scalar needs c > 0")
    return network_direct_sum(a, loop_network([[c]], "c"), method="bridge")


def norm_oracle(net: TensorNetwork, *, cap: int = DEFAULT_CAP) -> float:
    """|C(net)|^2 computed as the contraction of net (x) conj(net)."""
    v = contraction_value(network_tensor_product(net, conjugate_network(net)), cap=cap)
    return float(v.real)


def phase_rotate(net: TensorNetwork, phase: complex, tid: str | None = None) -> TensorNetwork:
    """Multiply one tensor (the first, by default) by ``phase``."""
    tid = net.tensors[0].id if tid is None else str(tid)
    return TensorNetwork(
        tuple(t.with_data(t.data * phase) if t.id == tid else t for t in net.tensors), net.bonds, net.open_legs
    )


def _real_part(oracle: Callable[[TensorNetwork], float], net: TensorNetwork, mag: float, tol: float) -> float:
    s = network_direct_sum(net, conjugate_network(net))  # C = 2 Re C(net)
    four_re2 = oracle(s)
    if four_re2 < -tol * max(mag, 1.0) ** 2:
        raise OracleInconsistency(f"oracle returned negative value {four_re2}")
    abs_re = 0.5 * np.sqrt(max(four_re2, 0.0))
    if abs_re <= tol * mag:
        return 0.0
    c = 2.0 * abs_re
    measured = oracle(append_scalar(s, c))  # (2 Re + c)^2
    plus = (2.0 * abs_re + c) ** 2  # = 16 Re^2 if Re > 0
    minus = (c - 2.0 * abs_re) ** 2  # = 0 if Re < 0
    return abs_re if abs(measured - plus) <= abs(measured - minus) else -abs_re


def recover_complex_contraction(
    oracle: Callable[[TensorNetwork], float] | None,
    net: TensorNetwork,
    *,
    tol: float = 1e-8,
) -> complex:
    """Reconstruct C(net) from calls to an oracle returning |C(.)|^2.

    Magnitude from ``oracle(net)``; |Re| from the direct sum with the
    conjugate network; the sign of Re by appending a positive scalar and
    comparing against the two possible predictions; Im by rotating one tensor
    by -i and repeating.  ``oracle=None`` uses :func:`norm_oracle`.
    """
    if oracle is None:
        oracle = norm_oracle
    if not net.is_closed or not net.is_connected():
        raise NetworkError("recovery needs a closed connected network")
    mag2 = oracle(net)
    if mag2 < 0:
        raise OracleInconsistency(f"oracle returned negative value {mag2}")
    mag = float(np.sqrt(mag2))
    if mag == 0.0:
        return 0j
    re = _real_part(oracle, net, mag, tol)
    im = _real_part(oracle, phase_rotate(net, -1j), mag, tol)
    if abs(re * re + im * im - mag2) > 1e3 * tol * mag2 + 1e-300:
        raise OracleInconsistency(f"|Re|^2+|Im|^2 = {re * re + im * im} but oracle magnitude^2 = {mag2}")
    return complex(re, im)


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------


def _flat_pairs(arr: np.ndarray) -> list[list[float]]:
    flat = np.asarray(arr, dtype=complex).reshape(-1)
    return [[float(z.real), float(z.imag)] for z in flat]


def _from_pairs(pairs, shape) -> np.ndarray:
    arr = np.array([complex(re, im) for re, im in pairs], dtype=complex)
    size = int(np.prod(shape)) if len(shape) else 1
    if arr.size != size:
        raise NetworkError(f"expected {size} entries for shape {tuple(shape)}, got {arr.size}")
    return arr.reshape(shape)


def network_to_dict(net: TensorNetwork) -> dict:
    return {
        "tensors": [{"id": t.id, "shape": list(t.shape), "data": _flat_pairs(t.data)} for t in net.tensors],
        "bonds": [list(b) for b in net.bonds],
        "open": [list(l) for l in net.open_legs],
    }


def network_from_dict(doc: dict) -> TensorNetwork:
    try:
        tensors = tuple(
            Tensor(str(t["id"]), _from_pairs(t["data"], [int(s) for s in t["shape"]])) for t in doc["tensors"]
        )
        bonds = tuple((str(a), int(la), str(b), int(lb)) for a, la, b, lb in doc.get("bonds", []))
        open_legs = tuple((str(t), int(l)) for t, l in doc.get("open", []))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, NetworkError):
            raise
        raise NetworkError(f"malformed network document: {exc}") from exc
    return TensorNetwork(tensors, bonds, open_legs)


def dumps_network(net: TensorNetwork) -> str:
    return json.dumps(network_to_dict(net))


def loads_network(text: str) -> TensorNetwork:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkError(f"not valid JSON: {exc}") from exc
    return network_from_dict(doc)
