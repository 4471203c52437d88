"""Postselected quantum circuits and their exact statevector semantics.

Qubit 0 is the most significant bit of every basis index.  A circuit is a
gate list applied to ``|0...0>`` followed by postselections, each a
``(qubit, outcome)`` projector.  Conditional outcome probabilities below
``POSTSELECT_EPS`` make the circuit an invalid input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CapExceeded, InvalidPostselection, ParseError

QUBIT_CAP = 24
POSTSELECT_EPS = 1e-14
UNITARY_TOL = 1e-10

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)

ARITY = {"H": 1, "X": 1, "CNOT": 2, "CZ": 2, "TOFFOLI": 3, "U1": 1, "U2": 2}
MATRIX_KINDS = {"U1", "U2", "UN"}


@dataclass(frozen=True, eq=False)
class Gate:
    """One gate; ``UN`` is a dense unitary on any number of targets."""

    kind: str
    targets: tuple[int, ...]
    matrix: np.ndarray | None = None

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        if kind not in ARITY and kind != "UN":
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if kind in ARITY and len(self.targets) != ARITY[kind]:
            raise ValueError(f"{kind} takes {ARITY[kind]} targets, got {len(self.targets)}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"{kind} targets must be distinct: {self.targets}")
        if kind in MATRIX_KINDS:
            if self.matrix is None:
                raise ValueError(f"{kind} needs a matrix")
            m = np.array(self.matrix, dtype=complex)
            dim = 2 ** len(self.targets)
            if m.shape != (dim, dim):
                raise ValueError(f"{kind} on {len(self.targets)} qubits needs a {dim}x{dim} matrix")
            if not np.allclose(m.conj().T @ m, np.eye(dim), atol=UNITARY_TOL, rtol=0):
                raise ValueError(f"{kind} matrix is not unitary within {UNITARY_TOL}")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
        elif self.matrix is not None:
            raise ValueError(f"{kind} does not take a matrix")

    def unitary(self) -> np.ndarray:
        """Dense matrix of the gate on its targets (first target most significant)."""
        if self.matrix is not None:
            return self.matrix
        if self.kind == "H":
            return _H
        if self.kind == "X":
            return _X
        k = len(self.targets)
        dim = 2**k
        if self.kind == "CZ":
            return np.diag([1, 1, 1, -1]).astype(complex)
        perm = np.arange(dim)
        perm[dim - 2], perm[dim - 1] = dim - 1, dim - 2  # CNOT / TOFFOLI
        return np.eye(dim, dtype=complex)[perm]


def h(q):
    return Gate("H", (q,))


def x(q):
    return Gate("X", (q,))


def cnot(c, t):
    return Gate("CNOT", (c, t))


def cz(a, b):
    return Gate("CZ", (a, b))


def toffoli(a, b, t):
    return Gate("TOFFOLI", (a, b, t))


def unitary(targets: Sequence[int], matrix) -> Gate:
    targets = tuple(targets)
    kind = {1: "U1", 2: "U2"}.get(len(targets), "UN")
    return Gate(kind, targets, np.asarray(matrix, dtype=complex))


@dataclass(frozen=True, eq=False)
class PostselectedCircuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    postselections: tuple[tuple[int, int], ...] = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "postselections", tuple((int(q), int(v)) for q, v in self.postselections))
        if self.n_qubits < 1:
            raise ValueError("a circuit needs at least one qubit")
        for g in self.gates:
            for q in g.targets:
                if not 0 <= q < self.n_qubits:
                    raise ValueError(f"{g.kind} target {q} out of range for {self.n_qubits} qubits")
        seen = set()
        for q, v in self.postselections:
            if not 0 <= q < self.n_qubits:
                raise ValueError(f"postselected qubit {q} out of range")
            if v not in (0, 1):
                raise ValueError(f"postselection outcome must be 0 or 1, got {v}")
            if q in seen:
                raise ValueError(f"qubit {q} postselected twice")
            seen.add(q)

    @property
    def postselected_qubits(self) -> list[int]:
        return [q for q, _ in self.postselections]

    def without_postselection(self) -> "PostselectedCircuit":
        return PostselectedCircuit(self.n_qubits, self.gates, (), dict(self.meta))

    def with_gates(self, gates: Iterable[Gate], n_qubits: int | None = None, postselections=None):
        return PostselectedCircuit(
            self.n_qubits if n_qubits is None else n_qubits,
            tuple(gates),
            self.postselections if postselections is None else tuple(postselections),
            dict(self.meta),
        )


# ---------------------------------------------------------------------------
# statevector semantics
# ---------------------------------------------------------------------------


def _check_cap(n: int, cap: int):
    if n > cap:
        raise CapExceeded(f"{n} qubits exceed the statevector cap of {cap}")


def apply_gate(state: np.ndarray, gate: Gate, axes: Sequence[int] | None = None) -> np.ndarray:
    """Apply ``gate`` to a state of shape ``(2,)*n``.

    ``axes`` overrides the array axes of the gate's targets.  Works in place
    where possible; always use the returned array.
    """
    n = state.ndim
    kind = gate.kind
    axes = gate.targets if axes is None else tuple(axes)
    if kind in ("X", "CNOT", "TOFFOLI"):
        *controls, t = axes
        lo = [slice(None)] * n
        for c in controls:
            lo[c] = 1
        hi = list(lo)
        lo[t], hi[t] = 0, 1
        tmp = state[tuple(lo)].copy()
        state[tuple(lo)] = state[tuple(hi)]
        state[tuple(hi)] = tmp
        return state
    if kind == "CZ":
        a, b = axes
        sl = [slice(None)] * n
        sl[a] = 1
        sl[b] = 1
        state[tuple(sl)] *= -1
        return state
    if kind == "H":
        v = state.reshape(2 ** axes[0], 2, -1)
        s0, s1 = v[:, 0, :], v[:, 1, :]
        c = 1 / math.sqrt(2)
        s0 += s1
        s0 *= c
        s1 *= -2 * c
        s1 += s0
        return state
    targets = list(axes)
    k = len(targets)
    if k == 1:
        # (left, 2, right) view: out_i = sum_j u_ij s_j without transposes
        u = gate.unitary()
        v = state.reshape(2 ** targets[0], 2, -1)
        s0, s1 = v[:, 0, :], v[:, 1, :]
        out = np.empty_like(v)
        np.add(u[0, 0] * s0, u[0, 1] * s1, out=out[:, 0, :])
        np.add(u[1, 0] * s0, u[1, 1] * s1, out=out[:, 1, :])
        return out.reshape(state.shape)
    moved = np.moveaxis(state, targets, list(range(k)))
    shape = moved.shape
    out = gate.unitary() @ moved.reshape(2**k, -1)
    return np.ascontiguousarray(np.moveaxis(out.reshape(shape), list(range(k)), targets))


def evolve(c: PostselectedCircuit, *, cap: int = QUBIT_CAP) -> np.ndarray:
    """``U|0...0>`` as a flat vector, ignoring postselections.

    Qubits join the working array only when a gate first touches them
    (until then they are known to be ``|0>``), so early gates run on a
    smaller state.
    """
    _check_cap(c.n_qubits, cap)
    axis: dict[int, int] = {}
    state = np.ones((), dtype=complex)

    def activate(q):
        nonlocal state
        grown = np.zeros(state.shape + (2,), dtype=complex)
        grown[..., 0] = state
        state = grown
        axis[q] = len(axis)

    for g in c.gates:
        for q in g.targets:
            if q not in axis:
                activate(q)
        state = apply_gate(state, g, [axis[q] for q in g.targets])
    for q in range(c.n_qubits):
        if q not in axis:
            activate(q)
    return state.transpose([axis[q] for q in range(c.n_qubits)]).reshape(-1)


def project(state: np.ndarray, n: int, postselections) -> np.ndarray:
    """Unnormalized vector after applying the postselection projectors."""
    out = state.reshape((2,) * n).copy()
    for q, v in postselections:
        sl = [slice(None)] * n
        sl[q] = 1 - v
        out[tuple(sl)] = 0
    return out.reshape(-1)


def simulate(c: PostselectedCircuit, *, cap: int = QUBIT_CAP) -> tuple[np.ndarray, float]:
    """Final normalized state and joint postselection success probability.

    Postselections are applied in order after all gates; each conditional
    probability must be at least ``POSTSELECT_EPS``.
    """
    n = c.n_qubits
    state = evolve(c, cap=cap).reshape((2,) * n)
    p_success = 1.0
    for q, v in c.postselections:
        sl = [slice(None)] * n
        sl[q] = 1 - v
        drop = state[tuple(sl)]
        p_cond = 1.0 - float(np.vdot(drop, drop).real)
        if p_cond < POSTSELECT_EPS:
            raise InvalidPostselection(f"postselecting qubit {q} on {v} has probability {p_cond:.3g}")
        state[tuple(sl)] = 0
        state /= math.sqrt(p_cond)
        p_success *= p_cond
    return state.reshape(-1), p_success


def _bits(x, n: int) -> int:
    if isinstance(x, (int, np.integer)):
        if not 0 <= x < 2**n:
            raise ValueError(f"basis index {x} out of range")
        return int(x)
    s = "".join(str(int(b)) for b in x) if not isinstance(x, str) else x
    if len(s) != n or set(s) - {"0", "1"}:
        raise ValueError(f"bitstring {x!r} does not match {n} qubits")
    return int(s, 2)


def amplitude(c: PostselectedCircuit, x, *, cap: int = QUBIT_CAP) -> complex:
    """``<x|U|0...0>`` for a postselection-free circuit."""
    if c.postselections:
        raise ValueError("amplitude is defined for postselection-free circuits")
    return complex(evolve(c, cap=cap)[_bits(x, c.n_qubits)])


def marginal_expectation(state: np.ndarray, n: int, qubit: int, op: np.ndarray) -> float:
    """<state| op_qubit |state> / <state|state> for a single-qubit Hermitian op."""
    psi = state.reshape((2,) * n)
    moved = np.moveaxis(psi, qubit, 0).reshape(2, -1)
    rho = moved @ moved.conj().T
    return float(np.real(np.trace(rho @ op)) / np.real(np.trace(rho)))


# ---------------------------------------------------------------------------
# multi-controlled X
# ---------------------------------------------------------------------------


def mcx_clean(controls: Sequence[int], target: int, scratch: Sequence[int]) -> list[Gate]:
    """target ^= AND(controls) using ``len(controls)-2`` scratch qubits in |0>."""
    k = len(controls)
    if k == 0:
        return [x(target)]
    if k == 1:
        return [cnot(controls[0], target)]
    if k == 2:
        return [toffoli(controls[0], controls[1], target)]
    if len(scratch) < k - 2:
        raise ValueError(f"{k} controls need {k - 2} scratch qubits")
    s = list(scratch[: k - 2])
    up = [toffoli(controls[0], controls[1], s[0])]
    for i in range(2, k - 1):
        up.append(toffoli(controls[i], s[i - 2], s[i - 1]))
    return up + [toffoli(controls[-1], s[-1], target)] + up[::-1]


def mcx_borrowed(controls: Sequence[int], target: int, borrowed: Sequence[int]) -> list[Gate]:
    """target ^= AND(controls) using ``k-2`` borrowed qubits in any state.

    Borrowed qubits are returned to their input values, so any qubit not
    among controls/target can serve.  Uses ``4(k-2)`` Toffolis for k >= 3.
    """
    k = len(controls)
    if k <= 2:
        return mcx_clean(controls, target, ())
    if len(borrowed) < k - 2:
        raise ValueError(f"{k} controls need {k - 2} borrowed qubits")
    c, a = list(controls), list(borrowed[: k - 2])
    down = [toffoli(c[i], a[i - 2], a[i - 1]) for i in range(k - 2, 1, -1)]
    middle = down + [toffoli(c[0], c[1], a[0])] + down[::-1]
    tip = toffoli(c[-1], a[-1], target)
    return [tip] + middle + [tip] + middle


# ---------------------------------------------------------------------------
# CNF oracle circuits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CNF:
    """CNF formula; literals are DIMACS style nonzero ints over ``1..n_vars``."""

    n_vars: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(tuple(int(l) for l in c) for c in self.clauses))
        for c in self.clauses:
            for l in c:
                if l == 0 or abs(l) > self.n_vars:
                    raise ValueError(f"literal {l} out of range for {self.n_vars} variables")

    def evaluate(self, bits: Sequence[int]) -> bool:
        return all(any((bits[abs(l) - 1] == 1) == (l > 0) for l in c) for c in self.clauses)


def parse_dimacs(text: str) -> CNF:
    n_vars = None
    clauses = []
    current: list[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) < 4 or parts[1] != "cnf":
                raise ParseError(f"bad DIMACS header: {line!r}")
            n_vars = int(parts[2])
            continue
        try:
            lits = [int(tok) for tok in line.split()]
        except ValueError as exc:
            raise ParseError(f"bad clause line {line!r}") from exc
        for l in lits:
            if l == 0:
                clauses.append(tuple(current))
                current = []
            else:
                current.append(l)
    if current:
        clauses.append(tuple(current))
    if n_vars is None:
        raise ParseError("DIMACS input lacks a 'p cnf' header")
    try:
        return CNF(n_vars, tuple(clauses))
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def format_dimacs(f: CNF) -> str:
    lines = [f"p cnf {f.n_vars} {len(f.clauses)}"]
    lines += [" ".join(str(l) for l in c) + " 0" for c in f.clauses]
    return "\n".join(lines) + "\n"


def cnf_oracle_circuit(f: CNF, *, cap: int = QUBIT_CAP) -> PostselectedCircuit:
    """Circuit preparing ``2^{-n/2} sum_x |x>_A |f(x)>_B |0>_anc``.

    Register A is qubits ``0..n-1``, B is qubit ``n``, then one ancilla per
    clause.  Each clause value is the negation of the AND of its negated
    literals; B receives the AND of all clause values and the clause
    ancillas are uncomputed.  Wide ANDs borrow idle qubits (restored
    afterwards), so clauses of any width keep the model count exact; extra
    scratch qubits are appended only when too few idle qubits exist.
    """
    n, m = f.n_vars, len(f.clauses)
    b = n
    anc = list(range(n + 1, n + 1 + m))
    clauses = [list(dict.fromkeys(c)) for c in f.clauses]
    base = n + 1 + m
    need = max([len(c) - 2 - (base - len(c) - 1) for c in clauses] + [m - 2 - (base - m - 1), 0])
    n_qubits = base + need
    _check_cap(n_qubits, cap)

    def mcx(controls, target):
        busy = set(controls) | {target}
        idle = [q for q in range(n_qubits) if q not in busy]
        return mcx_borrowed(controls, target, idle)

    compute: list[Gate] = []
    for j, lits in enumerate(clauses):
        if any(-l in lits for l in lits):
            compute.append(x(anc[j]))  # tautology
            continue
        flips = [x(l - 1) for l in lits if l > 0]
        compute += flips
        compute += mcx([abs(l) - 1 for l in lits], anc[j])
        compute += flips
        compute.append(x(anc[j]))
    gates = [h(q) for q in range(n)]
    gates += compute
    gates += mcx(anc, b)
    gates += compute[::-1]
    return PostselectedCircuit(n_qubits, tuple(gates), (), {"output_qubit": b, "n_vars": n})


def brute_force_count(f: CNF) -> int:
    """Number of satisfying assignments by enumerating the truth table."""
    count = 0
    for idx in range(2**f.n_vars):
        bits = [(idx >> (f.n_vars - 1 - i)) & 1 for i in range(f.n_vars)]
        count += f.evaluate(bits)
    return count


# ---------------------------------------------------------------------------
# line-based file format
# ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return repr(float(v))


def format_circuit(c: PostselectedCircuit, header: Sequence[str] = ()) -> str:
    lines = [f"# {h_}" for h_ in header]
    lines.append(f"qubits {c.n_qubits}")
    for g in c.gates:
        tg = " ".join(str(q) for q in g.targets)
        if g.kind in MATRIX_KINDS:
            nums = " ".join(f"{_fmt(z.real)} {_fmt(z.imag)}" for z in g.matrix.reshape(-1))
            if g.kind == "UN":
                lines.append(f"un {len(g.targets)} {tg}  {nums}")
            else:
                lines.append(f"{g.kind.lower()} {tg}  {nums}")
        else:
            lines.append(f"{g.kind.lower()} {tg}")
    for q, v in c.postselections:
        lines.append(f"post {q} {v}")
    return "\n".join(lines) + "\n"


def _complex_entries(tokens: list[str], count: int, line: str) -> np.ndarray:
    if len(tokens) != 2 * count:
        raise ParseError(f"expected {2 * count} numbers in {line!r}, got {len(tokens)}")
    vals = [float(t) for t in tokens]
    return np.array([complex(vals[2 * i], vals[2 * i + 1]) for i in range(count)])


def parse_circuit(text: str) -> tuple[PostselectedCircuit, dict[str, str]]:
    """Parse the line format; returns the circuit and ``# key value`` headers.

    A ``post`` line may appear mid-circuit as long as no later gate touches
    that qubit (it then commutes to the end).
    """
    n = None
    gates: list[Gate] = []
    posts: list[tuple[int, int]] = []
    header: dict[str, str] = {}
    frozen: set[int] = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split(None, 1)
            if parts:
                header[parts[0]] = parts[1].strip() if len(parts) > 1 else ""
            continue
        tok = line.split()
        op = tok[0].lower()
        try:
            if op == "qubits":
                n = int(tok[1])
                continue
            if n is None:
                raise ParseError(f"line {lineno}: 'qubits n' must come first")
            if op == "post":
                posts.append((int(tok[1]), int(tok[2])))
                frozen.add(int(tok[1]))
                continue
            if op in ("h", "x", "cnot", "cz", "toffoli"):
                g = Gate(op.upper(), tuple(int(t) for t in tok[1:]))
            elif op == "u1":
                g = Gate("U1", (int(tok[1]),), _complex_entries(tok[2:], 4, line).reshape(2, 2))
            elif op == "u2":
                g = Gate("U2", (int(tok[1]), int(tok[2])), _complex_entries(tok[3:], 16, line).reshape(4, 4))
            elif op == "un":
                k = int(tok[1])
                targets = tuple(int(t) for t in tok[2 : 2 + k])
                dim = 2**k
                g = Gate("UN", targets, _complex_entries(tok[2 + k :], dim * dim, line).reshape(dim, dim))
            else:
                raise ParseError(f"line {lineno}: unknown operation {op!r}")
        except ParseError:
            raise
        except (ValueError, IndexError) as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
        if frozen.intersection(g.targets):
            raise ParseError(f"line {lineno}: gate touches an already postselected qubit")
        gates.append(g)
    if n is None:
        raise ParseError("circuit file lacks a 'qubits n' line")
    try:
        return PostselectedCircuit(n, tuple(gates), tuple(posts)), header
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
