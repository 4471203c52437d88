"""Exact path sums for Toffoli-Hadamard circuits.

A path is the string of output bits chosen at each H gate (in gate order,
first H most significant).  Classical gates act deterministically between
branch points, and an H taking bit ``b`` to bit ``r`` contributes
``(-1)^{b r} / sqrt 2``.  Every path therefore carries weight ``+-1`` after
scaling by ``2^{h/2}``, and amplitudes are ``(plus - minus) / 2^{h/2}``
with integer counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .circuits import Gate, PostselectedCircuit
from .errors import CapExceeded

TH_KINDS = {"H", "X", "CNOT", "TOFFOLI"}
H_CAP = 24
QUBIT_CAP = 20


@dataclass(frozen=True, eq=False)
class THCircuit:
    n_qubits: int
    gates: tuple[Gate, ...]
    postselections: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        for g in self.gates:
            if g.kind not in TH_KINDS:
                raise ValueError(f"gate {g.kind} is outside the Toffoli-Hadamard set")
        # reuse the circuit validator for ranges and duplicate postselections
        PostselectedCircuit(self.n_qubits, self.gates, self.postselections)

    @property
    def h_count(self) -> int:
        return sum(g.kind == "H" for g in self.gates)

    @classmethod
    def from_circuit(cls, c: PostselectedCircuit) -> "THCircuit":
        return cls(c.n_qubits, c.gates, c.postselections)

    def to_circuit(self) -> PostselectedCircuit:
        return PostselectedCircuit(self.n_qubits, self.gates, self.postselections)


@dataclass(frozen=True)
class PathCount:
    plus: int
    minus: int
    h_count: int

    @property
    def weight(self) -> int:
        """``plus - minus``: the amplitude times ``2^{h/2}``."""
        return self.plus - self.minus

    @property
    def amplitude(self) -> float:
        return self.weight / 2 ** (self.h_count / 2)

    @property
    def probability(self) -> Fraction:
        return Fraction(self.weight**2, 2**self.h_count)


def _as_th(c) -> THCircuit:
    return c if isinstance(c, THCircuit) else THCircuit.from_circuit(c)


def _endpoints(c: THCircuit) -> tuple[np.ndarray, np.ndarray]:
    """Final basis index and sign (+1/-1) of every path."""
    h = c.h_count
    if h > H_CAP:
        raise CapExceeded(f"{h} H gates exceed the path-enumeration cap of {H_CAP}")
    n = c.n_qubits
    paths = np.arange(2**h, dtype=np.int64)
    idx = np.zeros(2**h, dtype=np.int64)
    neg = np.zeros(2**h, dtype=bool)
    branch = 0
    for g in c.gates:
        masks = [np.int64(1) << (n - 1 - q) for q in g.targets]
        if g.kind == "H":
            r = ((paths >> (h - 1 - branch)) & 1).astype(bool)
            b = (idx & masks[0]) != 0
            neg ^= b & r
            idx = np.where(r, idx | masks[0], idx & ~masks[0])
            branch += 1
            continue
        *controls, target = masks
        on = np.ones(2**h, dtype=bool)
        for m in controls:
            on &= (idx & m) != 0
        idx = np.where(on, idx ^ target, idx)
    return idx, np.where(neg, -1, 1)


def path_counts(c) -> tuple[np.ndarray, np.ndarray, int]:
    """Arrays ``plus[x]``, ``minus[x]`` over all basis states, and ``h``."""
    c = _as_th(c)
    if c.n_qubits > QUBIT_CAP:
        raise CapExceeded(f"{c.n_qubits} qubits exceed the path-sum cap of {QUBIT_CAP}")
    idx, sign = _endpoints(c)
    size = 2**c.n_qubits
    plus = np.bincount(idx[sign > 0], minlength=size)
    minus = np.bincount(idx[sign < 0], minlength=size)
    return plus, minus, c.h_count


def _index(x, n: int) -> int:
    if isinstance(x, (int, np.integer)):
        return int(x)
    bits = [int(b) for b in x]
    if len(bits) != n:
        raise ValueError(f"bitstring of length {len(bits)} for {n} qubits")
    return int("".join(map(str, bits)), 2) if bits else 0


def path_amplitude(c, x) -> PathCount:
    c = _as_th(c)
    plus, minus, h = path_counts(c)
    i = _index(x, c.n_qubits)
    return PathCount(int(plus[i]), int(minus[i]), h)


def probability(c, x) -> Fraction:
    return path_amplitude(c, x).probability


def _consistent(c: THCircuit) -> np.ndarray:
    """Basis indices consistent with every postselection."""
    n = c.n_qubits
    xs = np.arange(2**n, dtype=np.int64)
    keep = np.ones(2**n, dtype=bool)
    for q, v in c.postselections:
        keep &= ((xs >> (n - 1 - q)) & 1) == v
    return xs[keep]


def postselected_norm(c) -> Fraction:
    """Exact success probability: sum of ``p_x`` over consistent ``x``."""
    c = _as_th(c)
    plus, minus, h = path_counts(c)
    xs = _consistent(c)
    total = sum(int(w) ** 2 for w in (plus[xs] - minus[xs]))
    return Fraction(total, 2**h)


def format_dyadic(p: Fraction) -> str:
    """``p/2^k`` with ``p`` odd (or ``0/2^0``)."""
    p = Fraction(p)
    num, den = p.numerator, p.denominator
    k = den.bit_length() - 1
    if 1 << k != den:
        raise ValueError(f"{p} is not dyadic")
    return f"{num}/2^{k}"


@dataclass(frozen=True)
class CountingCheck:
    s: int
    K: int
    sum_f: int
    h_count: int
    norm: Fraction
    literal: bool

    @property
    def identity_holds(self) -> bool:
        return self.sum_f == self.s - self.K

    @property
    def norm_matches(self) -> bool:
        return Fraction(self.sum_f, 2**self.h_count) == self.norm


LITERAL_DOMAIN_CAP = 2**22


def counting_identity_check(c, *, literal: bool | None = None) -> CountingCheck:
    """Count ``f(x, z, z') = [both paths end at x] * sign(z) * sign(z')``.

    The domain is every consistent ``x`` with every pair of paths, so
    ``K = |x| * 4^h``; ``s`` counts pairs ``(xi, t)``, ``t in {0, 1}``, with
    ``f(xi) >= t``, which forces ``sum f = s - K``.  With ``literal`` (default
    when ``K`` fits ``LITERAL_DOMAIN_CAP``) the values of ``f`` are
    materialised and counted one by one; otherwise counts are grouped per
    ``x`` from the per-path endpoint table.
    """
    c = _as_th(c)
    h = c.h_count
    plus, minus, _ = path_counts(c)
    xs = _consistent(c)
    K = len(xs) * 4**h
    if literal is None:
        literal = K <= LITERAL_DOMAIN_CAP
    if literal:
        idx, sign = _endpoints(c)
        n_pos = n_neg = n_zero = 0
        for x in xs:
            hit = np.where(idx == x, sign, 0).astype(np.int64)
            f = np.outer(hit, hit)
            n_pos += int((f == 1).sum())
            n_neg += int((f == -1).sum())
            n_zero += int((f == 0).sum())
        assert n_pos + n_neg + n_zero == K
    else:
        p, m = plus[xs].astype(object), minus[xs].astype(object)
        n_pos = int(sum(p * p + m * m))
        n_neg = int(sum(2 * p * m))
        n_zero = K - n_pos - n_neg
    sum_f = n_pos - n_neg
    s = 2 * n_pos + n_zero
    return CountingCheck(s, K, sum_f, h, postselected_norm(c), literal)
