"""Ground states by imaginary-time cooling, densely and as a 2D network.

``exp(-beta H)|chi>`` is approximated by ``M`` Trotter steps of
``prod_i exp(-dt H_i)``; the same product, written with one tensor per
local exponential (two-site exponentials split by SVD), is a space x time
tensor network whose open boundary is the cooled state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .errors import CapExceeded, DegenerateGroundState, ParseError, ZeroNormError
from .tensornet import DEFAULT_CAP, Tensor, TensorNetwork, contract_network

DIM_CAP = 2**14
DENSE_LIMIT = 2**12
GAP_TOL = 1e-10
HERMITIAN_TOL = 1e-12

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True, eq=False)
class LocalHamiltonian:
    n_sites: int
    terms: tuple[tuple[tuple[int, ...], np.ndarray], ...]
    site_dim: int = 2

    def __post_init__(self):
        clean = []
        for support, m in self.terms:
            support = tuple(int(s) for s in support)
            m = np.array(m, dtype=complex)
            if not support or len(set(support)) != len(support):
                raise ValueError(f"bad term support {support}")
            if any(not 0 <= s < self.n_sites for s in support):
                raise ValueError(f"term support {support} out of range")
            dim = self.site_dim ** len(support)
            if m.shape != (dim, dim):
                raise ValueError(f"term on {support} needs a {dim}x{dim} matrix")
            if not np.allclose(m, m.conj().T, atol=HERMITIAN_TOL, rtol=0):
                raise ValueError(f"term on {support} is not Hermitian")
            m.setflags(write=False)
            clean.append((support, m))
        object.__setattr__(self, "terms", tuple(clean))

    @property
    def dim(self) -> int:
        return self.site_dim**self.n_sites

    def sparse(self) -> sp.csr_matrix:
        d, n = self.site_dim, self.n_sites
        out = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for support, m in self.terms:
            lo, hi = min(support), max(support)
            if support != tuple(range(lo, hi + 1)):
                block = _embed_term(m, [s - lo for s in support], hi - lo + 1, d)
            else:
                block = m
            op = sp.kron(sp.identity(d**lo), sp.kron(sp.csr_matrix(block), sp.identity(d ** (n - hi - 1))))
            out = out + op
        return out.tocsr()

    def dense(self) -> np.ndarray:
        if self.dim > DENSE_LIMIT * 4:
            raise CapExceeded(f"dimension {self.dim} is too large for a dense matrix")
        return self.sparse().toarray()


def _embed_term(m: np.ndarray, support: Sequence[int], width: int, d: int) -> np.ndarray:
    """Operator on ``width`` consecutive sites acting as ``m`` on ``support``."""
    rest = [s for s in range(width) if s not in support]
    full = np.kron(m, np.eye(d ** len(rest))).reshape((d,) * (2 * width))
    order = list(support) + rest
    inv = np.argsort(order)
    return full.transpose(list(inv) + [width + i for i in inv]).reshape(d**width, d**width)


def tfi(n: int, g: float, j: float = 1.0) -> LocalHamiltonian:
    """Open transverse-field Ising chain ``-j sum Z_i Z_{i+1} - g sum X_i``."""
    terms = [((i, i + 1), -j * np.kron(SZ, SZ)) for i in range(n - 1)]
    terms += [((i,), -g * SX) for i in range(n)]
    return LocalHamiltonian(n, tuple(terms))


def heis(n: int) -> LocalHamiltonian:
    """Open Heisenberg chain ``sum X X + Y Y + Z Z``."""
    bond = np.kron(SX, SX) + np.kron(SY, SY) + np.kron(SZ, SZ)
    return LocalHamiltonian(n, tuple(((i, i + 1), bond) for i in range(n - 1)))


def parse_hamiltonian(text: str) -> LocalHamiltonian:
    """Read the ``sites n dim d`` / ``term i [j] <re im ...>`` format or a generator line."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ParseError("empty Hamiltonian description")
    head = lines[0].split()
    try:
        if head[0] == "tfi" and len(lines) == 1:
            n, g = int(head[1]), float(head[2])
            return tfi(n, g, float(head[3]) if len(head) > 3 else 1.0)
        if head[0] == "heis" and len(lines) == 1:
            return heis(int(head[1]))
        if head[0] != "sites" or len(head) != 4 or head[2] != "dim":
            raise ParseError(f"expected 'sites n dim d', got {lines[0]!r}")
        n, d = int(head[1]), int(head[3])
        terms = []
        for ln in lines[1:]:
            tok = ln.split()
            if tok[0] != "term":
                raise ParseError(f"unknown line {ln!r}")
            vals = tok[1:]
            for arity in (1, 2):
                count = 2 * d ** (2 * arity)
                if len(vals) == arity + count:
                    support = tuple(int(s) for s in vals[:arity])
                    nums = [float(v) for v in vals[arity:]]
                    m = np.array(nums[0::2]) + 1j * np.array(nums[1::2])
                    terms.append((support, m.reshape(d**arity, d**arity)))
                    break
            else:
                raise ParseError(f"wrong number of entries in {ln!r}")
        return LocalHamiltonian(n, tuple(terms), d)
    except (IndexError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"bad Hamiltonian description: {exc}") from exc


def format_hamiltonian(h: LocalHamiltonian) -> str:
    lines = [f"sites {h.n_sites} dim {h.site_dim}"]
    for support, m in h.terms:
        nums = " ".join(f"{repr(float(z.real))} {repr(float(z.imag))}" for z in m.reshape(-1))
        lines.append(f"term {' '.join(map(str, support))} {nums}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# exact diagonalization
# ---------------------------------------------------------------------------


def spectrum(h: LocalHamiltonian) -> tuple[np.ndarray, np.ndarray]:
    """All eigenvalues and eigenvectors (dense)."""
    if h.dim > DENSE_LIMIT:
        raise CapExceeded(f"full spectrum limited to dimension {DENSE_LIMIT}")
    return np.linalg.eigh(h.dense())


def exact_ground_state(h: LocalHamiltonian) -> tuple[float, np.ndarray, float]:
    """``(E0, |psi0>, E1 - E0)``; Lanczos above ``DENSE_LIMIT``."""
    if h.dim > DIM_CAP:
        raise CapExceeded(f"dimension {h.dim} exceeds {DIM_CAP}")
    if h.dim <= DENSE_LIMIT:
        w, v = np.linalg.eigh(h.dense())
    else:
        w, v = eigsh(h.sparse(), k=2, which="SA", tol=1e-13)
        order = np.argsort(w)
        w, v = w[order], v[:, order]
    if len(w) < 2:
        raise DegenerateGroundState("a one-dimensional space has no gap")
    gap = float(w[1] - w[0])
    if gap < GAP_TOL:
        raise DegenerateGroundState(f"ground state is degenerate (gap {gap:.3g})")
    psi = v[:, 0]
    k = int(np.argmax(np.abs(psi)))
    psi = psi * (abs(psi[k]) / psi[k])  # fix the global phase
    return float(w[0]), psi, gap


# ---------------------------------------------------------------------------
# Trotterized imaginary time
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoolingSchedule:
    beta: float
    steps: int = 1
    order: str = "first"

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.steps < 1:
            raise ValueError("at least one Trotter step is required")
        if self.order not in ("first", "second"):
            raise ValueError("order must be 'first' or 'second'")

    @property
    def dt(self) -> float:
        return self.beta / self.steps


def term_exponential(m: np.ndarray, tau: float) -> np.ndarray:
    """``exp(-tau m)`` for Hermitian ``m`` via its eigendecomposition."""
    w, u = np.linalg.eigh(m)
    return (u * np.exp(-tau * w)) @ u.conj().T


def trotter_sequence(h: LocalHamiltonian, sched: CoolingSchedule) -> list[tuple[tuple[int, ...], float]]:
    """One Trotter step as ``(support, tau)`` pairs, in application order."""
    dt = sched.dt
    supports = [s for s, _ in h.terms]
    if sched.order == "first" or len(supports) == 1:
        return [(i, dt) for i in range(len(supports))]
    half = [(i, dt / 2) for i in range(len(supports) - 1)]
    return half + [(len(supports) - 1, dt)] + half[::-1]


def plus_state(n: int, d: int = 2) -> np.ndarray:
    return np.full(d**n, d ** (-n / 2), dtype=complex)


def haar_product_state(n: int, rng: np.random.Generator, d: int = 2) -> np.ndarray:
    """Product of independent Haar-random single-site states."""
    psi = np.ones(1, dtype=complex)
    for _ in range(n):
        v = rng.normal(size=d) + 1j * rng.normal(size=d)
        psi = np.kron(psi, v / np.linalg.norm(v))
    return psi


def product_factors(chi: np.ndarray, n: int, d: int = 2, tol: float = 1e-10) -> list[np.ndarray]:
    """Split a product state into single-site vectors (raises if entangled)."""
    rest = np.asarray(chi, dtype=complex).reshape(-1)
    factors = []
    for i in range(n - 1):
        m = rest.reshape(d, -1)
        u, s, vh = np.linalg.svd(m, full_matrices=False)
        if len(s) > 1 and s[1] > tol * s[0]:
            raise ValueError("initial state is not a product state")
        factors.append(u[:, 0] * s[0])
        rest = vh[0]
    factors.append(rest)
    return factors


def apply_local(state: np.ndarray, op: np.ndarray, support: Sequence[int], n: int, d: int) -> np.ndarray:
    psi = state.reshape((d,) * n)
    k = len(support)
    t = op.reshape((d,) * (2 * k))
    out = np.tensordot(t, psi, axes=(list(range(k, 2 * k)), list(support)))
    return np.moveaxis(out, list(range(k)), list(support)).reshape(-1)


def trotter_evolve(
    h: LocalHamiltonian, sched: CoolingSchedule, chi: np.ndarray | None = None
) -> tuple[np.ndarray, float]:
    """Normalized Trotter state and ``log`` of the norm removed along the way.

    ``exp(log_scale) * state`` is the unnormalized Trotter product applied
    to ``chi``.
    """
    n, d = h.n_sites, h.site_dim
    if h.dim > DIM_CAP:
        raise CapExceeded(f"dimension {h.dim} exceeds {DIM_CAP}")
    psi = plus_state(n, d) if chi is None else np.asarray(chi, dtype=complex).reshape(-1).copy()
    if sched.beta == 0:
        return psi, 0.0
    seq = trotter_sequence(h, sched)
    ops = [(h.terms[i][0], term_exponential(h.terms[i][1], tau)) for i, tau in seq]
    log_scale = 0.0
    for _ in range(sched.steps):
        for support, op in ops:
            psi = apply_local(psi, op, support, n, d)
        nrm = float(np.linalg.norm(psi))
        if nrm < 1e-300:
            raise ZeroNormError("imaginary-time evolution annihilated the initial state")
        psi /= nrm
        log_scale += math.log(nrm)
    return psi, log_scale


def imaginary_time_evolve(h: LocalHamiltonian, sched: CoolingSchedule, chi: np.ndarray | None = None) -> np.ndarray:
    """Normalized ``(prod_i exp(-dt H_i))^M |chi>``; ``chi`` defaults to ``|+>^N``."""
    return trotter_evolve(h, sched, chi)[0]


def exact_evolve(h: LocalHamiltonian, beta: float, chi: np.ndarray | None = None) -> np.ndarray:
    """Normalized ``exp(-beta H)|chi>`` from the full spectrum."""
    w, v = spectrum(h)
    psi = plus_state(h.n_sites, h.site_dim) if chi is None else np.asarray(chi, dtype=complex)
    coef = (v.conj().T @ psi) * np.exp(-beta * (w - w[0]))
    out = v @ coef
    return out / np.linalg.norm(out)


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """``|<a|b>|`` for normalized vectors."""
    return float(abs(np.vdot(a, b)))


# ---------------------------------------------------------------------------
# the space x imaginary-time network
# ---------------------------------------------------------------------------


def _split_two_site(op: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    """``op[(oi ii), (oj ij)] = sum_k A[oi, ii, k] B[k, oj, ij]`` with full rank."""
    t = op.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)
    u, s, vh = np.linalg.svd(t)
    keep = max(1, int(np.sum(s > s[0] * 1e-15))) if s[0] > 0 else 1
    root = np.sqrt(s[:keep])
    a = (u[:, :keep] * root).reshape(d, d, keep)
    b = (root[:, None] * vh[:keep]).reshape(keep, d, d)
    return a, b


def cooling_network(h: LocalHamiltonian, sched: CoolingSchedule, chi: np.ndarray | None = None) -> TensorNetwork:
    """Space x time network whose open legs give the unnormalized Trotter vector.

    Site tensors of ``chi`` form the bottom row; every local exponential is
    a tensor (two-site ones split across a bond of rank <= d^2), stacked
    along each site's time line.  Bonds are listed in time order, which is
    also a good elimination order (see :func:`contract_cooling`).
    """
    n, d = h.n_sites, h.site_dim
    for support, _ in h.terms:
        if len(support) > 2 or (len(support) == 2 and abs(support[0] - support[1]) != 1):
            raise ValueError("cooling_network needs single-site and nearest-neighbour terms")
    psi0 = plus_state(n, d) if chi is None else np.asarray(chi, dtype=complex)
    factors = product_factors(psi0, n, d)
    tensors = [Tensor(f"chi{i}", f) for i, f in enumerate(factors)]
    bonds = []
    top = [(f"chi{i}", 0) for i in range(n)]  # current open end of each time line
    if sched.beta > 0:
        seq = trotter_sequence(h, sched)
        pieces = []
        for i, tau in seq:
            support, m = h.terms[i]
            op = term_exponential(m, tau)
            if len(support) == 1:
                pieces.append((support, (op,)))
            else:
                if support[0] > support[1]:
                    op = op.reshape(d, d, d, d).transpose(1, 0, 3, 2).reshape(d * d, d * d)
                    support = support[::-1]
                pieces.append((support, _split_two_site(op, d)))
        for step in range(sched.steps):
            for j, (support, parts) in enumerate(pieces):
                tag = f"{step}_{j}"
                if len(parts) == 1:
                    (s,) = support
                    tid = f"o{tag}_{s}"
                    tensors.append(Tensor(tid, parts[0]))
                    bonds.append((tid, 1, *top[s]))
                    top[s] = (tid, 0)
                    continue
                (si, sj), (a, b) = support, parts
                ta, tb = f"o{tag}_{si}", f"o{tag}_{sj}"
                tensors += [Tensor(ta, a), Tensor(tb, b)]
                bonds.append((ta, 1, *top[si]))
                bonds.append((tb, 2, *top[sj]))
                bonds.append((ta, 2, tb, 0))
                top[si] = (ta, 0)
                top[sj] = (tb, 1)
    return TensorNetwork(tuple(tensors), tuple(bonds), tuple(top))


def contract_cooling(net: TensorNetwork, *, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Contract a cooling network along its time-ordered bond list."""
    return contract_network(net, order=range(len(net.bonds)), cap=cap).data.reshape(-1)


# ---------------------------------------------------------------------------
# convergence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceRow:
    beta: float
    fidelity_error: float
    energy_error: float
    trotter_fidelity_error: float | None = None
    trotter_energy_error: float | None = None
    steps: int | None = None


@dataclass(frozen=True)
class ConvergenceReport:
    rows: tuple[ConvergenceRow, ...]
    gap: float
    slope: float | None

    @property
    def predicted_slope(self) -> float:
        return -2.0 * self.gap


def final_decade_slope(betas: Sequence[float], errors: Sequence[float]) -> float | None:
    """Least-squares slope of ``log(err)`` vs ``beta`` over the last decade of error."""
    b = np.asarray(betas, dtype=float)
    e = np.asarray(errors, dtype=float)
    ok = e > 0
    b, e = b[ok], e[ok]
    if len(b) < 2:
        return None
    last = math.log10(e[-1])
    sel = np.log10(e) <= last + 1.0
    if sel.sum() < 2:
        sel[-2:] = True
    return float(np.polyfit(b[sel], np.log(e[sel]), 1)[0])


def convergence_report(
    h: LocalHamiltonian,
    betas: Sequence[float],
    m_per_beta: float | None = None,
    *,
    chi: np.ndarray | None = None,
    order: str = "second",
    seed: int = 0,
) -> ConvergenceReport:
    """Fidelity and energy error of cooled states against the exact ground state.

    The exact backend expands ``chi`` in the eigenbasis, so the error
    ``sum_{k>0} w_k / sum_k w_k`` has no cancellation even far below machine
    epsilon.  ``chi`` defaults to a seeded Haar-random product state (a
    symmetric start such as ``|+>^N`` can be orthogonal to the first excited
    state, hiding the gap).  With ``m_per_beta`` the Trotter backend runs
    ``round(m_per_beta * beta)`` steps alongside.
    """
    w, v = spectrum(h)
    gap = float(w[1] - w[0])
    if gap < GAP_TOL:
        raise DegenerateGroundState(f"ground state is degenerate (gap {gap:.3g})")
    if chi is None:
        chi = haar_product_state(h.n_sites, np.random.default_rng(seed), h.site_dim)
    amps = v.conj().T @ chi
    rows = []
    for beta in betas:
        wts = np.abs(amps) ** 2 * np.exp(-2 * beta * (w - w[0]))
        total = wts.sum()
        ferr = float(wts[1:].sum() / total)
        eerr = float(np.dot(wts, w - w[0]) / total)
        terr = tee = steps = None
        if m_per_beta is not None:
            steps = max(1, int(round(m_per_beta * beta)))
            psi = imaginary_time_evolve(h, CoolingSchedule(beta, steps, order), chi)
            terr = float(1 - abs(np.vdot(v[:, 0], psi)) ** 2)
            tee = float(np.vdot(psi, h.dense() @ psi).real - w[0])
        rows.append(ConvergenceRow(float(beta), ferr, eerr, terr, tee, steps))
    slope = final_decade_slope([r.beta for r in rows], [r.fidelity_error for r in rows]) if len(rows) > 1 else None
    return ConvergenceReport(tuple(rows), gap, slope)
