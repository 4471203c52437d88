"""Command-line front end: ``pepsdual <verb> ...``.

Exit codes: 0 success, 2 parse error, 3 resource cap, 4 numeric failure.
Everything printed to stdout is collected and written once at the end.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
from contextlib import redirect_stderr
from typing import Sequence

import numpy as np

from . import circuits, cooling, duality, pathsum, peps, tensornet, verify
from .errors import (
    CapExceeded,
    ContractionTooLarge,
    DegenerateGroundState,
    InvalidPostselection,
    NumericToleranceError,
    OracleInconsistency,
    ParseError,
    ZeroNormError,
)

EXIT_OK, EXIT_PARSE, EXIT_CAP, EXIT_NUMERIC = 0, 2, 3, 4
COUNTSAT_MAX_VARS = 10
COUNTSAT_TOL = 1e-6


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParseError(message)


def fmt(x: float) -> str:
    """Shortest round-trip repr, with integral values printed as integers."""
    x = float(x)
    if x == 0:
        return "0"
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc


class Output:
    """Text lines plus a parallel JSON record."""

    def __init__(self):
        self.lines: list[str] = []
        self.data: dict = {}

    def add(self, line: str, **data):
        self.lines.append(line)
        self.data.update(data)

    def render(self, form: str) -> str:
        if form == "json":
            return json.dumps(self.data, sort_keys=True) + "\n"
        return "".join(ln + "\n" for ln in self.lines)


# ---------------------------------------------------------------------------
# verbs
# ---------------------------------------------------------------------------


def cmd_contract(args, out: Output):
    net = tensornet.loads_network(_read(args.file))
    if not net.is_closed:
        raise ParseError("contract needs a closed network (no open legs)")
    c = tensornet.contraction_value(net, cap=args.cap)
    out.add(f"{fmt(c.real)} {fmt(c.imag)}", re=float(c.real), im=float(c.imag))


def cmd_norm(args, out: Output):
    p, _ = peps.loads_peps(_read(args.file))
    n2 = peps.norm_squared(p, cap=args.cap, strategy=args.strategy)
    out.add(fmt(n2), norm_squared=n2)


def cmd_nev(args, out: Output):
    p, _ = peps.loads_peps(_read(args.file))
    obs = peps.parse_observable(args.obs, p.graph.vertices)
    val = peps.nev(p, obs, cap=args.cap, strategy=args.strategy)
    out.add(fmt(val), nev=val)


def _write_or_print(text: str, path: str | None, out: Output, summary: str, **data):
    if path is None:
        out.lines.extend(text.rstrip("\n").split("\n"))
        out.data.update(data, document=text)
        return
    with open(path, "w") as fh:
        fh.write(text)
    out.add(f"wrote {path}: {summary}", path=path, **data)


def cmd_compile(args, out: Output):
    text = _read(args.file)
    if args.direction == "c2p":
        c, _ = circuits.parse_circuit(text)
        cp = duality.circuit_to_peps(c, args.mode)
        doc = peps.dumps_peps(cp.peps, scale=cp.scale, output_sites=list(cp.output_sites), mode=cp.mode)
        n = len(cp.peps.graph.vertices)
        _write_or_print(doc, args.output, out, f"{n} vertices, scale {fmt(cp.scale)}", scale=cp.scale, vertices=n)
    else:
        p, _ = peps.loads_peps(text)
        cc = duality.peps_to_circuit(p, gather=not args.no_gather)
        outq = ";".join(f"{v}:{','.join(map(str, qs))}" for v, qs in cc.output_qubits.items())
        header = [f"scale {fmt(cc.scale)}", f"output_qubits {outq}"]
        doc = circuits.format_circuit(cc.circuit, header)
        n = cc.circuit.n_qubits
        _write_or_print(doc, args.output, out, f"{n} qubits, scale {fmt(cc.scale)}", scale=cc.scale, qubits=n)


def cmd_pathsum(args, out: Output):
    c, _ = circuits.parse_circuit(_read(args.file))
    th = pathsum.THCircuit.from_circuit(c)
    plus, minus, h = pathsum.path_counts(th)
    n = th.n_qubits
    out.add(f"qubits {n} hadamards {h}", qubits=n, hadamards=h)
    if args.x is not None:
        xs = [pathsum._index(args.x, n)]
    else:
        xs = [int(i) for i in np.flatnonzero((plus != 0) | (minus != 0))]
    rows = []
    for i in xs:
        pc = pathsum.PathCount(int(plus[i]), int(minus[i]), h)
        bits = format(i, f"0{n}b") if n else ""
        prob = pathsum.format_dyadic(pc.probability)
        out.lines.append(f"{bits} plus {pc.plus} minus {pc.minus} p {prob}")
        rows.append({"x": bits, "plus": pc.plus, "minus": pc.minus, "p": prob})
    out.data["paths"] = rows
    chk = pathsum.counting_identity_check(th)
    out.add(f"norm {pathsum.format_dyadic(chk.norm)}", norm=pathsum.format_dyadic(chk.norm))
    ok = chk.identity_holds and chk.norm_matches
    out.add(
        f"count s {chk.s} K {chk.K} sum_f {chk.sum_f} identity {'ok' if ok else 'FAILED'}",
        s=chk.s,
        K=chk.K,
        sum_f=chk.sum_f,
        identity=ok,
    )
    if not ok:
        raise NumericToleranceError("counting identity failed")


def count_models(f: circuits.CNF, *, cap: int = tensornet.DEFAULT_CAP, tol: float = COUNTSAT_TOL):
    """``(s, <sz>)``: the model count read off the compiled PEPS.

    Raises :class:`NumericToleranceError` when ``2^{n-1}(1 - <sz>)`` is
    farther than ``tol`` from an integer.
    """
    if f.n_vars > COUNTSAT_MAX_VARS:
        raise CapExceeded(f"{f.n_vars} variables exceed the limit of {COUNTSAT_MAX_VARS}")
    c = circuits.cnf_oracle_circuit(f)
    cp = duality.circuit_to_peps(c, "spacetime")
    site = cp.output_sites[c.meta["output_qubit"]]
    z = peps.nev(cp.peps, peps.Observable((site,), peps.PAULI["sz"]), cap=cap, strategy="state")
    raw = 2 ** (f.n_vars - 1) * (1 - z)
    s = int(round(raw))
    if abs(raw - s) >= tol:
        raise NumericToleranceError(f"count {raw!r} is {abs(raw - s):.3g} from an integer")
    return s, z


def cmd_countsat(args, out: Output):
    f = circuits.parse_dimacs(_read(args.file))
    s, _ = count_models(f, cap=args.cap, tol=args.tol if args.tol is not None else COUNTSAT_TOL)
    out.add(str(s), count=s, n_vars=f.n_vars)


def cmd_majority(args, out: Output):
    f = circuits.parse_dimacs(_read(args.file))
    s, z = count_models(f, cap=args.cap, tol=args.tol if args.tol is not None else COUNTSAT_TOL)
    # the rounded count decides, so exact ties (<sz> = 0) cannot flip on roundoff
    yes = 2 * s >= 2**f.n_vars
    out.add("yes" if yes else "no", majority=yes)


def _ground_projector(h: cooling.LocalHamiltonian):
    """Orthonormal basis of the ground space, its energy and the gap above it."""
    w, v = cooling.spectrum(h)
    k = int(np.sum(w - w[0] <= cooling.GAP_TOL))
    gap = float(w[k] - w[0]) if k < len(w) else 0.0
    return v[:, :k], float(w[0]), gap


def cmd_cool(args, out: Output):
    spec = args.hamiltonian
    text = _read(spec) if os.path.exists(spec) else spec
    h = cooling.parse_hamiltonian(text)
    if args.chi == "plus":
        chi = cooling.plus_state(h.n_sites, h.site_dim)
    else:
        chi = cooling.haar_product_state(h.n_sites, np.random.default_rng(args.seed), h.site_dim)
    basis, e0, gap = _ground_projector(h)
    out.add(f"sites {h.n_sites} E0 {e0:.12f} gap {gap:.12f} ground_degeneracy {basis.shape[1]}",
            e0=e0, gap=gap, degeneracy=int(basis.shape[1]))

    def fid(psi):
        return float(np.linalg.norm(basis.conj().T @ psi))

    out.lines.append("beta steps fidelity_trotter fidelity_exact")
    rows = []
    for beta in np.linspace(0.0, args.beta, args.points):
        steps = max(1, int(round(args.steps * beta / args.beta))) if args.beta > 0 else 1
        sched = cooling.CoolingSchedule(float(beta), steps, args.order)
        ft = fid(cooling.imaginary_time_evolve(h, sched, chi))
        fe = fid(cooling.exact_evolve(h, float(beta), chi))
        out.lines.append(f"{beta:.6g} {steps} {ft:.12f} {fe:.12f}")
        rows.append({"beta": float(beta), "steps": steps, "fidelity_trotter": ft, "fidelity_exact": fe})
    out.data["table"] = rows
    sched = cooling.CoolingSchedule(args.beta, args.steps, args.order)
    net = cooling.contract_cooling(cooling.cooling_network(h, sched, chi), cap=args.cap)
    dense, log_scale = cooling.trotter_evolve(h, sched, chi)
    ref = dense * np.exp(log_scale)
    rel = float(np.linalg.norm(net - ref) / np.linalg.norm(ref))
    out.add(f"network_vs_dense rel_err {rel:.3e}", network_vs_dense=rel)
    out.add(f"final_fidelity {rows[-1]['fidelity_trotter']:.12f}", final_fidelity=rows[-1]["fidelity_trotter"])


def cmd_verify(args, out: Output):
    numbers = None
    if args.only:
        try:
            numbers = [int(k) for k in args.only.split(",")]
        except ValueError as exc:
            raise ParseError(f"bad --only list {args.only!r}") from exc
        bad = [k for k in numbers if k not in verify.CRITERIA]
        if bad:
            raise ParseError(f"unknown criteria {bad}")
    results = verify.run(numbers, seed=args.seed, quick=args.quick)
    for r in results:
        out.lines.append(r.line())
    out.data["criteria"] = [{"number": r.number, "passed": r.passed, "detail": r.detail} for r in results]
    if not all(r.passed for r in results):
        raise NumericToleranceError("some criteria failed")


# ---------------------------------------------------------------------------
# argument parsing and dispatch
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for every random choice (default 0)")
    common.add_argument("--cap", type=int, default=tensornet.DEFAULT_CAP, help="max entries of any intermediate tensor")
    common.add_argument("--tol", type=float, default=None, help="numeric gate (countsat/majority rounding residue)")
    common.add_argument("--format", choices=("text", "json"), default="text")

    parser = _Parser(prog="pepsdual", description="Exact PEPS / postselected-circuit toolkit.")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("contract", parents=[common], help="contract a closed tensor network file")
    p.add_argument("file")
    p.set_defaults(func=cmd_contract)

    for name, func, helptext in (("norm", cmd_norm, "squared norm of a PEPS"), ("nev", cmd_nev, "normalized expectation")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("file")
        p.add_argument("--strategy", choices=("greedy", "state"), default="greedy")
        if name == "nev":
            p.add_argument("--obs", required=True, help="observable such as sz@0 or sz@0*sx@1")
        p.set_defaults(func=func)

    p = sub.add_parser("compile", parents=[common], help="circuit <-> PEPS compilation")
    p.add_argument("direction", choices=("c2p", "p2c"))
    p.add_argument("file")
    p.add_argument("--mode", choices=("spacetime", "mbqc"), default="spacetime")
    p.add_argument("--no-gather", action="store_true", help="p2c: keep one postselection per ancilla")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("pathsum", parents=[common], help="exact path counts of a Toffoli-Hadamard circuit")
    p.add_argument("file")
    p.add_argument("--x", help="single output bitstring")
    p.set_defaults(func=cmd_pathsum)

    for name, func in (("countsat", cmd_countsat), ("majority", cmd_majority)):
        p = sub.add_parser(name, parents=[common], help=f"{name} of a DIMACS CNF via PEPS contraction")
        p.add_argument("file")
        p.set_defaults(func=func)

    p = sub.add_parser("cool", parents=[common], help="imaginary-time cooling report")
    p.add_argument("hamiltonian", help="Hamiltonian file or generator spec such as 'tfi 6 2.0 1.0'")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--steps", "-M", type=int, required=True)
    p.add_argument("--order", choices=("first", "second"), default="second")
    p.add_argument("--points", type=int, default=5, help="rows of the fidelity table")
    p.add_argument("--chi", choices=("plus", "haar"), default="plus", help="initial product state")
    p.set_defaults(func=cmd_cool)

    p = sub.add_parser("verify", parents=[common], help="run the cross-representation checks")
    p.add_argument("--quick", action="store_true", help="reduced instance counts")
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.set_defaults(func=cmd_verify)
    return parser


def _exit_code(exc: BaseException) -> int | None:
    if isinstance(exc, (ContractionTooLarge, CapExceeded)):
        return EXIT_CAP
    if isinstance(
        exc, (NumericToleranceError, ZeroNormError, OracleInconsistency, InvalidPostselection, DegenerateGroundState)
    ):
        return EXIT_NUMERIC
    if isinstance(exc, (ParseError, ValueError, KeyError, TypeError, OSError)):
        return EXIT_PARSE
    return None


def run(argv: Sequence[str]) -> tuple[int, str]:
    """Execute one command; returns ``(exit code, stdout text)``.

    Diagnostics go to stderr.  On failure, any partial report is still
    returned so a failing ``verify`` shows which criteria failed.
    """
    out = Output()
    form = "text"
    try:
        args = build_parser().parse_args(list(argv))
        form = args.format
        if args.cap <= 0:
            raise ParseError("--cap must be positive")
        if getattr(args, "func", None) is cmd_cool and (args.steps < 1 or args.beta < 0 or args.points < 1):
            raise ParseError("cool needs --steps >= 1, --beta >= 0 and --points >= 1")
        args.func(args, out)
        return EXIT_OK, out.render(form)
    except Exception as exc:  # noqa: BLE001 - mapped to the exit-code contract
        code = _exit_code(exc)
        if code is None:
            raise
        print(f"pepsdual: error: {exc}", file=sys.stderr)
        return code, out.render(form) if out.lines else ""


def main(argv: Sequence[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    if any(a in ("-h", "--help") for a in argv):
        build_parser().parse_args(list(argv))  # prints help and exits 0
    code, text = run(argv)
    sys.stdout.write(text)
    sys.stdout.flush()
    return code


def quiet_run(argv: Sequence[str]) -> tuple[int, str]:
    """:func:`run` with stderr suppressed (used by the checks)."""
    with redirect_stderr(io.StringIO()):
        return run(argv)


if __name__ == "__main__":
    sys.exit(main())
