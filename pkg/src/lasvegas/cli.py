"""Command line: simulate, extract, synthesise and certify from JSON documents.

Exit codes: 0 success, 2 parse error, 3 shape mismatch, 4 semantic failure
(for example NotASolution or NotFeasible), 5 budget exhausted.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import adversary, io, problems, synth
from .errors import LasVegasError
from .model import ComplexityProfile, OracleFamily, StateConversionProblem
from .sim import QueryAlgorithm, QueryEmbedding, check_state_conversion, dense_gate, simulate_all


def _emit(args, doc: dict, rows: Iterable[tuple[Any, Any, Any]]) -> None:
    """Print ``doc`` as JSON or ``rows`` as a ``label,block,value`` table."""
    if args.format == "csv":
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["label", "block", "value"])
        for r in rows:
            w.writerow([r[0], r[1], repr(float(r[2]))])
    else:
        json.dump(doc, sys.stdout, indent=1, default=_jsonable)
        sys.stdout.write("\n")


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _profile_doc(prof: ComplexityProfile) -> dict:
    return {x: prof[x].tolist() for x in prof.labels}


def cmd_simulate(args) -> int:
    algo = io.load("algorithm", args.algorithm)
    p = io.load("problem", args.problem)
    rep = check_state_conversion(algo, p, args.tol)
    _emit(args, {"errors": dict(rep.errors), "ok": rep.ok, "profile": _profile_doc(rep.profile)},
          rep.profile.rows())
    return 0


def cmd_extract(args) -> int:
    algo = io.load("algorithm", args.algorithm)
    p = io.load("problem", args.problem)
    sol = adversary.extract(algo, p, args.tol)
    res = adversary.residual(sol, p)
    if args.output:
        io.write_json(args.output, io.solution_to_json(sol))
    prof = adversary.objective_profile(sol)
    _emit(args, {"residual": res, "w_dim": sol.w_dim, "profile": _profile_doc(prof)}, prof.rows())
    return 0


def cmd_synth(args) -> int:
    p = io.load("problem", args.problem)
    sol = io.load("solution", args.solution, labels=p.labels)
    if args.mode == "approx":
        res = synth.compile_approx(p, sol, args.T, args.tol)
        algo = res.algo
        rep = check_state_conversion(algo, res.problem(p.oracles), args.tol)
        report = {"T": res.T, "errors": dict(rep.errors), "profile": _profile_doc(rep.profile)}
        prof = rep.profile
    elif args.mode == "plain":
        res = synth.run_plain(p, sol, args.eps, args.tol)
        algo = res.algo
        prof = ComplexityProfile(p.labels, res.profile)
        report = {"T": res.T, "errors": res.errors, "profile": _profile_doc(prof)}
    else:
        algo = synth.compile_exact(p, sol, args.delta, args.tol)
        r = algo.meta["report"]
        prof = ComplexityProfile(p.labels, r.profile)
        report = r.as_dict()
    if args.output:
        io.write_json(args.output, io.algorithm_to_json(algo))
    if args.report:
        io.write_json(args.report, json.loads(json.dumps(report, default=_jsonable)))
    _emit(args, report, prof.rows())
    return 0


def cmd_dual(args) -> int:
    p = io.load("problem", args.problem)
    cert = io.load("certificate", args.gamma)
    rep = adversary.dual_bound(cert, p)
    doc = {"lam_E": rep.lam_E, "lam_Delta": list(rep.lam_Delta), "bound_singleoracle": rep.bound_singleoracle}
    if args.profile:
        prof = io.load("profile", args.profile)
        doc["tradeoff_ok"] = rep.tradeoff_ok(prof)
        doc["tradeoff_rhs"] = rep.rhs(prof)
    rows = [("lam_E", "", rep.lam_E)] + [("lam_Delta", i, v) for i, v in enumerate(rep.lam_Delta)]
    rows.append(("bound_singleoracle", "", rep.bound_singleoracle))
    _emit(args, doc, rows)
    return 0


def _write_bundle(out: Path | None, **docs) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    for name, doc in docs.items():
        io.write_json(out / f"{name}.json", doc)


def _demo_two_label(args) -> int:
    tl = problems.two_label(complex(args.a), complex(args.b), np.array([[args.o0]]), np.array([[args.o1]]))
    best, rep = problems.best_certificate(tl.problem, tl.certificate, np.linspace(0, np.pi, 33))
    doc = {"bound": tl.bound, "certificate_bound": rep.bound_singleoracle, "theta": best}
    rows = [("bound", "", tl.bound), ("certificate_bound", "", rep.bound_singleoracle)]
    if tl.bound > 0:
        sol = tl.boundary_solution(tl.bound)
        doc["boundary_residual"] = adversary.residual(sol, tl.problem)
        _write_bundle(args.write, problem=io.problem_to_json(tl.problem), solution=io.solution_to_json(sol),
                      certificate=io.certificate_to_json(adversary.DualCertificate(tl.certificate(best))))
    _emit(args, doc, rows)
    return 0


def _demo_boolean(args) -> int:
    bp = problems.boolean_problem(problems.boolean_function(args.fn, args.n), args.n)
    doc: dict[str, Any] = {"fn": args.fn, "n": args.n, "labels": len(bp.inputs)}
    rows = []
    if args.fn == "or" and args.n == 2:
        c, rep = problems.best_certificate(bp.problem, lambda t: problems.or2_certificate(t, bp),
                                           np.linspace(0, 2, 41))
        doc.update({"dual": rep.bound_singleoracle, "c": c})
    else:
        gamma = bp.gap.copy()
        rep = adversary.dual_bound(adversary.DualCertificate(gamma), bp.problem)
        doc.update({"dual": rep.bound_singleoracle, "certificate": "f-differing pairs"})
    rows.append(("dual", "", doc["dual"]))
    _write_bundle(args.write, problem=io.problem_to_json(bp.problem))
    _emit(args, doc, rows)
    return 0


def _demo_perm(args) -> int:
    reports = [problems.perm_inversion(n).report for n in args.n]
    rows = [(k, r["n"], v) for r in reports for k, v in r.items() if k != "n"]
    _emit(args, {"reports": reports}, rows)
    return 0


def _demo_random(args) -> int:
    """Random unitary-oracle problem defined by a random algorithm."""
    rng = np.random.default_rng(args.seed)
    from scipy.stats import unitary_group

    def ru(d):
        return unitary_group.rvs(d, random_state=rng) if d > 1 else np.exp(2j * np.pi * rng.random()) * np.eye(1)

    m, b, c, k = args.m, 1, 2, 2
    h = m * b + c
    fam = OracleFamily.from_matrices({str(i): ru(m) for i in range(args.labels)}, (m,), "unitary")
    algo = QueryAlgorithm(h, tuple((dense_gate(ru(h)),) for _ in range(args.T + 1)),
                          QueryEmbedding.standard(h, m, b), (m,))
    xi = np.zeros((args.labels, h), dtype=complex)
    xi[:, :k] = rng.normal(size=(args.labels, k)) + 1j * rng.normal(size=(args.labels, k))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    finals, lv = simulate_all(algo, fam, xi)
    p = StateConversionProblem(fam, xi, finals)
    _write_bundle(args.write, problem=io.problem_to_json(p), algorithm=io.algorithm_to_json(algo))
    prof = ComplexityProfile(p.labels, lv)
    _emit(args, {"labels": args.labels, "T": args.T, "profile": _profile_doc(prof)}, prof.rows())
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-9, help="conversion tolerance (default 1e-9)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomised demos")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    ap = argparse.ArgumentParser(prog="lasvegas", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="final errors and Las Vegas profile")
    s.add_argument("algorithm")
    s.add_argument("problem")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("extract", parents=[common], help="feasible solution from a solving algorithm")
    s.add_argument("algorithm")
    s.add_argument("problem")
    s.add_argument("-o", "--output", help="write the solution JSON here")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("synth", parents=[common], help="compile a feasible solution")
    s.add_argument("problem")
    s.add_argument("solution")
    s.add_argument("--mode", choices=("approx", "plain", "exact"), default="approx")
    s.add_argument("--T", type=int, default=64, help="query count for --mode approx")
    s.add_argument("--eps", type=float, default=0.1, help="error for --mode plain")
    s.add_argument("--delta", type=float, default=0.05, help="complexity slack for --mode exact")
    s.add_argument("-o", "--output", help="write the algorithm JSON here")
    s.add_argument("--report", help="write the compile report JSON here")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("dual", parents=[common], help="evaluate a dual certificate")
    s.add_argument("problem")
    s.add_argument("gamma")
    s.add_argument("--profile", help="profile JSON to test the trade-off inequality against")
    s.set_defaults(func=cmd_dual)

    demo = sub.add_parser("demo", help="worked problems")
    dsub = demo.add_subparsers(dest="name", required=True)
    d = dsub.add_parser("two-label", parents=[common])
    d.add_argument("--a", type=complex, default=1)
    d.add_argument("--b", type=complex, default=0)
    d.add_argument("--o0", type=complex, default=1)
    d.add_argument("--o1", type=complex, default=-1)
    d.add_argument("--write", type=Path, help="directory for problem/solution/certificate JSON")
    d.set_defaults(func=_demo_two_label)
    d = dsub.add_parser("boolean", parents=[common])
    d.add_argument("--fn", default="or")
    d.add_argument("--n", type=int, default=2)
    d.add_argument("--write", type=Path)
    d.set_defaults(func=_demo_boolean)
    d = dsub.add_parser("perm-inv", parents=[common])
    d.add_argument("--n", type=int, nargs="+", default=[4])
    d.set_defaults(func=_demo_perm)
    d = dsub.add_parser("random", parents=[common])
    d.add_argument("--labels", type=int, default=3)
    d.add_argument("--m", type=int, default=2)
    d.add_argument("--T", type=int, default=2)
    d.add_argument("--write", type=Path)
    d.set_defaults(func=_demo_random)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LasVegasError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
