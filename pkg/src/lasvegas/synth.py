"""Compile feasible adversary solutions into query algorithms.

The central construction carries a catalyst ``v_x / sqrt(T)`` through ``T``
identical steps.  Each step queries the catalyst and then applies one fixed
unitary ``U`` that turns ``O_x v_x + xi_x`` into ``v_x + tau_x``, one time
slot of the uniformly spread input at a time.  The Las Vegas complexity is
therefore exactly ``||v_x||^2`` for every ``T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .adversary import FeasibleSolution, feasible_from_offdiagonal, objective_profile, residual
from .compose import invert, permutation_gate
from .errors import (BudgetExceeded, IndependenceViolation, KindError, NotFeasible, NotPosDef, ShapeError)
from .model import OracleFamily, StateConversionProblem, problem_gram_gap
from .numlin import TOL, gram, min_eig, psd_utilities, scale, unitary_from_gram_match
from .sim import Gate, QueryAlgorithm, QueryEmbedding, simulate_all

# Gram-matching unitaries on more coordinates than this are stored in low-rank form.
DENSE_LIMIT = 96


# ---------------------------------------------------------------------------
# program builder


class _Program:
    """Assembles gates and queries on a growing workspace.

    Coordinates ``0..k-1`` hold the input.  The query register is a list of
    columns of ``dim M`` coordinates each, allocated on first use; columns
    that a sub-algorithm does not use stay zero during its queries.
    """

    def __init__(self, k_dim: int, block_dims: Sequence[int]):
        self.block_dims = tuple(block_dims)
        self.m = sum(self.block_dims)
        self.h = k_dim
        self.qcols: list[np.ndarray] = []
        self.steps: list[list[Gate]] = [[]]

    def alloc(self, n: int) -> np.ndarray:
        out = np.arange(self.h, self.h + n)
        self.h += n
        return out

    def q(self, w: int) -> np.ndarray:
        """Coordinates of the first ``w`` query columns as a ``(dim M, w)`` array."""
        while len(self.qcols) < w:
            self.qcols.append(self.alloc(self.m))
        if w == 0:
            return np.zeros((self.m, 0), dtype=np.intp)
        return np.stack(self.qcols[:w], axis=1)

    def gate(self, g: Gate | None) -> None:
        if g is not None:
            self.steps[-1].append(g)

    def query(self) -> None:
        self.steps.append([])

    def swap(self, a: np.ndarray, b: np.ndarray) -> None:
        a, b = np.ravel(a), np.ravel(b)
        self.gate(permutation_gate(np.concatenate([a, b]), np.concatenate([b, a])))

    def embed(self, algo: QueryAlgorithm, fixed: dict[int, int] | None = None) -> np.ndarray:
        """Run ``algo`` here; returns the global coordinate of each of its coordinates.

        Its query coordinates go to the query register, coordinates listed in
        ``fixed`` to the given places, and the rest to fresh coordinates.
        """
        fixed = fixed or {}
        if tuple(algo.oracle_block_dims) != self.block_dims:
            raise ShapeError("sub-algorithm has a different oracle space")
        cmap = np.full(algo.h_dim, -1, dtype=np.intp)
        qi = algo.embedding.query_index(algo.m_dim)
        cmap[qi.reshape(-1)] = self.q(algo.b_dim).reshape(-1)
        for c, g in fixed.items():
            if cmap[c] >= 0:
                raise ShapeError("fixed coordinate collides with the query register")
            cmap[c] = g
        free = np.flatnonzero(cmap < 0)
        cmap[free] = self.alloc(free.size)
        for t, step in enumerate(algo.steps):
            if t > 0:
                self.query()
            for g in step:
                self.gate(g.remap(cmap))
        return cmap

    def build(self, meta: dict[str, Any] | None = None) -> QueryAlgorithm:
        w = len(self.qcols)
        qc = self.q(w).reshape(-1)
        rest = np.setdiff1d(np.arange(self.h), qc)
        emb = QueryEmbedding(w, rest.size, tuple(int(c) for c in np.concatenate([qc, rest])))
        return QueryAlgorithm(self.h, tuple(tuple(s) for s in self.steps), emb, self.block_dims,
                              meta=meta or {}, check=False)


def match_gate(support: np.ndarray, src: np.ndarray, dst: np.ndarray, tol: float = 1e-9) -> Gate:
    """Gate on ``support`` mapping each row of ``src`` to the same row of ``dst``.

    Large supports get a low-rank gate that moves only the span of the
    given vectors.
    """
    support = np.asarray(support, dtype=np.intp)
    a, b = np.asarray(src, dtype=complex).T, np.asarray(dst, dtype=complex).T
    if support.size <= DENSE_LIMIT:
        return Gate(support, unitary_from_gram_match(a, b, tol))
    u, s, _ = np.linalg.svd(np.concatenate([a, b], axis=1), full_matrices=False)
    basis = u[:, s > TOL.rank * max(1.0, float(s[0]) if s.size else 1.0)]
    small = unitary_from_gram_match(basis.conj().T @ a, basis.conj().T @ b, tol)
    return Gate(support, small, basis)


# ---------------------------------------------------------------------------
# catalyst core


def _spread_gates(reg: np.ndarray) -> list[Gate]:
    """Givens cascade taking ``psi (x) |0>`` to ``psi (x) sum_t |t> / sqrt(T)``.

    ``reg`` is the ``(T, k)`` array of coordinates of ``K (x) J``.
    """
    T, k = reg.shape
    out = []
    for j in range(T - 1):
        c = 1.0 / math.sqrt(T - j)
        s = math.sqrt((T - j - 1) / (T - j))
        rot = np.array([[c, -s], [s, c]])
        out.append(Gate(np.concatenate([reg[j], reg[j + 1]]), np.kron(rot, np.eye(k))))
    return out


def _step_unitary(fam: OracleFamily, xi: np.ndarray, tau: np.ndarray, sol: FeasibleSolution,
                  tol: float) -> np.ndarray:
    """The shared ``U`` with ``U (O_x v_x + xi_x) = v_x + tau_x``."""
    v = sol.data
    ov = np.einsum("xij,xjw->xiw", fam.stacked(), v)
    n = len(fam.labels)
    src = np.concatenate([ov.reshape(n, -1), xi], axis=1)
    dst = np.concatenate([v.reshape(n, -1), tau], axis=1)
    return unitary_from_gram_match(src.T, dst.T, tol)


def _emit_core(prog: _Program, fam: OracleFamily, xi: np.ndarray, tau: np.ndarray, sol: FeasibleSolution,
               T: int, reg: np.ndarray, tol: float) -> None:
    """Emit the ``T``-query catalyst algorithm on the register ``reg`` (``T x k``)."""
    u = _step_unitary(fam, xi, tau, sol, tol)
    u.setflags(write=False)
    spread = _spread_gates(reg)
    vq = prog.q(sol.w_dim).reshape(-1)
    for g in spread:
        prog.gate(g)
    for t in range(T):
        prog.query()
        prog.gate(Gate(np.concatenate([vq, reg[t]]), u))
    for g in reversed(spread):
        prog.gate(g.adjoint())


def _check_feasible(p: StateConversionProblem, sol: FeasibleSolution, tol: float) -> float:
    r = residual(sol, p)
    if r > tol * scale(problem_gram_gap(p)):
        raise NotFeasible(f"solution violates the constraint by {r:.3e}")
    return r


def _match_tol(res: float, tol: float) -> float:
    return max(10 * res, 10 * tol)


@dataclass(frozen=True, eq=False)
class ApproxResult:
    """A compiled catalyst algorithm and the states it converts exactly.

    ``xi_plus`` and ``tau_plus`` are ``(|D|, h_dim)`` arrays: the input or
    output in the leading coordinates plus ``v_x / sqrt(T)`` in the query
    register.
    """

    algo: QueryAlgorithm
    xi_plus: np.ndarray
    tau_plus: np.ndarray
    T: int

    def problem(self, fam: OracleFamily) -> StateConversionProblem:
        return StateConversionProblem(fam, self.xi_plus, self.tau_plus)


def compile_approx(p: StateConversionProblem, sol: FeasibleSolution, T: int, tol: float = 1e-9) -> ApproxResult:
    """Exact algorithm for ``xi_x + v_x/sqrt(T) -> tau_x + v_x/sqrt(T)`` with ``T`` queries.

    The workspace is ``K (x) J`` (``J`` a ``T``-dimensional time register,
    ``K (x) |0>`` first) followed by the query register ``M (x) W``.
    """
    if T < 1:
        raise ShapeError("T must be at least 1")
    fam = p.oracles
    res = _check_feasible(p, sol, tol)
    k = p.k_dim
    prog = _Program(k, fam.block_dims)
    vq = prog.q(sol.w_dim)
    reg = np.concatenate([np.arange(k)[None, :], prog.alloc((T - 1) * k).reshape(T - 1, k)], axis=0)
    _emit_core(prog, fam, p.xi, p.tau, sol, T, reg, _match_tol(res, tol))
    algo = prog.build({"T": T, "kind": "approx"})
    n = len(fam.labels)
    cat = sol.data.reshape(n, -1) / math.sqrt(T)
    xi_plus = np.zeros((n, algo.h_dim), dtype=complex)
    tau_plus = np.zeros((n, algo.h_dim), dtype=complex)
    xi_plus[:, :k], tau_plus[:, :k] = p.xi, p.tau
    xi_plus[:, vq.reshape(-1)] = cat
    tau_plus[:, vq.reshape(-1)] = cat
    return ApproxResult(algo, xi_plus, tau_plus, T)


@dataclass(frozen=True, eq=False)
class PlainResult:
    """An approximate algorithm run on the plain inputs.

    ``errors[x] = ||A(O_x) xi_x - tau_x||`` with both sides zero-padded;
    ``finals`` holds the actual output states, one row per label.
    """

    algo: QueryAlgorithm
    errors: dict[str, float]
    T: int
    finals: np.ndarray
    profile: np.ndarray


def _zero_query(p: StateConversionProblem, tol: float) -> QueryAlgorithm:
    k = p.k_dim
    u = unitary_from_gram_match(p.xi.T, p.tau.T, tol)
    emb = QueryEmbedding(0, k, tuple(range(k)))
    return QueryAlgorithm(k, ((Gate(np.arange(k), u),),), emb, p.oracles.block_dims, meta={"T": 0})


def run_plain(p: StateConversionProblem, sol: FeasibleSolution, eps: float, tol: float = 1e-9) -> PlainResult:
    """``eps``-approximate conversion with ``T = ceil(4 L / eps^2)`` queries.

    ``L`` is the largest total objective value of ``sol``.
    """
    fam = p.oracles
    if fam.kind == "general":
        raise KindError("approximate conversion needs contraction or unitary oracles")
    if eps <= 0:
        raise ShapeError("eps must be positive")
    res = _check_feasible(p, sol, tol)
    big_l = float(objective_profile(sol).totals().max(initial=0.0))
    T = math.ceil(4 * big_l / eps ** 2 - 1e-12)
    if T == 0:
        algo = _zero_query(p, _match_tol(res, tol))
    else:
        algo = compile_approx(p, sol, T, tol).algo
    k = p.k_dim
    xi = np.zeros((len(fam.labels), algo.h_dim), dtype=complex)
    xi[:, :k] = p.xi
    finals, lv = simulate_all(algo, fam, xi)
    target = np.zeros_like(finals)
    target[:, :k] = p.tau
    errs = {x: float(np.linalg.norm(finals[i] - target[i])) for i, x in enumerate(fam.labels)}
    algo = algo.with_meta(T=T, kind="plain", eps=eps, errors=errs)
    return PlainResult(algo, errs, T, finals, lv)


# ---------------------------------------------------------------------------
# exact conversion


def _posdef_T(g_xi: np.ndarray, g_tau: np.ndarray, g_v: np.ndarray, margin: float, max_iter: int) -> int:
    """Smallest ``T >= 1`` with ``G - G_v / T`` at least ``margin / 2`` for both Grams."""
    def ok(T: int) -> bool:
        return min(min_eig(g_xi - g_v / T), min_eig(g_tau - g_v / T)) >= margin / 2

    hi = 1
    for _ in range(4 * max_iter):
        if ok(hi):
            break
        hi *= 2
    else:
        raise BudgetExceeded("no admissible step count found")
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _emit_posdef(prog: _Program, fam: OracleFamily, xi: np.ndarray, src: np.ndarray, tau: np.ndarray,
                 dst: np.ndarray, sol: FeasibleSolution, tol: float, margin: float = TOL.posdef_margin,
                 max_iter: int = TOL.max_iter) -> dict[str, Any]:
    """Exact ``xi_x -> tau_x`` for positive definite Grams.

    ``xi`` lives on the coordinates ``src`` and ``tau`` on ``dst``.  The
    inputs are first rewritten as ``xi^- + v/sqrt(T)`` with
    ``G(xi^-) = G_xi - G_v / T``, converted by the catalyst core and
    finally rotated onto ``tau``.
    """
    g_xi, g_tau = gram(xi.T), gram(tau.T)
    for name, g in (("input", g_xi), ("output", g_tau)):
        if min_eig(g) < margin:
            raise NotPosDef(f"{name} Gram matrix has minimum eigenvalue {min_eig(g):.3e}")
    n = len(fam.labels)
    vflat = sol.data.reshape(n, -1)
    g_v = gram(vflat.T)
    T = _posdef_T(g_xi, g_tau, g_v, margin, max_iter)
    xm = psd_utilities(g_xi - g_v / T).sqrt  # columns are xi^-
    tm = psd_utilities(g_tau - g_v / T).sqrt
    reg = prog.alloc(T * n).reshape(T, n)
    vq = prog.q(sol.w_dim).reshape(-1)
    cat = vflat / math.sqrt(T)
    sup = np.unique(np.concatenate([src, reg[0], vq]))
    pos = {int(c): i for i, c in enumerate(sup)}
    a = np.zeros((n, sup.size), dtype=complex)
    b = np.zeros((n, sup.size), dtype=complex)
    a[:, [pos[int(c)] for c in src]] = xi
    b[:, [pos[int(c)] for c in reg[0]]] = xm.T
    b[:, [pos[int(c)] for c in vq]] = cat
    prog.gate(match_gate(sup, a, b, tol))
    _emit_core(prog, fam, xm.T, tm.T, sol, T, reg, tol)
    sup = np.unique(np.concatenate([dst, reg[0], vq]))
    pos = {int(c): i for i, c in enumerate(sup)}
    a = np.zeros((n, sup.size), dtype=complex)
    b = np.zeros((n, sup.size), dtype=complex)
    a[:, [pos[int(c)] for c in reg[0]]] = tm.T
    a[:, [pos[int(c)] for c in vq]] = cat
    b[:, [pos[int(c)] for c in dst]] = tau
    prog.gate(match_gate(sup, a, b, tol))
    return {"T": T}


def compile_exact_posdef(p: StateConversionProblem, sol: FeasibleSolution, tol: float = 1e-9,
                         margin: float = TOL.posdef_margin) -> QueryAlgorithm:
    """Exact conversion with complexity ``||v_x||^2`` when both Gram matrices are positive definite."""
    fam = p.oracles
    res = _check_feasible(p, sol, tol)
    k = p.k_dim
    prog = _Program(k, fam.block_dims)
    coords = np.arange(k)
    info = _emit_posdef(prog, fam, p.xi, coords, p.tau, coords, sol, _match_tol(res, tol), margin)
    return prog.build({"kind": "posdef", **info})


def _reference_gram(p: StateConversionProblem, classes: list[list[int]], margin: float) -> np.ndarray:
    """``diag(G_xi)``, or its class-blocked version when oracles repeat."""
    g = gram(p.xi.T)
    out = np.zeros_like(g)
    for c in classes:
        blk = g[np.ix_(c, c)]
        if len(c) > 1 and min_eig(blk) < margin * scale(blk):
            raise IndependenceViolation(f"inputs of labels {[p.labels[i] for i in c]} are linearly dependent")
        out[np.ix_(c, c)] = blk
    return out


def _rotation(a: np.ndarray, b: np.ndarray, eps: float) -> Gate:
    """``(x, 0) -> (sqrt(1-eps) x, sqrt(eps) x)`` on coordinate lists ``a``, ``b``."""
    c, s = math.sqrt(1 - eps), math.sqrt(eps)
    return Gate(np.concatenate([a, b]), np.kron(np.array([[c, -s], [s, c]]), np.eye(a.size)))


def _embedded_problem(fam: OracleFamily, xi: np.ndarray, tau: np.ndarray) -> StateConversionProblem:
    k = max(xi.shape[1], tau.shape[1])
    pad = lambda a: np.pad(a, ((0, 0), (0, k - a.shape[1])))  # noqa: E731
    return StateConversionProblem(fam, pad(xi), pad(tau))


@dataclass
class ExactReport:
    T: int
    errors: dict[str, float]
    profile: np.ndarray
    target: np.ndarray
    eps: float
    eps_plain: float
    trace: list[dict[str, Any]] = field(default_factory=list)
    parts: dict[str, int] = field(default_factory=dict)

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    @property
    def max_gap(self) -> float:
        return float(np.max(np.abs(self.profile - self.target), initial=0.0))

    def as_dict(self) -> dict[str, Any]:
        return {"T": self.T, "errors": self.errors, "profile": self.profile.tolist(),
                "target": self.target.tolist(), "eps": self.eps, "eps_plain": self.eps_plain,
                "trace": self.trace, "parts": self.parts, "max_error": self.max_error, "max_gap": self.max_gap}


def compile_exact(p: StateConversionProblem, sol: FeasibleSolution, delta: float, tol: float = 1e-9,
                  max_iter: int = TOL.max_iter, class_tol: float = TOL.class_) -> QueryAlgorithm:
    """Exact conversion with Las Vegas complexity within ``delta`` of ``sol``'s objective.

    Structure, with ``eps`` small:

    1. split ``xi`` into ``sqrt(1-eps) xi`` and ``sqrt(eps) xi``;
    2. on the small branch, approximately map ``xi`` to states ``mu`` with
       positive definite Gram ``M`` (algorithm ``B``), then exactly to the
       output states of ``E`` (an approximate ``tau -> mu`` map for the
       adjoint oracles) by a positive definite conversion ``C``;
    3. convert ``sqrt(1-eps) xi + sqrt(eps) E(tau)`` to
       ``sqrt(1-eps) tau + sqrt(eps) E(tau)`` exactly using ``v``;
    4. undo ``E`` on the small branch and merge the two copies of ``tau``.

    The result's ``meta["report"]`` is an :class:`ExactReport`.
    """
    fam = p.oracles
    if fam.kind != "unitary":
        raise KindError("exact conversion needs unitary oracles")
    if delta <= 0:
        raise ShapeError("delta must be positive")
    res = _check_feasible(p, sol, tol)
    mtol = _match_tol(res, tol)
    n, k = len(fam.labels), p.k_dim
    target = objective_profile(sol).values
    norms = np.linalg.norm(p.xi, axis=1)
    active = [i for i in range(n) if norms[i] > TOL.rank]
    if not np.any(sol.data) or not active:
        algo = _zero_query(p, mtol)
        rep = _finish_report(algo, p, target, 0.0, 0.0, [], {})
        return algo.with_meta(kind="exact", report=rep)

    labels = [fam.labels[i] for i in active]
    fa = fam.restrict(labels)
    xi, tau = p.xi[active], p.tau[active]
    sub = StateConversionProblem(fa, xi, tau)
    va = FeasibleSolution(tuple(labels), sol.block_dims, sol.data[active])
    classes = fa.classes(class_tol)
    big_m = _reference_gram(sub, classes, TOL.posdef_margin)
    kappa = min_eig(big_m) / 2
    mu = psd_utilities(big_m).sqrt.T  # rows are mu_x
    pb = _embedded_problem(fa, xi, mu)
    pe = _embedded_problem(fa.adjoint(), tau, mu)
    sol_b = feasible_from_offdiagonal(problem_gram_gap(pb), fa, tol=1e-10, class_tol=class_tol)
    sol_e = feasible_from_offdiagonal(problem_gram_gap(pe), fa.adjoint(), tol=1e-10, class_tol=class_tol)

    trace: list[dict[str, Any]] = []
    eps_p = 0.25
    for _ in range(max_iter):
        rb = run_plain(pb, sol_b, eps_p, tol)
        re_ = run_plain(pe, sol_e, eps_p, tol)
        m1, m2 = gram(rb.finals.T), gram(re_.finals.T)
        lo = min(min_eig(m1), min_eig(m2))
        trace.append({"stage": "plain", "eps": eps_p, "min_eig": lo, "T_B": rb.T, "T_E": re_.T})
        if lo >= kappa:
            break
        eps_p /= 2
    else:
        raise BudgetExceeded(f"reference Grams not positive definite after {max_iter} halvings")

    gap_c = m1 - m2
    np.fill_diagonal(gap_c, 0.0)
    sol_c = feasible_from_offdiagonal(gap_c, fa, tol=1e-10, class_tol=class_tol)
    lc = objective_profile(sol_c).values
    lb = rb.profile
    le = re_.profile
    vv = objective_profile(va).values
    over = (lb + lc + le + vv).sum(axis=1).max()
    eps = 0.25
    for _ in range(max_iter):
        trace.append({"stage": "chain", "eps": eps, "overhead": eps * float(over)})
        if eps * over <= delta:
            break
        eps /= 2
    else:
        raise BudgetExceeded(f"complexity overhead above delta={delta} after {max_iter} halvings")

    a_coords = np.arange(k)
    prog = _Program(k, fam.block_dims)
    algo_b, algo_e = rb.algo, re_.algo
    kb = pb.k_dim
    bk = prog.alloc(kb)
    prog.gate(_rotation(a_coords, bk[:k], eps))
    cmap_b = prog.embed(algo_b, {i: int(bk[i]) for i in range(kb)})
    qb = algo_b.embedding.query_index(algo_b.m_dim).reshape(-1)
    if qb.size:
        priv = prog.alloc(qb.size)
        prog.swap(cmap_b[qb], priv)
        cmap_b[qb] = priv
    e_glob = prog.alloc(algo_e.h_dim)
    info_c = _emit_posdef(prog, fa, rb.finals, cmap_b, re_.finals, e_glob, sol_c, mtol)
    src_d = np.concatenate([a_coords, e_glob])
    xi_d = np.concatenate([math.sqrt(1 - eps) * xi, math.sqrt(eps) * re_.finals], axis=1)
    tau_d = np.concatenate([math.sqrt(1 - eps) * tau, math.sqrt(eps) * re_.finals], axis=1)
    info_d = _emit_posdef(prog, fa, xi_d, src_d, tau_d, src_d, va.scaled(math.sqrt(1 - eps)), mtol)
    qe = algo_e.embedding.query_index(algo_e.m_dim).reshape(-1)
    inv_e = invert(algo_e)
    if qe.size:
        prog.swap(e_glob[qe], prog.q(algo_e.b_dim).reshape(-1))
    fixed = {int(c): int(e_glob[c]) for c in np.setdiff1d(np.arange(algo_e.h_dim), qe)}
    prog.embed(inv_e, fixed)
    prog.gate(_rotation(a_coords, e_glob[:k], eps).adjoint())

    parts = {"T_B": rb.T, "T_C": info_c["T"], "T_D": info_d["T"], "T_E": re_.T}
    algo = prog.build({"kind": "exact"})
    rep = _finish_report(algo, p, target, eps, eps_p, trace, parts)
    return algo.with_meta(kind="exact", report=rep)


def _finish_report(algo: QueryAlgorithm, p: StateConversionProblem, target: np.ndarray, eps: float,
                   eps_p: float, trace: list, parts: dict) -> ExactReport:
    xi = np.zeros((len(p.labels), algo.h_dim), dtype=complex)
    xi[:, :p.k_dim] = p.xi
    finals, lv = simulate_all(algo, p.oracles, xi)
    tgt = np.zeros_like(finals)
    tgt[:, :p.k_dim] = p.tau
    errs = {x: float(np.linalg.norm(finals[i] - tgt[i])) for i, x in enumerate(p.labels)}
    return ExactReport(algo.T, errs, lv, target, eps, eps_p, trace, parts)
