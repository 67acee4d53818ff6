"""Adversary feasible solutions, extraction from algorithms, and dual certificates.

A feasible solution assigns to each label ``x`` a vector ``v_x`` in
``M (x) W`` such that for all ``x, y``

    <xi_x, xi_y> - <tau_x, tau_y> = <v_x, ((I - O_x^* O_y) (x) I_W) v_y>.

Its objective profile is the table of blockwise squared norms of ``v_x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import (Inconsistent, InvariantViolation, KindError, LabelError, NotASolution, NotFeasible,
                     ShapeError, SubspaceError)
from .model import (BlockVector, ComplexityProfile, OracleFamily, StateConversionProblem,
                    SubspaceConversionProblem, block_slices, problem_gram_gap)
from .numlin import TOL, block_hadamard, check_hermitian, lambda_max, scale, top_singular_triple
from .sim import QueryAlgorithm, _run, _state, check_state_conversion


@dataclass(frozen=True, eq=False)
class FeasibleSolution:
    """Per-label vectors ``v_x`` stored as one ``(|D|, dim M, w_dim)`` array."""

    labels: tuple[str, ...]
    block_dims: tuple[int, ...]
    data: np.ndarray

    def __post_init__(self):
        d = np.array(self.data, dtype=complex)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "block_dims", tuple(int(b) for b in self.block_dims))
        if d.ndim != 3 or d.shape[0] != len(self.labels) or d.shape[1] != sum(self.block_dims):
            raise ShapeError(f"solution array of shape {d.shape} for {len(self.labels)} labels, "
                             f"blocks {self.block_dims}")
        d.setflags(write=False)
        object.__setattr__(self, "data", d)

    @classmethod
    def from_vectors(cls, labels: Sequence[str], block_dims: Sequence[int],
                     vectors: Mapping[str, BlockVector] | Sequence[BlockVector]) -> "FeasibleSolution":
        """Collect block vectors, zero-padding them to a shared ``W``."""
        labels = tuple(labels)
        if isinstance(vectors, Mapping):
            vectors = [vectors[x] for x in labels]
        w = max((v.w_dim for v in vectors), default=0)
        m = sum(block_dims)
        data = np.zeros((len(labels), m, w), dtype=complex)
        for i, v in enumerate(vectors):
            if v.block_dims != tuple(block_dims):
                raise ShapeError("block dimensions differ")
            data[i, :, :v.w_dim] = v.data
        return cls(labels, tuple(block_dims), data)

    @classmethod
    def zeros(cls, labels: Sequence[str], block_dims: Sequence[int], w_dim: int = 1) -> "FeasibleSolution":
        return cls(tuple(labels), tuple(block_dims), np.zeros((len(labels), sum(block_dims), w_dim)))

    @property
    def w_dim(self) -> int:
        return self.data.shape[2]

    @property
    def m_dim(self) -> int:
        return self.data.shape[1]

    def vector(self, x: str) -> BlockVector:
        try:
            i = self.labels.index(x)
        except ValueError:
            raise LabelError(f"unknown label {x!r}") from None
        return BlockVector(self.data[i], self.block_dims)

    def flat(self) -> np.ndarray:
        """``(|D|, dim M * w_dim)`` coordinates in ``M (x) W``."""
        return self.data.reshape(len(self.labels), -1)

    def scaled(self, c: complex) -> "FeasibleSolution":
        return FeasibleSolution(self.labels, self.block_dims, c * self.data)

    def oplus(self, other: "FeasibleSolution") -> "FeasibleSolution":
        """Concatenate along ``W``."""
        if other.labels != self.labels or other.block_dims != self.block_dims:
            raise ShapeError("solutions for different label sets or blocks")
        return FeasibleSolution(self.labels, self.block_dims, np.concatenate([self.data, other.data], axis=2))

    def padded(self, w_dim: int) -> "FeasibleSolution":
        if w_dim <= self.w_dim:
            return self
        return FeasibleSolution(self.labels, self.block_dims,
                                np.pad(self.data, ((0, 0), (0, 0), (0, w_dim - self.w_dim))))


def _check_match(sol: FeasibleSolution, fam: OracleFamily) -> None:
    if sol.labels != fam.labels:
        raise LabelError(f"solution labels {sol.labels} differ from problem labels {fam.labels}")
    if sol.block_dims != fam.block_dims:
        raise ShapeError(f"solution blocks {sol.block_dims} differ from oracle blocks {fam.block_dims}")


def constraint_matrix(sol: FeasibleSolution, fam: OracleFamily) -> np.ndarray:
    """``C[x, y] = <v_x, ((I - O_x^* O_y) (x) I_W) v_y>``."""
    _check_match(sol, fam)
    v = sol.data
    ov = np.einsum("xij,xjw->xiw", fam.stacked(), v)
    a = v.reshape(v.shape[0], -1)
    b = ov.reshape(v.shape[0], -1)
    return a.conj() @ a.T - b.conj() @ b.T


def residual(sol: FeasibleSolution, p: StateConversionProblem) -> float:
    """Largest entrywise violation of the feasibility constraint."""
    e = problem_gram_gap(p)
    return float(np.max(np.abs(e - constraint_matrix(sol, p.oracles)), initial=0.0))


def objective_profile(sol: FeasibleSolution) -> ComplexityProfile:
    sq = np.abs(sol.data) ** 2
    vals = np.stack([sq[:, s, :].sum(axis=(1, 2)) for s in block_slices(sol.block_dims)], axis=1)
    return ComplexityProfile(sol.labels, vals)


def extract(algo: QueryAlgorithm, p: StateConversionProblem, tol: float = 1e-9) -> FeasibleSolution:
    """Feasible solution ``v_x = Q_1 xi_x + ... + Q_T xi_x`` from a solving algorithm."""
    rep = check_state_conversion(algo, p, tol)
    bad = {x: e for x, e in rep.errors.items() if e > tol * max(1.0, float(np.linalg.norm(p.tau_of(x))))}
    if bad:
        raise NotASolution(f"algorithm does not solve the problem (errors {bad})")
    fam = p.oracles
    psi = _state(algo, p.xi.T)
    rec, _ = _run(algo, fam.stacked(), psi, record=True)
    n, m = len(p.labels), algo.m_dim
    if rec:
        data = np.concatenate(rec, axis=1)  # (m, T*b, n)
        data = np.moveaxis(data, 2, 0)
    else:
        data = np.zeros((n, m, 0), dtype=complex)
    return FeasibleSolution(p.labels, fam.block_dims, data)


# ---------------------------------------------------------------------------
# dual certificates


@dataclass(frozen=True, eq=False)
class DualCertificate:
    gamma: np.ndarray

    def __post_init__(self):
        g = check_hermitian(self.gamma)
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)


@dataclass(frozen=True)
class DualReport:
    lam_E: float
    lam_Delta: tuple[float, ...]
    bound_singleoracle: float

    def tradeoff_ok(self, profile: ComplexityProfile | np.ndarray, tol: float = 1e-8) -> bool:
        """``lam_E <= sum_i lam_Delta[i] * max_x profile[x, i] + tol``.

        Negative ``lam_Delta`` entries (possible only for non-unitary oracles)
        are replaced by zero, which keeps the inequality valid.
        """
        vals = profile.values if isinstance(profile, ComplexityProfile) else np.asarray(profile, dtype=float)
        worst = vals.max(axis=0) if vals.size else np.zeros(len(self.lam_Delta))
        return self.lam_E <= float(np.dot(np.clip(self.lam_Delta, 0, None), worst)) + tol

    def rhs(self, profile: ComplexityProfile) -> float:
        return float(np.dot(np.clip(self.lam_Delta, 0, None), profile.values.max(axis=0)))


def block_deltas(fam: OracleFamily, i: int) -> np.ndarray:
    """``I - O_x^(i)* O_y^(i)`` for all pairs, shape ``(|D|, |D|, d_i, d_i)``."""
    o = np.stack([fam.operators[x][i] for x in fam.labels])
    return np.eye(fam.block_dims[i])[None, None] - np.einsum("xji,yjk->xyik", o.conj(), o)


def dual_bound(cert: DualCertificate, p: StateConversionProblem, eps_div: float = TOL.eps_div) -> DualReport:
    """Evaluate a certificate: ``lam_max(Gamma o E)`` and ``lam_max(Gamma o Delta^(i))``.

    ``bound_singleoracle`` lower-bounds ``max_x ||v_x||^2`` (summed over
    blocks) for every feasible solution.
    """
    g = cert.gamma
    fam = p.oracles
    if g.shape != (len(p.labels),) * 2:
        raise ShapeError(f"gamma of shape {g.shape} for {len(p.labels)} labels")
    lam_e = lambda_max(g * problem_gram_gap(p))
    lam_d = []
    for i, d in enumerate(fam.block_dims):
        deltas = block_deltas(fam, i)
        lam_d.append(lambda_max(block_hadamard(g, lambda x, y: deltas[x, y], block=d)))
    top = max(lam_d)
    if lam_e <= eps_div:
        bound = 0.0
    elif top <= eps_div:
        bound = float("inf")
    else:
        bound = lam_e / top
    return DualReport(lam_e, tuple(lam_d), bound)


# ---------------------------------------------------------------------------
# bidirectional access


def lift_bidirectional(p: StateConversionProblem) -> StateConversionProblem:
    """The same conversion with each oracle block ``O`` replaced by ``O + O^*``."""
    fam = p.oracles
    if fam.kind != "unitary":
        raise KindError("bidirectional lifting needs unitary oracles")
    ops = {x: tuple(np.block([[b, np.zeros_like(b)], [np.zeros_like(b), b.conj().T]]) for b in fam.operators[x])
           for x in fam.labels}
    lifted = OracleFamily(fam.labels, tuple(2 * d for d in fam.block_dims), ops, "unitary")
    return StateConversionProblem(lifted, p.xi, p.tau)


@dataclass(frozen=True, eq=False)
class BidirectionalSolution:
    """Pairs ``(u_x, v_x)`` with ``E[x, y] = <u_x, ((I - O_x^* O_y) (x) I) v_y>``."""

    u: FeasibleSolution
    v: FeasibleSolution


def bidirectional_residual(sol: BidirectionalSolution, p: StateConversionProblem) -> float:
    fam = p.oracles
    _check_match(sol.u, fam)
    _check_match(sol.v, fam)
    w = max(sol.u.w_dim, sol.v.w_dim)
    u, v = sol.u.padded(w).data, sol.v.padded(w).data
    ov = np.einsum("xij,xjw->xiw", fam.stacked(), v)
    ou = np.einsum("xij,xjw->xiw", fam.stacked(), u)
    n = len(fam.labels)
    c = u.reshape(n, -1).conj() @ v.reshape(n, -1).T - ou.reshape(n, -1).conj() @ ov.reshape(n, -1).T
    return float(np.max(np.abs(problem_gram_gap(p) - c), initial=0.0))


def _split_lifted(data: np.ndarray, block_dims: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    first, second = [], []
    off = 0
    for d in block_dims:
        first.append(data[:, off:off + d])
        second.append(data[:, off + d:off + 2 * d])
        off += 2 * d
    return np.concatenate(first, axis=1), np.concatenate(second, axis=1)


def _join_lifted(first: np.ndarray, second: np.ndarray, block_dims: Sequence[int]) -> np.ndarray:
    parts = []
    for s in block_slices(block_dims):
        parts += [first[:, s], second[:, s]]
    return np.concatenate(parts, axis=1)


def bidir_to_unidir(sol: BidirectionalSolution, p: StateConversionProblem, tol: float = 1e-9) -> FeasibleSolution:
    """Solution for the lifted problem: ``((u + v) + O(u - v)) / 2`` per block."""
    r = bidirectional_residual(sol, p)
    if r > tol * scale(problem_gram_gap(p)):
        raise NotFeasible(f"bidirectional pair violates the constraint by {r:.3e}")
    fam = p.oracles
    w = max(sol.u.w_dim, sol.v.w_dim)
    u, v = sol.u.padded(w).data, sol.v.padded(w).data
    first = (u + v) / 2
    second = np.einsum("xij,xjw->xiw", fam.stacked(), u - v) / 2
    lifted = tuple(2 * d for d in fam.block_dims)
    return FeasibleSolution(fam.labels, lifted, _join_lifted(first, second, fam.block_dims))


def unidir_to_bidir(sol: FeasibleSolution, p: StateConversionProblem, tol: float = 1e-9) -> BidirectionalSolution:
    """From a lifted solution ``v' + v''``: ``u = v' + O^* v''`` and ``v = v' - O^* v''`` along ``W``."""
    fam = p.oracles
    if sol.block_dims != tuple(2 * d for d in fam.block_dims) or sol.labels != fam.labels:
        raise ShapeError("solution is not for the lifted problem")
    r = residual(sol, lift_bidirectional(p))
    if r > tol * scale(problem_gram_gap(p)):
        raise NotFeasible(f"lifted solution violates the constraint by {r:.3e}")
    first, second = _split_lifted(sol.data, fam.block_dims)
    back = np.einsum("xji,xjw->xiw", fam.stacked().conj(), second)
    u = np.concatenate([first, back], axis=2)
    v = np.concatenate([first, -back], axis=2)
    return BidirectionalSolution(FeasibleSolution(fam.labels, fam.block_dims, u),
                                 FeasibleSolution(fam.labels, fam.block_dims, v))


# ---------------------------------------------------------------------------
# constructions


def feasible_from_offdiagonal(e: np.ndarray, deltas: OracleFamily | np.ndarray, tol: float = 1e-13,
                              class_tol: float = TOL.class_, labels: Sequence[str] | None = None,
                              block_dims: Sequence[int] | None = None) -> FeasibleSolution:
    """A feasible solution for a Gram gap ``e`` with zero diagonal.

    ``deltas`` is an oracle family or an array ``(|D|, |D|, m, m)`` of the
    blocks ``Delta_xy``.  Every pair ``x < y`` with ``e[x, y] != 0`` gets a
    fresh coordinate of ``W`` holding the top singular vectors ``u, v`` of
    ``Delta_xy``, scaled so that both labels pay ``|e_xy| / ||Delta_xy||``.
    """
    if isinstance(deltas, OracleFamily):
        labels, block_dims = deltas.labels, deltas.block_dims
        deltas = deltas.deltas()
    deltas = np.asarray(deltas, dtype=complex)
    e = check_hermitian(e)
    n = e.shape[0]
    if deltas.ndim != 4 or deltas.shape[:2] != (n, n) or deltas.shape[2] != deltas.shape[3]:
        raise ShapeError(f"deltas of shape {deltas.shape} for a gap of shape {e.shape}")
    m = deltas.shape[2]
    labels = tuple(str(i) for i in range(n)) if labels is None else tuple(labels)
    block_dims = (m,) if block_dims is None else tuple(block_dims)
    thr = tol * scale(e)
    if np.max(np.abs(np.diag(e)), initial=0.0) > thr:
        raise InvariantViolation("gap must have a zero diagonal")
    if any(np.max(np.abs(deltas[x, x]), initial=0.0) > class_tol for x in range(n)):
        raise InvariantViolation("construction needs Delta_xx = 0")
    pairs = [(x, y) for x in range(n) for y in range(x + 1, n) if abs(e[x, y]) > thr]
    data = np.zeros((n, m, len(pairs)), dtype=complex)
    for w, (x, y) in enumerate(pairs):
        if np.max(np.abs(deltas[x, y])) <= class_tol:
            raise Inconsistent(f"nonzero gap {e[x, y]:.3e} between labels with equal oracles")
        sigma, u, v = top_singular_triple(deltas[x, y])
        r = np.sqrt(abs(e[x, y]) / sigma)
        data[x, :, w] = r * u
        data[y, :, w] = (e[x, y] / abs(e[x, y])) * r * v
    return FeasibleSolution(labels, block_dims, data)


def _pinv(a: np.ndarray, rank_tol: float) -> np.ndarray:
    if a.size == 0:
        return a.conj().T
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    keep = s > rank_tol * max(1.0, float(s[0]))
    return (vh[keep].conj().T / s[keep]) @ u[:, keep].conj().T


def _classes(fam: OracleFamily, classes, class_tol: float) -> list[list[int]]:
    if classes is None:
        return fam.classes(class_tol)
    return [[fam.index(x) if isinstance(x, str) else int(x) for x in c] for c in classes]


def _class_fit_error(sol: FeasibleSolution, p: StateConversionProblem, idx: list[int], rank_tol: float) -> float:
    xi = p.xi[idx].T
    vm = sol.flat()[idx].T
    fit = vm @ _pinv(xi, rank_tol) @ xi
    return float(np.max(np.abs(fit - vm), initial=0.0))


def consistency_check(sol: FeasibleSolution, p: StateConversionProblem, tol: float = 1e-9, classes=None,
                      class_tol: float = TOL.class_, rank_tol: float = TOL.rank) -> bool:
    """Whether ``v_x = V_O xi_x`` for one linear map per oracle class."""
    _check_match(sol, p.oracles)
    return all(_class_fit_error(sol, p, c, rank_tol) <= tol
               for c in _classes(p.oracles, classes, class_tol) if len(c) > 1)


def _orth(cols: np.ndarray, tol: float) -> np.ndarray:
    if cols.size == 0:
        return np.zeros((cols.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(cols, full_matrices=False)
    return u[:, s > tol * max(1.0, float(s[0]) if s.size else 1.0)]


def pareto_project(sol: FeasibleSolution, p: StateConversionProblem, tol: float = 1e-9, classes=None,
                   class_tol: float = TOL.class_, rank_tol: float = TOL.rank) -> FeasibleSolution:
    """Replace an inconsistent solution by a consistent one it dominates.

    For an oracle class ``D_O`` every ``v_x`` with ``x`` in ``D_O`` is
    projected onto the span of ``((I - O^* O_y) (x) I) v_y`` for ``y``
    outside the class together with the range of ``(I - O^* O) (x) I``.
    Classes that are already consistent are left alone.
    """
    fam = p.oracles
    _check_match(sol, fam)
    if fam.kind not in ("unitary", "contraction"):
        raise KindError("projection needs unitary or contraction oracles")
    r = residual(sol, p)
    if r > tol * scale(problem_gram_gap(p)):
        raise NotFeasible(f"solution violates the constraint by {r:.3e}")
    data = sol.data.copy()
    w = sol.w_dim
    flat = data.reshape(len(fam.labels), -1)
    for c in _classes(fam, classes, class_tol):
        if len(c) < 2 or _class_fit_error(sol, p, c, rank_tol) <= tol:
            continue
        o = fam.full(fam.labels[c[0]])
        outside = [y for y in range(len(fam.labels)) if y not in c]
        cols = [(np.kron(np.eye(fam.m_dim) - o.conj().T @ fam.full(fam.labels[y]), np.eye(w)) @ flat[y])
                for y in outside]
        evals, evecs = np.linalg.eigh(np.eye(fam.m_dim) - o.conj().T @ o)
        rng = evecs[:, evals > rank_tol]
        cols += list(np.kron(rng, np.eye(w)).T)
        basis = _orth(np.array(cols).T if cols else np.zeros((flat.shape[1], 0)), rank_tol)
        proj = basis @ basis.conj().T
        for x in c:
            flat[x] = proj @ flat[x]
    return FeasibleSolution(sol.labels, sol.block_dims, flat.reshape(data.shape))


# ---------------------------------------------------------------------------
# subspace conversion


@dataclass(frozen=True, eq=False)
class OperatorSolution:
    """Per-label maps ``V_x`` from ``K_x`` (basis coordinates) into ``M (x) W``.

    ``maps[x]`` has shape ``(dim M * w_dim, r_x)``.
    """

    labels: tuple[str, ...]
    block_dims: tuple[int, ...]
    w_dim: int
    maps: Mapping[str, np.ndarray]

    def __post_init__(self):
        m = sum(self.block_dims)
        maps = {}
        for x in self.labels:
            a = np.atleast_2d(np.asarray(self.maps[x], dtype=complex))
            if a.shape[0] != m * self.w_dim:
                raise ShapeError(f"map for {x!r} has {a.shape[0]} rows, expected {m * self.w_dim}")
            maps[x] = a
        object.__setattr__(self, "maps", maps)


def subspace_residual(vsol: OperatorSolution, sp: SubspaceConversionProblem) -> float:
    fam = sp.oracles
    worst = 0.0
    iw = np.eye(vsol.w_dim)
    for x in fam.labels:
        for y in fam.labels:
            lhs = sp.bases[x].conj().T @ sp.bases[y] - sp.maps[x].conj().T @ sp.maps[y]
            rhs = vsol.maps[x].conj().T @ np.kron(fam.delta(x, y), iw) @ vsol.maps[y]
            worst = max(worst, float(np.max(np.abs(lhs - rhs), initial=0.0)))
    return worst


def restrict_to_state(vsol: OperatorSolution, sp: SubspaceConversionProblem, x: str, xi: np.ndarray,
                      tol: float = 1e-9) -> BlockVector:
    """``V_x xi`` for ``xi`` in ``K_x`` (given in coordinates of ``K``)."""
    b = sp.bases[x]
    xi = np.asarray(xi, dtype=complex).reshape(-1)
    coeff = b.conj().T @ xi
    if np.linalg.norm(b @ coeff - xi) > tol * max(1.0, float(np.linalg.norm(xi))):
        raise SubspaceError(f"vector is not in the subspace of label {x!r}")
    return BlockVector((vsol.maps[x] @ coeff).reshape(sum(vsol.block_dims), vsol.w_dim), vsol.block_dims)
