"""Query algorithms, their simulation, and Las Vegas complexity.

An algorithm is ``U_T O~ U_{T-1} ... O~ U_0`` where the query
``O~ = (O (x) I_B) + I_C`` is placed inside the workspace by a fixed
:class:`QueryEmbedding`.  Each ``U_t`` is stored as a short sequence of
:class:`Gate` objects, each acting on a subset of the coordinates, so that
compiled algorithms with thousands of steps stay cheap to store and run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import InvariantViolation, RangeError, ShapeError
from .model import (BlockVector, ComplexityProfile, OracleFamily, StateConversionProblem,
                    concat_w)
from .numlin import TOL, is_unitary


def _readonly(a, dtype) -> np.ndarray:
    """Read-only array; already read-only inputs are shared rather than copied."""
    out = np.asarray(a, dtype=dtype)
    if out.flags.writeable:
        out = out.copy()
        out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Gate:
    """A unitary acting on the coordinates ``support``.

    Without ``basis`` it acts as ``matrix``.  With ``basis`` (orthonormal
    columns over the support) it acts as ``I + basis (matrix - I) basis^*``,
    which keeps unitaries that move only a small subspace cheap.
    """

    support: np.ndarray
    matrix: np.ndarray
    basis: np.ndarray | None = None

    def __post_init__(self):
        sup = _readonly(self.support, np.intp).reshape(-1)
        mat = _readonly(self.matrix, complex)
        r = sup.size
        if self.basis is not None:
            b = _readonly(self.basis, complex)
            if b.ndim != 2 or b.shape[0] != sup.size:
                raise ShapeError(f"gate basis {b.shape} on support of size {sup.size}")
            r = b.shape[1]
            object.__setattr__(self, "basis", b)
        if mat.shape != (r, r):
            raise ShapeError(f"gate matrix {mat.shape}, expected {(r, r)}")
        if np.unique(sup).size != sup.size:
            raise ShapeError("gate support has repeated coordinates")
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "matrix", mat)

    def apply(self, sub: np.ndarray) -> np.ndarray:
        if self.basis is None:
            return self.matrix @ sub
        b = self.basis
        return sub + b @ ((self.matrix - np.eye(b.shape[1])) @ (b.conj().T @ sub))

    def dense(self) -> np.ndarray:
        """The unitary on the support as a dense matrix."""
        return self.apply(np.eye(self.support.size, dtype=complex))

    def is_unitary(self, tol: float = TOL.unitary) -> bool:
        if self.basis is not None and not np.allclose(self.basis.conj().T @ self.basis,
                                                      np.eye(self.basis.shape[1]), atol=tol):
            return False
        return is_unitary(self.matrix, tol)

    def adjoint(self) -> "Gate":
        return Gate(self.support, self.matrix.conj().T, self.basis)

    def remap(self, coord_map: np.ndarray) -> "Gate":
        return Gate(np.asarray(coord_map)[self.support], self.matrix, self.basis)

    def kron_identity(self, d: int, coord_of) -> "Gate":
        """``gate (x) I_d`` with support coordinate ``(c, j)`` placed at ``coord_of(c, j)``."""
        sup = np.array([[coord_of(c, j) for j in range(d)] for c in self.support]).reshape(-1)
        basis = None if self.basis is None else np.kron(self.basis, np.eye(d))
        return Gate(sup, np.kron(self.matrix, np.eye(d)), basis)


Step = tuple[Gate, ...]


def dense_gate(u: np.ndarray) -> Gate:
    u = np.asarray(u, dtype=complex)
    return Gate(np.arange(u.shape[0]), u)


def step_matrix(step: Sequence[Gate], h_dim: int) -> np.ndarray:
    """Dense matrix of a gate sequence (first gate applied first)."""
    u = np.eye(h_dim, dtype=complex)
    for g in step:
        u[g.support] = g.apply(u[g.support])
    return u


@dataclass(frozen=True, eq=False)
class QueryEmbedding:
    """Placement of ``(M (x) B) + C`` inside the workspace.

    Canonical coordinates are ``m * b_dim + j`` for ``M (x) B`` followed by
    ``C``; ``layout[c]`` is the workspace coordinate of canonical coordinate
    ``c``.
    """

    b_dim: int
    c_dim: int
    layout: tuple[int, ...]

    def __post_init__(self):
        layout = tuple(int(i) for i in self.layout)
        object.__setattr__(self, "layout", layout)
        if self.b_dim < 0 or self.c_dim < 0:
            raise ShapeError("negative embedding dimension")
        if sorted(layout) != list(range(len(layout))):
            raise InvariantViolation("layout is not a permutation")

    @classmethod
    def standard(cls, h_dim: int, m_dim: int, b_dim: int) -> "QueryEmbedding":
        c = h_dim - m_dim * b_dim
        if c < 0:
            raise ShapeError(f"workspace of size {h_dim} cannot hold {m_dim}x{b_dim} query coordinates")
        return cls(b_dim, c, tuple(range(h_dim)))

    def query_index(self, m_dim: int) -> np.ndarray:
        """Workspace coordinates of ``M (x) B`` as an ``(m_dim, b_dim)`` array."""
        return np.asarray(self.layout[:m_dim * self.b_dim], dtype=np.intp).reshape(m_dim, self.b_dim)

    def skip_index(self, m_dim: int) -> np.ndarray:
        return np.asarray(self.layout[m_dim * self.b_dim:], dtype=np.intp)

    def same_as(self, other: "QueryEmbedding") -> bool:
        return (self.b_dim, self.c_dim, self.layout) == (other.b_dim, other.c_dim, other.layout)


@dataclass(frozen=True, eq=False)
class QueryAlgorithm:
    """``U_T O~ ... O~ U_0`` with ``steps[t]`` the gate sequence of ``U_t``."""

    h_dim: int
    steps: tuple[Step, ...]
    embedding: QueryEmbedding
    oracle_block_dims: tuple[int, ...]
    meta: Mapping[str, Any] = field(default_factory=dict, compare=False)
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        bd = tuple(int(d) for d in self.oracle_block_dims)
        object.__setattr__(self, "oracle_block_dims", bd)
        steps = tuple(tuple(s) for s in self.steps)
        object.__setattr__(self, "steps", steps)
        if not steps:
            raise ShapeError("an algorithm needs at least U_0")
        e = self.embedding
        if sum(bd) * e.b_dim + e.c_dim != self.h_dim or len(e.layout) != self.h_dim:
            raise ShapeError(f"embedding (b={e.b_dim}, c={e.c_dim}) inconsistent with h_dim={self.h_dim}, "
                             f"dim M={sum(bd)}")
        if self.check:
            for step in steps:
                for g in step:
                    if g.support.size and (g.support.min() < 0 or g.support.max() >= self.h_dim):
                        raise ShapeError("gate support outside the workspace")
                    if not g.is_unitary(TOL.unitary):
                        raise InvariantViolation("gate matrix is not unitary")

    @classmethod
    def from_unitaries(cls, unitaries: Sequence[np.ndarray], embedding: QueryEmbedding,
                       oracle_block_dims: Sequence[int], **kw) -> "QueryAlgorithm":
        us = [np.asarray(u, dtype=complex) for u in unitaries]
        if not us:
            raise ShapeError("an algorithm needs at least U_0")
        h = us[0].shape[0]
        for u in us:
            if u.shape != (h, h):
                raise ShapeError(f"unitary of shape {u.shape}, expected {(h, h)}")
        return cls(h, tuple((dense_gate(u),) for u in us), embedding, tuple(oracle_block_dims), **kw)

    @property
    def T(self) -> int:
        return len(self.steps) - 1

    @property
    def m_dim(self) -> int:
        return sum(self.oracle_block_dims)

    @property
    def b_dim(self) -> int:
        return self.embedding.b_dim

    def unitary(self, t: int) -> np.ndarray:
        if not 0 <= t <= self.T:
            raise RangeError(f"t={t} outside 0..{self.T}")
        return step_matrix(self.steps[t], self.h_dim)

    @property
    def unitaries(self) -> list[np.ndarray]:
        return [self.unitary(t) for t in range(self.T + 1)]

    def gate_count(self) -> int:
        return sum(len(s) for s in self.steps)

    def with_meta(self, **meta) -> "QueryAlgorithm":
        return QueryAlgorithm(self.h_dim, self.steps, self.embedding, self.oracle_block_dims,
                              {**self.meta, **meta}, check=False)


@dataclass(frozen=True, eq=False)
class QueryRecord:
    """Query inputs ``Q_t xi`` for ``t = 1..T`` and the final state."""

    inputs: tuple[BlockVector, ...]
    final: np.ndarray


# ---------------------------------------------------------------------------
# simulation kernel


def _apply_step(psi: np.ndarray, step: Step) -> None:
    for g in step:
        psi[g.support] = g.apply(psi[g.support])


def _as_ops(op: np.ndarray, m: int) -> np.ndarray:
    op = np.asarray(op, dtype=complex)
    if op.shape[-2:] != (m, m):
        raise ShapeError(f"oracle of shape {op.shape[-2:]} for dim M = {m}")
    return op


def _run(algo: QueryAlgorithm, op: np.ndarray, psi: np.ndarray, *, upto: int | None = None,
         record: bool = False, norms: bool = False):
    """Run ``algo`` on the columns of ``psi`` (modified in place).

    ``op`` is one ``(m, m)`` oracle shared by all columns or a stack of
    ``(n, m, m)`` oracles, one per column.  Stops right before query
    ``upto`` when given.  Returns the recorded query inputs
    (``(m, b, n)`` arrays) and the per-column, per-block Las Vegas sums.
    """
    m = algo.m_dim
    op = _as_ops(op, m)
    q = algo.embedding.query_index(m)
    rec: list[np.ndarray] = []
    n = psi.shape[1]
    bd = algo.oracle_block_dims
    lv = np.zeros((n, len(bd)))
    _apply_step(psi, algo.steps[0])
    last = algo.T if upto is None else upto - 1
    for t in range(1, last + 1):
        block = psi[q]
        if record:
            rec.append(block.copy())
        if norms and block.size:
            sq = np.sum(np.abs(block) ** 2, axis=1)
            start = 0
            for i, d in enumerate(bd):
                lv[:, i] += np.sum(sq[start:start + d], axis=0)
                start += d
        if op.ndim == 2:
            psi[q] = np.einsum("ij,jbn->ibn", op, block)
        else:
            psi[q] = np.einsum("nij,jbn->ibn", op, block)
        _apply_step(psi, algo.steps[t])
    return rec, lv


def _state(algo: QueryAlgorithm, xi: np.ndarray) -> np.ndarray:
    xi = np.asarray(xi, dtype=complex)
    if xi.ndim == 1:
        xi = xi[:, None]
    if xi.shape[0] > algo.h_dim:
        raise ShapeError(f"state of dimension {xi.shape[0]} exceeds workspace {algo.h_dim}")
    psi = np.zeros((algo.h_dim, xi.shape[1]), dtype=complex)
    psi[:xi.shape[0]] = xi
    return psi


def _check_family(algo: QueryAlgorithm, fam: OracleFamily) -> None:
    if tuple(fam.block_dims) != algo.oracle_block_dims:
        raise ShapeError(f"oracle blocks {fam.block_dims} vs algorithm blocks {algo.oracle_block_dims}")


def run_operator(algo: QueryAlgorithm, op: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """``A(O) xi`` for an explicit full oracle matrix ``O``."""
    psi = _state(algo, xi)
    _run(algo, op, psi)
    return psi[:, 0] if np.ndim(xi) == 1 else psi


def apply_operator(algo: QueryAlgorithm, op: np.ndarray) -> np.ndarray:
    psi = np.eye(algo.h_dim, dtype=complex)
    _run(algo, op, psi)
    return psi


def apply(algo: QueryAlgorithm, fam: OracleFamily, x: str) -> np.ndarray:
    """The dense matrix ``A(O_x)``."""
    _check_family(algo, fam)
    return apply_operator(algo, fam.full(x))


def state_before_query(algo: QueryAlgorithm, fam: OracleFamily, x: str, t: int, xi: np.ndarray) -> np.ndarray:
    """``U_{t-1} O~ ... O~ U_0 xi`` for ``t`` in ``1..T+1``."""
    _check_family(algo, fam)
    if not 1 <= t <= algo.T + 1:
        raise RangeError(f"t={t} outside 1..{algo.T + 1}")
    psi = _state(algo, xi)
    _run(algo, fam.full(x), psi, upto=t)
    return psi[:, 0]


def query_input(algo: QueryAlgorithm, fam: OracleFamily, x: str, t: int, xi: np.ndarray) -> BlockVector:
    """``Q_t xi``: the part of the state processed by query ``t``."""
    if not 1 <= t <= algo.T:
        raise RangeError(f"t={t} outside 1..{algo.T}")
    psi = state_before_query(algo, fam, x, t, xi)
    return BlockVector(psi[algo.embedding.query_index(algo.m_dim)], algo.oracle_block_dims)


def trace_operator(algo: QueryAlgorithm, op: np.ndarray, xi: np.ndarray) -> QueryRecord:
    psi = _state(algo, xi)
    rec, _ = _run(algo, op, psi, record=True)
    bd = algo.oracle_block_dims
    return QueryRecord(tuple(BlockVector(r[:, :, 0], bd) for r in rec), psi[:, 0])


def trace(algo: QueryAlgorithm, fam: OracleFamily, x: str, xi: np.ndarray) -> QueryRecord:
    _check_family(algo, fam)
    return trace_operator(algo, fam.full(x), xi)


def las_vegas_operator(algo: QueryAlgorithm, op: np.ndarray, xi: np.ndarray) -> np.ndarray:
    psi = _state(algo, xi)
    _, lv = _run(algo, op, psi, norms=True)
    return lv[0]


def las_vegas(algo: QueryAlgorithm, fam: OracleFamily, x: str, xi: np.ndarray) -> np.ndarray:
    """Blockwise Las Vegas complexity ``sum_t ||Q_t xi||^2``."""
    _check_family(algo, fam)
    return las_vegas_operator(algo, fam.full(x), xi)


def total_query_operator(algo: QueryAlgorithm, op: np.ndarray, xi: np.ndarray) -> BlockVector:
    rec = trace_operator(algo, op, xi)
    return concat_w(rec.inputs, algo.oracle_block_dims)


def total_query(algo: QueryAlgorithm, fam: OracleFamily, x: str, xi: np.ndarray) -> BlockVector:
    """``Q_1 xi + ... + Q_T xi`` (direct sum along ``W``)."""
    _check_family(algo, fam)
    return total_query_operator(algo, fam.full(x), xi)


def simulate_all(algo: QueryAlgorithm, fam: OracleFamily, xis: np.ndarray,
                 labels: Sequence[str] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Final states ``(n, h)`` and Las Vegas profiles ``(n, s)`` for all labels at once."""
    _check_family(algo, fam)
    labels = fam.labels if labels is None else tuple(labels)
    ops = np.stack([fam.full(x) for x in labels]) if labels else np.zeros((0, algo.m_dim, algo.m_dim))
    psi = _state(algo, np.asarray(xis, dtype=complex).T)
    _, lv = _run(algo, ops, psi, norms=True)
    return psi.T, lv


def las_vegas_profile(algo: QueryAlgorithm, p: StateConversionProblem) -> ComplexityProfile:
    _, lv = simulate_all(algo, p.oracles, p.xi)
    return ComplexityProfile(p.labels, lv)


@dataclass(frozen=True)
class ConversionReport:
    errors: Mapping[str, float]
    tol: float
    profile: ComplexityProfile | None = None

    @property
    def ok(self) -> bool:
        return all(e <= self.tol for e in self.errors.values())

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)


def check_state_conversion(algo: QueryAlgorithm, p: StateConversionProblem, tol: float = 1e-9) -> ConversionReport:
    """Per-label ``||A(O_x) xi_x - tau_x||`` with ``xi``, ``tau`` zero-padded."""
    finals, lv = simulate_all(algo, p.oracles, p.xi)
    tau = np.zeros_like(finals)
    tau[:, :p.k_dim] = p.tau
    errs = {x: float(np.linalg.norm(finals[i] - tau[i])) for i, x in enumerate(p.labels)}
    return ConversionReport(errs, tol, ComplexityProfile(p.labels, lv))

