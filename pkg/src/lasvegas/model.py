"""Oracle families, block vectors, problems and complexity profiles.

A vector ``v`` in ``M (x) W`` with ``M = M^(1) + ... + M^(s)`` is stored as a
``dim M x dim W`` matrix whose rows are grouped into the ``s`` oracle blocks.
With this layout ``(O (x) I_W) v`` is the matrix product ``O @ v`` and the
direct sum along ``W`` is column concatenation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import InvariantViolation, LabelError, ShapeError
from .numlin import TOL, gram, is_unitary, spectral_norm

KINDS = ("unitary", "contraction", "general")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def block_slices(block_dims: Sequence[int]) -> list[slice]:
    offs = np.concatenate([[0], np.cumsum(block_dims)]).astype(int)
    return [slice(int(offs[i]), int(offs[i + 1])) for i in range(len(block_dims))]


@dataclass(frozen=True, eq=False)
class OracleFamily:
    """Per-label block-diagonal input oracles ``O_x = O_x^(1) + ... + O_x^(s)``."""

    labels: tuple[str, ...]
    block_dims: tuple[int, ...]
    operators: Mapping[str, tuple[np.ndarray, ...]]
    kind: str = "unitary"

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "block_dims", tuple(int(d) for d in self.block_dims))
        if len(set(labels)) != len(labels):
            raise LabelError("duplicate labels")
        if self.kind not in KINDS:
            raise InvariantViolation(f"unknown oracle kind {self.kind!r}")
        if any(d <= 0 for d in self.block_dims) or not self.block_dims:
            raise ShapeError("block dimensions must be positive")
        ops = {}
        for x in labels:
            if x not in self.operators:
                raise LabelError(f"no operator for label {x!r}")
            blocks = tuple(_frozen(b) for b in self.operators[x])
            if len(blocks) != len(self.block_dims):
                raise ShapeError(f"label {x!r}: {len(blocks)} blocks, expected {len(self.block_dims)}")
            for b, d in zip(blocks, self.block_dims):
                if b.shape != (d, d):
                    raise ShapeError(f"label {x!r}: block of shape {b.shape}, expected {(d, d)}")
                if not np.all(np.isfinite(b)):
                    raise InvariantViolation("non-finite oracle entry")
                if self.kind == "unitary" and not is_unitary(b):
                    raise InvariantViolation(f"label {x!r}: block is not unitary")
                if self.kind == "contraction" and spectral_norm(b) > 1 + TOL.psd:
                    raise InvariantViolation(f"label {x!r}: block is not a contraction")
            ops[x] = blocks
        object.__setattr__(self, "operators", ops)

    @classmethod
    def from_matrices(cls, ops: Mapping[str, np.ndarray] | Sequence[np.ndarray],
                      block_dims: Sequence[int] | None = None, kind: str = "unitary") -> "OracleFamily":
        """Build a family from full (block-diagonal) matrices."""
        if not isinstance(ops, Mapping):
            ops = {str(i): o for i, o in enumerate(ops)}
        first = np.asarray(next(iter(ops.values())))
        block_dims = tuple(block_dims) if block_dims is not None else (first.shape[0],)
        sl = block_slices(block_dims)
        blocks = {}
        for x, o in ops.items():
            o = np.atleast_2d(np.asarray(o, dtype=complex))
            if o.shape != (sum(block_dims),) * 2:
                raise ShapeError(f"operator for {x!r} has shape {o.shape}")
            blocks[str(x)] = tuple(o[s, s] for s in sl)
        return cls(tuple(blocks), block_dims, blocks, kind)

    @property
    def s(self) -> int:
        return len(self.block_dims)

    @property
    def m_dim(self) -> int:
        return sum(self.block_dims)

    def index(self, x: str) -> int:
        try:
            return self._index[x]
        except KeyError:
            raise LabelError(f"unknown label {x!r}") from None

    @cached_property
    def _index(self) -> dict[str, int]:
        return {x: i for i, x in enumerate(self.labels)}

    @cached_property
    def _full(self) -> np.ndarray:
        return np.stack([sla.block_diag(*self.operators[x]) for x in self.labels]).astype(complex)

    def full(self, x: str) -> np.ndarray:
        """The full operator ``O_x`` on ``M``."""
        return self._full[self.index(x)]

    def stacked(self) -> np.ndarray:
        """All full operators, shape ``(|D|, dim M, dim M)``, in label order."""
        return self._full

    def delta(self, x: str, y: str) -> np.ndarray:
        """``I - O_x^* O_y``."""
        ox, oy = self.full(x), self.full(y)
        return np.eye(self.m_dim) - ox.conj().T @ oy

    def deltas(self) -> np.ndarray:
        """All ``I - O_x^* O_y`` as an array of shape ``(|D|, |D|, m, m)``."""
        o = self._full
        return np.eye(self.m_dim)[None, None] - np.einsum("xji,yjk->xyik", o.conj(), o)

    def adjoint(self) -> "OracleFamily":
        """The family of adjoint oracles ``O_x^*``."""
        ops = {x: tuple(b.conj().T for b in self.operators[x]) for x in self.labels}
        return OracleFamily(self.labels, self.block_dims, ops, self.kind)

    def restrict(self, labels: Iterable[str]) -> "OracleFamily":
        labels = tuple(labels)
        return OracleFamily(labels, self.block_dims, {x: self.operators[self.labels[self.index(x)]] for x in labels},
                            self.kind)

    def classes(self, tol: float = TOL.class_) -> list[list[int]]:
        """Groups of label indices whose oracles agree within ``tol`` (max-norm)."""
        o = self._full
        out: list[list[int]] = []
        for i in range(len(self.labels)):
            for c in out:
                if np.max(np.abs(o[c[0]] - o[i]), initial=0.0) <= tol:
                    c.append(i)
                    break
            else:
                out.append([i])
        return out


@dataclass(frozen=True, eq=False)
class BlockVector:
    """An element of ``M (x) W`` stored as a ``dim M x w_dim`` matrix."""

    data: np.ndarray
    block_dims: tuple[int, ...]

    def __post_init__(self):
        d = np.array(self.data, dtype=complex)
        if d.ndim == 1:
            d = d.reshape(-1, 1)
        object.__setattr__(self, "block_dims", tuple(int(b) for b in self.block_dims))
        if d.ndim != 2 or d.shape[0] != sum(self.block_dims):
            raise ShapeError(f"block vector data of shape {d.shape} for blocks {self.block_dims}")
        d.setflags(write=False)
        object.__setattr__(self, "data", d)

    @classmethod
    def zeros(cls, block_dims: Sequence[int], w_dim: int = 0) -> "BlockVector":
        return cls(np.zeros((sum(block_dims), w_dim), dtype=complex), tuple(block_dims))

    @classmethod
    def from_blocks(cls, blocks: Sequence[np.ndarray]) -> "BlockVector":
        blocks = [np.atleast_2d(np.asarray(b, dtype=complex)) for b in blocks]
        return cls(np.concatenate(blocks, axis=0), tuple(b.shape[0] for b in blocks))

    @property
    def w_dim(self) -> int:
        return self.data.shape[1]

    @property
    def s(self) -> int:
        return len(self.block_dims)

    def blocks(self) -> list[np.ndarray]:
        return [self.data[s] for s in block_slices(self.block_dims)]

    def flat(self) -> np.ndarray:
        """Coordinates in ``M (x) W`` with index ``m * w_dim + w``."""
        return self.data.reshape(-1)

    def __add__(self, other: "BlockVector") -> "BlockVector":
        a, b = pad_w(self, other.w_dim), pad_w(other, self.w_dim)
        return BlockVector(a.data + b.data, self.block_dims)

    def __sub__(self, other: "BlockVector") -> "BlockVector":
        return self + other.scaled(-1)

    def scaled(self, c: complex) -> "BlockVector":
        return BlockVector(c * self.data, self.block_dims)

    def oplus(self, other: "BlockVector") -> "BlockVector":
        """Direct sum along ``W``."""
        if other.block_dims != self.block_dims:
            raise ShapeError("block dimensions differ")
        return BlockVector(np.concatenate([self.data, other.data], axis=1), self.block_dims)


def pad_w(v: BlockVector, w_dim: int) -> BlockVector:
    """Zero-pad ``v`` along ``W`` to at least ``w_dim`` columns."""
    if v.w_dim >= w_dim:
        return v
    return BlockVector(np.pad(v.data, ((0, 0), (0, w_dim - v.w_dim))), v.block_dims)


def concat_w(vectors: Sequence[BlockVector], block_dims: Sequence[int]) -> BlockVector:
    if not vectors:
        return BlockVector.zeros(block_dims, 0)
    return BlockVector(np.concatenate([v.data for v in vectors], axis=1), tuple(block_dims))


def dnorm_sq(v: BlockVector) -> np.ndarray:
    """Blockwise squared norms ``(||v^(1)||^2, ..., ||v^(s)||^2)``."""
    return np.array([float(np.sum(np.abs(b) ** 2)) for b in v.blocks()])


def block_norms_rows(rows: np.ndarray, block_dims: Sequence[int]) -> np.ndarray:
    """Sum per-row squared magnitudes of a ``(dim M, ...)`` array into blocks."""
    r = np.sum(np.abs(rows.reshape(rows.shape[0], -1)) ** 2, axis=1)
    return np.array([float(np.sum(r[s])) for s in block_slices(block_dims)])


def apply_oracle(fam: OracleFamily, x: str, v: BlockVector) -> BlockVector:
    """``(O_x (x) I_W) v``."""
    if v.block_dims != fam.block_dims:
        raise ShapeError(f"vector blocks {v.block_dims} vs oracle blocks {fam.block_dims}")
    return BlockVector(fam.full(x) @ v.data, v.block_dims)


def _vectors(vals, labels: Sequence[str]) -> np.ndarray:
    if isinstance(vals, Mapping):
        missing = [x for x in labels if x not in vals]
        if missing:
            raise LabelError(f"missing vectors for labels {missing}")
        vals = [vals[x] for x in labels]
    rows = [np.asarray(v, dtype=complex).reshape(-1) for v in vals]
    if len(rows) != len(labels):
        raise ShapeError(f"{len(rows)} vectors for {len(labels)} labels")
    if len({r.shape[0] for r in rows}) > 1:
        raise ShapeError("vectors of differing dimensions")
    return np.stack(rows) if rows else np.zeros((0, 0), dtype=complex)


@dataclass(frozen=True, eq=False)
class StateConversionProblem:
    """Convert ``xi_x`` to ``tau_x`` given access to ``O_x``.

    ``xi`` and ``tau`` are stored as ``(|D|, k_dim)`` arrays in label order.
    """

    oracles: OracleFamily
    xi: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        labels = self.oracles.labels
        xi, tau = _frozen(_vectors(self.xi, labels)), _frozen(_vectors(self.tau, labels))
        if xi.shape != tau.shape:
            raise ShapeError(f"xi has shape {xi.shape}, tau has {tau.shape}")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "tau", tau)

    @property
    def labels(self) -> tuple[str, ...]:
        return self.oracles.labels

    @property
    def k_dim(self) -> int:
        return self.xi.shape[1]

    def xi_of(self, x: str) -> np.ndarray:
        return self.xi[self.oracles.index(x)]

    def tau_of(self, x: str) -> np.ndarray:
        return self.tau[self.oracles.index(x)]

    def padded(self, k_dim: int) -> "StateConversionProblem":
        """Same problem with ``xi``, ``tau`` zero-padded into a larger space."""
        if k_dim < self.k_dim:
            raise ShapeError("cannot shrink the output space")
        pad = ((0, 0), (0, k_dim - self.k_dim))
        return StateConversionProblem(self.oracles, np.pad(self.xi, pad), np.pad(self.tau, pad))


def problem_gram_gap(p: StateConversionProblem) -> np.ndarray:
    """``E = G_xi - G_tau``."""
    return gram(p.xi.T) - gram(p.tau.T)


@dataclass(frozen=True, eq=False)
class SubspaceConversionProblem:
    """Implement ``T_x`` on the subspace ``K_x`` of ``K``.

    ``bases[x]`` is a ``k_dim x r_x`` matrix with orthonormal columns spanning
    ``K_x``; ``maps[x]`` is the ``k_dim x r_x`` matrix of ``T_x`` in that basis.
    """

    oracles: OracleFamily
    k_dim: int
    bases: Mapping[str, np.ndarray]
    maps: Mapping[str, np.ndarray]
    kind: str = "isometric"

    def __post_init__(self):
        bases, maps = {}, {}
        for x in self.oracles.labels:
            if x not in self.bases or x not in self.maps:
                raise LabelError(f"missing subspace data for {x!r}")
            b = _frozen(np.atleast_2d(self.bases[x]))
            t = _frozen(np.atleast_2d(self.maps[x]))
            if b.shape[0] != self.k_dim or t.shape != b.shape:
                raise ShapeError(f"label {x!r}: basis {b.shape}, map {t.shape}, k_dim {self.k_dim}")
            if not np.allclose(b.conj().T @ b, np.eye(b.shape[1]), atol=TOL.unitary):
                raise InvariantViolation(f"label {x!r}: basis is not orthonormal")
            if self.kind == "isometric" and not np.allclose(t.conj().T @ t, np.eye(t.shape[1]), atol=TOL.unitary):
                raise InvariantViolation(f"label {x!r}: map is not an isometry")
            bases[x], maps[x] = b, t
        if self.kind not in ("isometric", "contraction"):
            raise InvariantViolation(f"unknown subspace problem kind {self.kind!r}")
        object.__setattr__(self, "bases", bases)
        object.__setattr__(self, "maps", maps)


@dataclass(frozen=True, eq=False)
class ComplexityProfile:
    """A ``|D| x s`` table of nonnegative per-label, per-oracle complexities."""

    labels: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != len(self.labels):
            raise ShapeError(f"profile of shape {v.shape} for {len(self.labels)} labels")
        if not np.all(np.isfinite(v)) or np.any(v < -1e-12):
            raise InvariantViolation("profile entries must be finite and nonnegative")
        v = np.clip(v, 0.0, None)
        v.setflags(write=False)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "values", v)

    def __getitem__(self, x: str) -> np.ndarray:
        return self.values[self.labels.index(x)]

    def totals(self) -> np.ndarray:
        return self.values.sum(axis=1)

    def rows(self):
        """``(label, block, value)`` triples in label order."""
        for x, row in zip(self.labels, self.values):
            for i, val in enumerate(row):
                yield x, i, float(val)
