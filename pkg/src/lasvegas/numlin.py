"""Dense complex linear algebra used throughout the package.

Vector collections are passed as 2-D arrays whose *columns* are the vectors,
or as a sequence of 1-D arrays (stacked as columns).  Inner products are
conjugate-linear in the first argument: ``<a, b> = a^* b``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Union

import numpy as np
import scipy.linalg as sla

from .errors import DegenerateInput, GramMismatch, InvariantViolation, NotPSD, ShapeError


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-10
    unitary: float = 1e-9
    eig: float = 1e-10
    psd: float = 1e-10
    class_: float = 1e-9
    rank: float = 1e-9
    eps_div: float = 1e-12
    posdef_margin: float = 1e-8
    max_iter: int = 30


TOL = Tolerances()

ArrayLike = Union[np.ndarray, Sequence[np.ndarray]]


def scale(a: np.ndarray) -> float:
    """Tolerance scale factor ``max(1, max|a_ij|)``."""
    a = np.asarray(a)
    return max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0


def as_columns(vectors: ArrayLike) -> np.ndarray:
    """Stack a collection of vectors as the columns of a complex matrix."""
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        return vectors.astype(complex, copy=False)
    vecs = [np.asarray(v, dtype=complex).reshape(-1) for v in vectors]
    if not vecs:
        return np.zeros((0, 0), dtype=complex)
    dims = {v.shape[0] for v in vecs}
    if len(dims) != 1:
        raise ShapeError(f"vectors of differing dimensions {sorted(dims)}")
    return np.stack(vecs, axis=1)


def is_hermitian(h: np.ndarray, tol: float = TOL.hermitian) -> bool:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        return False
    return h.size == 0 or float(np.max(np.abs(h - h.conj().T))) <= tol * scale(h)


def check_hermitian(h: np.ndarray, tol: float = TOL.hermitian) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {h.shape}")
    if not is_hermitian(h, tol):
        raise InvariantViolation("matrix is not Hermitian")
    return (h + h.conj().T) / 2


def is_unitary(u: np.ndarray, tol: float = TOL.unitary) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    if u.size == 0:
        return True
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))) <= tol


def check_unitary(u: np.ndarray, tol: float = TOL.unitary) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {u.shape}")
    if not is_unitary(u, tol):
        raise InvariantViolation("matrix is not unitary")
    return u


def lambda_max(h: np.ndarray, tol: float = TOL.hermitian) -> float:
    """Largest eigenvalue of a Hermitian matrix (``-inf`` for the empty matrix)."""
    h = check_hermitian(h, tol)
    if h.size == 0:
        return float("-inf")
    return float(sla.eigvalsh(h, subset_by_index=[h.shape[0] - 1, h.shape[0] - 1])[0])


def spectral_norm(a: np.ndarray) -> float:
    a = np.asarray(a, dtype=complex)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def top_singular_triple(a: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Return ``(sigma, u, v)`` with ``a v = sigma u`` and ``sigma = ||a||``.

    The phase is fixed so that the largest entry of ``v`` is real positive.
    """
    a = np.asarray(a, dtype=complex)
    if a.size == 0 or not np.any(a):
        raise DegenerateInput("zero matrix has no top singular triple")
    uu, ss, vh = np.linalg.svd(a)
    v = vh[0].conj()
    k = int(np.argmax(np.abs(v)))
    v = v * (abs(v[k]) / v[k])
    sigma = float(ss[0])
    u = a @ v / sigma
    return sigma, u, v


def gram(vectors: ArrayLike) -> np.ndarray:
    """Gram matrix ``G[x, y] = <v_x, v_y>`` of a vector collection."""
    a = as_columns(vectors)
    return a.conj().T @ a


def _positive_diag(q: np.ndarray, r: np.ndarray) -> np.ndarray:
    d = np.diag(r).copy()
    ph = np.ones_like(d)
    nz = np.abs(d) > 0
    ph[nz] = d[nz] / np.abs(d[nz])
    return q * ph[np.newaxis, :]


def _complete(q: np.ndarray, dim: int) -> np.ndarray:
    """Extend orthonormal columns ``q`` to a unitary of size ``dim``."""
    r = q.shape[1]
    if r == dim:
        return q
    if r == 0:
        return np.eye(dim, dtype=complex)
    full, _ = sla.qr(q, mode="full")
    return np.concatenate([q, full[:, r:]], axis=1)


def unitary_from_gram_match(src: ArrayLike, dst: ArrayLike, tol: float = 1e-9,
                            rank_tol: float = TOL.rank) -> np.ndarray:
    """Unitary ``U`` with ``U src_x = dst_x`` for Gram-matched collections.

    The source columns are orthonormalised by QR with column pivoting; the
    destination columns are orthonormalised in the same pivot order so that
    matched basis vectors correspond.  Both bases are completed to unitaries.
    """
    a = as_columns(src)
    b = as_columns(dst)
    if a.shape != b.shape:
        raise ShapeError(f"src shape {a.shape} differs from dst shape {b.shape}")
    dim, n = a.shape
    if n == 0:
        return np.eye(dim, dtype=complex)
    ga, gb = gram(a), gram(b)
    gap = float(np.max(np.abs(ga - gb)))
    if gap > tol * max(scale(ga), scale(gb)):
        raise GramMismatch(f"Gram matrices differ by {gap:.3e}")
    q, r, piv = sla.qr(a, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    ref = max(1.0, float(diag[0])) if diag.size else 1.0
    rank = int(np.sum(diag > rank_tol * ref))
    qs = _positive_diag(q[:, :rank], r[:rank, :rank])
    if rank:
        qd, rd = sla.qr(b[:, piv[:rank]], mode="economic")
        qd = _positive_diag(qd, rd)
    else:
        qd = np.zeros((dim, 0), dtype=complex)
    return _complete(qd, dim) @ _complete(qs, dim).conj().T


@dataclass(frozen=True)
class PSDParts:
    min_eig: float
    sqrt: np.ndarray
    pinv_sqrt: np.ndarray


def psd_utilities(h: np.ndarray, psd_tol: float = TOL.psd, eig_tol: float = TOL.eig,
                  need_sqrt: bool = True) -> PSDParts:
    """Minimum eigenvalue, square root and pseudo-inverse square root.

    Eigenvalues in ``[-psd_tol, 0)`` (scaled) are clamped to zero.
    """
    h = check_hermitian(h)
    if h.size == 0:
        empty = np.zeros((0, 0), dtype=complex)
        return PSDParts(float("inf"), empty, empty)
    w, vec = np.linalg.eigh(h)
    s = scale(h)
    min_eig = float(w[0])
    if need_sqrt and min_eig < -psd_tol * s:
        raise NotPSD(f"minimum eigenvalue {min_eig:.3e} is negative")
    w = np.clip(w, 0.0, None)
    root = np.sqrt(w)
    inv = np.zeros_like(root)
    keep = w > eig_tol * s
    inv[keep] = 1.0 / root[keep]
    sq = (vec * root) @ vec.conj().T
    pinv = (vec * inv) @ vec.conj().T
    return PSDParts(min_eig, sq, pinv)


def min_eig(h: np.ndarray) -> float:
    h = check_hermitian(h)
    return float(np.linalg.eigvalsh(h)[0]) if h.size else float("inf")


def parallelogram_residual(vectors: ArrayLike, u: np.ndarray) -> float:
    """``|sum_i ||v_i||^2 - sum_j ||sum_i u_ij v_i||^2|`` for a unitary ``u``."""
    a = as_columns(vectors)
    u = np.asarray(u, dtype=complex)
    if u.shape != (a.shape[1], a.shape[1]):
        raise ShapeError(f"unitary of shape {u.shape} for {a.shape[1]} vectors")
    return abs(float(np.sum(np.abs(a) ** 2)) - float(np.sum(np.abs(a @ u) ** 2)))


DeltaFamily = Union[Mapping[tuple[int, int], np.ndarray], Callable[[int, int], np.ndarray]]


def block_hadamard(gamma: np.ndarray, delta: DeltaFamily, block: int | None = None) -> np.ndarray:
    """The block matrix ``Gamma o Delta`` with blocks ``gamma[x, y] * delta(x, y)``.

    ``delta`` maps index pairs to square blocks; pairs with ``gamma[x, y] == 0``
    are never looked up.  ``block`` gives the block size when it cannot be
    inferred (e.g. ``gamma`` identically zero).
    """
    gamma = check_hermitian(gamma)
    n = gamma.shape[0]
    get = delta if callable(delta) else (lambda x, y: delta[(x, y)])
    nz = list(zip(*np.nonzero(gamma)))
    if block is None:
        if not nz:
            raise ShapeError("block size needed when gamma is zero")
        block = np.asarray(get(*nz[0])).shape[0]
    out = np.zeros((n * block, n * block), dtype=complex)
    for x, y in nz:
        d = np.asarray(get(x, y), dtype=complex)
        if d.shape != (block, block):
            raise ShapeError(f"delta block ({x},{y}) has shape {d.shape}")
        out[x * block:(x + 1) * block, y * block:(y + 1) * block] = gamma[x, y] * d
    if not is_hermitian(out):
        raise InvariantViolation("delta family is not Hermitian-symmetric on the support of gamma")
    return (out + out.conj().T) / 2
