"""Worked problems: two labels, Boolean functions in the phase, and permutation inversion."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .adversary import DualCertificate, DualReport, FeasibleSolution, dual_bound
from .errors import DegenerateInput, EntryDomainError, Infeasible, NotACycle, RangeError, ShapeError
from .model import OracleFamily, StateConversionProblem
from .numlin import TOL, check_unitary, spectral_norm, top_singular_triple


def best_certificate(p: StateConversionProblem, family: Callable[[float], np.ndarray],
                     params: Iterable[float]) -> tuple[float, DualReport]:
    """Scan a one-parameter family of certificates and keep the best bound."""
    best = None
    for t in params:
        rep = dual_bound(DualCertificate(family(t)), p)
        if best is None or rep.bound_singleoracle > best[1].bound_singleoracle:
            best = (float(t), rep)
    if best is None:
        raise DegenerateInput("empty parameter range")
    return best


# ---------------------------------------------------------------------------
# two labels


@dataclass(frozen=True, eq=False)
class TwoLabel:
    """``xi_0 = e_0``, ``xi_1 = a e_0 + sqrt(1-|a|^2) e_1``; ``tau`` likewise with ``b``.

    Feasible objective values ``(w_0, w_1)`` are exactly those with
    ``sqrt(w_0 w_1) >= bound``.
    """

    problem: StateConversionProblem
    bound: float
    a: complex
    b: complex

    def boundary_solution(self, w0: float) -> FeasibleSolution:
        """Solution with objective ``(w0, bound^2 / w0)``."""
        if w0 <= 0:
            raise RangeError("w0 must be positive")
        fam = self.problem.oracles
        w1 = self.bound ** 2 / w0
        gap = self.a - self.b
        data = np.zeros((2, fam.m_dim, 1), dtype=complex)
        if gap == 0:
            return FeasibleSolution(fam.labels, fam.block_dims, data)
        _, u, v = top_singular_triple(fam.delta("0", "1"))
        data[0, :, 0] = math.sqrt(w0) * u
        data[1, :, 0] = gap / abs(gap) * math.sqrt(w1) * v
        return FeasibleSolution(fam.labels, fam.block_dims, data)

    def certificate(self, theta: float) -> np.ndarray:
        """The certificate ``[[0, e^{i theta}], [e^{-i theta}, 0]]``."""
        z = np.exp(1j * theta)
        return np.array([[0, z], [np.conj(z), 0]])


def _unit_pair(c: complex) -> np.ndarray:
    if abs(c) > 1 + 1e-12:
        raise RangeError(f"inner product {c} exceeds 1 in modulus")
    return np.array([[1, 0], [c, math.sqrt(max(0.0, 1 - abs(c) ** 2))]], dtype=complex)


def two_label(a: complex, b: complex, o0, o1) -> TwoLabel:
    o0 = check_unitary(np.atleast_2d(np.asarray(o0, dtype=complex)))
    o1 = check_unitary(np.atleast_2d(np.asarray(o1, dtype=complex)))
    if o0.shape != o1.shape:
        raise ShapeError("oracles of different sizes")
    fam = OracleFamily.from_matrices({"0": o0, "1": o1}, (o0.shape[0],), "unitary")
    p = StateConversionProblem(fam, _unit_pair(a), _unit_pair(b))
    norm = spectral_norm(o0 - o1)
    if norm <= TOL.class_:
        if abs(a - b) > TOL.class_:
            raise Infeasible("equal oracles cannot change the inner product")
        bound = 0.0
    else:
        bound = abs(a - b) / norm
    return TwoLabel(p, bound, complex(a), complex(b))


# ---------------------------------------------------------------------------
# Boolean functions


@dataclass(frozen=True, eq=False)
class BooleanProblem:
    """``|0> -> (-1)^f(x) |0>`` with ``n`` one-dimensional oracles ``(-1)^{x_i}``.

    ``gap`` and ``deltas`` hold the Gram gap and the ``Delta^(i)`` entries
    divided by 2: ``gap[x, y] = 1[f(x) != f(y)]`` and
    ``deltas[i, x, y] = 1[x_i != y_i]``.  Dividing both sides of the
    feasibility constraint by 2 leaves feasible solutions and certificate
    ratios unchanged.
    """

    problem: StateConversionProblem
    inputs: tuple[tuple[int, ...], ...]
    values: tuple[int, ...]
    gap: np.ndarray
    deltas: np.ndarray


def _bits(label: str) -> tuple[int, ...]:
    return tuple(int(c) for c in label)


def boolean_problem(f: Callable[[Sequence[int]], int] | Mapping[str, int], n: int,
                    domain: Iterable[str | Sequence[int]] | None = None) -> BooleanProblem:
    """Phase evaluation of ``f`` on ``domain`` (all of ``{0,1}^n`` by default).

    ``f`` is a callable on bit tuples or a mapping from bit strings.
    """
    if not 1 <= n <= 12:
        raise RangeError("n must be between 1 and 12")
    if domain is None:
        xs = list(itertools.product((0, 1), repeat=n))
    else:
        xs = [tuple(int(c) for c in x) for x in domain]
    if not xs:
        raise DegenerateInput("empty domain")
    if any(len(x) != n or set(x) - {0, 1} for x in xs):
        raise ShapeError(f"domain entries must be {n}-bit strings")
    labels = ["".join(map(str, x)) for x in xs]
    get = (lambda x: f["".join(map(str, x))]) if isinstance(f, Mapping) else f
    vals = tuple(int(get(x)) % 2 for x in xs)
    ops = {lab: tuple(np.array([[(-1.0) ** b]]) for b in x) for lab, x in zip(labels, xs)}
    fam = OracleFamily(tuple(labels), (1,) * n, ops, "unitary")
    xi = np.ones((len(xs), 1))
    tau = np.array([[(-1.0) ** v] for v in vals])
    arr = np.array(xs)
    fv = np.array(vals)
    gap = (fv[:, None] != fv[None, :]).astype(float)
    deltas = (arr.T[:, :, None] != arr.T[:, None, :]).astype(float)
    return BooleanProblem(StateConversionProblem(fam, xi, tau), tuple(xs), vals, gap, deltas)


def boolean_function(name: str, n: int) -> Callable[[Sequence[int]], int]:
    """``or``, ``and``, ``parity`` or ``majority`` on ``n`` bits."""
    fns = {"or": lambda x: int(any(x)), "and": lambda x: int(all(x)), "parity": lambda x: sum(x) % 2,
           "majority": lambda x: int(2 * sum(x) > n)}
    try:
        return fns[name]
    except KeyError:
        raise ShapeError(f"unknown function {name!r}; choose from {sorted(fns)}") from None


def or2_certificate(c: float, bp: BooleanProblem) -> np.ndarray:
    """Weights 1 between ``00`` and ``01``, ``10``; weight ``c`` between ``00`` and ``11``."""
    idx = {x: i for i, x in enumerate(bp.inputs)}
    g = np.zeros((len(bp.inputs),) * 2)
    for y, wgt in (((0, 1), 1.0), ((1, 0), 1.0), ((1, 1), c)):
        g[idx[(0, 0)], idx[y]] = g[idx[y], idx[(0, 0)]] = wgt
    return g


# ---------------------------------------------------------------------------
# permutation inversion
#
# Permutations are arrays ``perm[i] = pi(i)`` on ``0..n-1``.  Element ``0``
# plays the role of the distinguished element whose preimage is sought.


def _is_single_cycle(perm: np.ndarray) -> bool:
    n = perm.size
    if sorted(perm.tolist()) != list(range(n)):
        return False
    i, steps = 0, 0
    while True:
        i = int(perm[i])
        steps += 1
        if i == 0:
            return steps == n


def cycle_word(perm: Sequence[int]) -> tuple[int, ...]:
    """``(p_1, ..., p_n)`` with ``p_1 = 0`` and ``perm(p_j) = p_{j+1}``."""
    perm = np.asarray(perm, dtype=int)
    if perm.ndim != 1 or not _is_single_cycle(perm):
        raise NotACycle(f"{perm.tolist()} is not a single n-cycle")
    word = [0]
    for _ in range(perm.size - 1):
        word.append(int(perm[word[-1]]))
    return tuple(word)


def from_word(word: Sequence[int]) -> np.ndarray:
    perm = np.empty(len(word), dtype=int)
    for a, b in zip(word, tuple(word[1:]) + (word[0],)):
        perm[a] = b
    return perm


def single_cycles(n: int) -> list[np.ndarray]:
    """All ``(n-1)!`` single ``n``-cycles, in lexicographic order of their words."""
    return [from_word((0,) + rest) for rest in itertools.permutations(range(1, n))]


def relation_witness(pi: Sequence[int], sigma: Sequence[int]) -> tuple[int, int] | None:
    """``(k, l)`` (1-based, ``1 <= k < l < n``) if ``sigma`` is ``pi`` with its
    word segment ``p_{k+1} .. p_l`` moved to the end, else ``None``."""
    p, q = cycle_word(pi), cycle_word(sigma)
    n = len(p)
    if len(q) != n:
        raise ShapeError("permutations of different sizes")
    k = 0
    while k < n and p[k] == q[k]:
        k += 1
    if k == n:
        return None
    ell = p.index(q[k])
    if not k < ell < n:
        return None
    if q != p[:k] + p[ell:] + p[k:ell]:
        return None
    return k, ell


def relation_check(pi: Sequence[int], sigma: Sequence[int]) -> bool:
    return relation_witness(pi, sigma) is not None


def related(word: tuple[int, ...]) -> Iterable[tuple[tuple[int, ...], int, int]]:
    """All words related to ``word`` with their witnesses ``(k, l)``."""
    n = len(word)
    for k in range(1, n - 1):
        for ell in range(k + 1, n):
            yield word[:k] + word[ell:] + word[k:ell], k, ell


def permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    """``O |i> = |perm(i)>``."""
    perm = np.asarray(perm, dtype=int)
    o = np.zeros((perm.size, perm.size))
    o[perm, np.arange(perm.size)] = 1.0
    return o


def spalek_bound(a) -> float:
    """``max sqrt(R_i C_j)`` over nonzero entries of a ``0, +-1`` matrix.

    ``R_i`` and ``C_j`` count the nonzero entries of row ``i`` and column ``j``.
    """
    m = sp.coo_matrix(a)
    m.sum_duplicates()
    m.eliminate_zeros()
    if m.nnz == 0:
        return 0.0
    if not np.all(np.isin(m.data, (1, -1))):
        raise EntryDomainError("entries must be 0 or +-1")
    rows = np.bincount(m.row, minlength=m.shape[0])
    cols = np.bincount(m.col, minlength=m.shape[1])
    return float(np.sqrt(np.max(rows[m.row] * cols[m.col])))


@dataclass(frozen=True, eq=False)
class PermInversion:
    """Adversary data for inverting a single-cycle permutation oracle.

    ``gamma`` is the 0/1 relation matrix on ``cycles``.  The matrices
    ``gamma_delta``, ``gamma_delta_prime`` and ``gamma_delta_dblprime`` are
    the sparse ``(|C_n| n) x (|C_n| n)`` matrices ``Gamma o Delta`` and its
    two parts, with row ``(pi, i)`` at index ``pi * n + i``.
    """

    n: int
    cycles: list[np.ndarray]
    gamma: np.ndarray
    gamma_delta: sp.csr_matrix
    gamma_delta_prime: sp.csr_matrix
    gamma_delta_dblprime: sp.csr_matrix
    report: dict[str, float]

    def problem(self, taus: np.ndarray | None = None) -> StateConversionProblem:
        """``|0> -> tau_pi``; the default ``tau_pi = |pi^{-1}(0)>`` is the exact output."""
        labels = [str(i) for i in range(len(self.cycles))]
        fam = OracleFamily.from_matrices({x: permutation_matrix(c) for x, c in zip(labels, self.cycles)},
                                         (self.n,), "unitary")
        taus = exact_outputs(self.cycles) if taus is None else np.asarray(taus)
        xi = np.zeros_like(taus, dtype=complex)
        xi[:, 0] = 1.0
        return StateConversionProblem(fam, xi, taus)

    def deltas(self) -> np.ndarray:
        """Dense ``I - O_pi^* O_sigma`` for all pairs (only for small ``n``)."""
        o = np.stack([permutation_matrix(c) for c in self.cycles])
        return np.eye(self.n)[None, None] - np.einsum("xji,yjk->xyik", o, o)


def exact_outputs(cycles: Sequence[np.ndarray]) -> np.ndarray:
    n = len(cycles[0])
    out = np.zeros((len(cycles), n))
    for i, c in enumerate(cycles):
        out[i, int(np.flatnonzero(np.asarray(c) == 0)[0])] = 1.0
    return out


def bounded_error_outputs(cycles: Sequence[np.ndarray], overlap: float = 2 * math.sqrt(2) / 3) -> np.ndarray:
    """``tau_pi = sqrt(overlap) |n> + sqrt(1 - overlap) |pi^{-1}(0)>`` in ``C^{n+1}``.

    Outputs for permutations with different preimages of 0 have inner
    product exactly ``overlap``.
    """
    n = len(cycles[0])
    out = np.zeros((len(cycles), n + 1))
    out[:, :n] = math.sqrt(1 - overlap) * exact_outputs(cycles)
    out[:, n] = math.sqrt(overlap)
    return out


def _lam(a, which: str) -> float:
    """Largest (``LA``) or smallest (``SA``) eigenvalue of a real symmetric matrix."""
    if sp.issparse(a) and a.shape[0] > 800:
        return float(spla.eigsh(a.astype(float), k=1, which=which, return_eigenvectors=False)[0])
    d = a.toarray() if sp.issparse(a) else np.asarray(a)
    w = np.linalg.eigvalsh(d)
    return float(w[-1] if which == "LA" else w[0])


def perm_inversion(n: int) -> PermInversion:
    if not 3 <= n <= 7:
        raise RangeError("n must be between 3 and 7")
    cycles = single_cycles(n)
    words = [cycle_word(c) for c in cycles]
    index = {w: i for i, w in enumerate(words)}
    size = len(words)
    gamma = np.zeros((size, size))
    rows, cols, vals = [], [], []
    rows2, cols2 = [], []
    for i, w in enumerate(words):
        for q, k, ell in related(w):
            j = index[q]
            gamma[i, j] = 1.0
            pk, pl, pn = w[k - 1], w[ell - 1], w[n - 1]
            # I - O_pi^* O_sigma on (p_k, p_l, p_n); the (p_n, p_l) entry is the second part.
            for (r, c), val in (((pk, pk), 1), ((pk, pn), -1), ((pl, pk), -1), ((pl, pl), 1), ((pn, pn), 1)):
                rows.append(i * n + r)
                cols.append(j * n + c)
                vals.append(val)
            rows2.append(i * n + pn)
            cols2.append(j * n + pl)
    dim = size * n
    gd1 = sp.csr_matrix((np.array(vals, dtype=float), (rows, cols)), shape=(dim, dim))
    gd2 = sp.csr_matrix((-np.ones(len(rows2)), (rows2, cols2)), shape=(dim, dim))
    gd = (gd1 + gd2).tocsr()
    lam_g = _lam(gamma, "LA")
    lam_neg = -_lam(gamma, "SA")
    norm1 = max(abs(_lam(gd1, "LA")), abs(_lam(gd1, "SA")))
    lam_d = _lam(gd, "LA")
    ge = gamma * (1 - exact_outputs(cycles) @ exact_outputs(cycles).T)
    report = {
        "n": n,
        "cycles": size,
        "lambda_gamma": lam_g,
        "lambda_neg_gamma": lam_neg,
        "norm_gamma_delta_prime": norm1,
        "lambda_gamma_delta_dblprime": _lam(gd2, "LA"),
        "lambda_gamma_delta": lam_d,
        "spalek_bound": spalek_bound(gd1),
        "ratio_exact": _lam(ge, "LA") / lam_d,
    }
    return PermInversion(n, cycles, gamma, gd, gd1, gd2, report)
