"""Building new query algorithms from old ones.

All constructions act on the gate lists directly, so they never materialise
dense workspace unitaries.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import NotSliced, ShapeError
from .sim import Gate, QueryAlgorithm, QueryEmbedding


def _algo(h: int, steps, emb: QueryEmbedding, bd, check: bool = False) -> QueryAlgorithm:
    return QueryAlgorithm(h, tuple(tuple(s) for s in steps), emb, tuple(bd), check=check)


def identity_algorithm(h_dim: int, oracle_block_dims: Sequence[int], b_dim: int = 0) -> QueryAlgorithm:
    """The 0-query algorithm ``U_0 = I``."""
    emb = QueryEmbedding.standard(h_dim, sum(oracle_block_dims), b_dim)
    return _algo(h_dim, [()], emb, oracle_block_dims)


def fixed(h_dim: int, gates: Sequence[Gate], embedding: QueryEmbedding,
          oracle_block_dims: Sequence[int]) -> QueryAlgorithm:
    """A 0-query algorithm applying ``gates``."""
    return _algo(h_dim, [tuple(gates)], embedding, oracle_block_dims)


def permutation_gate(src: np.ndarray, dst: np.ndarray) -> Gate | None:
    """Gate moving the amplitude at coordinate ``src[i]`` to ``dst[i]``.

    ``src`` and ``dst`` must list the same set of coordinates.
    """
    src, dst = np.asarray(src, dtype=np.intp), np.asarray(dst, dtype=np.intp)
    moved = src != dst
    if not np.any(moved):
        return None
    src, dst = src[moved], dst[moved]
    support = np.sort(src)
    pos = {int(c): i for i, c in enumerate(support)}
    mat = np.zeros((support.size, support.size), dtype=complex)
    for s, d in zip(src, dst):
        mat[pos[int(d)], pos[int(s)]] = 1.0
    return Gate(support, mat)


def invert(algo: QueryAlgorithm) -> QueryAlgorithm:
    """``U_0^* O~ U_1^* ... O~ U_T^*``; with oracle ``O^*`` this inverts ``A(O)``."""
    steps = [tuple(g.adjoint() for g in reversed(s)) for s in reversed(algo.steps)]
    return _algo(algo.h_dim, steps, algo.embedding, algo.oracle_block_dims)


def place(algo: QueryAlgorithm, coord_map: Sequence[int], h_dim: int) -> QueryAlgorithm:
    """Embed ``algo`` into a larger workspace via an injective coordinate map.

    Coordinates outside the image are left untouched and join ``I^o``.
    """
    cmap = np.asarray(coord_map, dtype=np.intp)
    if cmap.size != algo.h_dim or np.unique(cmap).size != cmap.size or (cmap.size and cmap.max() >= h_dim):
        raise ShapeError("coordinate map is not injective into the new workspace")
    steps = [tuple(g.remap(cmap) for g in s) for s in algo.steps]
    unused = np.setdiff1d(np.arange(h_dim), cmap)
    layout = tuple(int(cmap[c]) for c in algo.embedding.layout) + tuple(int(c) for c in unused)
    e = algo.embedding
    emb = QueryEmbedding(e.b_dim, e.c_dim + unused.size, layout)
    return _algo(h_dim, steps, emb, algo.oracle_block_dims)


def extend_workspace(algo: QueryAlgorithm, extra_dim: int) -> QueryAlgorithm:
    """``A(O) + I`` on ``H + H'`` with ``dim H' = extra_dim``."""
    if extra_dim < 0:
        raise ShapeError("negative extension")
    if extra_dim == 0:
        return algo
    return place(algo, np.arange(algo.h_dim), algo.h_dim + extra_dim)


def relayout(algo: QueryAlgorithm, target: QueryEmbedding) -> QueryAlgorithm:
    """Same action, but querying through ``target`` instead of ``algo.embedding``."""
    e = algo.embedding
    if e.same_as(target):
        return algo
    if (e.b_dim, e.c_dim) != (target.b_dim, target.c_dim):
        raise ShapeError("embeddings have different shapes")
    T = algo.T
    if T == 0:
        return _algo(algo.h_dim, algo.steps, target, algo.oracle_block_dims)
    src = np.asarray(e.layout, dtype=np.intp)
    dst = np.asarray(target.layout, dtype=np.intp)
    perm = np.empty(algo.h_dim, dtype=np.intp)
    perm[src] = dst
    fwd = permutation_gate(src, dst)
    pre = (fwd,) if fwd is not None else ()
    post = (fwd.adjoint(),) if fwd is not None else ()
    # U_0 -> P U_0, U_t -> P U_t P^*, U_T -> U_T P^*
    steps = [tuple(algo.steps[0]) + pre]
    steps += [tuple(g.remap(perm) for g in algo.steps[t]) for t in range(1, T)]
    steps.append(post + tuple(algo.steps[T]))
    return _algo(algo.h_dim, steps, target, algo.oracle_block_dims)


def slice(algo: QueryAlgorithm) -> QueryAlgorithm:  # noqa: A001 - mirrors the operation name
    """Rewrite each query ``O (x) I_d`` as ``d`` queries of the form ``O + I``.

    Slot 0 of ``I_d`` becomes the query register; slot ``j`` is swapped into
    it before its query and swapped back afterwards.
    """
    d, m, h = algo.b_dim, algo.m_dim, algo.h_dim
    if d == 1:
        return algo
    bd = algo.oracle_block_dims
    if d == 0:
        gates = tuple(g for s in algo.steps for g in s)
        b = 1 if h >= m else 0
        return _algo(h, [gates], QueryEmbedding(b, h - m * b, algo.embedding.layout), bd)
    q = algo.embedding.query_index(m)
    first = q[:, 0]
    taken = set(first.tolist())
    rest = tuple(c for c in algo.embedding.layout if c not in taken)
    emb = QueryEmbedding(1, h - m, tuple(first.tolist()) + rest)
    swaps = [None] + [permutation_gate(np.concatenate([first, q[:, j]]), np.concatenate([q[:, j], first]))
                      for j in range(1, d)]
    steps: list[list[Gate]] = [list(algo.steps[0])]
    for t in range(1, algo.T + 1):
        for j in range(d):
            nxt: list[Gate] = []
            if j > 0:
                nxt.append(swaps[j])
            if j + 1 < d:
                nxt.append(swaps[j + 1])
            steps.append(nxt)
        steps[-1].extend(algo.steps[t])
    return _algo(h, steps, emb, bd)


def extend_input(algo: QueryAlgorithm, new_block_dims: Sequence[int]) -> QueryAlgorithm:
    """Accept oracles ``O' = O + O''`` acting on a larger input space.

    Block ``i`` of the old space is the leading part of block ``i`` of the
    new one; extra blocks may follow.  The new coordinates of ``M' (x) B``
    are appended to the workspace.
    """
    old = algo.oracle_block_dims
    new = tuple(int(d) for d in new_block_dims)
    if len(new) < len(old) or any(n < o for n, o in zip(new, old)):
        raise ShapeError(f"new blocks {new} do not contain old blocks {old}")
    if new == old:
        return algo
    b, h, m_old = algo.b_dim, algo.h_dim, algo.m_dim
    m_new = sum(new)
    layout = algo.embedding.layout
    row_map = {}
    off_old = off_new = 0
    for i, dn in enumerate(new):
        do = old[i] if i < len(old) else 0
        for r in range(do):
            row_map[off_new + r] = off_old + r
        off_old += do
        off_new += dn
    fresh = iter(range(h, h + (m_new - m_old) * b))
    q_layout = []
    for r in range(m_new):
        for j in range(b):
            q_layout.append(layout[row_map[r] * b + j] if r in row_map else next(fresh))
    new_layout = tuple(q_layout) + tuple(layout[m_old * b:])
    emb = QueryEmbedding(b, algo.embedding.c_dim, new_layout)
    h_new = h + (m_new - m_old) * b
    return _algo(h_new, algo.steps, emb, new)


def _concat(b: QueryAlgorithm, a: QueryAlgorithm) -> QueryAlgorithm:
    steps = list(a.steps[:-1]) + [a.steps[-1] + b.steps[0]] + list(b.steps[1:])
    return _algo(a.h_dim, steps, a.embedding, a.oracle_block_dims)


def sequential(b: QueryAlgorithm, a: QueryAlgorithm) -> QueryAlgorithm:
    """``B * A``: run ``a`` and then ``b`` (same workspace and oracle space)."""
    if a.h_dim != b.h_dim or a.oracle_block_dims != b.oracle_block_dims:
        raise ShapeError("sequential composition needs equal workspaces and oracle spaces")
    if a.embedding.same_as(b.embedding):
        return _concat(b, a)
    if a.b_dim != b.b_dim:
        if a.T == 0:
            a = _algo(a.h_dim, a.steps, b.embedding, a.oracle_block_dims)
            return _concat(b, a)
        if b.T == 0:
            b = _algo(b.h_dim, b.steps, a.embedding, b.oracle_block_dims)
            return _concat(b, a)
        a, b = slice(a), slice(b)
    return _concat(relayout(b, a.embedding), a)


def chain(algos: Sequence[QueryAlgorithm]) -> QueryAlgorithm:
    """Sequential composition in time order: ``algos[0]`` runs first."""
    out = algos[0]
    for nxt in algos[1:]:
        out = sequential(nxt, out)
    return out


def direct_sum(a: QueryAlgorithm, b: QueryAlgorithm) -> QueryAlgorithm:
    """``A(O) + B(O)`` on ``H + H'``, realised as ``(I + B) * (A + I)``."""
    if a.oracle_block_dims != b.oracle_block_dims:
        raise ShapeError("direct sum needs equal oracle spaces")
    h = a.h_dim + b.h_dim
    left = extend_workspace(a, b.h_dim)
    right = place(b, a.h_dim + np.arange(b.h_dim), h)
    return sequential(right, left)


def functional_compose(a: QueryAlgorithm, b: QueryAlgorithm) -> QueryAlgorithm:
    """``A(B(O))``: every query of the sliced ``a`` is replaced by a run of ``b``.

    ``b``'s workspace must be ``a``'s oracle space; the result's oracle space
    is ``b``'s.
    """
    if a.b_dim != 1:
        raise NotSliced(f"outer algorithm has b_dim={a.b_dim}; slice it first")
    if b.h_dim != a.m_dim:
        raise ShapeError(f"inner workspace {b.h_dim} differs from outer oracle space {a.m_dim}")
    inner = place(b, a.embedding.query_index(a.m_dim)[:, 0], a.h_dim)
    parts = []
    for t, s in enumerate(a.steps):
        if t > 0:
            parts.append(inner)
        parts.append(_algo(a.h_dim, [s], inner.embedding, b.oracle_block_dims))
    return chain(parts)


def _tensor_left(a: QueryAlgorithm, h2: int) -> QueryAlgorithm:
    """``A (x) I_{h2}``."""
    k = np.arange(h2)
    steps = [tuple(g.kron_identity(h2, lambda c, j: c * h2 + j) for g in s) for s in a.steps]
    e, _m = a.embedding, a.m_dim
    lay = np.asarray(e.layout, dtype=np.intp)
    layout = (lay[:, None] * h2 + k).reshape(-1)
    emb = QueryEmbedding(e.b_dim * h2, e.c_dim * h2, tuple(int(c) for c in layout))
    return _algo(a.h_dim * h2, steps, emb, a.oracle_block_dims)


def _tensor_right(b: QueryAlgorithm, h1: int) -> QueryAlgorithm:
    """``I_{h1} (x) B``."""
    h2 = b.h_dim
    steps = [tuple(Gate(i * h2 + g.support, g.matrix, g.basis) for i in range(h1) for g in s) for s in b.steps]
    e, m = b.embedding, b.m_dim
    q = b.embedding.query_index(m)  # (m, b)
    qi = (np.arange(h1)[None, :, None] * h2 + q[:, None, :]).reshape(-1)
    c = b.embedding.skip_index(m)
    ci = (np.arange(h1)[:, None] * h2 + c[None, :]).reshape(-1)
    emb = QueryEmbedding(e.b_dim * h1, e.c_dim * h1, tuple(int(x) for x in np.concatenate([qi, ci])))
    return _algo(h1 * h2, steps, emb, b.oracle_block_dims)


def tensor_parts(a: QueryAlgorithm, b: QueryAlgorithm) -> tuple[QueryAlgorithm, QueryAlgorithm]:
    """The factors ``A (x) I`` and ``I (x) B`` of the tensor product."""
    if a.oracle_block_dims != b.oracle_block_dims:
        raise ShapeError("tensor product needs equal oracle spaces")
    return _tensor_left(a, b.h_dim), _tensor_right(b, a.h_dim)


def tensor(a: QueryAlgorithm, b: QueryAlgorithm) -> QueryAlgorithm:
    """``A(O) (x) B(O)``, realised as ``(I (x) B) * (A (x) I)``."""
    left, right = tensor_parts(a, b)
    return sequential(right, left)
