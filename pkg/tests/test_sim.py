import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gen import algorithm, cvec, dense_query, dense_run, family, unit_states, unitary
from lasvegas.errors import RangeError, ShapeError
from lasvegas.model import OracleFamily, StateConversionProblem, dnorm_sq
from lasvegas.sim import (Gate, QueryAlgorithm, QueryEmbedding, apply, check_state_conversion, dense_gate,
                          las_vegas, query_input, simulate_all, state_before_query, step_matrix,
                          total_query)


@pytest.fixture
def inst(rng):
    fam = family(rng, 2, (2, 1))
    algo = algorithm(rng, 3 * 2 + 1, (2, 1), b=2, T=3)
    return fam, algo


def test_apply_trivial(rng):
    fam = family(rng, 1, (2,))
    u0 = unitary(rng, 3)
    a0 = QueryAlgorithm(3, ((dense_gate(u0),),), QueryEmbedding.standard(3, 2, 1), (2,))
    np.testing.assert_allclose(apply(a0, fam, "0"), u0)
    ident = QueryAlgorithm(3, ((), (), ()), QueryEmbedding.standard(3, 2, 1), (2,))
    fam_i = OracleFamily.from_matrices({"i": np.eye(2)})
    np.testing.assert_allclose(apply(ident, fam_i, "i"), np.eye(3))


@pytest.mark.parametrize("b, c", [(1, 0), (1, 2), (2, 1), (3, 0)])
def test_apply_matches_dense_product(rng, b, c):
    fam = family(rng, 2, (2,))
    algo = algorithm(rng, 2 * b + c, (2,), b=b, T=3)
    for x in fam.labels:
        out = apply(algo, fam, x)
        np.testing.assert_allclose(out, dense_run(algo, fam.full(x)), atol=1e-12)
        np.testing.assert_allclose(out.conj().T @ out, np.eye(algo.h_dim), atol=1e-9)


def test_permuted_layout_matches_dense(rng):
    fam = family(rng, 1, (2,))
    lay = tuple(int(i) for i in rng.permutation(5))
    algo = QueryAlgorithm(5, tuple((dense_gate(unitary(rng, 5)),) for _ in range(3)),
                          QueryEmbedding(2, 1, lay), (2,))
    np.testing.assert_allclose(apply(algo, fam, "0"), dense_run(algo, fam.full("0")), atol=1e-12)


def test_state_before_query(inst, rng):
    fam, algo = inst
    xi = cvec(rng, algo.h_dim)
    o = fam.full("0")
    np.testing.assert_allclose(state_before_query(algo, fam, "0", 1, xi), step_matrix(algo.steps[0], algo.h_dim) @ xi)
    np.testing.assert_allclose(state_before_query(algo, fam, "0", algo.T + 1, xi), apply(algo, fam, "0") @ xi,
                               atol=1e-12)
    for t in range(1, algo.T + 2):
        np.testing.assert_allclose(state_before_query(algo, fam, "0", t, xi), dense_run(algo, o, t) @ xi, atol=1e-12)
    with pytest.raises(RangeError):
        state_before_query(algo, fam, "0", algo.T + 2, xi)


def test_query_input_projection(inst, rng):
    fam, algo = inst
    xi = cvec(rng, algo.h_dim)
    q = algo.embedding.query_index(algo.m_dim)
    for t in range(1, algo.T + 1):
        s = state_before_query(algo, fam, "1", t, xi)
        proj = np.zeros((algo.m_dim, algo.b_dim), dtype=complex)
        for mm in range(algo.m_dim):
            for j in range(algo.b_dim):
                proj[mm, j] = s[q[mm, j]]
        np.testing.assert_allclose(query_input(algo, fam, "1", t, xi).data, proj)


def test_query_input_degenerate_embeddings(rng):
    fam = family(rng, 1, (2,))
    skip = QueryAlgorithm(3, tuple((dense_gate(unitary(rng, 3)),) for _ in range(2)), QueryEmbedding(0, 3, (0, 1, 2)),
                          (2,))
    assert not np.any(query_input(skip, fam, "0", 1, cvec(rng, 3)).data)
    assert not np.any(las_vegas(skip, fam, "0", cvec(rng, 3)))
    full = algorithm(rng, 4, (2,), b=2, T=2)
    xi = cvec(rng, 4)
    s = state_before_query(full, fam, "0", 2, xi)
    assert dnorm_sq(query_input(full, fam, "0", 2, xi))[0] == pytest.approx(np.linalg.norm(s) ** 2)


def test_full_query_complexity_is_T(rng):
    fam = family(rng, 1, (3,))
    algo = algorithm(rng, 3, (3,), b=1, T=4)
    xi = unit_states(rng, 1, 3, 3)[0]
    assert las_vegas(algo, fam, "0", xi)[0] == pytest.approx(4.0, abs=1e-12)


def test_total_query(inst, rng):
    fam, algo = inst
    xi = cvec(rng, algo.h_dim)
    tq = total_query(algo, fam, "0", xi)
    np.testing.assert_allclose(dnorm_sq(tq), las_vegas(algo, fam, "0", xi), rtol=1e-12)
    first = query_input(algo, fam, "0", 1, xi)
    np.testing.assert_allclose(tq.data[:, :algo.b_dim], first.data)
    a0 = QueryAlgorithm(algo.h_dim, (algo.steps[0],), algo.embedding, algo.oracle_block_dims)
    empty = total_query(a0, fam, "0", xi)
    assert empty.w_dim == 0 and not np.any(dnorm_sq(empty))


def test_total_query_linear(inst, rng):
    fam, algo = inst
    x1, x2 = cvec(rng, algo.h_dim), cvec(rng, algo.h_dim)
    a, b = 0.3 - 1.2j, 2.0 + 0.5j
    lhs = total_query(algo, fam, "1", a * x1 + b * x2).data
    rhs = a * total_query(algo, fam, "1", x1).data + b * total_query(algo, fam, "1", x2).data
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


@given(st.integers(0, 2**31 - 1))
def test_monte_carlo_dominance_and_scaling(seed):
    rng = np.random.default_rng(seed)
    fam = family(rng, 1, (1, 2))
    algo = algorithm(rng, 3 + 2, (1, 2), b=1, T=int(rng.integers(0, 5)))
    xi = cvec(rng, algo.h_dim)
    lv = las_vegas(algo, fam, "0", xi)
    assert np.all(lv <= algo.T * np.linalg.norm(xi) ** 2 + 1e-10)
    c = complex(*rng.normal(size=2))
    np.testing.assert_allclose(las_vegas(algo, fam, "0", c * xi), abs(c) ** 2 * lv, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(apply(algo, fam, "0") @ (c * xi), c * (apply(algo, fam, "0") @ xi), atol=1e-10)


def test_parallelogram_las_vegas(inst, rng):
    fam, algo = inst
    d = 3
    xs = cvec(rng, d, algo.h_dim)
    u = unitary(rng, d)
    mixed = u.T @ xs  # row j = sum_i u[i, j] xs[i]
    lhs = sum(las_vegas(algo, fam, "0", x) for x in xs)
    rhs = sum(las_vegas(algo, fam, "0", x) for x in mixed)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_simulate_all_agrees(inst, rng):
    fam, algo = inst
    xis = cvec(rng, 2, algo.h_dim)
    finals, lv = simulate_all(algo, fam, xis)
    for i, x in enumerate(fam.labels):
        np.testing.assert_allclose(finals[i], apply(algo, fam, x) @ xis[i], atol=1e-12)
        np.testing.assert_allclose(lv[i], las_vegas(algo, fam, x, xis[i]), rtol=1e-12)


def test_check_state_conversion(inst, rng):
    fam, algo = inst
    ident = QueryAlgorithm(2, ((),), QueryEmbedding.standard(2, 1, 1), (1,))
    f1 = OracleFamily.from_matrices({"a": np.eye(1)})
    xi = np.array([[1.0, 0.0]])
    assert check_state_conversion(ident, StateConversionProblem(f1, xi, xi)).max_error == 0

    xis = unit_states(rng, 2, 2, algo.h_dim)
    finals, _ = simulate_all(algo, fam, xis)
    pert = cvec(rng, 2, algo.h_dim) * 1e-3
    rep = check_state_conversion(algo, StateConversionProblem(fam, xis, finals + pert), tol=1e-9)
    for i, x in enumerate(fam.labels):
        assert rep.errors[x] == pytest.approx(np.linalg.norm(pert[i]), rel=1e-9)
    assert not rep.ok


def test_shape_checks(rng):
    with pytest.raises(ShapeError):
        QueryEmbedding.standard(3, 2, 2)
    fam = family(rng, 1, (3,))
    algo = algorithm(rng, 3, (2,), b=1, T=1)
    with pytest.raises(ShapeError):
        apply(algo, fam, "0")


def test_gate_low_rank_form(rng):
    b, _ = np.linalg.qr(cvec(rng, 5, 2))
    m = unitary(rng, 2)
    g = Gate(np.arange(5), m, b)
    dense = np.eye(5) + b @ (m - np.eye(2)) @ b.conj().T
    np.testing.assert_allclose(g.dense(), dense, atol=1e-12)
    assert g.is_unitary()
    np.testing.assert_allclose(g.adjoint().dense(), dense.conj().T, atol=1e-12)


def test_dense_query_helper_consistent(rng):
    # The test helper itself: one query on c_dim=0, b=1 is just O.
    algo = algorithm(rng, 2, (2,), b=1, T=1)
    o = unitary(rng, 2)
    np.testing.assert_allclose(dense_query(algo, o), o)
