import itertools
import math

import numpy as np
import pytest

from lasvegas import adversary as adv
from lasvegas import problems
from lasvegas.errors import DegenerateInput, EntryDomainError, Infeasible, NotACycle, RangeError

ONE, MINUS = np.array([[1.0]]), np.array([[-1.0]])


# ---------------------------------------------------------------- two labels

def test_two_label_reference_instance():
    tl = problems.two_label(1, 0, ONE, MINUS)
    assert tl.bound == 0.5
    sol = tl.boundary_solution(0.5)
    assert adv.residual(sol, tl.problem) <= 1e-12
    np.testing.assert_allclose(adv.objective_profile(sol).values.ravel(), [0.5, 0.5], atol=1e-15)


@pytest.mark.parametrize("w0", [0.05, 0.25, 1.0, 4.0])
def test_two_label_boundary_hyperbola(w0):
    tl = problems.two_label(1, 0, ONE, MINUS)
    sol = tl.boundary_solution(w0)
    prof = adv.objective_profile(sol).values.ravel()
    assert prof[0] * prof[1] == pytest.approx(tl.bound ** 2)
    assert adv.residual(sol, tl.problem) <= 1e-12


def test_two_label_inner_products():
    tl = problems.two_label(0.3 + 0.4j, -0.2j, ONE, np.array([[1j]]))
    p = tl.problem
    assert np.vdot(p.xi[0], p.xi[1]) == pytest.approx(0.3 + 0.4j)
    assert np.vdot(p.tau[0], p.tau[1]) == pytest.approx(-0.2j)
    assert np.allclose(np.linalg.norm(p.xi, axis=1), 1) and np.allclose(np.linalg.norm(p.tau, axis=1), 1)
    assert tl.bound == pytest.approx(abs(0.3 + 0.6j) / abs(1 - 1j))
    assert adv.residual(tl.boundary_solution(0.7), p) <= 1e-12


def test_two_label_equal_states():
    tl = problems.two_label(0.5, 0.5, ONE, MINUS)
    assert tl.bound == 0
    assert adv.residual(tl.boundary_solution(1.0), tl.problem) == pytest.approx(0, abs=1e-15)


def test_two_label_errors():
    with pytest.raises(Infeasible):
        problems.two_label(1, 0, ONE, ONE)
    with pytest.raises(RangeError):
        problems.two_label(1.5, 0, ONE, MINUS)


def test_two_label_certificate_scan():
    tl = problems.two_label(1, 0, ONE, MINUS)
    _, rep = problems.best_certificate(tl.problem, tl.certificate, np.linspace(0, np.pi, 17))
    assert rep.bound_singleoracle >= 0.5 - 1e-6
    # Weak duality caps it at the boundary value.
    assert rep.bound_singleoracle <= 0.5 + 1e-9


# ---------------------------------------------------------------- Boolean functions

def test_boolean_constant():
    bp = problems.boolean_problem(lambda x: 1, 3)
    assert not np.any(bp.gap)
    zero = adv.FeasibleSolution.zeros(bp.problem.labels, bp.problem.oracles.block_dims)
    assert adv.residual(zero, bp.problem) == 0


def test_boolean_identity_one_bit():
    bp = problems.boolean_problem(lambda x: x[0], 1)
    np.testing.assert_array_equal(bp.gap, [[0, 1], [1, 0]])
    np.testing.assert_array_equal(bp.deltas[0], [[0, 1], [1, 0]])
    # Undivided problem data is twice the stored convention.
    np.testing.assert_allclose(adv.problem_gram_gap(bp.problem), 2 * bp.gap)
    rep = adv.dual_bound(adv.DualCertificate(bp.gap), bp.problem)
    assert rep.bound_singleoracle == pytest.approx(1.0)
    # Same value as the two-label instance with O0 = 1, O1 = -1 and a - b = 2.
    assert problems.two_label(1, -1, ONE, MINUS).bound == pytest.approx(1.0)


def test_boolean_or2_scan():
    bp = problems.boolean_problem(problems.boolean_function("or", 2), 2)
    cs = np.linspace(0, 2, 41)
    c, rep = problems.best_certificate(bp.problem, lambda t: problems.or2_certificate(t, bp), cs)

    def ratio(t):
        g = problems.or2_certificate(t, bp)
        lam_e = np.linalg.eigvalsh(g * bp.gap)[-1]
        lam_d = max(np.linalg.eigvalsh(g * d)[-1] for d in bp.deltas)
        return lam_e / lam_d

    direct = max(ratio(t) for t in cs)
    assert rep.bound_singleoracle == pytest.approx(direct, abs=1e-10)
    assert rep.bound_singleoracle == pytest.approx(math.sqrt(2), abs=1e-9)


def test_boolean_domain():
    bp = problems.boolean_problem({"01": 0, "10": 1}, 2, domain=["01", "10"])
    assert bp.problem.labels == ("01", "10")
    with pytest.raises(DegenerateInput):
        problems.boolean_problem(lambda x: 0, 2, domain=[])


def test_boolean_gap_and_deltas_match_oracles():
    bp = problems.boolean_problem(problems.boolean_function("majority", 3), 3)
    for i in range(3):
        np.testing.assert_allclose(2 * bp.deltas[i], adv.block_deltas(bp.problem.oracles, i)[:, :, 0, 0].real)


# ---------------------------------------------------------------- permutations

def _related_by_definition(pi):
    """All sigma obtained from pi by rewiring three arrows of its cycle."""
    w = problems.cycle_word(pi)
    n = len(w)
    out = []
    for k in range(1, n):
        for ell in range(k + 1, n):
            p = lambda i: w[i - 1]  # noqa: E731  1-based cycle positions
            sigma = np.array(pi).copy()
            sigma[p(k)] = p(ell + 1)
            sigma[p(n)] = p(k + 1)
            sigma[p(ell)] = p(1)
            out.append(tuple(sigma))
    return set(out)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_relation_against_definition(n):
    cycles = problems.single_cycles(n)
    assert len(cycles) == math.factorial(n - 1)
    for pi in cycles:
        expect = _related_by_definition(pi)
        got = {tuple(s) for s in cycles if problems.relation_check(pi, s)}
        assert got == expect


def test_relation_properties():
    cycles = problems.single_cycles(5)
    for pi in cycles:
        assert not problems.relation_check(pi, pi)
        inv_pi = int(np.flatnonzero(pi == 0)[0])
        for sigma in cycles:
            r = problems.relation_check(pi, sigma)
            assert r == problems.relation_check(sigma, pi)
            if r:
                assert int(np.flatnonzero(sigma == 0)[0]) != inv_pi


def test_relation_n3():
    a, b = problems.single_cycles(3)
    assert problems.relation_check(a, b)


def test_not_a_cycle():
    with pytest.raises(NotACycle):
        problems.cycle_word([1, 0, 2])


@pytest.mark.parametrize("n", [3, 4, 5])
def test_delta_pattern(n):
    pattern = np.array([[1, 0, -1], [-1, 1, 0], [0, -1, 1]])
    cycles = problems.single_cycles(n)
    for pi in cycles[:6]:
        for sigma in cycles:
            wit = problems.relation_witness(pi, sigma)
            if wit is None:
                continue
            k, ell = wit
            w = problems.cycle_word(pi)
            idx = [w[k - 1], w[ell - 1], w[n - 1]]
            d = np.eye(n) - problems.permutation_matrix(pi).T @ problems.permutation_matrix(sigma)
            np.testing.assert_array_equal(d[np.ix_(idx, idx)], pattern)
            rest = d.copy()
            rest[np.ix_(idx, idx)] = 0
            assert not np.any(rest)


def test_permutation_matrix_convention():
    pi = problems.single_cycles(4)[1]
    o = problems.permutation_matrix(pi)
    for i in range(4):
        assert o[pi[i], i] == 1


@pytest.mark.parametrize("n", [3, 4, 5])
def test_gamma_spectrum(n):
    pin = problems.perm_inversion(n)
    g = pin.gamma
    rows = (n - 1) * (n - 2) // 2
    assert np.all(g.sum(axis=1) == rows)
    assert not np.any(np.diag(g)) and np.array_equal(g, g.T)
    assert pin.report["lambda_gamma"] == pytest.approx(rows, abs=1e-9)
    assert pin.report["lambda_neg_gamma"] <= n - 2 + 1e-9
    assert np.linalg.eigvalsh((n - 2) * np.eye(len(g)) + g)[0] >= -1e-9
    assert pin.report["lambda_gamma_delta_dblprime"] == pytest.approx(pin.report["lambda_neg_gamma"], abs=1e-9)


def test_gamma_n3_and_exact_hadamard():
    pin = problems.perm_inversion(3)
    np.testing.assert_array_equal(pin.gamma, [[0, 1], [1, 0]])
    e = adv.problem_gram_gap(pin.problem())
    np.testing.assert_allclose(pin.gamma * e, pin.gamma)


def test_dual_exact_n4():
    pin = problems.perm_inversion(4)
    rep = adv.dual_bound(adv.DualCertificate(pin.gamma), pin.problem())
    assert rep.lam_E == pytest.approx(3.0, abs=1e-9)
    assert rep.lam_Delta[0] == pytest.approx(pin.report["lambda_gamma_delta"], abs=1e-9)
    assert pin.report["ratio_exact"] == pytest.approx(3.0 / pin.report["lambda_gamma_delta"], abs=1e-9)


@pytest.mark.parametrize("n", [4, 5])
def test_spalek(n):
    pin = problems.perm_inversion(n)
    dense = pin.gamma_delta_prime.toarray()
    norm = np.linalg.norm(dense, 2)
    assert pin.report["norm_gamma_delta_prime"] == pytest.approx(norm, abs=1e-9)
    assert norm <= pin.report["spalek_bound"] + 1e-9
    assert pin.report["spalek_bound"] <= 2 * n ** 1.5 + 1e-6


def test_spalek_examples():
    assert problems.spalek_bound(np.zeros((3, 3))) == 0
    a = np.zeros((3, 3))
    a[1, 2] = -1
    assert problems.spalek_bound(a) == 1
    with pytest.raises(EntryDomainError):
        problems.spalek_bound(np.array([[2.0]]))


def test_delta_split_sums():
    pin = problems.perm_inversion(4)
    total = (pin.gamma_delta_prime + pin.gamma_delta_dblprime).toarray()
    np.testing.assert_allclose(total, pin.gamma_delta.toarray())
    n = 4
    dense = np.zeros((len(pin.cycles) * n,) * 2)
    d = pin.deltas()
    for x, y in itertools.product(range(len(pin.cycles)), repeat=2):
        dense[x * n:(x + 1) * n, y * n:(y + 1) * n] = pin.gamma[x, y] * d[x, y]
    np.testing.assert_allclose(pin.gamma_delta.toarray(), dense)


def test_bounded_error_quadratic_form():
    n = 5
    pin = problems.perm_inversion(n)
    taus = problems.bounded_error_outputs(pin.cycles)
    p = pin.problem(taus)
    e = adv.problem_gram_gap(p)
    u = np.ones(len(pin.cycles)) / math.sqrt(len(pin.cycles))
    val = float(np.real(u @ (pin.gamma * e) @ u))
    lam = (n - 1) * (n - 2) / 2
    assert val >= (1 - 2 * math.sqrt(2) / 3) * lam - 1e-9
    for i in range(len(pin.cycles)):
        for j in range(len(pin.cycles)):
            if pin.gamma[i, j]:
                assert np.vdot(taus[i], taus[j]).real <= 2 * math.sqrt(2) / 3 + 1e-12


def test_perm_range():
    with pytest.raises(RangeError):
        problems.perm_inversion(2)
    with pytest.raises(RangeError):
        problems.perm_inversion(8)
