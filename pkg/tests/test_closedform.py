import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import hub_instance, interior_instance, ref_ensemble
from expected import INTERIOR, TABLE_TOL
from udisc.closedform import (GepmKind, PhaseVector, extract_phases, gepm, lambda_polynomial,
                              reconstruct_from_phases, star_solution, three_state_case2,
                              three_state_case3, three_state_constants, three_state_epm,
                              three_state_lambda_poly, three_state_point, three_state_solution)
from udisc.ensemble import gram, random_ensemble, validate
from udisc.errors import (ComplexResidue, NotInteriorOptimum, PreconditionFailed,
                          StructureMismatch, UnsupportedDimension, WeightsInvalid)
from udisc.feasible import minors_and_det
from udisc.solver import Classification, optimize, optimize_gram


def two_state(s, priors=(0.5, 0.5)):
    return validate([[1, 0], [s, np.sqrt(1 - s * s)]], priors)


# ---------------------------------------------------------------- phases

def test_phases_of_interior_row():
    e = ref_ensemble(INTERIOR["priors"])
    sol = optimize(e)
    X = gram(e).entries
    ph = extract_phases(X, e.priors, sol.p_opt)
    assert ph.thetas[0] == 0.0 and ph.xi == pytest.approx(np.sqrt(sol.lam))
    u = np.linalg.eigh(X - np.diag(sol.p_opt))[1][:, 0]
    assert np.allclose(np.abs(u) ** 2, INTERIOR["priors"], atol=1e-6)
    r = reconstruct_from_phases(X, e.priors, ph)
    assert np.allclose(r.p, INTERIOR["p"], atol=TABLE_TOL)
    assert r.p_bar == pytest.approx(INTERIOR["p_bar"], abs=TABLE_TOL)


def test_two_state_phase_is_pi():
    s = 0.3
    e = two_state(s)
    ph = extract_phases(gram(e).entries, e.priors, optimize(e).p_opt)
    assert ph.thetas[1] == pytest.approx(np.pi)


def test_two_state_reconstruction_by_hand():
    s = 0.3
    r = reconstruct_from_phases(gram(two_state(s)).entries, [0.5, 0.5], [0.0, np.pi])
    assert np.allclose(r.p, 1 - s)
    assert r.p_bar == pytest.approx(1 - s)
    assert r.in_range


def test_wrong_phases_flagged_out_of_range():
    s = 0.3
    r = reconstruct_from_phases(gram(two_state(s)).entries, [0.5, 0.5], [0.0, 0.0])
    assert r.imag_residue == 0.0
    assert r.p_bar == pytest.approx(1 + s)
    assert not r.in_range
    # a real Gram matrix makes every real phase choice stationary
    assert np.allclose(r.stationarity, 0.0)


def test_inconsistent_phases_raise():
    X = gram(ref_ensemble((1 / 3,) * 3)).entries
    with pytest.raises(ComplexResidue):
        reconstruct_from_phases(X, [1 / 3] * 3, [0.0, 0.7, 1.9])


def test_identity_is_not_interior():
    with pytest.raises(NotInteriorOptimum):
        extract_phases(np.eye(3), [1 / 3] * 3, np.ones(3))


def test_phase_vector_gauge():
    with pytest.raises(ValueError):
        PhaseVector(np.array([0.1, 0.0]), 1.0)
    with pytest.raises(ValueError):
        PhaseVector(np.array([0.0, 0.0]), 0.0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 5))
def test_phase_round_trip(seed, n):
    rng = np.random.default_rng(seed)
    e, p = interior_instance(rng, n)
    X = gram(e).entries
    sol = optimize(e)
    assert sol.classification is Classification.INTERIOR
    ph = extract_phases(X, e.priors, sol.p_opt)
    r = reconstruct_from_phases(X, e.priors, ph)
    assert np.allclose(r.p, sol.p_opt, atol=1e-8)
    assert r.p_bar == pytest.approx(sol.p_bar, abs=1e-8)
    assert np.max(np.abs(r.stationarity)) < 1e-6


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_phase_covariance(seed):
    rng = np.random.default_rng(seed)
    e, _ = interior_instance(rng, 4)
    chi = rng.uniform(-np.pi, np.pi, 4)
    f = validate((e.states * np.exp(1j * chi)).T, e.priors)
    a = extract_phases(gram(e).entries, e.priors, optimize(e).p_opt)
    b = extract_phases(gram(f).entries, f.priors, optimize(f).p_opt)
    shift = np.angle(np.exp(1j * (b.thetas - a.thetas + (chi - chi[0]))))
    assert np.allclose(shift, 0.0, atol=1e-8)


# ---------------------------------------------------------------- star

def test_star_matches_solver():
    rng = np.random.default_rng(2)
    hits = 0
    for _ in range(40):
        n = int(rng.integers(3, 6))
        e = validate(hub_instance(rng, n), rng.dirichlet(np.ones(n) * 3))
        s = star_solution(e)
        if s is None:
            continue
        hits += 1
        assert np.allclose(s.p_opt, optimize(e).p_opt, atol=1e-8)
    assert hits > 5


def test_star_two_states_is_limit():
    s, g = 0.4, np.array([0.3, 0.7])
    sol = star_solution(two_state(s, g))
    assert sol.p_bar == pytest.approx(1 - 2 * np.sqrt(g[0] * g[1]) * s, abs=1e-12)


def test_star_with_orthogonal_pair_in_three_states():
    # states 2 and 3 orthogonal, hub at state 1
    a, b = 0.3, 0.4
    states = [[a, b, np.sqrt(1 - a * a - b * b)], [1, 0, 0], [0, 1, 0]]
    g = np.array([0.4, 0.3, 0.3])
    sol = star_solution(validate(states, g))
    want = 1 - 2 * np.sqrt(g[0] * g[1]) * a - 2 * np.sqrt(g[0] * g[2]) * b
    assert sol.p_bar == pytest.approx(want, abs=1e-12)


def test_star_outside_validity_falls_back_to_boundary():
    s, g = 0.6, (0.9, 0.1)
    assert star_solution(two_state(s, g)) is None
    assert optimize(two_state(s, g)).classification is Classification.BOUNDARY


def test_star_structure_mismatch():
    with pytest.raises(StructureMismatch):
        star_solution(ref_ensemble((1 / 3,) * 3))
    with pytest.raises(StructureMismatch):
        # chain 0 - 1 - 2: a star around state 1, not around state 0
        star_solution(validate([[1, 0, 0], [0.6, 0.8, 0], [0, 0.6, 0.8]], [1 / 3] * 3))


# ---------------------------------------------------------------- GEPM

def test_gepm_orthonormal_is_singular():
    r = gepm(validate(np.eye(3), [1 / 3] * 3), [1, 1, 1])
    assert r.classification is GepmKind.SINGULAR and r.priors is None
    assert np.allclose(r.p, 1.0)


def test_gepm_equal_weights_reference():
    e = ref_ensemble((1 / 3,) * 3)
    X = gram(e).entries
    r = gepm(e, [1, 1, 1])
    assert np.allclose(r.p, np.linalg.eigvalsh(X)[0])
    M = minors_and_det(X, r.p)[0]
    assert np.allclose(r.priors, M / M.sum())


def test_gepm_round_trip():
    rng = np.random.default_rng(4)
    for _ in range(10):
        n = int(rng.integers(2, 6))
        e = random_ensemble(n, rng=rng)
        w = rng.random(n) + 0.1
        r = gepm(e, w)
        assert r.classification is GepmKind.REGULAR
        assert np.allclose(optimize(e.with_priors(r.priors)).p_opt, r.p, atol=1e-6)


@pytest.mark.parametrize("w", [[1, 0, 1], [1, -1, 1], [1, 1], [1, np.inf, 1]])
def test_gepm_invalid_weights(w):
    with pytest.raises(WeightsInvalid):
        gepm(ref_ensemble((1 / 3,) * 3), w)


# ---------------------------------------------------------------- three states

def test_constants_reject_other_dimensions():
    with pytest.raises(UnsupportedDimension):
        three_state_constants(np.eye(2), [0.5, 0.5])


def test_reference_interior_via_polynomial():
    X = gram(ref_ensemble(INTERIOR["priors"])).entries
    c = three_state_constants(X, INTERIOR["priors"])
    lams = three_state_lambda_poly(c)
    assert lams[0] == 0.0  # T is real and positive here
    assert any(abs(l - INTERIOR["lam"]) < TABLE_TOL for l in lams)
    sol = three_state_solution(X, INTERIOR["priors"])
    assert np.allclose(sol.p_opt, INTERIOR["p"], atol=TABLE_TOL)


def test_polynomial_coefficients_factor_for_real_triple_product():
    X = np.array([[1, 0.3, 0.4], [0.3, 1, 0.2], [0.4, 0.2, 1]])
    c = three_state_constants(X, [0.2, 0.3, 0.5])
    t2 = abs(c.T) ** 2
    quartic = [c.gamma ** 2, 0, -2 * c.gamma * c.S, -8 * c.gamma * t2, c.Q]
    assert np.allclose(lambda_polynomial(c), np.polymul(quartic, [1, 0, 0]), atol=1e-15)


def test_case1_candidates():
    # X_12 = 0: candidates 0 and |X_31 X_23| / sqrt(g1 g2)
    X = np.array([[1, 0, 0.5], [0, 1, 0.4], [0.5, 0.4, 1]])
    g = np.array([0.3, 0.3, 0.4])
    c = three_state_constants(X, g)
    lams = three_state_lambda_poly(c)
    assert lams == pytest.approx([0.0, 0.5 * 0.4 / np.sqrt(g[0] * g[1])], abs=1e-9)


def test_case2_matches_polynomial_and_solver():
    X = np.array([[1, 0.3, 0.4j], [0.3, 1, 0.2], [-0.4j, 0.2, 1]])
    g = np.array([0.3, 0.3, 0.4])
    c = three_state_constants(X, g)
    lam = three_state_case2(c)
    assert three_state_lambda_poly(c) == pytest.approx([lam], abs=1e-10)
    assert optimize_gram(X, g).lam == pytest.approx(lam, abs=1e-8)
    p = three_state_point(c, lam)
    assert np.allclose(p, optimize_gram(X, g).p_opt, atol=1e-8)


def test_case2_small_t_limit():
    X = np.array([[1, 0.3, 1e-5j], [0.3, 1, 0.2], [-1e-5j, 0.2, 1]])
    c = three_state_constants(X, [0.3, 0.3, 0.4])
    assert three_state_case2(c) == pytest.approx(np.sqrt(c.S / c.gamma), rel=1e-6)


def test_case2_preconditions():
    X = np.array([[1, 0.3, 0.4], [0.3, 1, 0.2], [0.4, 0.2, 1]])
    with pytest.raises(PreconditionFailed):
        three_state_case2(three_state_constants(X, [0.3, 0.3, 0.4]))
    with pytest.raises(PreconditionFailed):
        three_state_case2(three_state_constants(np.eye(3), [0.3, 0.3, 0.4]))


def test_case3_roots_reach_the_interior_optimum():
    X = gram(ref_ensemble(INTERIOR["priors"])).entries
    c = three_state_constants(X, INTERIOR["priors"])
    assert three_state_case3(c) == pytest.approx([optimize_gram(X, INTERIOR["priors"]).lam])


def test_three_state_agreement_random():
    rng = np.random.default_rng(9)
    checked = 0
    for _ in range(30):
        e, _ = interior_instance(rng, 3)
        X = gram(e).entries
        sol = optimize(e)
        cf = three_state_solution(X, e.priors)
        assert cf is not None
        assert np.allclose(cf.p_opt, sol.p_opt, atol=1e-6)
        assert cf.lam == pytest.approx(sol.lam, abs=1e-6)
        checked += 1
    assert checked == 30


def test_epm_matches_sigma_min():
    X = gram(ref_ensemble((1 / 3,) * 3)).entries
    p, priors = three_state_epm(X)
    assert p == pytest.approx(np.linalg.eigvalsh(X)[0], abs=1e-10)
    assert np.allclose(priors, gepm(X, [1, 1, 1]).priors, atol=1e-10)


def test_epm_equal_overlaps_is_singular():
    a = 0.35
    X = np.full((3, 3), a) + (1 - a) * np.eye(3)
    p, priors = three_state_epm(X)
    assert p == pytest.approx(1 - a, abs=1e-12)
    assert priors is None


def test_epm_identity():
    assert three_state_epm(np.eye(3)) == (1.0, None)


def test_inequality_guards():
    rng = np.random.default_rng(10)
    for _ in range(200):
        e = random_ensemble(3, rng=rng)
        c = three_state_constants(gram(e).entries, e.priors)
        t2 = abs(c.T) ** 2
        assert c.S ** 3 >= 27 * c.gamma * t2 ** 2 - 1e-15
        assert 27 * c.T.real ** 2 <= 27 * t2 + 1e-15 <= c.W ** 3 + 2e-15
