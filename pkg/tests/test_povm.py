import numpy as np
import pytest

from conftest import ref_ensemble
from expected import INTERIOR
from udisc.ensemble import random_ensemble, validate
from udisc.errors import InfeasiblePoint
from udisc.povm import build_povm, outcome_distribution, outcome_table, simulate
from udisc.solver import optimize


@pytest.fixture(scope="module")
def interior():
    e = ref_ensemble(INTERIOR["priors"])
    sol = optimize(e)
    return e, sol, build_povm(e, sol.p_opt)


def test_axioms_at_optimum(interior):
    e, sol, P = interior
    r = P.residuals
    assert r["completeness"] < 1e-10
    assert r["min_eig_elements"] > -1e-10
    assert r["min_eig_inconclusive"] > -1e-8
    assert r["max_rank"] == 1


def test_no_errors_and_exact_successes(interior):
    e, sol, P = interior
    T = outcome_table(P, e)
    off = T[:, :e.n] - np.diag(np.diag(T[:, :e.n]))
    assert np.max(np.abs(off)) < 1e-12
    assert np.allclose(np.diag(T), sol.p_opt, atol=1e-12)
    assert np.allclose(T.sum(axis=1), 1.0, atol=1e-12)


def test_outcome_distribution_order(interior):
    e, sol, P = interior
    d = outcome_distribution(P, e, 1)
    assert d.shape == (e.n + 1,)
    assert d[1] == pytest.approx(sol.p_opt[1], abs=1e-12)
    assert d[-1] == pytest.approx(1 - sol.p_opt[1], abs=1e-12)


def test_orthonormal_states_have_empty_inconclusive():
    e = validate(np.eye(3), [1 / 3] * 3)
    P = build_povm(e, np.ones(3))
    assert np.max(np.abs(P.inconclusive)) < 1e-12
    assert np.allclose(P.elements.sum(axis=0), np.eye(3))


def test_zero_point_is_all_inconclusive():
    e = ref_ensemble((1 / 3,) * 3)
    P = build_povm(e, np.zeros(3))
    assert np.allclose(P.inconclusive, P.span_projector)
    rep = simulate(P, e, 1000, seed=1)
    assert rep.empirical_success == 0.0 and rep.empirical_error == 0.0


def test_embedded_states_and_ambient():
    rng = np.random.default_rng(3)
    e = random_ensemble(3, d=5, rng=rng)
    sol = optimize(e)
    P = build_povm(e, sol.p_opt)
    assert np.linalg.matrix_rank(P.span_projector, tol=1e-10) == 3
    assert P.residuals["completeness"] < 1e-10
    A = build_povm(e, sol.p_opt, ambient=True)
    assert np.allclose(A.inconclusive + A.elements.sum(axis=0), np.eye(5), atol=1e-10)
    assert np.linalg.eigvalsh(A.inconclusive)[0] > -1e-8


def test_infeasible_points_rejected():
    e = ref_ensemble((1 / 3,) * 3)
    with pytest.raises(InfeasiblePoint):
        build_povm(e, [0.9, 0.9, 0.9])
    with pytest.raises(InfeasiblePoint):
        build_povm(e, [-0.1, 0.1, 0.1])
    with pytest.raises(InfeasiblePoint):
        build_povm(e, [0.1, 0.1])


def test_simulation_deterministic(interior):
    e, sol, P = interior
    a = simulate(P, e, 20_000, seed=7, shards=3)
    b = simulate(P, e, 20_000, seed=7, shards=3, workers=3)
    assert np.array_equal(a.counts, b.counts)
    c = simulate(P, e, 20_000, seed=8, shards=3)
    assert not np.array_equal(a.counts, c.counts)
    assert a.counts.sum() == 20_000


def test_simulation_statistics(interior):
    e, sol, P = interior
    N = 200_000
    rep = simulate(P, e, N, seed=11, shards=4)
    sd = np.sqrt(sol.p_bar * (1 - sol.p_bar) / N)
    assert abs(rep.empirical_success - sol.p_bar) < 4 * sd
    assert rep.empirical_error == 0.0
    freq = rep.counts.sum(axis=1) / N
    assert np.allclose(freq, e.priors, atol=5e-3)


def test_simulation_bad_arguments(interior):
    e, sol, P = interior
    with pytest.raises(ValueError):
        simulate(P, e, 0)
    with pytest.raises(ValueError):
        simulate(P, e, 10, shards=0)


def test_report_dict(interior):
    e, sol, P = interior
    d = simulate(P, e, 100, seed=2).to_dict()
    assert set(d) == {"trials", "counts", "empirical_success", "empirical_error", "seed", "shards"}
    assert np.array(d["counts"]).shape == (3, 4)
