"""The optimal measurement and a Monte Carlo run of the discrimination experiment.

Conclusive elements are ``p_i |d_i><d_i|`` with ``d_i`` the dual states; the
inconclusive element takes up the rest of the projector onto the span of the
states. Sampling uses numpy's default 64-bit generator (PCG64), seeded per
shard with ``(seed, shard_index)``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ensemble import StateEnsemble, dual_states
from .errors import InfeasiblePoint
from .feasible import TOL_PSD

NOISE = 1e-12
CHUNK = 1 << 20


@dataclass(frozen=True)
class PovmSet:
    elements: np.ndarray  # (n, d, d)
    inconclusive: np.ndarray  # (d, d)
    span_projector: np.ndarray
    ambient: bool = False
    residuals: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.elements.shape[0]


def _span_basis(states):
    Q, _ = np.linalg.qr(states)
    return Q


def _check(elements, inconclusive, P, Q):
    total = inconclusive + elements.sum(axis=0)
    res = {
        "completeness": float(np.max(np.abs(Q.conj().T @ (total - P) @ Q))),
        "min_eig_elements": float(np.min(np.linalg.eigvalsh(elements))),
        "min_eig_inconclusive": float(np.linalg.eigvalsh(Q.conj().T @ inconclusive @ Q)[0]),
        "max_rank": int(max(np.linalg.matrix_rank(E, tol=1e-10) for E in elements)),
    }
    return res


def build_povm(ensemble: StateEnsemble, p, ambient=False) -> PovmSet:
    """Measurement achieving success probabilities ``p``.

    With ``ambient=True`` the inconclusive element also covers the orthogonal
    complement of the span, so the elements sum to the identity in dimension d.
    """
    p = np.asarray(p, dtype=float)
    if p.shape != (ensemble.n,):
        raise InfeasiblePoint(f"p: expected {ensemble.n} values, got {p.size}")
    if np.min(p) < -TOL_PSD:
        raise InfeasiblePoint(f"p: component {np.min(p):.3e} is negative")
    D = dual_states(ensemble).columns
    Phi = ensemble.states
    P = Phi @ D.conj().T
    P = 0.5 * (P + P.conj().T)
    elements = p[:, None, None] * np.einsum("ai,bi->iab", D, D.conj())
    inconclusive = P - elements.sum(axis=0)
    Q = _span_basis(Phi)
    res = _check(elements, inconclusive, P, Q)
    if res["min_eig_inconclusive"] < -TOL_PSD:
        raise InfeasiblePoint(
            f"p: inconclusive element has eigenvalue {res['min_eig_inconclusive']:.3e} < 0")
    if ambient:
        inconclusive = inconclusive + np.eye(ensemble.d) - P
    return PovmSet(elements, inconclusive, P, ambient, res)


def outcome_distribution(povm: PovmSet, ensemble: StateEnsemble, i) -> np.ndarray:
    """``(p(1|i), ..., p(n|i), p(inconclusive|i))`` for prepared state ``i`` (zero-based)."""
    psi = ensemble.states[:, i]
    ops = np.concatenate([povm.elements, povm.inconclusive[None]])
    return np.real(np.einsum("a,kab,b->k", psi.conj(), ops, psi))


def outcome_table(povm: PovmSet, ensemble: StateEnsemble) -> np.ndarray:
    """Row ``i`` is :func:`outcome_distribution` for state ``i``."""
    return np.stack([outcome_distribution(povm, ensemble, i) for i in range(ensemble.n)])


@dataclass(frozen=True)
class SimulationReport:
    trials: int
    counts: np.ndarray  # counts[i, j]: prepared i, outcome j; last column inconclusive
    empirical_success: float
    empirical_error: float
    seed: int
    shards: int

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "counts": self.counts.tolist(),
            "empirical_success": self.empirical_success,
            "empirical_error": self.empirical_error,
            "seed": self.seed,
            "shards": self.shards,
        }


def _run_shard(priors, cdf, m, seed, shard):
    rng = np.random.default_rng([seed, shard])
    n, k = cdf.shape
    counts = np.zeros((n, k), dtype=np.int64)
    prior_cdf = np.cumsum(priors)
    prior_cdf /= prior_cdf[-1]
    done = 0
    while done < m:
        b = min(CHUNK, m - done)
        prep = np.minimum(np.searchsorted(prior_cdf, rng.random(b), side="right"), n - 1)
        u = rng.random(b)
        out = np.minimum((u[:, None] >= cdf[prep]).sum(axis=1), k - 1)
        np.add.at(counts, (prep, out), 1)
        done += b
    return counts


def simulate(povm: PovmSet, ensemble: StateEnsemble, trials, seed=0, shards=1,
             workers=1) -> SimulationReport:
    """Sample prepared states from the priors and outcomes by inverse CDF.

    Trials are split over ``shards`` independent streams and the counts added,
    so the result depends only on ``(seed, shards)``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if shards < 1:
        raise ValueError("shards must be at least 1")
    table = outcome_table(povm, ensemble)
    table = np.where(np.abs(table) < NOISE, 0.0, table)
    table = np.clip(table, 0.0, None)
    cdf = np.cumsum(table, axis=1)
    cdf /= cdf[:, -1:]
    sizes = [trials // shards + (s < trials % shards) for s in range(shards)]
    args = [(ensemble.priors, cdf, m, seed, s) for s, m in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda a: _run_shard(*a), args))
    else:
        parts = [_run_shard(*a) for a in args]
    counts = np.sum(parts, axis=0)
    n = ensemble.n
    success = int(np.trace(counts[:, :n]))
    error = int(counts[:, :n].sum()) - success
    return SimulationReport(trials, counts, success / trials, error / trials, seed, shards)
