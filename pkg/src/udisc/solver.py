"""Optimum search over the critical surface.

Three stages, tried in order until one yields a certified point:

1. interior: solve ``M_k(p) = gamma_k * lam`` (all k) with ``det(X - diag(p)) = 0``
   for ``lam > 0`` and ``p > 0``;
2. boundary: the same system restricted to ``p_Z = 0`` for zero sets ``Z`` of
   increasing size, plus the slack conditions ``M_j(p) >= lam * gamma_j`` for
   ``j`` in ``Z``;
3. singular: points where every ``M_k`` vanishes.

Any point accepted by stage 1 or 2 is the global optimum, so the first
acceptance ends the search.

Stages 1 and 2 share one engine. A face ``p_Z = 0`` is reduced to a smaller
Gram matrix by a Schur complement, and the tangency condition is solved in the
equivalent form ``|u_k|^2 = gamma_k / sum(gamma)`` for the null vector ``u``,
which keeps Newton away from the singular set where all minors vanish. The
tangent point maximizes ``gamma . p`` over the face without the sign
constraints, so a log-det barrier path reaches it from any start and Newton
only polishes. Random surface starts remain as a fallback.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import minimize

from .ensemble import TOL_RANK, StateEnsemble, as_matrix, gram
from .errors import CertificateViolation, SolverFailure
from .feasible import TOL_PSD, TOL_SURFACE, min_eigenvalue, minors_and_det, ray_to_surface, shifted


class Classification(str, Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    SINGULAR = "singular"


@dataclass(frozen=True)
class SolverConfig:
    tol_newton: float = 1e-12
    max_iter: int = 60
    multistarts: int = 32
    rng_seed: int = 0
    tol_cert: float = 1e-8
    fd_step: float = 1e-7

    def __post_init__(self):
        if min(self.tol_newton, self.tol_cert, self.fd_step) <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.multistarts < 0:
            raise ValueError("multistarts must be non-negative")


@dataclass
class OptimumSolution:
    p_opt: np.ndarray
    lam: float
    p_bar: float
    classification: Classification
    zero_set: tuple = ()
    residuals: dict = field(default_factory=dict)


def _fd_jacobian(F, x, h):
    m = x.size
    E = np.eye(m) * h
    F2 = F(np.concatenate([x + E, x - E]))
    return ((F2[:m] - F2[m:]) / (2.0 * h)).T


def _newton(F, x0, cfg, least_squares=False, project=None):
    """Damped Newton on a batched residual ``F: (b, m) -> (b, k)``.

    ``project`` maps every trial iterate back onto the feasible sheet.
    Returns ``(x, residual_norm)``; the caller decides what counts as converged.
    """
    x = np.array(x0, dtype=float)
    f = F(x[None])[0]
    norm = np.linalg.norm(f)
    for _ in range(cfg.max_iter):
        if not np.isfinite(norm) or norm <= cfg.tol_newton:
            break
        J = _fd_jacobian(F, x, cfg.fd_step)
        try:
            if least_squares:
                raise np.linalg.LinAlgError
            dx = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError:
            dx = np.linalg.lstsq(J, -f, rcond=None)[0]
        if not np.all(np.isfinite(dx)):
            break
        alpha = 1.0
        while True:
            xn = x + alpha * dx
            if project is not None:
                xn = project(xn)
            fn = F(xn[None])[0]
            nn = np.linalg.norm(fn)
            if nn < norm or alpha < 1e-3:
                break
            alpha *= 0.5
        if not nn < norm:
            break
        step = alpha * np.max(np.abs(dx))
        x, f, norm = xn, fn, nn
        if step < 1e-15:
            break
    return x, float(norm)


def _surface_starts(X, count, rng):
    """EPM-like start, then random surface points."""
    n = X.shape[0]
    yield ray_to_surface(X, np.ones(n), method="eig")
    for _ in range(count):
        yield ray_to_surface(X, np.abs(rng.standard_normal(n)) + 1e-6, method="eig")


def _schur_reduce(X, zero_set):
    """Gram matrix governing the face ``p_Z = 0``.

    With ``X_ZZ`` positive definite, ``X - diag(p) >= 0`` on that face is
    equivalent to ``X_FF - X_FZ X_ZZ^-1 X_ZF - diag(p_F) >= 0``.
    """
    n = X.shape[0]
    Z = list(zero_set)
    F = [i for i in range(n) if i not in Z]
    if not Z:
        return X, np.array(F)
    XZZ = X[np.ix_(Z, Z)]
    XFZ = X[np.ix_(F, Z)]
    R = X[np.ix_(F, F)] - XFZ @ np.linalg.solve(XZZ, XFZ.conj().T)
    return 0.5 * (R + R.conj().T), np.array(F)


def _null_weights(X, p):
    """``|u|^2`` for the lowest eigenvector of ``X - diag(p)`` and its Jacobian.

    The Jacobian is ``None`` when the lowest eigenvalue is degenerate.
    """
    w, V = np.linalg.eigh(shifted(X, p))
    u = V[:, 0]
    gap = w[1:] - w[0]
    if gap.size and gap[0] <= 1e-14 * max(1.0, abs(w[-1])):
        return np.abs(u) ** 2, None
    C = (V[:, 1:] / gap) @ V[:, 1:].conj().T
    J = 2.0 * np.real(u.conj()[:, None] * C * u[None, :])
    return np.abs(u) ** 2, J


def _tangent_point(X, g, p0, cfg):
    """Gauss-Newton for ``|u(p)|^2 = g`` on the critical surface of ``X``.

    Shifting ``p`` along the all-ones vector leaves every eigenvector unchanged,
    so ``p + sigma_min 1`` is an exact, residual-preserving return to the
    surface. Unlike the minors themselves, the weights have no spurious roots on
    the singular set, where every minor vanishes.
    """
    p = p0 + min_eigenvalue(X, p0)
    w, J = _null_weights(X, p)
    r = w - g
    norm = np.linalg.norm(r)
    for _ in range(cfg.max_iter):
        if norm <= cfg.tol_newton:
            break
        if J is None:
            return p, np.inf
        dp = np.linalg.lstsq(J, -r, rcond=None)[0]
        if not np.all(np.isfinite(dp)):
            break
        alpha = 1.0
        while alpha >= 1e-4:
            q = p + alpha * dp
            q = q + min_eigenvalue(X, q)
            wq, Jq = _null_weights(X, q)
            rq = wq - g
            nq = np.linalg.norm(rq)
            if nq < norm:
                break
            alpha *= 0.5
        if not nq < norm:
            break
        step = alpha * np.max(np.abs(dp))
        p, J, r, norm = q, Jq, rq, nq
        if step < 1e-15:
            break
    return p, float(norm)


def _central_path(X, g, gap=1e-10, shrink=0.2):
    """Near-maximizer of ``g . p`` over ``X - diag(p) >= 0`` by a log-det barrier.

    Damped Newton on ``g.p / mu + log det(X - diag(p))`` stays strictly feasible
    and converges from any start. Newton on the tangency equations alone can
    jump across the surface where the null-vector weights saturate, which
    happens when the off-diagonal part of ``X`` is small.
    """
    n = len(g)
    p = np.full(n, min_eigenvalue(X, np.zeros(n)) - 1.0)
    mu = 1.0
    while True:
        last = mu * n <= gap
        for _ in range(50):
            S = np.linalg.inv(shifted(X, p))
            grad = g / mu - np.real(np.diag(S))
            P = np.abs(S) ** 2
            try:
                dp = np.linalg.solve(P, grad)
            except np.linalg.LinAlgError:
                return p
            dec = np.sqrt(max(grad @ dp, 0.0))
            p = p + (dp / (1 + dec) if dec > 0.25 else dp)
            # rough centering is enough until the last barrier weight
            if dec < (1e-8 if last else 0.05):
                break
        if last or not np.all(np.isfinite(p)):
            return p
        mu *= shrink


def _corank2(X, p, tol=1e-7):
    w = np.linalg.eigvalsh(shifted(X, p))
    return w.size > 1 and w[1] - w[0] <= tol * max(1.0, abs(w[-1]))


def _solve_tangent(X, gamma, zero_set, cfg):
    """Shared engine for the interior (empty ``zero_set``) and boundary stages."""
    X = as_matrix(X)
    gamma = np.asarray(gamma, dtype=float)
    n = X.shape[0]
    Z = sorted(zero_set)
    R, free = _schur_reduce(X, Z)
    g = gamma[free]
    if g.sum() <= 0:
        return None
    rng = np.random.default_rng([cfg.rng_seed, n, *Z])
    tol = cfg.tol_cert

    w = g / g.sum()
    start = _central_path(R, w)
    for k, p0 in enumerate(itertools.chain([start], _surface_starts(R, cfg.multistarts, rng))):
        pf, norm = _tangent_point(R, w, p0, cfg)
        if norm > cfg.tol_newton * 100 or not np.all(np.isfinite(pf)):
            if k == 0 and _corank2(R, start):
                # the maximizer of w.p on this face is a corank-2 point, so no
                # tangent point exists; such points belong to the singular stage
                return None
            continue
        p = np.zeros(n)
        p[free] = pf
        M = minors_and_det(X, p)[0]
        lam = float(M[free] @ g / (g @ g))
        if lam <= tol or abs(min_eigenvalue(X, p)) > TOL_SURFACE:
            continue
        slack = M[Z] - lam * gamma[Z] if Z else np.zeros(0)
        if np.all(pf > tol) and np.all(slack >= -tol):
            return p, lam
        # A converged tangent point on the feasible sheet maximizes gamma.p over the
        # convex set {p_Z = 0, X - diag(p) >= 0}; if it violates positivity or slack
        # no admissible tangent point exists for this zero set.
        if np.min(pf) < -10 * tol or (slack.size and np.min(slack) < -10 * tol):
            return None
    return None


def solve_interior(X, priors, cfg=SolverConfig()):
    """Stage 1. Returns ``(p, lam)`` or ``None``."""
    return _solve_tangent(X, priors, (), cfg)


def solve_boundary(X, priors, zero_set, cfg=SolverConfig()):
    """Stage 2 for one zero set (zero-based indices). Returns ``(p, lam)`` or ``None``."""
    n = as_matrix(X).shape[0]
    Z = tuple(sorted(set(zero_set)))
    if not Z or len(Z) >= n or Z[0] < 0 or Z[-1] >= n:
        raise ValueError(f"zero_set must be a nonempty proper subset of range({n})")
    return _solve_tangent(X, priors, Z, cfg)


def _singular_candidates(X, cfg):
    """Surface points with every order-(n-1) minor vanishing, any sign of ``p``."""
    X = as_matrix(X)
    n = X.shape[0]
    rng = np.random.default_rng([cfg.rng_seed, n, 7919])
    # Minors of a corank-2 point vanish quadratically, so the residual floor is looser.
    accept = max(cfg.tol_cert * 1e-2, 1e-12)

    def F(batch):
        return minors_and_det(X, batch)[0]

    def project(p):
        return ray_to_surface(X, p, method="eig") if np.any(p > 0) else p

    found = []
    for p0 in _surface_starts(X, cfg.multistarts, rng):
        p, norm = _newton(F, p0, cfg, least_squares=True, project=project)
        if norm > accept or not np.all(np.isfinite(p)):
            continue
        if min_eigenvalue(X, p) < -TOL_PSD:
            continue
        if all(np.max(np.abs(p - q)) > 1e-6 for q in found):
            found.append(p)
    return found


def _admissible(X, p, tol):
    return (np.min(p) >= -TOL_PSD and np.max(p) <= 1 + TOL_PSD
            and abs(min_eigenvalue(X, p)) <= TOL_SURFACE
            and np.max(np.abs(minors_and_det(X, p)[0])) <= tol)


def singular_points(X, cfg=SolverConfig()):
    """Feasible points with all order-(n-1) minors vanishing, deduplicated at 1e-6."""
    return [np.clip(p, 0.0, None) for p in _singular_candidates(X, cfg)
            if np.min(p) >= -TOL_PSD]


def _cluster_frame_residual(X, frame, real):
    """Residual of the 2x2 compression of ``X - diag(p)`` onto its two lowest modes.

    It vanishes exactly on corank-2 points and is smooth there because the
    lowest pair of eigenvalues stays separated from the rest.
    """
    def h(p):
        w, V = np.linalg.eigh(shifted(X, p))
        C = frame.conj().T @ V[:, :2]
        H = (C * w[:2]) @ C.conj().T
        out = [H[0, 0].real, H[1, 1].real, H[0, 1].real]
        return np.array(out if real else out + [H[0, 1].imag])
    return h


def _ascend_singular(X, gamma, p, cfg, rounds=4):
    """Maximize ``gamma . p`` along the corank-2 manifold through ``p``.

    For n >= 4 singular points come in continua; each round re-anchors the
    eigenvector frame and runs SLSQP with the frame residual as equality
    constraints and ``0 <= p <= 1`` as bounds.
    """
    n = X.shape[0]
    real = np.max(np.abs(X.imag)) < TOL_RANK
    if n - (3 if real else 4) < 1:
        return p
    best = p
    # a start outside the orthant only needs to reach it; after that, value must rise
    outside = np.min(p) < -TOL_PSD
    for _ in range(rounds):
        frame = np.linalg.eigh(shifted(X, best))[1][:, :2]
        h = _cluster_frame_residual(X, frame, real)
        res = minimize(lambda q: -gamma @ q, best, jac=lambda q: -gamma, method="SLSQP",
                       bounds=[(0.0, 1.0)] * n,
                       constraints=[{"type": "eq", "fun": h}],
                       options={"ftol": 1e-15, "maxiter": 200})
        q = np.clip(res.x, 0.0, 1.0)
        if not np.all(np.isfinite(q)) or not _admissible(X, q, cfg.tol_cert):
            break
        if not outside and gamma @ q <= gamma @ best + 1e-13:
            break
        best, outside = q, False
    return best


def solve_singular(X, priors, cfg=SolverConfig()):
    """Stage 3: the singular point with the largest ``gamma . p`` or ``None``."""
    X = as_matrix(X)
    gamma = np.asarray(priors, dtype=float)
    # Newton lands anywhere on a singular continuum, often just outside the
    # orthant; those landings still seed the ascent, which is bounded to it.
    inside, outside = [], []
    for p in _singular_candidates(X, cfg):
        if np.min(p) >= -TOL_PSD:
            inside.append(np.clip(p, 0.0, None))
        elif all(np.max(np.abs(p - q)) > 1e-2 for q in outside):
            outside.append(p)
    pts = [_ascend_singular(X, gamma, p, cfg) for p in inside + outside]
    pts = [p for p in pts if np.min(p) >= -TOL_PSD]
    if not pts:
        return None
    # max value first, then lexicographic on p
    pts.sort(key=lambda p: (-round(float(gamma @ p), 12), tuple(p)))
    return pts[0]


def _residuals(X, gamma, p, lam, classification, zero_set):
    M, det = minors_and_det(X, p)
    res = {
        "sigma_min": min_eigenvalue(X, p),
        "det": float(det),
        "gamma_min": float(np.min(p)),
    }
    if classification is Classification.SINGULAR:
        res["max_minor"] = float(np.max(np.abs(M)))
    else:
        free = [i for i in range(len(p)) if i not in zero_set]
        res["minor_proportionality"] = float(np.max(np.abs(M[free] - gamma[free] * lam)))
        if zero_set:
            Z = list(zero_set)
            res["slack_min"] = float(np.min(M[Z] - lam * gamma[Z]))
            res["zero_components"] = float(np.max(np.abs(p[Z])))
    return res


def sigma_gradient(X, p, h=1e-6):
    """Central-difference gradient of the smallest eigenvalue of ``X - diag(p)``."""
    n = len(p)
    E = np.eye(n) * h
    return np.array([(min_eigenvalue(X, p + E[k]) - min_eigenvalue(X, p - E[k])) / (2 * h)
                     for k in range(n)])


def certify(X, priors, sol, cfg=SolverConfig()):
    """Recompute the defining residuals of ``sol``; raise on any violation."""
    X = as_matrix(X)
    gamma = np.asarray(priors, dtype=float)
    p = np.asarray(sol.p_opt, dtype=float)
    tol = cfg.tol_cert
    res = _residuals(X, gamma, p, sol.lam, sol.classification, sol.zero_set)

    def need(name, ok, value, limit):
        if not ok:
            raise CertificateViolation(name, value, limit)

    need("sigma_min", abs(res["sigma_min"]) <= TOL_SURFACE, res["sigma_min"], TOL_SURFACE)
    need("gamma_min", res["gamma_min"] >= -TOL_PSD, res["gamma_min"], TOL_PSD)
    need("p_bar", -TOL_PSD <= sol.p_bar <= 1 + TOL_PSD, sol.p_bar, TOL_PSD)
    if sol.classification is Classification.SINGULAR:
        need("max_minor", res["max_minor"] <= tol, res["max_minor"], tol)
        return res
    need("lambda", sol.lam > tol, sol.lam, tol)
    need("minor_proportionality", res["minor_proportionality"] <= tol,
         res["minor_proportionality"], tol)
    if sol.classification is Classification.BOUNDARY:
        need("zero_components", res["zero_components"] <= TOL_PSD, res["zero_components"], TOL_PSD)
        need("slack_min", res["slack_min"] >= -tol, res["slack_min"], tol)
    else:
        grad_err = float(np.max(np.abs(sigma_gradient(X, p) + gamma)))
        res["gradient"] = grad_err
        need("gradient", grad_err <= 1e-4, grad_err, 1e-4)
    return res


def _finish(X, gamma, p, lam, classification, zero_set, cfg, extra=None):
    sol = OptimumSolution(np.asarray(p, dtype=float), float(lam), float(gamma @ p),
                          classification, tuple(zero_set))
    sol.residuals = certify(X, gamma, sol, cfg)
    if extra:
        sol.residuals.update(extra)
    return sol


def optimize_gram(X, priors, cfg=SolverConfig()) -> OptimumSolution:
    """Run the three-stage search on a Gram matrix and prior vector."""
    X = as_matrix(X)
    gamma = np.asarray(priors, dtype=float)
    n = X.shape[0]
    off = X - np.diag(np.diag(X))
    if np.max(np.abs(off)) < TOL_RANK:
        return _finish(X, gamma, np.ones(n), 0.0, Classification.SINGULAR, (), cfg)

    hit = solve_interior(X, gamma, cfg)
    if hit is not None:
        return _finish(X, gamma, hit[0], hit[1], Classification.INTERIOR, (), cfg)

    for size in range(1, n):
        accepted = []
        for Z in itertools.combinations(range(n), size):
            hit = solve_boundary(X, gamma, Z, cfg)
            if hit is not None:
                accepted.append((Z, hit))
        if accepted:
            Z, (p, lam) = accepted[0]
            extra = {}
            if len(accepted) > 1:
                extra["alternate_zero_sets"] = [list(z) for z, _ in accepted[1:]]
            return _finish(X, gamma, p, lam, Classification.BOUNDARY, Z, cfg, extra)

    p = solve_singular(X, gamma, cfg)
    if p is not None:
        return _finish(X, gamma, p, 0.0, Classification.SINGULAR, (), cfg)
    raise SolverFailure("no stage produced an admissible point",
                        {"sigma_min_X": float(np.linalg.eigvalsh(X)[0]), "n": n})


def optimize(ensemble: StateEnsemble, cfg=SolverConfig()) -> OptimumSolution:
    G = gram(ensemble)
    sol = optimize_gram(G, ensemble.priors, cfg)
    # nearly dependent states are accepted; the conditioning is reported instead
    sol.residuals["gram_condition"] = G.condition
    return sol
