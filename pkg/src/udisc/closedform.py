"""Analytical results: the phase representation of an optimum, the star
configuration, generalized equal-probability measurements and three states.

Every closed form here is advisory. Results that claim to be optima go through
:func:`udisc.solver.certify` before they are returned.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .ensemble import TOL_RANK, StateEnsemble, as_matrix, gram
from .errors import (CertificateViolation, ComplexResidue, NotInteriorOptimum,
                     PreconditionFailed, StructureMismatch, UnsupportedDimension,
                     WeightsInvalid)
from .feasible import TOL_SURFACE, minors_and_det
from .solver import Classification, OptimumSolution, SolverConfig, certify

TOL_MODULUS = 1e-6
TOL_IMAG = 1e-8
TOL_ROOT = 1e-8
TOL_CASE2 = 1e-12


# ---------------------------------------------------------------- phases

@dataclass(frozen=True)
class PhaseVector:
    """Phases ``theta`` (gauge ``theta[0] = 0``) and scale ``xi = sqrt(lam)``."""

    thetas: np.ndarray
    xi: float

    def __post_init__(self):
        if not self.xi > 0:
            raise ValueError("xi must be positive")
        if abs(self.thetas[0]) > 1e-12:
            raise ValueError("thetas[0] must be 0")


@dataclass(frozen=True)
class PhaseReconstruction:
    p: np.ndarray
    p_bar: float
    stationarity: np.ndarray
    imag_residue: float

    @property
    def in_range(self) -> bool:
        """Whether ``p`` and ``p_bar`` are admissible probabilities."""
        return bool(np.all(self.p >= -TOL_RANK) and np.all(self.p <= 1 + TOL_RANK)
                    and -TOL_RANK <= self.p_bar <= 1 + TOL_RANK)


def _wrap(theta):
    t = np.mod(theta, 2 * np.pi)
    return np.where(t > 2 * np.pi - 1e-12, 0.0, t)


def extract_phases(X, priors, p_opt) -> PhaseVector:
    """Phases of the unit null vector of ``X - diag(p_opt)`` at an interior optimum.

    At such a point the null vector satisfies ``|u_k|^2 = gamma_k``, so its
    arguments are the only free data.
    """
    X = as_matrix(X)
    gamma = np.asarray(priors, dtype=float)
    p = np.asarray(p_opt, dtype=float)
    w, V = np.linalg.eigh(X - np.diag(p))
    if abs(w[0]) > TOL_SURFACE or (len(w) > 1 and w[1] <= TOL_SURFACE):
        raise NotInteriorOptimum(f"X - diag(p) is not of rank n-1 (eigenvalues {w[:2]})")
    u = V[:, 0]
    err = float(np.max(np.abs(np.abs(u) ** 2 - gamma)))
    if err > TOL_MODULUS:
        raise NotInteriorOptimum(f"null vector moduli differ from the priors by {err:.3e}")
    M = minors_and_det(X, p)[0]
    lam = float(M @ gamma / (gamma @ gamma))
    if lam <= 0:
        raise NotInteriorOptimum(f"multiplier {lam:.3e} is not positive")
    return PhaseVector(_wrap(np.angle(u * np.conj(u[0]))), float(np.sqrt(lam)))


def reconstruct_from_phases(X, priors, phases) -> PhaseReconstruction:
    """Success probabilities ``p_i = (X v)_i / v_i`` with ``v_k = sqrt(gamma_k) e^{i theta_k}``.

    ``p_bar = v^H X v``. The stationarity entries are the derivatives of
    ``p_bar`` with respect to each phase, ``2 Im(conj(v_i) (X v)_i)``.
    """
    X = as_matrix(X)
    gamma = np.asarray(priors, dtype=float)
    thetas = np.asarray(phases.thetas if isinstance(phases, PhaseVector) else phases, dtype=float)
    if np.any(gamma <= 0):
        raise PreconditionFailed("priors: every prior must be positive")
    v = np.sqrt(gamma) * np.exp(1j * thetas)
    Xv = X @ v
    pc = Xv / v
    imag = float(np.max(np.abs(pc.imag)))
    if imag >= TOL_IMAG:
        raise ComplexResidue(f"reconstructed p has imaginary part {imag:.3e}")
    p_bar = np.vdot(v, Xv)
    return PhaseReconstruction(pc.real.copy(), float(p_bar.real),
                               2.0 * np.imag(np.conj(v) * Xv), imag)


# ---------------------------------------------------------------- star

def star_solution(ensemble: StateEnsemble, hub=0, cfg=SolverConfig()):
    """Optimum for a hub state overlapping spokes that are mutually orthogonal.

    Returns ``None`` outside the validity region (some success probability
    would be negative), in which case the general solver applies.
    """
    X = gram(ensemble).entries
    gamma = ensemble.priors
    n = X.shape[0]
    spokes = [k for k in range(n) if k != hub]
    S = X[np.ix_(spokes, spokes)]
    if np.max(np.abs(S - np.diag(np.diag(S)))) > TOL_RANK:
        raise StructureMismatch("states: spokes are not mutually orthogonal")
    a = np.abs(X[hub, spokes])
    if np.any(a <= TOL_RANK):
        raise StructureMismatch("states: a spoke is orthogonal to the hub")
    g0, gs = gamma[hub], gamma[spokes]
    if g0 <= 0 or np.any(gs <= 0):
        return None
    p = np.empty(n)
    p[spokes] = 1 - np.sqrt(g0 / gs) * a
    p[hub] = 1 - np.sum(np.sqrt(gs / g0) * a)
    if np.any(p < -cfg.tol_cert):
        return None
    p = np.clip(p, 0.0, None)
    return _certified(X, gamma, p, cfg)


def _certified(X, gamma, p, cfg):
    """Classify a candidate point and return it only if it certifies."""
    zero = tuple(int(i) for i in np.flatnonzero(p <= cfg.tol_cert))
    free = [i for i in range(len(p)) if i not in zero]
    M = minors_and_det(X, p)[0]
    lam = float(M[free] @ gamma[free] / (gamma[free] @ gamma[free]))
    kind = Classification.BOUNDARY if zero else Classification.INTERIOR
    p = p.copy()
    p[list(zero)] = 0.0
    sol = OptimumSolution(p, lam, float(gamma @ p), kind, zero)
    try:
        sol.residuals = certify(X, gamma, sol, cfg)
    except CertificateViolation:
        return None
    return sol


# ---------------------------------------------------------------- GEPM

class GepmKind(str, Enum):
    REGULAR = "gepm"
    SINGULAR = "singular_gepm"


@dataclass(frozen=True)
class GepmResult:
    p: np.ndarray
    priors: np.ndarray | None
    classification: GepmKind
    sigma_min: float
    minors: np.ndarray


def gepm(states, weights, cfg=SolverConfig()) -> GepmResult:
    """Priors for which success probabilities proportional to ``weights`` are optimal.

    ``states`` is an ensemble or Gram matrix. The point is ``w * sigma_min``
    of the reweighted Gram matrix and the priors are its normalized minors;
    when every minor vanishes the point is singular and a whole range of priors
    makes it optimal, so none is returned.
    """
    X = gram(states).entries if isinstance(states, StateEnsemble) else as_matrix(states)
    w = np.asarray(weights, dtype=float).ravel()
    if w.size != X.shape[0]:
        raise WeightsInvalid(f"weights: expected {X.shape[0]} values, got {w.size}")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise WeightsInvalid("weights: every weight must be finite and positive")
    r = 1 / np.sqrt(w)
    sigma = float(np.linalg.eigvalsh(r[:, None] * X * r[None, :])[0])
    p = w * sigma
    M = minors_and_det(X, p)[0]
    if np.max(M) <= cfg.tol_cert:
        return GepmResult(p, None, GepmKind.SINGULAR, sigma, M)
    M_pos = np.clip(M, 0.0, None)
    return GepmResult(p, M_pos / M_pos.sum(), GepmKind.REGULAR, sigma, M)


# ---------------------------------------------------------------- three states

@dataclass(frozen=True)
class ThreeStateConstants:
    gamma: float
    T: complex
    R: float
    S: float
    Q: float
    W: float
    overlaps: np.ndarray  # |X_12|^2, |X_13|^2, |X_23|^2
    priors: np.ndarray


def three_state_constants(X, priors) -> ThreeStateConstants:
    X = as_matrix(X)
    if X.shape != (3, 3):
        raise UnsupportedDimension(f"states: three-state formulas need n = 3, got {X.shape[0]}")
    g1, g2, g3 = np.asarray(priors, dtype=float)
    a12, a13, a23 = abs(X[0, 1]) ** 2, abs(X[0, 2]) ** 2, abs(X[1, 2]) ** 2
    T = complex(X[0, 1] * X[1, 2] * X[2, 0])
    R = g1 * g2 * a12 + g2 * g3 * a23 + g1 * g3 * a13
    S = g1 * a12 * a13 + g2 * a12 * a23 + g3 * a23 * a13
    return ThreeStateConstants(g1 * g2 * g3, T, R, S, S * S - 4 * R * abs(T) ** 2,
                               a12 + a13 + a23, np.array([a12, a13, a23]),
                               np.array([g1, g2, g3]))


def _lambda_equation(c: ThreeStateConstants, lam):
    """Left side of the radical equation in ``lam`` and its derivative."""
    t2, re = abs(c.T) ** 2, c.T.real
    A = c.gamma * lam ** 3 - c.S * lam - 2 * t2
    P = c.gamma * lam ** 3 + c.R * lam ** 2 + c.S * lam + t2
    sq = np.sqrt(max(P, 0.0))
    f = A + 2 * sq * re
    dA = 3 * c.gamma * lam ** 2 - c.S
    dP = 3 * c.gamma * lam ** 2 + 2 * c.R * lam + c.S
    df = dA + (re * dP / sq if sq > 0 else 0.0)
    return f, df, P


def lambda_polynomial(c: ThreeStateConstants) -> np.ndarray:
    """Coefficients (highest first) of the squared radical equation, degree 6."""
    t2, re = abs(c.T) ** 2, c.T.real
    A = np.array([c.gamma, 0.0, -c.S, -2 * t2])
    P = np.array([c.gamma, c.R, c.S, t2])
    return np.polysub(np.polymul(A, A), 4 * re * re * P)


def three_state_lambda_poly(c: ThreeStateConstants) -> list[float]:
    """Non-negative real roots of the radical equation, ascending.

    The radical is isolated and squared; roots of the sextic come from its
    companion matrix, get two Newton steps on the unsquared equation, and are
    kept only if they satisfy it to ``TOL_ROOT``.
    """
    coeffs = lambda_polynomial(c)
    nz = np.flatnonzero(np.abs(coeffs) > 0)
    if nz.size == 0:
        return []
    roots = np.roots(coeffs[nz[0]:])
    out = []
    for r in roots:
        if abs(r.imag) > 1e-6 * max(1.0, abs(r)) or r.real < -1e-9:
            continue
        lam = max(float(r.real), 0.0)
        for _ in range(2):
            f, df, _ = _lambda_equation(c, lam)
            if df == 0 or not np.isfinite(df):
                break
            lam = max(lam - f / df, 0.0)
        f, _, P = _lambda_equation(c, lam)
        if P < -TOL_ROOT or abs(f) > TOL_ROOT:
            continue
        if all(abs(lam - q) > 1e-9 * max(1.0, lam) for q in out):
            out.append(float(lam))
    return sorted(out)


def three_state_point(c: ThreeStateConstants, lam) -> np.ndarray:
    """Expand ``lam`` to ``p`` with the non-negative square-root branch.

    ``(1 - p_i)^2 = (|X_ij|^2 + lam g_k)(|X_ik|^2 + lam g_j) / (|X_jk|^2 + lam g_i)``.
    """
    a12, a13, a23 = c.overlaps
    g1, g2, g3 = c.priors
    num = np.array([(a12 + lam * g3) * (a13 + lam * g2),
                    (a23 + lam * g1) * (a12 + lam * g3),
                    (a23 + lam * g1) * (a13 + lam * g2)])
    den = np.array([a23 + lam * g1, a13 + lam * g2, a12 + lam * g3])
    with np.errstate(divide="ignore", invalid="ignore"):
        return 1 - np.sqrt(num / den)


def three_state_solution(X, priors, cfg=SolverConfig()):
    """Certified interior optimum from the three-state closed form, or ``None``."""
    X = as_matrix(X)
    gamma = np.asarray(priors, dtype=float)
    c = three_state_constants(X, gamma)
    best = None
    for lam in three_state_lambda_poly(c):
        if lam <= cfg.tol_cert:
            continue
        p = three_state_point(c, lam)
        if not np.all(np.isfinite(p)) or np.any(p <= cfg.tol_cert):
            continue
        sol = _certified(X, gamma, p, cfg)
        if sol is not None and (best is None or sol.p_bar > best.p_bar):
            best = sol
    return best


def three_state_case2(c: ThreeStateConstants) -> float:
    """Unique positive root of ``gamma lam^3 - S lam - 2|T|^2 = 0`` for purely imaginary ``T``."""
    if abs(c.T.real) > TOL_CASE2 or abs(c.T) <= TOL_CASE2:
        raise PreconditionFailed(f"T = {c.T:.3e}: needs Re T = 0 and T != 0")
    if c.S <= 0 or c.gamma <= 0:
        raise PreconditionFailed("S and the prior product must be positive")
    arg = abs(c.T) ** 2 / c.S * np.sqrt(27 * c.gamma / c.S)
    if arg > 1 + 1e-12:
        raise PreconditionFailed(f"arccos argument {arg:.6g} exceeds 1")
    theta = np.arccos(min(arg, 1.0))
    return float(2 * np.sqrt(c.S / (3 * c.gamma)) * np.cos(theta / 3))


def three_state_case3(c: ThreeStateConstants) -> list[float]:
    """Positive roots for real non-negative ``T``, where ``lam = 0`` is always a root.

    The sextic factors as ``lam^2 (g^2 lam^4 - 2 g S lam^2 - 8 g |T|^2 lam + Q)``;
    the quartic factor is solved numerically and filtered like the sextic.
    """
    if c.T.real < -TOL_CASE2 or abs(c.T.imag) > TOL_CASE2:
        raise PreconditionFailed(f"T = {c.T:.3e}: needs T real and non-negative")
    g, t2 = c.gamma, abs(c.T) ** 2
    roots = np.roots([g * g, 0.0, -2 * g * c.S, -8 * g * t2, c.Q]) if g > 0 else []
    out = []
    for r in roots:
        if abs(r.imag) > 1e-6 * max(1.0, abs(r)) or r.real <= 0:
            continue
        f, _, _ = _lambda_equation(c, float(r.real))
        if abs(f) <= TOL_ROOT:
            out.append(float(r.real))
    return sorted(out)


def three_state_epm(X, tol=SolverConfig().tol_cert):
    """Equal success probability on the surface and the priors that make it optimal.

    Returns ``(p_epm, priors)``; ``priors`` is ``None`` when the common
    denominator vanishes, which happens exactly when the point is singular.
    """
    X = as_matrix(X)
    c = three_state_constants(X, np.full(3, 1 / 3))
    W = c.W
    if W <= TOL_RANK:
        return 1.0, None
    # theta = arccos(sqrt(27) Re T / W^(3/2)) loses half the digits near 0, where
    # the overlaps are equal. W^3 - 27 |T|^2 is a sum of non-negative terms, which
    # keeps the sine exact and lets atan2 resolve theta to full precision.
    x, y, z = c.overlaps
    gap = (W * ((x - y) ** 2 + (y - z) ** 2 + (z - x) ** 2) / 2
           + 3 * (x * (y - z) ** 2 + y * (z - x) ** 2 + z * (x - y) ** 2))
    theta = np.arctan2(np.sqrt(gap + 27 * c.T.imag ** 2), np.sqrt(27) * c.T.real)
    cos = np.cos(np.pi / 3 - theta / 3)
    p = float(1 - 2 * np.sqrt(W / 3) * cos)
    den = 4 * W * cos ** 2 - W
    if den <= tol:
        return p, None
    a12, a13, a23 = c.overlaps
    num = 4 / 3 * W * cos ** 2 - np.array([a23, a13, a12])
    return p, num / den
