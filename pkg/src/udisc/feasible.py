"""The feasible set {p : X - diag(p) >= 0, p >= 0} and its upper surface.

Indices are zero-based throughout. The surface where the smallest eigenvalue
of ``X - diag(p)`` vanishes is called the critical surface.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .ensemble import as_matrix

TOL_PSD = 1e-9
TOL_SURFACE = 1e-9
BISECT_ITERS = 80


@dataclass(frozen=True)
class FeasibilityReport:
    sigma_min: float
    gamma_min: float
    feasible: bool
    on_critical_surface: bool


def shifted(X, p) -> np.ndarray:
    """``X - diag(p)``; ``p`` may carry leading batch dimensions."""
    X = as_matrix(X)
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != X.shape[0]:
        raise ValueError(f"p has {p.shape[-1]} components, X is {X.shape[0]}x{X.shape[0]}")
    if p.ndim == 1:
        A = X.copy()
        A.flat[::X.shape[0] + 1] -= p
        return A
    A = np.broadcast_to(X, p.shape[:-1] + X.shape).copy()
    i = np.arange(X.shape[0])
    A[..., i, i] -= p
    return A


def min_eigenvalue(X, p) -> float:
    return float(np.linalg.eigvalsh(shifted(X, p))[..., 0])


def check_feasible(X, p, tol_psd=TOL_PSD, tol_surface=TOL_SURFACE) -> FeasibilityReport:
    sigma = min_eigenvalue(X, p)
    gmin = float(np.min(p))
    feasible = sigma >= -tol_psd and gmin >= -tol_psd
    return FeasibilityReport(sigma, gmin, feasible, feasible and abs(sigma) <= tol_surface)


@lru_cache(maxsize=None)
def _deletion_index(n):
    keep = np.array([[j for j in range(n) if j != k] for k in range(n)], dtype=int)
    return keep[:, :, None], keep[:, None, :]


def minors_and_det(X, p):
    """All order-(n-1) principal minors and the determinant of ``X - diag(p)``.

    Works on a single point (shape ``(n,)``) or a batch (shape ``(m, n)``);
    returns ``(M, det)`` with ``M[..., k]`` the minor with row and column ``k``
    deleted. Determinants are eigenvalue products of the Hermitian blocks.
    """
    A = shifted(X, p)
    n = A.shape[-1]
    det = np.prod(np.linalg.eigvalsh(A), axis=-1)
    if n == 1:
        return np.ones(A.shape[:-1] + (1,)), det
    rows, cols = _deletion_index(n)
    sub = A[..., rows, cols]
    M = np.prod(np.linalg.eigvalsh(sub), axis=-1)
    return M, det


def principal_minors(X, p) -> np.ndarray:
    return minors_and_det(X, p)[0]


def principal_minor(X, p, k) -> float:
    """Determinant of ``X - diag(p)`` with row and column ``k`` removed."""
    A = shifted(X, p)
    keep = [j for j in range(A.shape[0]) if j != k]
    if not keep:
        return 1.0
    return float(np.prod(np.linalg.eigvalsh(A[np.ix_(keep, keep)])))


def det_xg(X, p) -> float:
    return float(np.prod(np.linalg.eigvalsh(shifted(X, p))))


def _whitened(X, D):
    """``L^{-1} diag(d) L^{-H}`` for ``X = L L^H``; ``D`` is ``(n,)`` or ``(m, n)``."""
    Linv = np.linalg.inv(np.linalg.cholesky(X))
    return (Linv * D[..., None, :]) @ Linv.conj().T


def _ray_scale_eig(X, direction):
    mu = np.linalg.eigvalsh(_whitened(X, direction))[-1]
    return float(1.0 / mu)


def _ray_scale_bisect(X, direction, iters=BISECT_ITERS):
    lo, hi = 0.0, 1.0 / direction.max() + 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.linalg.eigvalsh(shifted(X, mid * direction))[0] >= 0.0:
            lo = mid
        else:
            hi = mid
    return lo


def ray_to_surface(X, direction, method="bisect") -> np.ndarray:
    """Scale ``direction`` until ``X - t diag(direction)`` becomes singular.

    The set ``{t >= 0 : X - t D >= 0}`` is an interval ``[0, t*]`` because the
    feasible region is convex and contains the origin strictly inside, so any
    direction with a positive component meets the surface exactly once.
    ``method="eig"`` computes ``t* = 1 / mu_max(L^-1 D L^-H)`` with ``X = L L^H``;
    ``method="bisect"`` brackets the sign change of the smallest eigenvalue of
    ``X - t D`` with a fixed number of halvings.
    """
    X = as_matrix(X)
    d = np.asarray(direction, dtype=float)
    if not np.any(d > 0):
        raise ValueError("direction needs at least one positive component")
    if method == "eig":
        t = _ray_scale_eig(X, d)
    elif method == "bisect":
        t = _ray_scale_bisect(X, d)
    else:
        raise ValueError(f"unknown method {method!r}")
    return t * d


def ray_to_surface_batch(X, directions) -> np.ndarray:
    """Vectorized :func:`ray_to_surface` over rows of ``directions``."""
    X = as_matrix(X)
    D = np.asarray(directions, dtype=float)
    mu = np.linalg.eigvalsh(_whitened(X, D))[:, -1]
    return D / mu[:, None]
