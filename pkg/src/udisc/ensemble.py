"""State ensembles, Gram matrices and dual (reciprocal) states."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, LinearlyDependent, NotNormalized, PriorsInvalid

TOL_NORM = 1e-6
TOL_RANK = 1e-10
TOL_SOLVE = 1e-10


@dataclass(frozen=True)
class StateEnsemble:
    """``n`` linearly independent pure states with prior probabilities.

    ``states`` is the ``d x n`` matrix whose columns are the state vectors.
    Build instances through :func:`validate`; the constructor does no checking.
    """

    states: np.ndarray
    priors: np.ndarray

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def d(self) -> int:
        return self.states.shape[0]

    def with_priors(self, priors) -> "StateEnsemble":
        return validate(self.states.T, priors)


@dataclass(frozen=True)
class GramMatrix:
    """Hermitian overlap matrix ``X[i, j] = <psi_i|psi_j>`` with cached spectrum."""

    entries: np.ndarray
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)

    @classmethod
    def from_entries(cls, entries) -> "GramMatrix":
        X = np.asarray(entries, dtype=complex)
        X = 0.5 * (X + X.conj().T)
        w, v = np.linalg.eigh(X)
        return cls(X, w[::-1].copy(), v[:, ::-1].copy())

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def sigma_min(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def condition(self) -> float:
        return float(self.eigenvalues[0] / self.eigenvalues[-1])

    def inverse(self) -> np.ndarray:
        v, w = self.eigenvectors, self.eigenvalues
        return (v / w) @ v.conj().T

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


@dataclass(frozen=True)
class DualStates:
    columns: np.ndarray
    residual: float


def as_matrix(X) -> np.ndarray:
    """Return the raw complex array behind a :class:`GramMatrix` or array-like."""
    if isinstance(X, GramMatrix):
        return X.entries
    return np.asarray(X, dtype=complex)


def validate(raw_states, raw_priors) -> StateEnsemble:
    """Check and normalize raw input.

    ``raw_states`` is a sequence of ``n`` vectors of common length ``d``.
    Vectors whose norm is within ``TOL_NORM`` of one are renormalized; anything
    further off is rejected.
    """
    try:
        vecs = [np.asarray(s, dtype=complex).ravel() for s in raw_states]
    except (TypeError, ValueError) as exc:
        raise DimensionMismatch(f"states: not numeric vectors ({exc})") from None
    n = len(vecs)
    if n < 2:
        raise DimensionMismatch(f"states: need at least 2 states, got {n}")
    dims = {v.size for v in vecs}
    if len(dims) != 1:
        raise DimensionMismatch(f"states: vectors have differing lengths {sorted(dims)}")
    d = dims.pop()
    if d < n:
        raise DimensionMismatch(f"states: dimension {d} is smaller than the number of states {n}")
    Phi = np.stack(vecs, axis=1)
    norms = np.linalg.norm(Phi, axis=0)
    bad = np.flatnonzero(np.abs(norms - 1.0) > TOL_NORM)
    if bad.size:
        i = int(bad[0])
        raise NotNormalized(f"states[{i}]: norm {norms[i]:.9g} is not 1")
    Phi = Phi / norms

    gamma = np.asarray(raw_priors, dtype=float).ravel()
    if gamma.size != n:
        raise PriorsInvalid(f"priors: expected {n} values, got {gamma.size}")
    if not np.all(np.isfinite(gamma)) or np.any(gamma < -TOL_NORM):
        raise PriorsInvalid("priors: values must be finite and non-negative")
    total = gamma.sum()
    if abs(total - 1.0) > TOL_NORM:
        raise PriorsInvalid(f"priors: sum is {total:.9g}, expected 1")
    gamma = np.clip(gamma, 0.0, None)
    gamma = gamma / gamma.sum()

    X = Phi.conj().T @ Phi
    det = float(np.prod(np.linalg.eigvalsh(X)))
    if det <= TOL_RANK:
        raise LinearlyDependent(f"states: Gram determinant {det:.3e} <= {TOL_RANK:g}")
    return StateEnsemble(Phi, gamma)


def gram(ensemble: StateEnsemble) -> GramMatrix:
    Phi = ensemble.states
    return GramMatrix.from_entries(Phi.conj().T @ Phi)


def dual_states(ensemble: StateEnsemble) -> DualStates:
    """Reciprocal vectors ``Phi (Phi^dagger Phi)^{-1}``, biorthogonal to the states."""
    G = gram(ensemble)
    if G.sigma_min <= 0:
        raise LinearlyDependent("states: Gram matrix is singular")
    Phi = ensemble.states
    dual = Phi @ G.inverse()
    residual = float(np.max(np.abs(Phi.conj().T @ dual - np.eye(ensemble.n))))
    return DualStates(dual, residual)


def random_ensemble(n, d=None, rng=None, real=False, priors=None) -> StateEnsemble:
    """Draw Haar-like random states and Dirichlet(1, ..., 1) priors."""
    rng = np.random.default_rng(rng)
    d = n if d is None else d
    while True:
        A = rng.standard_normal((d, n))
        if not real:
            A = A + 1j * rng.standard_normal((d, n))
        A /= np.linalg.norm(A, axis=0)
        if np.prod(np.linalg.eigvalsh(A.conj().T @ A)) > 1e-6:
            break
    gamma = rng.dirichlet(np.ones(n)) if priors is None else priors
    return validate(A.T, gamma)
