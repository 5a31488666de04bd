"""Brute-force maximizer of ``gamma . p`` over the critical surface.

Shares nothing with the Newton-based solver except the feasibility primitives:
random rays from the origin are projected onto the surface, and the best one is
polished by a derivative-free pattern search.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensemble import as_matrix
from .feasible import ray_to_surface_batch

DIRECTION_FLOOR = 1e-6


@dataclass(frozen=True)
class SurfaceSample:
    points: np.ndarray
    best: np.ndarray
    best_value: float


def _rank(points, values):
    # highest value first, ties resolved lexicographically on the point
    keys = tuple(points[:, k] for k in reversed(range(points.shape[1]))) + (-values,)
    return np.lexsort(keys)


def sample_surface(X, priors, count, seed=0, batch=4096) -> SurfaceSample:
    """Project ``count`` uniformly random positive-orthant rays onto the surface."""
    if count < 1:
        raise ValueError("count must be at least 1")
    X = as_matrix(X)
    gamma = np.asarray(priors, dtype=float)
    rng = np.random.default_rng(seed)
    n = X.shape[0]
    D = np.abs(rng.standard_normal((count, n)))
    D /= np.linalg.norm(D, axis=1, keepdims=True)
    np.maximum(D, DIRECTION_FLOOR, out=D)
    points = np.concatenate([ray_to_surface_batch(X, D[i:i + batch])
                             for i in range(0, count, batch)])
    values = points @ gamma
    i = _rank(points, values)[0]
    return SurfaceSample(points, points[i].copy(), float(values[i]))


def refine(X, priors, start, iters=2000, step=0.1, seed=0, random_moves=None):
    """Pattern search over ray directions, re-projected onto the surface.

    Each iteration tries the ``2n`` compass moves plus ``random_moves`` random
    unit moves (default ``4n``) around the current direction. The best improving
    move is taken and the step doubles (up to 0.5); otherwise the step is
    halved (down to 1e-9). The objective never decreases. Random moves matter
    at ridges of the surface, where no compass direction improves.
    """
    X = as_matrix(X)
    gamma = np.asarray(priors, dtype=float)
    rng = np.random.default_rng(seed)
    n = X.shape[0]
    best = np.asarray(start, dtype=float).copy()
    best_val = float(gamma @ best)
    d = np.maximum(best, DIRECTION_FLOOR)
    d /= np.linalg.norm(d)
    k = 4 * n if random_moves is None else random_moves
    compass = np.concatenate([np.eye(n), -np.eye(n)])
    for _ in range(iters):
        z = rng.standard_normal((k, n))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        moves = np.concatenate([compass, z]) * step
        cand = np.maximum(d + moves, DIRECTION_FLOOR)
        cand /= np.linalg.norm(cand, axis=1, keepdims=True)
        pts = ray_to_surface_batch(X, cand)
        vals = pts @ gamma
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best, best_val, d = pts[j], float(vals[j]), cand[j]
            step = min(step * 2.0, 0.5)
        else:
            step = max(step * 0.5, 1e-9)
    return best
