"""Distance geometry over clustering representations.

Density counts neighbors inside a threshold via the sign trick; the sparsity
index is each point's distance to its nearest higher-density point, so a large
(density, sparsity) pair marks a density peak. Repulsion shrinks sparsity by
the squared distance to already-chosen key points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, NumericError, ShapeError

_CHUNK = 256  # rows per block when expanding pairwise differences


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric N x N squared Euclidean distances with a zero diagonal."""

    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class GeometryProfile:
    """Per-point density and sparsity under one distance threshold."""

    d_c: float
    rho: np.ndarray
    xi: np.ndarray


def pairwise_sq_distances(reps: np.ndarray) -> DistanceMatrix:
    reps = np.asarray(reps, dtype=np.float64)
    if reps.ndim != 2:
        raise ShapeError("reps must be an N x k matrix")
    if reps.shape[0] < 2:
        raise ShapeError("need at least two points")
    if not np.isfinite(reps).all():
        raise NumericError("reps contains non-finite values")
    n = reps.shape[0]
    out = np.empty((n, n), dtype=np.float64)
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        diff = reps[start:stop, None, :] - reps[None, :, :]
        out[start:stop] = np.sum(diff * diff, axis=-1)
    np.fill_diagonal(out, 0.0)
    return DistanceMatrix(values=out)


def compute_threshold(dist: DistanceMatrix, percentile: float) -> float:
    """Value ranked ceil(percentile% * M) among the M unordered pair distances, largest first."""
    if dist.n < 2:
        raise ShapeError("threshold needs at least two points")
    if not (0 < percentile <= 100):
        raise ContractError("percentile must be in (0, 100]")
    iu = np.triu_indices(dist.n, k=1)
    pairs = np.sort(dist.values[iu])[::-1]
    rank = math.ceil(percentile / 100.0 * pairs.size)
    return float(pairs[rank - 1])


def density(dist: DistanceMatrix, d_c: float) -> np.ndarray:
    """rho_i = sum over j != i of sign(d_c - D_ij), as a signed integer count."""
    if d_c <= 0:
        raise ContractError("d_c must be positive")
    signs = np.sign(d_c - dist.values)
    np.fill_diagonal(signs, 0.0)
    return signs.sum(axis=1).astype(np.int64)


def _density_order(rho: np.ndarray) -> np.ndarray:
    """Total order: larger rho first, ties by smaller index. Position 0 is the unique peak."""
    return np.lexsort((np.arange(rho.size), -rho))


def sparsity(dist: DistanceMatrix, rho: np.ndarray) -> np.ndarray:
    """Distance to the nearest point earlier in the density order; the peak takes its max distance."""
    order = _density_order(rho)
    xi = np.empty(rho.size, dtype=np.float64)
    xi[order[0]] = dist.values[order[0]].max()
    for pos in range(1, order.size):
        i = order[pos]
        xi[i] = dist.values[i, order[:pos]].min()
    return xi


def apply_keypoint_repulsion(
    xi: np.ndarray, reps: np.ndarray, key_indices: list[int] | np.ndarray
) -> np.ndarray:
    """Cap xi by the squared distance to the nearest existing key point; keys drop to 0."""
    keys = np.asarray(key_indices, dtype=np.int64)
    if keys.size == 0:
        return xi.copy()
    if keys.min() < 0 or keys.max() >= reps.shape[0]:
        raise ContractError("key index out of range")
    reps = np.asarray(reps, dtype=np.float64)
    out = xi.copy()
    key_reps = reps[keys]
    for start in range(0, reps.shape[0], _CHUNK):
        stop = min(start + _CHUNK, reps.shape[0])
        diff = reps[start:stop, None, :] - key_reps[None, :, :]
        nearest = np.sum(diff * diff, axis=-1).min(axis=1)
        out[start:stop] = np.minimum(out[start:stop], nearest)
    out[keys] = 0.0
    return out


def subsample(n: int, max_n: int, seed: int) -> np.ndarray:
    """All indices when n <= max_n, else a seeded uniform draw without replacement."""
    if max_n < 2:
        raise ContractError("max_n must be at least 2")
    if n <= max_n:
        return np.arange(n)
    picked = np.random.default_rng(seed).choice(n, size=max_n, replace=False)
    return np.sort(picked)


def profile(reps: np.ndarray, dc_percentile: float) -> tuple[DistanceMatrix, GeometryProfile]:
    """Distance matrix plus (d_c, rho, xi) in one pass, the state selection consumes."""
    dist = pairwise_sq_distances(reps)
    d_c = compute_threshold(dist, dc_percentile)
    if d_c <= 0:
        raise NumericError("degenerate geometry: threshold distance is zero")
    rho = density(dist, d_c)
    xi = sparsity(dist, rho)
    return dist, GeometryProfile(d_c=d_c, rho=rho, xi=xi)
