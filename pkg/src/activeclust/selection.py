"""Key-point selection strategies and the annotation stopping rule."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .geometry import GeometryProfile

BASELINES = ("random", "confidence", "margin", "entropy", "gradient")
STRATEGIES = ("ours",) + BASELINES


@dataclass(frozen=True)
class SelectionRound:
    iteration: int
    chosen: list[int]
    xi_c: float
    strategy: str
    truncated: bool = False


@dataclass
class StopState:
    """Annotation progress the stopping rule looks at."""

    total_labeled: int = 0
    consecutive_no_new: int = 0
    discovered_count: int = 0


def should_stop(state: StopState, n_star: int) -> bool:
    """Stop once the label budget is spent or two consecutive rounds found nothing new."""
    return state.total_labeled >= n_star or state.consecutive_no_new >= 2


def select_key_points(
    profile: GeometryProfile,
    B: int,
    candidate_factor: float,
    excluded: set[int] | frozenset[int] = frozenset(),
    iteration: int = 0,
) -> SelectionRound:
    """Top-B by density inside the ceil(candidate_factor*B) highest-sparsity candidates.

    Candidate order is (xi desc, rho desc, index asc); the final pick reorders the
    pool by (rho desc, xi desc, index asc). The smallest xi admitted to the pool is
    recorded as the round's effective sparsity cutoff.
    """
    if B < 1:
        raise ContractError("B must be at least 1")
    n = profile.xi.size
    eligible = np.array([i for i in range(n) if i not in excluded], dtype=np.int64)
    if eligible.size == 0:
        return SelectionRound(iteration, [], 0.0, "ours", truncated=True)
    truncated = eligible.size < B
    xi, rho = profile.xi[eligible], profile.rho[eligible]
    pool_order = np.lexsort((eligible, -rho, -xi))
    pool = pool_order[: min(math.ceil(candidate_factor * B), eligible.size)]
    xi_c = float(xi[pool].min())
    pick_order = np.lexsort((eligible[pool], -xi[pool], -rho[pool]))
    chosen = eligible[pool[pick_order[: min(B, pool.size)]]]
    return SelectionRound(iteration, chosen.tolist(), xi_c, "ours", truncated=truncated)


def baseline_select(
    strategy: str,
    probs: np.ndarray | None,
    penult: np.ndarray | None,
    B: int,
    seed: int,
    excluded: set[int] | frozenset[int] = frozenset(),
) -> list[int]:
    """Classical active-learning pick: B indices by the named uncertainty score.

    Ties resolve to the smaller index; ``excluded`` indices are never returned.
    """
    if strategy not in BASELINES:
        raise ContractError(f"unknown baseline strategy '{strategy}'")
    if strategy == "random":
        if probs is None and penult is None:
            raise ContractError("random baseline needs probs or penult to know N")
        n = probs.shape[0] if probs is not None else penult.shape[0]
        eligible = np.array([i for i in range(n) if i not in excluded], dtype=np.int64)
        rng = np.random.default_rng(seed)
        take = min(B, eligible.size)
        return np.sort(rng.choice(eligible, size=take, replace=False)).tolist()

    if probs is None:
        raise ContractError(f"strategy '{strategy}' requires classifier probabilities")
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2:
        raise ContractError("probs must be an N x C matrix")
    if not np.allclose(probs.sum(axis=1), 1.0, atol=1e-6):
        raise ContractError("probability rows must sum to 1")
    n = probs.shape[0]

    if strategy == "confidence":
        score = probs.max(axis=1)  # smaller max prob = less confident
        ascending = True
    elif strategy == "margin":
        top2 = np.sort(probs, axis=1)[:, -2:] if probs.shape[1] >= 2 else None
        score = (top2[:, 1] - top2[:, 0]) if top2 is not None else np.ones(n)
        ascending = True
    elif strategy == "entropy":
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(probs > 0, probs * np.log(probs), 0.0)
        score = -terms.sum(axis=1)
        ascending = False
    else:  # gradient magnitude at the argmax class through the output layer
        if penult is None:
            raise ContractError("gradient strategy requires penultimate features")
        penult = np.asarray(penult, dtype=np.float64)
        if penult.shape[0] != n:
            raise ContractError("penult row count must match probs")
        residual = probs.copy()
        residual[np.arange(n), probs.argmax(axis=1)] -= 1.0
        score = np.linalg.norm(residual, axis=1) * np.linalg.norm(penult, axis=1)
        ascending = False

    eligible = np.array([i for i in range(n) if i not in excluded], dtype=np.int64)
    keys = score[eligible] if ascending else -score[eligible]
    order = np.lexsort((eligible, keys))
    return eligible[order[: min(B, eligible.size)]].tolist()
