"""Nearest-key pseudo-labels with inverse-distance reliability, and the
reliability-ranked split into high/moderate training tiers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .oracles import KeyPointSet

EPS_DISTANCE = 1e-12
R_MAX = 1e12


@dataclass(frozen=True)
class PseudoAssignment:
    index: int  # dataset row
    key_index: int  # row of the nearest key point
    label: str
    reliability: float
    is_key: bool = False


@dataclass(frozen=True)
class ReliabilityPartition:
    r_h: float
    r_m: float
    high: np.ndarray  # sorted rows trained with cross-entropy
    moderate: np.ndarray  # sorted rows trained with the pair loss (superset of high)


def assign_pseudo_labels(reps: np.ndarray, keys: KeyPointSet) -> list[PseudoAssignment]:
    """Every row inherits the label of its nearest key point.

    Reliability is the reciprocal of the unsquared distance, clamped to R_MAX
    below EPS_DISTANCE; key rows assign to themselves at R_MAX. Distance ties
    resolve to the smaller key row.
    """
    if len(keys) == 0:
        raise ContractError("cannot assign pseudo labels without key points")
    reps = np.asarray(reps, dtype=np.float64)
    order = np.argsort(np.asarray(keys.indices))
    key_rows = np.asarray(keys.indices)[order]
    key_labels = [keys.relations[i] for i in order]
    key_reps = reps[key_rows]

    diff = reps[:, None, :] - key_reps[None, :, :]
    dists = np.sqrt(np.sum(diff * diff, axis=-1))
    nearest = dists.argmin(axis=1)  # first occurrence wins: smaller key row on ties

    key_pos = {int(row): pos for pos, row in enumerate(key_rows)}
    out: list[PseudoAssignment] = []
    for i in range(reps.shape[0]):
        if i in key_pos:
            pos = key_pos[i]
            out.append(PseudoAssignment(i, i, key_labels[pos], R_MAX, is_key=True))
            continue
        pos = int(nearest[i])
        d = float(dists[i, pos])
        r = R_MAX if d < EPS_DISTANCE else 1.0 / d
        out.append(PseudoAssignment(i, int(key_rows[pos]), key_labels[pos], min(r, R_MAX)))
    return out


def partition_by_reliability(
    assignments: list[PseudoAssignment], theta_ce: float, theta_bce: float
) -> ReliabilityPartition:
    """Keep the theta_ce% / theta_bce% most reliable rows; key rows always count as high."""
    if not (0 < theta_ce <= theta_bce <= 100):
        raise ContractError("need 0 < theta_ce <= theta_bce <= 100")
    n = len(assignments)
    rows = np.array([a.index for a in assignments])
    rel = np.array([a.reliability for a in assignments])
    order = np.lexsort((rows, -rel))
    k_h = math.ceil(theta_ce / 100.0 * n)
    k_m = math.ceil(theta_bce / 100.0 * n)
    r_h = float(rel[order[k_h - 1]])
    r_m = float(rel[order[k_m - 1]])
    key_rows = {a.index for a in assignments if a.is_key}
    high = set(rows[order[:k_h]].tolist()) | key_rows
    moderate = set(rows[order[:k_m]].tolist()) | key_rows
    return ReliabilityPartition(
        r_h=r_h,
        r_m=r_m,
        high=np.array(sorted(high), dtype=np.int64),
        moderate=np.array(sorted(moderate), dtype=np.int64),
    )
