"""Clustering and naming quality scores: B-cubed, V-measure, adjusted Rand,
macro classification P/R/F1, and the discovered-relation count."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .errors import ContractError
from .oracles import RelationSet


def _harmonic(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


@dataclass(frozen=True)
class MetricsReport:
    b3: tuple[float, float, float]
    v: tuple[float, float, float]
    ari: float
    cls: tuple[float, float, float]
    discovered: int
    iteration: int = 0

    def to_row(self) -> dict:
        return {
            "b3_prec": self.b3[0], "b3_rec": self.b3[1], "b3_f1": self.b3[2],
            "v_hom": self.v[0], "v_comp": self.v[1], "v_f1": self.v[2],
            "ari": self.ari,
            "cls_prec": self.cls[0], "cls_rec": self.cls[1], "cls_f1": self.cls[2],
            "discovered": self.discovered,
        }


def b_cubed(pred, gold) -> tuple[float, float, float]:
    """Per-instance pairwise precision/recall averaged over instances, then F1."""
    _check_lengths(pred, gold)
    n = len(pred)
    pred_sizes = Counter(pred)
    gold_sizes = Counter(gold)
    joint = Counter(zip(pred, gold))
    prec = sum(joint[(p, g)] / pred_sizes[p] for p, g in zip(pred, gold)) / n
    rec = sum(joint[(p, g)] / gold_sizes[g] for p, g in zip(pred, gold)) / n
    return prec, rec, _harmonic(prec, rec)


def _entropy(counts: Counter, n: int) -> float:
    return -sum((c / n) * math.log(c / n) for c in counts.values() if c > 0)


def v_measure(pred, gold) -> tuple[float, float, float]:
    """Entropy-based homogeneity and completeness with their harmonic mean.

    A zero conditioning entropy (single gold class or single predicted cluster)
    scores that side as 1.
    """
    _check_lengths(pred, gold)
    n = len(pred)
    h_gold = _entropy(Counter(gold), n)
    h_pred = _entropy(Counter(pred), n)
    joint = Counter(zip(pred, gold))
    pred_sizes = Counter(pred)
    gold_sizes = Counter(gold)
    # H(gold | pred) and H(pred | gold) from the same joint table
    h_gold_given_pred = -sum(
        (c / n) * math.log(c / pred_sizes[p]) for (p, g), c in joint.items()
    )
    h_pred_given_gold = -sum(
        (c / n) * math.log(c / gold_sizes[g]) for (p, g), c in joint.items()
    )
    hom = 1.0 if h_gold == 0 else 1.0 - h_gold_given_pred / h_gold
    comp = 1.0 if h_pred == 0 else 1.0 - h_pred_given_gold / h_pred
    return hom, comp, _harmonic(hom, comp)


def ari(pred, gold) -> float:
    """(Index - Expected) / (Max - Expected) over the pair-counting contingency table."""
    _check_lengths(pred, gold)
    if len(pred) < 2:
        raise ContractError("ARI needs at least two instances")
    n = len(pred)
    joint = Counter(zip(pred, gold))
    pred_sizes = Counter(pred)
    gold_sizes = Counter(gold)

    def comb2(x: int) -> float:
        return x * (x - 1) / 2.0

    index = sum(comb2(c) for c in joint.values())
    sum_pred = sum(comb2(c) for c in pred_sizes.values())
    sum_gold = sum(comb2(c) for c in gold_sizes.values())
    expected = sum_pred * sum_gold / comb2(n)
    maximum = (sum_pred + sum_gold) / 2.0
    if maximum == expected:
        return 1.0
    return (index - expected) / (maximum - expected)


def classification_scores(pred_names, gold) -> tuple[float, float, float]:
    """Macro P/R/F1 over gold relations by exact name match.

    Relations never predicted contribute zero precision, recall, and F1 to the
    macro average.
    """
    _check_lengths(pred_names, gold)
    gold_relations = sorted(set(gold))
    pred_counts = Counter(pred_names)
    gold_counts = Counter(gold)
    correct = Counter(g for p, g in zip(pred_names, gold) if p == g)
    precs, recs, f1s = [], [], []
    for rel in gold_relations:
        tp = correct[rel]
        prec = tp / pred_counts[rel] if pred_counts[rel] else 0.0
        rec = tp / gold_counts[rel]
        precs.append(prec)
        recs.append(rec)
        f1s.append(_harmonic(prec, rec))
    k = len(gold_relations)
    return sum(precs) / k, sum(recs) / k, sum(f1s) / k


def relations_discovered(rel_set: RelationSet, gold_universe) -> int:
    """How many real relations have at least one correctly named discovery."""
    return len(set(rel_set.names) & set(gold_universe))


def score_run(
    pred_names, gold, rel_set: RelationSet, iteration: int = 0
) -> MetricsReport:
    gold_universe = {g for g in gold if g is not None}
    return MetricsReport(
        b3=b_cubed(pred_names, gold),
        v=v_measure(pred_names, gold),
        ari=ari(pred_names, gold),
        cls=classification_scores(pred_names, gold),
        discovered=relations_discovered(rel_set, gold_universe),
        iteration=iteration,
    )


def _check_lengths(pred, gold) -> None:
    if len(pred) == 0:
        raise ContractError("metrics need at least one instance")
    if len(pred) != len(gold):
        raise ContractError("prediction and gold label counts differ")
