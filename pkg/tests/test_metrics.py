import math
from collections import Counter

import numpy as np
import pytest

from activeclust.errors import ContractError
from activeclust.metrics import (
    ari,
    b_cubed,
    classification_scores,
    relations_discovered,
    score_run,
    v_measure,
)
from activeclust.oracles import RelationSet


# --- independent oracles: per-instance set logic, entropy tables, all-pairs ----

def oracle_b_cubed(pred, gold):
    n = len(pred)
    precs, recs = [], []
    for i in range(n):
        cluster = [j for j in range(n) if pred[j] == pred[i]]
        cls = [j for j in range(n) if gold[j] == gold[i]]
        both = [j for j in cluster if gold[j] == gold[i]]
        precs.append(len(both) / len(cluster))
        recs.append(len(both) / len(cls))
    p, r = sum(precs) / n, sum(recs) / n
    f = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return p, r, f


def oracle_v_measure(pred, gold):
    n = len(pred)

    def entropy(labels):
        return -sum(
            (c / n) * math.log(c / n) for c in Counter(labels).values()
        )

    def cond_entropy(a, b):  # H(a | b)
        total = 0.0
        for bv in set(b):
            rows = [a[i] for i in range(n) if b[i] == bv]
            nb = len(rows)
            for c in Counter(rows).values():
                total -= (c / n) * math.log(c / nb)
        return total

    h_gold, h_pred = entropy(gold), entropy(pred)
    hom = 1.0 if h_gold == 0 else 1.0 - cond_entropy(gold, pred) / h_gold
    comp = 1.0 if h_pred == 0 else 1.0 - cond_entropy(pred, gold) / h_pred
    f = 0.0 if hom + comp == 0 else 2 * hom * comp / (hom + comp)
    return hom, comp, f


def oracle_ari(pred, gold):
    n = len(pred)
    ss = sd = ds = dd = 0
    for i in range(n):
        for j in range(i + 1, n):
            same_pred = pred[i] == pred[j]
            same_gold = gold[i] == gold[j]
            ss += same_pred and same_gold
            sd += same_pred and not same_gold
            ds += not same_pred and same_gold
            dd += not same_pred and not same_gold
    index = ss
    expected = (ss + sd) * (ss + ds) / (n * (n - 1) / 2)
    maximum = ((ss + sd) + (ss + ds)) / 2
    if maximum == expected:
        return 1.0
    return (index - expected) / (maximum - expected)


def oracle_classification(pred, gold):
    rels = sorted(set(gold))
    precs, recs, f1s = [], [], []
    for rel in rels:
        tp = sum(1 for p, g in zip(pred, gold) if p == rel and g == rel)
        fp = sum(1 for p, g in zip(pred, gold) if p == rel and g != rel)
        fn = sum(1 for p, g in zip(pred, gold) if p != rel and g == rel)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        precs.append(prec)
        recs.append(rec)
        f1s.append(0.0 if prec + rec == 0 else 2 * prec * rec / (prec + rec))
    k = len(rels)
    return sum(precs) / k, sum(recs) / k, sum(f1s) / k


def random_partition_pair(rng, n):
    pred = rng.integers(1, rng.integers(2, 6), size=n).tolist()
    gold = [f"r{v}" for v in rng.integers(0, rng.integers(2, 5), size=n)]
    return pred, gold


# --- fixed cases -------------------------------------------------------------

def test_b_cubed_perfect():
    assert b_cubed([1, 1, 2, 2], ["A", "A", "B", "B"]) == (1.0, 1.0, 1.0)


def test_b_cubed_worked_example():
    prec, rec, f1 = b_cubed([1, 1, 1, 2], ["A", "A", "B", "B"])
    assert prec == pytest.approx(2 / 3, abs=1e-12)
    assert rec == pytest.approx(3 / 4, abs=1e-12)
    assert f1 == pytest.approx(12 / 17, abs=1e-4)


def test_v_measure_identical():
    assert v_measure(["x", "y", "x"], ["x", "y", "x"]) == (1.0, 1.0, 1.0)


def test_v_measure_single_cluster_two_classes():
    hom, comp, _ = v_measure([1, 1, 1, 1], ["A", "A", "B", "B"])
    assert hom == 0.0
    assert comp == 1.0


def test_ari_identical():
    assert ari([1, 1, 2, 2], ["A", "A", "B", "B"]) == 1.0


def test_ari_single_cluster_is_zero():
    assert ari([1, 1, 1, 1], ["A", "A", "B", "B"]) == pytest.approx(0.0, abs=1e-12)


def test_classification_perfect():
    assert classification_scores(["A", "B"], ["A", "B"]) == (1.0, 1.0, 1.0)


def test_classification_missing_relation_halves_recall():
    # everything called A; relation B never predicted
    pred = ["A", "A", "A", "A"]
    gold = ["A", "A", "B", "B"]
    prec, rec, f1 = classification_scores(pred, gold)
    assert rec == pytest.approx(0.5)
    assert prec == pytest.approx((2 / 4 + 0.0) / 2)


def test_relations_discovered():
    rel_set = RelationSet()
    for i, name in enumerate(["a", "b", "c"]):
        rel_set.add(name, i)
    assert relations_discovered(rel_set, {"a", "b", "z"}) == 2
    assert relations_discovered(RelationSet(), {"a"}) == 0
    assert relations_discovered(rel_set, {"a", "b", "c"}) == 3


def test_empty_inputs_rejected():
    with pytest.raises(ContractError):
        b_cubed([], [])
    with pytest.raises(ContractError):
        ari([1], ["A"])
    with pytest.raises(ContractError):
        v_measure([1, 2], ["A"])


# --- oracle agreement on random partitions ------------------------------------

def test_all_metrics_match_oracles_on_random_partitions():
    rng = np.random.default_rng(99)
    for _ in range(200):
        n = int(rng.integers(2, 13))
        pred, gold = random_partition_pair(rng, n)
        np.testing.assert_allclose(b_cubed(pred, gold), oracle_b_cubed(pred, gold), atol=1e-12)
        np.testing.assert_allclose(v_measure(pred, gold), oracle_v_measure(pred, gold), atol=1e-12)
        np.testing.assert_allclose(ari(pred, gold), oracle_ari(pred, gold), atol=1e-12)
        pred_names = [f"r{v}" for v in pred]
        np.testing.assert_allclose(
            classification_scores(pred_names, gold), oracle_classification(pred_names, gold),
            atol=1e-12,
        )


def test_cluster_metrics_invariant_under_relabeling():
    rng = np.random.default_rng(7)
    for _ in range(25):
        n = int(rng.integers(4, 13))
        pred, gold = random_partition_pair(rng, n)
        mapping = {v: f"z{k}" for k, v in enumerate(dict.fromkeys(pred))}
        renamed = [mapping[v] for v in pred]
        np.testing.assert_allclose(b_cubed(pred, gold), b_cubed(renamed, gold), atol=1e-12)
        np.testing.assert_allclose(v_measure(pred, gold), v_measure(renamed, gold), atol=1e-12)
        np.testing.assert_allclose(ari(pred, gold), ari(renamed, gold), atol=1e-12)


def test_score_run_bundles_everything():
    rel_set = RelationSet()
    rel_set.add("A", 1)
    rel_set.add("B", 1)
    report = score_run(["A", "A", "B", "B"], ["A", "A", "B", "B"], rel_set, iteration=3)
    row = report.to_row()
    assert row["b3_f1"] == 1.0
    assert row["ari"] == 1.0
    assert row["discovered"] == 2
    assert report.iteration == 3
