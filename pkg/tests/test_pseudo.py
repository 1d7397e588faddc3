import numpy as np
import pytest

from activeclust.errors import ContractError
from activeclust.oracles import KeyPoint, KeyPointSet
from activeclust.pseudo import R_MAX, assign_pseudo_labels, partition_by_reliability


def make_keys(entries):
    keys = KeyPointSet()
    for row, rel in entries:
        keys.add(KeyPoint(index=row, instance_id=row, relation=rel, iteration=1))
    return keys


def test_assign_1d_example():
    # line 0..11; keys at value 2 ("A", row 2) and value 10 ("B", row 3)
    reps = np.array([[0.0], [1.0], [2.0], [10.0], [11.0]])
    keys = make_keys([(2, "A"), (3, "B")])
    out = assign_pseudo_labels(reps, keys)
    assert out[0].label == "A"
    assert out[0].reliability == pytest.approx(1 / 2)
    assert out[4].label == "B"
    assert out[4].reliability == pytest.approx(1 / 1)


def test_keys_assign_to_themselves():
    reps = np.array([[0.0], [5.0], [9.0]])
    keys = make_keys([(0, "A"), (2, "B")])
    out = assign_pseudo_labels(reps, keys)
    assert out[0].key_index == 0 and out[0].reliability == R_MAX and out[0].is_key
    assert out[2].key_index == 2 and out[2].reliability == R_MAX


def test_coincident_point_gets_clamped_reliability():
    reps = np.array([[1.0, 1.0], [1.0, 1.0], [5.0, 5.0]])
    keys = make_keys([(0, "A"), (2, "B")])
    out = assign_pseudo_labels(reps, keys)
    assert out[1].label == "A"
    assert out[1].reliability == R_MAX


def test_distance_tie_prefers_smaller_key_row():
    reps = np.array([[0.0], [2.0], [4.0]])
    keys = make_keys([(2, "B"), (0, "A")])  # insertion order reversed on purpose
    out = assign_pseudo_labels(reps, keys)
    assert out[1].key_index == 0
    assert out[1].label == "A"


def test_assignments_are_argmin_on_random_fixtures():
    rng = np.random.default_rng(13)
    for _ in range(5):
        reps = rng.normal(size=(40, 3))
        key_rows = rng.choice(40, size=6, replace=False)
        keys = make_keys([(int(r), f"rel{r}") for r in key_rows])
        out = assign_pseudo_labels(reps, keys)
        for a in out:
            if a.is_key:
                continue
            best = min(np.linalg.norm(reps[a.index] - reps[k]) for k in key_rows)
            got = np.linalg.norm(reps[a.index] - reps[a.key_index])
            assert got == pytest.approx(best, abs=1e-12)
            assert a.reliability == pytest.approx(1.0 / got)


def test_empty_keys_rejected():
    with pytest.raises(ContractError):
        assign_pseudo_labels(np.zeros((3, 2)), KeyPointSet())


# --- reliability partition ------------------------------------------------------

def fake_assignments(reliabilities, key_rows=()):
    from activeclust.pseudo import PseudoAssignment

    return [
        PseudoAssignment(index=i, key_index=0, label="A", reliability=r,
                         is_key=i in key_rows)
        for i, r in enumerate(reliabilities)
    ]


def test_partition_percentile_example():
    out = partition_by_reliability(fake_assignments([1, 2, 3, 4, 5, 6, 7, 8, 9, 10]), 20, 50)
    assert set(out.high.tolist()) == {8, 9}  # rows holding reliabilities 9 and 10
    assert set(out.moderate.tolist()) == {5, 6, 7, 8, 9}


def test_partition_equal_thresholds():
    out = partition_by_reliability(fake_assignments([3, 1, 2, 5]), 50, 50)
    np.testing.assert_array_equal(out.high, out.moderate)


def test_partition_bce_100_includes_all():
    rel = [0.5, 1.5, 0.1, 9.0]
    out = partition_by_reliability(fake_assignments(rel), 25, 100)
    assert out.moderate.tolist() == [0, 1, 2, 3]


def test_partition_high_subset_of_moderate_and_monotone():
    rng = np.random.default_rng(5)
    rel = rng.uniform(0.1, 10, size=50).tolist()
    prev = set()
    for theta in (10, 30, 50, 70, 90):
        out = partition_by_reliability(fake_assignments(rel), theta, 95)
        high = set(out.high.tolist())
        assert set(out.high.tolist()) <= set(out.moderate.tolist())
        assert prev <= high  # growing theta never drops members
        prev = high


def test_partition_keys_always_high():
    rel = [0.1, 0.2, 0.3, 0.4, 100.0]
    out = partition_by_reliability(fake_assignments(rel, key_rows={0}), 20, 40)
    assert 0 in out.high.tolist()


def test_partition_rejects_bad_thetas():
    with pytest.raises(ContractError):
        partition_by_reliability(fake_assignments([1.0, 2.0]), 60, 40)


def test_tier_accuracy_ordering_on_separable_mixtures():
    # closer to a key means more reliable means more often correct; holds in
    # aggregate over seeds, single draws can wobble at the decimals
    from activeclust.datasets import SynthSpec, generate_synthetic

    acc_h_all, acc_m_all, acc_all_all = [], [], []
    for seed in range(5):
        ds = generate_synthetic(SynthSpec(num_clusters=4, head_size=40, tail_decay=0.3,
                                          dim=6, cluster_spread=1.0, center_spread=3.0,
                                          seed=seed))
        gold = ds.gold_labels()
        reps = ds.embeddings.astype(float)
        # one central anchor per cluster, as density-peak selection would give
        key_rows = []
        for rel in sorted(set(gold)):
            members = np.flatnonzero([g == rel for g in gold])
            center = reps[members].mean(axis=0)
            key_rows.append(int(members[np.argmin(((reps[members] - center) ** 2).sum(axis=1))]))
        keys = make_keys([(row, gold[row]) for row in key_rows])
        out = assign_pseudo_labels(reps, keys)
        part = partition_by_reliability(out, 20, 60)

        def accuracy(rows):
            return np.mean([out[i].label == gold[i] for i in rows])

        acc_h_all.append(accuracy(part.high.tolist()))
        acc_m_all.append(accuracy(part.moderate.tolist()))
        acc_all_all.append(accuracy(range(len(out))))
    assert np.mean(acc_h_all) >= np.mean(acc_m_all) >= np.mean(acc_all_all)
