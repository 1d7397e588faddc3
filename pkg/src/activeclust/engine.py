"""End-to-end discovery loop: encode, pick key points, fetch labels, pseudo-label,
train, score, repeat; plus report emission and run checkpointing."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datasets import Dataset, RunConfig
from .errors import ConfigError
from .geometry import apply_keypoint_repulsion, profile, subsample
from .learner import Learner, LossConfig
from .metrics import MetricsReport, score_run
from .oracles import (
    KeyPoint,
    KeyPointSet,
    LabelRequest,
    NeighborInfo,
    PendingLabels,
    RelationSet,
    new_relations_this_round,
    request_labels,
)
from .pseudo import assign_pseudo_labels, partition_by_reliability
from .selection import BASELINES, StopState, baseline_select, select_key_points, should_stop

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "iteration", "labeled_total", "new_relations",
    "b3_prec", "b3_rec", "b3_f1",
    "v_hom", "v_comp", "v_f1",
    "ari",
    "cls_prec", "cls_rec", "cls_f1",
    "discovered",
]


@dataclass
class RunResult:
    history: list[dict]
    final: MetricsReport | None
    assignments: list[tuple[int, str | None, float]]
    relations: RelationSet
    keys: KeyPointSet
    config: RunConfig
    strategy: str


@dataclass
class RunState:
    iteration: int = 0
    keys: KeyPointSet = field(default_factory=KeyPointSet)
    relations: RelationSet = field(default_factory=RelationSet)
    stop: StopState = field(default_factory=StopState)
    history: list[dict] = field(default_factory=list)
    refine_done: int = 0


def run_loop(
    config: RunConfig,
    ds: Dataset,
    oracle,
    strategy: str = "ours",
    out_dir: str | Path | None = None,
    status_cb=None,
    resume_from: str | Path | None = None,
) -> RunResult:
    """Alternate labeling and representation refinement until converged.

    Labeling halts on budget exhaustion or two consecutive empty-discovery
    rounds; after that the loop keeps refining until the configured number of
    extra iterations ran or the clustering score plateaus. ``resume_from``
    restores a checkpointed run at its last completed iteration.
    """
    config.validate()
    if strategy not in ("ours",) + BASELINES:
        raise ConfigError(f"unknown strategy '{strategy}'")
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    X = ds.embeddings.astype(np.float64)
    n = len(ds)
    gold = ds.gold_labels()
    scored_rows = [i for i, g in enumerate(gold) if g is not None]

    seeds = np.random.SeedSequence(config.seed).spawn(3)
    if resume_from is not None:
        learner = Learner.load(Path(resume_from) / "learner.npz")
        if learner.dim != ds.dim:
            raise ConfigError("checkpoint dimensionality does not match the dataset")
    else:
        learner = Learner(
            dim=ds.dim,
            proj_hidden=config.proj_hidden,
            proj_dim=config.proj_dim,
            low_dim=config.low_dim,
            seed=seeds[0],
        )
        learner.fit_scaler(X)
    sub_rng = np.random.default_rng(seeds[1])
    pick_rng = np.random.default_rng(seeds[2])

    loss_config = LossConfig(
        sigma=config.sigma, lr=config.lr, batch=config.batch,
        pair_samples_per_batch=config.pair_samples_per_batch,
        epochs=config.epochs_per_iter,
        w_rec=config.w_rec, w_ce=config.w_ce, w_bce=config.w_bce,
    )

    state = load_run_state(resume_from) if resume_from is not None else RunState()
    refine_target = max(3, config.refine_iters)
    assignments: list = []

    while True:
        state.iteration += 1
        codes = learner.encode(X).h_low

        labeling_stopped = should_stop(state.stop, config.N_star)
        new_count = 0
        if not labeling_stopped:
            new_count = _labeling_round(
                config, ds, oracle, strategy, state, codes, learner, X,
                sub_rng, pick_rng, out_path,
            )
            if len(state.keys):
                state.stop.consecutive_no_new = 0 if new_count > 0 else state.stop.consecutive_no_new + 1
            state.stop.discovered_count = len(state.relations)

        if len(state.keys):
            assignments = assign_pseudo_labels(codes, state.keys)
            partition = partition_by_reliability(assignments, config.theta_ce, config.theta_bce)
            if new_count > 0:
                learner.reinit_classifier(len(state.relations))
            labels = np.array(
                [state.relations.index_of(a.label) for a in assignments], dtype=np.int64
            )
            high_mask = np.zeros(n, dtype=bool)
            high_mask[partition.high] = True
            mod_mask = np.zeros(n, dtype=bool)
            mod_mask[partition.moderate] = True
            learner.train_iteration(X, labels, high_mask, mod_mask, loss_config)

        report = None
        if assignments and scored_rows:
            pred = [assignments[i].label for i in scored_rows]
            true = [gold[i] for i in scored_rows]
            report = score_run(pred, true, state.relations, iteration=state.iteration)
        state.history.append(_history_row(state, report, new_count))

        if out_path is not None:
            _checkpoint(out_path, state, learner)
        if status_cb is not None:
            status_cb(_status_payload(state, config, labeling_stopped))

        if labeling_stopped:
            state.refine_done += 1
        done_refining = state.refine_done >= refine_target
        plateau = _plateaued(state.history)
        if should_stop(state.stop, config.N_star) and (len(state.keys) == 0 or done_refining or plateau):
            break

    final = None
    if assignments and scored_rows:
        pred = [assignments[i].label for i in scored_rows]
        true = [gold[i] for i in scored_rows]
        final = score_run(pred, true, state.relations, iteration=state.iteration)

    rows = [
        (ds.instances[a.index].id, a.label, a.reliability) for a in assignments
    ] if assignments else [(inst.id, None, 0.0) for inst in ds.instances]

    result = RunResult(
        history=state.history, final=final, assignments=rows,
        relations=state.relations, keys=state.keys, config=config, strategy=strategy,
    )
    if out_path is not None:
        emit_report(result, out_path)
    return result


def _labeling_round(
    config, ds, oracle, strategy, state, codes, learner, X, sub_rng, pick_rng, out_path
) -> int:
    """Run one selection + oracle round; returns the number of new relations."""
    n = codes.shape[0]
    budget_left = config.N_star - state.stop.total_labeled
    b_round = min(config.B, budget_left)
    if b_round < 1:
        return 0

    sub = subsample(n, config.subsample_max, seed=int(sub_rng.integers(2**31)))
    sub = np.unique(np.concatenate([sub, np.array(state.keys.indices, dtype=np.int64)])) \
        if len(state.keys) else sub
    sub_codes = codes[sub]
    key_positions = {int(np.searchsorted(sub, k)) for k in state.keys.indices}

    if strategy == "ours":
        _, prof = profile(sub_codes, config.dc_percentile)
        xi = apply_keypoint_repulsion(prof.xi, sub_codes, sorted(key_positions))
        prof = type(prof)(d_c=prof.d_c, rho=prof.rho, xi=xi)
        round_sel = select_key_points(
            prof, b_round, config.candidate_factor,
            excluded=key_positions, iteration=state.iteration,
        )
        chosen_pos = round_sel.chosen
        if round_sel.truncated:
            logger.warning("iteration %d: candidate pool smaller than B", state.iteration)
    else:
        seed = int(pick_rng.integers(2**31))
        if learner.C == 0:  # cold start: no classifier yet, fall back to random
            dummy = np.full((sub.size, 1), 1.0)
            chosen_pos = baseline_select("random", dummy, None, b_round, seed, key_positions)
        else:
            probs = learner.probabilities(X[sub])
            penult = learner.encode(X[sub]).h_proj if strategy == "gradient" else None
            chosen_pos = baseline_select(strategy, probs, penult, b_round, seed, key_positions)

    chosen = [int(sub[p]) for p in chosen_pos]
    if not chosen:
        return 0

    requests = [_build_request(ds, codes, row, state.keys) for row in chosen]
    before = state.relations.snapshot()
    try:
        names = request_labels(oracle, requests, state.relations, state.iteration)
    except PendingLabels:
        if out_path is not None:
            _checkpoint(out_path, state, learner)
        raise
    for row, name in zip(chosen, names):
        state.keys.add(KeyPoint(
            index=row, instance_id=ds.instances[row].id,
            relation=name, iteration=state.iteration,
        ))
    state.stop.total_labeled += len(chosen)
    return new_relations_this_round(before, state.relations)


def _build_request(ds: Dataset, codes: np.ndarray, row: int, keys: KeyPointSet) -> LabelRequest:
    """Neighbor context: 3 nearest labeled key points and 3 nearest other rows."""
    d = np.sqrt(((codes - codes[row]) ** 2).sum(axis=1))
    labeled = []
    if len(keys):
        key_rows = np.asarray(keys.indices)
        order = np.argsort(d[key_rows], kind="stable")[:3]
        labeled = [
            NeighborInfo(ds.instances[int(key_rows[i])].id, float(d[key_rows[i]]),
                         keys.relations[int(i)])
            for i in order
        ]
    key_set = set(keys.indices) | {row}
    others = [i for i in np.argsort(d, kind="stable") if i not in key_set][:3]
    unlabeled = [NeighborInfo(ds.instances[int(i)].id, float(d[i])) for i in others]
    return LabelRequest(
        instance_id=ds.instances[row].id, text=ds.instances[row].text,
        labeled_neighbors=labeled, unlabeled_neighbors=unlabeled,
    )


def _history_row(state: RunState, report: MetricsReport | None, new_count: int) -> dict:
    row = {
        "iteration": state.iteration,
        "labeled_total": state.stop.total_labeled,
        "new_relations": new_count,
        "discovered": len(state.relations),
    }
    if report is not None:
        row.update(report.to_row())
        row["discovered"] = report.discovered
    return row


def _plateaued(history: list[dict], tol: float = 1e-3) -> bool:
    if len(history) < 2:
        return False
    a, b = history[-2].get("b3_f1"), history[-1].get("b3_f1")
    if a is None or b is None:
        return False
    return abs(b - a) < tol


def _status_payload(state: RunState, config: RunConfig, labeling_stopped: bool) -> dict:
    return {
        "iteration": state.iteration,
        "labeled_total": state.stop.total_labeled,
        "budget": config.N_star,
        "discovered": len(state.relations),
        "labeling_stopped": labeling_stopped,
        "relations": state.relations.to_payload(),
        "history": list(state.history),
    }


def _checkpoint(out_path: Path, state: RunState, learner: Learner) -> None:
    learner.save(out_path / "learner.npz")
    payload = {
        "iteration": state.iteration,
        "refine_done": state.refine_done,
        "stop": {
            "total_labeled": state.stop.total_labeled,
            "consecutive_no_new": state.stop.consecutive_no_new,
            "discovered_count": state.stop.discovered_count,
        },
        "keys": [
            {"index": p.index, "instance_id": p.instance_id,
             "relation": p.relation, "iteration": p.iteration}
            for p in state.keys.points
        ],
        "relations": state.relations.to_payload(),
        "history": state.history,
    }
    (out_path / "run_state.json").write_text(json.dumps(payload, indent=2))


def load_run_state(out_dir: str | Path) -> RunState:
    payload = json.loads((Path(out_dir) / "run_state.json").read_text())
    state = RunState(iteration=payload["iteration"], refine_done=payload["refine_done"])
    state.stop = StopState(**payload["stop"])
    for entry in payload["keys"]:
        state.keys.add(KeyPoint(**entry))
    for entry in payload["relations"]:
        state.relations.add(entry["name"], entry["first_seen"])
    state.history = payload["history"]
    return state


def _fmt(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def emit_report(result: RunResult, out_dir: str | Path) -> dict[str, Path]:
    """Per-iteration CSV, run summary JSON, and the final assignment table."""
    if not result.history:
        raise ConfigError("nothing to report: empty history")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    report_csv = out / "report.csv"
    with open(report_csv, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_COLUMNS)
        for row in result.history:
            writer.writerow([_fmt(row.get(col)) for col in CSV_COLUMNS])

    assignments_csv = out / "assignments.csv"
    with open(assignments_csv, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["id", "label", "reliability"])
        for inst_id, label, rel in result.assignments:
            writer.writerow([inst_id, "" if label is None else label, _fmt(rel)])

    summary_json = out / "summary.json"
    summary = {
        "strategy": result.strategy,
        "iterations": len(result.history),
        "labeled_total": result.history[-1]["labeled_total"],
        "relations": result.relations.to_payload(),
        "final": result.final.to_row() if result.final else None,
        "config": vars(result.config),
    }
    summary_json.write_text(json.dumps(summary, indent=2))
    return {"report": report_csv, "assignments": assignments_csv, "summary": summary_json}


def bench(
    make_dataset,
    strategies: list[str],
    seeds: list[int],
    config: RunConfig,
    oracle_factory,
    out_dir: str | Path | None = None,
) -> dict[str, dict]:
    """Sweep strategies x seeds; returns per-strategy means over the final report."""
    from dataclasses import replace

    rows = []
    summary: dict[str, dict] = {}
    for strategy in strategies:
        finals = []
        for seed in seeds:
            cfg = replace(config, seed=seed)
            ds = make_dataset(seed)
            result = run_loop(cfg, ds, oracle_factory(ds), strategy=strategy)
            if result.final is None:
                raise ConfigError("bench requires gold-labeled datasets")
            finals.append(result.final)
            rows.append({
                "strategy": strategy, "seed": seed,
                "discovered": result.final.discovered,
                "b3_f1": result.final.b3[2], "v_f1": result.final.v[2],
                "ari": result.final.ari, "cls_f1": result.final.cls[2],
            })
        summary[strategy] = {
            "discovered": float(np.mean([f.discovered for f in finals])),
            "b3_f1": float(np.mean([f.b3[2] for f in finals])),
            "v_f1": float(np.mean([f.v[2] for f in finals])),
            "ari": float(np.mean([f.ari for f in finals])),
            "cls_f1": float(np.mean([f.cls[2] for f in finals])),
        }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "bench.csv", "w", newline="") as handle:
            writer = csv.DictWriter(
                handle, fieldnames=["strategy", "seed", "discovered", "b3_f1", "v_f1", "ari", "cls_f1"]
            )
            writer.writeheader()
            for row in rows:
                writer.writerow({k: _fmt(v) for k, v in row.items()})
        (out / "bench_summary.json").write_text(json.dumps(summary, indent=2))
    return summary
