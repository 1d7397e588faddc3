import threading
import time

import pytest
from fastapi.testclient import TestClient

from activeclust.datasets import RunConfig, SynthSpec, generate_synthetic
from activeclust.engine import run_loop
from activeclust.oracles import QueueOracle
from activeclust.server import AnnotationSession, create_app


def tiny_dataset(seed=0):
    spec = SynthSpec(num_clusters=3, head_size=12, tail_decay=0.5, dim=4,
                     cluster_spread=0.3, center_spread=6.0, seed=seed)
    return generate_synthetic(spec)


def start_session(config, ds, strategy="ours"):
    queue = QueueOracle()
    session = AnnotationSession(queue, config.N_star, strategy, ds.name)
    holder = {}

    def work():
        try:
            holder["result"] = run_loop(config, ds, queue, strategy=strategy,
                                        status_cb=session.update)
        finally:
            session.done = True

    thread = threading.Thread(target=work, daemon=True)
    thread.start()
    return queue, session, thread, holder


def wait_for(predicate, timeout=10.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        if predicate():
            return True
        time.sleep(0.01)
    return False


@pytest.fixture
def live():
    config = RunConfig(B=4, N_star=4, theta_ce=20, theta_bce=80, lr=1e-3, batch=16,
                       low_dim=4, epochs_per_iter=1, proj_dim=16, proj_hidden=16,
                       refine_iters=3, seed=1).validate()
    ds = tiny_dataset()
    queue, session, thread, holder = start_session(config, ds)
    client = TestClient(create_app(session))
    assert wait_for(lambda: len(queue.pending_view()) == 4)
    yield client, queue, session, thread, holder
    # drain anything left so the worker thread can exit
    for card in queue.pending_view():
        queue.submit(card["id"], "leftover")
    thread.join(timeout=10)


def test_label_flow_round_trip(live):
    client, queue, session, thread, holder = live

    pending = client.get("/api/pending").json()["pending"]
    assert len(pending) == 4
    card = pending[0]
    assert "id" in card and "suggested" in card

    ack = client.post("/api/label", json={"id": card["id"], "relation": "made_up"})
    assert ack.status_code == 200
    assert ack.json()["status"] == "ok"

    remaining = client.get("/api/pending").json()["pending"]
    assert card["id"] not in {c["id"] for c in remaining}

    names = {r["name"] for r in client.get("/api/relations").json()["relations"]}
    assert "made_up" in names

    for other in remaining:
        assert client.post(
            "/api/label", json={"id": other["id"], "relation": f"rel_{other['id'] % 2}"}
        ).status_code == 200

    # queue drained: the engine loop unblocks and finishes the run
    assert wait_for(lambda: session.done)
    thread.join(timeout=10)
    assert holder["result"] is not None
    assert "made_up" in holder["result"].relations.names


def test_duplicate_submission_is_idempotent(live):
    client, queue, *_ = live
    card = client.get("/api/pending").json()["pending"][0]
    first = client.post("/api/label", json={"id": card["id"], "relation": "again"})
    second = client.post("/api/label", json={"id": card["id"], "relation": "again"})
    assert first.status_code == 200
    assert second.status_code == 200
    assert second.json()["status"] == "duplicate"


def test_conflicting_or_unknown_submissions_rejected(live):
    client, queue, *_ = live
    card = client.get("/api/pending").json()["pending"][0]
    client.post("/api/label", json={"id": card["id"], "relation": "first"})
    conflict = client.post("/api/label", json={"id": card["id"], "relation": "second"})
    assert conflict.status_code == 409
    assert "error" in conflict.json()

    unknown = client.post("/api/label", json={"id": 10_000, "relation": "x"})
    assert unknown.status_code == 409


def test_malformed_bodies_rejected(live):
    client, *_ = live
    assert client.post("/api/label", content=b"not json",
                       headers={"content-type": "application/json"}).status_code == 400
    assert client.post("/api/label", json={"relation": "x"}).status_code == 400
    assert client.post("/api/label", json={"id": "abc", "relation": "x"}).status_code == 400


def test_session_and_metrics_views(live):
    client, queue, session, thread, holder = live
    status = client.get("/api/session").json()
    assert status["budget"] == 4
    assert status["pending"] == 4
    assert status["done"] is False

    for card in client.get("/api/pending").json()["pending"]:
        client.post("/api/label", json={"id": card["id"], "relation": "only_one"})
    assert wait_for(lambda: session.done)

    history = client.get("/api/metrics").json()["history"]
    assert len(history) >= 1
    assert history[-1]["labeled_total"] == 4
    final = client.get("/api/session").json()
    assert final["done"] is True
