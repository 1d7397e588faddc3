"""Label sources: gold-label simulator, interactive console, and a blocking queue
backing the annotation HTTP service. Also owns the discovered-relation registry
and the accumulated key-point set."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

from .datasets import Dataset
from .errors import ContractError


@dataclass(frozen=True)
class NeighborInfo:
    instance_id: int
    distance: float
    label: str | None = None


@dataclass(frozen=True)
class LabelRequest:
    instance_id: int
    text: str | None
    labeled_neighbors: list[NeighborInfo] = field(default_factory=list)
    unlabeled_neighbors: list[NeighborInfo] = field(default_factory=list)

    def to_payload(self) -> dict:
        def rows(items):
            return [
                {"id": n.instance_id, "distance": n.distance, "label": n.label}
                for n in items
            ]

        return {
            "id": self.instance_id,
            "text": self.text,
            "labeled_neighbors": rows(self.labeled_neighbors),
            "unlabeled_neighbors": rows(self.unlabeled_neighbors),
            "suggested": [n.label for n in self.labeled_neighbors if n.label],
        }


class RelationSet:
    """Discovered relation names in stable first-seen order."""

    def __init__(self):
        self.names: list[str] = []
        self.first_seen: dict[str, int] = {}

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: str) -> bool:
        return name in self.first_seen

    def add(self, name: str, iteration: int) -> bool:
        if name in self.first_seen:
            return False
        self.names.append(name)
        self.first_seen[name] = iteration
        return True

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def snapshot(self) -> "RelationSet":
        out = RelationSet()
        out.names = list(self.names)
        out.first_seen = dict(self.first_seen)
        return out

    def to_payload(self) -> list[dict]:
        return [{"name": n, "first_seen": self.first_seen[n]} for n in self.names]


def new_relations_this_round(before: RelationSet, after: RelationSet) -> int:
    if not set(before.names) <= set(after.names):
        raise ContractError("relation set shrank between rounds")
    return len(after) - len(before)


@dataclass(frozen=True)
class KeyPoint:
    index: int  # row in the dataset matrix
    instance_id: int
    relation: str
    iteration: int


class KeyPointSet:
    """Actively labeled anchors accumulated across rounds."""

    def __init__(self):
        self.points: list[KeyPoint] = []
        self._rows: set[int] = set()

    def __len__(self) -> int:
        return len(self.points)

    def __contains__(self, row: int) -> bool:
        return row in self._rows

    def add(self, point: KeyPoint) -> None:
        if point.index in self._rows:
            raise ContractError(f"row {point.index} is already a key point")
        self.points.append(point)
        self._rows.add(point.index)

    @property
    def indices(self) -> list[int]:
        return [p.index for p in self.points]

    @property
    def relations(self) -> list[str]:
        return [p.relation for p in self.points]


class GoldOracle:
    """Replays each instance's stored gold label as if a human had answered."""

    def __init__(self, dataset: Dataset):
        self._gold = {
            inst.id: inst.gold_label for inst in dataset.instances
        }

    def label(self, requests: list[LabelRequest]) -> list[str]:
        out = []
        for req in requests:
            gold = self._gold.get(req.instance_id)
            if gold is None:
                raise ContractError(
                    f"gold oracle asked about instance {req.instance_id} with no gold label"
                )
            out.append(gold)
        return out


class ConsoleOracle:
    """Prompts a human on stdin, one request at a time."""

    def __init__(self, relations: RelationSet, input_fn=input, print_fn=print):
        self._relations = relations
        self._input = input_fn
        self._print = print_fn

    def label(self, requests: list[LabelRequest]) -> list[str]:
        out = []
        for req in requests:
            self._print(f"--- instance {req.instance_id} ---")
            if req.text:
                self._print(f"  text: {req.text}")
            for n in req.labeled_neighbors:
                self._print(f"  near labeled #{n.instance_id} ({n.label}), dist {n.distance:.3f}")
            for n in req.unlabeled_neighbors:
                self._print(f"  near unlabeled #{n.instance_id}, dist {n.distance:.3f}")
            if self._relations.names:
                self._print(f"  known relations: {', '.join(self._relations.names)}")
            while True:
                answer = self._input("relation name> ").strip()
                if answer:
                    out.append(answer)
                    break
                self._print("  (name must be non-empty)")
        return out


class PendingLabels(TimeoutError):
    """Queue oracle timed out; the batch stays pending and a retry resumes it."""

    def __init__(self, missing: list[int]):
        super().__init__(f"{len(missing)} labels still pending")
        self.missing = missing


class QueueOracle:
    """Blocking bridge between the engine loop and the annotation service.

    The engine thread calls ``label`` and parks until every request in the
    batch has an answer; the HTTP layer feeds answers in via ``submit``.
    All state changes go through one lock.
    """

    def __init__(self, timeout: float | None = None):
        self._cond = threading.Condition()
        self._pending: dict[int, LabelRequest] = {}
        self._answers: dict[int, str] = {}
        self.timeout = timeout

    def label(self, requests: list[LabelRequest]) -> list[str]:
        with self._cond:
            for req in requests:
                if req.instance_id not in self._answers:
                    self._pending[req.instance_id] = req
            self._cond.notify_all()
            wanted = [req.instance_id for req in requests]

            def batch_done() -> bool:
                return all(i in self._answers for i in wanted)

            if not self._cond.wait_for(batch_done, timeout=self.timeout):
                missing = [i for i in wanted if i not in self._answers]
                raise PendingLabels(missing)
            return [self._answers[i] for i in wanted]

    def submit(self, instance_id: int, relation: str) -> str:
        """Returns 'ok' or 'duplicate'; raises ContractError on bad submissions."""
        relation = relation.strip()
        if not relation:
            raise ContractError("relation name must be non-empty")
        with self._cond:
            if instance_id in self._answers:
                if self._answers[instance_id] == relation:
                    return "duplicate"
                raise ContractError(
                    f"instance {instance_id} already labeled '{self._answers[instance_id]}'"
                )
            if instance_id not in self._pending:
                raise ContractError(f"instance {instance_id} is not awaiting a label")
            self._answers[instance_id] = relation
            del self._pending[instance_id]
            self._cond.notify_all()
            return "ok"

    def pending_view(self) -> list[dict]:
        with self._cond:
            return [req.to_payload() for req in self._pending.values()]


def request_labels(
    oracle, requests: list[LabelRequest], relations: RelationSet, iteration: int
) -> list[str]:
    """Fetch one label per request and fold any new names into the relation set."""
    raw = oracle.label(requests)
    if len(raw) != len(requests):
        raise ContractError("oracle returned the wrong number of labels")
    out = []
    for name in raw:
        name = name.strip()
        if not name:
            raise ContractError("oracle returned an empty relation name")
        relations.add(name, iteration)
        out.append(name)
    return out
