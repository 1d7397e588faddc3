"""Embedded instance pools: file loading, synthetic generation, run configuration.

Gold labels ride along for the simulated oracle and for scoring only; no other
component may read them.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericError, ParseError, ShapeError

BINARY_MAGIC = b"EMBD"
_HEADER = struct.Struct("<4sII4x")  # magic, N, dim, 4 reserved bytes


@dataclass(frozen=True)
class Instance:
    """One embedded instance; ``gold_label`` exists only for oracle simulation."""

    id: int
    embedding: np.ndarray
    text: str | None = None
    gold_label: str | None = None


class Dataset:
    """Immutable ordered pool of instances with a common embedding dimension."""

    def __init__(self, instances: list[Instance], name: str = "dataset"):
        if not instances:
            raise ConfigError("dataset must contain at least one instance")
        self.name = name
        self.instances = list(instances)
        self.dim = int(self.instances[0].embedding.shape[0])
        ids = set()
        for inst in self.instances:
            if inst.embedding.shape != (self.dim,):
                raise ShapeError(
                    f"instance {inst.id}: embedding length {inst.embedding.shape[0]} != dim {self.dim}"
                )
            if inst.id in ids:
                raise ConfigError(f"duplicate instance id {inst.id}")
            ids.add(inst.id)
        matrix = np.stack([inst.embedding for inst in self.instances]).astype(np.float32)
        if not np.isfinite(matrix).all():
            raise NumericError("dataset contains non-finite embedding values")
        matrix.setflags(write=False)
        self._matrix = matrix

    def __len__(self) -> int:
        return len(self.instances)

    @property
    def embeddings(self) -> np.ndarray:
        """N x dim float32 matrix, row order matching ``instances``."""
        return self._matrix

    @property
    def ids(self) -> list[int]:
        return [inst.id for inst in self.instances]

    def gold_labels(self) -> list[str | None]:
        """Oracle/metrics use only; everything else must stay blind to these."""
        return [inst.gold_label for inst in self.instances]


@dataclass(frozen=True)
class SynthSpec:
    """Long-tailed Gaussian mixture: cluster c holds floor(head_size / (tail_decay*c + 1)) points."""

    num_clusters: int
    head_size: int
    tail_decay: float
    dim: int
    cluster_spread: float
    center_spread: float
    seed: int

    def sizes(self) -> list[int]:
        out = [int(math.floor(self.head_size / (self.tail_decay * c + 1.0)))
               for c in range(self.num_clusters)]
        if any(s < 1 for s in out):
            raise ConfigError("cluster size fell below 1; raise head_size or lower tail_decay")
        return out


@dataclass
class RunConfig:
    """Knobs for one discovery run; defaults follow the package's tuned baselines."""

    B: int = 20
    N_star: int = 80
    dc_percentile: float = 40.0
    candidate_factor: float = 1.2
    theta_ce: float = 20.0
    theta_bce: float = 80.0
    sigma: float = 2.0
    lr: float = 1e-4
    batch: int = 100
    low_dim: int = 32
    epochs_per_iter: int = 5
    seed: int = 0
    # secondary knobs, all overridable
    proj_dim: int = 256
    proj_hidden: int = 256
    pair_samples_per_batch: int = 64
    refine_iters: int = 3
    subsample_max: int = 2000
    w_rec: float = 1.0
    w_ce: float = 1.0
    w_bce: float = 1.0

    def validate(self) -> "RunConfig":
        if not (0 < self.theta_ce <= self.theta_bce <= 100):
            raise ConfigError("need 0 < theta_ce <= theta_bce <= 100")
        if self.B > self.N_star and self.N_star > 0:
            raise ConfigError("B must not exceed N_star")
        if self.candidate_factor < 1:
            raise ConfigError("candidate_factor must be >= 1")
        if self.sigma <= 0 or self.lr <= 0:
            raise ConfigError("sigma and lr must be positive")
        if not (0 < self.dc_percentile <= 100):
            raise ConfigError("dc_percentile must be in (0, 100]")
        return self

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "RunConfig":
        """Flat ``key = value`` text file; later CLI flags may override."""
        values: dict = {}
        known = {f.name: f.type for f in fields(cls)}
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in known:
                raise ParseError(f"{path}:{lineno}: unknown config key '{key}'")
            current = getattr(cls(), key)
            values[key] = type(current)(float(val)) if isinstance(current, (int, float)) else val
        values.update(overrides)
        return cls(**values).validate()


def generate_synthetic(spec: SynthSpec) -> Dataset:
    """Seeded mixture with one gold-labeled cluster per relation name."""
    sizes = spec.sizes()
    rng = np.random.default_rng(spec.seed)
    centers = rng.normal(0.0, spec.center_spread, size=(spec.num_clusters, spec.dim))
    instances: list[Instance] = []
    next_id = 0
    for c, size in enumerate(sizes):
        points = centers[c] + rng.normal(0.0, spec.cluster_spread, size=(size, spec.dim))
        name = f"rel{c:02d}"
        for row in points.astype(np.float32):
            instances.append(Instance(id=next_id, embedding=row, gold_label=name))
            next_id += 1
    return Dataset(instances, name=f"synth-k{spec.num_clusters}-seed{spec.seed}")


def split_validation(ds: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded disjoint split; the held-out part has round(fraction * N) instances."""
    if not (0 < fraction < 1):
        raise ConfigError("fraction must be in (0, 1)")
    n_val = int(round(fraction * len(ds)))
    order = np.random.default_rng(seed).permutation(len(ds))
    val_idx = set(order[:n_val].tolist())
    train = [inst for i, inst in enumerate(ds.instances) if i not in val_idx]
    val = [inst for i, inst in enumerate(ds.instances) if i in val_idx]
    return Dataset(train, name=f"{ds.name}-train"), Dataset(val, name=f"{ds.name}-val")


def load_dataset(path: str | Path, format: str = "jsonl", name: str | None = None) -> Dataset:
    path = Path(path)
    if format == "jsonl":
        ds = _load_jsonl(path)
    elif format == "binary":
        ds = _load_binary(path)
    else:
        raise ConfigError(f"unknown dataset format '{format}'")
    if name is not None:
        ds.name = name
    return ds


def save_dataset(ds: Dataset, path: str | Path, format: str = "jsonl") -> None:
    path = Path(path)
    if format == "jsonl":
        _save_jsonl(ds, path)
    elif format == "binary":
        _save_binary(ds, path)
    else:
        raise ConfigError(f"unknown dataset format '{format}'")


def _load_jsonl(path: Path) -> Dataset:
    instances: list[Instance] = []
    dim: int | None = None
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            try:
                emb = np.asarray(record["embedding"], dtype=np.float32)
                inst = Instance(
                    id=int(record["id"]),
                    embedding=emb,
                    text=record.get("text"),
                    gold_label=record.get("gold"),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: bad record ({exc})") from exc
            if emb.ndim != 1:
                raise ShapeError(f"{path}:{lineno}: embedding must be a flat list")
            if dim is None:
                dim = emb.shape[0]
            elif emb.shape[0] != dim:
                raise ShapeError(
                    f"{path}:{lineno}: embedding length {emb.shape[0]} != dim {dim}"
                )
            instances.append(inst)
    if not instances:
        raise ParseError(f"{path}: no records")
    return Dataset(instances, name=path.stem)


def _save_jsonl(ds: Dataset, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for inst in ds.instances:
            record: dict = {"id": inst.id, "embedding": [float(v) for v in inst.embedding]}
            if inst.text is not None:
                record["text"] = inst.text
            if inst.gold_label is not None:
                record["gold"] = inst.gold_label
            handle.write(json.dumps(record) + "\n")


def _label_sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".labels")


def _load_binary(path: Path) -> Dataset:
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        raise ParseError(f"{path}: truncated header")
    magic, n, dim = _HEADER.unpack_from(blob)
    if magic != BINARY_MAGIC:
        raise ParseError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 4 * n * dim
    if len(blob) != expected:
        raise ParseError(f"{path}: expected {expected} bytes, found {len(blob)}")
    matrix = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size).reshape(n, dim)
    labels: list[str | None] = [None] * n
    sidecar = _label_sidecar(path)
    if sidecar.exists():
        lines = sidecar.read_text(encoding="utf-8").splitlines()
        if len(lines) != n:
            raise ParseError(f"{sidecar}: {len(lines)} labels for {n} rows")
        labels = [None if line == "-" else line for line in lines]
    instances = [
        Instance(id=i, embedding=matrix[i].copy(), gold_label=labels[i]) for i in range(n)
    ]
    return Dataset(instances, name=path.stem)


def _save_binary(ds: Dataset, path: Path) -> None:
    with open(path, "wb") as handle:
        handle.write(_HEADER.pack(BINARY_MAGIC, len(ds), ds.dim))
        handle.write(np.ascontiguousarray(ds.embeddings, dtype="<f4").tobytes())
    lines = ["-" if g is None else g for g in ds.gold_labels()]
    _label_sidecar(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_synth_arg(arg: str) -> SynthSpec:
    """Parse ``synth:K=40,head=70,decay=0.5,dim=16,spread=1.0,centers=6.0,seed=0``."""
    body = arg.split(":", 1)[1] if arg.startswith("synth:") else arg
    defaults = dict(K=10, head=50, decay=0.5, dim=16, spread=1.0, centers=6.0, seed=0)
    for part in filter(None, body.split(",")):
        if "=" not in part:
            raise ConfigError(f"bad synth field '{part}'")
        key, _, val = part.partition("=")
        if key not in defaults:
            raise ConfigError(f"unknown synth field '{key}'")
        defaults[key] = float(val)
    return SynthSpec(
        num_clusters=int(defaults["K"]),
        head_size=int(defaults["head"]),
        tail_decay=float(defaults["decay"]),
        dim=int(defaults["dim"]),
        cluster_spread=float(defaults["spread"]),
        center_spread=float(defaults["centers"]),
        seed=int(defaults["seed"]),
    )


def with_seed(config: RunConfig, seed: int) -> RunConfig:
    return replace(config, seed=seed)
