"""Cross-task memory: meta-features, a persistent history, and warm starts.

History is an append-only JSON Lines file, one record per evaluated step.
Records are never mutated or reordered, appends are batched into a single
durable write, and the file doubles as the audit trail for what the search has
ever tried. Warm starts recommend the best configurations of the stored tasks
nearest to a target task in meta-feature space.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .space import Configuration
from .tasks import Task

DATASET_META_DIM = 7

# JSON schema for one history line; `embedding` is reserved for future
# learned task representations and is currently never written.
HISTORY_RECORD_SCHEMA = {
    "type": "object",
    "properties": {
        "task_id": {"type": "string"},
        "meta_features": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["dataset", "analytic"]},
                "values": {
                    "type": "array",
                    "items": {"type": "number"},
                    "minItems": DATASET_META_DIM,
                    "maxItems": DATASET_META_DIM,
                },
                "surface": {"type": ["string", "null"]},
            },
            "required": ["kind", "values", "surface"],
            "additionalProperties": False,
        },
        "config": {
            "type": "object",
            "additionalProperties": {"type": ["number", "string", "boolean"]},
        },
        "fidelity": {"type": "number"},
        "error": {"type": "number", "minimum": 0},
        "cost": {"type": "number", "minimum": 0},
        "adaptive_flag_active": {"type": "boolean"},
        "timestamp": {"type": "number"},
        "run_id": {"type": "string"},
        "embedding": {"type": ["array", "null"], "items": {"type": "number"}},
    },
    "required": [
        "task_id",
        "meta_features",
        "config",
        "fidelity",
        "error",
        "cost",
        "adaptive_flag_active",
        "timestamp",
        "run_id",
    ],
    "additionalProperties": False,
}


@dataclass(frozen=True)
class MetaFeatures:
    """A fixed-order task descriptor.

    Dataset tasks use 7 statistics; analytic tasks use a disjoint constant
    vector tagged by surface name, so they only ever match tasks on the same
    surface.
    """

    kind: str
    values: tuple[float, ...]
    surface: str | None = None

    def to_json(self) -> dict:
        return {"kind": self.kind, "values": list(self.values), "surface": self.surface}

    @classmethod
    def from_json(cls, payload: dict) -> "MetaFeatures":
        return cls(
            kind=payload["kind"],
            values=tuple(float(v) for v in payload["values"]),
            surface=payload.get("surface"),
        )


@dataclass(frozen=True)
class HistoryRecord:
    task_id: str
    meta_features: MetaFeatures
    config: Configuration
    fidelity: float
    error: float
    cost: float
    adaptive_flag_active: bool
    timestamp: float
    run_id: str

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "meta_features": self.meta_features.to_json(),
            "config": self.config,
            "fidelity": self.fidelity,
            "error": self.error,
            "cost": self.cost,
            "adaptive_flag_active": self.adaptive_flag_active,
            "timestamp": self.timestamp,
            "run_id": self.run_id,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "HistoryRecord":
        return cls(
            task_id=payload["task_id"],
            meta_features=MetaFeatures.from_json(payload["meta_features"]),
            config=dict(payload["config"]),
            fidelity=float(payload["fidelity"]),
            error=float(payload["error"]),
            cost=float(payload["cost"]),
            adaptive_flag_active=bool(payload["adaptive_flag_active"]),
            timestamp=float(payload["timestamp"]),
            run_id=payload["run_id"],
        )


def class_entropy(labels: np.ndarray) -> float:
    """Shannon entropy of the label distribution, in bits."""
    counts = np.bincount(np.asarray(labels, dtype=int))
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log2(p)).sum())


def meta_features(task: Task) -> MetaFeatures:
    """Deterministic task descriptor; missing cells are excluded from the
    statistics and counted in the missing fraction."""
    if task.kind == "analytic":
        return MetaFeatures(
            kind="analytic", values=(0.0,) * DATASET_META_DIM, surface=task.surface
        )
    X = task.features
    if X is None or X.size == 0:
        raise ValueError("dataset task has no features")
    missing = np.isnan(X)
    with np.errstate(invalid="ignore"):
        col_means = np.nanmean(X, axis=0)
        col_stds = np.nanstd(X, axis=0)
    col_means = np.where(np.isnan(col_means), 0.0, col_means)
    col_stds = np.where(np.isnan(col_stds), 0.0, col_stds)
    values = (
        math.log2(task.n_instances),
        math.log2(task.n_features),
        float(task.n_classes),
        class_entropy(task.labels),
        float(col_means.mean()),
        float(col_stds.mean()),
        float(missing.mean()),
    )
    return MetaFeatures(kind="dataset", values=values)


class HistoryStore:
    """Append-only record store, backed by a JSON Lines file when given a path.

    A single writer appends between stages and tasks; reads are safe from
    anywhere. Each append is one write call followed by a flush and fsync, so
    records of a batch never interleave with anything else and the batch is
    durable on return.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._records: list[HistoryRecord] = []
        if self.path is not None and self.path.exists():
            self._records = self._load(self.path)

    @staticmethod
    def _load(path: Path) -> list[HistoryRecord]:
        records = []
        with path.open("r", encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    records.append(HistoryRecord.from_json(json.loads(line)))
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as err:
                    raise ValueError(f"history line {lineno}: {err}") from None
        return records

    def __len__(self) -> int:
        return len(self._records)

    @property
    def records(self) -> tuple[HistoryRecord, ...]:
        return tuple(self._records)

    def append(self, records: Sequence[HistoryRecord]) -> None:
        records = list(records)
        if not records:
            return
        if self.path is not None:
            blob = "".join(json.dumps(r.to_json()) + "\n" for r in records)
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(blob)
                handle.flush()
                os.fsync(handle.fileno())
        self._records.extend(records)


def records_for_results(task: Task, meta: MetaFeatures, results, run_id: str) -> list[HistoryRecord]:
    """History records for one run's trial results."""
    now = time.time()
    return [
        HistoryRecord(
            task_id=task.id,
            meta_features=meta,
            config=dict(r.config),
            fidelity=r.fidelity,
            error=r.error,
            cost=r.cost,
            adaptive_flag_active=r.adaptive_flag_active,
            timestamp=now,
            run_id=run_id,
        )
        for r in results
    ]


def _distinct_tasks(store: HistoryStore) -> list[tuple[str, MetaFeatures]]:
    seen: dict[str, MetaFeatures] = {}
    for record in store.records:
        if record.task_id not in seen:
            seen[record.task_id] = record.meta_features
    return list(seen.items())


def nearest_tasks(store: HistoryStore, target: MetaFeatures, k_tasks: int) -> list[str]:
    """The k stored tasks nearest to ``target`` in normalized meta-feature
    space; ties break toward the task appearing earlier in the store.

    Only tasks of the target's kind are comparable, and analytic tasks only
    match the same surface. Each dimension is normalized to [0, 1] over the
    store's distinct comparable tasks; constant dimensions contribute 0.
    """
    if k_tasks < 1:
        raise ValueError("k_tasks must be >= 1")
    comparable = [
        (task_id, meta)
        for task_id, meta in _distinct_tasks(store)
        if meta.kind == target.kind
        and (meta.kind != "analytic" or meta.surface == target.surface)
    ]
    if not comparable:
        return []
    matrix = np.array([meta.values for _, meta in comparable], dtype=float)
    lo = matrix.min(axis=0)
    hi = matrix.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    constant = hi <= lo
    normalized = np.where(constant, 0.0, (matrix - lo) / span)
    target_vec = np.where(constant, 0.0, (np.asarray(target.values) - lo) / span)
    distances = np.linalg.norm(normalized - target_vec, axis=1)
    order = sorted(range(len(comparable)), key=lambda i: (distances[i], i))
    return [comparable[i][0] for i in order[:k_tasks]]


def warm_start(
    store: HistoryStore, target: MetaFeatures, k_tasks: int, m_configs: int
) -> list[Configuration]:
    """Best distinct configurations from the tasks nearest to ``target``.

    Candidates are ranked by error, then cost, then store order; at most
    ``m_configs`` distinct configurations are returned. An empty store yields
    an empty list.
    """
    if m_configs < 1:
        raise ValueError("m_configs must be >= 1")
    chosen = set(nearest_tasks(store, target, k_tasks))
    if not chosen:
        return []
    pool = [
        (record.error, record.cost, index, record.config)
        for index, record in enumerate(store.records)
        if record.task_id in chosen
    ]
    pool.sort(key=lambda item: item[:3])
    picked: list[Configuration] = []
    seen: set[str] = set()
    for _, _, _, config in pool:
        key = json.dumps(config, sort_keys=True)
        if key in seen:
            continue
        seen.add(key)
        picked.append(dict(config))
        if len(picked) == m_configs:
            break
    return picked
