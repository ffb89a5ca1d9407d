"""Tasks and the evaluator mapping (task, configuration, fidelity) to a result.

Two task kinds exist: synthetic classification datasets evaluated through a
small preprocessing-plus-learner pipeline, and analytic surfaces evaluated by
direct function lookup. Either way the evaluator returns a TrialResult holding
the error estimate and the resource cost of obtaining it.

Fidelity is the fraction of training data used: the rows drawn at fidelity f
are always a prefix of the rows drawn at any higher fidelity under the same
seed, so doubling fidelity strictly extends the data a configuration has seen.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import surfaces
from .pipeline import (
    ColumnImputer,
    DecisionStump,
    KNNClassifier,
    LogisticRegressionGD,
    Standardizer,
    VarianceRankSelector,
    jitter_duplicate,
)
from .seeding import make_rng, split_seed
from .space import (
    Configuration,
    SearchSpace,
    boolean,
    categorical,
    continuous,
    integer,
    require_valid,
)

_HOLDOUT_STREAM = 11
_SUBSAMPLE_STREAM = 12
_AUGMENT_STREAM = 13


@dataclass(frozen=True, eq=False)
class Task:
    """A dataset (features/labels) or an analytic surface, plus its protocol.

    ``simulated_step_cost`` is added to every trial's cost and ``measure_wall``
    controls whether measured wall time is included; declaring a fixed cost
    with measurement off makes run costs fully reproducible.
    """

    id: str
    kind: str  # "dataset" | "analytic"
    features: np.ndarray | None = None
    labels: np.ndarray | None = None
    surface: str | None = None
    generator_seed: int = 0
    holdout: float = 0.3
    protocol_seed: int = 0
    simulated_step_cost: float = 0.0
    measure_wall: bool = True

    def __post_init__(self):
        if self.kind == "dataset":
            if self.features is None or self.labels is None:
                raise ValueError("dataset task needs features and labels")
            if self.features.ndim != 2:
                raise ValueError("features must be a 2-d matrix")
            if len(self.features) != len(self.labels):
                raise ValueError("features and labels must have equal length")
            if self.n_instances < 4:
                raise ValueError("dataset task needs at least 4 instances")
            if self.n_classes < 1:
                raise ValueError("dataset task needs at least one class")
        elif self.kind == "analytic":
            if self.surface not in surfaces.SURFACES:
                raise ValueError(f"unknown surface {self.surface!r}")
        else:
            raise ValueError(f"unknown task kind {self.kind!r}")
        if not 0.0 < self.holdout < 1.0:
            raise ValueError("holdout fraction must be in (0, 1)")

    @property
    def n_instances(self) -> int:
        return 0 if self.features is None else len(self.features)

    @property
    def n_features(self) -> int:
        return 0 if self.features is None else self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return 0 if self.labels is None else len(np.unique(self.labels))

    def space(self) -> SearchSpace:
        """The search space this task is evaluated against."""
        if self.kind == "analytic":
            return surfaces.surface_space(self.surface)
        return pipeline_schema()


@dataclass(frozen=True)
class TrialResult:
    """One step's outcome: the error estimate and what it cost to obtain."""

    config: Configuration
    fidelity: float
    error: float
    cost: float
    adaptive_flag_active: bool
    seed: int


def pipeline_schema() -> SearchSpace:
    """The fixed configuration space for dataset tasks.

    It spans data preparation (imputation, augmentation), feature engineering
    (standardization, variance-rank selection), model selection and each
    model's hyperparameters. The schema never changes between runs, so encoded
    configurations keep a stable dimension.
    """
    return SearchSpace(
        (
            categorical("impute", ("mean", "zero")),
            boolean("standardize"),
            boolean("augment"),
            continuous("var_threshold", 0.0, 0.5),
            categorical("model", ("knn", "stump", "logreg")),
            integer("knn_k", 1, 15),
            continuous("logreg_lr", 0.001, 1.0),
            integer("logreg_epochs", 5, 200),
            boolean("adaptive_lr"),
        )
    )


def generate_blobs(
    n_instances: int,
    n_features: int,
    n_classes: int,
    spread: float,
    missing_rate: float,
    seed: int,
    *,
    id: str | None = None,
    holdout: float = 0.3,
    simulated_step_cost: float = 0.0,
    measure_wall: bool = True,
) -> Task:
    """Gaussian clusters with one uniform centroid in [-1, 1]^d per class.

    Labels are assigned round-robin, points are centroid + spread * standard
    normal noise, and a ``missing_rate`` fraction of cells is replaced by NaN.
    Everything is deterministic in ``seed``.
    """
    if n_instances < 4:
        raise ValueError("n_instances must be >= 4")
    if n_features < 1:
        raise ValueError("n_features must be >= 1")
    if not 1 <= n_classes <= n_instances:
        raise ValueError("need 1 <= n_classes <= n_instances")
    if not 0.0 <= missing_rate < 1.0:
        raise ValueError("missing_rate must be in [0, 1)")
    if spread < 0.0:
        raise ValueError("spread must be >= 0")
    rng = make_rng(seed)
    centroids = rng.uniform(-1.0, 1.0, size=(n_classes, n_features))
    labels = np.arange(n_instances) % n_classes
    features = centroids[labels] + spread * rng.standard_normal((n_instances, n_features))
    n_missing = int(round(missing_rate * n_instances * n_features))
    if n_missing:
        cells = rng.choice(n_instances * n_features, size=n_missing, replace=False)
        features.flat[cells] = np.nan
    return Task(
        id=id or f"blobs-{n_instances}x{n_features}c{n_classes}-s{seed}",
        kind="dataset",
        features=features,
        labels=labels,
        generator_seed=seed,
        holdout=holdout,
        protocol_seed=split_seed(seed, _HOLDOUT_STREAM),
        simulated_step_cost=simulated_step_cost,
        measure_wall=measure_wall,
    )


def analytic_task(
    surface: str,
    *,
    id: str | None = None,
    simulated_step_cost: float = 0.0,
    measure_wall: bool = True,
) -> Task:
    return Task(
        id=id or surface,
        kind="analytic",
        surface=surface,
        simulated_step_cost=simulated_step_cost,
        measure_wall=measure_wall,
    )


def holdout_split(task: Task) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic (train, validation) index split; independent of fidelity."""
    n = task.n_instances
    rng = make_rng(task.protocol_seed)
    perm = rng.permutation(n)
    n_val = min(n - 1, max(1, int(round(task.holdout * n))))
    return perm[n_val:], perm[:n_val]


def training_subset(task: Task, fidelity: float, seed: int) -> np.ndarray:
    """The first ceil(fidelity * n_train) rows of a seed-determined ordering.

    The ordering does not depend on fidelity, so lower-fidelity subsets are
    prefixes of higher-fidelity ones under the same seed.
    """
    train_idx, _ = holdout_split(task)
    order = make_rng(split_seed(seed, _SUBSAMPLE_STREAM)).permutation(len(train_idx))
    n_rows = math.ceil(fidelity * len(train_idx))
    return train_idx[order[:n_rows]]


def _build_model(config: Configuration, seed: int):
    model = config["model"]
    if model == "knn":
        return KNNClassifier(k=int(config["knn_k"]))
    if model == "stump":
        return DecisionStump()
    return LogisticRegressionGD(
        lr=float(config["logreg_lr"]),
        epochs=int(config["logreg_epochs"]),
        adaptive=bool(config["adaptive_lr"]),
        seed=seed,
    )


def _run_pipeline(
    task: Task, config: Configuration, fidelity: float, seed: int, resubstitution: bool
) -> float:
    train_rows = training_subset(task, fidelity, seed)
    _, val_rows = holdout_split(task)
    if resubstitution:
        val_rows = train_rows
    X_tr = task.features[train_rows]
    y_tr = task.labels[train_rows]
    X_val = task.features[val_rows]
    y_val = task.labels[val_rows]

    imputer = ColumnImputer(strategy=config["impute"]).fit(X_tr)
    X_tr = imputer.transform(X_tr)
    X_val = imputer.transform(X_val)
    if config["augment"]:
        X_tr, y_tr = jitter_duplicate(X_tr, y_tr, make_rng(split_seed(seed, _AUGMENT_STREAM)))
    if config["standardize"]:
        standardizer = Standardizer().fit(X_tr)
        X_tr = standardizer.transform(X_tr)
        X_val = standardizer.transform(X_val)
    selector = VarianceRankSelector(threshold=float(config["var_threshold"])).fit(X_tr)
    X_tr = selector.transform(X_tr)
    X_val = selector.transform(X_val)

    model = _build_model(config, seed).fit(X_tr, y_tr)
    predictions = model.predict(X_val)
    return float(np.mean(predictions != y_val))


def evaluate(
    task: Task,
    config: Configuration,
    fidelity: float,
    seed: int,
    *,
    resubstitution: bool = False,
) -> TrialResult:
    """Estimate the error of ``config`` on ``task`` at the given fidelity.

    Dataset tasks run impute -> augment -> standardize -> variance selection ->
    model on a fidelity-sized training subset and report the holdout
    misclassification rate. Analytic tasks report the minimum-shifted surface
    value at the configuration point. Identical inputs give identical errors;
    cost is measured, so it may vary.

    ``resubstitution`` is a test hook that scores the training subset itself
    instead of the holdout rows.
    """
    started = time.perf_counter()
    if not 0.0 < fidelity <= 1.0:
        raise ValueError("fidelity must be in (0, 1]")
    require_valid(task.space(), config)
    if task.kind == "analytic":
        error = surfaces.surface_error(task.surface, config)
        adaptive = False
    else:
        error = _run_pipeline(task, config, fidelity, seed, resubstitution)
        adaptive = bool(config["model"] == "logreg" and config["adaptive_lr"])
    wall = time.perf_counter() - started
    cost = (wall if task.measure_wall else 0.0) + task.simulated_step_cost
    return TrialResult(
        config=dict(config),
        fidelity=float(fidelity),
        error=float(error),
        cost=float(cost),
        adaptive_flag_active=adaptive,
        seed=int(seed),
    )


def save_task(task: Task, path: str | Path) -> None:
    """Write a dataset task as JSON with ``null`` marking missing cells."""
    if task.kind != "dataset":
        raise ValueError("only dataset tasks are serialized; analytic tasks are declared by name")
    features = [
        [None if math.isnan(v) else v for v in row] for row in task.features.tolist()
    ]
    payload = {
        "id": task.id,
        "features": features,
        "labels": [int(v) for v in task.labels],
        "meta": {
            "generator_seed": task.generator_seed,
            "holdout": task.holdout,
            "protocol_seed": task.protocol_seed,
            "simulated_step_cost": task.simulated_step_cost,
            "measure_wall": task.measure_wall,
        },
    }
    Path(path).write_text(json.dumps(payload))


def load_task(path: str | Path) -> Task:
    payload = json.loads(Path(path).read_text())
    features = np.array(
        [[np.nan if v is None else float(v) for v in row] for row in payload["features"]],
        dtype=float,
    )
    meta = payload.get("meta", {})
    return Task(
        id=payload["id"],
        kind="dataset",
        features=features,
        labels=np.asarray(payload["labels"], dtype=int),
        generator_seed=int(meta.get("generator_seed", 0)),
        holdout=float(meta.get("holdout", 0.3)),
        protocol_seed=int(meta.get("protocol_seed", 0)),
        simulated_step_cost=float(meta.get("simulated_step_cost", 0.0)),
        measure_wall=bool(meta.get("measure_wall", True)),
    )
