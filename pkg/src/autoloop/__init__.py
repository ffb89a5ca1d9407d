"""autoloop: budgeted multi-strategy pipeline and hyperparameter search.

The package wires four layers together: search spaces over typed
configuration variables, tasks with a from-scratch evaluation pipeline, a
catalog of search strategies behind one propose/observe contract, and a
stage-parallel scheduler that enforces a cost budget, summarizes every run as
an error/cost Pareto report, and persists all results to an append-only
history that warm-starts later tasks.
"""

from .metastore import HistoryStore, MetaFeatures, meta_features, warm_start
from .objective import ParetoPoint, RunReport, aggregate, pareto_front, recommend
from .scheduler import Budget, ResourcePool, run_suite, run_task
from .searchers import SEARCHERS, Searcher, Stage, Step
from .space import Configuration, ParameterSpec, SearchSpace, encode, enumerate_grid, sample, validate
from .tasks import Task, TrialResult, analytic_task, evaluate, generate_blobs, pipeline_schema

__version__ = "0.1.0"

__all__ = [
    "Budget",
    "Configuration",
    "HistoryStore",
    "MetaFeatures",
    "ParameterSpec",
    "ParetoPoint",
    "ResourcePool",
    "RunReport",
    "SEARCHERS",
    "SearchSpace",
    "Searcher",
    "Stage",
    "Step",
    "Task",
    "TrialResult",
    "aggregate",
    "analytic_task",
    "encode",
    "enumerate_grid",
    "evaluate",
    "generate_blobs",
    "meta_features",
    "pareto_front",
    "pipeline_schema",
    "recommend",
    "run_suite",
    "run_task",
    "sample",
    "validate",
    "warm_start",
]
