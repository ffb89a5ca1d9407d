"""Stage-parallel execution of evaluation plans under a cost budget.

The loop per task: ask the searcher for a stage, assign every step a resource
slot and a derived seed, evaluate the stage's steps in parallel waves of at
most ``n_slots``, barrier, feed the complete results back to the searcher, and
repeat until the searcher is exhausted or the budget is spent. Admission is
checked before every wave: once cumulative cost reaches the budget no new step
starts, so overshoot is bounded by ``n_slots`` times the largest single-step
cost. The run always ends by summarizing results and appending them to
history, in that order.

Step seeds depend only on (run seed, stage index, step index), which makes
error values identical no matter how many slots execute the run.
"""

from __future__ import annotations

import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

from . import metastore
from .eventlog import (
    HISTORY_APPENDED,
    PLAN_CREATED,
    PLAN_UPDATED,
    RESULTS_SUMMARIZED,
    STEP_EVALUATED,
    EventLogWriter,
)
from .objective import DEFAULT_WEIGHTS, RunReport, summarize
from .searchers import Searcher, Stage, Step
from .seeding import split_seed
from .space import SearchSpace, validate
from .tasks import Task, TrialResult, evaluate

EvaluateFn = Callable[..., TrialResult]


@dataclass(frozen=True)
class ResourcePool:
    """Homogeneous parallel executor slots."""

    n_slots: int = 1

    def __post_init__(self):
        if self.n_slots < 1:
            raise ValueError("n_slots must be >= 1")


class Budget:
    """Cumulative evaluation-cost budget; ``spent`` sums completed step costs."""

    def __init__(self, limit: float):
        if not limit > 0:
            raise ValueError("budget limit must be > 0")
        self.limit = float(limit)
        self.spent = 0.0

    @property
    def exhausted(self) -> bool:
        return self.spent >= self.limit

    def charge(self, cost: float) -> None:
        self.spent += cost


@dataclass
class EvaluationPlan:
    """Stages observed so far plus the stage currently being evaluated."""

    completed_stages: list[tuple[Stage, list[TrialResult]]] = field(default_factory=list)
    pending_stage: Stage | None = None


@dataclass(frozen=True)
class TaskFailure:
    """A task-level abort inside a suite; the suite itself continues."""

    task_id: str
    message: str


class InvalidStepError(ValueError):
    """A searcher proposed a configuration its space rejects."""


def assign_slots(stage: Stage, pool: ResourcePool) -> Stage:
    """Round-robin slot assignment: slot = step index mod n_slots."""
    steps = tuple(
        replace(step, resource_slot=i % pool.n_slots) for i, step in enumerate(stage.steps)
    )
    return replace(stage, steps=steps)


def _prepare_stage(
    stage: Stage, stage_index: int, run_seed: int, pool: ResourcePool, space: SearchSpace
) -> Stage:
    for j, step in enumerate(stage.steps):
        violations = validate(space, step.config)
        if violations:
            raise InvalidStepError(
                f"stage {stage_index} step {j}: invalid configuration: "
                + "; ".join(violations)
            )
    steps = tuple(
        replace(step, step_seed=split_seed(run_seed, stage_index, j))
        for j, step in enumerate(stage.steps)
    )
    return assign_slots(replace(stage, steps=steps), pool)


def _evaluate_step(task: Task, step: Step, evaluate_fn: EvaluateFn) -> TrialResult:
    started = time.perf_counter()
    try:
        return evaluate_fn(task, step.config, step.fidelity, step.step_seed)
    except Exception:
        # a failing step records the worst error with its cost so searchers
        # keep a total order over outcomes
        wall = time.perf_counter() - started
        cost = (wall if task.measure_wall else 0.0) + task.simulated_step_cost
        return TrialResult(
            config=dict(step.config),
            fidelity=step.fidelity,
            error=1.0,
            cost=cost,
            adaptive_flag_active=False,
            seed=step.step_seed,
        )


def _run_stage(
    executor: ThreadPoolExecutor,
    task: Task,
    stage: Stage,
    stage_index: int,
    budget: Budget,
    pool: ResourcePool,
    writer: EventLogWriter,
    evaluate_fn: EvaluateFn,
) -> tuple[list[TrialResult], bool]:
    """Evaluate admitted steps in waves of at most n_slots; barrier per wave.

    Returns (results for admitted steps, whether the whole stage ran).
    """
    results: list[TrialResult] = []
    for wave_start in range(0, len(stage.steps), pool.n_slots):
        if budget.exhausted:
            return results, False
        wave = stage.steps[wave_start : wave_start + pool.n_slots]
        futures = [
            executor.submit(_evaluate_step, task, step, evaluate_fn) for step in wave
        ]
        for offset, future in enumerate(futures):
            result = future.result()
            index = wave_start + offset
            results.append(result)
            budget.charge(result.cost)
            writer.emit(
                STEP_EVALUATED,
                stage=stage_index,
                step=index,
                config=result.config,
                fidelity=result.fidelity,
                error=result.error,
                cost=result.cost,
                slot=stage.steps[index].resource_slot,
            )
    return results, True


def run_task(
    task: Task,
    space: SearchSpace,
    searcher: Searcher,
    budget: Budget,
    pool: ResourcePool,
    run_seed: int,
    *,
    out_dir: str | Path = "runs",
    weights: tuple[float, float] = DEFAULT_WEIGHTS,
    history: metastore.HistoryStore | None = None,
    evaluate_fn: EvaluateFn = evaluate,
    top_k: int = 10,
) -> RunReport:
    """Execute one task's evaluation plan and return its report.

    Artifacts written to ``out_dir``: ``<run_id>.events.jsonl`` (the event
    log), ``<run_id>.report.txt`` and ``<run_id>.pareto.csv``.
    """
    run_id = f"{task.id}_{searcher.name}_s{run_seed}"
    out = Path(out_dir)
    plan = EvaluationPlan()
    all_results: list[TrialResult] = []
    with EventLogWriter(out / f"{run_id}.events.jsonl") as writer:
        writer.emit(
            PLAN_CREATED,
            task_id=task.id,
            run_id=run_id,
            searcher=searcher.name,
            budget=budget.limit,
            workers=pool.n_slots,
            seed=run_seed,
        )
        stage_index = 0
        with ThreadPoolExecutor(max_workers=pool.n_slots) as executor:
            while not budget.exhausted:
                proposed = searcher.propose()
                if proposed is None:
                    break
                stage = _prepare_stage(proposed, stage_index, run_seed, pool, space)
                plan.pending_stage = stage
                stage_results, complete = _run_stage(
                    executor, task, stage, stage_index, budget, pool, writer, evaluate_fn
                )
                all_results.extend(stage_results)
                writer.emit(
                    PLAN_UPDATED,
                    stage=stage_index,
                    label=stage.label,
                    steps=len(stage_results),
                    complete=complete,
                )
                if not complete:
                    # budget ran out mid-stage: admitted results are kept and
                    # logged, but an incomplete stage is never fed back
                    break
                searcher.observe(proposed, stage_results)
                plan.completed_stages.append((stage, stage_results))
                plan.pending_stage = None
                stage_index += 1
        report = summarize(
            all_results,
            task_id=task.id,
            run_id=run_id,
            searcher=searcher.name,
            budget_limit=budget.limit,
            spent=budget.spent,
            n_stages=len(plan.completed_stages) + (plan.pending_stage is not None),
            weights=weights,
            out_dir=out,
            top_k=top_k,
        )
        writer.emit(
            RESULTS_SUMMARIZED,
            run_id=run_id,
            n_configurations=len(report.points),
            front_size=len(report.front_indices),
            spent=budget.spent,
        )
        if history is not None and all_results:
            records = metastore.records_for_results(
                task, metastore.meta_features(task), all_results, run_id
            )
            history.append(records)
            appended = len(records)
        else:
            appended = 0
        writer.emit(HISTORY_APPENDED, run_id=run_id, n_records=appended)
    return report


def run_suite(
    tasks: Sequence[Task],
    space: SearchSpace,
    searcher_factory: Callable[[int], Searcher],
    budget_limit: float,
    pool: ResourcePool,
    seed: int,
    *,
    out_dir: str | Path = "runs",
    weights: tuple[float, float] = DEFAULT_WEIGHTS,
    history: metastore.HistoryStore | None = None,
    warm_tasks: int = 3,
    warm_configs: int = 3,
    evaluate_fn: EvaluateFn = evaluate,
    top_k: int = 10,
) -> list[RunReport | TaskFailure]:
    """Run tasks sequentially, warm-starting each from the history so far.

    Before each task the history is queried for the best configurations of
    similar tasks and the suggestions are offered to the searcher (random and
    smbo use them to seed their first steps, others ignore them). Each task's
    results are appended to history before the next task starts, so later
    tasks can learn from earlier ones. A failing task aborts only itself.
    """
    if not tasks:
        raise ValueError("task list must not be empty")
    outcomes: list[RunReport | TaskFailure] = []
    for index, task in enumerate(tasks):
        task_seed = split_seed(seed, index)
        try:
            searcher = searcher_factory(split_seed(task_seed, 0))
            if history is not None and len(history):
                suggestions = metastore.warm_start(
                    history, metastore.meta_features(task), warm_tasks, warm_configs
                )
                usable = [c for c in suggestions if not validate(space, c)]
                if usable:
                    searcher.warm_start(usable)
            outcomes.append(
                run_task(
                    task,
                    space,
                    searcher,
                    Budget(budget_limit),
                    pool,
                    task_seed,
                    out_dir=out_dir,
                    weights=weights,
                    history=history,
                    evaluate_fn=evaluate_fn,
                    top_k=top_k,
                )
            )
        except Exception:
            outcomes.append(TaskFailure(task_id=task.id, message=traceback.format_exc(limit=3)))
    return outcomes
