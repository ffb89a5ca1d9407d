"""Per-configuration objectives, Pareto selection and result summarizing.

Every evaluated configuration collapses to one point with two objectives: the
best error seen at its highest evaluated fidelity, and the total cost spent on
it across all fidelities. Selection reports the non-dominated front and a
weighted scalarized recommendation, and always renders the full front so the
trade-off choice stays auditable.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import eventlog
from .space import Configuration
from .tasks import TrialResult

DEFAULT_WEIGHTS = (0.8, 0.2)


@dataclass(frozen=True)
class ParetoPoint:
    config: Configuration
    best_error: float
    total_cost: float
    highest_fidelity: float


@dataclass(frozen=True)
class RunReport:
    task_id: str
    run_id: str
    searcher: str
    points: tuple[ParetoPoint, ...]
    front_indices: tuple[int, ...]
    recommended_index: int
    weights: tuple[float, float]
    budget_limit: float
    spent: float
    n_stages: int
    n_steps: int
    ranking: tuple[int, ...]  # top-k point indices by (error, cost)

    @property
    def recommended(self) -> ParetoPoint:
        return self.points[self.recommended_index]


def config_key(config: Configuration) -> str:
    return json.dumps(config, sort_keys=True)


def aggregate(results: Sequence[TrialResult]) -> list[ParetoPoint]:
    """Collapse trial results into one point per distinct configuration.

    best_error is the lowest error among results at the maximum fidelity seen
    for that configuration; total_cost sums every evaluation of it.
    """
    order: list[str] = []
    groups: dict[str, list[TrialResult]] = {}
    for result in results:
        key = config_key(result.config)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(result)
    points = []
    for key in order:
        group = groups[key]
        top_fidelity = max(r.fidelity for r in group)
        best_error = min(r.error for r in group if r.fidelity == top_fidelity)
        points.append(
            ParetoPoint(
                config=dict(group[0].config),
                best_error=float(best_error),
                total_cost=float(sum(r.cost for r in group)),
                highest_fidelity=float(top_fidelity),
            )
        )
    return points


def pareto_mask(points: Sequence[ParetoPoint]) -> list[bool]:
    """Non-domination flags computed by an error-sorted sweep.

    A point is dominated when another point is no worse on both objectives and
    strictly better on at least one; exact duplicates stay on the front
    together.
    """
    n = len(points)
    order = sorted(range(n), key=lambda i: (points[i].best_error, points[i].total_cost))
    mask = [False] * n
    best_cost_before = float("inf")  # min cost among strictly smaller errors
    i = 0
    while i < n:
        j = i
        error = points[order[i]].best_error
        group_min_cost = min(
            points[order[k]].total_cost
            for k in range(i, n)
            if points[order[k]].best_error == error
        )
        while j < n and points[order[j]].best_error == error:
            cost = points[order[j]].total_cost
            mask[order[j]] = cost < best_cost_before and cost == group_min_cost
            j += 1
        best_cost_before = min(best_cost_before, group_min_cost)
        i = j
    return mask


def pareto_front(points: Sequence[ParetoPoint]) -> list[ParetoPoint]:
    mask = pareto_mask(points)
    return [p for p, keep in zip(points, mask) if keep]


def _normalize(values: list[float]) -> list[float]:
    lo, hi = min(values), max(values)
    if hi == lo:
        return [0.0] * len(values)
    return [(v - lo) / (hi - lo) for v in values]


def recommend_index(front: Sequence[ParetoPoint], w_error: float, w_cost: float) -> int:
    """Index of the front member minimizing the weighted normalized objectives.

    Both objectives are min-max normalized over the front (a constant
    objective contributes 0). Ties go to the lower error, then lower cost,
    then the earlier front index.
    """
    if not front:
        raise ValueError("front must not be empty")
    if w_error < 0 or w_cost < 0:
        raise ValueError("weights must be non-negative")
    if w_error + w_cost <= 0:
        raise ValueError("weights must not both be zero")
    errors = _normalize([p.best_error for p in front])
    costs = _normalize([p.total_cost for p in front])
    scores = [w_error * e + w_cost * c for e, c in zip(errors, costs)]
    return min(
        range(len(front)),
        key=lambda i: (scores[i], front[i].best_error, front[i].total_cost, i),
    )


def recommend(front: Sequence[ParetoPoint], w_error: float, w_cost: float) -> ParetoPoint:
    return front[recommend_index(front, w_error, w_cost)]


def summarize(
    results: Sequence[TrialResult],
    *,
    task_id: str,
    run_id: str,
    searcher: str,
    budget_limit: float,
    spent: float,
    n_stages: int,
    weights: tuple[float, float] = DEFAULT_WEIGHTS,
    out_dir: str | Path = ".",
    top_k: int = 10,
) -> RunReport:
    """Build the run report and render its text and CSV artifacts."""
    points = aggregate(results)
    mask = pareto_mask(points)
    front_indices = tuple(i for i, keep in enumerate(mask) if keep)
    front = [points[i] for i in front_indices]
    recommended_index = front_indices[recommend_index(front, *weights)]
    ranking = tuple(
        sorted(
            range(len(points)),
            key=lambda i: (points[i].best_error, points[i].total_cost, i),
        )[:top_k]
    )
    report = RunReport(
        task_id=task_id,
        run_id=run_id,
        searcher=searcher,
        points=tuple(points),
        front_indices=front_indices,
        recommended_index=recommended_index,
        weights=(float(weights[0]), float(weights[1])),
        budget_limit=float(budget_limit),
        spent=float(spent),
        n_stages=int(n_stages),
        n_steps=len(results),
        ranking=ranking,
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(report, out / f"{run_id}.pareto.csv", mask)
    _write_text(report, out / f"{run_id}.report.txt")
    return report


def _write_csv(report: RunReport, path: Path, mask: list[bool]) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["config_json", "best_error", "total_cost", "highest_fidelity", "on_front"]
        )
        for point, on_front in zip(report.points, mask):
            writer.writerow(
                [
                    config_key(point.config),
                    repr(point.best_error),
                    repr(point.total_cost),
                    repr(point.highest_fidelity),
                    1 if on_front else 0,
                ]
            )


def _write_text(report: RunReport, path: Path) -> None:
    lines = [
        f"task {report.task_id} run {report.run_id} searcher {report.searcher}",
        f"budget: spent {report.spent:.6f} of {report.budget_limit:.6f}",
        f"stages: {report.n_stages}  steps: {report.n_steps}  "
        f"configurations: {len(report.points)}  front size: {len(report.front_indices)}",
        f"weights: error {report.weights[0]:g}, cost {report.weights[1]:g}",
        f"recommended: {config_key(report.recommended.config)}",
        f"  error {report.recommended.best_error:.6f}  cost "
        f"{report.recommended.total_cost:.6f}  fidelity {report.recommended.highest_fidelity:g}",
        "",
        f"top {len(report.ranking)} configurations by error:",
    ]
    on_front = set(report.front_indices)
    for rank, idx in enumerate(report.ranking, start=1):
        point = report.points[idx]
        marker = "*" if idx in on_front else " "
        lines.append(
            f"{rank:3d}{marker} error {point.best_error:.6f}  cost {point.total_cost:.6f}  "
            f"fidelity {point.highest_fidelity:g}  {config_key(point.config)}"
        )
    lines.append("")
    lines.append("* = on the error/cost Pareto front")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def results_from_events(events: list[dict]) -> list[TrialResult]:
    """Rebuild trial results from step lines of a parsed event log."""
    results = []
    for record in eventlog.step_events(events):
        config = record["config"]
        results.append(
            TrialResult(
                config=config,
                fidelity=float(record["fidelity"]),
                error=float(record["error"]),
                cost=float(record["cost"]),
                adaptive_flag_active=bool(
                    config.get("model") == "logreg" and config.get("adaptive_lr")
                ),
                seed=0,
            )
        )
    return results


def summarize_log(
    log_path: str | Path,
    *,
    weights: tuple[float, float] = DEFAULT_WEIGHTS,
    out_dir: str | Path = ".",
    top_k: int = 10,
) -> RunReport:
    """Regenerate report artifacts from an existing event log."""
    events = eventlog.read_events(log_path)
    created = next(e for e in events if e["event"] == eventlog.PLAN_CREATED)
    results = results_from_events(events)
    stages = {e["stage"] for e in eventlog.step_events(events)}
    return summarize(
        results,
        task_id=created.get("task_id", "unknown"),
        run_id=created.get("run_id", Path(log_path).stem.replace(".events", "")),
        searcher=created.get("searcher", "unknown"),
        budget_limit=float(created.get("budget", 0.0)),
        spent=float(sum(r.cost for r in results)),
        n_stages=len(stages),
        weights=weights,
        out_dir=out_dir,
        top_k=top_k,
    )
