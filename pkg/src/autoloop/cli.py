"""Command-line driver binding JSON run configurations to suite executions,
report regeneration, and history queries.

Exit codes are a stable scripting contract: 0 success, 1 runtime failure,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from .eventlog import EventLogError
from .metastore import HistoryStore, meta_features, nearest_tasks, warm_start
from .objective import DEFAULT_WEIGHTS, summarize_log
from .scheduler import ResourcePool, TaskFailure, run_suite
from .searchers import SEARCHERS
from .space import ParameterSpec, SearchSpace, SpaceError
from .surfaces import surface_space
from .tasks import Task, analytic_task, generate_blobs, load_task, pipeline_schema

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

DEFAULT_HISTORY = "history.jsonl"
HISTORY_ENV_VAR = "AUTOLOOP_HISTORY"


class ConfigError(ValueError):
    """A run configuration problem; the message names the offending key."""


def build_task(spec, index: int = 0) -> Task:
    where = f"tasks[{index}]"
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected an object")
    kind = spec.get("type")
    cost_fields = {
        "simulated_step_cost": float(spec.get("simulated_step_cost", 0.0)),
        "measure_wall": bool(spec.get("measure_wall", True)),
    }
    try:
        if kind == "blobs":
            return generate_blobs(
                n_instances=int(spec["n_instances"]),
                n_features=int(spec["n_features"]),
                n_classes=int(spec["n_classes"]),
                spread=float(spec.get("spread", 0.3)),
                missing_rate=float(spec.get("missing_rate", 0.0)),
                seed=int(spec["seed"]),
                id=spec.get("id"),
                holdout=float(spec.get("holdout", 0.3)),
                **cost_fields,
            )
        if kind == "dataset":
            path = Path(spec["path"])
            if not path.exists():
                raise ConfigError(f"{where}.path: file not found: {path}")
            return dataclasses.replace(load_task(path), **cost_fields)
        if kind == "analytic":
            return analytic_task(spec["surface"], id=spec.get("id"), **cost_fields)
    except ConfigError:
        raise
    except KeyError as err:
        raise ConfigError(f"{where}: missing key {err.args[0]!r}") from None
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{where}: {err}") from None
    raise ConfigError(f"{where}.type: expected blobs, dataset or analytic, got {kind!r}")


def build_space(space_cfg, tasks: list[Task]) -> SearchSpace:
    if space_cfg in (None, "auto"):
        kinds = {t.kind for t in tasks}
        if kinds == {"dataset"}:
            return pipeline_schema()
        if kinds == {"analytic"}:
            surfaces = {t.surface for t in tasks}
            if len(surfaces) == 1:
                return surface_space(next(iter(surfaces)))
            raise ConfigError("space: tasks use different surfaces; declare a space")
        raise ConfigError("space: mixed task kinds; declare a space explicitly")
    if space_cfg == "pipeline_schema":
        return pipeline_schema()
    if isinstance(space_cfg, list):
        try:
            params = tuple(
                ParameterSpec(
                    name=p["name"],
                    kind=p["kind"],
                    lo=p.get("lo"),
                    hi=p.get("hi"),
                    choices=tuple(p["choices"]) if "choices" in p else None,
                )
                for p in space_cfg
            )
            return SearchSpace(params)
        except (KeyError, TypeError) as err:
            raise ConfigError(f"space: malformed parameter entry ({err})") from None
        except SpaceError as err:
            raise ConfigError(f"space: {err}") from None
    raise ConfigError("space: expected 'pipeline_schema', 'auto', or a parameter list")


def build_searcher_factory(space: SearchSpace, searcher_cfg):
    if not isinstance(searcher_cfg, dict) or "name" not in searcher_cfg:
        raise ConfigError("searcher: expected an object with a 'name'")
    name = searcher_cfg["name"]
    if name not in SEARCHERS:
        raise ConfigError(f"searcher.name: unknown searcher {name!r}")
    cls = SEARCHERS[name]
    params = searcher_cfg.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("searcher.params: expected an object")

    def factory(seed: int):
        return cls(space, seed=seed, **params)

    try:
        factory(0)  # surface bad params as a config error before running
    except (TypeError, ValueError) as err:
        raise ConfigError(f"searcher.params: {err}") from None
    return factory


def parse_weights(weights_cfg) -> tuple[float, float]:
    if weights_cfg is None:
        return DEFAULT_WEIGHTS
    try:
        w_error = float(weights_cfg["w_error"])
        w_cost = float(weights_cfg["w_cost"])
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"weights: expected w_error and w_cost numbers ({err})") from None
    check_weights(w_error, w_cost)
    return (w_error, w_cost)


def check_weights(w_error: float, w_cost: float) -> None:
    if w_error < 0 or w_cost < 0:
        raise ConfigError("weights: must be non-negative")
    if w_error + w_cost <= 0:
        raise ConfigError("weights must not both be zero")


def _resolve_history(flag_value, cfg_value=None) -> str:
    return (
        flag_value
        or cfg_value
        or os.environ.get(HISTORY_ENV_VAR)
        or DEFAULT_HISTORY
    )


def cmd_run(args) -> int:
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as err:
        print(f"config: {err}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as err:
        print(f"config: not valid JSON ({err})", file=sys.stderr)
        return EXIT_USAGE

    try:
        task_specs = cfg.get("tasks")
        if not isinstance(task_specs, list) or not task_specs:
            raise ConfigError("tasks: expected a non-empty list")
        tasks = [build_task(spec, i) for i, spec in enumerate(task_specs)]
        space = build_space(cfg.get("space", "auto"), tasks)
        factory = build_searcher_factory(space, cfg.get("searcher"))
        weights = parse_weights(cfg.get("weights"))
        budget = cfg.get("budget_seconds")
        if not isinstance(budget, (int, float)) or budget <= 0:
            raise ConfigError("budget_seconds: expected a positive number")
        workers = args.workers if args.workers is not None else cfg.get("workers", 1)
        if not isinstance(workers, int) or workers < 1:
            raise ConfigError("workers: expected a whole number >= 1")
        seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    except ConfigError as err:
        print(str(err), file=sys.stderr)
        return EXIT_USAGE

    history = HistoryStore(_resolve_history(args.history, cfg.get("history")))
    out_dir = args.out or cfg.get("out_dir", "runs")
    outcomes = run_suite(
        tasks,
        space,
        factory,
        float(budget),
        ResourcePool(workers),
        seed,
        out_dir=out_dir,
        weights=weights,
        history=history,
    )
    failed = False
    for outcome in outcomes:
        if isinstance(outcome, TaskFailure):
            failed = True
            print(f"task {outcome.task_id}: FAILED\n{outcome.message}", file=sys.stderr)
        else:
            rec = outcome.recommended
            print(
                f"task {outcome.task_id}: {outcome.n_steps} steps, "
                f"recommended error {rec.best_error:.6f} cost {rec.total_cost:.6f} "
                f"-> {out_dir}/{outcome.run_id}.report.txt"
            )
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_report(args) -> int:
    try:
        check_weights(args.w_error, args.w_cost)
    except ConfigError as err:
        print(str(err), file=sys.stderr)
        return EXIT_USAGE
    out_dir = args.out or str(Path(args.log).parent)
    try:
        report = summarize_log(
            args.log, weights=(args.w_error, args.w_cost), out_dir=out_dir
        )
    except (EventLogError, OSError, StopIteration) as err:
        message = "event log has no plan-created line" if isinstance(err, StopIteration) else str(err)
        print(f"{args.log}: {message}", file=sys.stderr)
        return EXIT_RUNTIME
    rec = report.recommended
    print(
        f"run {report.run_id}: {len(report.points)} configurations, "
        f"front size {len(report.front_indices)}, recommended error {rec.best_error:.6f} "
        f"-> {out_dir}/{report.run_id}.report.txt"
    )
    return EXIT_OK


def _open_history(path: str) -> HistoryStore | None:
    try:
        return HistoryStore(path)
    except ValueError as err:
        print(str(err), file=sys.stderr)
        return None


def cmd_history_list(args) -> int:
    store = _open_history(_resolve_history(args.history))
    if store is None:
        return EXIT_RUNTIME
    print(f"{len(store)} records")
    best: dict[str, float] = {}
    counts: dict[str, int] = {}
    for record in store.records:
        counts[record.task_id] = counts.get(record.task_id, 0) + 1
        if record.task_id not in best or record.error < best[record.task_id]:
            best[record.task_id] = record.error
    for task_id in counts:
        print(f"task {task_id}: {counts[task_id]} records, best error {best[task_id]:.6f}")
    return EXIT_OK


def cmd_history_nearest(args) -> int:
    store = _open_history(_resolve_history(args.history))
    if store is None:
        return EXIT_RUNTIME
    raw = args.task_spec
    try:
        spec = json.loads(raw) if raw.lstrip().startswith("{") else json.loads(Path(raw).read_text())
        task = build_task(spec)
    except (OSError, json.JSONDecodeError, ConfigError) as err:
        print(f"task spec: {err}", file=sys.stderr)
        return EXIT_USAGE
    target = meta_features(task)
    names = nearest_tasks(store, target, args.k)
    print("nearest tasks: " + (", ".join(names) if names else "(none)"))
    for config in warm_start(store, target, args.k, args.configs) if names else []:
        print(json.dumps(config, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="autoloop",
        description="Budgeted multi-strategy pipeline/hyperparameter search "
        "with meta-learning warm starts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a suite from a JSON run configuration")
    run_p.add_argument("--config", required=True, help="run configuration file (JSON)")
    run_p.add_argument("--history", help=f"history file (default {DEFAULT_HISTORY}, env {HISTORY_ENV_VAR})")
    run_p.add_argument("--out", help="output directory for logs/reports (default runs)")
    run_p.add_argument("--workers", type=int, help="parallel slots, overrides config")
    run_p.add_argument("--seed", type=int, help="root seed, overrides config")
    run_p.set_defaults(handler=cmd_run)

    report_p = sub.add_parser("report", help="regenerate report artifacts from an event log")
    report_p.add_argument("log", help="path to a <run_id>.events.jsonl file")
    report_p.add_argument("--w-error", type=float, default=DEFAULT_WEIGHTS[0])
    report_p.add_argument("--w-cost", type=float, default=DEFAULT_WEIGHTS[1])
    report_p.add_argument("--out", help="output directory (default: next to the log)")
    report_p.set_defaults(handler=cmd_report)

    history_p = sub.add_parser("history", help="inspect the history file")
    hsub = history_p.add_subparsers(dest="subcommand", required=True)
    hlist = hsub.add_parser("list", help="record count and per-task best errors")
    hlist.add_argument("--history")
    hlist.set_defaults(handler=cmd_history_list)
    hnear = hsub.add_parser("nearest", help="warm-start suggestions for a task spec")
    hnear.add_argument("task_spec", help="task spec as inline JSON or a path to a JSON file")
    hnear.add_argument("k", type=int, help="number of nearest tasks to consult")
    hnear.add_argument("--configs", type=int, default=5, help="max configurations to print")
    hnear.add_argument("--history")
    hnear.set_defaults(handler=cmd_history_nearest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
