"""JSON Lines run event log: writing, parsing and trace-order checking.

Every run emits one log file. Step lines carry the full evaluation record
(config, fidelity, error, cost, slot), so reports can be regenerated from the
log alone without re-running anything.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

PLAN_CREATED = "plan-created"
STEP_EVALUATED = "step-evaluated"
PLAN_UPDATED = "plan-updated"
RESULTS_SUMMARIZED = "results-summarized"
HISTORY_APPENDED = "history-appended"


class EventLogError(ValueError):
    """A log file that cannot be parsed; the message names the line."""


class EventLogWriter:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = self.path.open("w", encoding="utf-8")

    def emit(self, event: str, **fields) -> None:
        record = {"event": event, **fields, "wall_time": time.time()}
        self._handle.write(json.dumps(record) + "\n")

    def close(self) -> None:
        self._handle.flush()
        self._handle.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_events(path: str | Path) -> list[dict]:
    events = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as err:
                raise EventLogError(f"line {lineno}: not valid JSON ({err.msg})") from None
            if not isinstance(record, dict) or "event" not in record:
                raise EventLogError(f"line {lineno}: missing 'event' field")
            events.append(record)
    return events


def trace_problems(events: list[dict]) -> list[str]:
    """Check the run grammar; an empty return means the trace conforms.

    Expected order: plan-created, then per stage one or more step-evaluated
    lines followed by plan-updated, then results-summarized, then
    history-appended, and nothing else.
    """
    problems = []
    kinds = [e["event"] for e in events]
    i = 0

    def expect(kind):
        nonlocal i
        if i >= len(kinds) or kinds[i] != kind:
            found = kinds[i] if i < len(kinds) else "end of log"
            problems.append(f"position {i}: expected {kind}, found {found}")
            return False
        i += 1
        return True

    if not expect(PLAN_CREATED):
        return problems
    while i < len(kinds) and kinds[i] == STEP_EVALUATED:
        while i < len(kinds) and kinds[i] == STEP_EVALUATED:
            i += 1
        if not expect(PLAN_UPDATED):
            return problems
    if not expect(RESULTS_SUMMARIZED):
        return problems
    if not expect(HISTORY_APPENDED):
        return problems
    if i != len(kinds):
        problems.append(f"position {i}: trailing events after {HISTORY_APPENDED}")
    return problems


def step_events(events: list[dict]) -> list[dict]:
    return [e for e in events if e["event"] == STEP_EVALUATED]
