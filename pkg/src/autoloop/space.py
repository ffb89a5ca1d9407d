"""Search spaces of typed configuration variables.

A :class:`SearchSpace` is an ordered list of parameters; a configuration is a
plain dict assigning one in-range value to every parameter. The operations
here sample, enumerate, validate and numerically encode configurations. All
types are immutable after construction and every operation is pure, so spaces
and configurations may be shared freely across concurrent executors.

Conditional or hierarchical parameters are deliberately unsupported; inactive
branches are modelled as parameters the evaluator ignores.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .seeding import make_rng

Value = float | int | str | bool
Configuration = dict[str, Value]

KINDS = ("continuous", "integer", "categorical", "boolean")


class SpaceError(ValueError):
    """A malformed parameter or space declaration."""


class ConfigurationError(ValueError):
    """A configuration that does not fit its space."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class ParameterSpec:
    """One configuration variable: a name plus a typed domain."""

    name: str
    kind: str
    lo: float | None = None
    hi: float | None = None
    choices: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.name:
            raise SpaceError("parameter name must be non-empty")
        if self.kind not in KINDS:
            raise SpaceError(f"{self.name}: unknown kind {self.kind!r}")
        if self.kind in ("continuous", "integer"):
            if self.lo is None or self.hi is None:
                raise SpaceError(f"{self.name}: {self.kind} parameter needs lo and hi")
            if not self.lo <= self.hi:
                raise SpaceError(f"{self.name}: lo must be <= hi")
            if self.kind == "integer" and (
                float(self.lo) != int(self.lo) or float(self.hi) != int(self.hi)
            ):
                raise SpaceError(f"{self.name}: integer bounds must be whole numbers")
        if self.kind == "categorical":
            if not self.choices:
                raise SpaceError(f"{self.name}: categorical needs at least one choice")
            if len(set(self.choices)) != len(self.choices):
                raise SpaceError(f"{self.name}: categorical choices must be unique")

    @property
    def encoded_width(self) -> int:
        return len(self.choices) if self.kind == "categorical" else 1


def continuous(name: str, lo: float, hi: float) -> ParameterSpec:
    return ParameterSpec(name, "continuous", lo=float(lo), hi=float(hi))


def integer(name: str, lo: int, hi: int) -> ParameterSpec:
    return ParameterSpec(name, "integer", lo=int(lo), hi=int(hi))


def categorical(name: str, choices: Sequence[str]) -> ParameterSpec:
    return ParameterSpec(name, "categorical", choices=tuple(choices))


def boolean(name: str) -> ParameterSpec:
    return ParameterSpec(name, "boolean")


@dataclass(frozen=True)
class SearchSpace:
    """An ordered, immutable collection of uniquely named parameters."""

    params: tuple[ParameterSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise SpaceError("parameter names must be unique")

    def __len__(self) -> int:
        return len(self.params)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)

    @property
    def encoded_dim(self) -> int:
        return sum(p.encoded_width for p in self.params)


def sample_value(spec: ParameterSpec, rng: np.random.Generator) -> Value:
    """Draw one uniform value from a single parameter's domain."""
    if spec.kind == "continuous":
        return float(rng.uniform(spec.lo, spec.hi))
    if spec.kind == "integer":
        return int(rng.integers(int(spec.lo), int(spec.hi) + 1))
    if spec.kind == "categorical":
        return spec.choices[int(rng.integers(len(spec.choices)))]
    return bool(rng.integers(2))


def sample(space: SearchSpace, seed: int) -> Configuration:
    """Draw one configuration uniformly; equal seeds give identical output."""
    rng = make_rng(seed)
    return {p.name: sample_value(p, rng) for p in space.params}


def grid_values(spec: ParameterSpec, resolution: int) -> list[Value]:
    """Per-parameter grid points for :func:`enumerate_grid`.

    Continuous parameters take ``resolution`` evenly spaced points including
    both endpoints (resolution 1 uses the interval midpoint so a one-point
    grid is unbiased). Integer parameters take every value when the range is
    small enough, otherwise evenly spaced values rounded to the nearest whole
    number and deduplicated. Categorical and boolean parameters always take
    all their values.
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    if spec.kind == "continuous":
        if spec.lo == spec.hi:
            return [float(spec.lo)]
        if resolution == 1:
            return [(float(spec.lo) + float(spec.hi)) / 2.0]
        return [float(v) for v in np.linspace(spec.lo, spec.hi, resolution)]
    if spec.kind == "integer":
        lo, hi = int(spec.lo), int(spec.hi)
        if hi - lo + 1 <= resolution:
            return list(range(lo, hi + 1))
        if resolution == 1:
            return [int(round((lo + hi) / 2.0))]
        rounded = [int(round(float(v))) for v in np.linspace(lo, hi, resolution)]
        return list(dict.fromkeys(rounded))
    if spec.kind == "categorical":
        return list(spec.choices)
    return [False, True]


def enumerate_grid(space: SearchSpace, resolution: int) -> list[Configuration]:
    """Full Cartesian product over per-parameter grids.

    Configurations come out in lexicographic order of the parameter list (the
    first parameter varies slowest). An empty space yields one empty
    configuration.
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    axes = [grid_values(p, resolution) for p in space.params]
    names = space.names
    return [dict(zip(names, combo)) for combo in itertools.product(*axes)]


def grid_size(space: SearchSpace, resolution: int) -> int:
    """Cardinality of :func:`enumerate_grid` without materializing it."""
    size = 1
    for p in space.params:
        size *= len(grid_values(p, resolution))
    return size


def _check_value(spec: ParameterSpec, value: Value) -> str | None:
    if spec.kind == "continuous":
        if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
            return f"{spec.name}: expected a real value"
        if not spec.lo <= float(value) <= spec.hi:
            return f"{spec.name}: out of bounds"
    elif spec.kind == "integer":
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            return f"{spec.name}: expected a whole value"
        if not spec.lo <= int(value) <= spec.hi:
            return f"{spec.name}: out of bounds"
    elif spec.kind == "categorical":
        if value not in spec.choices:
            return f"{spec.name}: unknown choice {value!r}"
    else:
        if not isinstance(value, (bool, np.bool_)):
            return f"{spec.name}: expected a boolean"
    return None


def validate(space: SearchSpace, config: Configuration) -> list[str]:
    """Return all violations; an empty list means the configuration is ok."""
    violations = []
    for spec in space.params:
        if spec.name not in config:
            violations.append(f"{spec.name}: missing")
            continue
        problem = _check_value(spec, config[spec.name])
        if problem is not None:
            violations.append(problem)
    known = set(space.names)
    for name in config:
        if name not in known:
            violations.append(f"{name}: not a parameter of this space")
    return violations


def require_valid(space: SearchSpace, config: Configuration) -> None:
    violations = validate(space, config)
    if violations:
        raise ConfigurationError(violations)


def encode(space: SearchSpace, config: Configuration) -> np.ndarray:
    """Map a valid configuration to a fixed-length vector in [0, 1]^d.

    Continuous and integer values are affinely normalized over their bounds
    (degenerate bounds map to 0), categorical values are one-hot over the
    declared choices, booleans become 0/1. The output length depends only on
    the space.
    """
    require_valid(space, config)
    out: list[float] = []
    for spec in space.params:
        v = config[spec.name]
        if spec.kind in ("continuous", "integer"):
            width = float(spec.hi) - float(spec.lo)
            out.append(0.0 if width == 0.0 else (float(v) - float(spec.lo)) / width)
        elif spec.kind == "categorical":
            out.extend(1.0 if v == c else 0.0 for c in spec.choices)
        else:
            out.append(1.0 if v else 0.0)
    return np.asarray(out, dtype=float)
