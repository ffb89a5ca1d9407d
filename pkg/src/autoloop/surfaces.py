"""Closed-form 2-d test surfaces with known minima."""

from __future__ import annotations

import numpy as np

from .space import Configuration, SearchSpace, continuous


def branin(x, y):
    b = 5.1 / (4.0 * np.pi**2)
    c = 5.0 / np.pi
    t = 1.0 / (8.0 * np.pi)
    return (y - b * x**2 + c * x - 6.0) ** 2 + 10.0 * (1.0 - t) * np.cos(x) + 10.0


def rastrigin2(x, y):
    return (
        20.0
        + x**2
        - 10.0 * np.cos(2.0 * np.pi * x)
        + y**2
        - 10.0 * np.cos(2.0 * np.pi * y)
    )


# name -> (function, ((x_lo, x_hi), (y_lo, y_hi)), global minimum value)
SURFACES = {
    "branin": (branin, ((-5.0, 10.0), (0.0, 15.0)), 10.0 / (8.0 * np.pi)),
    "rastrigin2": (rastrigin2, ((-5.12, 5.12), (-5.12, 5.12)), 0.0),
}


def surface_space(name: str) -> SearchSpace:
    """The declared domain of a surface as a two-parameter search space."""
    _, ((x_lo, x_hi), (y_lo, y_hi)), _ = _lookup(name)
    return SearchSpace((continuous("x", x_lo, x_hi), continuous("y", y_lo, y_hi)))


def surface_value(name: str, x: float, y: float) -> float:
    """Raw surface value; the point must lie inside the declared domain."""
    fn, ((x_lo, x_hi), (y_lo, y_hi)), _ = _lookup(name)
    if not (x_lo <= x <= x_hi and y_lo <= y <= y_hi):
        raise ValueError(f"point ({x}, {y}) outside the domain of {name}")
    return float(fn(x, y))


def surface_error(name: str, point: Configuration) -> float:
    """Surface value shifted by the known minimum, so the optimum maps to 0."""
    _, _, minimum = _lookup(name)
    return surface_value(name, float(point["x"]), float(point["y"])) - minimum


def _lookup(name: str):
    try:
        return SURFACES[name]
    except KeyError:
        raise ValueError(f"unknown surface {name!r}") from None
