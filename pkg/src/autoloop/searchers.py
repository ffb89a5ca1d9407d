"""Search strategies behind one propose/observe contract.

A searcher emits Stages of mutually independent Steps one at a time. The
scheduler evaluates a whole stage, feeds every result back through
``observe``, and only then may the searcher propose again; proposing with an
unobserved stage outstanding is an error. A searcher is exhausted when
``propose`` returns None.

All randomness derives from the constructor seed, so a searcher replays
identically, and every proposed configuration is valid for its space.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .seeding import make_rng, split_seed
from .space import (
    Configuration,
    SearchSpace,
    encode,
    enumerate_grid,
    grid_size,
    sample,
    sample_value,
)
from .tasks import TrialResult


@dataclass(frozen=True)
class Step:
    """The evaluation of one configuration at one fidelity."""

    config: Configuration
    fidelity: float
    step_seed: int = 0
    resource_slot: int | None = None

    def __post_init__(self):
        if not 0.0 < self.fidelity <= 1.0:
            raise ValueError("fidelity must be in (0, 1]")


@dataclass(frozen=True)
class Stage:
    """An ordered set of independent steps that may run in parallel.

    Steps never read each other's results; a stage is emitted before any of
    its results exist.
    """

    steps: tuple[Step, ...]
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))


class Searcher:
    """Base class holding the observation history and the stage protocol."""

    name = "base"

    def __init__(self, space: SearchSpace, seed: int = 0):
        self.space = space
        self.seed = int(seed)
        self.observations: list[tuple[Step, TrialResult]] = []
        self._pending: Stage | None = None
        self._finished = False

    @property
    def done(self) -> bool:
        return self._finished

    def warm_start(self, configs: Sequence[Configuration]) -> None:
        """Offer configurations to try first. Ignored unless overridden."""

    def propose(self) -> Stage | None:
        if self._pending is not None:
            raise RuntimeError("cannot propose: previous stage has unobserved results")
        if self._finished:
            return None
        stage = self._next_stage()
        if stage is None:
            self._finished = True
            return None
        self._pending = stage
        return stage

    def observe(self, stage: Stage, results: Sequence[TrialResult]) -> None:
        if self._pending is None or stage is not self._pending:
            raise RuntimeError("observe must be called with the pending stage")
        if len(results) != len(stage.steps):
            raise ValueError("results length must equal the stage's step count")
        self.observations.extend(zip(stage.steps, results))
        self._pending = None
        self._ingest(stage, list(results))

    def _next_stage(self) -> Stage | None:
        raise NotImplementedError

    def _ingest(self, stage: Stage, results: list[TrialResult]) -> None:
        pass


class RandomSearcher(Searcher):
    """A fixed number of independently sampled single-step stages.

    Warm-start configurations, when offered, replace the earliest sampled
    steps one for one; the total number of steps never changes.
    """

    name = "random"

    def __init__(self, space, n_trials: int, fidelity: float = 1.0, seed: int = 0):
        super().__init__(space, seed)
        if n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        self.n_trials = int(n_trials)
        self.fidelity = float(fidelity)
        self._emitted = 0
        self._suggestions: list[Configuration] = []

    def warm_start(self, configs):
        self._suggestions = [dict(c) for c in configs[: self.n_trials]]

    def _next_stage(self):
        i = self._emitted
        if i >= self.n_trials:
            return None
        if i < len(self._suggestions):
            config = self._suggestions[i]
        else:
            config = sample(self.space, split_seed(self.seed, i))
        self._emitted += 1
        return Stage((Step(config, self.fidelity),), label=f"random-{i}")


class GridSearcher(Searcher):
    """One stage holding the full discretized Cartesian product."""

    name = "grid"

    def __init__(
        self,
        space,
        resolution: int,
        fidelity: float = 1.0,
        seed: int = 0,
        max_grid_size: int = 100_000,
    ):
        super().__init__(space, seed)
        if resolution < 1:
            raise ValueError("resolution must be >= 1")
        size = grid_size(space, resolution)
        if size > max_grid_size:
            raise ValueError(
                f"grid of {size} configurations exceeds the cap of {max_grid_size}"
            )
        self.resolution = int(resolution)
        self.fidelity = float(fidelity)
        self._emitted = False

    def _next_stage(self):
        if self._emitted:
            return None
        self._emitted = True
        steps = tuple(
            Step(config, self.fidelity)
            for config in enumerate_grid(self.space, self.resolution)
        )
        return Stage(steps, label="grid")


class SMBOSearcher(Searcher):
    """Sequential model-based search with a nearest-neighbour surrogate.

    After ``n_init`` random steps, each step scores ``n_candidates`` fresh
    random samples with a surrogate fit to all observations and proposes the
    best. The surrogate is a distance-weighted k-nearest-neighbour regressor
    over encoded configurations (k = min(5, observations), weights
    1 / (distance + 1e-9)); its predictive spread is the standard deviation of
    the k neighbour errors. The acquisition score is mean - kappa * spread,
    lower is better, ties go to the earliest candidate. Stages are always one
    step.
    """

    name = "smbo"

    def __init__(
        self,
        space,
        n_init: int,
        n_iter: int,
        n_candidates: int = 20,
        kappa: float = 1.0,
        fidelity: float = 1.0,
        seed: int = 0,
    ):
        super().__init__(space, seed)
        if n_init < 1:
            raise ValueError("n_init must be >= 1")
        if n_iter < 0:
            raise ValueError("n_iter must be >= 0")
        if n_candidates < 1:
            raise ValueError("n_candidates must be >= 1")
        self.n_init = int(n_init)
        self.n_iter = int(n_iter)
        self.n_candidates = int(n_candidates)
        self.kappa = float(kappa)
        self.fidelity = float(fidelity)
        self._emitted = 0
        self._suggestions: list[Configuration] = []

    def warm_start(self, configs):
        self._suggestions = [dict(c) for c in configs[: self.n_init]]

    def surrogate(self, point: np.ndarray) -> tuple[float, float]:
        """Predict (mean error, spread) at an encoded point.

        A zero-distance neighbour determines the mean exactly, so predicting
        at an observed configuration returns that observation's error.
        """
        encoded = np.array([encode(self.space, s.config) for s, _ in self.observations])
        errors = np.array([r.error for _, r in self.observations])
        distances = np.linalg.norm(encoded - point, axis=1)
        k = min(5, len(errors))
        nearest = np.argsort(distances, kind="stable")[:k]
        d = distances[nearest]
        e = errors[nearest]
        exact = d <= 1e-12
        if exact.any():
            mean = float(e[exact].mean())
        else:
            weights = 1.0 / (d + 1e-9)
            mean = float((weights * e).sum() / weights.sum())
        return mean, float(e.std())

    def _next_stage(self):
        i = self._emitted
        if i >= self.n_init + self.n_iter:
            return None
        if i < self.n_init:
            if i < len(self._suggestions):
                config = self._suggestions[i]
            else:
                config = sample(self.space, split_seed(self.seed, 0, i))
            label = f"smbo-init-{i}"
        else:
            j = i - self.n_init
            candidates = [
                sample(self.space, split_seed(self.seed, 1, j, c))
                for c in range(self.n_candidates)
            ]
            scores = []
            for config in candidates:
                mean, spread = self.surrogate(encode(self.space, config))
                scores.append(mean - self.kappa * spread)
            config = candidates[int(np.argmin(scores))]
            label = f"smbo-iter-{j}"
        self._emitted += 1
        return Stage((Step(config, self.fidelity),), label=label)


class EvolutionarySearcher(Searcher):
    """Generational evolution: elitism, tournaments, crossover, mutation.

    Each generation is one stage of ``pop_size`` steps. The next generation
    copies the best individual unchanged, then fills up with children of
    tournament-selected parents (winner = lowest error, ties to the earlier
    index) built by per-parameter crossover with probability
    ``crossover_rate`` and per-parameter resampling mutation with probability
    ``mutation_rate``.
    """

    name = "evolutionary"

    def __init__(
        self,
        space,
        pop_size: int,
        n_generations: int,
        tournament_k: int = 3,
        crossover_rate: float = 0.5,
        mutation_rate: float = 0.1,
        fidelity: float = 1.0,
        seed: int = 0,
    ):
        super().__init__(space, seed)
        if pop_size < 2:
            raise ValueError("pop_size must be >= 2")
        if not 1 <= tournament_k <= pop_size:
            raise ValueError("need 1 <= tournament_k <= pop_size")
        if n_generations < 1:
            raise ValueError("n_generations must be >= 1")
        if not 0.0 <= crossover_rate <= 1.0 or not 0.0 <= mutation_rate <= 1.0:
            raise ValueError("rates must be in [0, 1]")
        self.pop_size = int(pop_size)
        self.n_generations = int(n_generations)
        self.tournament_k = int(tournament_k)
        self.crossover_rate = float(crossover_rate)
        self.mutation_rate = float(mutation_rate)
        self.fidelity = float(fidelity)
        self._rng = make_rng(split_seed(seed, 0))
        self._generation = 0
        self._population: list[Configuration] = []
        self._errors: list[float] = []

    def _tournament(self) -> Configuration:
        contenders = self._rng.choice(self.pop_size, size=self.tournament_k, replace=False)
        winner = min(contenders, key=lambda i: (self._errors[i], i))
        return self._population[winner]

    def _breed(self) -> list[Configuration]:
        elite = min(range(self.pop_size), key=lambda i: (self._errors[i], i))
        children = [dict(self._population[elite])]
        for _ in range(self.pop_size - 1):
            p1 = self._tournament()
            p2 = self._tournament()
            child = {
                spec.name: (
                    p2[spec.name]
                    if self._rng.random() < self.crossover_rate
                    else p1[spec.name]
                )
                for spec in self.space.params
            }
            for spec in self.space.params:
                if self._rng.random() < self.mutation_rate:
                    child[spec.name] = sample_value(spec, self._rng)
            children.append(child)
        return children

    def _next_stage(self):
        g = self._generation
        if g >= self.n_generations:
            return None
        if g == 0:
            self._population = [
                sample(self.space, split_seed(self.seed, 1, i))
                for i in range(self.pop_size)
            ]
        else:
            self._population = self._breed()
        steps = tuple(Step(dict(c), self.fidelity) for c in self._population)
        return Stage(steps, label=f"evo-gen-{g}")

    def _ingest(self, stage, results):
        self._errors = [r.error for r in results]
        self._generation += 1


class _HalvingBase(Searcher):
    """Shared rung bookkeeping: fidelity doubles per rung, capped at 1."""

    def __init__(self, space, n_configs: int, f0: float, seed: int = 0):
        super().__init__(space, seed)
        if n_configs < 1:
            raise ValueError("n_configs must be >= 1")
        if not 0.0 < f0 <= 1.0:
            raise ValueError("f0 must be in (0, 1]")
        self.n_configs = int(n_configs)
        self.f0 = float(f0)
        self._rung = 0
        self._current: list[Configuration] = []
        self._rung_done = False

    def _rung_fidelity(self) -> float:
        return min(self.f0 * 2**self._rung, 1.0)

    def _next_stage(self):
        if self._rung_done:
            return None
        if self._rung == 0:
            self._current = [
                sample(self.space, split_seed(self.seed, 0, i))
                for i in range(self.n_configs)
            ]
        steps = tuple(Step(dict(c), self._rung_fidelity()) for c in self._current)
        return Stage(steps, label=f"{self.name}-rung-{self._rung}")

    def _ingest(self, stage, results):
        errors = [r.error for r in results]
        if len(self._current) == 1:
            self._rung_done = True
            return
        keep = max(1, len(self._current) // 2)
        survivors = self._select(errors, keep)
        self._current = [self._current[i] for i in survivors]
        self._rung += 1

    def _select(self, errors: list[float], keep: int) -> list[int]:
        raise NotImplementedError


class SuccessiveHalvingSearcher(_HalvingBase):
    """Keep the best floor(n/2) configurations each rung while fidelity doubles.

    Ties are broken toward the earlier step index; the run ends once a single
    survivor has been evaluated at its rung.
    """

    name = "successive_halving"

    def _select(self, errors, keep):
        order = sorted(range(len(errors)), key=lambda i: (errors[i], i))
        return order[:keep]


class ProbHalvingSearcher(_HalvingBase):
    """Halving with probabilistic retention instead of hard elimination.

    Survivors are drawn without replacement with probability proportional to
    exp(-rank / temperature), where rank 0 is the rung's best error and tied
    errors share the average of their ranks.
    """

    name = "prob_halving"

    def __init__(self, space, n_configs: int, f0: float, temperature: float = 1.0, seed: int = 0):
        super().__init__(space, n_configs, f0, seed)
        if temperature <= 0.0:
            raise ValueError("temperature must be > 0")
        self.temperature = float(temperature)
        self._rng = make_rng(split_seed(seed, 1))

    def retention_weights(self, errors: Sequence[float]) -> np.ndarray:
        """Normalized first-draw selection probabilities for a rung's errors."""
        ranks = rankdata(errors, method="average") - 1.0
        weights = np.exp(-ranks / self.temperature)
        return weights / weights.sum()

    def _select(self, errors, keep):
        weights = self.retention_weights(errors)
        alive = list(range(len(errors)))
        chosen: list[int] = []
        for _ in range(keep):
            p = weights[alive] / weights[alive].sum()
            pick = int(self._rng.choice(len(alive), p=p))
            chosen.append(alive.pop(pick))
        return chosen


SEARCHERS: dict[str, type[Searcher]] = {
    cls.name: cls
    for cls in (
        RandomSearcher,
        GridSearcher,
        SMBOSearcher,
        EvolutionarySearcher,
        SuccessiveHalvingSearcher,
        ProbHalvingSearcher,
    )
}
