import math

import numpy as np
import pytest

from autoloop.searchers import (
    SEARCHERS,
    EvolutionarySearcher,
    GridSearcher,
    ProbHalvingSearcher,
    RandomSearcher,
    SMBOSearcher,
    SuccessiveHalvingSearcher,
)
from autoloop.seeding import split_seed
from autoloop.space import SearchSpace, categorical, continuous, encode, integer, sample, validate
from autoloop.tasks import TrialResult, pipeline_schema

SPACE = SearchSpace((continuous("x", 0.0, 1.0), continuous("y", 0.0, 1.0)))


def quadratic_error(config, fidelity=1.0):
    return (config["x"] - 0.3) ** 2 + (config["y"] - 0.7) ** 2


def drive(searcher, error_fn=quadratic_error):
    """Run the propose/observe loop to exhaustion with a synthetic evaluator."""
    stages = []
    while True:
        stage = searcher.propose()
        if stage is None:
            break
        results = [
            TrialResult(
                config=dict(step.config),
                fidelity=step.fidelity,
                error=float(error_fn(step.config, step.fidelity)),
                cost=0.01,
                adaptive_flag_active=False,
                seed=0,
            )
            for step in stage.steps
        ]
        searcher.observe(stage, results)
        stages.append((stage, results))
    return stages


def all_configs(stages):
    return [step.config for stage, _ in stages for step in stage.steps]


def halving_sizes(n):
    sizes = [n]
    while sizes[-1] > 1:
        sizes.append(max(1, sizes[-1] // 2))
    return sizes


# ---------------------------------------------------------------------- random


def test_random_single_trial():
    stages = drive(RandomSearcher(SPACE, n_trials=1, seed=3))
    assert len(stages) == 1 and len(stages[0][0].steps) == 1


def test_random_deterministic():
    first = all_configs(drive(RandomSearcher(SPACE, n_trials=4, seed=9)))
    second = all_configs(drive(RandomSearcher(SPACE, n_trials=4, seed=9)))
    assert first == second
    assert len(first) == 4


def test_random_zero_trials_rejected():
    with pytest.raises(ValueError):
        RandomSearcher(SPACE, n_trials=0)


def test_random_warm_start_seeds_first_steps():
    suggestions = [{"x": 0.1, "y": 0.2}, {"x": 0.9, "y": 0.8}]
    searcher = RandomSearcher(SPACE, n_trials=4, seed=9)
    searcher.warm_start(suggestions)
    configs = all_configs(drive(searcher))
    assert configs[:2] == suggestions
    assert len(configs) == 4
    assert configs[2] == sample(SPACE, split_seed(9, 2))


# ------------------------------------------------------------------------ grid


def test_grid_single_stage():
    stages = drive(GridSearcher(SPACE, resolution=3))
    assert len(stages) == 1
    assert len(stages[0][0].steps) == 9


def test_grid_cardinality_matches_enumeration_oracle():
    sp = SearchSpace((categorical("c", ["p", "q"]), integer("n", 1, 2)))
    stages = drive(GridSearcher(sp, resolution=5), error_fn=lambda c, f: float(c["n"]))
    assert len(stages[0][0].steps) == 4


def test_grid_cap_refusal():
    sp = SearchSpace((categorical("c", ["p", "q"]), integer("n", 1, 3)))
    with pytest.raises(ValueError, match="cap"):
        GridSearcher(sp, resolution=5, max_grid_size=4)


# ------------------------------------------------------------------------ smbo


def observed_smbo(errors_by_config):
    """An SMBO searcher that has observed the given {(x, y): error} map."""
    searcher = SMBOSearcher(SPACE, n_init=len(errors_by_config), n_iter=1, n_candidates=5, seed=1)
    searcher.warm_start([{"x": x, "y": y} for x, y in errors_by_config])
    lookup = {key: err for key, err in errors_by_config.items()}
    for _ in range(len(errors_by_config)):
        stage = searcher.propose()
        step = stage.steps[0]
        err = lookup[(step.config["x"], step.config["y"])]
        searcher.observe(
            stage,
            [TrialResult(step.config, step.fidelity, err, 0.0, False, 0)],
        )
    return searcher


def test_smbo_surrogate_exact_at_observed_point():
    searcher = observed_smbo({(0.0, 0.0): 0.2, (1.0, 1.0): 0.4, (0.5, 0.0): 0.9})
    mean, _ = searcher.surrogate(encode(SPACE, {"x": 0.0, "y": 0.0}))
    assert abs(mean - 0.2) <= 1e-9
    mean, _ = searcher.surrogate(encode(SPACE, {"x": 0.5, "y": 0.0}))
    assert abs(mean - 0.9) <= 1e-9


def test_smbo_equidistant_mean():
    searcher = observed_smbo({(0.0, 0.5): 0.2, (1.0, 0.5): 0.4})
    mean, spread = searcher.surrogate(encode(SPACE, {"x": 0.5, "y": 0.5}))
    assert mean == pytest.approx(0.3, abs=1e-12)
    assert spread == pytest.approx(0.1, abs=1e-12)


def test_smbo_constant_surrogate_tie_breaks_to_first_candidate():
    # one observation: the surrogate predicts the same value everywhere and the
    # spread is zero, so the acquisition ties and candidate 0 wins
    searcher = observed_smbo({(0.5, 0.5): 0.3})
    stage = searcher.propose()
    expected = sample(SPACE, split_seed(1, 1, 0, 0))
    assert stage.steps[0].config == expected


def test_smbo_stages_are_single_step_and_deterministic():
    first = drive(SMBOSearcher(SPACE, n_init=3, n_iter=5, n_candidates=7, seed=12))
    second = drive(SMBOSearcher(SPACE, n_init=3, n_iter=5, n_candidates=7, seed=12))
    assert all(len(stage.steps) == 1 for stage, _ in first)
    assert len(first) == 8
    assert all_configs(first) == all_configs(second)


# ---------------------------------------------------------------- evolutionary


def test_evolutionary_stage_shape():
    stages = drive(EvolutionarySearcher(SPACE, pop_size=8, n_generations=4, seed=5))
    assert len(stages) == 4
    assert all(len(stage.steps) == 8 for stage, _ in stages)


def test_evolutionary_deterministic():
    kwargs = dict(pop_size=6, n_generations=3, tournament_k=2, seed=31)
    assert all_configs(drive(EvolutionarySearcher(SPACE, **kwargs))) == all_configs(
        drive(EvolutionarySearcher(SPACE, **kwargs))
    )


def test_evolutionary_tournament_and_elite_pick_argmin():
    # first generation errors [0.3, 0.1, 0.2]; with a full tournament and no
    # mutation every parent is individual 1, so generation 2 repeats it
    searcher = EvolutionarySearcher(
        SPACE, pop_size=3, n_generations=2, tournament_k=3,
        crossover_rate=0.5, mutation_rate=0.0, seed=2,
    )
    stage = searcher.propose()
    errors = [0.3, 0.1, 0.2]
    searcher.observe(
        stage,
        [
            TrialResult(s.config, s.fidelity, e, 0.0, False, 0)
            for s, e in zip(stage.steps, errors)
        ],
    )
    best = dict(stage.steps[1].config)
    next_stage = searcher.propose()
    assert [dict(s.config) for s in next_stage.steps] == [best] * 3


def test_evolutionary_best_so_far_never_worsens():
    searcher = EvolutionarySearcher(SPACE, pop_size=6, n_generations=5, seed=77)
    best_after_stage = []
    for stage, results in drive(searcher):
        errors = [r.error for r in results]
        previous = best_after_stage[-1] if best_after_stage else float("inf")
        best_after_stage.append(min(previous, min(errors)))
    assert all(b <= a for a, b in zip(best_after_stage, best_after_stage[1:]))


def test_evolutionary_parameter_validation():
    with pytest.raises(ValueError):
        EvolutionarySearcher(SPACE, pop_size=1, n_generations=2)
    with pytest.raises(ValueError):
        EvolutionarySearcher(SPACE, pop_size=4, n_generations=2, tournament_k=5)


# --------------------------------------------------------------------- halving


@pytest.mark.parametrize("n,expected", [(16, [16, 8, 4, 2, 1]), (5, [5, 2, 1]), (1, [1])])
def test_successive_halving_rung_sizes(n, expected):
    stages = drive(SuccessiveHalvingSearcher(SPACE, n_configs=n, f0=0.125, seed=4))
    assert [len(stage.steps) for stage, _ in stages] == expected
    assert expected == halving_sizes(n)
    assert sum(len(stage.steps) for stage, _ in stages) == sum(expected)


def test_successive_halving_16_total_steps():
    stages = drive(SuccessiveHalvingSearcher(SPACE, n_configs=16, f0=0.0625, seed=4))
    assert sum(len(s.steps) for s, _ in stages) == 31
    assert len(stages) == 5


def test_halving_fidelity_doubles_capped_at_one():
    stages = drive(SuccessiveHalvingSearcher(SPACE, n_configs=8, f0=0.3, seed=4))
    fidelities = [stage.steps[0].fidelity for stage, _ in stages]
    assert fidelities == [0.3, 0.6, 1.0, 1.0]


def test_successive_halving_keeps_best_half():
    searcher = SuccessiveHalvingSearcher(SPACE, n_configs=4, f0=0.5, seed=6)
    stage = searcher.propose()
    errors = [0.9, 0.1, 0.5, 0.3]
    searcher.observe(
        stage,
        [TrialResult(s.config, s.fidelity, e, 0.0, False, 0) for s, e in zip(stage.steps, errors)],
    )
    survivors = [dict(s.config) for s in searcher.propose().steps]
    assert survivors == [dict(stage.steps[1].config), dict(stage.steps[3].config)]


def test_prob_halving_rung_sizes_match_halving():
    stages = drive(ProbHalvingSearcher(SPACE, n_configs=5, f0=0.25, seed=8))
    assert [len(stage.steps) for stage, _ in stages] == halving_sizes(5)


def test_prob_halving_retention_weights():
    searcher = ProbHalvingSearcher(SPACE, n_configs=2, f0=0.5, temperature=1.0, seed=0)
    # softmax arithmetic oracle for ranks 0 and 1 at temperature 1
    expected = [
        math.exp(0) / (math.exp(0) + math.exp(-1)),
        math.exp(-1) / (math.exp(0) + math.exp(-1)),
    ]
    got = searcher.retention_weights([0.1, 0.6])
    assert got == pytest.approx(expected, abs=1e-9)
    assert got[0] == pytest.approx(0.731, abs=1e-3)
    # tied errors share averaged ranks, restoring symmetry
    assert searcher.retention_weights([0.4, 0.4]).tolist() == [0.5, 0.5]
    assert searcher.retention_weights([0.4]).tolist() == [1.0]


def test_prob_halving_deterministic():
    a = all_configs(drive(ProbHalvingSearcher(SPACE, n_configs=8, f0=0.25, seed=42)))
    b = all_configs(drive(ProbHalvingSearcher(SPACE, n_configs=8, f0=0.25, seed=42)))
    assert a == b


def test_prob_halving_temperature_validated():
    with pytest.raises(ValueError):
        ProbHalvingSearcher(SPACE, n_configs=4, f0=0.5, temperature=0.0)


# -------------------------------------------------------------------- contract


ALL_SEARCHERS = {
    "random": dict(n_trials=5),
    "grid": dict(resolution=2),
    "smbo": dict(n_init=2, n_iter=3, n_candidates=4),
    "evolutionary": dict(pop_size=4, n_generations=3),
    "successive_halving": dict(n_configs=5, f0=0.25),
    "prob_halving": dict(n_configs=5, f0=0.25),
}


@pytest.mark.parametrize("name", sorted(ALL_SEARCHERS))
def test_every_proposed_config_validates(name):
    sp = pipeline_schema()
    searcher = SEARCHERS[name](sp, seed=13, **ALL_SEARCHERS[name])
    for stage, _ in drive(searcher, error_fn=lambda c, f: float(c["knn_k"]) / 20.0):
        for step in stage.steps:
            assert validate(sp, step.config) == []
            assert 0.0 < step.fidelity <= 1.0


@pytest.mark.parametrize("name", sorted(ALL_SEARCHERS))
def test_propose_requires_observation_between_stages(name):
    searcher = SEARCHERS[name](SPACE, seed=13, **ALL_SEARCHERS[name])
    stage = searcher.propose()
    with pytest.raises(RuntimeError):
        searcher.propose()
    results = [TrialResult(s.config, s.fidelity, 0.5, 0.0, False, 0) for s in stage.steps]
    searcher.observe(stage, results)  # now proposing is legal again
    searcher.propose()


@pytest.mark.parametrize("name", sorted(ALL_SEARCHERS))
def test_observations_only_grow_and_pair_steps(name):
    searcher = SEARCHERS[name](SPACE, seed=13, **ALL_SEARCHERS[name])
    seen = 0
    while True:
        stage = searcher.propose()
        if stage is None:
            break
        results = [TrialResult(s.config, s.fidelity, 0.5, 0.0, False, 0) for s in stage.steps]
        searcher.observe(stage, results)
        seen += len(stage.steps)
        assert len(searcher.observations) == seen
