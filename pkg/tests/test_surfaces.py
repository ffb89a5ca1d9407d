import numpy as np
import pytest

from autoloop.surfaces import (
    SURFACES,
    branin,
    rastrigin2,
    surface_error,
    surface_space,
    surface_value,
)


def test_rastrigin_minimum_at_origin():
    assert surface_error("rastrigin2", {"x": 0.0, "y": 0.0}) == 0.0


def test_branin_known_minimum_value():
    # dense-grid oracle below confirms this is the global minimum region
    assert surface_value("branin", np.pi, 2.275) == pytest.approx(0.397887, abs=1e-4)


def test_branin_dense_grid_oracle():
    # 2000 x 2000 sweep: no grid value undercuts the declared minimum, and the
    # best grid point sits in the known minimum region
    _, ((x_lo, x_hi), (y_lo, y_hi)), minimum = SURFACES["branin"]
    xs = np.linspace(x_lo, x_hi, 2000)
    ys = np.linspace(y_lo, y_hi, 2000)
    values = branin(xs[:, None], ys[None, :])
    assert values.min() >= minimum - 1e-9
    assert values.min() - minimum < 1e-3


def test_branin_normalized_error_nonnegative_on_grid():
    xs = np.linspace(-5.0, 10.0, 100)
    ys = np.linspace(0.0, 15.0, 100)
    for x in xs:
        for y in ys:
            assert surface_error("branin", {"x": float(x), "y": float(y)}) >= 0.0


def test_rastrigin_nonnegative_on_grid():
    xs = np.linspace(-5.12, 5.12, 50)
    vals = rastrigin2(xs[:, None], xs[None, :])
    assert vals.min() >= 0.0


def test_out_of_domain_rejected():
    with pytest.raises(ValueError):
        surface_value("branin", -6.0, 1.0)
    with pytest.raises(ValueError):
        surface_value("rastrigin2", 0.0, 6.0)


def test_unknown_surface_rejected():
    with pytest.raises(ValueError):
        surface_value("ackley", 0.0, 0.0)


def test_surface_space_bounds():
    sp = surface_space("branin")
    assert sp.names == ("x", "y")
    assert (sp.params[0].lo, sp.params[0].hi) == (-5.0, 10.0)
    assert (sp.params[1].lo, sp.params[1].hi) == (0.0, 15.0)
