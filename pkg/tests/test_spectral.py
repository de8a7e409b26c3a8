import numpy as np
import pytest

import thinhomog as th
from thinhomog.operators import ladder_grids
from thinhomog.spectral import (
    check_mode_ordering,
    limit_eigenvalues,
    vertical_level,
)


def _spec(epsilon=0.1):
    return th.ThinDomainSpec(
        th.BaseDomain(), th.parse_profile("trig(2; 1 sin 1)"),
        th.parse_profile("trig(2; 1 cos 1)"), 0.5, 0.5, epsilon,
    )


def _limit_op(cells=128):
    spec = _spec()
    model = th.homogenize(spec)
    grid = th.Grid((0.0,), (1.0,), (cells + 1,))
    return th.assemble_limit(spec, grid, model.a0, model.weight), model


def test_limit_spectrum_matches_closed_form():
    op, model = _limit_op()
    pairs = th.eigenpairs(op, 4)
    exact = limit_eigenvalues(model, op.spec.base, 4)
    values = np.array([p.value for p in pairs])
    assert values[0] == pytest.approx(1.0, abs=1e-8)
    assert np.allclose(values, exact, rtol=5e-3)
    assert [p.index for p in pairs] == [1, 2, 3, 4]
    for p in pairs:
        phi = p.function.values
        assert phi @ (op.mass @ phi) == pytest.approx(1.0)
        assert p.residual <= 1e-8


def test_lowest_eigenvalue_of_thin_problem_is_one():
    spec = _spec(0.1)
    grid_q, _ = ladder_grids(spec)
    op = th.assemble_original(spec, grid_q)
    pairs = th.eigenpairs(op, 2)
    assert pairs[0].value == pytest.approx(1.0, abs=1e-8)
    assert pairs[1].value > 1.0


def test_eigenpairs_argument_checks():
    op, _ = _limit_op(cells=8)
    with pytest.raises(ValueError):
        th.eigenpairs(op, 0)
    with pytest.raises(ValueError):
        th.eigenpairs(op, 13)


def test_mode_ordering_guard():
    model = th.homogenize(_spec())
    exact = limit_eigenvalues(model, _spec().base, 4)
    assert vertical_level(_spec(0.1)) == pytest.approx(
        1 + (np.pi / 0.6) ** 2
    )
    with pytest.raises(th.StudyError) as err:
        check_mode_ordering(_spec(0.1), exact)
    assert err.value.epsilon == 0.1
    check_mode_ordering(_spec(0.05), exact)


def test_semigroup_of_constant():
    op, _ = _limit_op(cells=32)
    one = np.ones(op.size)
    u = th.semigroup(op, one, 0.5)
    assert np.allclose(u.values, np.exp(-0.5), atol=1e-10)
    u = th.semigroup(op, one, 0.5, dt=0.01)
    assert np.allclose(u.values, 1.01 ** -50, atol=1e-10)


@pytest.mark.parametrize("seed", [0, 42, 2024, 7385])
def test_resolvent_defect_is_reproducible(seed):
    spec = _spec(0.1)
    first = th.resolvent_defect(spec, None, probes=3, seed=seed)
    second = th.resolvent_defect(spec, None, probes=3, seed=seed)
    assert first == second
    assert 0 < first.defect_mean <= first.defect_max < np.inf
    assert first.row()["probes"] == 3
