import numpy as np
import pytest

import thinhomog as th
from thinhomog.operators import (
    ReducedProblem,
    ladder_grids,
    project_f_hat,
    vertical_mean,
)


def _spec(epsilon=0.1, bottom="trig(2; 1 sin 1)", top="trig(2; 1 cos 1)"):
    return th.ThinDomainSpec(
        th.BaseDomain(), th.parse_profile(bottom), th.parse_profile(top),
        0.5, 0.5, epsilon,
    )


def _flat():
    return _spec(bottom="const(1)", top="const(3)")


def test_grid_resolves_oscillations():
    spec = _spec(0.1)
    grid_q, grid_omega = ladder_grids(spec)
    assert grid_q.nodes == (27, 17)
    assert grid_omega.nodes == (27,)
    assert grid_q.covers_q and not grid_omega.covers_q
    grid_q.check_resolution(spec)


def test_coarse_grid_is_rejected():
    spec = _spec(0.1)
    coarse = th.Grid((0.0, 0.0), (1.0, 1.0), (11, 17), covers_q=True)
    with pytest.raises(th.ResolutionError) as err:
        th.assemble_transformed(spec, coarse)
    assert err.value.required_nodes == [27]


def test_columns_are_contiguous():
    grid = th.Grid((0.0, 0.0), (1.0, 1.0), (4, 5), covers_q=True)
    columns = grid.column_index()
    assert np.all(columns == np.repeat(np.arange(4), 5))
    assert np.allclose(grid.points[:5, 0], 0.0)


@pytest.mark.parametrize(
    "assemble",
    [
        th.assemble_original,
        th.assemble_transformed,
        th.assemble_simplified,
    ],
)
def test_q_operators_are_spd(assemble):
    spec = _spec(0.1)
    grid_q, _ = ladder_grids(spec)
    op = assemble(spec, grid_q)
    assert op.symmetry_defect() <= 1e-12
    assert op.is_spd()
    # the reaction term makes constants satisfy A 1 = M 1
    one = np.ones(op.size)
    assert np.allclose(op.matrix @ one, op.mass @ one, rtol=0, atol=1e-11)


def test_reduced_and_limit_are_spd():
    spec = _spec(0.1)
    _, grid_omega = ladder_grids(spec)
    reduced = th.assemble_reduced(spec, grid_omega)
    limit = th.assemble_limit(spec, grid_omega, np.sqrt(14), 4.0)
    for op in (reduced, limit):
        assert op.symmetry_defect() <= 1e-12
        assert op.is_spd()
    assert reduced.tag == "w_hat_eps"
    assert limit.tag == "w_hat"


def test_problem_needs_matching_grid():
    spec = _spec(0.1)
    grid_q, _ = ladder_grids(spec)
    with pytest.raises(ValueError):
        ReducedProblem(spec, grid_q)


def test_constant_forcing_gives_constant():
    spec = _spec(0.1)
    grid_q, grid_omega = ladder_grids(spec)
    op = th.assemble_original(spec, grid_q)
    w = th.solve(op, np.ones(grid_q.size))
    assert w.tag == "w_eps"
    assert np.max(np.abs(w.values - 1.0)) < 1e-6
    reduced = th.assemble_reduced(spec, grid_omega)
    w_hat = th.solve(reduced, np.ones(grid_omega.size), tol=1e-12)
    assert np.max(np.abs(w_hat.values - 1.0)) < 1e-7


def test_reduced_problem_converges_at_second_order():
    # K = 4 is flat, so -w'' + w = (1 + pi^2) cos(pi x) has w = cos(pi x)
    spec = _flat()
    errors = []
    for cells in (16, 32, 64):
        grid = th.Grid((0.0,), (1.0,), (cells + 1,))
        op = th.assemble_reduced(spec, grid)
        x = grid.points[:, 0]
        w = th.solve(op, (1 + np.pi**2) * np.cos(np.pi * x), tol=1e-12)
        errors.append(np.max(np.abs(w.values - np.cos(np.pi * x))))
    rates = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(rates > 1.8)


def test_discrete_maximum_principle():
    spec = _spec(0.1)
    _, grid_omega = ladder_grids(spec)
    op = th.assemble_reduced(spec, grid_omega)
    x = grid_omega.points[:, 0]
    w = th.solve(op, 1.0 + 0.5 * np.cos(2 * np.pi * x), tol=1e-12)
    assert w.values.min() > 0


def test_extend_and_average():
    spec = _spec(0.05)
    grid_q, grid_omega = ladder_grids(spec)
    u = th.Field.from_function(grid_omega, lambda p: np.cos(p[:, 0]))
    extended = th.extend_E(u, grid_q)
    assert np.allclose(
        extended.values.reshape(grid_omega.size, -1), u.values[:, None]
    )
    averaged = th.average_M(spec, extended, grid_q)
    K = spec.thickness()(grid_omega.points)
    assert np.allclose(averaged.values, K * u.values, atol=1e-12)


def test_vertical_mean_and_thickness_average():
    spec = _spec(0.05)
    grid_q, grid_omega = ladder_grids(spec)
    y = grid_q.points[:, -1]
    assert np.allclose(vertical_mean(grid_q, y), 0.5)
    f_hat = project_f_hat(spec, lambda p: p[..., -1], grid_omega)
    x = grid_omega.points
    expected = spec.epsilon * (spec.k2(x) - spec.k1(x)) / 2
    assert np.allclose(f_hat.values, expected, atol=1e-12)


@pytest.mark.parametrize("seed", [0, 42, 2024, 7385])
def test_rescaled_norms(seed):
    rng = np.random.default_rng(seed=seed)
    spec = _spec(0.05)
    grid_q, grid_omega = ladder_grids(spec)
    norms = th.RescaledNorms(spec, grid_q)
    assert norms.weight == pytest.approx(4.0)
    u = rng.standard_normal(grid_omega.size)
    assert norms.z_eps(th.extend_E(u, grid_q)) == pytest.approx(
        norms.z_eps_base(u), rel=1e-10
    )
    assert norms.z0(np.ones(grid_omega.size)) == pytest.approx(2.0)
    one = np.ones(grid_q.size)
    # constants carry no gradient energy
    assert norms.z_eps_half(one) == pytest.approx(norms.z_eps(one))
