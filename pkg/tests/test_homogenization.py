import numpy as np
import pytest

import thinhomog as th
from thinhomog.homogenization import (
    common_period,
    limit_rhs,
    profile_sum,
    resolve_regime,
)


def _trig(text, period=1.0):
    return th.parse_profile(text, period=period)


G_SIN = "trig(2; 1 sin 1)"
G_COS = "trig(2; 1 cos 1)"


def _spec(alpha=0.5, beta=0.5, bottom_period=1.0, base=None):
    return th.ThinDomainSpec(
        base or th.BaseDomain(),
        _trig(G_SIN, bottom_period),
        _trig(G_COS),
        alpha,
        beta,
        0.1,
    )


def test_commensurate_closed_forms():
    p0 = th.p0_commensurate(_trig(G_SIN), _trig(G_COS))
    assert p0 == pytest.approx(np.sqrt(14), abs=1e-8)
    p0 = th.p0_commensurate(_trig(G_SIN), th.parse_profile("const(0)"))
    assert p0 == pytest.approx(np.sqrt(3), abs=1e-8)
    flat = th.p0_commensurate(
        th.parse_profile("const(1)"), th.parse_profile("const(2)")
    )
    assert flat == 3.0


def test_common_period():
    assert common_period(_trig(G_SIN, 1.0), _trig(G_COS, 2 / 3)) == (
        pytest.approx(2.0)
    )
    # integer ratio: the longer period is common
    assert common_period(_trig(G_SIN, 0.5), _trig(G_COS, 1.0)) == (
        pytest.approx(1.0)
    )


def test_unrecognizable_ratio_is_a_regime_error():
    g = _trig(G_SIN, 1.0)
    h = _trig(G_COS, 1.0 + 1e-7 * np.pi)
    with pytest.raises(th.RegimeError):
        th.p0_commensurate(g, h)


def test_incommensurate_matches_two_scale():
    g = _trig(G_SIN)
    h = _trig(G_COS, np.sqrt(2))
    p0, error = th.p0_incommensurate(g, h, t_max=2e4, weighted=True)
    assert error <= 1e-4
    assert p0 == pytest.approx(th.p0_two_scale(g, h), abs=1e-3)


def test_incommensurate_window_limits():
    g = _trig(G_SIN)
    h = _trig(G_COS, np.sqrt(2))
    with pytest.raises(ValueError):
        th.p0_incommensurate(g, h, t_max=100.0)
    with pytest.raises(th.AccuracyError) as err:
        th.p0_incommensurate(g, h, t_max=1e3 * np.sqrt(2), tol=1e-14)
    assert len(err.value.values) == 2


def test_two_scale_is_symmetric():
    g = _trig(G_SIN)
    h = _trig(G_COS, 0.3)
    assert th.p0_two_scale(g, h) == pytest.approx(
        th.p0_two_scale(h, g), rel=1e-10
    )


def test_cell_problem_matches_harmonic_mean():
    G = profile_sum(_trig(G_SIN), _trig(G_COS))
    sol = th.cell_problem(G)
    assert sol.a0.shape == (1, 1)
    assert sol.a0[0, 0] == pytest.approx(np.sqrt(14), abs=1e-6)
    assert sol.mean_residual < 1e-12
    assert sol.correctors[0].tag == "corrector"


def test_cell_problem_laminate():
    # G varies along z_0 only: harmonic mean across, arithmetic mean along
    def G(pts):
        return 2.0 + np.sin(2 * np.pi * pts[..., 0])

    sol = th.cell_problem(G, cell=(1.0, 1.0))
    assert sol.a0[0, 0] == pytest.approx(np.sqrt(3), abs=1e-3)
    assert sol.a0[1, 1] == pytest.approx(2.0, abs=1e-6)
    assert np.all(np.linalg.eigvalsh(sol.a0) > 0)


def test_cell_problem_rejects_degenerate_coefficient():
    with pytest.raises(th.AssemblyError):
        th.cell_problem(lambda pts: np.sin(2 * np.pi * pts[..., 0]))


def test_reiterated_matches_two_scale():
    g, h = _trig(G_SIN), _trig(G_COS)
    model = th.reiterated_A0(g, h, dim=1)
    assert model.regime == "different-order"
    assert model.p0 == pytest.approx(th.p0_two_scale(g, h), abs=1e-6)


def test_truncated_boxes_reproduce_periodic_cell():
    g, h = _trig(G_SIN), _trig(G_COS)
    model = th.quasiperiodic_A0(g, h, box_sizes=(1, 2, 4))
    cell = th.cell_problem(profile_sum(g, h), nodes=64)
    assert model.p0 == pytest.approx(cell.a0[0, 0], abs=1e-6)
    assert len(model.details["deviations"]) == 2
    with pytest.raises(ValueError):
        th.quasiperiodic_A0(g, h, box_sizes=(4, 2))


def test_diophantine_check():
    good = th.diophantine_check(th.DiophantineParams(1.0, np.sqrt(2)))
    assert good.passed
    assert good.min_margin >= 0.1
    bad = th.diophantine_check(th.DiophantineParams(1.0, 2.0))
    assert not bad.passed
    assert bad.min_margin == 0.0
    assert bad.worst_pair == (2, -1)
    with pytest.raises(ValueError):
        th.DiophantineParams(1.0, 2.0, N=10)


def test_resolve_regime():
    assert resolve_regime(_spec()) == "same-order-commensurate"
    assert resolve_regime(_spec(), commensurate=False) == (
        "same-order-incommensurate"
    )
    assert resolve_regime(_spec(alpha=0.25)) == "different-order"
    square = th.BaseDomain((0.0, 0.0), (1.0, 1.0))
    assert resolve_regime(_spec(base=square)) == "nD-periodic-cell"
    assert resolve_regime(_spec(alpha=0.25, base=square)) == (
        "nD-reiterated"
    )
    assert resolve_regime(_spec(base=square), commensurate=False) == (
        "nD-quasiperiodic-truncated"
    )


def test_homogenize_dispatch():
    model = th.homogenize(_spec())
    assert model.regime == "same-order-commensurate"
    assert model.p0 == pytest.approx(np.sqrt(14), abs=1e-8)
    assert model.weight == pytest.approx(4.0)
    assert model.within_bounds(2.0, 6.0)
    assert not model.within_bounds(4.0, 6.0)
    row = model.row()
    assert row["regime"] == "same-order-commensurate"
    assert row["p0"] == pytest.approx(np.sqrt(14), abs=1e-8)


def test_homogenized_model_validation():
    with pytest.raises(ValueError):
        th.HomogenizedModel("periodic", 1.0, 1.0)
    model = th.HomogenizedModel("nD-periodic-cell", np.eye(2), 2.0)
    with pytest.raises(AttributeError):
        model.p0
    assert set(model.row()) >= {"a0_11", "a0_12", "a0_22"}


def test_limit_rhs_of_base_forcing():
    spec = _spec()
    grid = th.Grid((0.0,), (1.0,), (17,))
    rhs = limit_rhs(spec, lambda x: 1.0 + x[..., 0], grid, on_base=True)
    assert np.allclose(rhs.values, 1.0 + grid.points[:, 0])
    assert np.allclose(rhs.meta["f0"], 4.0 * rhs.values)


def test_quasiperiodic_boxes_approach_the_ergodic_mean():
    g = _trig(G_SIN)
    h = _trig(G_COS, np.sqrt(2))
    model = th.quasiperiodic_A0(g, h, box_sizes=(8, 16, 32), tol=2e-2)
    assert model.regime == "same-order-incommensurate"
    p0, _ = th.p0_incommensurate(g, h, t_max=2e4, weighted=True)
    assert model.p0 == pytest.approx(p0, abs=2e-2)
    assert model.weight == pytest.approx(4.0)


def test_reiterated_is_unchanged_by_swapping_scales():
    g, h = _trig(G_SIN), _trig(G_COS, 0.5)
    forward = th.reiterated_A0(g, h, dim=1)
    backward = th.reiterated_A0(h, g, dim=1)
    assert forward.p0 == pytest.approx(backward.p0, abs=1e-6)
    assert forward.weight == pytest.approx(backward.weight)
    flat = th.reiterated_A0(
        th.parse_profile("const(1)"), th.parse_profile("const(2)")
    )
    assert flat.p0 == pytest.approx(3.0)


@pytest.mark.parametrize("c", [0.5, 3.0])
def test_p0_scales_with_the_profiles(c):
    g, h = _trig(G_SIN), _trig(G_COS)
    p0 = th.p0_commensurate(g, h)
    assert th.p0_commensurate(g.scaled(c), h.scaled(c)) == pytest.approx(
        c * p0, rel=1e-8
    )
    assert th.p0_two_scale(g.scaled(c), h.scaled(c)) == pytest.approx(
        c * th.p0_two_scale(g, h), rel=1e-8
    )


def test_p0_is_symmetric_in_the_boundaries():
    g, h = _trig(G_SIN), _trig(G_COS, 2.0)
    assert th.p0_commensurate(g, h) == pytest.approx(
        th.p0_commensurate(h, g), rel=1e-10
    )
    swapped = th.ThinDomainSpec(
        th.BaseDomain(), _trig(G_COS), _trig(G_SIN), 0.5, 0.5, 0.1,
    )
    model, other = th.homogenize(_spec()), th.homogenize(swapped)
    assert model.p0 == pytest.approx(other.p0, rel=1e-10)
    assert model.weight == pytest.approx(other.weight)


def test_limit_rhs_of_horizontal_forcing():
    spec = _spec()
    grid = th.Grid((0.0,), (1.0,), (17,))
    x = grid.points[:, 0]
    rhs = limit_rhs(spec, lambda p: np.cos(np.pi * p[..., 0]), grid)
    assert np.allclose(rhs.values, np.cos(np.pi * x), atol=1e-12)
    assert np.allclose(rhs.meta["f0"], 4.0 * np.cos(np.pi * x), atol=1e-12)


def test_limit_rhs_in_the_thin_coordinate():
    # f = (y / eps)^2: f0 = (M(g^3) + M(h^3)) / 3 = 22 / 3
    spec = _spec()
    grid = th.Grid((0.0,), (1.0,), (9,))

    def family(eps):
        return lambda p: (p[..., 1] / eps) ** 2

    rhs = limit_rhs(spec, None, grid, family=family)
    assert np.allclose(rhs.meta["f0"], 22.0 / 3.0, atol=1e-10)
    assert np.allclose(rhs.values, 11.0 / 6.0, atol=1e-10)


def test_limit_rhs_settles_along_the_family():
    # f = 1 + y with g = 3, h = 2 + sin: f0(eps) = 5 + 2.25 eps
    spec = th.ThinDomainSpec(
        th.BaseDomain(), _trig(G_SIN), th.parse_profile("const(3)"),
        0.5, 0.5, 0.1,
    )
    grid = th.Grid((0.0,), (1.0,), (9,))

    def f(p):
        return 1.0 + p[..., 1]

    direct = limit_rhs(spec, f, grid)
    assert np.allclose(direct.meta["f0"], 5.225, atol=1e-10)
    rhs = limit_rhs(spec, None, grid, family=lambda eps: f)
    assert rhs.meta["epsilon"] < 1e-3
    assert np.all(np.abs(rhs.meta["f0"] - 5.0) < 2e-3)
    assert np.allclose(rhs.values, rhs.meta["f0"] / 5.0)
    with pytest.raises(th.AccuracyError) as err:
        limit_rhs(spec, None, grid, family=lambda eps: f, halvings=2)
    assert len(err.value.values) == 2
