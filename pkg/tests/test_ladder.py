import numpy as np
import pytest

import thinhomog as th
from thinhomog.ladder import COLUMNS


def _cosine(pts):
    return 1.0 + np.cos(np.pi * pts[..., 0])


def _report(eps, eta, dist):
    return th.LadderReport(
        epsilon=eps, eta1=eta / 2, eta=eta, dist_original_transformed=dist,
        dist_transformed_simplified=dist, dist_simplified_reduced=dist,
        dist_total=dist, solver_iters=10,
    )


def test_flat_boundaries_collapse_the_ladder():
    spec = th.ThinDomainSpec(
        th.BaseDomain(), th.parse_profile("const(0.5)"),
        th.parse_profile("const(1.5)"), 0.5, 0.5, 0.1,
    )
    report = th.verify_ladder(spec, None, _cosine)
    # with K constant the three problems on Q share one matrix
    assert report.dist_original_transformed < 1e-12
    assert report.dist_transformed_simplified < 1e-12
    assert report.dist_total < 1e-6
    assert report.eta == 0.0
    assert report.ratio_total_over_eta == 0.0


def test_report_row_has_schema():
    row = _report(0.1, 0.5, 0.2).row()
    assert tuple(row) == COLUMNS
    assert row["ratio_total_over_eta"] == pytest.approx(0.2**2 / 0.5)
    assert row["out_of_hypothesis"] is False


def test_trend_accepts_converging_sweep():
    reports = [
        _report(0.1, 1.0, 0.5),
        _report(0.05, 0.7, 0.4),
        _report(0.025, 0.5, 0.33),
    ]
    assert th.ladder_trend(reports)
    assert th.ladder_trend(reports[:1])


def test_trend_rejects_stalled_sweep():
    growing = [_report(0.1, 1.0, 0.5), _report(0.05, 0.7, 0.6)]
    assert not th.ladder_trend(growing)
    # distance falls but much slower than eta^(1/2)
    slow = [_report(0.1, 1.0, 0.5), _report(0.05, 0.1, 0.49)]
    assert not th.ladder_trend(slow)
    # strictly decreasing yet stagnating near a positive floor
    stagnant = [
        _report(eps, 2 * np.pi, dist) for eps, dist in zip(
            (0.1, 0.05, 0.025, 0.0125), (0.11106, 0.11057, 0.11045, 0.11042)
        )
    ]
    assert not th.ladder_trend(stagnant)


def test_trend_ignores_eta():
    # eta is reported on its own; a sweep with constant eta can still decay
    reports = [_report(0.1, 1.0, 0.5), _report(0.05, 1.0, 0.4)]
    assert th.ladder_trend(reports)


def test_decay_order_is_the_loglog_slope():
    reports = [_report(e, 1.0, 3.0 * e**0.5) for e in (0.1, 0.05, 0.025)]
    assert th.decay_order(reports) == pytest.approx(0.5)
    assert np.isnan(th.decay_order(reports[:1]))
    zero = [_report(0.1, 1.0, 0.5), _report(0.05, 1.0, 0.0)]
    assert np.isnan(th.decay_order(zero))
