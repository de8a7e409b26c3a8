import numpy as np
import pytest

import thinhomog as th
from thinhomog.quadrature import mean_value


@pytest.mark.parametrize(
    "text",
    [
        "const(2.5)",
        "trig(2.0; 1.0 sin 1; 0.5 cos 3)",
        "saw(2.0, 0.5, 0.2)",
    ],
)
def test_dsl_parses_back(text):
    profile = th.parse_profile(text, period=0.7)
    again = th.parse_profile(profile.dsl, period=0.7)
    assert again == profile
    assert hash(again) == hash(profile)


def test_trig_bounds():
    p = th.parse_profile("trig(2; 1 sin 1)")
    assert p.lower_bound == pytest.approx(1.0, abs=1e-10)
    assert p.upper_bound == pytest.approx(3.0, abs=1e-10)
    q = th.parse_profile("trig(4; 1 sin 1; 1 cos 1)")
    assert q.lower_bound == pytest.approx(4 - np.sqrt(2), abs=1e-10)
    assert q.upper_bound == pytest.approx(4 + np.sqrt(2), abs=1e-10)


def test_constant_profile():
    p = th.parse_profile("const(1.5)")
    assert p.is_constant
    assert p.lower_bound == p.upper_bound == 1.5
    assert np.all(p.derivative(np.linspace(0, 3, 7)) == 0)
    # a trig profile without amplitude is flat too
    assert th.parse_profile("trig(2; 0 sin 1)").is_constant


@pytest.mark.parametrize("seed", [0, 42, 2024, 7385])
@pytest.mark.parametrize(
    "text", ["trig(2; 1 sin 1; 0.3 cos 2)", "saw(2, 0.5, 0.3)"]
)
def test_derivative_matches_difference_quotient(seed, text):
    rng = np.random.default_rng(seed=seed)
    p = th.parse_profile(text, period=1.3)
    t = rng.uniform(-2, 2, size=50)
    step = 1e-6
    quotient = (p(t + step) - p(t - step)) / (2 * step)
    assert np.allclose(p.derivative(t), quotient, rtol=1e-6, atol=1e-6)


def test_periodicity():
    p = th.parse_profile("saw(1, 0.4, 0.25)", period=0.5)
    t = np.linspace(0, 1, 11)
    assert np.allclose(p(t), p(t + 0.5))
    assert p.lower_bound >= 1 - 0.4 - 1e-12
    assert p.upper_bound <= 1 + 0.4 + 1e-12


def test_on_respects_axes():
    p = th.parse_profile("trig(2; 1 sin 1)", axes=(0,))
    z = np.array([[0.25, 0.0], [0.25, 0.7]])
    assert np.allclose(p.on(z), 3.0)
    grad = p.gradient_on(z)
    assert np.allclose(grad[:, 1], 0.0)
    both = th.parse_profile("trig(2; 1 sin 1)")
    assert both.on(np.array([0.25, 0.0])) == pytest.approx(2.5)


def test_scaled():
    p = th.parse_profile("trig(2; 1 sin 1)")
    q = p.scaled(2.0)
    t = np.linspace(0, 1, 9)
    assert np.allclose(q(t), 2 * p(t))
    saw = th.parse_profile("saw(1, 0.5, 0.5)")
    with pytest.raises(ValueError):
        saw.scaled(-1.0)


@pytest.mark.parametrize(
    "text",
    [
        "wave(1)",
        "trig(2; 1 tan 1)",
        "const()",
        "saw(1, 0.5)",
        "saw(1, 0.5, 1.5)",
        "trig(2; 1 cos 0)",
        "trig(2; 1 sin 1; 0.5 sin 0)",
    ],
)
def test_malformed_dsl(text):
    with pytest.raises(th.ConfigError):
        th.parse_profile(text)


def test_zero_wavenumber_is_rejected():
    # a k = 0 term would be a hidden offset and break the exact mean
    with pytest.raises(ValueError):
        th.BoundaryProfile("trig", (2.0, (1.0, "cos", 0)))
    p = th.parse_profile("trig(2; 1 cos 1; 0.5 sin 3)")
    t = np.linspace(0.0, 1.0, 256, endpoint=False)
    assert mean_value(p) == pytest.approx(np.mean(p(t)), abs=1e-12)
