import numpy as np
import pytest

import thinhomog as th


def _cubic():
    return th.Nonlinearity.cubic(0, 2, 0, -1)


def test_polynomial_inside_window():
    nl = _cubic()
    s = np.linspace(-3, 3, 13)
    assert np.allclose(nl(s), 2 * s - s**3)
    assert np.allclose(nl.derivative(s), 2 - 3 * s**2)
    assert np.allclose(nl.second_derivative(s), -6 * s)


@pytest.mark.parametrize("edge", [-3.0, 3.0])
def test_tails_are_c2(edge):
    nl = _cubic()
    below, above = edge - 1e-9, edge + 1e-9
    for fn in (nl, nl.derivative, nl.second_derivative, nl.primitive):
        assert fn(below) == pytest.approx(fn(above), abs=1e-6)


def test_tail_slope():
    nl = _cubic()
    assert nl.tail_slope(1) == pytest.approx(-43.0)
    assert nl.tail_slope(-1) == pytest.approx(-43.0)
    far = np.array([40.0, 41.0])
    assert np.diff(nl(far))[0] == pytest.approx(-43.0, abs=1e-9)
    assert np.all(np.abs(nl.derivative(np.linspace(-50, 50, 101))) <= 43)


def test_dissipativity_certificate():
    nl = _cubic()
    assert nl.s_star == pytest.approx(np.sqrt(3), abs=1e-9)
    s = np.linspace(nl.s_star, 30, 500)
    assert np.all(nl(s) * s <= -(s**2) + 1e-9)
    assert np.all(nl(-s) * -s <= -(s**2) + 1e-9)
    assert nl.absorbing_bound(np.array([0.5, -2.5])) == pytest.approx(3.5)


@pytest.mark.parametrize("seed", [0, 42, 2024, 7385])
def test_primitive_integrates_f(seed):
    rng = np.random.default_rng(seed=seed)
    nl = th.Nonlinearity.cubic(0.5, 1, -0.5, -2)
    s = rng.uniform(-8, 8, size=40)
    step = 1e-6
    quotient = (nl.primitive(s + step) - nl.primitive(s - step)) / (2 * step)
    assert np.allclose(quotient, nl(s), rtol=1e-6, atol=1e-5)
    assert nl.primitive(0.0) == 0.0


def test_zero_nonlinearity():
    nl = th.Nonlinearity.zero()
    assert nl.is_zero
    assert nl.s_star == 0.0
    assert np.all(nl(np.linspace(-5, 5, 11)) == 0)
    assert nl.absorbing_bound(np.array([-2.0, 1.0])) == 3.0
    assert nl.dsl == "zero()"


def test_non_dissipative_cubics_are_rejected():
    with pytest.raises(ValueError):
        th.Nonlinearity((0, 1, 0, 1))
    with pytest.raises(ValueError):
        th.Nonlinearity((0, 10, 0, -1e-3))
    with pytest.raises(ValueError):
        th.Nonlinearity((0, 1, 0))


def test_parse_round_trip():
    nl = th.parse_nonlinearity("cubic(0, 2, 0, -1)")
    assert nl.coefficients == (0.0, 2.0, 0.0, -1.0)
    assert th.parse_nonlinearity(nl.dsl).coefficients == nl.coefficients
    assert th.parse_nonlinearity(" zero() ").is_zero


@pytest.mark.parametrize(
    "text",
    ["cubic(1, 2)", "cubic(0, 1, 0, 1)", "quintic(1)", "zero(1)", "cubic"],
)
def test_parse_errors(text):
    with pytest.raises(th.ConfigError):
        th.parse_nonlinearity(text)
