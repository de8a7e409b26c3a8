"""
Composite Simpson quadrature with dyadic refinement, and profile means.
"""

import numpy as np
from scipy.integrate import simpson

from .constants import QUAD_MAX_POINTS, QUAD_RTOL
from .errors import AccuracyError

_START = 64


def _converged(value, previous, rtol):
    return abs(value - previous) <= rtol * max(abs(value), 1e-300)


def dyadic_simpson(fn, a, b, rtol=QUAD_RTOL, max_points=QUAD_MAX_POINTS):
    """
    Integrate ``fn`` over [a, b], doubling the Simpson intervals until two
    successive values agree to ``rtol``.

    Returns
    -------
    value : float
    points : int
        Number of nodes of the accepted rule.

    Raises
    ------
    AccuracyError
        If ``max_points`` is exceeded first.

    """
    n = _START
    x = np.linspace(a, b, n + 1)
    previous = simpson(fn(x), x=x)
    values = [previous]
    while 2 * n + 1 <= max_points:
        n *= 2
        x = np.linspace(a, b, n + 1)
        value = simpson(fn(x), x=x)
        values.append(value)
        if _converged(value, previous, rtol):
            return float(value), n + 1
        previous = value
    raise AccuracyError(
        f"Simpson rule did not reach rtol={rtol} within {max_points} points.",
        values,
    )


def dyadic_simpson_2d(
    fn, box, rtol=QUAD_RTOL, max_points=QUAD_MAX_POINTS
):
    """
    Tensor-product Simpson rule on ``box = ((a, b), (c, d))``.

    ``fn(y, z)`` is evaluated on broadcast meshes. The total node count is
    capped at ``max_points``.
    """
    (a, b), (c, d) = box
    n = _START

    def rule(n):
        y = np.linspace(a, b, n + 1)
        z = np.linspace(c, d, n + 1)
        vals = fn(y[:, None], z[None, :])
        return simpson(simpson(vals, x=z, axis=1), x=y)

    previous = rule(n)
    values = [previous]
    while (2 * n + 1) ** 2 <= max_points:
        n *= 2
        value = rule(n)
        values.append(value)
        if _converged(value, previous, rtol):
            return float(value), (n + 1) ** 2
        previous = value
    raise AccuracyError(
        f"2D Simpson rule did not reach rtol={rtol} within {max_points} "
        "points.",
        values,
    )


def mean_value(profile, rtol=QUAD_RTOL):
    """
    Mean of a profile over one period.

    Exact (the offset) for constant and trig profiles; composite Simpson
    with dyadic refinement for the smoothed sawtooth.
    """
    if profile.kind in ("constant", "trig"):
        return profile.offset
    value, _ = dyadic_simpson(profile, 0.0, profile.period, rtol=rtol)
    return value / profile.period


def mean_weight(spec):
    """W = M(g) + M(h), the weight of the limit problem."""
    return mean_value(spec.top) + mean_value(spec.bottom)
