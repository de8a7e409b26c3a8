"""
Thin-domain geometry: the family R^eps, its thickness, the oscillation
magnitude eta(eps) and the coordinate maps L^eps and S^eps.

    R^eps   = {(x, y): x in omega, -eps k1(x) < y < eps k2(x)}
    R_a^eps = {(x, y): x in omega, 0 < y < eps K(x)},  K = k1 + k2
    Q       = omega x (0, 1)

with k1(x) = h(x / eps^alpha) (bottom) and k2(x) = g(x / eps^beta) (top).
"""

from dataclasses import dataclass, replace
import logging

import numpy as np
from scipy.optimize import minimize_scalar

from .constants import ETA_SAMPLES_PER_PERIOD
from .errors import DomainError
from .profiles import BoundaryProfile

logger = logging.getLogger(__name__)

_TOL = 1e-12


@dataclass(frozen=True)
class BaseDomain:
    """Axis-aligned box omega = prod [lower_i, upper_i], dimension 1 or 2."""

    lower: tuple = (0.0,)
    upper: tuple = (1.0,)

    def __post_init__(self):
        if len(self.lower) != len(self.upper) or len(self.lower) not in (1, 2):
            raise DomainError("Base domain must be an interval or rectangle.")
        if any(b <= a for a, b in zip(self.lower, self.upper)):
            raise DomainError("Base domain bounds must satisfy lower < upper.")

    @property
    def dim(self):
        return len(self.lower)

    @property
    def extent(self):
        return tuple(b - a for a, b in zip(self.lower, self.upper))

    @property
    def volume(self):
        return float(np.prod(self.extent))

    def contains(self, x, tol=_TOL):
        x = np.asarray(x, dtype=float)
        lo = np.asarray(self.lower) - tol
        hi = np.asarray(self.upper) + tol
        return np.all((x >= lo) & (x <= hi), axis=-1)

    @classmethod
    def from_bounds(cls, bounds):
        """Build from ``[a, b]'' or ``[[a1, b1], [a2, b2]]''."""
        bounds = np.asarray(bounds, dtype=float)
        if bounds.ndim == 1:
            bounds = bounds[None]
        return cls(tuple(bounds[:, 0]), tuple(bounds[:, 1]))

    def to_bounds(self):
        if self.dim == 1:
            return [float(self.lower[0]), float(self.upper[0])]
        return [[float(a), float(b)] for a, b in zip(self.lower, self.upper)]


@dataclass(frozen=True)
class ThinDomainSpec:
    """
    Full geometry of one member of the thin-domain family.

    Parameters
    ----------
    base : BaseDomain
        The base domain omega.
    bottom : BoundaryProfile
        Bottom profile h, k1(x) = h(x / eps^alpha).
    top : BoundaryProfile
        Top profile g, k2(x) = g(x / eps^beta).
    alpha, beta : float
        Scale exponents, strictly inside (0, 1) unless
        ``out_of_hypothesis'' is set.
    epsilon : float
        Thickness parameter.
    out_of_hypothesis : bool
        Allows the resonant exponent 1 (weak oscillation fails); used only
        as a negative control.

    """

    base: BaseDomain
    bottom: BoundaryProfile
    top: BoundaryProfile
    alpha: float
    beta: float
    epsilon: float
    out_of_hypothesis: bool = False

    def __post_init__(self):
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if self.out_of_hypothesis:
                if not 0 < value <= 1:
                    raise DomainError(f"{name} must lie in (0, 1].")
            elif not 0 < value < 1:
                raise DomainError(
                    f"{name} = {value} must lie in (0, 1) for weakly "
                    "oscillating boundaries."
                )
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive.")
        if self.bottom.lower_bound < 0:
            raise DomainError("Bottom profile h must be nonnegative.")
        if self.top.lower_bound <= 0:
            raise DomainError("Top profile g must be strictly positive.")
        if self.out_of_hypothesis:
            logger.warning(
                "Spec with alpha=%s, beta=%s is outside the weak "
                "oscillation hypothesis.", self.alpha, self.beta
            )

    @property
    def dim(self):
        return self.base.dim

    @property
    def thickness_bounds(self):
        """(g0 + h0, g1 + h1)."""
        return (
            self.top.lower_bound + self.bottom.lower_bound,
            self.top.upper_bound + self.bottom.upper_bound,
        )

    @property
    def bottom_scale(self):
        return self.epsilon**self.alpha

    @property
    def top_scale(self):
        return self.epsilon**self.beta

    @property
    def shortest_period(self):
        """Shortest oscillation period in x-units (inf if both are flat)."""
        periods = []
        if not self.bottom.is_constant:
            periods.append(self.bottom.period * self.bottom_scale)
        if not self.top.is_constant:
            periods.append(self.top.period * self.top_scale)
        return min(periods) if periods else np.inf

    def with_epsilon(self, epsilon):
        return replace(self, epsilon=float(epsilon))

    def k1(self, x):
        x = np.asarray(x, dtype=float)
        return self.bottom.on(x / self.bottom_scale)

    def k2(self, x):
        x = np.asarray(x, dtype=float)
        return self.top.on(x / self.top_scale)

    def grad_k1(self, x):
        x = np.asarray(x, dtype=float)
        s = self.bottom_scale
        return self.bottom.gradient_on(x / s) / s

    def grad_k2(self, x):
        x = np.asarray(x, dtype=float)
        s = self.top_scale
        return self.top.gradient_on(x / s) / s

    def thickness(self):
        return OscillatingThickness(self)


class OscillatingThickness:
    """K_eps(x) = k1(x) + k2(x), equal to G_eps for the periodic family."""

    def __init__(self, spec):
        self.spec = spec

    def __call__(self, x):
        return self.spec.k1(x) + self.spec.k2(x)

    def gradient(self, x):
        return self.spec.grad_k1(x) + self.spec.grad_k2(x)


@dataclass(frozen=True)
class EtaReport:
    eta1: float
    eta2: float

    @property
    def eta(self):
        return self.eta1 + self.eta2


def _sup_abs_derivative(profile, lo, hi, scale, samples_per_period):
    """sup over t in [lo/scale, hi/scale] of |p'(t)|."""
    if profile.is_constant:
        return 0.0
    a, b = lo / scale, hi / scale
    n = int(np.ceil((b - a) / profile.period * samples_per_period)) + 1
    t = np.linspace(a, b, max(n, 2))
    d = np.abs(profile.derivative(t))
    i = int(np.argmax(d))
    step = t[1] - t[0]
    res = minimize_scalar(
        lambda s: -abs(float(profile.derivative(s))),
        bounds=(max(a, t[i] - step), min(b, t[i] + step)),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return max(float(d[i]), -float(res.fun))


def eta(spec, samples_per_period=ETA_SAMPLES_PER_PERIOD):
    """
    Oscillation magnitude of both boundaries.

    eta_i = max_j sup_x |eps d k_i / d x_j|, sampled with at least
    ``samples_per_period'' points per oscillation period and polished
    around the sampled maximum.

    Parameters
    ----------
    spec : ThinDomainSpec
    samples_per_period : int

    Returns
    -------
    EtaReport

    """
    values = []
    for profile, scale in (
        (spec.bottom, spec.bottom_scale),
        (spec.top, spec.top_scale),
    ):
        axes = profile._axes_for(spec.dim)
        best = 0.0
        for j in axes:
            sup = _sup_abs_derivative(
                profile,
                spec.base.lower[j],
                spec.base.upper[j],
                scale,
                samples_per_period,
            )
            best = max(best, spec.epsilon * sup / (scale * len(axes)))
        values.append(best)
    return EtaReport(*values)


def _split(spec, points):
    p = np.asarray(points, dtype=float)
    if p.shape[-1] != spec.dim + 1:
        raise DomainError(
            f"Points must have {spec.dim + 1} coordinates, got {p.shape[-1]}."
        )
    return p[..., :-1], p[..., -1]


def _check(ok, what):
    if not np.all(ok):
        raise DomainError(f"Point outside {what}.")


def map_L(spec, points):
    """
    L^eps: R_a^eps -> R^eps, (x, y) -> (x, y - eps k1(x)).

    Raises
    ------
    DomainError
        If a point lies outside the closed set R_a^eps.

    """
    x, y = _split(spec, points)
    top = spec.epsilon * spec.thickness()(x)
    tol = _TOL * np.maximum(1.0, top)
    _check(spec.base.contains(x) & (y >= -tol) & (y <= top + tol), "R_a^eps")
    out = np.array(points, dtype=float, copy=True)
    out[..., -1] = y - spec.epsilon * spec.k1(x)
    return out


def map_L_inverse(spec, points):
    """(L^eps)^-1: R^eps -> R_a^eps, (x, y) -> (x, y + eps k1(x))."""
    x, y = _split(spec, points)
    lo = -spec.epsilon * spec.k1(x)
    hi = spec.epsilon * spec.k2(x)
    tol = _TOL * np.maximum(1.0, hi - lo)
    _check(spec.base.contains(x) & (y >= lo - tol) & (y <= hi + tol), "R^eps")
    out = np.array(points, dtype=float, copy=True)
    out[..., -1] = y - lo
    return out


def jacobian_L(spec, points):
    """Jacobian matrices of L^eps, shape (..., n+1, n+1)."""
    x, _ = _split(spec, points)
    n = spec.dim
    jac = np.zeros(x.shape[:-1] + (n + 1, n + 1))
    jac[..., np.arange(n + 1), np.arange(n + 1)] = 1.0
    jac[..., n, :n] = -spec.epsilon * spec.grad_k1(x)
    return jac


def map_S(spec, points):
    """
    S^eps: Q -> R_a^eps, (x, y) -> (x, y eps K(x)).

    Raises
    ------
    DomainError
        If a point lies outside the closed cylinder Q.

    """
    x, y = _split(spec, points)
    _check(
        spec.base.contains(x) & (y >= -_TOL) & (y <= 1 + _TOL), "Q"
    )
    out = np.array(points, dtype=float, copy=True)
    out[..., -1] = y * spec.epsilon * spec.thickness()(x)
    return out


def map_S_inverse(spec, points):
    """(S^eps)^-1: R_a^eps -> Q."""
    x, y = _split(spec, points)
    top = spec.epsilon * spec.thickness()(x)
    tol = _TOL * np.maximum(1.0, top)
    _check(spec.base.contains(x) & (y >= -tol) & (y <= top + tol), "R_a^eps")
    out = np.array(points, dtype=float, copy=True)
    out[..., -1] = y / top
    return out
