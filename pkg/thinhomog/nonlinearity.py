"""
Dissipative reaction terms f(s).

Inside the window |s| <= w a nonlinearity is the polynomial
p(s) = c0 + c1 s + c2 s^2 + c3 s^3. Outside, with sigma = sign(s) and
d = s - sigma w, it continues as

    f(s) = p(sigma w) + p'(sigma w) d
           + p''(sigma w) tau^2 (exp(-|d|/tau) - 1 + |d|/tau)

which is C^2 across the window edge, has bounded f' and f'', and grows
linearly with slope p'(sigma w) + sigma p''(sigma w) tau.
"""

import re

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq

from .constants import CLAMP_WINDOW
from .errors import ConfigError

_CALL = re.compile(r"^\s*(cubic|zero)\s*\((.*)\)\s*$")
_TAU = 1.0
_SCAN_POINTS = 20001


class Nonlinearity:
    """
    A cubic reaction term with exponential tails.

    Parameters
    ----------
    coefficients : tuple of float
        (c0, c1, c2, c3); c3 < 0 unless all coefficients vanish.
    window : float
        Half-width w of the polynomial window.
    delta : float
        Dissipativity margin of the certificate, f(s) s <= -delta s^2 for
        |s| >= s_star.

    """

    def __init__(self, coefficients=(0.0, 0.0, 0.0, 0.0), window=CLAMP_WINDOW,
                 delta=1.0):
        coefficients = tuple(float(c) for c in coefficients)
        if len(coefficients) != 4:
            raise ValueError("A cubic needs four coefficients.")
        self.coefficients = coefficients
        self.is_zero = not any(coefficients)
        if not self.is_zero and not coefficients[3] < 0:
            raise ValueError("The cubic coefficient must be negative.")
        self.window = float(window)
        self.delta = float(delta)
        self.poly = Polynomial(coefficients)
        self.dpoly = self.poly.deriv()
        self.ddpoly = self.poly.deriv(2)
        self.ipoly = self.poly.integ()
        for sigma in (1, -1):
            if not self.is_zero and self.tail_slope(sigma) >= 0:
                raise ValueError(
                    "Tail slope is not negative; f is not dissipative."
                )
        self.s_star = self._certificate()

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def cubic(cls, c0, c1, c2, c3, **kwargs):
        return cls((c0, c1, c2, c3), **kwargs)

    def __repr__(self):
        return f"Nonlinearity({self.dsl!r})"

    @property
    def dsl(self):
        if self.is_zero:
            return "zero()"
        return "cubic({})".format(
            ", ".join(repr(c) for c in self.coefficients)
        )

    def tail_slope(self, sigma):
        edge = sigma * self.window
        return float(self.dpoly(edge) + sigma * self.ddpoly(edge) * _TAU)

    def _split(self, s):
        s = np.asarray(s, dtype=float)
        sigma = np.sign(s)
        edge = sigma * self.window
        d = s - edge
        inside = np.abs(s) <= self.window
        return s, sigma, edge, d, inside

    def __call__(self, s):
        s, sigma, edge, d, inside = self._split(s)
        a = np.abs(d)
        tail = (
            self.poly(edge)
            + self.dpoly(edge) * d
            + self.ddpoly(edge) * _TAU**2 * (np.exp(-a / _TAU) - 1 + a / _TAU)
        )
        return np.where(inside, self.poly(s), tail)

    def derivative(self, s):
        s, sigma, edge, d, inside = self._split(s)
        a = np.abs(d)
        tail = self.dpoly(edge) + sigma * self.ddpoly(edge) * _TAU * (
            1 - np.exp(-a / _TAU)
        )
        return np.where(inside, self.dpoly(s), tail)

    def second_derivative(self, s):
        s, sigma, edge, d, inside = self._split(s)
        tail = self.ddpoly(edge) * np.exp(-np.abs(d) / _TAU)
        return np.where(inside, self.ddpoly(s), tail)

    def primitive(self, s):
        """F(s) = int_0^s f, in closed form."""
        s, sigma, edge, d, inside = self._split(s)
        a = np.abs(d)
        tail = (
            self.ipoly(edge)
            + self.poly(edge) * d
            + self.dpoly(edge) * d**2 / 2
            + sigma * self.ddpoly(edge) * _TAU**2
            * (_TAU * (1 - np.exp(-a / _TAU)) - a + a**2 / (2 * _TAU))
        )
        return np.where(inside, self.ipoly(s), tail)

    def _certificate(self):
        """Smallest s_star with f(s) s <= -delta s^2 for |s| >= s_star."""
        if self.is_zero:
            return 0.0
        s = np.linspace(0.0, 10 * self.window, _SCAN_POINTS)[1:]
        star = 0.0
        for sigma in (1, -1):
            ratio = self(sigma * s) / (sigma * s) + self.delta
            bad = np.nonzero(ratio > 0)[0]
            if bad.size == 0:
                continue
            k = bad[-1]
            if k + 1 >= s.size:
                raise ValueError("No dissipativity window found.")
            root = brentq(
                lambda t: self(sigma * t) / (sigma * t) + self.delta,
                s[k], s[k + 1],
            )
            star = max(star, root)
        return float(star)

    def absorbing_bound(self, u0):
        """max(s_star, sup |u0|) + 1."""
        return max(self.s_star, float(np.max(np.abs(u0)))) + 1.0


def parse_nonlinearity(text, window=CLAMP_WINDOW):
    """
    Parse ``cubic(c0, c1, c2, c3)'' or ``zero()''.

    Raises
    ------
    ConfigError
        If the text is malformed or the cubic is not dissipative.

    """
    match = _CALL.match(str(text))
    if match is None:
        raise ConfigError([(None, f"malformed nonlinearity {text!r}")])
    name, body = match.groups()
    try:
        if name == "zero":
            if body.strip():
                raise ValueError("zero() takes no arguments")
            return Nonlinearity.zero()
        values = [float(v) for v in body.split(",")]
        return Nonlinearity(tuple(values), window=window)
    except ValueError as err:
        raise ConfigError(
            [(None, f"malformed nonlinearity {text!r}: {err}")]
        ) from err
