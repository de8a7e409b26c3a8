"""
Periodic boundary profiles and their text DSL.

A profile is a C^1 periodic function p of one variable. The DSL covers three
kinds, each with a closed-form derivative:

    const(c)
    trig(offset; a sin k; b cos k; ...)     a*sin(2*pi*k*y/L) + ...
    saw(offset, amplitude, smoothing)       smoothed sawtooth

On a base domain of dimension 2 a profile is evaluated on points z through
``on``: the mean of p over the profile's axes.
"""

import re

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConfigError

KINDS = ("constant", "trig", "saw")
_SAMPLES_PER_PERIOD = 4096

_CALL = re.compile(r"^\s*(const|trig|saw)\s*\((.*)\)\s*$")
_TERM = re.compile(r"^\s*([-+]?[0-9.eE+-]+)\s+(sin|cos)\s+([0-9]+)\s*$")


class BoundaryProfile:
    """
    A periodic boundary profile h or g.

    Parameters
    ----------
    kind : str
        One of ``constant'', ``trig'' or ``saw''.
    coefficients : tuple
        constant: (c,); trig: (offset, (a, "sin"|"cos", k), ...);
        saw: (offset, amplitude, smoothing).
    period : float
        Period L of the profile.
    axes : tuple of int, optional
        Coordinate axes the profile varies along when evaluated on a base
        domain of dimension 2. ``None'' means every axis.

    """

    def __init__(self, kind, coefficients, period=1.0, axes=None):
        if kind not in KINDS:
            raise ValueError(f"Unknown profile kind {kind!r}.")
        if not period > 0:
            raise ValueError("Profile period must be positive.")
        self.kind = kind
        self.coefficients = tuple(coefficients)
        self.period = float(period)
        self.axes = None if axes is None else tuple(int(a) for a in axes)
        if kind == "saw":
            _, amplitude, smoothing = self.coefficients
            if amplitude < 0 or not 0 < smoothing < 1:
                raise ValueError(
                    "saw needs amplitude >= 0 and smoothing in (0, 1)."
                )
        if kind == "trig" and any(k < 1 for _, _, k in self.coefficients[1:]):
            raise ValueError("trig wavenumbers must be positive integers.")
        self.lower_bound, self.upper_bound = self._bounds()

    def __repr__(self):
        return f"BoundaryProfile({self.dsl!r}, period={self.period})"

    def __eq__(self, other):
        if not isinstance(other, BoundaryProfile):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.coefficients == other.coefficients
            and self.period == other.period
            and self.axes == other.axes
        )

    def __hash__(self):
        return hash((self.kind, self.coefficients, self.period, self.axes))

    @property
    def offset(self):
        return float(self.coefficients[0])

    @property
    def is_constant(self):
        if self.kind == "constant":
            return True
        if self.kind == "trig":
            return all(a == 0 for a, _, _ in self.coefficients[1:])
        return self.coefficients[1] == 0

    @property
    def dsl(self):
        """The DSL text that parses back into this profile."""
        if self.kind == "constant":
            return f"const({_fmt(self.coefficients[0])})"
        if self.kind == "saw":
            return "saw({}, {}, {})".format(*map(_fmt, self.coefficients))
        parts = [_fmt(self.coefficients[0])]
        for a, fn, k in self.coefficients[1:]:
            parts.append(f"{_fmt(a)} {fn} {k}")
        return "trig(" + "; ".join(parts) + ")"

    def _theta(self, t):
        return 2 * np.pi * np.asarray(t, dtype=float) / self.period

    def __call__(self, t):
        """Evaluate p at the scalar coordinate(s) ``t``."""
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.full(t.shape, float(self.coefficients[0]))
        theta = self._theta(t)
        if self.kind == "trig":
            out = np.full(t.shape, float(self.coefficients[0]))
            for a, fn, k in self.coefficients[1:]:
                trig = np.sin if fn == "sin" else np.cos
                out = out + a * trig(k * theta)
            return out
        offset, amplitude, smoothing = self.coefficients
        r = 1.0 - smoothing
        core = np.arctan2(r * np.sin(theta), 1.0 - r * np.cos(theta))
        return offset + amplitude * core / np.arcsin(r)

    def derivative(self, t):
        """Closed-form derivative dp/dt."""
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.zeros(t.shape)
        theta = self._theta(t)
        dtheta = 2 * np.pi / self.period
        if self.kind == "trig":
            out = np.zeros(t.shape)
            for a, fn, k in self.coefficients[1:]:
                if fn == "sin":
                    out = out + a * k * np.cos(k * theta)
                else:
                    out = out - a * k * np.sin(k * theta)
            return out * dtheta
        _, amplitude, smoothing = self.coefficients
        r = 1.0 - smoothing
        dcore = (r * np.cos(theta) - r**2) / (
            1.0 - 2 * r * np.cos(theta) + r**2
        )
        return amplitude * dcore * dtheta / np.arcsin(r)

    def _axes_for(self, n):
        return tuple(range(n)) if self.axes is None else self.axes

    def on(self, z):
        """
        Evaluate the profile on base-domain points.

        Parameters
        ----------
        z : array_like
            Points of shape (..., n).

        Returns
        -------
        np.ndarray
            Values of shape (...).

        """
        z = np.asarray(z, dtype=float)
        axes = self._axes_for(z.shape[-1])
        return sum(self(z[..., a]) for a in axes) / len(axes)

    def gradient_on(self, z):
        """Gradient of ``on`` with shape (..., n)."""
        z = np.asarray(z, dtype=float)
        axes = self._axes_for(z.shape[-1])
        grad = np.zeros(z.shape)
        for a in axes:
            grad[..., a] = self.derivative(z[..., a]) / len(axes)
        return grad

    def scaled(self, c):
        """Return the profile c * p."""
        if self.kind == "constant":
            coeffs = (c * self.coefficients[0],)
        elif self.kind == "trig":
            coeffs = (c * self.coefficients[0],) + tuple(
                (c * a, fn, k) for a, fn, k in self.coefficients[1:]
            )
        else:
            if c < 0:
                raise ValueError("A saw profile can only be scaled by c >= 0.")
            offset, amplitude, smoothing = self.coefficients
            coeffs = (c * offset, c * amplitude, smoothing)
        return BoundaryProfile(self.kind, coeffs, self.period, self.axes)

    def _bounds(self):
        if self.kind == "constant":
            c = float(self.coefficients[0])
            return c, c
        if self.kind == "saw":
            offset, amplitude, _ = self.coefficients
            return offset - amplitude, offset + amplitude
        if self.is_constant:
            return self.offset, self.offset
        t = np.linspace(0, self.period, _SAMPLES_PER_PERIOD, endpoint=False)
        values = self(t)
        step = t[1] - t[0]
        lo = self._polish(t[np.argmin(values)], step, 1.0)
        hi = -self._polish(t[np.argmax(values)], step, -1.0)
        return min(lo, values.min()), max(hi, values.max())

    def _polish(self, t0, step, sign):
        res = minimize_scalar(
            lambda s: sign * float(self(s)),
            bounds=(t0 - step, t0 + step),
            method="bounded",
            options={"xatol": 1e-12},
        )
        return float(res.fun)


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def parse_profile(text, period=1.0, axes=None):
    """
    Parse a profile from the DSL.

    Parameters
    ----------
    text : str
        ``const(c)'', ``trig(offset; a sin k; ...)'' or
        ``saw(offset, amplitude, smoothing)''.
    period : float
        Period of the profile.
    axes : tuple of int, optional
        Axes the profile varies along (base dimension 2 only).

    Returns
    -------
    BoundaryProfile

    Raises
    ------
    ConfigError
        If the text is not valid DSL.

    """
    match = _CALL.match(str(text))
    if match is None:
        raise ConfigError([(None, f"malformed profile DSL {text!r}")])
    name, body = match.groups()
    try:
        if name == "const":
            return BoundaryProfile("constant", (float(body),), period, axes)
        if name == "saw":
            values = [float(v) for v in body.split(",")]
            if len(values) != 3:
                raise ValueError("saw takes offset, amplitude, smoothing")
            return BoundaryProfile("saw", tuple(values), period, axes)
        parts = body.split(";")
        coeffs = [float(parts[0])]
        for part in parts[1:]:
            term = _TERM.match(part)
            if term is None:
                raise ValueError(f"bad trig term {part.strip()!r}")
            a, fn, k = term.groups()
            coeffs.append((float(a), fn, int(k)))
        return BoundaryProfile("trig", tuple(coeffs), period, axes)
    except ValueError as err:
        raise ConfigError(
            [(None, f"malformed profile DSL {text!r}: {err}")]
        ) from err
