"""
Homogenized coefficients of the thin-domain family.

For base dimension 1 the limit coefficient p0 is a harmonic-type mean of
G = g + h; which mean depends on the oscillation regime:

    same order, commensurate periods    harmonic mean over the common period
    same order, incommensurate periods  ergodic (time) average of 1/G
    different orders                    double average of 1/(g(y) + h(z))

For base dimension 2 the coefficient is a matrix A0 obtained from periodic
cell problems, from truncated boxes (quasi-periodic G) or in two stages
(different orders).
"""

from dataclasses import dataclass, field
from fractions import Fraction
import logging

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from .constants import (
    ERGODIC_TOL,
    LIMIT_RHS_GAUSS,
    LIMIT_RHS_HALVINGS,
    LIMIT_RHS_SAMPLES,
    LIMIT_RHS_TOL,
    QUAD_RTOL,
    RATIONAL_MAX_DENOMINATOR,
    RATIONAL_TOL,
    REITERATED_SAMPLES,
)
from .errors import AccuracyError, AssemblyError, RegimeError
from .grid import Field, Grid
from .quadrature import (
    dyadic_simpson,
    dyadic_simpson_2d,
    mean_value,
    mean_weight,
)
from .solvers import jacobi, pcg

logger = logging.getLogger(__name__)

REGIMES = (
    "same-order-commensurate",
    "same-order-incommensurate",
    "different-order",
    "nD-periodic-cell",
    "nD-quasiperiodic-truncated",
    "nD-reiterated",
)

# periodic cell systems are plain Laplacian-like; CG needs about one
# iteration per node in 1D
CELL_MAXITER_FACTOR = 1000
CELL_NODES = {1: 2048, 2: 64}
ERGODIC_POINTS_PER_PERIOD = 64


@dataclass
class HomogenizedModel:
    """
    The limit problem -(1/W) div(A0 grad u) + u = f_hat on omega.

    Attributes
    ----------
    regime : str
        One of ``REGIMES``.
    a0 : np.ndarray
        Symmetric positive definite (n, n) matrix; ``p0`` for n = 1.
    weight : float
        W = M(g) + M(h).
    error : float
        Error proxy of the averaging procedure (0 for exact quadratures).
    details : dict
        Quadrature depths, box deviations and similar diagnostics.

    """

    regime: str
    a0: np.ndarray
    weight: float
    error: float = 0.0
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"Unknown regime {self.regime!r}.")
        self.a0 = np.atleast_2d(np.asarray(self.a0, dtype=float))

    @property
    def p0(self):
        if self.a0.shape != (1, 1):
            raise AttributeError("p0 is defined for base dimension 1 only.")
        return float(self.a0[0, 0])

    @property
    def dim(self):
        return self.a0.shape[0]

    def within_bounds(self, lower, upper, tol=1e-8):
        """Eigenvalues of A0 inside [lower, upper] (the bounds of G)."""
        eig = np.linalg.eigvalsh(self.a0)
        return bool(eig.min() >= lower - tol and eig.max() <= upper + tol)

    def row(self):
        out = {"regime": self.regime}
        if self.dim == 1:
            out["p0"] = self.p0
        else:
            for i in range(self.dim):
                for j in range(i, self.dim):
                    out[f"a0_{i + 1}{j + 1}"] = float(self.a0[i, j])
        out["weight"] = self.weight
        out["error"] = self.error
        out["quadrature_points"] = int(self.details.get("points", 0))
        return out


@dataclass(frozen=True)
class DiophantineParams:
    """|n1 L1 + n2 L2| >= C / |n1 + n2|^s0 for 0 < |n1| + |n2| <= N."""

    L1: float
    L2: float
    s0: float = 2.0
    C: float = 0.1
    N: int = 10**4

    def __post_init__(self):
        if min(self.L1, self.L2, self.s0, self.C) <= 0:
            raise ValueError("Diophantine parameters must be positive.")
        if self.N < 10**3:
            raise ValueError("Diophantine search bound N must be >= 1000.")


@dataclass(frozen=True)
class DiophantineReport:
    min_margin: float
    worst_pair: tuple
    passed: bool
    pairs_checked: int


def diophantine_check(params):
    """
    Scan integer pairs of opposite sign for near-cancellations.

    The margin of a pair is |n1 L1 + n2 L2| |n1 + n2|^s0; pairs with
    n1 + n2 = 0 are skipped. The scan is symmetric under (n1, n2) ->
    (-n1, -n2), so only n1 > 0 > n2 is visited.

    Returns
    -------
    DiophantineReport

    """
    N = int(params.N)
    best, pair, checked = np.inf, (0, 0), 0
    for n1 in range(1, N):
        m = np.arange(1, N - n1 + 1)
        m = m[m != n1]
        if m.size == 0:
            continue
        margin = np.abs(n1 * params.L1 - m * params.L2) * np.abs(
            n1 - m
        ) ** params.s0
        checked += m.size
        k = int(np.argmin(margin))
        if margin[k] < best:
            best, pair = float(margin[k]), (n1, -int(m[k]))
    return DiophantineReport(best, pair, best >= params.C, checked)


def common_period(g, h):
    if g.is_constant:
        return h.period
    if h.is_constant:
        return g.period
    ratio = g.period / h.period
    frac = Fraction(ratio).limit_denominator(RATIONAL_MAX_DENOMINATOR)
    if abs(float(frac) - ratio) > RATIONAL_TOL * ratio:
        raise RegimeError(
            f"Period ratio {ratio!r} is not recognizably rational; use "
            "p0_incommensurate."
        )
    # L1 / L2 = p / q  =>  q L1 = p L2
    return frac.denominator * g.period


def _inverse_thickness(g, h):
    if g.lower_bound + h.lower_bound <= 0:
        raise ValueError("g + h must be bounded below by a positive number.")

    def fn(y):
        return 1.0 / (g(y) + h(y))

    return fn


def p0_commensurate(g, h, rtol=QUAD_RTOL):
    """
    Harmonic mean of g + h over their common period.

    Raises
    ------
    RegimeError
        If the period ratio is not rational within 1e-9 (denominators up
        to 1e6).

    """
    period = common_period(g, h)
    if g.is_constant and h.is_constant:
        return g.offset + h.offset
    integral, points = dyadic_simpson(
        _inverse_thickness(g, h), 0.0, period, rtol=rtol
    )
    logger.debug(f"p0_commensurate: {points} Simpson nodes over {period}.")
    return period / integral


def _bump(u):
    out = np.zeros_like(u)
    inside = (u > 0) & (u < 1)
    ui = u[inside]
    out[inside] = np.exp(-1.0 / (ui * (1.0 - ui)))
    return out


def ergodic_average(fn, t, min_period,
                    points_per_period=ERGODIC_POINTS_PER_PERIOD,
                    weighted=False):
    """
    Time average of ``fn`` over [0, t].

    With ``weighted`` the average is taken against the smooth bump
    exp(-1 / (s (1 - s))), s = y / t, which converges much faster for
    quasi-periodic integrands.
    """
    n = int(np.ceil(t / min_period * points_per_period))
    n += n % 2
    s = np.linspace(0.0, t, n + 1)
    values = fn(s)
    if weighted:
        w = _bump(s / t)
        return simpson(w * values, x=s) / simpson(w, x=s)
    return simpson(values, x=s) / t


def p0_incommensurate(g, h, t_max=None, weighted=False, tol=ERGODIC_TOL):
    """
    Ergodic mean of 1/(g + h) for rationally independent periods.

    Parameters
    ----------
    g, h : BoundaryProfile
    t_max : float, optional
        Largest averaging window; at least 1e3 times the longest period.
        Defaults to 2e4 times the longest period.
    weighted : bool
        Use the bump-weighted average.
    tol : float
        Bound on the error estimate |avg(t_max) - avg(t_max / 2)|.

    Returns
    -------
    p0 : float
    error : float
        The error estimate, transferred to p0.

    Raises
    ------
    AccuracyError
        If the estimate exceeds ``tol``; carries both partial values.

    """
    longest = max(g.period, h.period)
    shortest = min(g.period, h.period)
    if t_max is None:
        t_max = 2e4 * longest
    if t_max < 1e3 * longest:
        raise ValueError(
            "t_max must be at least 1e3 times the longest period."
        )
    if g.is_constant and h.is_constant:
        return g.offset + h.offset, 0.0
    fn = _inverse_thickness(g, h)
    half = ergodic_average(fn, t_max / 2, shortest, weighted=weighted)
    full = ergodic_average(fn, t_max, shortest, weighted=weighted)
    p_half, p_full = 1.0 / half, 1.0 / full
    error = abs(p_full - p_half)
    if error > tol:
        raise AccuracyError(
            f"Ergodic average not converged at T={t_max}: {p_half:.8f} "
            f"vs {p_full:.8f}.",
            (p_half, p_full),
        )
    return p_full, error


def p0_two_scale(g, h, rtol=QUAD_RTOL):
    """Reciprocal of the double average of 1/(g(y) + h(z))."""
    if g.lower_bound + h.lower_bound <= 0:
        raise ValueError("g + h must be bounded below by a positive number.")
    if g.is_constant and h.is_constant:
        return g.offset + h.offset
    integral, points = dyadic_simpson_2d(
        lambda y, z: 1.0 / (g(y) + h(z)),
        ((0.0, g.period), (0.0, h.period)),
        rtol=rtol,
    )
    logger.debug(f"p0_two_scale: {points} tensor Simpson nodes.")
    return g.period * h.period / integral


@dataclass
class CellProblemSolution:
    """
    Correctors X^i on the periodicity cell and the averaged matrix A0.

    Periodicity is built into the node numbering of the periodic grid;
    ``mean_residual`` is the largest cell mean of a corrector.
    """

    correctors: list
    a0: np.ndarray
    grid: Grid
    iterations: int
    mean_residual: float


def _as_coefficient(G, n):
    def coefficient(pts):
        values = np.asarray(G(pts), dtype=float)
        if values.ndim == 2:
            return values
        return values.reshape(pts.shape[:-1] + (n, n))

    return coefficient


def cell_problem(G, cell=None, nodes=None, lower=None, tol=1e-12):
    """
    Solve the periodic cell problems -div(G grad(X^i - z_i)) = 0.

    Parameters
    ----------
    G : callable
        Maps points (..., n) to scalars (...) or symmetric matrices
        (..., n, n).
    cell : tuple of float, optional
        Cell lengths; the unit cell by default.
    nodes : int or tuple of int, optional
        Distinct nodes per axis.
    lower : tuple of float, optional
        Lower cell corner.
    tol : float
        CG tolerance.

    Returns
    -------
    CellProblemSolution

    Raises
    ------
    AssemblyError
        If G is not bounded below by a positive number at the quadrature
        points, or the averaged matrix is not positive definite.

    """
    cell = (1.0,) if cell is None else tuple(float(c) for c in cell)
    n = len(cell)
    if nodes is None:
        nodes = CELL_NODES[n]
    if np.isscalar(nodes):
        nodes = (int(nodes),) * n
    lower = (0.0,) * n if lower is None else tuple(lower)
    upper = tuple(a + c for a, c in zip(lower, cell))
    grid = Grid(lower, upper, tuple(nodes), periodic=True)
    coefficient = _as_coefficient(G, n)

    pts = grid.quadrature[0]
    coef = coefficient(pts)
    smallest = (
        coef.min() if coef.ndim == 2 else np.linalg.eigvalsh(coef).min()
    )
    if not smallest > 0:
        raise AssemblyError(
            "Cell coefficient is degenerate (not bounded below by a "
            "positive number)."
        )

    def column(i):
        if coef.ndim == 2:
            out = np.zeros(coef.shape + (n,))
            out[..., i] = coef
            return out
        return coef[..., :, i]

    matrix = grid.assemble(lambda p: coef)
    precond = jacobi(matrix)
    volume = float(np.prod(cell))
    correctors, iterations = [], 0
    a0 = np.zeros((n, n))
    mean_residual = 0.0
    for j in range(n):
        flux_j = column(j)
        b = grid.load(lambda p: flux_j)
        b -= b.mean()
        x, its = pcg(matrix, b, rtol=tol, preconditioner=precond,
                     maxiter_factor=CELL_MAXITER_FACTOR)
        iterations += its
        x -= x.mean()
        mean_residual = max(mean_residual, abs(x.mean()))
        grad = grid.gradient_at_quadrature(x)
        if coef.ndim == 2:
            flux = flux_j - coef[..., None] * grad
        else:
            flux = flux_j - np.einsum("eqkl,eql->eqk", coef, grad)
        for i in range(n):
            a0[i, j] = grid.integrate(flux[..., i]) / volume
        correctors.append(Field(grid, x, "corrector", {"index": j}))
    a0 = 0.5 * (a0 + a0.T)
    if np.linalg.eigvalsh(a0).min() <= 0:
        raise AssemblyError("Averaged cell matrix is not positive definite.")
    return CellProblemSolution(correctors, a0, grid, iterations,
                               mean_residual)


def profile_sum(g, h):
    def G(pts):
        return g.on(pts) + h.on(pts)

    return G


def quasiperiodic_A0(g, h, box_sizes=(8, 16, 32), dim=1,
                     cells_per_unit=64, weight=None, tol=ERGODIC_TOL):
    """
    A0 for a quasi-periodic G = g + h by periodic truncation.

    The cell problem is solved on the boxes [-L, L]^n for every L in
    ``box_sizes`` with periodic closure.

    Returns
    -------
    HomogenizedModel
        Largest-box value; ``error`` is the last inter-box deviation and
        ``details["deviations"]`` the whole sequence.

    Raises
    ------
    AccuracyError
        If the last inter-box deviation exceeds ``tol`` and is not smaller
        than the first.

    """
    box_sizes = [float(L) for L in box_sizes]
    if any(b <= a for a, b in zip(box_sizes, box_sizes[1:])):
        raise ValueError("box_sizes must be increasing.")
    G = profile_sum(g, h)
    values = []
    for L in box_sizes:
        nodes = int(np.ceil(2 * L * cells_per_unit))
        sol = cell_problem(G, cell=(2 * L,) * dim, nodes=nodes,
                           lower=(-L,) * dim)
        values.append(sol.a0)
        logger.info(f"quasi-periodic box L={L}: A0 diag "
                    f"{np.diag(sol.a0).round(8).tolist()}")
    deviations = [
        float(np.abs(b - a).max()) for a, b in zip(values, values[1:])
    ]
    if len(deviations) > 1 and deviations[-1] > tol:
        if deviations[-1] >= deviations[0]:
            raise AccuracyError(
                f"Box deviations {deviations} do not decrease.",
                [v.tolist() for v in values],
            )
    if weight is None:
        weight = mean_value(g) + mean_value(h)
    return HomogenizedModel(
        "nD-quasiperiodic-truncated" if dim > 1
        else "same-order-incommensurate",
        values[-1],
        weight,
        deviations[-1] if deviations else 0.0,
        {"deviations": deviations, "box_sizes": box_sizes},
    )


def reiterated_A0(outer, inner, dim=1, samples=REITERATED_SAMPLES,
                  nodes=None, weight=None):
    """
    Two-stage homogenization for boundaries oscillating at different
    orders.

    Stage 1 freezes the slow variable t and homogenizes G = outer(t) +
    inner(z) in the fast variable z at ``samples`` points of one period of
    ``outer``. A1 depends on t only through s = outer(t), so the samples
    define a cubic spline B with A1(t) = B(outer(t)). Stage 2 homogenizes
    A1 over the cell of ``outer``.

    Parameters
    ----------
    outer : BoundaryProfile
        The profile with the slower scale (smaller exponent).
    inner : BoundaryProfile
        The profile with the faster scale.

    Returns
    -------
    HomogenizedModel

    """
    t = outer.period * np.arange(samples) / samples
    s = np.unique(np.round(outer(t), 12))
    stage1 = []
    for value in s:
        sol = cell_problem(
            lambda p, v=value: v + inner.on(p),
            cell=(inner.period,) * dim,
            nodes=nodes,
        )
        stage1.append(sol.a0)
    stage1 = np.array(stage1)
    if s.size == 1:
        spline = None
    else:
        spline = CubicSpline(s, stage1, axis=0)

    def A1(pts):
        level = outer.on(pts)
        if spline is None:
            out = np.broadcast_to(stage1[0], level.shape + (dim, dim))
        else:
            out = spline(level)
        return np.ascontiguousarray(out)

    if outer.is_constant:
        a0 = stage1[0]
    else:
        a0 = cell_problem(A1, cell=(outer.period,) * dim, nodes=nodes).a0
    if weight is None:
        weight = mean_value(outer) + mean_value(inner)
    return HomogenizedModel(
        "nD-reiterated" if dim > 1 else "different-order",
        a0,
        weight,
        0.0,
        {"stage1_samples": int(s.size), "A1": stage1},
    )


def _phase_values(profile, dim, samples):
    """Values of a profile on a uniform lattice over one period cell."""
    m = samples if dim == 1 else max(4, int(round(samples ** (1 / dim))))
    t = np.arange(m) * profile.period / m
    lattice = np.stack(np.meshgrid(*([t] * dim), indexing="ij"), axis=-1)
    return profile.on(lattice.reshape(-1, dim))


def _phase_average(spec, f, x, epsilon, samples=LIMIT_RHS_SAMPLES,
                   gauss=LIMIT_RHS_GAUSS):
    """
    Mean over boundary phases of (1 / eps) int_{-eps h}^{eps g} f(x, y) dy.

    The integral splits at y = 0, so the two profiles are averaged
    independently and the result does not depend on how their phases are
    coupled.
    """
    nodes, weights = np.polynomial.legendre.leggauss(gauss)
    nodes, weights = 0.5 * (nodes + 1.0), 0.5 * weights
    total = np.zeros(x.shape[0])
    for profile, sign in ((spec.top, 1.0), (spec.bottom, -1.0)):
        values = _phase_values(profile, spec.dim, samples)
        y = sign * epsilon * values[:, None] * nodes[None, :]
        pts = np.concatenate(
            [
                np.broadcast_to(x[:, None, None, :],
                                (x.shape[0],) + y.shape + (x.shape[-1],)),
                np.broadcast_to(y, (x.shape[0],) + y.shape)[..., None],
            ],
            axis=-1,
        )
        column = np.asarray(f(pts), dtype=float) @ weights
        total += np.mean(values[None, :] * column, axis=1)
    return total


def limit_rhs(spec, f, grid, on_base=False, family=None, tol=LIMIT_RHS_TOL,
              halvings=LIMIT_RHS_HALVINGS):
    """
    Right-hand side f_hat = f0 / W of the limit problem on omega.

    f0 is the weak limit of M_eps f = K f_hat: the thickness average is
    taken with the boundaries in every phase and averaged, which removes
    the oscillation. For a y-independent f this gives f0 = W f and
    f_hat = f.

    Parameters
    ----------
    spec : ThinDomainSpec
    f : callable
        Function of thin-domain points (..., n + 1), or with ``on_base`` a
        function of base-domain points (..., n). Ignored when ``family`` is
        given.
    grid : Grid
        Grid over omega.
    family : callable, optional
        Maps eps to the forcing of that member of the family. eps is then
        halved from ``spec.epsilon`` until two consecutive values of f0
        agree within ``tol``.

    Returns
    -------
    Field
        f_hat, with f0 and the eps it was taken at in ``meta``.

    Raises
    ------
    AccuracyError
        If the eps-sweep of ``family`` does not settle within ``halvings``
        halvings.

    """
    weight = mean_weight(spec)
    x = grid.points
    if on_base:
        values = np.asarray(f(x), dtype=float)
        return Field(grid, values, "rhs",
                     {"f0": weight * values, "epsilon": 0.0})
    eps = spec.epsilon
    if family is None:
        f0 = _phase_average(spec, f, x, eps)
    else:
        f0 = _phase_average(spec, family(eps), x, eps)
        changes = []
        for _ in range(halvings):
            eps = eps / 2
            nxt = _phase_average(spec, family(eps), x, eps)
            changes.append(float(np.max(np.abs(nxt - f0))))
            f0 = nxt
            if changes[-1] <= tol:
                break
        else:
            raise AccuracyError(
                f"The limit load did not settle within {tol:g} down to "
                f"eps={eps:g}.",
                changes,
            )
        logger.debug(f"Limit load settled at eps={eps:g}.")
    return Field(grid, f0 / weight, "rhs", {"f0": f0, "epsilon": eps})


def _same_order(spec):
    return abs(spec.alpha - spec.beta) <= 1e-12


def resolve_regime(spec, commensurate=None):
    """
    Regime of ``spec`` from the exponents, the commensurability (declared,
    or inferred by rational reconstruction) and the base dimension.
    """
    n = spec.dim
    if not _same_order(spec):
        return "different-order" if n == 1 else "nD-reiterated"
    if commensurate is None:
        try:
            common_period(spec.top, spec.bottom)
            commensurate = True
        except RegimeError:
            commensurate = False
    if n == 1:
        return ("same-order-commensurate" if commensurate
                else "same-order-incommensurate")
    return ("nD-periodic-cell" if commensurate
            else "nD-quasiperiodic-truncated")


def homogenize(spec, regime=None, commensurate=None, **kwargs):
    """
    Homogenized model of ``spec``, choosing the regime from the exponents,
    the commensurability declaration and the base dimension.

    Parameters
    ----------
    spec : ThinDomainSpec
    regime : str, optional
        Force one of ``REGIMES``.
    commensurate : bool, optional
        Declared commensurability of the periods; inferred by rational
        reconstruction when omitted.
    **kwargs
        Passed to the regime's method (``t_max``, ``box_sizes``,
        ``samples``, ``nodes``, ...).

    Returns
    -------
    HomogenizedModel

    """
    g, h, n = spec.top, spec.bottom, spec.dim
    weight = mean_weight(spec)
    if regime is None:
        regime = resolve_regime(spec, commensurate)
    logger.info(f"Homogenizing in regime {regime!r}.")

    if regime == "same-order-commensurate":
        p0 = p0_commensurate(g, h, **kwargs)
        return HomogenizedModel(regime, p0, weight)
    if regime == "same-order-incommensurate":
        p0, error = p0_incommensurate(g, h, **kwargs)
        return HomogenizedModel(regime, p0, weight, error)
    if regime == "different-order" and "samples" not in kwargs:
        p0 = p0_two_scale(g, h, **kwargs)
        return HomogenizedModel(regime, p0, weight)
    if regime in ("different-order", "nD-reiterated"):
        # the larger exponent oscillates faster
        if spec.beta > spec.alpha:
            outer, inner = h, g
        else:
            outer, inner = g, h
        return reiterated_A0(outer, inner, dim=n, weight=weight, **kwargs)
    if regime == "nD-periodic-cell":
        period = common_period(g, h)
        sol = cell_problem(profile_sum(g, h), cell=(period,) * n, **kwargs)
        return HomogenizedModel(regime, sol.a0, weight, 0.0,
                                {"iterations": sol.iterations})
    if regime == "nD-quasiperiodic-truncated":
        return quasiperiodic_A0(g, h, dim=n, weight=weight, **kwargs)
    raise ValueError(f"Unknown regime {regime!r}.")
