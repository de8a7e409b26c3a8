"""
Distances along the reduction ladder

    original (thin domain)  ->  transformed (flat bottom)
                            ->  simplified (no cross terms)
                            ->  reduced (thickness average on omega)

all measured in the eps-rescaled H1 norm of the thin domain.
"""

from dataclasses import asdict, dataclass
import logging

import numpy as np

from .constants import CG_RTOL, LADDER_MIN_ORDER
from .geometry import eta
from .grid import Field
from .operators import (
    OriginalProblem,
    ReducedProblem,
    RescaledNorms,
    SimplifiedProblem,
    TransformedProblem,
    extend_E,
    ladder_grids,
    physical_points,
    project_f_hat,
    solve,
)

logger = logging.getLogger(__name__)

COLUMNS = (
    "epsilon",
    "eta",
    "dist_original_transformed",
    "dist_transformed_simplified",
    "dist_simplified_reduced",
    "dist_total",
    "ratio_original_transformed_over_eta1",
    "ratio_transformed_simplified_over_eta",
    "ratio_total_over_eta",
    "solver_iters",
    "out_of_hypothesis",
)


def _ratio(dist, bound):
    if bound > 0:
        return dist**2 / bound
    # a flat boundary has no oscillation to bound; the distance is
    # discretization error only
    return 0.0


@dataclass(frozen=True)
class LadderReport:
    epsilon: float
    eta1: float
    eta: float
    dist_original_transformed: float
    dist_transformed_simplified: float
    dist_simplified_reduced: float
    dist_total: float
    solver_iters: int
    out_of_hypothesis: bool = False

    @property
    def ratio_original_transformed_over_eta1(self):
        return _ratio(self.dist_original_transformed, self.eta1)

    @property
    def ratio_transformed_simplified_over_eta(self):
        return _ratio(self.dist_transformed_simplified, self.eta)

    @property
    def ratio_total_over_eta(self):
        return _ratio(self.dist_total, self.eta)

    def row(self):
        values = asdict(self)
        return {c: values.get(c, getattr(self, c, None)) for c in COLUMNS}


def forcing_norm(spec, f, grid_q, norms=None):
    """|||f|||_{Z_eps} for a function of thin-domain points."""
    norms = RescaledNorms(spec, grid_q) if norms is None else norms
    return norms.z_eps(f(physical_points(spec, grid_q)))


def verify_ladder(spec, grids, f, tol=CG_RTOL, normalize=True,
                  logger=None):
    """
    Solve every problem of the ladder for the forcing ``f`` and measure the
    distances between consecutive solutions.

    Parameters
    ----------
    spec : ThinDomainSpec
    grids : (Grid, Grid) or None
        Grid over Q and grid over omega; resolved defaults when None.
    f : callable
        Forcing on thin-domain points (..., n + 1).
    tol : float
        CG tolerance.
    normalize : bool
        Scale f so that |||f|||_{Z_eps} = 1.

    Returns
    -------
    LadderReport
        Distances in the eps-rescaled H1 norm. ``dist_total`` compares the
        thin-domain solution with the extended reduced solution.

    Raises
    ------
    ResolutionError, SolverError
        Propagated from assembly and solves.

    """
    if logger is None:
        logger = logging.getLogger(__name__)
    grid_q, grid_omega = ladder_grids(spec) if grids is None else grids
    norms = RescaledNorms(spec, grid_q)
    scale = 1.0
    if normalize:
        size = forcing_norm(spec, f, grid_q, norms)
        scale = 1.0 / size if size > 0 else 1.0
    f_q = Field(grid_q, scale * f(physical_points(spec, grid_q)), "rhs")
    f_hat = project_f_hat(spec, f, grid_omega).values * scale

    solutions = {}
    iterations = 0
    for problem in (OriginalProblem, TransformedProblem, SimplifiedProblem):
        op = problem(spec, grid_q, logger=logger).assemble()
        solutions[op.problem] = sol = solve(op, f_q, tol)
        iterations += sol.meta["iterations"]
    reduced_op = ReducedProblem(spec, grid_omega, logger=logger).assemble()
    reduced = solve(reduced_op, f_hat, tol)
    iterations += reduced.meta["iterations"]
    solutions["reduced"] = extend_E(reduced, grid_q)

    def dist(a, b):
        return norms.z_eps_half(
            solutions[a].values - solutions[b].values
        )

    report = eta(spec)
    out = LadderReport(
        epsilon=spec.epsilon,
        eta1=report.eta1,
        eta=report.eta,
        dist_original_transformed=dist("original", "transformed"),
        dist_transformed_simplified=dist("transformed", "simplified"),
        dist_simplified_reduced=dist("simplified", "reduced"),
        dist_total=dist("original", "reduced"),
        solver_iters=int(iterations),
        out_of_hypothesis=spec.out_of_hypothesis,
    )
    logger.info(
        f"eps={spec.epsilon:g}: eta={out.eta:.4g} "
        f"dist_total={out.dist_total:.4g} "
        f"ratio={out.ratio_total_over_eta:.4g}"
    )
    return out


def decay_order(reports):
    """Least-squares slope of log dist_total against log eps."""
    eps = np.array([r.epsilon for r in reports], dtype=float)
    dists = np.array([r.dist_total for r in reports], dtype=float)
    if eps.size < 2 or np.any(dists <= 0) or np.ptp(eps) == 0:
        return float("nan")
    return float(np.polyfit(np.log(eps), np.log(dists), 1)[0])


def ladder_trend(reports, slack=2.0, min_order=LADDER_MIN_ORDER):
    """
    Whether a sweep (ordered by decreasing eps) shows the convergence the
    ladder estimates predict.

    Returns
    -------
    bool
        True when the total distance decreases strictly, decays at least
        like eps^min_order, and the ratio dist_total^2 / eta never grows by
        ``slack`` or more over an earlier value.

    """
    if len(reports) < 2:
        return True
    dists = np.array([r.dist_total for r in reports])
    ratios = np.array([r.ratio_total_over_eta for r in reports])
    dist_down = bool(np.all(dists[1:] < dists[:-1]))
    order = decay_order(reports)
    decays = bool(np.isfinite(order) and order >= min_order)
    growth = max(
        (ratios[k] / ratios[j] for j in range(len(ratios))
         for k in range(j + 1, len(ratios)) if ratios[j] > 0),
        default=1.0,
    )
    return dist_down and decays and growth < slack
