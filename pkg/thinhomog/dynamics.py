"""
Semilinear parabolic problems u_t + L u = f(u) on the discretized thin
domain and on omega: time stepping, equilibria, the nonlinear semigroup
defect and semidistances between sets of states.

All problems are written in the weighted discrete form

    M u' + A u = M_L f(u)

where A is the stiffness-plus-reaction matrix of a SparseOperator, M its
mass matrix and M_L the row-sum (lumped) mass.
"""

from dataclasses import dataclass, field
import logging

import numpy as np
from scipy.sparse import diags

from .constants import (
    CG_RTOL,
    DEDUP_TOL,
    DT,
    NEWTON_MAXITER,
    NEWTON_TOL,
    SEED,
)
from .errors import InstabilityError, SolverError
from .grid import Field
from .homogenization import homogenize
from .operators import (
    LimitProblem,
    OriginalProblem,
    RescaledNorms,
    average_M,
    extend_E,
    ladder_grids,
)
from .solvers import jacobi, line_jacobi, pcg, symmetric_solve
from .spectral import eigenpairs

logger = logging.getLogger(__name__)

COLUMNS = (
    "epsilon",
    "t",
    "defect_H1",
    "defect_L2",
    "gamma_fit",
    "equilibria_count_eps",
    "equilibria_count_0",
    "semidist_equilibria",
    "semidist_attractor_surrogate",
    "dt",
    "seed_count",
)

IMEX_RTOL = 1e-12
MIN_TRANSIENT = 5.0
_LINE_SEARCH_STEPS = 12


def lumped_mass(op):
    return np.asarray(op.mass.sum(axis=1)).ravel()


def _values(u):
    return u.values if isinstance(u, Field) else np.asarray(u, dtype=float)


class ImexStepper:
    """
    First-order IMEX steps (M + dt A) u_next = M u + dt M_L f(u).

    The linear part is implicit, so the scheme is unconditionally stable
    for f = 0; the system matrix is factored once per (op, dt).
    """

    def __init__(self, op, dt, nl, tol=IMEX_RTOL):
        if not dt > 0:
            raise ValueError("dt must be positive.")
        self.op = op
        self.dt = float(dt)
        self.nl = nl
        self.tol = tol
        self.system = (op.mass + self.dt * op.matrix).tocsr()
        self.lumped = lumped_mass(op)
        if op.grid.covers_q:
            self.preconditioner = line_jacobi(self.system)
        else:
            self.preconditioner = jacobi(self.system)

    def __call__(self, u):
        rhs = self.op.mass @ u
        if not self.nl.is_zero:
            rhs = rhs + self.dt * self.lumped * self.nl(u)
        x, _ = pcg(self.system, rhs, rtol=self.tol,
                   preconditioner=self.preconditioner, x0=u)
        return x


def step_imex(op, state, dt, nl):
    """
    One IMEX step of u_t + L u = f(u).

    Parameters
    ----------
    op : SparseOperator
        Linear part of the problem.
    state : Field
    dt : float
    nl : Nonlinearity

    Returns
    -------
    Field

    """
    return state.with_values(ImexStepper(op, dt, nl)(_values(state)))


@dataclass
class Trajectory:
    """Snapshots of one IMEX integration plus the sup-norm after each step."""

    times: np.ndarray
    snapshots: list
    norms: np.ndarray
    dt: float
    bound: float

    @property
    def final(self):
        return self.snapshots[-1]

    def at(self, t):
        k = int(np.argmin(np.abs(self.times - t)))
        return self.snapshots[k]

    def stays_absorbed(self, level, tol=1e-8):
        """Once sup|u| <= level, it never exceeds level again."""
        inside = np.nonzero(self.norms <= level)[0]
        if inside.size == 0:
            return True
        return bool(np.all(self.norms[inside[0]:] <= level + tol))


def evolve(op, u0, t_end, dt=DT, nl=None, times=None, stepper=None):
    """
    Integrate from ``u0`` up to ``t_end`` with fixed steps.

    Parameters
    ----------
    op : SparseOperator
    u0 : Field or array_like
    t_end : float
    dt : float
    nl : Nonlinearity
    times : sequence of float, optional
        Snapshot times, rounded to the step grid; t = 0 and ``t_end`` are
        always kept.
    stepper : ImexStepper, optional
        Reused across calls with the same (op, dt, nl).

    Returns
    -------
    Trajectory

    Raises
    ------
    InstabilityError
        If sup|u| exceeds max(s_star, sup|u0|) + 1.

    """
    if stepper is None:
        stepper = ImexStepper(op, dt, nl)
    nl, dt = stepper.nl, stepper.dt
    u = _values(u0).copy()
    steps = int(round(t_end / dt))
    wanted = {0, steps}
    for t in times or ():
        wanted.add(int(round(t / dt)))
    bound = nl.absorbing_bound(u)
    snapshots, stamps = [], []
    norms = np.empty(steps)
    if 0 in wanted:
        snapshots.append(Field(op.grid, u.copy(), "state", {"t": 0.0}))
        stamps.append(0.0)
    for k in range(1, steps + 1):
        u = stepper(u)
        norms[k - 1] = size = float(np.max(np.abs(u)))
        if not size <= bound:
            raise InstabilityError(
                f"sup|u| = {size:.4g} exceeds the absorbing bound "
                f"{bound:.4g} at t = {k * dt:.4g}; reduce dt."
            )
        if k in wanted:
            snapshots.append(Field(op.grid, u.copy(), "state",
                                   {"t": k * dt}))
            stamps.append(k * dt)
    return Trajectory(np.array(stamps), snapshots, norms, dt, bound)


def lyapunov_energy(op, u, nl):
    """E(u) = 1/2 <A u, u> - int F(u), with F integrated by the lumped mass."""
    u = _values(u)
    return float(
        0.5 * u @ (op.matrix @ u) - lumped_mass(op) @ nl.primitive(u)
    )


@dataclass
class EquilibriaSet:
    """Deduplicated Newton roots of A u = M_L f(u)."""

    fields: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def __len__(self):
        return len(self.fields)

    def __iter__(self):
        return iter(self.fields)


def residual_norm(op, r, lumped=None):
    """Dual norm sqrt(r^T M_L^-1 r) of a discrete residual."""
    lumped = lumped_mass(op) if lumped is None else lumped
    return float(np.sqrt(r @ (r / lumped)))


def default_seeds(op, amplitude=0.5, seed=SEED):
    """
    Constants -2, -1.75, ..., 2 plus +-amplitude times the first
    non-constant eigenfunction (scaled to unit sup norm).
    """
    seeds = [np.full(op.size, c) for c in np.arange(-2.0, 2.125, 0.25)]
    phi = eigenpairs(op, 2, seed=seed)[1].function.values
    phi = phi / np.max(np.abs(phi))
    seeds += [amplitude * phi, -amplitude * phi]
    return [Field(op.grid, s, "state") for s in seeds]


def newton(op, nl, u0, tol=NEWTON_TOL, maxiter=NEWTON_MAXITER):
    """
    Damped Newton on R(u) = A u - M_L f(u).

    The Jacobian A - M_L diag(f'(u)) is symmetric and possibly indefinite;
    each step is a preconditioned MINRES solve.

    Returns
    -------
    u : np.ndarray
    residual : float

    Raises
    ------
    SolverError
        If no damped step lowers the residual, or the residual is still
        above ``tol`` after ``maxiter`` steps.

    """
    lumped = lumped_mass(op)
    u = _values(u0).copy()

    def residual(v):
        return op.matrix @ v - lumped * nl(v)

    r = residual(u)
    size = residual_norm(op, r, lumped)
    for it in range(maxiter):
        if size <= tol:
            return u, size
        jac = op.matrix - diags(lumped * nl.derivative(u))
        step, _ = symmetric_solve(
            jac, -r, rtol=1e-12, preconditioner=op.preconditioner
        )
        lam = 1.0
        for _ in range(_LINE_SEARCH_STEPS):
            trial = u + lam * step
            r_trial = residual(trial)
            size_trial = residual_norm(op, r_trial, lumped)
            if size_trial < size:
                break
            lam /= 2
        else:
            raise SolverError(
                f"Newton line search failed at step {it} with residual "
                f"{size:.3e}.",
                size,
                it,
            )
        u, r, size = trial, r_trial, size_trial
    if size <= tol:
        return u, size
    raise SolverError(
        f"Newton stopped after {maxiter} steps with residual {size:.3e}.",
        size,
        maxiter,
    )


def equilibria(op, nl, seeds=None, tol=NEWTON_TOL, maxiter=NEWTON_MAXITER,
               dedup_tol=DEDUP_TOL, norm=None):
    """
    Stationary states of u_t + L u = f(u) reached by Newton from seeds.

    Parameters
    ----------
    op : SparseOperator
    nl : Nonlinearity
    seeds : list of Field, optional
        ``default_seeds(op)`` when omitted.
    tol : float
        Residual tolerance in the lumped dual norm.
    dedup_tol : float
        Roots closer than this (in ``norm``) are merged.
    norm : callable, optional
        Norm of a nodal difference; mass-weighted L2 by default.

    Returns
    -------
    EquilibriaSet
        Failed seeds are recorded in ``failures`` as (index, message).

    """
    seeds = default_seeds(op) if seeds is None else seeds
    norm = _mass_norm(op.mass) if norm is None else norm
    out = EquilibriaSet()
    for i, seed in enumerate(seeds):
        try:
            u, res = newton(op, nl, seed, tol, maxiter)
        except SolverError as err:
            logger.warning(f"Newton seed {i} failed: {err}")
            out.failures.append((i, str(err)))
            continue
        if any(norm(u - f.values) <= dedup_tol for f in out.fields):
            continue
        out.fields.append(Field(op.grid, u, "state", {"residual": res}))
        out.residuals.append(res)
    logger.info(
        f"{op.problem}: {len(out)} equilibria from {len(seeds)} seeds, "
        f"{len(out.failures)} failures"
    )
    return out


def _mass_norm(mass):
    def norm(v):
        return float(np.sqrt(max(v @ (mass @ v), 0.0)))

    return norm


def _comparable(a, b):
    """Bring two fields onto a common grid through E_eps."""
    if a.grid == b.grid:
        return a.values, b.values
    if a.grid.covers_q and not b.grid.covers_q:
        return a.values, extend_E(b, a.grid).values
    if b.grid.covers_q and not a.grid.covers_q:
        return extend_E(a, b.grid).values, b.values
    raise ValueError("Fields live on unrelated grids.")


def semidistance(A, B, norm=None):
    """
    Directed Hausdorff semidistance sup_{a in A} inf_{b in B} |a - b|.

    Parameters
    ----------
    A, B : EquilibriaSet or sequence of Field
        Fields on omega are extended to Q when the other set lives on Q.
    norm : callable, optional
        Norm of a nodal vector on the common grid; mass-weighted L2 of the
        first element's grid by default.

    Raises
    ------
    ValueError
        If B is empty.

    """
    A, B = list(A), list(B)
    if not B:
        raise ValueError("The second set must not be empty.")
    if not A:
        return 0.0
    if norm is None:
        grid = A[0].grid if A[0].grid.covers_q else B[0].grid
        norm = _mass_norm(grid.mass())
    worst = 0.0
    for a in A:
        best = np.inf
        for b in B:
            va, vb = _comparable(a, b)
            best = min(best, norm(va - vb))
        worst = max(worst, best)
    return float(worst)


@dataclass
class SemidistanceReport:
    epsilon: float
    values: dict
    norm: str = "Z_eps^1/2"


def attractor_surrogate(op, nl, seeds, t_transient=MIN_TRANSIENT, dt=DT):
    """
    Terminal states of every seed after ``t_transient``.

    A finite sample standing in for the global attractor; it makes no
    claim of completeness.
    """
    if t_transient < MIN_TRANSIENT:
        raise ValueError(f"t_transient must be at least {MIN_TRANSIENT}.")
    stepper = ImexStepper(op, dt, nl)
    return [
        evolve(op, s, t_transient, stepper=stepper).final for s in seeds
    ]


def fit_power(x, y):
    """Exponent c of y ~ x^c by least squares in log-log; nan if too few."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)
    return float(slope)


def _blank_row(spec, dt):
    row = dict.fromkeys(COLUMNS, float("nan"))
    row.update(epsilon=spec.epsilon, dt=dt)
    return row


def semigroup_defect(spec, grids, nl, t_list, u0, model=None, dt=DT,
                     w=None, tol=CG_RTOL):
    """
    |||T_eps(t) w - E T_0(t) u_0|||, in the Z_eps^1/2 and Z_eps norms.

    Parameters
    ----------
    spec : ThinDomainSpec
    grids : (Grid, Grid) or None
    nl : Nonlinearity
    t_list : sequence of float
        Positive times.
    u0 : callable, Field or array_like
        Initial state on omega (callable of base points).
    w : Field or array_like, optional
        A general start on Q. The eps-problem then starts from ``w`` and
        the limit problem from M_eps w divided by the mean of K.
        Without it both start from ``u0`` (extended to Q).

    Returns
    -------
    list of dict
        One row per t with ``COLUMNS``; ``gamma_fit`` is -slope of
        log defect_H1 against log t.

    """
    t_list = sorted(float(t) for t in t_list)
    if not t_list or t_list[0] <= 0:
        raise ValueError("Times must be positive.")
    model = homogenize(spec) if model is None else model
    grid_q, grid_omega = ladder_grids(spec) if grids is None else grids
    if callable(u0):
        start_0 = np.asarray(u0(grid_omega.points), dtype=float)
    else:
        start_0 = _values(u0)
    if w is None:
        start_eps = extend_E(start_0, grid_q).values
    else:
        start_eps = _values(w)
        K = spec.thickness()(grid_omega.points)
        mean_K = grid_omega.integrate(grid_omega.at_quadrature(K)) / (
            spec.base.volume
        )
        start_0 = average_M(spec, start_eps, grid_q).values / mean_K
    eps_op = OriginalProblem(spec, grid_q).assemble()
    limit_op = LimitProblem(spec, grid_omega, model.a0,
                            model.weight).assemble()
    t_end = t_list[-1]
    traj_eps = evolve(eps_op, start_eps, t_end, dt, nl, times=t_list)
    traj_0 = evolve(limit_op, start_0, t_end, dt, nl, times=t_list)
    norms = RescaledNorms(spec, grid_q, weight=model.weight)
    rows = []
    for t in t_list:
        diff = traj_eps.at(t).values - extend_E(traj_0.at(t), grid_q).values
        row = _blank_row(spec, dt)
        row.update(t=t, defect_H1=norms.z_eps_half(diff),
                   defect_L2=norms.z_eps(diff), seed_count=1)
        rows.append(row)
    gamma = -fit_power(t_list, [r["defect_H1"] for r in rows])
    for row in rows:
        row["gamma_fit"] = gamma
    logger.info(
        f"eps={spec.epsilon:g}: semigroup defect at t={t_list[-1]:g} is "
        f"{rows[-1]['defect_H1']:.4g}"
    )
    return rows


def equilibria_point(spec, grids, nl, model=None, seeds=None,
                     t_transient=MIN_TRANSIENT, dt=DT, surrogate_every=4):
    """
    Equilibria and attractor samples of the eps- and limit problems at one
    eps, with the semidistances from the eps-sets to the limit sets.

    Returns
    -------
    row : dict
        With ``COLUMNS``.
    sets : dict
        ``eps``/``limit`` EquilibriaSet and ``surrogate_eps``/
        ``surrogate_0`` field lists.

    """
    model = homogenize(spec) if model is None else model
    grid_q, grid_omega = ladder_grids(spec) if grids is None else grids
    eps_op = OriginalProblem(spec, grid_q).assemble()
    limit_op = LimitProblem(spec, grid_omega, model.a0,
                            model.weight).assemble()
    norms = RescaledNorms(spec, grid_q, weight=model.weight)
    if seeds is None:
        seeds_0 = default_seeds(limit_op)
        seeds_eps = [extend_E(s, grid_q) for s in seeds_0]
    else:
        seeds_0 = [Field(grid_omega, _values(s), "state") for s in seeds]
        seeds_eps = [extend_E(s, grid_q) for s in seeds_0]
    eq_eps = equilibria(eps_op, nl, seeds_eps)
    eq_0 = equilibria(limit_op, nl, seeds_0)
    # the attractor sample uses every few seeds plus the last two
    picks = sorted(set(range(0, len(seeds_0), surrogate_every))
                   | {len(seeds_0) - 2, len(seeds_0) - 1})
    picks = [i for i in picks if i >= 0]
    sur_eps = attractor_surrogate(
        eps_op, nl, [seeds_eps[i] for i in picks], t_transient, dt
    )
    sur_0 = attractor_surrogate(
        limit_op, nl, [seeds_0[i] for i in picks], t_transient, dt
    )
    row = _blank_row(spec, dt)
    row.update(
        t=t_transient,
        equilibria_count_eps=len(eq_eps),
        equilibria_count_0=len(eq_0),
        semidist_equilibria=semidistance(eq_eps, eq_0, norms.z_eps_half)
        if len(eq_0) else float("nan"),
        semidist_attractor_surrogate=semidistance(
            sur_eps, list(sur_0) + list(eq_0), norms.z_eps_half
        ),
        seed_count=len(seeds_0),
    )
    logger.info(
        f"eps={spec.epsilon:g}: {len(eq_eps)} / {len(eq_0)} equilibria, "
        f"semidistance {row['semidist_equilibria']:.3g}"
    )
    sets = {"eps": eq_eps, "limit": eq_0, "surrogate_eps": sur_eps,
            "surrogate_0": sur_0}
    return row, sets
