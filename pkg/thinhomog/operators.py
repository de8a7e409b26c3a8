"""
The ladder of elliptic problems, discretized on Q = omega x (0, 1) or on
omega, plus the rescaled norms and the averaging operators that compare
them.

Every problem is the weak form

    int A grad u . grad phi + c u phi = int c f phi

assembled by :meth:`Grid.assemble`. On Q the forms are those of the thin
domain pulled back through x -> (x, eps K(x) y - eps k1(x)) and divided by
eps, so their mass matrix is the K-weighted one.
"""

from functools import cached_property
import logging

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import eigh_tridiagonal

from .constants import CG_MAXITER_FACTOR, CG_RTOL, SIMPSON_INTERVALS
from .geometry import map_L, map_S
from .grid import Field, Grid
from .quadrature import mean_weight
from .solvers import jacobi, line_jacobi, pcg

TAGS = {
    "original": "w_eps",
    "transformed": "u_eps",
    "simplified": "w1_eps",
    "reduced": "w_hat_eps",
    "limit": "w_hat",
}


class SparseOperator:
    """
    A symmetric positive definite stiffness-plus-reaction matrix.

    Parameters
    ----------
    matrix : scipy.sparse.csr_matrix
    mass : scipy.sparse.csr_matrix
        Mass matrix of the reaction term; the load of a nodal right-hand
        side f is ``mass @ f``.
    problem : str
        One of the keys of ``TAGS``.
    grid : Grid
    spec : ThinDomainSpec, optional

    """

    def __init__(self, matrix, mass, problem, grid, spec=None):
        self.matrix = matrix.tocsr()
        self.mass = mass.tocsr()
        self.problem = problem
        self.grid = grid
        self.spec = spec

    def __repr__(self):
        return (
            f"SparseOperator({self.problem!r}, size={self.size}, "
            f"nnz={self.matrix.nnz})"
        )

    @property
    def size(self):
        return self.matrix.shape[0]

    @property
    def tag(self):
        return TAGS[self.problem]

    @cached_property
    def preconditioner(self):
        if self.grid.covers_q:
            return line_jacobi(self.matrix)
        return jacobi(self.matrix)

    def symmetry_defect(self):
        """max |A - A^T| relative to max |A|."""
        diff = abs(self.matrix - self.matrix.T)
        scale = abs(self.matrix).max()
        return float(diff.max() / scale) if diff.nnz else 0.0

    def ritz_values(self, steps=10, seed=0):
        """Ritz values of ``steps`` Lanczos steps from a seeded start."""
        rng = np.random.default_rng(seed)
        q = rng.standard_normal(self.size)
        q /= np.linalg.norm(q)
        q_prev = np.zeros_like(q)
        alphas, betas = [], []
        beta = 0.0
        for _ in range(min(steps, self.size)):
            w = self.matrix @ q - beta * q_prev
            alpha = float(q @ w)
            w -= alpha * q
            alphas.append(alpha)
            beta = float(np.linalg.norm(w))
            if beta <= 1e-14 * abs(alpha):
                break
            betas.append(beta)
            q_prev, q = q, w / beta
        return eigh_tridiagonal(
            np.array(alphas), np.array(betas[: len(alphas) - 1]),
            eigvals_only=True,
        )

    def is_spd(self, rtol=1e-12, steps=10):
        return (
            self.symmetry_defect() <= rtol
            and self.ritz_values(steps).min() > 0
        )

    def solve_load(self, load, tol=CG_RTOL, maxiter_factor=CG_MAXITER_FACTOR,
                   x0=None):
        """Solve ``matrix @ x = load``; returns (x, iterations)."""
        return pcg(
            self.matrix,
            load,
            rtol=tol,
            preconditioner=self.preconditioner,
            x0=x0,
            maxiter_factor=maxiter_factor,
        )


def solve(op, rhs, tol=CG_RTOL, maxiter_factor=CG_MAXITER_FACTOR):
    """
    Solve the problem of ``op`` for the nodal right-hand side ``rhs``.

    Parameters
    ----------
    op : SparseOperator
    rhs : Field or array_like
        Nodal values of the right-hand-side function.
    tol : float
        Relative residual tolerance of the conjugate-gradient solve.

    Returns
    -------
    Field
        Tagged with the unknown of the problem; ``meta["iterations"]``
        holds the CG iteration count.

    Raises
    ------
    SolverError
        If CG does not converge within the iteration cap.

    """
    values = rhs.values if isinstance(rhs, Field) else np.asarray(rhs)
    x, iterations = op.solve_load(op.mass @ values, tol, maxiter_factor)
    return Field(
        op.grid, x, op.tag, {"iterations": iterations, "problem": op.problem}
    )


class LadderProblem:
    """
    Base class of the discretized problems.

    Subclasses provide the diffusion coefficient and, if it is not K, the
    reaction coefficient at quadrature points.
    """

    name = None
    on_q = True

    def __init__(self, spec, grid, logger=None):
        if grid.covers_q != self.on_q:
            where = "Q" if self.on_q else "omega"
            raise ValueError(f"The {self.name} problem needs a grid over "
                             f"{where}.")
        if logger is None:
            logger = logging.getLogger(__name__)
        self.logger = logger
        self.spec = spec
        self.grid = grid

    def coefficient(self, pts):
        raise NotImplementedError("Method must be implemented by subclass.")

    def reaction(self, pts):
        return self.spec.thickness()(pts[..., : self.spec.dim])

    def check_resolution(self):
        self.grid.check_resolution(self.spec)

    def assemble(self):
        self.check_resolution()
        matrix = self.grid.assemble(self.coefficient, self.reaction)
        mass = self.grid.mass(self.reaction)
        self.logger.debug(
            f"Assembled {self.name} problem on {self.grid.size} nodes "
            f"(eps={self.spec.epsilon})."
        )
        return SparseOperator(matrix, mass, self.name, self.grid, self.spec)


def _pullback(spec, pts, shift):
    n = spec.dim
    x, y = pts[..., :n], pts[..., n]
    thick = spec.thickness()
    K = thick(x)
    d = -y[..., None] * thick.gradient(x)
    if shift:
        d = d + spec.grad_k1(x)
    d = d / K[..., None]
    A = np.zeros(pts.shape[:-1] + (n + 1, n + 1))
    A[..., np.arange(n), np.arange(n)] = K[..., None]
    A[..., :n, n] = K[..., None] * d
    A[..., n, :n] = K[..., None] * d
    A[..., n, n] = K * np.sum(d**2, axis=-1) + 1.0 / (spec.epsilon**2 * K)
    return A


class OriginalProblem(LadderProblem):
    """-Lap w + w = f on the thin domain itself, pulled back exactly to Q."""

    name = "original"

    def coefficient(self, pts):
        return _pullback(self.spec, pts, shift=True)


class TransformedProblem(LadderProblem):
    """The flat-bottom problem on R_a^eps, rescaled to Q."""

    name = "transformed"

    def coefficient(self, pts):
        return _pullback(self.spec, pts, shift=False)


class SimplifiedProblem(LadderProblem):
    """The transformed problem without its cross terms."""

    name = "simplified"

    def coefficient(self, pts):
        n = self.spec.dim
        K = self.spec.thickness()(pts[..., :n])
        A = np.zeros(pts.shape[:-1] + (n + 1, n + 1))
        A[..., np.arange(n), np.arange(n)] = K[..., None]
        A[..., n, n] = 1.0 / (self.spec.epsilon**2 * K)
        return A


class ReducedProblem(LadderProblem):
    """-(1/K) div(K grad w) + w = f on omega."""

    name = "reduced"
    on_q = False

    def coefficient(self, pts):
        return self.spec.thickness()(pts)


class LimitProblem(LadderProblem):
    """
    -(1/W) div(A0 grad u) + u = f on omega, W = M(g) + M(h).

    Parameters
    ----------
    a0 : float or np.ndarray
        Homogenized coefficient p0 (scalar) or matrix A0.
    weight : float
        W = M(g) + M(h).

    """

    name = "limit"
    on_q = False

    def __init__(self, spec, grid, a0, weight, logger=None):
        super().__init__(spec, grid, logger=logger)
        self.a0 = np.atleast_2d(np.asarray(a0, dtype=float))
        if self.a0.shape == (1, 1):
            self.a0 = self.a0[0, 0] * np.eye(grid.dim)
        if self.a0.shape != (grid.dim, grid.dim):
            raise ValueError("A0 does not match the base dimension.")
        self.weight = float(weight)

    def coefficient(self, pts):
        return np.broadcast_to(self.a0, pts.shape[:-1] + self.a0.shape)

    def reaction(self, pts):
        return np.full(pts.shape[:-1], self.weight)

    def check_resolution(self):
        pass


def assemble_original(spec, grid):
    return OriginalProblem(spec, grid).assemble()


def assemble_transformed(spec, grid):
    """
    Discretize the flat-bottom problem on Q.

    Raises
    ------
    ResolutionError
        If ``grid`` misses the fastest boundary oscillation.

    """
    return TransformedProblem(spec, grid).assemble()


def assemble_simplified(spec, grid):
    return SimplifiedProblem(spec, grid).assemble()


def assemble_reduced(spec, grid):
    return ReducedProblem(spec, grid).assemble()


def assemble_limit(spec, grid, a0, weight):
    return LimitProblem(spec, grid, a0, weight).assemble()


def physical_points(spec, grid):
    """Images of the nodes of a grid over Q in the thin domain."""
    return map_L(spec, map_S(spec, grid.points))


def _columns(grid, values):
    return np.asarray(values, dtype=float).reshape(-1, grid.nodes[-1])


def vertical_mean(grid, values):
    """int_0^1 u dy per column, Simpson rule on the vertical nodes."""
    return simpson(_columns(grid, values), x=grid.axis(grid.dim - 1), axis=-1)


def average_M(spec, f, grid):
    """
    M_eps f(x) = (1/eps) int f(x, y) dy across the thin domain.

    Parameters
    ----------
    spec : ThinDomainSpec
    f : Field or callable
        A field on ``grid`` (over Q) or a function of thin-domain points.
    grid : Grid
        Grid over Q.

    Returns
    -------
    Field
        On ``grid.base()``. Since dy_thin = eps K dy_Q, this is K times the
        vertical mean over Q.

    """
    if callable(f):
        values = f(physical_points(spec, grid))
    else:
        values = f.values if isinstance(f, Field) else f
    base = grid.base()
    K = spec.thickness()(base.points)
    return Field(base, K * vertical_mean(grid, values), "rhs")


def extend_E(u, grid):
    """E_eps u(x, y) = u(x), a y-constant field on the grid over Q."""
    values = u.values if isinstance(u, Field) else np.asarray(u, dtype=float)
    tag = u.tag if isinstance(u, Field) else "state"
    return Field(grid, np.repeat(values, grid.nodes[-1]), tag)


def project_f_hat(spec, f, grid, intervals=SIMPSON_INTERVALS):
    """
    Thickness average of f across the thin domain.

    f_hat(x) = (1 / (eps K(x))) int_{-eps k1(x)}^{eps k2(x)} f(x, y) dy,
    by composite Simpson with ``intervals`` subintervals.

    Parameters
    ----------
    f : callable
        Function of thin-domain points, shape (..., n + 1).
    grid : Grid
        Grid over omega.

    """
    x = grid.points
    lo = -spec.epsilon * spec.k1(x)
    hi = spec.epsilon * spec.k2(x)
    s = np.linspace(0.0, 1.0, intervals + 1)
    y = lo[:, None] + (hi - lo)[:, None] * s[None, :]
    pts = np.concatenate(
        [np.repeat(x[:, None, :], s.size, axis=1), y[..., None]], axis=-1
    )
    values = simpson(f(pts), x=s, axis=-1)
    return Field(grid, values, "rhs")


def ladder_grids(spec, cells_per_period=None, vertical_cells=None):
    """Default pair (grid over Q, grid over omega) for ``spec``."""
    kwargs = {}
    if cells_per_period is not None:
        kwargs["cells_per_period"] = cells_per_period
    if vertical_cells is not None:
        kwargs["vertical_cells"] = vertical_cells
    grid_q = Grid.for_spec(spec, **kwargs)
    return grid_q, grid_q.base()


class RescaledNorms:
    """
    Norms that make thin-domain quantities comparable across eps.

    On Q:  |||u|||^2_{Z_eps} = int_Q K u^2, and |||u|||_{Z_eps^1/2} is the
    energy norm of the original problem (the eps-rescaled H1 norm of the
    thin-domain function pulled back to Q).
    On omega: ||u||^2_{Z_0} = W int u^2 and its H1 counterpart
    W int (|grad u|^2 + u^2), with W = M(g) + M(h).

    Parameters
    ----------
    spec : ThinDomainSpec
    grid_q : Grid
        Grid over Q.
    weight : float, optional
        W; computed from the profiles when omitted.

    """

    def __init__(self, spec, grid_q, weight=None):
        self.spec = spec
        self.grid_q = grid_q
        self.grid_omega = grid_q.base()
        self.weight = mean_weight(spec) if weight is None else float(weight)

    @cached_property
    def mass_q(self):
        return self.grid_q.mass(
            lambda p: self.spec.thickness()(p[..., : self.spec.dim])
        )

    @cached_property
    def energy_q(self):
        return OriginalProblem(self.spec, self.grid_q).assemble().matrix

    @cached_property
    def mass_omega(self):
        return self.grid_omega.mass()

    @cached_property
    def stiffness_omega(self):
        return self.grid_omega.assemble(
            coefficient=lambda p: np.ones(p.shape[:2])
        )

    @staticmethod
    def _quadratic(matrix, u):
        u = u.values if isinstance(u, Field) else np.asarray(u, dtype=float)
        return float(np.sqrt(max(u @ (matrix @ u), 0.0)))

    def z_eps(self, u):
        return self._quadratic(self.mass_q, u)

    def z_eps_half(self, u):
        return self._quadratic(self.energy_q, u)

    def z0(self, u):
        return np.sqrt(self.weight) * self._quadratic(self.mass_omega, u)

    def z0_half(self, u):
        return np.sqrt(self.weight) * self._quadratic(
            self.mass_omega + self.stiffness_omega, u
        )

    def z_eps_base(self, u):
        """|||E_eps u|||_{Z_eps} evaluated on omega: sqrt(int K u^2)."""
        mass = self.grid_omega.mass(self.spec.thickness())
        return self._quadratic(mass, u)
