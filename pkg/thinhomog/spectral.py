"""
Low eigenpairs of the eps-problems and of the limit problem, spectral
convergence, the resolvent defect and linear semigroups.
"""

from dataclasses import dataclass, field
import logging

import numpy as np
from scipy.linalg import eigh
from scipy.sparse.linalg import (
    ArpackError,
    ArpackNoConvergence,
    LinearOperator,
    eigsh,
)

from .constants import (
    EIG_CLUSTER_RTOL,
    EIG_MAX_RESTARTS,
    EIG_RESIDUAL_TOL,
    MAX_EIGENPAIRS,
    PROBES,
    SEED,
)
from .errors import SolverError, SpectralError, StudyError
from .grid import Field
from .homogenization import homogenize
from .operators import (
    OriginalProblem,
    LimitProblem,
    RescaledNorms,
    average_M,
    extend_E,
    ladder_grids,
    solve,
)

logger = logging.getLogger(__name__)

SPECTRUM_COLUMNS = (
    "epsilon", "n", "lambda_eps", "lambda_0", "lambda_0_exact", "gap",
    "eigfun_dist",
)
RESOLVENT_COLUMNS = ("epsilon", "defect_max", "defect_mean", "probes", "seed")

INNER_RTOL = 1e-12


@dataclass
class EigenPair:
    value: float
    function: Field
    index: int
    residual: float


def _orient(vec):
    k = int(np.argmax(np.abs(vec)))
    return vec if vec[k] >= 0 else -vec


def eigenpairs(op, k, seed=SEED, tol=EIG_RESIDUAL_TOL,
               max_restarts=EIG_MAX_RESTARTS):
    """
    The ``k`` smallest eigenpairs of A phi = lambda M phi.

    Shift-invert Lanczos with shift 0; the inverse is applied by CG. The
    eigenfunctions are orthonormal in the mass inner product of ``op`` and
    each eigenvalue is the Rayleigh quotient of its eigenfunction.

    Parameters
    ----------
    op : SparseOperator
    k : int
        At most 12.
    seed : int
        Seed of the Lanczos start vectors.
    tol : float
        Bound on the relative residual |A phi - lambda M phi| / |A phi|.

    Returns
    -------
    list of EigenPair
        Ascending.

    Raises
    ------
    SpectralError
        If Lanczos fails ``max_restarts`` times.

    """
    if not 0 < k <= MAX_EIGENPAIRS:
        raise ValueError(f"k must lie in 1..{MAX_EIGENPAIRS}.")
    if k >= op.size:
        raise ValueError("k must be smaller than the operator size.")
    A, M = op.matrix, op.mass
    inverse = LinearOperator(
        A.shape, matvec=lambda b: op.solve_load(b, INNER_RTOL)[0]
    )
    rng = np.random.default_rng(seed)
    for attempt in range(max_restarts + 1):
        v0 = rng.standard_normal(op.size)
        try:
            values, vectors = eigsh(
                A, k=k, M=M, sigma=0.0, OPinv=inverse, v0=v0,
                which="LM", tol=tol * 1e-2,
            )
        except (ArpackNoConvergence, ArpackError, SolverError) as err:
            logger.warning(f"Lanczos attempt {attempt + 1} failed: {err}")
            continue
        pairs = []
        worst = 0.0
        for i in np.argsort(values):
            vec = vectors[:, i]
            vec = _orient(vec / np.sqrt(vec @ (M @ vec)))
            Av = A @ vec
            value = float(vec @ Av)
            residual = float(
                np.linalg.norm(Av - value * (M @ vec)) / np.linalg.norm(Av)
            )
            worst = max(worst, residual)
            pairs.append(
                EigenPair(value, Field(op.grid, vec, "eigenfunction"),
                          len(pairs) + 1, residual)
            )
        if worst <= tol:
            return pairs
        logger.warning(
            f"Lanczos attempt {attempt + 1}: residual {worst:.2e} > {tol}."
        )
    raise SpectralError(
        f"Lanczos failed after {max_restarts} restarts ({op.problem})."
    )


def limit_eigenvalues(model, base, n_max):
    """
    Closed-form Neumann spectrum of -(1/W) div(A0 grad u) + u.

    Available for intervals and for rectangles with diagonal A0.
    """
    a0, weight = model.a0, model.weight
    if not np.allclose(a0, np.diag(np.diag(a0))):
        raise NotImplementedError("Closed form needs a diagonal A0.")
    if base.dim == 1:
        n = np.arange(n_max)
        values = (n * np.pi / base.extent[0]) ** 2 * a0[0, 0]
    else:
        j, k = np.meshgrid(np.arange(n_max), np.arange(n_max),
                           indexing="ij")
        values = (
            a0[0, 0] * (j * np.pi / base.extent[0]) ** 2
            + a0[1, 1] * (k * np.pi / base.extent[1]) ** 2
        ).ravel()
    return np.sort(1.0 + values / weight)[:n_max]


def vertical_level(spec):
    """Conservative lowest vertical eigenvalue 1 + (pi / (eps (g1+h1)))^2."""
    _, thickest = spec.thickness_bounds
    return 1.0 + (np.pi / (spec.epsilon * thickest)) ** 2


def check_mode_ordering(spec, limit_values):
    """
    Raises
    ------
    StudyError
        If the n_max-th horizontal mode may lie above the first vertical one.

    """
    level = vertical_level(spec)
    if limit_values[-1] >= level:
        raise StudyError(
            f"At eps={spec.epsilon:g} the first vertical mode (~{level:.4g}) "
            f"lies below horizontal mode {len(limit_values)} "
            f"(~{limit_values[-1]:.4g}); use a smaller eps or fewer modes.",
            spec.epsilon,
        )


def _clusters(values, rtol=EIG_CLUSTER_RTOL):
    groups, current = [], [0]
    for i in range(1, len(values)):
        if abs(values[i] - values[current[-1]]) <= rtol * abs(values[i]):
            current.append(i)
        else:
            groups.append(current)
            current = [i]
    groups.append(current)
    return groups


def eigenfunction_distances(eps_pairs, limit_pairs, norms):
    """
    |||phi_n^eps - E phi_n^0|||_{Z_eps^1/2} after sign alignment; inside a
    cluster of numerically equal limit eigenvalues phi_n^eps is compared
    with its projection onto the extended limit eigenspace.

    E phi_n^0 is rescaled to unit |||.|||_{Z_eps} first, so that both
    sides carry the same normalization at finite eps.
    """
    grid_q = norms.grid_q
    mass = norms.mass_q
    extended = [extend_E(p.function, grid_q).values for p in limit_pairs]
    out = []
    for group in _clusters([p.value for p in limit_pairs]):
        basis = np.array([extended[i] for i in group]).T
        for i in group:
            phi = eps_pairs[i].function.values
            if len(group) == 1:
                b = basis[:, 0] / np.sqrt(basis[:, 0] @ (mass @ basis[:, 0]))
                sign = 1.0 if phi @ (mass @ b) >= 0 else -1.0
                target = sign * b
            else:
                gram = basis.T @ (mass @ basis)
                coeffs = np.linalg.solve(gram, basis.T @ (mass @ phi))
                target = basis @ coeffs
            out.append(norms.z_eps_half(phi - target))
    return out


@dataclass
class SpectralReport:
    rows: list = field(default_factory=list)

    def column(self, name, n=None):
        return np.array([
            r[name] for r in self.rows if n is None or r["n"] == n
        ])

    def gaps_decreasing(self, n, slack=1.5):
        gaps = self.column("gap", n)
        return bool(np.all(gaps[1:] <= slack * gaps[:-1]))


def spectral_point(spec, n_max, model=None, grids=None, seed=SEED):
    """Spectral comparison at one eps; returns the report rows."""
    model = homogenize(spec) if model is None else model
    grid_q, grid_omega = ladder_grids(spec) if grids is None else grids
    exact = None
    try:
        exact = limit_eigenvalues(model, spec.base, n_max)
    except NotImplementedError:
        pass
    limit_op = LimitProblem(spec, grid_omega, model.a0,
                            model.weight).assemble()
    limit_pairs = eigenpairs(limit_op, n_max, seed=seed)
    check_mode_ordering(
        spec, exact if exact is not None else [p.value for p in limit_pairs]
    )
    eps_op = OriginalProblem(spec, grid_q).assemble()
    eps_pairs = eigenpairs(eps_op, n_max, seed=seed)
    norms = RescaledNorms(spec, grid_q, weight=model.weight)
    dists = eigenfunction_distances(eps_pairs, limit_pairs, norms)
    rows = []
    for i, (pe, p0) in enumerate(zip(eps_pairs, limit_pairs)):
        rows.append({
            "epsilon": spec.epsilon,
            "n": i + 1,
            "lambda_eps": pe.value,
            "lambda_0": p0.value,
            "lambda_0_exact": float(exact[i]) if exact is not None
            else float("nan"),
            "gap": abs(pe.value - p0.value),
            "eigfun_dist": dists[i],
        })
    return rows


def spectral_convergence_study(spec, epsilons, n_max, model=None,
                               seed=SEED):
    """
    Eigenvalue gaps and eigenfunction distances along an eps-sweep.

    Raises
    ------
    StudyError
        Naming the first eps whose vertical modes interfere with the first
        ``n_max`` horizontal ones.

    """
    model = homogenize(spec) if model is None else model
    report = SpectralReport()
    for eps in epsilons:
        report.rows.extend(
            spectral_point(spec.with_epsilon(eps), n_max, model, seed=seed)
        )
    return report


@dataclass(frozen=True)
class ResolventDefectReport:
    epsilon: float
    defect_max: float
    defect_mean: float
    probes: int
    seed: int

    def row(self):
        return {c: getattr(self, c) for c in RESOLVENT_COLUMNS}


def resolvent_defect(spec, grids, model=None, probes=PROBES, seed=SEED):
    """
    Randomized lower bound of |||L_eps^-1 - E L_0^-1 M_eps||| on Z_eps.

    Every probe is a random nodal forcing on Q with |||f|||_{Z_eps} = 1.
    The limit problem is loaded with M_eps f.
    """
    model = homogenize(spec) if model is None else model
    grid_q, grid_omega = ladder_grids(spec) if grids is None else grids
    norms = RescaledNorms(spec, grid_q, weight=model.weight)
    eps_op = OriginalProblem(spec, grid_q).assemble()
    limit_op = LimitProblem(spec, grid_omega, model.a0,
                            model.weight).assemble()
    rng = np.random.default_rng(seed)
    defects = []
    for _ in range(probes):
        f = rng.standard_normal(grid_q.size)
        f /= norms.z_eps(f)
        u_eps = solve(eps_op, f)
        load = average_M(spec, f, grid_q)
        u_0 = solve(limit_op, load.values / model.weight)
        defects.append(
            norms.z_eps(u_eps.values - extend_E(u_0, grid_q).values)
        )
    defects = np.array(defects)
    logger.info(f"eps={spec.epsilon:g}: resolvent defect max "
                f"{defects.max():.4g} over {probes} probes")
    return ResolventDefectReport(
        spec.epsilon, float(defects.max()), float(defects.mean()),
        int(probes), int(seed),
    )


def _decomposition(op):
    cached = getattr(op, "_eigh", None)
    if cached is None:
        cached = op._eigh = eigh(op.matrix.toarray(), op.mass.toarray())
    return cached


def semigroup(op, u0, t, dt=None):
    """
    Linear semigroup e^{-tL} u0 from a dense eigendecomposition.

    With ``dt`` the backward-Euler symbol (1 + lambda dt)^(-t/dt) replaces
    e^{-lambda t}, reproducing t/dt implicit steps exactly.
    """
    values, vectors = _decomposition(op)
    u0 = u0.values if isinstance(u0, Field) else np.asarray(u0, dtype=float)
    coeffs = vectors.T @ (op.mass @ u0)
    if dt is None:
        symbol = np.exp(-values * t)
    else:
        steps = int(round(t / dt))
        symbol = (1.0 + values * dt) ** (-steps)
    return Field(op.grid, vectors @ (symbol * coeffs), "state")
