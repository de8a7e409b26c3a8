"""
Study drivers: eps-sweeps over every part of the package, CSV output and
acceptance checks.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import logging
from pathlib import Path

import numpy as np

from . import checks
from .config import config_hash
from .dynamics import COLUMNS as DYNAMICS_COLUMNS
from .dynamics import equilibria_point, fit_power, semigroup_defect
from .errors import ThinHomogError
from .homogenization import (
    HomogenizedModel,
    cell_problem,
    common_period,
    diophantine_check,
    homogenize,
    p0_two_scale,
    profile_sum,
    reiterated_A0,
    resolve_regime,
)
from .ladder import COLUMNS as LADDER_COLUMNS
from .ladder import decay_order, ladder_trend, verify_ladder
from .operators import ladder_grids
from .plotting import write_svg
from .spectral import (
    RESOLVENT_COLUMNS,
    SPECTRUM_COLUMNS,
    resolvent_defect,
    spectral_point,
)
from .tables import CsvTable

logger = logging.getLogger(__name__)

HOMOGENIZE_COLUMNS = (
    "method", "regime", "p0", "a0_11", "a0_12", "a0_22", "weight", "error",
    "quadrature_points",
)


def _forcing_cosine(spec):
    def f(pts):
        return 1.0 + np.cos(np.pi * pts[..., 0])

    return f


def _forcing_constant(spec):
    def f(pts):
        return np.ones(pts.shape[:-1])

    return f


def _forcing_vertical(spec):
    # y / eps stays bounded across the family
    def f(pts):
        y = pts[..., spec.dim] / spec.epsilon
        return 1.0 + np.cos(np.pi * pts[..., 0]) * (1.0 + y)

    return f


FORCINGS = {
    "cosine": _forcing_cosine,
    "constant": _forcing_constant,
    "vertical": _forcing_vertical,
}

INITIAL_STATES = {
    "cosine": lambda x: 0.5 + 0.5 * np.cos(np.pi * x[..., 0]),
    "constant": lambda x: np.full(x.shape[:-1], 0.5),
    "bump": lambda x: np.exp(-20.0 * np.sum((x - 0.5) ** 2, axis=-1)),
}


@dataclass
class StudyResult:
    """Tables, checks and per-eps failures of one study run."""

    kind: str
    tables: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    paths: list = field(default_factory=list)

    @property
    def passed(self):
        ok, _ = checks.summarize(self.checks)
        return ok and not self.failures


def _sweep(cfg, work, jobs):
    """
    Run ``work(eps)`` for every eps of the sweep on a bounded pool.

    Returns
    -------
    results : list of (eps, value)
        In sweep order, successful items only.
    failures : list of (eps, str)

    """
    def guarded(eps):
        try:
            return eps, work(eps), None
        except ThinHomogError as err:
            logger.error(f"eps={eps:g}: {type(err).__name__}: {err}")
            return eps, None, f"{type(err).__name__}: {err}"

    with ThreadPoolExecutor(max_workers=max(1, int(jobs))) as pool:
        outcomes = list(pool.map(guarded, cfg.epsilons))
    results = [(e, v) for e, v, err in outcomes if err is None]
    failures = [(e, err) for e, _, err in outcomes if err is not None]
    return results, failures


def _grids(cfg, spec):
    num = cfg["numerics"]
    return ladder_grids(spec, num["cells_per_period"], num["vertical_cells"])


def run_ladder(cfg, jobs=1):
    forcing = FORCINGS[cfg["study"]["forcing"]]
    tol = cfg["numerics"]["cg_rtol"]

    def work(eps):
        spec = cfg.spec(eps)
        return verify_ladder(spec, _grids(cfg, spec), forcing(spec), tol=tol)

    results, failures = _sweep(cfg, work, jobs)
    reports = [r for _, r in results]
    table = CsvTable(LADDER_COLUMNS, [r.row() for r in reports])
    found = []
    if len(reports) >= 2:
        trend = ladder_trend(reports)
        ratios = [r.ratio_total_over_eta for r in reports]
        order = decay_order(reports)
        detail = (f"order {order:.3g}, ratios "
                  f"{checks.format_values(ratios)}")
        etas = [r.eta for r in reports]
        if cfg["geometry"]["out_of_hypothesis"]:
            logger.warning(
                "Out-of-hypothesis spec: the ladder estimates are expected "
                "to fail."
            )
            found.append(checks.Check(
                "negative control breaks the ladder trend", not trend,
                detail,
            ))
            found.append(checks.strictly_decreasing(
                "eta decreasing", etas, acceptance=False
            ))
        else:
            found.append(checks.Check("ladder trend", trend, detail))
            found.append(checks.strictly_decreasing(
                "dist_total decreasing", [r.dist_total for r in reports]
            ))
            found.append(checks.strictly_decreasing("eta decreasing", etas))
    return {"ladder": table}, found, failures


def _model_kwargs(cfg, regime):
    hom = cfg["homogenization"]
    if regime == "same-order-incommensurate":
        return {"t_max": hom["t_max"], "weighted": hom["weighted"],
                "tol": hom["ergodic_tol"]}
    if regime == "nD-quasiperiodic-truncated":
        return {"box_sizes": tuple(hom["box_sizes"])}
    return {}


def _homogenize_row(method, model):
    row = dict.fromkeys(HOMOGENIZE_COLUMNS, float("nan"))
    row.update(method=method, regime=model.regime, weight=model.weight,
               error=model.error,
               quadrature_points=int(model.details.get("points", 0)))
    a0 = model.a0
    if model.dim == 1:
        row["p0"] = float(a0[0, 0])
        row["a0_11"] = float(a0[0, 0])
    else:
        row.update(a0_11=float(a0[0, 0]), a0_12=float(a0[0, 1]),
                   a0_22=float(a0[1, 1]))
    return row


def run_homogenize(cfg, jobs=1):
    spec = cfg.spec()
    hom = cfg["homogenization"]
    regime = hom["regime"] or resolve_regime(spec, hom["commensurate"])
    model = homogenize(spec, regime, **_model_kwargs(cfg, regime))
    rows = [_homogenize_row("dispatch", model)]
    g, h = spec.top, spec.bottom
    lo = g.lower_bound + h.lower_bound
    hi = g.upper_bound + h.upper_bound
    found = [checks.Check(
        "A0 within the bounds of G", model.within_bounds(lo, hi),
        f"[{lo:.4g}, {hi:.4g}]",
    )]
    if spec.dim == 1:
        if regime == "same-order-commensurate":
            sol = cell_problem(profile_sum(g, h),
                               cell=(common_period(g, h),))
            rows.append(_homogenize_row(
                "cell-problem",
                HomogenizedModel(regime, sol.a0, model.weight),
            ))
            found.append(checks.close_to(
                "cell problem matches the harmonic mean",
                float(sol.a0[0, 0]), model.p0, 1e-6,
            ))
        elif regime == "same-order-incommensurate":
            p0 = p0_two_scale(g, h)
            rows.append(_homogenize_row(
                "two-scale", HomogenizedModel(regime, p0, model.weight)
            ))
            found.append(checks.close_to(
                "ergodic mean matches the two-scale mean", model.p0, p0,
                1e-3,
            ))
            report = diophantine_check(cfg.diophantine())
            found.append(checks.Check(
                "Diophantine condition", report.passed,
                f"min margin {report.min_margin:.4g} at "
                f"{report.worst_pair}", acceptance=False,
            ))
        elif regime == "different-order":
            outer, inner = (h, g) if spec.beta > spec.alpha else (g, h)
            staged = reiterated_A0(outer, inner, dim=1,
                                   weight=model.weight)
            rows.append(_homogenize_row("reiterated", staged))
            found.append(checks.close_to(
                "reiterated A0 matches the two-scale mean",
                staged.p0, model.p0, 1e-6,
            ))
    table = CsvTable(HOMOGENIZE_COLUMNS, rows)
    return {"homogenize": table}, found, []


def run_spectrum(cfg, jobs=1):
    num = cfg["numerics"]
    model = homogenize(cfg.spec())

    def work(eps):
        spec = cfg.spec(eps)
        return spectral_point(spec, num["n_max"], model, _grids(cfg, spec),
                              seed=cfg.seed)

    results, failures = _sweep(cfg, work, jobs)
    rows = [row for _, point in results for row in point]
    table = CsvTable(SPECTRUM_COLUMNS, rows)
    found = []
    if rows:
        found.append(checks.all_below(
            "lambda_1 = 1",
            [abs(r["lambda_eps"] - 1.0) for r in rows if r["n"] == 1], 1e-8,
        ))
        exact = [(r["lambda_0"], r["lambda_0_exact"]) for r in rows
                 if np.isfinite(r["lambda_0_exact"])]
        if exact:
            found.append(checks.all_below(
                "limit eigenvalues match the closed form",
                [abs(a - b) / b for a, b in exact], 5e-2,
            ))
    if len(results) >= 2:
        for n in range(2, num["n_max"] + 1):
            gaps = [r["gap"] for r in rows if r["n"] == n]
            dists = [r["eigfun_dist"] for r in rows if r["n"] == n]
            found.append(checks.strictly_decreasing(f"gap n={n}", gaps))
            found.append(checks.strictly_decreasing(
                f"eigenfunction distance n={n}", dists
            ))
    return {"spectrum": table}, found, failures


def run_resolvent(cfg, jobs=1):
    num = cfg["numerics"]
    model = homogenize(cfg.spec())

    def work(eps):
        spec = cfg.spec(eps)
        return resolvent_defect(spec, _grids(cfg, spec), model,
                                probes=num["probes"], seed=cfg.seed)

    results, failures = _sweep(cfg, work, jobs)
    reports = [r for _, r in results]
    table = CsvTable(RESOLVENT_COLUMNS, [r.row() for r in reports])
    found = []
    if len(reports) >= 2:
        found.append(checks.strictly_decreasing(
            "resolvent defect decreasing", [r.defect_max for r in reports]
        ))
    return {"resolvent": table}, found, failures


def run_parabolic(cfg, jobs=1):
    dyn = cfg["dynamics"]
    nl = cfg.nonlinearity()
    model = homogenize(cfg.spec())
    u0 = INITIAL_STATES[dyn["initial"]]

    def work(eps):
        spec = cfg.spec(eps)
        return semigroup_defect(spec, _grids(cfg, spec), nl, dyn["t_list"],
                                u0, model, dt=dyn["dt"])

    results, failures = _sweep(cfg, work, jobs)
    rows = [row for _, point in results for row in point]
    table = CsvTable(DYNAMICS_COLUMNS, rows)
    found = []
    if len(results) >= 2:
        times = sorted(dyn["t_list"])
        t_ref = min(times, key=lambda t: abs(t - 1.0))
        at_ref = [r for r in rows if r["t"] == t_ref]
        found.append(checks.strictly_decreasing(
            f"semigroup defect at t={t_ref:g} decreasing",
            [r["defect_H1"] for r in at_ref],
        ))
        for t in times:
            sub = [r for r in rows if r["t"] == t]
            rate = fit_power([r["epsilon"] for r in sub],
                             [r["defect_H1"] for r in sub])
            logger.info(f"t={t:g}: defect ~ eps^{rate:.3g}")
    return {"parabolic": table}, found, failures


def run_equilibria(cfg, jobs=1):
    dyn = cfg["dynamics"]
    nl = cfg.nonlinearity()
    model = homogenize(cfg.spec())

    def work(eps):
        spec = cfg.spec(eps)
        return equilibria_point(spec, _grids(cfg, spec), nl, model,
                                t_transient=dyn["t_transient"], dt=dyn["dt"])

    results, failures = _sweep(cfg, work, jobs)
    rows = [row for _, (row, _) in results]
    table = CsvTable(DYNAMICS_COLUMNS, rows)
    found = []
    if results:
        _, (_, sets) = results[-1]
        limit = sets["limit"]
        found.append(checks.all_below(
            "Newton residuals", limit.residuals, dyn["newton_tol"]
        ))
        roots = _constant_roots(nl)
        present = [
            any(np.max(np.abs(f.values - c)) <= 1e-6 for f in limit)
            for c in roots
        ]
        found.append(checks.Check(
            "constant equilibria found", all(present),
            f"roots {checks.format_values(roots)}",
        ))
    if len(results) >= 2:
        found.append(checks.non_increasing(
            "equilibria semidistance non-increasing",
            [r["semidist_equilibria"] for r in rows], 1e-8,
        ))
        found.append(checks.non_increasing(
            "attractor sample semidistance non-increasing",
            [r["semidist_attractor_surrogate"] for r in rows], 1e-4,
        ))
    return {"equilibria": table}, found, failures


def _constant_roots(nl):
    """Real roots of c = f(c) inside the polynomial window."""
    if nl.is_zero:
        return [0.0]
    coeffs = list(nl.coefficients)
    coeffs[1] -= 1.0
    roots = np.polynomial.Polynomial(coeffs).roots()
    real = roots[np.abs(roots.imag) < 1e-9].real
    return sorted(float(r) for r in real if abs(r) <= nl.window)


RUNNERS = {
    "ladder": run_ladder,
    "homogenize": run_homogenize,
    "spectrum": run_spectrum,
    "resolvent": run_resolvent,
    "parabolic": run_parabolic,
    "equilibria": run_equilibria,
}

PLOTS = {
    "ladder": ("loglog", None),
    "spectrum": ("gaps", None),
    "resolvent": ("loglog", ("epsilon", "defect_max")),
    "parabolic": ("loglog", ("epsilon", "defect_H1")),
    "equilibria": ("bars", None),
}


def run_study(cfg, out_dir=None, jobs=1, svg=None, timestamp=None):
    """
    Run the study named by ``cfg.kind`` and write its outputs.

    Parameters
    ----------
    cfg : StudyConfig
    out_dir : path, optional
        Defaults to ``output.directory`` of the config.
    jobs : int
        Worker threads for the eps-sweep.
    svg : bool, optional
        Defaults to ``output.svg``.
    timestamp : str, optional
        Fixed provenance timestamp.

    Returns
    -------
    StudyResult
        Per-eps errors are collected in ``failures``; tables are written
        with whatever rows succeeded.

    """
    out_dir = Path(out_dir) if out_dir is not None else cfg.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    svg = cfg["output"]["svg"] if svg is None else svg
    digest = config_hash(cfg)
    logger.info(f"Running {cfg.kind} study (config {digest[:12]}).")
    result = StudyResult(cfg.kind)
    try:
        tables, found, failures = RUNNERS[cfg.kind](cfg, jobs)
    except ThinHomogError as err:
        logger.error(f"{cfg.kind} study failed: {err}")
        result.failures.append((None, f"{type(err).__name__}: {err}"))
        return result
    result.tables, result.checks, result.failures = tables, found, failures
    for name, table in tables.items():
        table.provenance.update({
            "config_hash": digest,
            "study": cfg.kind,
            "seed": cfg.seed,
        })
        if failures:
            table.provenance["failed_epsilons"] = ", ".join(
                f"{e:g}" for e, _ in failures
            )
        path = out_dir / f"{name}.csv"
        result.paths.append(table.write(path, timestamp))
        if svg and cfg.kind in PLOTS:
            kind, columns = PLOTS[cfg.kind]
            result.paths.append(write_svg(
                out_dir / f"{name}.svg", table, kind, columns, digest
            ))
    for check in result.checks:
        check.log(logger)
    return result
