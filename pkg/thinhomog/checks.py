"""
Acceptance checks evaluated on study results. A study exits nonzero when any
acceptance-tagged check fails.
"""

from dataclasses import dataclass
import logging

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Check:
    """
    Outcome of one check.

    Parameters
    ----------
    name : str
    passed : bool
    detail : str
        Values behind the verdict, for the log.
    acceptance : bool
        Only acceptance checks decide the exit status.

    """

    name: str
    passed: bool
    detail: str = ""
    acceptance: bool = True

    def log(self, log=None):
        log = logger if log is None else log
        verdict = "PASS" if self.passed else "FAIL"
        if not self.acceptance:
            verdict += " (informational)"
        msg = f"{verdict} {self.name}: {self.detail}"
        if self.passed or not self.acceptance:
            log.info(msg)
        else:
            log.warning(msg)


def format_values(values):
    return "[" + ", ".join(f"{v:.4g}" for v in values) + "]"


def strictly_decreasing(name, values, acceptance=True):
    values = np.asarray(values, dtype=float)
    ok = bool(values.size > 0 and np.all(np.isfinite(values))
              and np.all(values[1:] < values[:-1]))
    return Check(name, ok, format_values(values), acceptance)


def non_increasing(name, values, atol, acceptance=True):
    """values[k + 1] <= values[k] + atol for every k."""
    values = np.asarray(values, dtype=float)
    ok = bool(values.size > 0 and np.all(np.isfinite(values))
              and np.all(values[1:] <= values[:-1] + atol))
    detail = f"{format_values(values)} (slack {atol:g})"
    return Check(name, ok, detail, acceptance)


def close_to(name, value, target, tol, acceptance=True):
    ok = bool(np.isfinite(value) and abs(value - target) <= tol)
    return Check(
        name, ok,
        f"{value:.12g} vs {target:.12g} (|diff| "
        f"{abs(value - target):.3g}, tol {tol:g})",
        acceptance,
    )


def all_below(name, values, bound, acceptance=True):
    values = np.asarray(values, dtype=float)
    ok = bool(np.all(np.isfinite(values)) and np.all(values <= bound))
    return Check(name, ok, f"max {np.max(values, initial=0.0):.3g} "
                           f"<= {bound:g}", acceptance)


def summarize(checks):
    """(passed, failed acceptance checks)."""
    failed = [c for c in checks if c.acceptance and not c.passed]
    return not failed, failed
