"""
Study configuration files.

A study file is YAML with the flat sections ``geometry``, ``study``,
``numerics``, ``homogenization``, ``dynamics`` and ``output``. Every key is
optional; missing keys take the packaged defaults in ``config.yaml``.
"""

from copy import deepcopy
from dataclasses import dataclass
import hashlib
import logging
import os
from pathlib import Path

import yaml

from .errors import ConfigError, ThinHomogError
from .geometry import BaseDomain, ThinDomainSpec
from .homogenization import REGIMES, DiophantineParams
from .nonlinearity import parse_nonlinearity
from .profiles import parse_profile

logger = logging.getLogger(__name__)

KINDS = ("ladder", "homogenize", "spectrum", "resolvent", "parabolic",
         "equilibria")
FORCINGS = ("cosine", "constant", "vertical")
INITIAL_STATES = ("cosine", "constant", "bump")
SEED_ENV = "THINHOMOG_SEED"


def _defaults():
    path = Path(__file__).parent / "config.yaml"
    with open(path, "r") as f:
        config = yaml.safe_load(f)
    return {
        section: {key: check(config[section][key])
                  for key, check in SCHEMA[section].items()}
        for section in SCHEMA
    }


def _number(value):
    # PyYAML reads 1e-10 (no dot) as a string
    if isinstance(value, bool):
        raise ValueError(f"expected a number, got {value!r}")
    return float(value)


def _float(value):
    return _number(value)


def _positive(value):
    value = _number(value)
    if not value > 0:
        raise ValueError(f"must be positive, got {value}")
    return value


def _integer(value):
    if isinstance(value, bool) or float(value) != int(float(value)):
        raise ValueError(f"expected an integer, got {value!r}")
    return int(float(value))


def _count(value):
    value = _integer(value)
    if value < 1:
        raise ValueError(f"must be at least 1, got {value}")
    return value


def _bool(value):
    if not isinstance(value, bool):
        raise ValueError(f"expected true or false, got {value!r}")
    return value


def _text(value):
    if not isinstance(value, str):
        raise ValueError(f"expected a string, got {value!r}")
    return value


def _positive_list(value):
    if not isinstance(value, list) or not value:
        raise ValueError("expected a nonempty list")
    return [_positive(v) for v in value]


def _count_list(value):
    if not isinstance(value, list) or not value:
        raise ValueError("expected a nonempty list")
    return [_count(v) for v in value]


def _axes(value):
    if value is None:
        return None
    if not isinstance(value, list) or not value:
        raise ValueError("expected a nonempty list of axes")
    axes = [_integer(v) for v in value]
    if any(a not in (0, 1) for a in axes):
        raise ValueError("axes must be 0 or 1")
    return axes


def _bounds(value):
    if not isinstance(value, list) or not value:
        raise ValueError("expected [a, b] or [[a1, b1], [a2, b2]]")
    if isinstance(value[0], list):
        out = [[_float(a), _float(b)] for a, b in value]
    else:
        a, b = value
        out = [_float(a), _float(b)]
    BaseDomain.from_bounds(out)
    return out


def _profile(value):
    parse_profile(_text(value))
    return value


def _nonlinearity(value):
    parse_nonlinearity(_text(value))
    return value


def _choice(options):
    def check(value):
        if value not in options:
            raise ValueError(
                f"{value!r} is not one of {', '.join(options)}"
            )
        return value

    return check


def _optional(check):
    def wrapped(value):
        return None if value is None else check(value)

    return wrapped


SCHEMA = {
    "geometry": {
        "base": _bounds,
        "top": _profile,
        "bottom": _profile,
        "top_period": _positive,
        "bottom_period": _positive,
        "top_axes": _axes,
        "bottom_axes": _axes,
        "alpha": _float,
        "beta": _float,
        "out_of_hypothesis": _bool,
    },
    "study": {
        "kind": _choice(KINDS),
        "epsilons": _positive_list,
        "forcing": _choice(FORCINGS),
    },
    "numerics": {
        "cells_per_period": _count,
        "vertical_cells": _count,
        "cg_rtol": _positive,
        "cg_maxiter_factor": _positive,
        "eig_tol": _positive,
        "n_max": _count,
        "probes": _count,
        "seed": _integer,
    },
    "homogenization": {
        "regime": _optional(_choice(REGIMES)),
        "commensurate": _optional(_bool),
        "t_max": _optional(_positive),
        "weighted": _bool,
        "ergodic_tol": _positive,
        "box_sizes": _count_list,
        "diophantine_s0": _positive,
        "diophantine_C": _positive,
        "diophantine_N": _count,
    },
    "dynamics": {
        "nonlinearity": _nonlinearity,
        "initial": _choice(INITIAL_STATES),
        "dt": _positive,
        "t_list": _positive_list,
        "t_transient": _positive,
        "newton_tol": _positive,
    },
    "output": {
        "directory": _text,
        "svg": _bool,
    },
}


@dataclass(frozen=True)
class StudyConfig:
    """
    A validated, fully defaulted study configuration.

    ``values`` maps section -> key -> value with the layout of ``SCHEMA``.
    """

    values: dict

    def __getitem__(self, section):
        return self.values[section]

    @property
    def kind(self):
        return self.values["study"]["kind"]

    @property
    def epsilons(self):
        return list(self.values["study"]["epsilons"])

    @property
    def seed(self):
        return self.values["numerics"]["seed"]

    @property
    def output_dir(self):
        return Path(self.values["output"]["directory"])

    def to_dict(self):
        return deepcopy(self.values)

    def replace(self, section, **changes):
        values = self.to_dict()
        values[section].update(changes)
        return StudyConfig(values)

    def spec(self, epsilon=None):
        """ThinDomainSpec at ``epsilon`` (first of the sweep by default)."""
        geo = self.values["geometry"]
        epsilon = self.epsilons[0] if epsilon is None else epsilon

        def axes(key):
            value = geo[key]
            return None if value is None else tuple(value)

        return ThinDomainSpec(
            base=BaseDomain.from_bounds(geo["base"]),
            bottom=parse_profile(geo["bottom"], geo["bottom_period"],
                                 axes("bottom_axes")),
            top=parse_profile(geo["top"], geo["top_period"],
                              axes("top_axes")),
            alpha=geo["alpha"],
            beta=geo["beta"],
            epsilon=epsilon,
            out_of_hypothesis=geo["out_of_hypothesis"],
        )

    def nonlinearity(self):
        return parse_nonlinearity(self.values["dynamics"]["nonlinearity"])

    def diophantine(self):
        geo, hom = self.values["geometry"], self.values["homogenization"]
        return DiophantineParams(
            geo["top_period"], geo["bottom_period"],
            s0=hom["diophantine_s0"], C=hom["diophantine_C"],
            N=hom["diophantine_N"],
        )


def _key_lines(text):
    """Line numbers (1-based) of every section and key of a YAML text."""
    lines = {}
    root = yaml.compose(text)
    if not isinstance(root, yaml.MappingNode):
        return lines
    for sec_node, body in root.value:
        section = sec_node.value
        lines[(section,)] = sec_node.start_mark.line + 1
        if isinstance(body, yaml.MappingNode):
            for key_node, _ in body.value:
                lines[(section, key_node.value)] = (
                    key_node.start_mark.line + 1
                )
    return lines


def parse_config(text):
    """
    Parse and validate a study file.

    Parameters
    ----------
    text : str
        YAML text.

    Returns
    -------
    StudyConfig

    Raises
    ------
    ConfigError
        Listing every failure found, each with its line number.

    """
    try:
        raw = yaml.safe_load(text)
        lines = _key_lines(text)
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError([(line, f"invalid YAML: {err}")]) from err
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError([(1, "a study file must be a mapping of sections")])

    failures = []
    values = _defaults()
    for section, body in raw.items():
        line = lines.get((section,))
        if section not in SCHEMA:
            failures.append((line, f"unknown section {section!r}"))
            continue
        if body is None:
            continue
        if not isinstance(body, dict):
            failures.append((line, f"section {section!r} must be a mapping"))
            continue
        for key, value in body.items():
            key_line = lines.get((section, key), line)
            check = SCHEMA[section].get(key)
            if check is None:
                failures.append((key_line, f"unknown key {section}.{key}"))
                continue
            try:
                values[section][key] = check(value)
            except ConfigError as err:
                failures.extend((key_line, msg) for _, msg in err.failures)
            except (ValueError, TypeError, IndexError, ThinHomogError) as err:
                failures.append((key_line, f"{section}.{key}: {err}"))

    failures.extend(_cross_checks(values, raw, lines))
    if failures:
        raise ConfigError(failures)
    return StudyConfig(values)


def _cross_checks(values, raw, lines):
    def where(section, key):
        return lines.get((section, key), lines.get((section,)))

    failures = []
    geo, study = values["geometry"], values["study"]
    eps = study["epsilons"]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        failures.append((where("study", "epsilons"),
                         "study.epsilons must be strictly decreasing"))
    for key in ("alpha", "beta"):
        value = geo[key]
        if geo["out_of_hypothesis"]:
            ok = 0 < value <= 1
            interval = "(0, 1]"
        else:
            ok = 0 < value < 1
            interval = "(0, 1)"
        if not ok:
            failures.append((where("geometry", key),
                             f"geometry.{key} = {value} must lie in "
                             f"{interval}"))
    if geo["out_of_hypothesis"] and study["kind"] != "ladder":
        failures.append((where("geometry", "out_of_hypothesis"),
                         "out-of-hypothesis specs are allowed in ladder "
                         "studies only"))
    box = values["homogenization"]["box_sizes"]
    if any(b >= c for b, c in zip(box, box[1:])):
        failures.append((where("homogenization", "box_sizes"),
                         "homogenization.box_sizes must be increasing"))
    return failures


def serialize_config(cfg):
    """Fully defaulted YAML with sorted keys; byte-stable for a config."""
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True,
                          default_flow_style=False)


def config_hash(cfg):
    return hashlib.sha256(serialize_config(cfg).encode("utf-8")).hexdigest()


def load_config(path):
    with open(path, "r", encoding="utf-8") as f:
        return parse_config(f.read())


def apply_environment(cfg, environ=None):
    """Honor ``THINHOMOG_SEED``."""
    environ = os.environ if environ is None else environ
    value = environ.get(SEED_ENV)
    if value is None:
        return cfg
    try:
        seed = int(value)
    except ValueError as err:
        raise ConfigError([(None, f"{SEED_ENV}={value!r} is not an "
                                  "integer")]) from err
    logger.info(f"{SEED_ENV} overrides the configured seed with {seed}.")
    return cfg.replace("numerics", seed=seed)
