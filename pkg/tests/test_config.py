from pathlib import Path

import pytest

import thinhomog as th
from thinhomog.config import (
    SEED_ENV,
    apply_environment,
    config_hash,
    load_config,
)

CONFIGS = sorted((Path(__file__).parents[1] / "configs").glob("*.yaml"))


def _lines(err):
    return {line for line, _ in err.value.failures}


def test_empty_file_takes_defaults():
    cfg = th.parse_config("")
    assert cfg.kind == "ladder"
    assert cfg.epsilons == [0.1, 0.05, 0.025, 0.0125]
    assert cfg.seed == 42
    assert cfg["numerics"]["cg_rtol"] == 1e-10
    assert cfg.nonlinearity().coefficients == (0.0, 2.0, 0.0, -1.0)


def test_spec_from_config():
    cfg = th.parse_config(
        "geometry:\n"
        "  bottom: const(0.5)\n"
        "  bottom_period: 2.0\n"
        "study:\n"
        "  epsilons: [0.2, 0.1]\n"
    )
    spec = cfg.spec()
    assert spec.epsilon == 0.2
    assert spec.bottom.is_constant
    assert spec.bottom.period == 2.0
    assert cfg.spec(0.1).epsilon == 0.1
    assert spec.base.dim == 1


def test_resonant_exponent_is_rejected_with_its_line():
    text = "# comment\ngeometry:\n  alpha: 1.0\n"
    with pytest.raises(th.ConfigError) as err:
        th.parse_config(text)
    assert _lines(err) == {3}
    assert "line 3" in str(err.value)


def test_every_failure_is_reported():
    text = (
        "study:\n"
        "  kind: nope\n"
        "  epsilons: [0.1, 0.2]\n"
        "numerics:\n"
        "  n_max: 0\n"
        "  colour: red\n"
        "extras:\n"
        "  a: 1\n"
    )
    with pytest.raises(th.ConfigError) as err:
        th.parse_config(text)
    assert {2, 3, 5, 6, 7} <= _lines(err)
    assert len(err.value.failures) >= 5


def test_dsl_errors_carry_lines():
    text = "geometry:\n  top: wave(1)\ndynamics:\n  nonlinearity: cubic(1)\n"
    with pytest.raises(th.ConfigError) as err:
        th.parse_config(text)
    assert _lines(err) == {2, 4}


def test_out_of_hypothesis_only_for_ladder():
    text = (
        "geometry:\n"
        "  alpha: 1.0\n"
        "  beta: 1.0\n"
        "  out_of_hypothesis: true\n"
    )
    assert th.parse_config(text).kind == "ladder"
    with pytest.raises(th.ConfigError) as err:
        th.parse_config(text + "study:\n  kind: spectrum\n")
    assert _lines(err) == {4}


def test_invalid_yaml():
    with pytest.raises(th.ConfigError) as err:
        th.parse_config("geometry: [1, 2\n")
    assert None not in _lines(err)
    with pytest.raises(th.ConfigError):
        th.parse_config("- just\n- a list\n")


@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.stem)
def test_packaged_studies_round_trip(path):
    cfg = load_config(path)
    text = th.serialize_config(cfg)
    again = th.parse_config(text)
    assert th.serialize_config(again) == text
    assert config_hash(again) == config_hash(cfg)


def test_hash_tracks_content():
    cfg = th.parse_config("")
    assert config_hash(cfg) == config_hash(th.parse_config(""))
    other = cfg.replace("numerics", seed=7)
    assert config_hash(other) != config_hash(cfg)
    assert cfg.seed == 42


def test_seed_from_environment():
    cfg = th.parse_config("")
    assert apply_environment(cfg, {}) is cfg
    assert apply_environment(cfg, {SEED_ENV: "7"}).seed == 7
    with pytest.raises(th.ConfigError):
        apply_environment(cfg, {SEED_ENV: "seven"})
