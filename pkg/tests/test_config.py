import dataclasses

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import SCENARIOS
from radioslam.config import (
    ConfigError,
    config_from_dict,
    config_hash,
    config_to_dict,
    dump_config,
    load_config,
    parse_config,
    with_overrides,
)
from radioslam.engine import PriorConfig
from radioslam.models import ModelConfig

MINIMAL = """
environment:
  pa_positions: [[2.0, 6.0]]
trajectory:
  waypoints: [[4.0, 2.0], [4.2, 2.0]]
  num_steps: 10
"""


def test_minimal_config_gets_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.model == ModelConfig() and cfg.prior == PriorConfig()
    assert cfg.signal.spec().M == 31
    assert cfg.noise_variance == pytest.approx(10 ** -4.2)
    assert (cfg.particles.agent, cfg.particles.noise) == (10_000, 1_000)
    assert cfg.environment.surfaces == ()


@pytest.mark.parametrize("extra,fragment", [
    ("signal: {bandwidth: 3.05e8, delta: 1.0e7}", "not an integer"),
    ("model: {sigma_x2: -1.0}", "sigma_x2"),
    ("noise_variance: -1.0", "noise_variance"),
    ("particles: {agent: 0}", "particle"),
    ("colour: blue", "unknown key"),
    ("model: {p_s: yes}", "expected a number"),
    ("n_runs: 1.5", "integer"),
])
def test_invalid_values_rejected(extra, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(MINIMAL + extra + "\n")


def test_structural_errors():
    with pytest.raises(ConfigError, match="required"):
        parse_config("environment: {pa_positions: [[0, 0]]}")
    with pytest.raises(ConfigError, match="line"):
        parse_config("environment: [unclosed")
    with pytest.raises(ConfigError, match="empty"):
        parse_config("")
    with pytest.raises(ConfigError, match="spacing"):
        parse_config(MINIMAL.replace("num_steps: 10", "num_steps: 10\n  spacing: 0.1"))
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/nonexistent/x.yaml")


@pytest.mark.parametrize("name", ["room.yaml", "hall_679_approx.yaml"])
def test_shipped_scenarios_round_trip(name):
    cfg = load_config(SCENARIOS / name)
    again = parse_config(dump_config(cfg))
    assert again == cfg
    assert dump_config(again) == dump_config(cfg)
    assert config_from_dict(config_to_dict(cfg)) == cfg


@given(st.integers(1, 50), st.integers(0, 2**31), st.floats(1e-8, 1e-1))
def test_round_trip_is_idempotent(runs, seed, eta):
    cfg = dataclasses.replace(parse_config(MINIMAL), n_runs=runs, base_seed=seed, noise_variance=eta)
    assert parse_config(dump_config(cfg)) == cfg


def test_hash_and_overrides():
    cfg = parse_config(MINIMAL)
    assert config_hash(cfg) == config_hash(parse_config(MINIMAL))
    over = with_overrides(cfg, n_runs=3, base_seed=7, particles=100)
    assert (over.n_runs, over.base_seed, over.particles.agent, over.particles.noise) == (3, 7, 100, 1000)
    assert config_hash(over) != config_hash(cfg)
    assert with_overrides(cfg) == cfg
    with pytest.raises(ConfigError):
        with_overrides(cfg, n_runs=0)
