"""Config parsing, validation, and hashing."""

import pytest

from modnn import config as cf
from modnn.errors import ConfigError


def test_defaults_fill_in():
    cfg = cf.parse_config("seed = 7\n")
    assert cfg["seed"] == 7
    assert cfg["sim.days"] == 92
    assert cfg["model.variant"] == "modnn"


def test_comments_and_blank_lines():
    cfg = cf.parse_config("# a comment\n\nseed = 3  # trailing\nrc.r_env = 0.02\n")
    assert cfg["seed"] == 3
    assert cfg["rc.r_env"] == 0.02


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="nope.key"):
        cf.parse_config("seed = 1\nnope.key = 2\n")


def test_missing_seed_rejected():
    with pytest.raises(ConfigError, match="seed"):
        cf.parse_config("sim.days = 4\n")


def test_type_errors_are_named():
    with pytest.raises(ConfigError, match="sim.days"):
        cf.parse_config("seed = 1\nsim.days = soon\n")


def test_cross_validation_supply_below_setpoint():
    with pytest.raises(ConfigError, match="t_supply"):
        cf.parse_config("seed = 1\nhvac.t_supply = 25.0\n")


def test_hash_stable_and_sensitive():
    a = cf.parse_config("seed = 1\n")
    b = cf.parse_config("seed = 1\n# other layout\n")
    c = cf.parse_config("seed = 2\n")
    assert cf.config_hash(a) == cf.config_hash(b)
    assert cf.config_hash(a) != cf.config_hash(c)


def test_render_round_trip():
    cfg = cf.parse_config("seed = 9\nweather.t_amp = 6.5\n")
    again = cf.parse_config(cf.render_config(cfg))
    assert again == cfg


def test_typed_views_build():
    cfg = cf.parse_config("seed = 5\n")
    assert cf.rc_params(cfg).c_zone == 2.5e6
    assert cf.hvac_params(cfg).flow_max == 0.16
    assert cf.schedule_policy(cfg).occupants == 3
    assert cf.model_config(cfg, "lstm").variant == "lstm"
    assert cf.train_hyper(cfg).seed == 5
    assert cf.consistency_settings(cfg).seed == 5
    assert cf.control_setup(cfg).days == 3
    assert cf.variants(cfg) == ["modnn"]


def test_variant_list():
    cfg = cf.parse_config("seed = 1\nmodel.variant = modnn, lstm\n")
    assert cf.variants(cfg) == ["modnn", "lstm"]
    with pytest.raises(ConfigError):
        cf.variants(cf.parse_config("seed = 1\nmodel.variant = tcn\n"))
