import logging

import pytest

from lisce.config import format_config, load_config, parse_config, with_overrides
from lisce.errors import ConfigError
from lisce.harness import DEFAULT_TRIALS, ExperimentConfig


def test_defaults_when_empty(caplog):
    with caplog.at_level(logging.INFO, logger="lisce"):
        cfg = parse_config("# nothing here\n")
    assert cfg == ExperimentConfig()
    assert cfg.trials == DEFAULT_TRIALS == 10_000
    assert any("trials" in m for m in caplog.messages)


def test_full_parse():
    cfg = parse_config(
        """
        sigma_h2 = 1/64   # direct path
        n_elements = 16
        snr_db = 0, 3.5, 7
        trials = 20
        seed = 99
        estimators = ls
        eps = 0.2
        schedule = diminishing
        """
    )
    assert cfg.channel.sigma_h2 == 1 / 64 and cfg.channel.n_elements == 16
    assert cfg.snr_db_list == (0.0, 3.5, 7.0)
    assert (cfg.trials, cfg.master_seed, cfg.estimator_set) == (20, 99, ("LS",))
    assert cfg.dual_ascent.eps0 == 0.2 and cfg.dual_ascent.schedule == "diminishing"


def test_aliases():
    cfg = parse_config("master_seed = 5\nsnr_db_list = 1\nepsilon = 0.3\nestimator_set = DES, LS\n")
    assert cfg.master_seed == 5 and cfg.snr_db_list == (1.0,) and cfg.dual_ascent.eps0 == 0.3


@pytest.mark.parametrize(
    "text,line,fragment",
    [
        ("trials = 10\nbogus = 1\n", 2, "unknown key"),
        ("trials = 10\n\n\ntrials = 20\n", 4, "duplicate"),
        ("seed = 1\ntrials = ten\n", 2, "bad value"),
        ("trials 10\n", 1, "key = value"),
        ("trials = 2.5\n", 1, "integer"),
        ("snr_db = ,\n", 1, "empty"),
        ("seed = 1\ntrials =\n", 2, "missing value"),
        ("sigma_f2 = -1\n", 1, "sigma_f2"),
        ("trials = 5\nk2 = 0\n", 2, "k1 and k2"),
    ],
)
def test_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")
    assert fragment in str(info.value)


def test_round_trip():
    cfg = parse_config("sigma_g2 = 1/9\nsnr_db = 0, 2\ntrials = 7\ntau = 0.05\n")
    text = "\n".join(f"{k} = {v}" for k, v in format_config(cfg))
    assert parse_config(text) == cfg


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.cfg")


def test_overrides():
    cfg = with_overrides(ExperimentConfig(), seed=3, workers=2)
    assert (cfg.master_seed, cfg.workers) == (3, 2)
    assert with_overrides(cfg) is cfg
