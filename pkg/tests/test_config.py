import pytest

import config
from errors import UsageError


def test_defaults(monkeypatch):
    for name in ("APFORCE_UNIVERSE", "APFORCE_MEET_ARITY", "APFORCE_PREPROCESS_CAP", "APFORCE_WITNESS_MARGIN"):
        monkeypatch.delenv(name, raising=False)
    assert config.default_universe() == 1 << 20
    assert config.meet_arity() == 3
    assert config.preprocess_cap() == 8
    assert config.witness_margin() == 2


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("APFORCE_UNIVERSE", "4096")
    monkeypatch.setenv("APFORCE_MEET_ARITY", "2")
    monkeypatch.setenv("APFORCE_LOG_LEVEL", "debug")
    assert config.default_universe() == 4096
    assert config.meet_arity() == 2
    assert config.log_level() == "DEBUG"


@pytest.mark.parametrize("name,value", [
    ("APFORCE_UNIVERSE", "lots"),
    ("APFORCE_UNIVERSE", "1000"),
    ("APFORCE_UNIVERSE", "32"),
    ("APFORCE_MEET_ARITY", "0"),
])
def test_bad_environment_values(monkeypatch, name, value):
    monkeypatch.setenv(name, value)
    with pytest.raises(UsageError):
        config.default_universe() if name == "APFORCE_UNIVERSE" else config.meet_arity()
