from fractions import Fraction

import pytest

from permjunta.config import CEILINGS, ExperimentConfig, env_threads, resolve_epsilon
from permjunta.errors import ContractError, ResourceLimitError


def test_symbolic_epsilon():
    assert resolve_epsilon("n^{-1/3}", 8) == Fraction(1, 2)
    assert resolve_epsilon("n^(-1/3)", 27) == Fraction(1, 3)
    assert abs(float(resolve_epsilon("n^{-1/3}", 7)) - 7 ** (-1 / 3)) < 1e-3
    assert resolve_epsilon("1/5", 7) == Fraction(1, 5)
    assert ExperimentConfig(n=8).eps() == Fraction(1, 2)


def test_env_threads(monkeypatch):
    monkeypatch.delenv("PERMJUNTA_THREADS", raising=False)
    assert env_threads(3) == 3
    monkeypatch.setenv("PERMJUNTA_THREADS", "0")
    assert env_threads() == 1
    monkeypatch.setenv("PERMJUNTA_THREADS", "four")
    with pytest.raises(ContractError):
        env_threads()


def test_budgets_and_ceilings():
    cfg = ExperimentConfig()
    cfg.require_budget("search", 5)
    with pytest.raises(ResourceLimitError, match="search requested for n = 6; the budget is n = 5"):
        cfg.require_budget("search", 6)
    with pytest.raises(ContractError, match="hard ceiling"):
        ExperimentConfig(budgets={"search": CEILINGS["search"] + 1})
    with pytest.raises(ContractError, match="unknown budget"):
        ExperimentConfig(budgets={"nope": 1})
    with pytest.raises(ContractError):
        ExperimentConfig(t=0)


def test_config_json():
    cfg = ExperimentConfig(n=8, r=3)
    js = cfg.to_json()
    assert js["epsilon_resolved"] == "1/2" and cfg.regularity_s == 5
