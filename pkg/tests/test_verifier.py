from fractions import Fraction

import pytest

from app.cli import soundness_battery
from app.config import Settings
from app.errors import GameInputError, PreconditionError
from app.game_model import AgentStrategy, LexicographicRule, MenuProfile
from app.verifier_agent import VerifierAgent


@pytest.fixture
def verifier():
    return VerifierAgent()


@pytest.fixture
def e1_profile():
    return MenuProfile.of([["a", "a'"], ["b", "b'"]])


def test_example_one_supported_at_four_fifths(verifier, e1, e1_profile):
    report = verifier.support_feasibility(e1, e1_profile)
    assert report.feasible
    assert report.system.system.satisfied_by(report.result.witness)
    assert verifier.verify_pbe(e1, e1_profile, report.strategy).is_pbe


def test_example_one_unsupported_above_four_fifths(verifier, load, e1_profile):
    game = load("e1.json", p="81/100")
    report = verifier.support_feasibility(game, e1_profile)
    assert not report.feasible
    assert report.system.system.check_certificate(report.result.contradiction)
    assert "contradiction" in report.to_dict(game)


@pytest.mark.parametrize("p, feasible", [("0", True), ("1/2", False), ("1/10", False)])
def test_intrinsic_example_supported_only_at_zero(verifier, load, model_agent, read_json, p, feasible):
    game = load("e2.json", p=p)
    profile = model_agent.parse_profile(game, read_json("e2-profile.json"))
    assert verifier.support_feasibility(game, profile).feasible is feasible


def test_constructed_strategy_certifies_pbe(verifier, load, model_agent, read_json):
    game = load("upr-construction.json")
    mechanisms = model_agent.parse_mechanisms(game, read_json("upr-construction-mech.json"))
    strategy = verifier.construct_agent_strategy(game, mechanisms)
    profile = MenuProfile.from_mechanisms(mechanisms)
    certificate = verifier.verify_pbe(game, profile, strategy)
    assert certificate.is_pbe
    assert certificate.audit.passed
    assert all(entry.policy == "on-path-UPR" for (prof, _), entry in strategy.entries.items() if prof == profile)


def test_construction_refused_when_upr_fails(verifier, e1, model_agent, read_json):
    mechanisms = model_agent.parse_mechanisms(e1, read_json("e1-mech.json"))
    with pytest.raises(PreconditionError, match="t1"):
        verifier.construct_agent_strategy(e1, mechanisms)


def test_non_optimal_agent_is_reported(verifier, e1, e1_profile):
    strategy = AgentStrategy(fallback=LexicographicRule(e1))
    strategy.set(e1_profile, 0, [(("a", "b"), 1)])
    certificate = verifier.verify_pbe(e1, e1_profile, strategy)
    assert certificate.verdict == "agent-non-optimal"


def test_lexicographic_rule_satisfies_iia(verifier, e1, e1_profile):
    strategy = AgentStrategy(fallback=LexicographicRule(e1))
    profiles = [e1_profile, e1_profile.replace(0, {"a"}), e1_profile.replace(1, {"b"})]
    report = verifier.check_iia(strategy, e1, profiles=profiles)
    assert report.passed
    assert report.pairs == 2


def test_iia_violation_is_located(verifier, e1, e1_profile):
    strategy = AgentStrategy(fallback=LexicographicRule(e1))
    smaller = e1_profile.replace(0, {"a"})
    strategy.set(smaller, 0, [(("a", "b"), 1)])
    report = verifier.check_iia(strategy, e1, profiles=[e1_profile, smaller])
    assert not report.passed
    assert report.violation["type"] == 0
    assert report.violation["subset"] == [("a", "b'")]


def test_iia_one_rejects_mixed_strategies(verifier, e1, e1_profile):
    strategy = AgentStrategy(fallback=LexicographicRule(e1))
    strategy.set(e1_profile, 0, [(("a", "b'"), Fraction(1, 2)), (("a'", "b"), Fraction(1, 2))])
    with pytest.raises(GameInputError):
        verifier.check_iia(strategy, e1, profiles=[e1_profile, e1_profile.replace(1, {"b"})])
    assert verifier.check_iia(strategy, e1, "IIA-2", profiles=[e1_profile, e1_profile.replace(1, {"b"})]).passed


def test_soundness_battery():
    result = soundness_battery(seed=7, count=100, settings=Settings())
    assert result["rate"] == 1.0
    assert result["failures"] == []
