from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from app.assembly_agent import AssemblyAgent
from app.errors import GameInputError, PreconditionError
from app.game_model import AgentStrategy, GameModelAgent, LexicographicRule, MenuProfile


@pytest.fixture
def agent():
    return AssemblyAgent()


@pytest.fixture
def e1_mechanisms(model_agent, e1, read_json):
    return model_agent.parse_mechanisms(e1, read_json("e1-mech.json"))


def test_example_one_fails_upr_at_first_type(agent, e1, e1_mechanisms):
    report = agent.check_compatibility(e1, e1_mechanisms, "UPR")
    assert not report.passed
    assert report.violation["type"] == 0
    assert set(report.violation["agent_optimal"]) == {("a", "b'"), ("a'", "b")}
    assert report.to_dict(e1)["violation"]["type"] == "t1"


def test_unknown_variant_is_rejected(agent, e1, e1_mechanisms):
    with pytest.raises(GameInputError):
        agent.check_compatibility(e1, e1_mechanisms, "UPX")
    with pytest.raises(GameInputError):
        agent.check_compatibility(e1, e1_mechanisms, "UPR-I")


def test_men_requires_a_strategy(agent, e1, e1_mechanisms):
    with pytest.raises(GameInputError):
        agent.check_compatibility(e1, e1_mechanisms, "MEN")


def test_example_one_sufficiency_flags(agent, e1, e1_mechanisms):
    flags = agent.check_sufficiency(e1, mechanisms=e1_mechanisms)
    assert not flags.additive_separable
    assert not flags.non_indifference_global
    assert flags.singleton_structure is False


def test_upr_holds_without_upnr(agent, upr_game):
    profiles = agent.find_p3_induced_profiles(upr_game)
    assert len(profiles) == 2
    assert sum(p.passed for p in profiles) == 1
    failing = next(p for p in profiles if not p.passed)
    assert failing.report.violation["type"] == 2
    passing = next(p for p in profiles if p.passed)
    assert passing.menus == MenuProfile.of([["a2", "a3"], ["b2", "b3"]])
    assert not agent.check_compatibility(upr_game, passing.mechanisms, "UPNR").passed


def test_classification_and_pareto(agent, pareto_game, model_agent, read_json):
    entries = []
    for name in ("pareto-p3-profile.json", "pareto-shield-profile.json"):
        doc = read_json(name)
        entries.append((model_agent.parse_profile(pareto_game, doc), model_agent.parse_strategy(pareto_game, doc["strategy"])))

    report = agent.pareto_compare(pareto_game, entries)
    assert report.payoffs == [(Fraction(7, 2), 2), (4, 2)]
    assert report.dominance == [(1, 0)]
    assert report.frontier == [1]

    induced = agent.classify_pbe(pareto_game, *entries[0])
    shield = agent.classify_pbe(pareto_game, *entries[1])
    assert induced.p3_induced
    assert not shield.p3_induced
    assert shield.unused_items == {0: ["b"]}


def test_strict_classification_needs_non_indifference(agent, e1):
    profile = MenuProfile.of([["a", "a'"], ["b", "b'"]])
    strategy = AgentStrategy(fallback=LexicographicRule(e1))
    with pytest.raises(PreconditionError):
        agent.classify_pbe(e1, profile, strategy)
    assert agent.classify_pbe(e1, profile, strategy, strict=False).heuristic


def test_iteration_converges_to_a_mutual_profile(agent, upr_game):
    result = agent.best_response_iteration(upr_game)
    assert result.converged
    assert result.rounds == 2
    assert result.profile == MenuProfile.of([["a1", "a2"], ["b1", "b2"]])
    exhaustive = {p.menus for p in agent.find_p3_induced_profiles(upr_game)}
    assert result.profile in exhaustive
    assert [p.menus for p in agent.find_p3_induced_profiles(upr_game, mode="iterate")] == [result.profile]


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_separable_games_decompose(seed):
    game = GameModelAgent().random_game(seed, n_types=2, n_outcomes=3, separable=True)
    agent = AssemblyAgent()
    parts = agent.additive_decomposition(game)
    assert parts is not None
    assert agent.check_sufficiency(game).weakly_separable
