import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from app.errors import GameInputError, StrategyUndefinedError
from app.game_model import (
    QUIT,
    AgentStrategy,
    FavorableRule,
    GameModelAgent,
    LexicographicRule,
    MenuProfile,
    parse_rational,
)


def test_parse_rational_with_parameters():
    assert parse_rational("1-p", {"p": Fraction(4, 5)}) == Fraction(1, 5)
    assert parse_rational("3/6") == Fraction(1, 2)
    assert parse_rational(2) == Fraction(2)


def test_missing_parameter_is_reported():
    with pytest.raises(GameInputError, match="p"):
        parse_rational("1-p")


def test_load_example_game(e1):
    assert e1.principals == ("1", "2")
    assert e1.types == ("t1", "t2")
    assert e1.probs == (Fraction(4, 5), Fraction(1, 5))
    assert e1.V(("a", "b'"), 0) == 10
    assert e1.u(0, ("a", "b"), 0) == 5


def test_document_params_are_defaults(load):
    assert load("e1.json").probs == (Fraction(4, 5), Fraction(1, 5))
    assert load("e1.json", p="81/100").probs[0] == Fraction(81, 100)


def test_probabilities_must_sum_to_one(model_agent, fixtures):
    doc = json.loads((fixtures / "e1.json").read_text())
    doc["types"][1]["prob"] = "1/2"
    with pytest.raises(GameInputError, match="distribution sums to"):
        model_agent.load_game(doc, params={"p": "4/5"})


def test_missing_agent_utility_entry(model_agent, fixtures):
    doc = json.loads((fixtures / "e1.json").read_text())
    doc["agent_utility"].pop()
    with pytest.raises(GameInputError):
        model_agent.load_game(doc)


def test_agent_choice_set_breaks_no_ties(e1):
    menus = [["a", "a'"], ["b", "b'"]]
    assert set(e1.agent_choice_set(menus, 0)) == {("a", "b'"), ("a'", "b")}
    assert e1.agent_choice_set(menus, 1) == [("a'", "b'")]


def test_intrinsic_quit_when_maximum_is_negative(load):
    game = load("e2.json", p="1/2")
    assert game.intrinsic
    assert game.agent_choice_set([["a"], ["b"]], 1) == [QUIT]


def test_dump_then_load_is_identity(model_agent, e1):
    assert model_agent.load_game(model_agent.dump_game(e1)) == e1


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.booleans())
def test_random_games_are_reproducible(seed, separable):
    agent = GameModelAgent()
    first = agent.random_game(seed, n_types=2, n_outcomes=2, separable=separable)
    assert first == agent.random_game(seed, n_types=2, n_outcomes=2, separable=separable)
    assert sum(first.probs) == 1


def test_strategy_lookup_and_rules(e1):
    profile = MenuProfile.of([["a", "a'"], ["b", "b'"]])
    strategy = AgentStrategy()
    with pytest.raises(StrategyUndefinedError):
        strategy.at(profile, 0)

    strategy.fallback = LexicographicRule(e1)
    assert strategy.choose(profile, 0) == ("a", "b'")

    favorable = AgentStrategy(fallback=FavorableRule(e1, 1))
    # principal 2 préfère b (5) à b' (0) au type t1
    assert favorable.choose(profile, 0) == ("a'", "b")


def test_parse_strategy_document(e1, model_agent):
    doc = {
        "entries": [{
            "profile": {"1": ["a", "a'"], "2": ["b", "b'"]},
            "type": "t1",
            "distribution": [{"choice": ["a", "b'"], "weight": "1/2"}, {"choice": ["a'", "b"], "weight": "1/2"}],
        }],
    }
    strategy = model_agent.parse_strategy(e1, doc)
    entry = strategy.at(MenuProfile.of([["a", "a'"], ["b", "b'"]]), 0)
    assert not entry.pure
    assert set(entry.support()) == {("a", "b'"), ("a'", "b")}
