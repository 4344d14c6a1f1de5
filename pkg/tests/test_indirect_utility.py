from fractions import Fraction

import pytest

from app.errors import GameInputError
from app.game_model import QUIT, MenuProfile
from app.indirect_utility_agent import IndirectUtilityAgent


@pytest.fixture
def agent():
    return IndirectUtilityAgent()


def test_envelope_over_rival_menu(agent, e1):
    table = agent.indirect_utility(e1, 0, MenuProfile.of([[], ["b", "b'"]]))
    assert table.value("a", 0) == 10
    assert table.value("a'", 0) == 10
    assert table.value("a", 1) == 0
    assert table.value("a'", 1) == 10
    assert table.witnesses("a", 0) == (("b'",),)
    assert set(table.witnesses("a", 1)) == {("b",), ("b'",)}


def test_singleton_rival_menu_is_a_section(agent, e1):
    table = agent.indirect_utility(e1, 1, MenuProfile.of([["a"], []]))
    assert table.value("b", 0) == 5
    assert table.value("b'", 0) == 10


def test_intrinsic_mode_adds_quit(agent, load):
    game = load("e2.json", p="1/2")
    table = agent.indirect_utility(game, 0, MenuProfile.of([[], ["b"]]))
    assert table.value(QUIT, 0) == 0
    assert table.value("a", 1) == -2


def test_delegated_outside_option_augments_rival_menu(agent, load):
    game = load("e2-delegated.json", p="1/2")
    plain = agent.indirect_utility(game, 0, MenuProfile.of([[], ["b"]]))
    augmented = agent.indirect_utility(game, 0, MenuProfile.of([[], ["b"]]), augment=True)
    assert plain.value("a", 0) == 5
    assert augmented.value("a", 0) == 10


def test_empty_rival_menu_is_rejected(agent, e1):
    with pytest.raises(GameInputError):
        agent.indirect_utility(e1, 0, MenuProfile.of([["a"], []]))


def test_mixed_rival_menus_average_the_envelopes(agent, e1):
    table = agent.indirect_utility_mixed(
        e1, 0, [(Fraction(1, 2), MenuProfile.of([[], ["b"]])), (Fraction(1, 2), MenuProfile.of([[], ["b'"]]))]
    )
    assert table.value("a", 0) == Fraction(15, 2)
    assert table.witnesses("a", 0) == ()
    out = table.to_dict(e1)
    assert out["rival_menus"] == {}
    assert out["mixture"] == [{"weight": "1/2", "rival_menus": {"2": ["b"]}},
                              {"weight": "1/2", "rival_menus": {"2": ["b'"]}}]


def test_mixture_weights_must_sum_to_one(agent, e1):
    with pytest.raises(GameInputError):
        agent.indirect_utility_mixed(e1, 0, [(Fraction(1, 3), MenuProfile.of([[], ["b"]]))])
