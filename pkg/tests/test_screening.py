import pytest
from hypothesis import given, settings, strategies as st

from app.cli import oracle_battery
from app.config import Settings
from app.errors import GameInputError
from app.game_model import GameModelAgent, MenuProfile
from app.screening_agent import ScreeningAgent, ScreeningProblem


@pytest.fixture
def agent():
    return ScreeningAgent()


def test_example_one_principal_one(agent, e1):
    problem = ScreeningProblem(e1, 0, MenuProfile.of([[], ["b", "b'"]]))
    solution = agent.solve_screening(problem)
    assert solution.value == 6
    assert ("a", "a'") in [m.assignment for m in solution.mechanisms]
    assert agent.brute_force_screening(problem) == 6


def test_example_one_principal_two(agent, e1):
    problem = ScreeningProblem(e1, 1, MenuProfile.of([["a", "a'"], []]))
    solution = agent.solve_screening(problem)
    assert ("b", "b'") in [m.assignment for m in solution.mechanisms]
    assert solution.value == agent.brute_force_screening(problem)


def test_methods_agree(agent, e1):
    problem = ScreeningProblem(e1, 0, MenuProfile.of([[], ["b", "b'"]]))
    menus = agent.solve_screening(problem, method="menus")
    search = agent.solve_screening(problem, method="search")
    assert menus.value == search.value
    assert {m.assignment for m in menus.mechanisms} <= {m.assignment for m in search.mechanisms}


def test_optimal_for_menu(agent, e1):
    problem = ScreeningProblem(e1, 0, MenuProfile.of([[], ["b", "b'"]]))
    assert agent.optimal_for_menu(problem, ["a", "a'"]).assignment == ("a", "a'")
    assert agent.optimal_for_menu(problem, ["a"]).assignment == ("a", "a")


def test_mode_must_match_outside_options(e1):
    with pytest.raises(GameInputError):
        ScreeningProblem(e1, 0, MenuProfile.of([[], ["b"]]), mode="intrinsic")


def test_solution_report(agent, e1):
    solution = agent.solve_screening(ScreeningProblem(e1, 0, MenuProfile.of([[], ["b", "b'"]])))
    report = solution.to_dict(e1)
    assert report["value"] == "6/1"
    assert list(solution.to_frame(e1).columns[:2]) == ["rank", "menu"]


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_screening_matches_brute_force(seed):
    game = GameModelAgent().random_game(seed, n_principals=2, n_types=3, n_outcomes=3)
    agent = ScreeningAgent()
    problem = ScreeningProblem(game, 0, MenuProfile.of([[], game.outcomes[1][:2]]))
    assert agent.solve_screening(problem).value == agent.brute_force_screening(problem)


def test_oracle_battery_is_exact():
    result = oracle_battery(seed=2024, count=200, settings=Settings())
    assert result["rate"] == 1.0
    assert result["failures"] == []
