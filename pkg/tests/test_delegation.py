import numpy as np
import pytest

from app.delegation_agent import project_to_menu
from app.errors import GameInputError, PreconditionError


@pytest.fixture
def model(delegation, fixtures):
    def _model(name):
        return delegation.load_model(fixtures / f"delegation-{name}.json")

    return _model


@pytest.fixture
def spec(delegation, fixtures):
    def _spec(name):
        return delegation.load_spec(fixtures / f"delegation-{name}.json")

    return _spec


def test_full_delegation_when_one_principal_is_flat(delegation, model, spec):
    report = delegation.check_regime(model("uniform"), spec("full"))
    assert report.passed
    assert report.kappa == pytest.approx(0.5)
    assert report.to_dict()["status"] == "pass"


def test_full_delegation_fails_without_alignment(delegation, model, spec):
    report = delegation.check_regime(model("halves"), spec("full"))
    assert not report.passed
    assert "ideal_alignment" in report.failures()
    with pytest.raises(PreconditionError):
        delegation.build_delegation_profile(model("halves"), spec("full"))


def test_both_no_compromise(delegation, model, spec):
    report = delegation.check_regime(model("halves"), spec("both"))
    assert report.passed
    profile = delegation.build_delegation_profile(model("halves"), spec("both"), report)
    assert profile.bliss_residual == pytest.approx(0.0, abs=1e-12)
    assert [m["kind"] for m in profile.menus] == ["curve", "curve"]


def test_piecewise_regime_with_two_levels(delegation, model, spec):
    report = delegation.check_regime(model("regimes"), spec("piecewise"))
    assert report.passed, report.failures()
    assert report.conditions["jumps"].margin == pytest.approx(0.25, abs=1e-3)
    profile = delegation.build_delegation_profile(model("regimes"), spec("piecewise"), report)
    assert profile.menus[0]["items"] == [0, 0.25]
    assert profile.bliss_residual == pytest.approx(0.0, abs=1e-12)


def test_downward_jump_is_rejected(delegation, model, spec):
    report = delegation.check_regime(model("regimes-jump"), spec("piecewise"))
    assert not report.passed
    assert "jumps" in report.failures()
    assert report.conditions["jumps"].margin == pytest.approx(-0.5, abs=1e-3)
    assert report.conditions["monotonicity"].passed
    assert report.conditions["boundary_low"].passed


def test_piecewise_without_cuts_matches_full_delegation(delegation, model, spec):
    full = delegation.check_regime(model("uniform"), spec("full"))
    single = delegation.check_regime(model("uniform"), spec("piecewise-k0"))
    assert single.scenario == "piecewise"
    assert full.scenario == "full_delegation"
    assert {k: c.passed for k, c in full.conditions.items()} == {k: c.passed for k, c in single.conditions.items()}


def test_levels_must_match_cuts(delegation, model):
    bad = delegation.load_spec({"scenario": "piecewise", "cutpoints": [0.5], "levels": [0]})
    with pytest.raises(GameInputError):
        delegation.check_regime(model("regimes"), bad)


def test_envelope_slack_vanishes_on_certified_profile(delegation, model, spec):
    slack = delegation.envelope_slack(model("uniform"), spec("full"))
    assert slack.max_abs < 1e-9


def test_project_to_menu_breaks_ties_downward():
    assert project_to_menu([0, 1], 0.5) == 0
    assert project_to_menu([1, 0, 1], 0.7) == 1
    np.testing.assert_allclose(project_to_menu([0, 0.25], np.array([-1.0, 0.2, 3.0])), [0, 0.25, 0.25])
    with pytest.raises(GameInputError):
        project_to_menu([], 0.3)


def test_discretization_is_bounded_below(delegation, model):
    with pytest.raises(GameInputError):
        delegation.discretize(model("uniform"), 3, 9)


def test_discretized_game_is_a_valid_finite_game(delegation, model):
    game, types, values = delegation.discretize(model("uniform"), 5, 5)
    assert len(game.types) == 5
    assert sum(game.probs) == 1
    assert len(values[0]) == len(values[1]) == 5
    assert types[0] == 0 and types[-1] == 1


def test_cross_validation_full_delegation_within_one_step(delegation, model, spec):
    result = delegation.cross_validate_discretized(model("uniform"), spec("full"), n_types=9, n_outcomes=17)
    out = result.to_dict()
    assert result.found
    assert out["n_types"] == 9
    assert out["outcome_step"] == pytest.approx(1 / 16)
    assert result.sup_distance <= result.outcome_step + 1e-12
    assert out["within_one_step"]
    assert len(out["rows"]) == 9


def test_cross_validation_no_compromise_is_exact(delegation, model, spec):
    result = delegation.cross_validate_discretized(model("halves"), spec("both"), n_types=9, n_outcomes=17)
    assert result.found
    assert result.sup_distance == pytest.approx(0, abs=1e-12)


def test_cross_validation_distance_shrinks_with_more_types(delegation, model, spec):
    distances = []
    for n_types in (9, 17, 33):
        result = delegation.cross_validate_discretized(model("regimes"), spec("piecewise"), n_types=n_types,
                                                       n_outcomes=17)
        assert result.found
        distances.append(result.sup_distance)
    assert all(b <= a + 1e-12 for a, b in zip(distances, distances[1:]))
