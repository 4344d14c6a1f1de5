import pytest

from app.bundling_agent import PricedMenu, bundle_label, bundle_mask
from app.errors import GameInputError


@pytest.fixture
def bundle_model(bundling, fixtures):
    def _model(name):
        return bundling.load_model(fixtures / f"uniform12-{name}.json")

    return _model


@pytest.fixture
def menu(bundling, fixtures):
    def _menu(model, name):
        return bundling.load_menu(model, fixtures / f"{name}.json")

    return _menu


def test_bundle_masks_and_labels():
    assert bundle_mask([1, 2], 2) == 3
    assert bundle_mask([2], 2) == 2
    assert bundle_label(3, 2) == "{1,2}"
    assert bundle_label(0, 2) == "∅"
    with pytest.raises(GameInputError):
        bundle_mask([3], 2)


def test_threshold_type_on_union_preset(bundling, bundle_model):
    tstar = bundling.find_tstar(bundle_model("union"))
    assert tstar.t_star == pytest.approx(4 / 3, abs=1e-9)
    assert tstar.half_value == pytest.approx(2.0, abs=1e-9)
    assert tstar.residual < 1e-9
    assert not tstar.boundary


def test_threshold_type_for_a_base_bundle(bundling, bundle_model):
    tstar = bundling.find_tstar(bundle_model("premium"), 1)
    assert tstar.t_star == pytest.approx(4 / 3, abs=1e-9)
    assert tstar.variant == "base {1}"
    with pytest.raises(GameInputError):
        bundling.find_tstar(bundle_model("premium"), 7)


def test_union_preset_ordered_pairs_cover_both_goods(bundling, bundle_model):
    model = bundle_model("union")
    report = bundling.jointly_optimal_pairs(model)
    # (firme 1, firme 2) ordonnées: 5 paires non ordonnées
    assert len(report.pairs) == 9
    assert len({frozenset((a, b)) for a, b in report.pairs}) == 5
    assert all(a | b == model.full for a, b in report.pairs)


def test_union_minus_intersection_pairs_are_complements(bundling, bundle_model):
    report = bundling.jointly_optimal_pairs(bundle_model("umi"))
    assert sorted(report.pairs) == [(0, 3), (1, 2), (2, 1), (3, 0)]


def test_market_split_profile(bundling, bundle_model, menu):
    model = bundle_model("union")
    report = bundling.check_market_splitting(model, menu(model, "split-menu1"), menu(model, "split-menu2"))
    assert report.passed
    assert report.price == pytest.approx(2.0)
    audit = bundling.audit_market_split(model, menu(model, "split-menu1"), menu(model, "split-menu2"))
    assert audit.passed
    assert audit.price_symmetric


def test_market_split_rejects_unmatched_bundles(bundling, bundle_model, menu):
    model = bundle_model("union")
    report = bundling.check_market_splitting(model, menu(model, "split-menu1"), menu(model, "split-menu2-bad"))
    assert not report.passed
    assert report.violation["reason"] == "appariement"
    assert report.violation["firm"] == 1


def test_market_split_rejects_off_price(bundling, bundle_model):
    model = bundle_model("union")
    report = bundling.check_market_splitting(model, PricedMenu([(1, 2.5)]), PricedMenu([(2, 2.0)]))
    assert not report.passed
    assert report.violation["reason"] == "prix"


def test_built_market_split_verifies(bundling, bundle_model):
    model = bundle_model("union")
    menu1, menu2 = bundling.build_market_split(model, [1])
    assert menu2.bundles() == [2]
    assert menu1.prices() == pytest.approx([2.0])
    assert bundling.check_market_splitting(model, menu1, menu2).passed


def test_premium_preset_builds_nested_upgrades(bundling, bundle_model):
    model = bundle_model("premium")
    assert bundling.check_md_star(model, 1).passed
    result = bundling.build_base_plus_upgrades(model, 1)
    assert result.structure == "nested"
    assert result.upgrades.bundles() == [2, 3]
    assert result.upgrades.prices() == pytest.approx([2.0, 3.0], abs=1e-6)
    assert result.breakpoints == pytest.approx([5 / 3], abs=1e-6)
    assert bundling.audit_upgrades(model, result).passed
    assert bundling.check_nondegeneracy(model, 1)["non_degenerate"]


def test_without_premium_the_upgrade_menu_is_a_singleton(bundling, bundle_model):
    model = bundle_model("umi")
    result = bundling.build_base_plus_upgrades(model, 1)
    assert result.structure == "singleton"
    assert result.upgrades.bundles() == [2]
    assert not bundling.check_nondegeneracy(model, 1)["non_degenerate"]


def test_menu_prices_are_validated(bundling, bundle_model):
    model = bundle_model("union")
    with pytest.raises(GameInputError):
        bundling.load_menu(model, {"items": [{"bundle": [1], "price": -1}]})
    with pytest.raises(GameInputError):
        bundling.load_menu(model, {"items": [{"bundle": [1], "price": 2}, {"bundle": [1], "price": 3}]})
