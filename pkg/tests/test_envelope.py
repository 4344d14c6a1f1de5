import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.envelope_agent import EnvelopeAgent
from app.errors import GameInputError, NumericalError


@pytest.fixture
def linear(envelope, fixtures):
    return envelope.load_family(fixtures / "envelope-linear.json")


def _parabolas(envelope, points):
    centers = (0.0, 0.5, 1.0)
    return envelope.family_from_functions(
        np.linspace(0, 1, points),
        [lambda t, c=c: -(t - c) ** 2 for c in centers],
        [lambda t, c=c: -2 * (t - c) for c in centers],
    )


def test_crossing_lines_have_one_upward_kink(envelope, linear):
    audit = envelope.upper_envelope(linear)
    assert len(audit.kinks) == 1
    kink = audit.kinks[0]
    assert kink.location == pytest.approx(0.5)
    assert (kink.left_slope, kink.right_slope) == (-1, 1)
    assert envelope.kink_audit(audit).passed
    assert kink.to_dict(linear.names)["left"] == "falling"


def test_pointwise_minimum_is_flagged(envelope, linear):
    report = envelope.kink_audit(envelope.lower_envelope(linear))
    assert not report.passed
    assert report.downward[0].location == pytest.approx(0.5)


def test_steep_inactive_member_does_not_hide_a_downward_kink(envelope):
    family = envelope.family_from_functions(
        np.linspace(0, 1, 11),
        [lambda t: t, lambda t: 0.8 * t + 0.1, lambda t: 100 + 10 * t ** 2],
        [lambda t: np.ones_like(t), lambda t: np.full_like(t, 0.8), lambda t: 20 * t],
    )
    audit = envelope.lower_envelope(family)
    assert audit.tolerance > 1
    report = envelope.kink_audit(audit)
    assert not report.passed
    kink = report.downward[0]
    assert kink.location == pytest.approx(0.5)
    assert (kink.left_slope, kink.right_slope) == pytest.approx((1.0, 0.8))
    assert kink.tolerance < 1e-3
    assert envelope.kink_audit(envelope.upper_envelope(family)).passed


def test_parabola_kinks_between_centers(envelope):
    audit = envelope.upper_envelope(_parabolas(envelope, 401))
    assert [k.location for k in audit.kinks] == pytest.approx([0.25, 0.75], abs=1e-3)
    assert all(k.upward for k in audit.kinks)


def test_lipschitz_bound(envelope):
    family = envelope.family_from_functions(np.linspace(0, 1, 201), [lambda t: 5 * t, lambda t: 3 - 2 * t])
    report = envelope.lipschitz_audit(family, envelope.upper_envelope(family))
    assert report.passed
    assert report.quotient <= 5 + 1e-9
    assert report.bound == pytest.approx(5)


def test_integral_identity_on_a_fine_grid(envelope):
    audit = envelope.upper_envelope(_parabolas(envelope, 10_001))
    report = envelope.envelope_integral_check(audit)
    assert report.max_residual <= 1e-6
    assert len(audit.to_frame()) == 10_001


def test_integral_residual_shrinks_with_the_grid(envelope):
    coarse = envelope.random_polynomial_family(seed=11, points=201)
    fine = envelope.random_polynomial_family(seed=11, points=401)
    r_coarse = envelope.envelope_integral_check(envelope.upper_envelope(coarse)).max_residual
    r_fine = envelope.envelope_integral_check(envelope.upper_envelope(fine)).max_residual
    assert r_fine <= r_coarse / 2 + 1e-12


def test_explicit_integrand_uses_plain_trapezoid(envelope, linear):
    audit = envelope.upper_envelope(linear)
    flat = envelope.envelope_integral_check(audit, value=np.zeros(9), integrand=np.zeros(9))
    assert flat.max_residual == 0
    with pytest.raises(NumericalError):
        envelope.envelope_integral_check(audit, value=np.zeros(3))


def test_malformed_families(envelope):
    with pytest.raises(NumericalError):
        envelope.load_family({"grid": [0, 1], "members": [{"values": [0, 1, 2]}]})
    with pytest.raises(GameInputError):
        envelope.load_family({"grid": [0, 0], "members": [{"values": [0, 1]}]})
    with pytest.raises(GameInputError):
        envelope.load_family({"grid": [0], "members": [{"values": [0]}]})


def test_missing_derivatives_are_estimated(envelope):
    family = envelope.load_family({"grid": [0, 0.5, 1], "members": [{"values": [0, 1, 2]}]})
    np.testing.assert_allclose(family.derivatives, [[2, 2, 2]])
    assert family.names == ["f0"]


def test_full_report(envelope, linear):
    report = envelope.audit_family(linear)
    assert report["status"] == "pass"
    assert report["kink_audit"]["kinks"] == 1
    assert report["integral"]["max_residual"] == pytest.approx(0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_random_envelopes_pass(seed):
    agent = EnvelopeAgent()
    family = agent.random_polynomial_family(seed)
    report = agent.audit_family(family)
    assert report["status"] == "pass", report["kink_audit"]
