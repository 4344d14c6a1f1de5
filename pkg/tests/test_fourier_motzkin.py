from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from app.errors import BoundExceededError
from app.fourier_motzkin import FourierMotzkin, LinearSystem


def test_feasible_system_has_a_witness():
    system = LinearSystem(["x", "y"])
    system.add_le({0: 1}, 1, "x ≤ 1")
    system.add_ge({0: 1}, 0, "x ≥ 0")
    system.add_ge({1: 1, 0: -1}, 0, "y ≥ x")
    system.add_le({1: 1}, 2, "y ≤ 2")
    result = FourierMotzkin().solve(system)
    assert result.feasible
    assert system.satisfied_by(result.witness)


def test_infeasible_system_yields_a_farkas_certificate():
    system = LinearSystem(["x", "y"])
    system.add_le({0: 1, 1: 1}, 1, "x + y ≤ 1")
    system.add_ge({0: 1}, 1, "x ≥ 1")
    system.add_ge({1: 1}, Fraction(1, 2), "y ≥ 1/2")
    result = FourierMotzkin().solve(system)
    assert not result.feasible
    assert system.check_certificate(result.contradiction)
    assert result.trace[-1].startswith("contradiction")


def test_equalities_pin_the_witness():
    system = LinearSystem(["x"])
    system.add_eq({0: 3}, 1, "3x = 1")
    result = FourierMotzkin().solve(system)
    assert result.witness == [Fraction(1, 3)]


def test_variable_bound_is_enforced():
    system = LinearSystem(["x", "y", "z"])
    with pytest.raises(BoundExceededError):
        FourierMotzkin(variable_bound=2).solve(system)


def test_interval_projection():
    system = LinearSystem(["x", "y"])
    system.add_le({0: 1, 1: 1}, 3, "x + y ≤ 3")
    system.add_ge({1: 1}, 1, "y ≥ 1")
    system.add_ge({0: 1}, 0, "x ≥ 0")
    assert FourierMotzkin().interval(system, 0) == (Fraction(0), Fraction(2))


@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.tuples(st.integers(-3, 3), st.integers(-3, 3), st.integers(-4, 4)),
        min_size=1,
        max_size=6,
    )
)
def test_every_answer_is_checkable(rows):
    system = LinearSystem(["x", "y"])
    for k, (a, b, c) in enumerate(rows):
        system.add_le({0: a, 1: b}, c, f"r{k}")
    result = FourierMotzkin().solve(system)
    if result.feasible:
        assert system.satisfied_by(result.witness)
    else:
        assert system.check_certificate(result.contradiction)
