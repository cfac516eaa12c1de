import math

import numpy as np
import pytest

from returnspectra.core.gamma_bounds import (
    bound_rows,
    default_grid,
    gamma_quadrature,
    oracle_agreement,
    recursion_residual,
    upper_incomplete_gamma,
    verify_bounds,
    violations,
)
from returnspectra.utils.errors import DomainError


def test_small_argument_limit():
    value = upper_incomplete_gamma(0.5, 1e-14).value
    assert value == pytest.approx(math.sqrt(math.pi), rel=1e-6)


def test_integer_order_one():
    assert upper_incomplete_gamma(1.0, 0.3).value == pytest.approx(math.exp(-0.3), rel=1e-13)
    assert upper_incomplete_gamma(1.0, 2.0).value == pytest.approx(math.exp(-2.0), rel=1e-12)


def test_negative_integer_order_via_exponential_integral():
    # Γ(−1, x) = e^{−x}/x − E₁(x)
    x = 0.5
    e1 = 0.5597735947761608
    expected = math.exp(-x) / x - e1
    assert upper_incomplete_gamma(-1.0, x, allow_integer=True).value == pytest.approx(expected, rel=1e-12)


def test_methods_by_region():
    assert upper_incomplete_gamma(-0.5, 1.0).method == "continued-fraction"
    assert upper_incomplete_gamma(-0.5, 0.1).method == "recursion"
    assert upper_incomplete_gamma(2.5, 0.1).method == "recursion"


@pytest.mark.parametrize("s, x", [(-0.5, 1.0), (-2.5, 3.0), (-0.3, 0.01), (-4.5, 1e-3), (0.7, 0.2)])
def test_matches_quadrature(s, x):
    value = upper_incomplete_gamma(s, x).value
    assert value == pytest.approx(gamma_quadrature(s, x).value, rel=1e-10)


@pytest.mark.parametrize("s, x", [(-0.5, 1.0), (-1.5, 0.1), (-4.5, 0.5), (-0.1, 1e-6), (-2.5, 10.0)])
def test_recursion_residual(s, x):
    assert recursion_residual(s, x) <= 1e-10


def test_decreasing_in_x():
    xs = np.geomspace(1e-4, 20.0, 40)
    for s in (-2.5, -0.5, 0.5):
        values = [upper_incomplete_gamma(s, float(x)).value for x in xs]
        assert np.all(np.diff(values) < 0)


def test_argument_errors():
    with pytest.raises(DomainError):
        upper_incomplete_gamma(-2.0, 0.5)
    with pytest.raises(DomainError):
        upper_incomplete_gamma(0.0, 0.5)
    with pytest.raises(DomainError):
        upper_incomplete_gamma(-0.5, 0.0)
    with pytest.raises(DomainError):
        upper_incomplete_gamma(-0.5, 60.0)


def test_default_grid_has_no_violations():
    assert len(default_grid()) == 36
    report = verify_bounds()
    assert list(report.columns) == ["s", "x", "lhs", "mid", "rhs", "slack_lo", "slack_hi",
                                    "inequality_id", "passed"]
    assert len(violations(report)) == 0
    assert {"A2", "A3", "A3-c", "A4", "A5", "A5-fine", "A6"} <= set(report["inequality_id"])


def test_oracle_agreement_on_default_grid():
    df = oracle_agreement()
    assert len(df) == 36
    assert df["rel_error"].max() <= 1e-10


def test_bound_families_by_order():
    families = {row["inequality_id"] for row in bound_rows(-0.5, 1.0)}
    assert families == {"A2", "A3", "A3-c", "A5", "A5-fine", "A6"}
    families = {row["inequality_id"] for row in bound_rows(-2.5, 0.1)}
    assert families == {"A2", "A3", "A3-c", "A4"}
    families = {row["inequality_id"] for row in bound_rows(-2.5, 3.0)}
    assert "A3-c" not in families
    assert all(row["passed"] for row in bound_rows(-0.5, 1.0))
