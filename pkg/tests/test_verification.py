import pytest

from returnspectra.core.verification import SuiteSizes, run_invariant_suite

CHECKS = [
    "normalization",
    "additivity",
    "cylinder_control",
    "tilt_fixed_point",
    "pressure_convexity",
    "pressure_derivative",
    "pressure_slope",
    "gamma_plus_limit",
    "q_star_bracket",
    "w_below_r",
    "kac",
    "zeta_identity",
    "lambda_bound",
    "quasi_bernoulli",
    "rate_function",
    "gamma_bounds",
]


def test_default_sizes():
    sizes = SuiteSizes()
    assert (sizes.kac_n, sizes.zeta_n, sizes.lambda_n) == (8, 12, 20)


@pytest.mark.parametrize("fixture", ["bernoulli", "markov"])
def test_suite_passes_at_default_sizes(request, fixture):
    df = run_invariant_suite(request.getfixturevalue(fixture))
    assert df["check"].tolist() == CHECKS
    assert df.loc[~df["passed"], "check"].tolist() == []
    detail = dict(zip(df["check"], df["detail"]))
    assert detail["kac"].startswith("n ≤ 8:")


def test_suite_on_degenerate_model(uniform):
    df = run_invariant_suite(uniform, SuiteSizes(cylinder_n=4, kac_n=3, zeta_n=4, lambda_n=6, gamma_plus_n=50))
    assert df.loc[~df["passed"], "check"].tolist() == []
    detail = dict(zip(df["check"], df["detail"]))
    assert detail["w_below_r"] == "퇴화 모델: W ≡ R"
    assert detail["rate_function"].startswith("퇴화 모델")
