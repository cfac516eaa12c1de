import math

import numpy as np
import pytest

from returnspectra.core.model import cylinder_measure, log_measure_block
from returnspectra.core.return_exact import (
    automaton_state_count,
    exact_hitting_spectrum,
    exact_return_spectra,
    exact_return_spectrum,
    exact_tail,
    exponential_moment_prediction,
    kac_products,
    lambda_n,
    lambda_upper_bound,
    predicted_branch,
    return_law,
    zeta,
    zeta_agreement,
    zeta_block,
)
from returnspectra.core.spectra import gamma_plus
from returnspectra.core.words import Word, enumerate_words, word_block
from returnspectra.utils.errors import BudgetExceededError, DomainError


def w(text: str) -> Word:
    return Word.from_string(text, 2)


def brute_force_pmf(model, word: Word, horizon: int) -> np.ndarray:
    """경로 전수 열거로 구한 P_w(S = t), t = 1..horizon"""
    n = len(word)
    length = n + horizon
    block = word_block(2, length, 0, 2 ** length)
    block = block[np.all(block[:, :n] == np.asarray(word.symbols), axis=1)]
    probs = np.exp(log_measure_block(model, block) - cylinder_measure(model, word))
    pmf = np.zeros(horizon)
    found = np.zeros(block.shape[0], dtype=bool)
    for t in range(1, horizon + 1):
        hit = ~found & np.all(block[:, t:t + n] == np.asarray(word.symbols), axis=1)
        pmf[t - 1] = probs[hit].sum()
        found |= hit
    return pmf


@pytest.mark.parametrize("text, expected", [("0", 1 / 3), ("01", 7 / 9), ("000", 1 / 3)])
def test_zeta_bernoulli(bernoulli, text, expected):
    assert zeta(bernoulli, w(text)).zeta == pytest.approx(expected, abs=1e-12)


def test_zeta_uniform(uniform):
    z = zeta(uniform, w("0"))
    assert z.zeta == pytest.approx(0.5, abs=1e-12)
    assert z.tau == 1


def test_zeta_matches_law(markov):
    for text in ("0", "01", "0110", "1111111110"):
        law = return_law(markov, w(text))
        assert law.zeta_from_law() == pytest.approx(zeta(markov, w(text)).zeta, abs=1e-12)
    for n in (1, 4, 7):
        assert np.max(zeta_agreement(markov, n)) <= 1e-12


def test_uniform_single_symbol_pmf(uniform):
    law = return_law(uniform, w("0"))
    np.testing.assert_allclose(law.pmf(2), [0.5, 0.25], atol=1e-15)
    np.testing.assert_allclose(law.cdf([1, 2, 3]), [0.5, 0.75, 0.875], atol=1e-15)


@pytest.mark.parametrize("text", ["0", "1", "01", "10", "011"])
def test_pmf_matches_path_enumeration(markov, text):
    word = w(text)
    law = return_law(markov, word)
    np.testing.assert_allclose(law.pmf(10), brute_force_pmf(markov, word, 10), atol=1e-14)


def test_no_return_before_period(markov):
    law = return_law(markov, w("0101"))
    assert law.tau == 2
    assert law.pmf(1)[0] == pytest.approx(0.0, abs=1e-15)
    assert law.pmf(2)[1] > 0.0


def test_hitting_starts_at_one(markov):
    for text in ("01", "110"):
        law = return_law(markov, w(text), mode="hitting")
        assert law.support_min == 1
        assert law.pmf(1)[0] == pytest.approx(math.exp(cylinder_measure(markov, w(text))), abs=1e-14)


def test_hitting_first_step_mixture(markov):
    total, squares = 0.0, 0.0
    for word in enumerate_words(2, 3):
        mu = math.exp(cylinder_measure(markov, word))
        total += mu * return_law(markov, word, mode="hitting").pmf(1)[0]
        squares += mu * mu
    assert total == pytest.approx(squares, abs=1e-14)


@pytest.mark.parametrize("n", range(1, 9))
def test_kac_formula(bernoulli, markov, n):
    for model in (bernoulli, markov):
        np.testing.assert_allclose(kac_products(model, n), 1.0, atol=1e-9)


def test_moment_special_values(markov, uniform):
    law = return_law(markov, w("011"))
    assert law.moment(0.0).s_moment == pytest.approx(1.0, rel=1e-9)
    first = law.moment(1.0)
    assert first.s_moment == pytest.approx(1.0 / law.mu, rel=1e-8)
    assert first.r_moment == pytest.approx(1.0 / law.mu + 1.0, rel=1e-8)

    inverse = return_law(uniform, w("0")).moment(-1.0)
    assert inverse.s_moment == pytest.approx(math.log(2), rel=1e-8)
    assert inverse.s_error >= 0.0


def test_tail_bound_dominates_tail(markov):
    law = return_law(markov, w("0110"))
    c, rho = law.tail_bound()
    assert 0.0 < rho < 1.0
    pmf = law.pmf(60)
    tails = 1.0 - np.cumsum(pmf)
    t = np.arange(1, 61)
    assert np.all(tails <= c * rho ** t + 1e-12)
    assert law.horizon() >= law.tau


def test_spectrum_at_zero_is_exactly_zero(markov):
    for n in (1, 3, 5):
        value = exact_return_spectrum(markov, n, 0.0)
        assert value.value == 0.0
        assert value.certified_error == 0.0


def test_shift_spectrum_at_one_is_log_k(markov):
    for n in (2, 5):
        value = exact_return_spectra(markov, n, [1.0], variable="S")[0]
        assert value.value == pytest.approx(math.log(2), abs=1e-8)


def test_return_spectrum_at_one_bernoulli(bernoulli):
    for n in (4, 6, 8, 10):
        value = exact_return_spectrum(bernoulli, n, 1.0)
        assert value.value == pytest.approx(math.log(2) + math.log1p(2.0 ** -n) / n, abs=1e-8)


SANDWICH_Q = [-2.0, -1.0, -0.5, 0.5, 1.0]


@pytest.mark.parametrize("fixture", ["bernoulli", "markov"])
def test_sandwich_gap_shrinks(request, fixture):
    model = request.getfixturevalue(fixture)
    coarse = exact_return_spectra(model, 6, SANDWICH_Q)
    fine = exact_return_spectra(model, 12, SANDWICH_Q)
    for q, a, b in zip(SANDWICH_Q, coarse, fine):
        target = predicted_branch(model, q)
        assert abs(b.value - target) < abs(a.value - target), q


def test_sandwich_gap_is_monotone_for_bernoulli_at_one(bernoulli):
    gaps = [abs(exact_return_spectrum(bernoulli, n, 1.0).value - predicted_branch(bernoulli, 1.0))
            for n in (4, 6, 8, 10)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))


def test_predicted_branch(bernoulli):
    assert predicted_branch(bernoulli, 1.0) == pytest.approx(math.log(2), abs=1e-12)
    assert predicted_branch(bernoulli, -2.0) == pytest.approx(math.log(2 / 3), abs=1e-12)
    assert predicted_branch(bernoulli, -3.0) == predicted_branch(bernoulli, -2.0)


def test_hitting_spectrum_at_zero(markov):
    assert exact_hitting_spectrum(markov, 3, 0.0).value == 0.0


def test_lambda_n_small_values(bernoulli, uniform):
    assert lambda_n(bernoulli, 1) == pytest.approx(math.log(5 / 9), abs=1e-12)
    assert lambda_n(uniform, 1) == pytest.approx(math.log(0.5), abs=1e-12)


def test_lambda_n_sandwich(bernoulli, markov):
    gp = gamma_plus(bernoulli)
    for n in range(1, 11):
        value = lambda_n(bernoulli, n)
        assert (n + 1) / n * gp - 1e-12 <= value <= lambda_upper_bound(bernoulli, n) + 1e-12
        assert lambda_n(markov, n) <= lambda_upper_bound(markov, n) + 1e-12


@pytest.mark.parametrize("fixture", ["bernoulli", "markov"])
def test_lambda_n_approaches_gamma_plus(request, fixture):
    model = request.getfixturevalue(fixture)
    gp = gamma_plus(model)
    values = {n: lambda_n(model, n) for n in range(1, 21)}
    for n, value in values.items():
        assert value <= lambda_upper_bound(model, n) + 1e-12
    assert abs(values[20] - gp) < abs(values[6] - gp)


@pytest.mark.parametrize("fixture", ["bernoulli", "markov"])
def test_zeta_identity_and_lower_bound(request, fixture):
    model = request.getfixturevalue(fixture)
    for n in range(1, 13):
        assert np.max(zeta_agreement(model, n)) <= 1e-12
        z, _ = zeta_block(model, word_block(2, n, 0, 2 ** n))
        assert np.min(z) >= model.zeta_hat_minus * (1 - 1e-12)
        assert np.max(z) <= 1.0


def test_exact_tail_trivial_thresholds(markov):
    assert exact_tail(markov, 3, 1.0).log_prob == 0.0
    assert exact_tail(markov, 3, 0.5).log_prob == 0.0
    assert exact_tail(markov, 3, 2.0, lower=True).log_prob == -math.inf


def test_exact_tail_uniform_single_symbol(uniform):
    assert exact_tail(uniform, 1, 4.0).log_prob == pytest.approx(math.log(1 / 8), abs=1e-12)
    assert exact_tail(uniform, 1, 4.0, lower=True).log_prob == pytest.approx(math.log(3 / 4), abs=1e-12)


def test_exact_tail_monotone(markov):
    values = [exact_tail(markov, 3, L).log_prob for L in (10.0, 20.0, 40.0, 400.0)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_exact_tail_matches_per_word_laws(markov):
    threshold = 7.5
    expected = 0.0
    for word in enumerate_words(2, 2):
        law = return_law(markov, word)
        expected += law.mu * (1.0 - law.cdf([6])[0])
    result = exact_tail(markov, 2, threshold)
    assert math.exp(result.log_prob) == pytest.approx(expected, abs=1e-12)
    lower = exact_tail(markov, 2, threshold, lower=True)
    assert math.exp(lower.log_prob) == pytest.approx(1.0 - expected, abs=1e-12)


def test_exact_tail_rejects_infinite_threshold(markov):
    with pytest.raises(DomainError):
        exact_tail(markov, 2, math.inf)


def test_budget_errors(markov):
    with pytest.raises(BudgetExceededError):
        lambda_n(markov, 12, budget=100)
    with pytest.raises(BudgetExceededError):
        exact_return_spectrum(markov, 12, 1.0, budget=100)


def test_state_count_grows_with_word_length():
    assert automaton_state_count(4, 2, 1) < automaton_state_count(8, 2, 1)


def test_exponential_moment_prediction_is_close(markov):
    word = w("1111111110")
    predicted = exponential_moment_prediction(markov, word, -1.0)
    exact = return_law(markov, word).moment(-1.0).s_moment
    assert predicted > 0.0
    assert 0.5 < predicted / exact < 2.0
    with pytest.raises(DomainError):
        exponential_moment_prediction(markov, word, 1.0)


def geometric_moment(success: float, q: float, shift: int) -> float:
    """P(S = t) = success·(1 − success)^{t−1} 의 E[(S + shift)^q] (2000 항 직접 합)"""
    return math.fsum((t + shift) ** q * success * (1.0 - success) ** (t - 1) for t in range(1, 2001))


@pytest.mark.parametrize("q", [-1.5, -1.0, 0.5, 2.5])
def test_moment_of_geometric_law_within_error(bernoulli, q):
    for text, success in (("0", 2 / 3), ("1", 1 / 3)):
        law = return_law(bernoulli, w(text))
        value = law.moment(q)
        assert value.t_max >= law.horizon()
        for got, error, shift in ((value.s_moment, value.s_error, 0), (value.r_moment, value.r_error, 1)):
            expected = geometric_moment(success, q, shift)
            assert abs(got - expected) <= error
            assert error <= 1e-10 * expected


def test_inverse_moment_closed_form(bernoulli):
    value = return_law(bernoulli, w("0")).moment(-1.0)
    assert value.s_moment == pytest.approx(2.0 * math.log(1.5), rel=1e-11)


@pytest.mark.parametrize("q", [-2.0, -0.5, 0.5, 1.5])
def test_single_symbol_spectrum_within_certified_error(bernoulli, q):
    expected = math.log(2 / 3 * geometric_moment(2 / 3, q, 1) + 1 / 3 * geometric_moment(1 / 3, q, 1))
    value = exact_return_spectrum(bernoulli, 1, q)
    assert abs(value.value - expected) <= value.certified_error
    assert 0.0 < value.certified_error <= 1e-9
