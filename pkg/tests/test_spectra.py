import itertools
import math

import numpy as np
import pytest

from returnspectra.core.model import ModelSpec, normalize
from returnspectra.core.spectra import (
    LABEL_GAMMA_PLUS,
    LABEL_P2PHI,
    LABEL_PRESSURE,
    concatenation_diagnostic,
    entropy,
    gamma_minus,
    gamma_plus,
    gamma_plus_empirical,
    m_curve,
    m_spectrum,
    m_spectrum_n,
    max_word,
    phase_transition_summary,
    pressure,
    pressure_grid,
    q_star,
    r_one_sided_derivatives,
    r_spectrum,
    renyi,
    spectrum_frame,
    tilted_phi_mean,
    w_equals_r,
    w_spectrum,
)

GRID = np.linspace(-4.0, 4.0, 81)


def bernoulli_m(q: float) -> float:
    return math.log((2 / 3) ** (1 - q) + (1 / 3) ** (1 - q))


@pytest.mark.parametrize("q", [-3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.5])
def test_bernoulli_pressure_closed_form(bernoulli, q):
    assert m_spectrum(bernoulli, q) == pytest.approx(bernoulli_m(q), abs=1e-12)


def test_pressure_basic_values(bernoulli, markov):
    for model in (bernoulli, markov):
        assert pressure(model, 0.0) == pytest.approx(math.log(2), abs=1e-15)
        assert pressure(model, 1.0) == pytest.approx(0.0, abs=1e-12)
        assert m_spectrum(model, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_symmetric_markov_pressure():
    model = normalize(ModelSpec(2, 1, "transition", (0.3, 0.7, 0.7, 0.3)))
    for t in (-1.5, 0.5, 2.0, 3.0):
        assert pressure(model, t) == pytest.approx(math.log(0.3 ** t + 0.7 ** t), abs=1e-12)


def test_renyi_values(bernoulli, uniform3):
    assert renyi(bernoulli, 0.0) == pytest.approx(entropy(bernoulli), abs=1e-15)
    assert renyi(bernoulli, 1.0) == pytest.approx(-math.log(5 / 9), abs=1e-12)
    assert abs(renyi(bernoulli, 50.0) - math.log(1.5)) < 0.02
    assert entropy(uniform3) == pytest.approx(math.log(3), abs=1e-12)
    assert renyi(uniform3, 2.0) == pytest.approx(math.log(3), abs=1e-12)


def test_gamma_plus_and_minus(bernoulli, markov, uniform):
    assert gamma_plus(bernoulli) == pytest.approx(math.log(2 / 3), abs=1e-12)
    assert gamma_minus(bernoulli) == pytest.approx(math.log(1 / 3), abs=1e-12)
    assert gamma_plus(markov) == pytest.approx(math.log(0.6), abs=1e-12)
    assert gamma_minus(markov) == pytest.approx(math.log(0.2), abs=1e-12)
    assert gamma_plus(uniform) == pytest.approx(-math.log(2), abs=1e-12)


def test_gamma_plus_is_bounded_by_entropy_and_converges(markov):
    gp = gamma_plus(markov)
    assert gp >= -entropy(markov) - 1e-12
    values = gamma_plus_empirical(markov, 200)
    assert [n for n, _ in values] == list(range(1, 201))
    assert abs(values[-1][1] - gp) < 0.01


def test_max_word(markov):
    word, log_mu = max_word(markov, 5)
    assert str(word) == "11111"
    assert log_mu == pytest.approx(math.log(2 / 3) + 4 * math.log(0.6), abs=1e-12)


def test_q_star_values(bernoulli, markov, uniform):
    cp = q_star(bernoulli)
    assert cp.q_star == pytest.approx(-0.672814, abs=1e-4)
    assert not cp.is_max_entropy_degenerate
    assert m_spectrum(bernoulli, cp.q_star) == pytest.approx(gamma_plus(bernoulli), abs=1e-8)

    assert q_star(markov).q_star == pytest.approx(-0.870750, abs=1e-4)

    cp = q_star(uniform)
    assert cp.q_star == -1.0
    assert cp.is_max_entropy_degenerate


def test_m_curve_is_convex_and_increasing(markov):
    values = m_curve(markov, GRID).values
    assert np.all(np.diff(values) > 0)
    assert np.min(values[2:] - 2 * values[1:-1] + values[:-2]) >= -1e-12


def test_uniform_r_equals_w(uniform):
    R = r_spectrum(uniform, GRID)
    W = w_spectrum(uniform, GRID)
    expected = np.where(GRID >= -1.0, GRID * math.log(2), -math.log(2))
    np.testing.assert_allclose(R.values, expected, atol=1e-12)
    np.testing.assert_allclose(W.values, R.values, atol=1e-12)
    assert w_equals_r(uniform)


def test_bernoulli_w_below_r(bernoulli):
    R = r_spectrum(bernoulli, GRID)
    W = w_spectrum(bernoulli, GRID)
    qs = q_star(bernoulli).q_star
    below = GRID < qs
    assert np.all(W.values[below] < R.values[below])
    np.testing.assert_allclose(W.values[~below], R.values[~below], atol=1e-12)
    assert not w_equals_r(bernoulli)
    assert np.all(R.values[below] == gamma_plus(bernoulli))
    assert W.values[0] == pytest.approx(math.log(5 / 9), abs=1e-12)


def test_branch_labels(bernoulli):
    R = r_spectrum(bernoulli, GRID)
    W = w_spectrum(bernoulli, GRID)
    assert R.label_at(-2.0) == LABEL_GAMMA_PLUS
    assert R.label_at(0.0) == LABEL_PRESSURE
    assert W.label_at(-2.0) == LABEL_P2PHI
    assert W.label_at(-1.0) == LABEL_PRESSURE


def test_one_sided_derivatives(bernoulli):
    d = r_one_sided_derivatives(bernoulli)
    assert d.left == 0.0
    assert d.right > 0.0
    assert d.left_numeric == pytest.approx(d.left, abs=1e-4)
    assert d.right_numeric == pytest.approx(d.right, abs=1e-4)


def test_finite_n_spectrum_is_exact_for_bernoulli(bernoulli):
    for n in (3, 7):
        for q in (-1.5, 0.5, 2.0):
            assert m_spectrum_n(bernoulli, n, q) == pytest.approx(bernoulli_m(q), abs=1e-12)


def test_concatenation_diagnostic(bernoulli, markov):
    for model in (bernoulli, markov):
        diag = concatenation_diagnostic(model, 5, 4)
        assert diag.passed
        assert len(diag.base_word) == 5
    assert concatenation_diagnostic(bernoulli, 6, 3).gap == pytest.approx(0.0, abs=1e-12)


def test_phase_summary(bernoulli):
    s = phase_transition_summary(bernoulli)
    assert s.q_star == pytest.approx(-0.672814, abs=1e-4)
    assert s.pressure_2phi == pytest.approx(math.log(5 / 9), abs=1e-12)
    assert s.m_minus_one == pytest.approx(math.log(5 / 9), abs=1e-12)
    assert s.j_domain == pytest.approx((-math.log(2 / 3), -math.log(1 / 3)))
    assert s.i_domain[0] < s.entropy < s.i_domain[1]


def test_spectrum_frame_columns(markov):
    df = spectrum_frame(markov, GRID)
    assert list(df.columns) == ["q", "M", "H", "R", "W", "branch_label"]
    assert len(df) == GRID.size
    assert df["branch_label"].iloc[0] == f"{LABEL_GAMMA_PLUS};{LABEL_P2PHI}"
    assert df["branch_label"].iloc[-1] == f"{LABEL_PRESSURE};{LABEL_PRESSURE}"
    small = spectrum_frame(markov, [-1.0, 0.0, 1.0])
    assert small["H"].iloc[1] == pytest.approx(entropy(markov), abs=1e-12)
    assert small["H"].iloc[2] == pytest.approx(-pressure(markov, 2.0), abs=1e-12)


def markov_m(q: float, P: np.ndarray) -> float:
    """2x2 전이 행렬 P 에 대한 log λ(P^{1−q}) (근의 공식)"""
    t = 1.0 - q
    a, b, c, d = P[0, 0] ** t, P[0, 1] ** t, P[1, 0] ** t, P[1, 1] ** t
    trace, det = a + d, a * d - b * c
    return math.log(0.5 * (trace + math.sqrt(trace * trace - 4.0 * det)))


def cycle_means(P: np.ndarray):
    """서로 다른 기호로 이루어진 모든 사이클의 평균 log P"""
    K = P.shape[0]
    log_p = np.log(P)
    for length in range(1, K + 1):
        for cycle in itertools.permutations(range(K), length):
            if cycle[0] != min(cycle):
                continue
            edges = zip(cycle, cycle[1:] + cycle[:1])
            yield sum(log_p[i, j] for i, j in edges) / length


def random_chain(K: int, rng: np.random.Generator):
    P = rng.dirichlet(np.ones(K), size=K)
    return P, normalize(ModelSpec(K, 1, "transition", tuple(float(v) for v in P.ravel())))


FULL_GRID = np.linspace(-4.0, 4.0, 401)


def test_bernoulli_closed_form_on_full_grid(bernoulli):
    values = m_curve(bernoulli, FULL_GRID).values
    expected = np.array([bernoulli_m(q) for q in FULL_GRID])
    np.testing.assert_allclose(values, expected, rtol=0, atol=1e-10)


def test_symmetric_markov_closed_form_on_full_grid():
    p = 0.3
    model = normalize(ModelSpec(2, 1, "transition", (p, 1 - p, 1 - p, p)))
    values = m_curve(model, FULL_GRID).values
    expected = np.log(p ** (1 - FULL_GRID) + (1 - p) ** (1 - FULL_GRID))
    np.testing.assert_allclose(values, expected, rtol=0, atol=1e-10)


def test_asymmetric_markov_closed_form(markov):
    P = np.array([[0.2, 0.8], [0.4, 0.6]])
    for q in (-1.0, 0.5, 2.0):
        assert m_spectrum(markov, q) == pytest.approx(markov_m(q, P), abs=1e-10)
    values = m_curve(markov, FULL_GRID).values
    expected = np.array([markov_m(q, P) for q in FULL_GRID])
    np.testing.assert_allclose(values, expected, rtol=0, atol=1e-10)


def test_gamma_matches_cycle_enumeration_on_random_chains():
    rng = np.random.default_rng(7)
    for K in (2, 3, 4, 5):
        for _ in range(4):
            P, model = random_chain(K, rng)
            means = list(cycle_means(P))
            assert gamma_plus(model) == pytest.approx(max(means), abs=1e-12)
            assert gamma_minus(model) == pytest.approx(min(means), abs=1e-12)


def test_bundled_gamma_plus_matches_two_cycle_formula(markov):
    P = np.array([[0.2, 0.8], [0.4, 0.6]])
    best = max(0.5 * math.log(P[i, j] * P[j, i]) for i in range(2) for j in range(2))
    assert gamma_plus(markov) == pytest.approx(best, abs=1e-12)


@pytest.mark.parametrize("t", [-3.0, -1.0, -0.5, 0.5, 1.0, 2.0, 4.0])
def test_pressure_derivative_matches_tilted_mean(bernoulli, markov, t):
    step = 1e-5
    for model in (bernoulli, markov):
        numeric = (pressure(model, t + step) - pressure(model, t - step)) / (2 * step)
        assert numeric == pytest.approx(tilted_phi_mean(model, t), abs=1e-6)


def test_pressure_slope_at_large_t(bernoulli, markov, uniform3):
    t = 200.0
    for model in (bernoulli, markov, uniform3):
        gap = abs(pressure(model, t) / t - gamma_plus(model))
        assert gap <= math.log(model.alphabet_size) / t + 1e-9


def test_pressure_is_convex_in_t(bernoulli, markov):
    ts = np.linspace(-5.0, 5.0, 100)
    for model in (bernoulli, markov):
        values = pressure_grid(model, ts)
        assert np.min(values[2:] - 2 * values[1:-1] + values[:-2]) >= -1e-9
