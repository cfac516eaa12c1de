"""
불변식 검사 모음

모델 하나에 대해 정규화, 실린더 확률, 스펙트럼, 정확 귀환 법칙, 율 함수,
불완전 감마 부등식 검사를 실행하고 (check, passed, detail) 표로 모읍니다.
"""

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from ..utils.config import ComputeConfig, get_compute_config, status
from . import gamma_bounds
from .ldp import default_u_grid, rate_I
from .model import (
    PotentialModel,
    birkhoff_block,
    cylinder_control_bound,
    log_measure_block,
    quasi_bernoulli_check,
    tilt,
)
from .return_exact import kac_products, lambda_n, lambda_upper_bound, zeta_agreement, zeta_block
from .spectra import (
    entropy,
    gamma_plus,
    gamma_plus_empirical,
    m_spectrum,
    pressure,
    pressure_grid,
    q_star,
    r_spectrum,
    tilted_phi_mean,
    w_spectrum,
)
from .words import word_block

PRESSURE_T_GRID = (-3.0, -1.0, -0.5, 0.5, 1.0, 2.0, 4.0)


@dataclass(frozen=True)
class SuiteSizes:
    """검사별 단어 길이 상한"""
    cylinder_n: int = 6
    kac_n: int = 8
    zeta_n: int = 12
    lambda_n: int = 20
    gamma_plus_n: int = 400


def _check_normalization(model: PotentialModel, config: ComputeConfig) -> Tuple[bool, str]:
    sums = model.g.reshape(model.alphabet_size, model.n_states).sum(axis=0)
    worst = float(np.max(np.abs(sums - 1.0)))
    return worst <= config.row_sum_tol, f"max |Σ_a g(a s) − 1| = {worst:.3e}"


def _check_additivity(model: PotentialModel, sizes: SuiteSizes) -> Tuple[bool, str]:
    K, n = model.alphabet_size, sizes.cylinder_n
    block = word_block(K, n, 0, K ** n)
    log_mu = log_measure_block(model, block)
    column = np.ones((block.shape[0], 1), dtype=block.dtype)
    right = [log_measure_block(model, np.concatenate([block, a * column], axis=1)) for a in range(K)]
    left = [log_measure_block(model, np.concatenate([a * column, block], axis=1)) for a in range(K)]
    right_sum = logsumexp(np.stack(right), axis=0)
    left_sum = logsumexp(np.stack(left), axis=0)
    worst = max(float(np.max(np.abs(right_sum - log_mu))), float(np.max(np.abs(left_sum - log_mu))))
    total = abs(float(logsumexp(log_mu)))
    return worst <= 1e-12 and total <= 1e-12, f"max log 오차 {worst:.3e}, |log Σμ| = {total:.3e}"


def _check_cylinder_control(model: PotentialModel, sizes: SuiteSizes) -> Tuple[bool, str]:
    K, m, n = model.alphabet_size, model.memory, sizes.cylinder_n
    block = word_block(K, n, 0, K ** n)
    log_mu = log_measure_block(model, block)
    bound = cylinder_control_bound(model, n)
    worst = 0.0
    for ext in range(K ** m):
        symbols = [(ext // K ** (m - 1 - i)) % K for i in range(m)]
        worst = max(worst, float(np.max(np.abs(log_mu - birkhoff_block(model, block, symbols)))))
    return worst <= bound + 1e-12, f"max |log μ − S_nφ| = {worst:.3e} ≤ nε_n = {bound:.3e}"


def _check_tilt_fixed_point(model: PotentialModel, config: ComputeConfig) -> Tuple[bool, str]:
    tilted = tilt(model, 1.0, config)
    worst = float(np.max(np.abs(tilted.g - model.g)))
    return worst <= 1e-12, f"max |g(tilt 1) − g| = {worst:.3e}"


def _check_convexity(model: PotentialModel, config: ComputeConfig) -> Tuple[bool, str]:
    values = pressure_grid(model, np.linspace(-5.0, 5.0, 100), config)
    second = float(np.min(values[2:] - 2.0 * values[1:-1] + values[:-2]))
    return second >= -1e-9, f"P(tφ), t ∈ [−5, 5]: min 2차 차분 = {second:.3e}"


def _check_pressure_derivative(model: PotentialModel, config: ComputeConfig) -> Tuple[bool, str]:
    step = 1e-5
    worst = 0.0
    for t in PRESSURE_T_GRID:
        numeric = (pressure(model, t + step, config) - pressure(model, t - step, config)) / (2 * step)
        worst = max(worst, abs(numeric - tilted_phi_mean(model, t, config)))
    return worst <= 1e-6, f"max |P′(t) 차분 − ∫φ dμ_tφ| = {worst:.3e} ({len(PRESSURE_T_GRID)} 점)"


def _check_pressure_slope(model: PotentialModel, config: ComputeConfig) -> Tuple[bool, str]:
    t = 200.0
    gap = abs(pressure(model, t, config) / t - gamma_plus(model))
    bound = math.log(model.alphabet_size) / t
    return gap <= bound + 1e-9, f"|P(200φ)/200 − γ⁺| = {gap:.3e} ≤ log K/200 = {bound:.3e}"


def _check_gamma_plus_limit(model: PotentialModel, sizes: SuiteSizes) -> Tuple[bool, str]:
    gp = gamma_plus(model)
    n, value = gamma_plus_empirical(model, sizes.gamma_plus_n)[-1]
    slack = (abs(float(np.min(model.log_pi))) + model.variation_sum + abs(float(np.min(model.log_g)))) / n
    gap = abs(value - gp)
    return gap <= slack + 1e-12, f"n={n}: |(1/n)log max μ − γ⁺| = {gap:.3e} ≤ {slack:.3e}"


def _check_q_star(model: PotentialModel, config: ComputeConfig) -> Tuple[bool, str]:
    cp = q_star(model, config)
    gap = abs(m_spectrum(model, cp.q_star, config) - gamma_plus(model))
    ok = -1.0 <= cp.q_star <= 0.0 and (cp.is_max_entropy_degenerate or gap <= config.continuity_tol)
    return ok, f"q* = {cp.q_star:.10f}, |M(q*) − γ⁺| = {gap:.3e}"


def _check_w_below_r(model: PotentialModel, config: ComputeConfig) -> Tuple[bool, str]:
    R = r_spectrum(model, None, config)
    W = w_spectrum(model, R.q, config)
    worst = float(np.max(W.values - R.values))
    if model.is_degenerate:
        return worst <= 1e-10 and float(np.max(np.abs(W.values - R.values))) <= 1e-10, "퇴화 모델: W ≡ R"
    below = R.q < q_star(model, config).q_star
    strict = bool(np.all(W.values[below] < R.values[below]))
    return worst <= 1e-10 and strict, f"max(W − R) = {worst:.3e}, q < q* 에서 W < R: {strict}"


def _check_kac(model: PotentialModel, sizes: SuiteSizes) -> Tuple[bool, str]:
    worst = 0.0
    for n in range(1, sizes.kac_n + 1):
        worst = max(worst, float(np.max(np.abs(kac_products(model, n) - 1.0))))
    return worst <= 1e-9, f"n ≤ {sizes.kac_n}: max |E[S]μ(w) − 1| = {worst:.3e}"


def _check_zeta(model: PotentialModel, sizes: SuiteSizes) -> Tuple[bool, str]:
    worst, lowest = 0.0, math.inf
    for n in range(1, sizes.zeta_n + 1):
        worst = max(worst, float(np.max(zeta_agreement(model, n))))
        z, _ = zeta_block(model, word_block(model.alphabet_size, n, 0, model.alphabet_size ** n))
        lowest = min(lowest, float(np.min(z)))
    bound = model.zeta_hat_minus
    ok = worst <= 1e-12 and lowest >= bound * (1 - 1e-12) and lowest <= 1.0
    return ok, f"항등식 오차 {worst:.3e}, min ζ = {lowest:.6f} ≥ ζ̂₋ = {bound:.6f}"


def _check_lambda(model: PotentialModel, sizes: SuiteSizes) -> Tuple[bool, str]:
    worst = -math.inf
    for n in range(1, sizes.lambda_n + 1):
        worst = max(worst, lambda_n(model, n) - lambda_upper_bound(model, n))
    return worst <= 1e-12, f"max(Λ⁽ⁿ⁾ − γ⁺ − log(Dn)/n) = {worst:.3e}"


def _check_quasi_bernoulli(model: PotentialModel) -> Tuple[bool, str]:
    report = quasi_bernoulli_check(model, samples=500)
    return report.passed, f"비율 범위 [{report.min_ratio:.4f}, {report.max_ratio:.4f}], D = {report.D:.4f}"


def _check_rate_function(model: PotentialModel, config: ComputeConfig) -> Tuple[bool, str]:
    if model.is_degenerate:
        return True, "퇴화 모델: 율 함수 검사 생략"
    h = entropy(model)
    at_h = rate_I(model, h, config).value
    us = default_u_grid(model, 9)
    values = np.array([rate_I(model, float(u), config).value for u in us])
    second = float(np.min(values[2:] - 2.0 * values[1:-1] + values[:-2]))
    ok = at_h == 0.0 and bool(np.all(values >= -1e-12)) and second >= -1e-9
    return ok, f"I(h) = {at_h}, min I = {np.min(values):.3e}, min 2차 차분 = {second:.3e}"


def _check_gamma_bounds() -> Tuple[bool, str]:
    report = gamma_bounds.verify_bounds()
    bad = gamma_bounds.violations(report)
    oracle = gamma_bounds.oracle_agreement()
    worst = float(oracle["rel_error"].max())
    return len(bad) == 0 and worst <= 1e-10, f"위반 {len(bad)}건, 오라클 상대 오차 {worst:.3e}"


def run_invariant_suite(model: PotentialModel, sizes: Optional[SuiteSizes] = None,
                        config: Optional[ComputeConfig] = None) -> pd.DataFrame:
    """
    전체 불변식 검사 실행

    예외가 난 검사는 실패로 기록하고 나머지는 계속 실행합니다.

    Returns:
        (check, passed, detail) 표
    """
    config = config or get_compute_config()
    sizes = sizes or SuiteSizes()
    checks: List[Tuple[str, Callable[[], Tuple[bool, str]]]] = [
        ("normalization", lambda: _check_normalization(model, config)),
        ("additivity", lambda: _check_additivity(model, sizes)),
        ("cylinder_control", lambda: _check_cylinder_control(model, sizes)),
        ("tilt_fixed_point", lambda: _check_tilt_fixed_point(model, config)),
        ("pressure_convexity", lambda: _check_convexity(model, config)),
        ("pressure_derivative", lambda: _check_pressure_derivative(model, config)),
        ("pressure_slope", lambda: _check_pressure_slope(model, config)),
        ("gamma_plus_limit", lambda: _check_gamma_plus_limit(model, sizes)),
        ("q_star_bracket", lambda: _check_q_star(model, config)),
        ("w_below_r", lambda: _check_w_below_r(model, config)),
        ("kac", lambda: _check_kac(model, sizes)),
        ("zeta_identity", lambda: _check_zeta(model, sizes)),
        ("lambda_bound", lambda: _check_lambda(model, sizes)),
        ("quasi_bernoulli", lambda: _check_quasi_bernoulli(model)),
        ("rate_function", lambda: _check_rate_function(model, config)),
        ("gamma_bounds", _check_gamma_bounds),
    ]
    rows = []
    for name, check in checks:
        status(f"🔄 검사: {name}")
        try:
            passed, detail = check()
        except Exception as e:
            passed, detail = False, f"{type(e).__name__}: {e}"
        rows.append({"check": name, "passed": bool(passed), "detail": detail})
        status(f"{'✅' if passed else '❌'} {name}: {detail}")
    return pd.DataFrame(rows)
