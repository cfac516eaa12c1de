"""
대편차 율 함수 모듈

R 스펙트럼의 Legendre 변환 I 와 M 스펙트럼의 변환 J 를 도함수 역산(이분법)으로 계산하고,
정확한 유한 n 꼬리 확률과 비교합니다.

    I(u) = u q̂ − R(q̂),  R′(q̂) = u,  u ∈ (u_lo, u_hi)
    u_lo = −∫φ dμ_{(1−q*)φ},  u_hi = −inf_η ∫φ dη
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..utils.config import ComputeConfig, get_compute_config, status
from ..utils.errors import DegenerateModelError, DomainError, OutsideTheoremScopeError
from .model import PotentialModel
from .return_exact import exact_tail
from .spectra import entropy, gamma_minus, gamma_plus, m_spectrum, q_star, tilted_phi_mean

ROOT_TOL = 1e-10
MAX_TILT_EXPONENT = 350.0
TAILS = ("upper", "lower")


class RateValue(NamedTuple):
    value: float
    q_hat: float


@dataclass(frozen=True)
class RateFunction:
    """율 함수 종류, 정의역, 기준 엔트로피"""
    kind: str
    u_lo: float
    u_hi: float
    entropy: float

    def evaluate(self, model: PotentialModel, us: Sequence[float]) -> pd.DataFrame:
        """u 격자 위 (u, value, q_hat)"""
        fn = rate_I if self.kind == "I" else rate_J
        rows = []
        for u in us:
            try:
                value, q_hat = fn(model, float(u))
            except OutsideTheoremScopeError:
                value, q_hat = math.nan, math.nan
            rows.append({"u": float(u), "value": value, "q_hat": q_hat})
        return pd.DataFrame(rows)


def _require_non_degenerate(model: PotentialModel) -> None:
    if model.is_degenerate:
        raise DegenerateModelError(
            "최대 엔트로피 측도에서는 R′ 이 상수 log K 이므로 율 함수를 역산할 수 없습니다"
        )


def r_prime(model: PotentialModel, q: float, config: Optional[ComputeConfig] = None) -> float:
    """
    R′(q) = −∫φ dμ_{(1−q)φ} (q > q*)

    Raises:
        DegenerateModelError: 균등 모델
        DomainError: q ≤ q*
    """
    _require_non_degenerate(model)
    qs = q_star(model, config).q_star
    if q <= qs:
        raise DomainError(f"r_prime 은 q > q* = {qs:.10f} 에서만 정의됩니다: q={q}")
    return -tilted_phi_mean(model, 1.0 - q, config)


def m_prime(model: PotentialModel, q: float, config: Optional[ComputeConfig] = None) -> float:
    """M′(q) = −∫φ dμ_{(1−q)φ} (모든 q)"""
    return -tilted_phi_mean(model, 1.0 - q, config)


def _q_limit(model: PotentialModel) -> float:
    """|1 − q|·ptp(log g) ≤ MAX_TILT_EXPONENT 가 되는 |q| 상한 (기울인 가중치가 표현 가능한 범위)"""
    spread = float(np.ptp(model.log_g))
    return MAX_TILT_EXPONENT / spread - 1.0 if spread > 0 else MAX_TILT_EXPONENT


def _invert(derivative: Callable[[float], float], u: float, lo: float, hi: float,
            expand_lo: bool, limit: float) -> Optional[float]:
    """
    단조 증가 derivative(q) = u 의 근 (이분법, 필요하면 |q| ≤ limit 까지 구간 확장)

    Returns:
        q̂, 구간을 못 찾으면 None (도함수가 정의역 끝값에 수치적으로 포화)
    """
    while derivative(hi) < u:
        if hi >= limit:
            return None
        lo, hi = hi, min(limit, 2.0 * hi if hi > 0 else hi + 1.0)
    if expand_lo:
        while derivative(lo) > u:
            if lo <= -limit:
                return None
            hi, lo = lo, max(-limit, 2.0 * lo if lo < 0 else lo - 1.0)
    while hi - lo > ROOT_TOL:
        mid = 0.5 * (lo + hi)
        if derivative(mid) < u:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _saturated(kind: str, u: float) -> RateValue:
    status(f"⚠️ {kind}: u={u!r} 에서 R′ 이 정의역 끝값에 포화되어 q̂ 를 표현할 수 없습니다 (+∞ 로 처리)")
    return RateValue(math.inf, math.nan)


def i_domain(model: PotentialModel, config: Optional[ComputeConfig] = None) -> Tuple[float, float]:
    """I 의 정의역 (u_lo, u_hi)"""
    _require_non_degenerate(model)
    qs = q_star(model, config).q_star
    return -tilted_phi_mean(model, 1.0 - qs, config), -gamma_minus(model)


def j_domain(model: PotentialModel) -> Tuple[float, float]:
    """J 의 정의역 (−γ⁺, −γ⁻)"""
    return -gamma_plus(model), -gamma_minus(model)


def rate_I(model: PotentialModel, u: float, config: Optional[ComputeConfig] = None) -> RateValue:
    """
    I(u) = u q̂ − R(q̂)

    Args:
        model: 비퇴화 정규화 모델
        u: 율 (로그 귀환 시간 / n)

    Returns:
        RateValue(value, q_hat); u ≥ u_hi 이거나 q̂ 가 |q| 상한 밖이면 (+∞, nan)

    Raises:
        DegenerateModelError: 균등 모델
        OutsideTheoremScopeError: u < u_lo
    """
    _require_non_degenerate(model)
    if u == entropy(model):
        return RateValue(0.0, 0.0)
    u_lo, u_hi = i_domain(model, config)
    if u >= u_hi:
        return RateValue(math.inf, math.nan)
    if u < u_lo:
        raise OutsideTheoremScopeError(
            f"u={u} 는 I 의 정의역 하한 {u_lo:.10f} 아래입니다 (정리 범위 밖)"
        )
    qs = q_star(model, config).q_star
    if u == u_lo:
        q_hat = qs
    else:
        q_hat = _invert(lambda q: -tilted_phi_mean(model, 1.0 - q, config), u, qs, max(1.0, qs + 1.0),
                        expand_lo=False, limit=_q_limit(model))
        if q_hat is None:
            return _saturated("I", u)
    return RateValue(u * q_hat - m_spectrum(model, q_hat, config), q_hat)


def rate_J(model: PotentialModel, u: float, config: Optional[ComputeConfig] = None) -> RateValue:
    """
    J(u) = sup_q (u q − M(q)) (모든 q 에 대한 켤레)

    Returns:
        RateValue(value, q_hat); 열린 정의역 (−γ⁺, −γ⁻) 밖이면 (+∞, nan)

    Raises:
        DegenerateModelError: 균등 모델
    """
    _require_non_degenerate(model)
    if u == entropy(model):
        return RateValue(0.0, 0.0)
    lo_u, hi_u = j_domain(model)
    if u <= lo_u or u >= hi_u:
        return RateValue(math.inf, math.nan)
    q_hat = _invert(lambda q: m_prime(model, q, config), u, -1.0, 1.0, expand_lo=True, limit=_q_limit(model))
    if q_hat is None:
        return _saturated("J", u)
    return RateValue(u * q_hat - m_spectrum(model, q_hat, config), q_hat)


def rate_function(model: PotentialModel, kind: str = "I") -> RateFunction:
    """종류별 율 함수 정의역 정보"""
    if kind not in ("I", "J"):
        raise DomainError(f"kind 는 'I' 또는 'J' 여야 합니다: {kind!r}")
    lo, hi = i_domain(model) if kind == "I" else j_domain(model)
    return RateFunction(kind, lo, hi, entropy(model))


def grid_supremum(model: PotentialModel, u: float, qs: Sequence[float],
                  config: Optional[ComputeConfig] = None) -> float:
    """max_{q ∈ 격자} (u q − R(q)) (Legendre 변환의 독립 검사)"""
    qstar = q_star(model, config).q_star
    gp = gamma_plus(model)
    best = -math.inf
    for q in qs:
        R = m_spectrum(model, q, config) if q >= qstar else gp
        best = max(best, u * q - R)
    return best


def default_u_grid(model: PotentialModel, points: int = 41) -> np.ndarray:
    """I 정의역 내부의 균등 격자"""
    lo, hi = i_domain(model)
    return np.linspace(lo, hi, points + 2)[1:-1]


def rate_grid(model: PotentialModel, us: Optional[Sequence[float]] = None,
              config: Optional[ComputeConfig] = None) -> pd.DataFrame:
    """
    (u, I, J, q_hat, in_I_domain, in_J_domain) 표 (u 순서 유지, 스레드 병렬)
    """
    config = config or get_compute_config()
    us = default_u_grid(model) if us is None else np.asarray(us, dtype=float)
    u_lo, u_hi = i_domain(model, config)
    j_lo, j_hi = j_domain(model)

    def row(u: float) -> dict:
        try:
            value_i, q_hat = rate_I(model, u, config)
        except OutsideTheoremScopeError:
            value_i, q_hat = math.nan, math.nan
        value_j, _ = rate_J(model, u, config)
        return {
            "u": u,
            "I": value_i,
            "J": value_j,
            "q_hat": q_hat,
            "in_I_domain": bool(u_lo <= u < u_hi),
            "in_J_domain": bool(j_lo < u < j_hi),
        }

    values = [float(u) for u in us]
    if config.workers <= 1 or len(values) < 4:
        rows = [row(u) for u in values]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as executor:
            rows = list(executor.map(row, values))
    return pd.DataFrame(rows)


def ldp_compare(model: PotentialModel, n_list: Sequence[int], u: float, tail: str = "upper",
                budget: Optional[int] = None, config: Optional[ComputeConfig] = None) -> pd.DataFrame:
    """
    −(1/n) log P(R_n > e^{n(h+u)}) (또는 P(R_n < e^{n(h−u)})) 와 I(h ± u) 비교

    Args:
        model: 비퇴화 정규화 모델
        n_list: 단어 길이 목록
        u: 편차 (≥ 0)
        tail: "upper" | "lower"

    Returns:
        (n, u, tail, exact_rate, I_value, gap) 표

    Raises:
        DomainError: u 가 해당 꼬리의 정리 범위 밖
    """
    if tail not in TAILS:
        raise DomainError(f"tail 은 {TAILS} 중 하나여야 합니다: {tail!r}")
    if u < 0:
        raise DomainError(f"u 는 0 이상이어야 합니다: {u}")
    h = entropy(model)
    if tail == "lower":
        u_lo, _ = i_domain(model, config)
        if not u < h - u_lo:
            raise DomainError(f"하한 꼬리는 0 ≤ u < {h - u_lo:.10f} 에서만 정리가 적용됩니다: u={u}")
        target = h - u
    else:
        target = h + u
    i_value = rate_I(model, target, config).value

    rows = []
    for n in n_list:
        status(f"🔄 exact_tail: n={n}, u={u}, {tail}")
        result = exact_tail(model, n, math.exp(n * target), lower=(tail == "lower"), budget=budget,
                            config=config)
        exact_rate = -result.log_prob / n
        rows.append({
            "n": n,
            "u": u,
            "tail": tail,
            "exact_rate": exact_rate,
            "I_value": i_value,
            "gap": abs(exact_rate - i_value) if math.isfinite(i_value) else math.inf,
        })
    return pd.DataFrame(rows)
