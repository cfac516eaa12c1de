"""
불완전 감마 함수 모듈

상부 불완전 감마 함수 Γ(s, x) = ∫_x^∞ t^{s−1} e^{−t} dt 를 s < 0 에서 계산하고,
하한/상한 부등식 계열을 격자 위에서 검증합니다.

평가 방법:
    x ≥ 1 : Legendre 연분수 (수정 Lentz)
    x < 1 : s 를 (0, 1) 로 올린 뒤 Γ(s,x) = (Γ(s+1,x) − x^s e^{−x}) / s 로 내려오기
    오라클 : scipy.integrate.quad (t = x e^v 치환) + 해석적 꼬리 잔차
"""

import math
import sys
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import integrate, special

from ..utils.errors import DomainError, NumericalError

X_MAX = 50.0
CF_THRESHOLD = 1.0
CF_ACCURACY = 1.0e-16
CF_MAX_ITERATION = 10000
_FPMIN = sys.float_info.min / sys.float_info.epsilon

DEFAULT_S_GRID = (-4.5, -2.5, -1.5, -0.7, -0.3, -0.1)
DEFAULT_X_GRID = (1e-6, 1e-3, 0.01, 0.1, 0.5, 1.0)
SLACK_TOLERANCE = -1e-12


@dataclass(frozen=True)
class GammaEval:
    """Γ(s, x) 평가 결과"""
    s: float
    x: float
    value: float
    method: str


def _check_arguments(s: float, x: float, allow_integer: bool) -> None:
    if not (0.0 < x <= X_MAX):
        raise DomainError(f"x 는 (0, {X_MAX:g}] 범위여야 합니다: {x}")
    if not math.isfinite(s):
        raise DomainError(f"s 는 유한해야 합니다: {s}")
    if s <= 0 and float(s).is_integer() and not allow_integer:
        raise DomainError(f"s = {s:g} 는 0 이하 정수입니다 (재귀가 Γ(0, x) 를 지남)")


def _continued_fraction(s: float, x: float) -> float:
    """Γ(s,x) = e^{−x} x^s · 1/(x+1−s − 1(1−s)/(x+3−s − …)) (x > 0, 모든 실수 s)"""
    b = x + 1.0 - s
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, CF_MAX_ITERATION + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < CF_ACCURACY:
            return math.exp(-x + s * math.log(x)) * h
    raise NumericalError(f"Γ({s}, {x}) 연분수가 {CF_MAX_ITERATION} 회 내에 수렴하지 않았습니다")


def _positive_order(r: float, x: float) -> float:
    """r > 0 에서 Γ(r, x)"""
    return float(special.gammaincc(r, x) * special.gamma(r))


def upper_incomplete_gamma(s: float, x: float, allow_integer: bool = False) -> GammaEval:
    """
    상부 불완전 감마 함수 Γ(s, x)

    Args:
        s: 차수 (0 이하 정수 불가, allow_integer=True 이면 E₁ 에서 출발)
        x: (0, 50] 인자
        allow_integer: 0 이하 정수 s 허용 여부

    Returns:
        GammaEval

    Raises:
        DomainError: 정의역 밖 인자
    """
    s, x = float(s), float(x)
    _check_arguments(s, x, allow_integer)
    if x >= CF_THRESHOLD:
        return GammaEval(s, x, _continued_fraction(s, x), "continued-fraction")
    if s > 0.0:
        return GammaEval(s, x, _positive_order(s, x), "recursion")

    if float(s).is_integer():
        # Γ(0, x) = E₁(x)
        steps = int(-s)
        r = 0.0
        value = float(special.exp1(x))
    else:
        steps = int(math.ceil(-s))
        r = s + steps
        value = _positive_order(r, x)
    log_x = math.log(x)
    for j in range(1, steps + 1):
        order = r - j
        value = (value - math.exp(order * log_x - x)) / order
    return GammaEval(s, x, value, "recursion")


def gamma_quadrature(s: float, x: float) -> GammaEval:
    """
    적응 구적 오라클 ∫_x^X t^{s−1} e^{−t} dt + 꼬리 잔차 (X = x + 60)

    t = x e^v 로 치환해 [0, log(X/x)] 에서 적분합니다.
    """
    s, x = float(s), float(x)
    _check_arguments(s, x, allow_integer=True)
    upper_t = x + 60.0
    v_max = math.log(upper_t / x)
    log_x = math.log(x)

    def integrand(v: float) -> float:
        return math.exp(s * (log_x + v) - x * math.exp(v))

    points = None
    if s > 0.0:
        v_peak = math.log(s / x)
        if 0.0 < v_peak < v_max:
            points = [v_peak]
    body, _abserr = integrate.quad(integrand, 0.0, v_max, epsabs=0.0, epsrel=1e-13,
                                   limit=500, points=points)
    tail = math.exp((s - 1.0) * math.log(upper_t) - upper_t) / (1.0 + (1.0 - s) / upper_t)
    return GammaEval(s, x, body + tail, "quadrature")


def recursion_residual(s: float, x: float) -> float:
    """s·Γ(s,x) − Γ(s+1,x) + x^s e^{−x} 의 상대 잔차"""
    a = upper_incomplete_gamma(s, x).value
    b = upper_incomplete_gamma(s + 1.0, x, allow_integer=True).value
    term = math.exp(s * math.log(x) - x)
    return abs(s * a - b + term) / max(abs(s * a), abs(term))


def _row(s, x, family, lhs, mid, rhs) -> dict:
    scale = abs(mid) if mid != 0 else 1.0
    slack_lo = (mid - lhs) / scale if lhs is not None else float("nan")
    slack_hi = (rhs - mid) / scale if rhs is not None else float("nan")
    passed = all(v >= SLACK_TOLERANCE for v in (slack_lo, slack_hi) if not math.isnan(v))
    return {
        "s": s, "x": x,
        "lhs": float("nan") if lhs is None else lhs,
        "mid": mid,
        "rhs": float("nan") if rhs is None else rhs,
        "slack_lo": slack_lo, "slack_hi": slack_hi,
        "inequality_id": family,
        "passed": passed,
    }


def bound_rows(s: float, x: float) -> List[dict]:
    """
    (s, x) 한 점에서 적용되는 부등식 계열 전체

    r = s < 0:
        A2      Γ(r,x) ≤ x^{−|r|} e^{−x} / |r|
        A3      Γ(r,x) ≥ x^{−|r|} e^{−x} / (x + 1 + |r|)
        A3-c    Γ(r,x) ≥ x^{−|r|} e^{−x} / (2 + |r|)              (x ≤ 1)
    s < −1:
        A4      x^{−|s|}e^{−x}(1 − x/|s+1|) ≤ |s|Γ(s,x) ≤ x^{−|s|}e^{−x}(1 − x/(|s|+2))
    −1 < s < 0, r = s + 1 ∈ (0, 1):
        A5      e^{−x} 2^{r−2} ≤ Γ(r,x) ≤ e^{−x} Γ(r)
        A5-fine e^{−x}(1+x)^{r−1} ≤ Γ(r,x) ≤ e^{−x} Γ(r) (1 + x/r)^{r−1}
        A6      x^{−|s|}e^{−x}(1 − Γ(1−|s|) x^{|s|}) ≤ |s|Γ(s,x) ≤ x^{−|s|}e^{−x}(1 − 2^{−|s|−1} x^{|s|})
    """
    rows = []
    gamma_s = upper_incomplete_gamma(s, x).value
    a = abs(s)
    base = math.exp(-a * math.log(x) - x)  # x^{−|s|} e^{−x}
    rows.append(_row(s, x, "A2", None, gamma_s, base / a))
    rows.append(_row(s, x, "A3", base / (x + 1.0 + a), gamma_s, None))
    if x <= 1.0:
        rows.append(_row(s, x, "A3-c", base / (2.0 + a), gamma_s, None))
    if s < -1.0:
        rows.append(_row(s, x, "A4", base * (1.0 - x / abs(s + 1.0)), a * gamma_s,
                         base * (1.0 - x / (a + 2.0))))
    elif -1.0 < s < 0.0:
        r = s + 1.0
        gamma_r = upper_incomplete_gamma(r, x).value
        ex = math.exp(-x)
        complete = float(special.gamma(r))
        rows.append(_row(s, x, "A5", ex * 2.0 ** (r - 2.0), gamma_r, ex * complete))
        rows.append(_row(s, x, "A5-fine", ex * (1.0 + x) ** (r - 1.0), gamma_r,
                         ex * complete * (1.0 + x / r) ** (r - 1.0)))
        xa = x ** a
        rows.append(_row(s, x, "A6", base * (1.0 - float(special.gamma(1.0 - a)) * xa), a * gamma_s,
                         base * (1.0 - 2.0 ** (-a - 1.0) * xa)))
    return rows


def default_grid() -> List[Tuple[float, float]]:
    """기본 36 점 (s, x) 격자"""
    return [(s, x) for s in DEFAULT_S_GRID for x in DEFAULT_X_GRID]


def verify_bounds(grid: Optional[Iterable[Tuple[float, float]]] = None) -> pd.DataFrame:
    """
    격자 위 모든 부등식 계열 검증

    Args:
        grid: (s, x) 목록 (None 이면 기본 36 점)

    Returns:
        DataFrame (s, x, lhs, mid, rhs, slack_lo, slack_hi, inequality_id, passed)
    """
    grid = default_grid() if grid is None else list(grid)
    rows = []
    for s, x in grid:
        rows.extend(bound_rows(float(s), float(x)))
    return pd.DataFrame(rows, columns=["s", "x", "lhs", "mid", "rhs", "slack_lo", "slack_hi",
                                       "inequality_id", "passed"])


def oracle_agreement(grid: Optional[Sequence[Tuple[float, float]]] = None) -> pd.DataFrame:
    """
    평가기와 구적 오라클의 상대 오차

    Returns:
        DataFrame (s, x, value, oracle, rel_error, method)
    """
    grid = default_grid() if grid is None else list(grid)
    rows = []
    for s, x in grid:
        ev = upper_incomplete_gamma(s, x)
        oracle = gamma_quadrature(s, x).value
        rows.append({
            "s": float(s), "x": float(x),
            "value": ev.value, "oracle": oracle,
            "rel_error": abs(ev.value - oracle) / abs(oracle),
            "method": ev.method,
        })
    return pd.DataFrame(rows)


def violations(report: pd.DataFrame) -> pd.DataFrame:
    """verify_bounds 결과에서 위반 행만"""
    return report[~report["passed"].astype(bool)]
