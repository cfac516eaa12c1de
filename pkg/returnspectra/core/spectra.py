"""
스펙트럼 모듈

압력 P(tφ), L^q 스펙트럼 M, Rényi 엔트로피 H, 엔트로피 h,
최소 엔트로피 γ⁺ (최대 평균 사이클), 임계 지수 q*, 조각별 스펙트럼 R, W 를 계산합니다.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from ..utils.config import ComputeConfig, get_compute_config
from ..utils.errors import NumericalError
from .model import PotentialModel, cylinder_measure, log_measure_block, perron_root, phi_mean, tilt
from .words import Word, map_word_blocks

LABEL_PRESSURE = "P((1-q)phi)"
LABEL_GAMMA_PLUS = "gamma+"
LABEL_P2PHI = "P(2phi)"


@dataclass(frozen=True, eq=False)
class SpectrumCurve:
    """
    q 격자 위에서 샘플링한 스펙트럼

    branch_labels 는 구간별 라벨이며 breakpoints 보다 하나 많습니다.
    구간 i 는 [breakpoints[i-1], breakpoints[i]) 입니다.
    """
    kind: str
    q: np.ndarray
    values: np.ndarray
    breakpoints: Tuple[float, ...] = ()
    branch_labels: Tuple[str, ...] = (LABEL_PRESSURE,)

    def label_at(self, q: float) -> str:
        segment = int(np.searchsorted(np.asarray(self.breakpoints), q, side="right"))
        return self.branch_labels[segment]

    def point_labels(self) -> List[str]:
        return [self.label_at(float(x)) for x in self.q]


@dataclass(frozen=True)
class CriticalPoint:
    """M(q*) = γ⁺ 의 근"""
    q_star: float
    is_max_entropy_degenerate: bool


def default_grid(config: Optional[ComputeConfig] = None) -> np.ndarray:
    """기본 q 격자 (기본값 [-4, 4] 401 점)"""
    config = config or get_compute_config()
    return np.linspace(config.q_min, config.q_max, config.q_points)


def pressure(model: PotentialModel, t: float, config: Optional[ComputeConfig] = None) -> float:
    """
    P(tφ) = e^{tφ} 가중 전이 행렬의 Perron 고유값의 로그

    Args:
        model: 정규화 모델
        t: 지수

    Returns:
        P(tφ)
    """
    if t == 0.0:
        return math.log(model.alphabet_size)
    log_lambda, _ = perron_root(t * model.log_g, model.alphabet_size, model.memory, config)
    return log_lambda


def pressure_grid(model: PotentialModel, ts: Sequence[float], config: Optional[ComputeConfig] = None) -> np.ndarray:
    """격자 위 P(tφ) (입력 순서 유지, 스레드 병렬)"""
    config = config or get_compute_config()
    ts = [float(t) for t in ts]
    if config.workers <= 1 or len(ts) < 8:
        return np.array([pressure(model, t, config) for t in ts])
    with ThreadPoolExecutor(max_workers=config.workers) as executor:
        return np.array(list(executor.map(lambda t: pressure(model, t, config), ts)))


def m_spectrum(model: PotentialModel, q: float, config: Optional[ComputeConfig] = None) -> float:
    """M(q) = P((1−q)φ)"""
    return pressure(model, 1.0 - q, config)


def entropy(model: PotentialModel) -> float:
    """h(μ) = −∫ φ dμ"""
    return -phi_mean(model)


def renyi(model: PotentialModel, q: float, config: Optional[ComputeConfig] = None) -> float:
    """
    H(q) = −P((1+q)φ)/q, H(0) = h

    Args:
        model: 정규화 모델
        q: 차수

    Returns:
        Rényi 엔트로피
    """
    if q == 0.0:
        return entropy(model)
    return -pressure(model, 1.0 + q, config) / q


def _karp_max_mean(weights: np.ndarray, K: int, m: int) -> float:
    """
    de Bruijn 그래프 (m-단어 노드, 간선 가중치 weights[(m+1)-단어]) 의 최대 평균 사이클

    Karp: λ* = max_v min_{0≤k<N} (D_N(v) − D_k(v)) / (N − k),
    D_k(v) 는 길이 k 보행의 최대 가중치 (모든 노드에서 0 으로 출발).
    """
    N = K ** m
    W = weights.reshape(K, N)
    pred = np.arange(K)[:, None] * (N // K) + (np.arange(N) // K)[None, :]
    D = np.empty((N + 1, N))
    D[0] = 0.0
    for k in range(N):
        D[k + 1] = np.max(D[k][pred] + W, axis=0)
    ks = np.arange(N)[:, None]
    ratios = (D[N][None, :] - D[:N]) / (N - ks)
    return float(np.max(np.min(ratios, axis=0)))


def gamma_plus(model: PotentialModel) -> float:
    """
    γ⁺ = sup_η ∫ φ dη (최대 평균 사이클, Karp)

    Returns:
        γ⁺ (≤ 0)
    """
    return _karp_max_mean(model.log_g, model.alphabet_size, model.memory)


def gamma_minus(model: PotentialModel) -> float:
    """inf_η ∫ φ dη (최소 평균 사이클)"""
    return -_karp_max_mean(-model.log_g, model.alphabet_size, model.memory)


def gamma_plus_empirical(model: PotentialModel, n_max: int) -> List[Tuple[int, float]]:
    """
    (1/n) log max_{|w|=n} μ(w), n = 1..n_max (max-plus 거듭제곱, 열거 없음)

    Args:
        model: 정규화 모델
        n_max: 최대 길이 (≤ 10⁴)

    Returns:
        (n, 값) 리스트
    """
    if not 1 <= n_max <= 10 ** 4:
        raise ValueError(f"n_max 는 1 이상 10^4 이하여야 합니다: {n_max}")
    m = model.memory
    result = []
    for n in range(1, min(n_max, m - 1) + 1):
        result.append((n, float(np.max(model.log_pi_marginal(n))) / n))
    if n_max >= m:
        K, S = model.alphabet_size, model.n_states
        G = model.log_g.reshape(S, K)
        nxt = (np.arange(S)[:, None] * K + np.arange(K)[None, :]) % S
        V = model.log_pi.copy()
        result.append((m, float(np.max(V)) / m))
        for n in range(m + 1, n_max + 1):
            V = np.max(G + V[nxt], axis=1)
            result.append((n, float(np.max(V)) / n))
    return result


def max_word(model: PotentialModel, n: int) -> Tuple[Word, float]:
    """
    길이 n 에서 μ 가 최대인 단어 (max-plus 역추적)

    Returns:
        (단어, log μ)
    """
    K, m, S = model.alphabet_size, model.memory, model.n_states
    if n < m:
        marginal = model.log_pi_marginal(n)
        best = int(np.argmax(marginal))
        symbols = [(best // K ** (n - 1 - i)) % K for i in range(n)]
        return Word(tuple(symbols), K), float(marginal[best])
    G = model.log_g.reshape(S, K)
    nxt = (np.arange(S)[:, None] * K + np.arange(K)[None, :]) % S
    V = model.log_pi.copy()
    choices = []
    for _ in range(n - m):
        candidates = G + V[nxt]
        choices.append(np.argmax(candidates, axis=1))
        V = np.max(candidates, axis=1)
    u = int(np.argmax(V))
    symbols = [(u // K ** (m - 1 - i)) % K for i in range(m)]
    state = u
    for choice in reversed(choices):
        b = int(choice[state])
        symbols.append(b)
        state = (state * K + b) % S
    word = Word(tuple(symbols), K)
    return word, cylinder_measure(model, word)


def q_star(model: PotentialModel, config: Optional[ComputeConfig] = None) -> CriticalPoint:
    """
    M(q) = γ⁺ 의 유일한 근 q* ∈ [−1, 0) (이분법)

    Returns:
        CriticalPoint (퇴화 모델이면 q* = −1, flag True)

    Raises:
        NumericalError: F(−1) ≤ 0 ≤ F(0) 구간 조건 위반
    """
    config = config or get_compute_config()
    if model.is_degenerate:
        return CriticalPoint(-1.0, True)
    gp = gamma_plus(model)

    def F(q: float) -> float:
        return m_spectrum(model, q, config) - gp

    lo, hi = -1.0, 0.0
    f_lo, f_hi = F(lo), F(hi)
    if f_lo > 1e-12 or f_hi < -1e-12:
        raise NumericalError(
            f"q* 구간 조건 위반: F(-1) = {f_lo:.3e}, F(0) = {f_hi:.3e} (정규화되지 않은 모델?)"
        )
    while hi - lo > config.q_star_tol:
        mid = 0.5 * (lo + hi)
        if F(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return CriticalPoint(0.5 * (lo + hi), False)


def m_curve(model: PotentialModel, grid: Optional[Sequence[float]] = None,
            config: Optional[ComputeConfig] = None) -> SpectrumCurve:
    q = np.asarray(default_grid(config) if grid is None else grid, dtype=float)
    return SpectrumCurve("M", q, pressure_grid(model, 1.0 - q, config))


def h_curve(model: PotentialModel, grid: Optional[Sequence[float]] = None,
            config: Optional[ComputeConfig] = None) -> SpectrumCurve:
    q = np.asarray(default_grid(config) if grid is None else grid, dtype=float)
    p = pressure_grid(model, 1.0 + q, config)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.where(q == 0.0, entropy(model), -p / np.where(q == 0.0, 1.0, q))
    return SpectrumCurve("H", q, values, branch_labels=("-P((1+q)phi)/q",))


def r_spectrum(model: PotentialModel, grid: Optional[Sequence[float]] = None,
               config: Optional[ComputeConfig] = None) -> SpectrumCurve:
    """
    R(q) = P((1−q)φ) (q ≥ q*), γ⁺ (q < q*)

    Raises:
        NumericalError: q* 에서 연속성 위반
    """
    config = config or get_compute_config()
    cp = q_star(model, config)
    gp = gamma_plus(model)
    gap = abs(m_spectrum(model, cp.q_star, config) - gp)
    if gap > config.continuity_tol:
        raise NumericalError(f"q* = {cp.q_star:.10f} 에서 R 이 연속이 아닙니다 (차이 {gap:.3e})")
    curve = m_curve(model, grid, config)
    values = np.where(curve.q >= cp.q_star, curve.values, gp)
    return SpectrumCurve("R", curve.q, values, (cp.q_star,), (LABEL_GAMMA_PLUS, LABEL_PRESSURE))


def w_spectrum(model: PotentialModel, grid: Optional[Sequence[float]] = None,
               config: Optional[ComputeConfig] = None) -> SpectrumCurve:
    """W(q) = P((1−q)φ) (q ≥ −1), P(2φ) (q < −1)"""
    curve = m_curve(model, grid, config)
    p2 = pressure(model, 2.0, config)
    values = np.where(curve.q >= -1.0, curve.values, p2)
    return SpectrumCurve("W", curve.q, values, (-1.0,), (LABEL_P2PHI, LABEL_PRESSURE))


def w_equals_r(model: PotentialModel) -> bool:
    """W ≡ R 인지 (최대 엔트로피 측도일 때만)"""
    return model.is_degenerate


@dataclass(frozen=True)
class PhaseSummary:
    """스펙트럼 요약 값 (CSV 메타데이터 헤더용)"""
    q_star: float
    degenerate: bool
    gamma_plus: float
    gamma_minus: float
    pressure_2phi: float
    m_minus_one: float
    entropy: float
    i_domain: Tuple[float, float]
    j_domain: Tuple[float, float]


def tilted_phi_mean(model: PotentialModel, t: float, config: Optional[ComputeConfig] = None) -> float:
    """∫ φ dμ_{tφ} (φ 는 원래 모델의 포텐셜)"""
    return phi_mean(tilt(model, t, config), model.log_g)


def phase_transition_summary(model: PotentialModel, config: Optional[ComputeConfig] = None) -> PhaseSummary:
    """q*, γ⁺, P(2φ), h 와 율 함수 정의역을 한 번에 계산"""
    cp = q_star(model, config)
    gp, gm = gamma_plus(model), gamma_minus(model)
    u_lo = float("nan") if cp.is_max_entropy_degenerate else -tilted_phi_mean(model, 1.0 - cp.q_star, config)
    return PhaseSummary(
        q_star=cp.q_star,
        degenerate=cp.is_max_entropy_degenerate,
        gamma_plus=gp,
        gamma_minus=gm,
        pressure_2phi=pressure(model, 2.0, config),
        m_minus_one=m_spectrum(model, -1.0, config),
        entropy=entropy(model),
        i_domain=(u_lo, -gm),
        j_domain=(-gp, -gm),
    )


@dataclass(frozen=True)
class OneSidedDerivatives:
    """q* 에서 R 의 한쪽 도함수 (해석값과 차분값)"""
    q_star: float
    left: float
    right: float
    left_numeric: float
    right_numeric: float


def r_one_sided_derivatives(model: PotentialModel, step: float = 1e-6,
                            config: Optional[ComputeConfig] = None) -> OneSidedDerivatives:
    """
    q* 에서 R′ 의 왼쪽(0) / 오른쪽(−∫φ dμ_{(1−q*)φ}) 극한

    Args:
        model: 정규화 모델
        step: 한쪽 차분 간격
    """
    cp = q_star(model, config)
    qs = cp.q_star
    gp = gamma_plus(model)

    def R(q: float) -> float:
        return m_spectrum(model, q, config) if q >= qs else gp

    right = -tilted_phi_mean(model, 1.0 - qs, config)
    return OneSidedDerivatives(
        q_star=qs,
        left=0.0,
        right=right,
        left_numeric=(R(qs) - R(qs - step)) / step,
        right_numeric=(R(qs + step) - R(qs)) / step,
    )


def m_spectrum_n(model: PotentialModel, n: int, q: float, budget: Optional[int] = None) -> float:
    """
    유한 n L^q 스펙트럼 (1/n) log Σ_{|w|=n} μ(w)^{1−q}

    Raises:
        BudgetExceededError: Kⁿ 이 예산 초과
    """
    parts = map_word_blocks(
        model.alphabet_size, n,
        lambda block: float(logsumexp((1.0 - q) * log_measure_block(model, block))),
        budget,
    )
    return float(logsumexp(np.array(parts))) / n


@dataclass(frozen=True)
class ConcatenationDiagnostic:
    """B_i 의 k 배 연결 A 에 대한 (1/n) log μ(A) 와 γ⁺ 의 차"""
    base_word: Word
    repeats: int
    value: float
    gap: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.gap <= self.bound + 1e-12


def concatenation_diagnostic(model: PotentialModel, i: int, k: int) -> ConcatenationDiagnostic:
    """
    길이 i 최대 확률 단어 B_i 를 k 번 이어 붙인 A 로 (1/n) log μ(A) → γ⁺ 확인

    한계: |value − γ⁺| ≤ log D / i + |log μ(B_i)/i − γ⁺|
    """
    base, log_mu_base = max_word(model, i)
    gp = gamma_plus(model)
    repeated = Word(base.symbols * k, base.alphabet_size)
    value = cylinder_measure(model, repeated) / (i * k)
    bound = math.log(model.quasi_bernoulli_D) / i + abs(log_mu_base / i - gp)
    return ConcatenationDiagnostic(base, k, value, abs(value - gp), bound)


def spectrum_frame(model: PotentialModel, grid: Optional[Sequence[float]] = None,
                   config: Optional[ComputeConfig] = None) -> pd.DataFrame:
    """
    q, M, H, R, W, branch_label 표

    branch_label 은 "R 라벨;W 라벨" 형식입니다.
    """
    M = m_curve(model, grid, config)
    H = h_curve(model, M.q, config)
    R = r_spectrum(model, M.q, config)
    W = w_spectrum(model, M.q, config)
    labels = [f"{r};{w}" for r, w in zip(R.point_labels(), W.point_labels())]
    return pd.DataFrame({
        "q": M.q,
        "M": M.values,
        "H": H.values,
        "R": R.values,
        "W": W.values,
        "branch_label": labels,
    })
