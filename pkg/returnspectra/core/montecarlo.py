"""
몬테카를로 경로 시뮬레이션 모듈

정상 마르코프 경로를 생성해 귀환 시간 R_n, 도달 시간 T, 지수 법칙을 경험적으로 검증합니다.

난수: Philox (카운터 기반 64-bit) 생성기를 (seed, 블록 번호) 키로 만들어
복제 블록마다 독립 스트림을 씁니다. 블록 크기가 고정이므로 스레드 수와 무관하게
결과가 비트 단위로 같습니다.
"""

import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..utils.config import get_compute_config, status
from ..utils.errors import DomainError, InsufficientSamplesError
from ..utils.parallel import map_blocks, split_range
from .model import PotentialModel, log_measure_block
from .words import Word, check_budget, kmp_transitions, map_word_blocks

MIN_UNCENSORED = 100
TIME_CHUNK = 256
MAX_TABLE_ROWS = 200
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SimConfig:
    """
    시뮬레이션 설정

    Args:
        seed: 64-bit 시드
        replicas: 복제 수 (≥ 1)
        t_max: 경로 상한 (≥ 2), 넘으면 중도 절단
        n: 단어 길이
    """
    seed: int
    replicas: int
    t_max: int
    n: int

    def __post_init__(self):
        if self.replicas < 1:
            raise DomainError(f"replicas 는 1 이상이어야 합니다: {self.replicas}")
        if self.t_max < 2:
            raise DomainError(f"t_max 는 2 이상이어야 합니다: {self.t_max}")
        if self.n < 1:
            raise DomainError(f"n 은 1 이상이어야 합니다: {self.n}")

    @classmethod
    def from_config(cls, n: int, seed: Optional[int] = None, replicas: Optional[int] = None,
                    t_max: Optional[int] = None) -> "SimConfig":
        """전역 설정 기본값으로 SimConfig 생성"""
        config = get_compute_config()
        return cls(
            seed=seed if seed is not None else config.seed,
            replicas=replicas if replicas is not None else config.replicas,
            t_max=t_max if t_max is not None else config.t_max,
            n=n,
        )


@dataclass(frozen=True)
class QuantileValue:
    p: float
    value: float
    censoring_affected: bool


@dataclass(frozen=True, eq=False)
class EmpiricalLaw:
    """
    정렬된 표본과 중도 절단 개수

    values 에는 t_max 이하로 관측된 값만 들어 있고, 나머지는 censored 로 셉니다.
    """
    values: np.ndarray
    censored: int
    t_max: int
    variable: str = "R"

    @property
    def size(self) -> int:
        return int(self.values.size) + self.censored

    @property
    def censoring_fraction(self) -> float:
        return self.censored / self.size

    def quantile(self, p: float) -> QuantileValue:
        """
        p-분위수 (절단 표본은 +∞ 로 취급)

        중도 절단이 순위 안에 들어올 수 있으면 censoring_affected=True.
        """
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"p 는 [0, 1] 범위여야 합니다: {p}")
        rank = min(self.size - 1, int(math.floor(p * (self.size - 1))))
        if rank >= self.values.size:
            return QuantileValue(p, math.inf, True)
        return QuantileValue(p, float(self.values[rank]), False)

    def ecdf(self, ts: Sequence[float]) -> np.ndarray:
        """P̂(X ≤ t) (절단 표본은 분모에만 포함)"""
        ts = np.asarray(ts, dtype=float)
        return np.searchsorted(self.values, ts, side="right") / self.size

    def log_rate(self, n: int) -> np.ndarray:
        """(1/n) log X (관측값만)"""
        return np.log(self.values.astype(float)) / n


def dkw_epsilon(sample_size: int, alpha: float = 0.01) -> float:
    """Dvoretzky–Kiefer–Wolfowitz 밴드 폭 sqrt(log(2/α) / (2N))"""
    if sample_size < 1:
        raise DomainError(f"표본 크기는 1 이상이어야 합니다: {sample_size}")
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * sample_size))


def _block_rng(seed: int, block_index: int) -> np.random.Generator:
    """(seed, 블록 번호) 를 Philox 키로 쓰는 독립 스트림"""
    key = ((block_index & _MASK64) << 64) | (seed & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


class _ChainSampler:
    """순방향 전이로 정상 경로를 벡터화 생성"""

    def __init__(self, model: PotentialModel):
        self.K = model.alphabet_size
        self.m = model.memory
        self.S = model.n_states
        self.pi = model.stationary_pi
        self.thresholds = np.cumsum(model.forward_transitions, axis=1)[:, :-1]
        self.pi_cum = np.cumsum(self.pi)

    def draw(self, states: np.ndarray, u: np.ndarray) -> np.ndarray:
        return np.sum(u[:, None] >= self.thresholds[states], axis=1)

    def _digits(self, states: np.ndarray, length: int) -> np.ndarray:
        powers = self.K ** np.arange(length - 1, -1, -1, dtype=np.int64)
        return (states[:, None] // powers[None, :]) % self.K

    def prefix(self, rng: np.random.Generator, count: int, length: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        정상 분포에서 길이 length (≥ m) 경로 앞부분 생성

        Returns:
            (기호 (count, length), 마지막 m 기호 상태 (count,))
        """
        u0 = rng.random(count) * self.pi_cum[-1]
        states = np.minimum(np.searchsorted(self.pi_cum, u0, side="right"), self.S - 1)
        symbols = np.empty((count, length), dtype=np.int64)
        symbols[:, :self.m] = self._digits(states, self.m)
        if length > self.m:
            u = rng.random((count, length - self.m))
            for i in range(length - self.m):
                a = self.draw(states, u[:, i])
                symbols[:, self.m + i] = a
                states = (states * self.K + a) % self.S
        return symbols, states

    def conditioned_prefix(self, rng: np.random.Generator, word: Sequence[int],
                           count: int) -> Tuple[np.ndarray, np.ndarray]:
        """[w] 로 조건부인 경로 앞부분 (길이 max(n, m))"""
        w = np.asarray(word, dtype=np.int64)
        n = w.size
        if n >= self.m:
            state = 0
            for a in w[n - self.m:]:
                state = state * self.K + int(a)
            return np.broadcast_to(w, (count, n)).copy(), np.full(count, state, dtype=np.int64)
        head = 0
        for a in w:
            head = head * self.K + int(a)
        tail_count = self.K ** (self.m - n)
        candidates = head * tail_count + np.arange(tail_count)
        weights = np.cumsum(self.pi[candidates])
        pick = np.searchsorted(weights, rng.random(count) * weights[-1], side="right")
        states = candidates[np.minimum(pick, tail_count - 1)]
        return self._digits(states, self.m), states


def _scan(sampler: _ChainSampler, delta: np.ndarray, n: int, states: np.ndarray,
          feed: np.ndarray, first_position: int, rng: np.random.Generator, t_max: int) -> np.ndarray:
    """
    KMP 오토마톤으로 첫 출현 시작 위치를 찾음

    feed[:, i] 는 위치 first_position + i 의 기호이며, 그 뒤는 상태 states 에서 이어 생성합니다.
    위치 e 에서 완전 일치하면 값은 e − n + 1, t_max 를 넘으면 −1 (중도 절단).
    """
    count = states.shape[0]
    result = np.full(count, -1, dtype=np.int64)
    j = np.zeros(count, dtype=np.int64)
    rows = np.arange(count)
    for i in range(feed.shape[1]):
        position = first_position + i
        if position - n + 1 > t_max:
            return result
        j = delta[rows, j, feed[:, i]]
        hit = (j == n) & (result < 0)
        result[hit] = position - n + 1
        j = np.where(j == n, 0, j)

    position = first_position + feed.shape[1]
    active = np.nonzero(result < 0)[0]
    states = states.copy()
    while active.size and position - n + 1 <= t_max:
        chunk = min(TIME_CHUNK, t_max + n - position)
        u = rng.random((active.size, chunk))
        s, jj, d = states[active], j[active], delta[active]
        local = np.arange(active.size)
        found = np.full(active.size, -1, dtype=np.int64)
        for c in range(chunk):
            a = sampler.draw(s, u[:, c])
            s = (s * sampler.K + a) % sampler.S
            jj = d[local, jj, a]
            hit = (jj == n) & (found < 0)
            found[hit] = position + c - n + 1
            jj = np.where(jj == n, 0, jj)
        states[active], j[active] = s, jj
        result[active] = found
        position += chunk
        active = active[found < 0]
    return result


def _simulate_block(model: PotentialModel, n: int, mode: str, t_max: int, seed: int,
                    block_index: int, count: int, word: Optional[Sequence[int]] = None) -> np.ndarray:
    rng = _block_rng(seed, block_index)
    sampler = _ChainSampler(model)
    K, m = model.alphabet_size, model.memory
    length = max(n, m)
    if word is None:
        prefix, states = sampler.prefix(rng, count, length)
        targets = prefix[:, :n]
        delta = np.stack([kmp_transitions(row, K) for row in targets])
    else:
        prefix, states = sampler.conditioned_prefix(rng, word, count)
        delta = np.broadcast_to(kmp_transitions(list(word), K), (count, n, K))
    if mode == "hitting":
        feed, states = sampler.prefix(rng, count, length)
        return _scan(sampler, delta, n, states, feed, 1, rng, t_max)
    return _scan(sampler, delta, n, states, prefix[:, 1:], 2, rng, t_max)


def _simulate(model: PotentialModel, cfg: SimConfig, mode: str,
              word: Optional[Sequence[int]] = None) -> np.ndarray:
    """복제 블록을 병렬 실행하고 복제 순서대로 결과를 이어 붙임"""
    config = get_compute_config()
    blocks = split_range(cfg.replicas, config.mc_block_size)
    status(f"🔄 {mode} 시뮬레이션: n={cfg.n}, 복제 {cfg.replicas}개, 블록 {len(blocks)}개")
    parts = map_blocks(
        lambda i, start, stop: _simulate_block(model, cfg.n, mode, cfg.t_max, cfg.seed, i, stop - start, word),
        blocks,
    )
    return np.concatenate(parts)


def _law_from(raw: np.ndarray, t_max: int, variable: str) -> EmpiricalLaw:
    observed = np.sort(raw[raw > 0])
    return EmpiricalLaw(observed, int(np.sum(raw < 0)), t_max, variable)


def sample_path(model: PotentialModel, length: int, rng: np.random.Generator) -> np.ndarray:
    """
    μ 의 처음 length 좌표를 정확히 샘플링 (정상 시작: 처음 m 기호는 π, 이후 순방향 전이)

    Args:
        model: 정규화 모델
        length: 경로 길이 (≥ 1)
        rng: numpy Generator

    Returns:
        (length,) 기호 배열
    """
    if length < 1:
        raise DomainError(f"length 는 1 이상이어야 합니다: {length}")
    sampler = _ChainSampler(model)
    symbols, _ = sampler.prefix(rng, 1, max(length, model.memory))
    return symbols[0, :length]


def empirical_return(model: PotentialModel, n: int, cfg: SimConfig,
                     raw: bool = False):
    """
    R_n = 첫 k ≥ 2 (x_k^{k+n−1} = x₁ⁿ) 의 경험 법칙

    Args:
        raw: True 이면 (EmpiricalLaw, 복제 순서 원시값) 반환

    Returns:
        EmpiricalLaw (t_max 초과는 중도 절단)
    """
    cfg = cfg if cfg.n == n else replace(cfg, n=n)
    values = _simulate(model, cfg, "return")
    law = _law_from(values, cfg.t_max, "R")
    return (law, values) if raw else law


def empirical_hitting(model: PotentialModel, n: int, cfg: SimConfig, raw: bool = False):
    """
    독립 경로 x, y 에 대한 T_{x₁ⁿ}(y) 의 경험 법칙
    """
    cfg = cfg if cfg.n == n else replace(cfg, n=n)
    values = _simulate(model, cfg, "hitting")
    law = _law_from(values, cfg.t_max, "T")
    return (law, values) if raw else law


def empirical_spectrum(law: EmpiricalLaw, n: int, q: float) -> float:
    """(1/n) log mean(X^q) (관측값만, 절단이 있으면 하한/상한 의미)"""
    if law.values.size == 0:
        raise InsufficientSamplesError("관측된 표본이 없습니다")
    x = law.values.astype(float)
    return float(np.log(np.mean(x ** q))) / n


@dataclass(frozen=True)
class ExactComparison:
    """경험 CDF 와 정확 혼합 CDF 의 sup 거리"""
    n: int
    sample_size: int
    sup_distance: float
    dkw_epsilon: float
    alpha: float

    @property
    def within_band(self) -> bool:
        return self.sup_distance <= self.dkw_epsilon


def _exact_mixture_cdf(model: PotentialModel, n: int, t_hi: int) -> np.ndarray:
    """F(t) = Σ_w μ(w) P_w(S+1 ≤ t), t = 1..t_hi"""
    from .return_exact import _Operator, _build_arrays

    def block_fn(block):
        Q, r, D0, log_mu, _ = _build_arrays(model, block, "return")
        op = _Operator(Q)
        weights = np.exp(log_mu)
        x = D0
        pmf = np.zeros(t_hi)
        # S = t ⟺ R = t + 1
        for t in range(1, t_hi):
            pmf[t] = float(np.dot(weights, np.einsum("bs,bs->b", x, r)))
            x = op.left_mul(x)
        return pmf
    parts = map_word_blocks(model.alphabet_size, n, block_fn)
    return np.cumsum(np.sum(parts, axis=0))


def compare_with_exact(model: PotentialModel, n: int, cfg: SimConfig, alpha: float = 0.01) -> ExactComparison:
    """
    경험 R_n 법칙과 return_exact 의 정확 법칙 비교 (정수 t 위 sup 거리)

    Raises:
        BudgetExceededError: Kⁿ 이 예산 초과
    """
    check_budget(model.alphabet_size, n)
    law = empirical_return(model, n, cfg)
    t_hi = int(min(cfg.t_max, law.values.max() if law.values.size else 2))
    exact = _exact_mixture_cdf(model, n, t_hi)
    ts = np.arange(1, t_hi + 1)
    distance = float(np.max(np.abs(law.ecdf(ts) - exact)))
    return ExactComparison(n, law.size, distance, dkw_epsilon(law.size, alpha), alpha)


@dataclass(frozen=True, eq=False)
class ExponentialLawResult:
    """μ(w)·S 의 경험 법칙 대 1 − ζ e^{ζμτ} e^{−ζt}"""
    word: Word
    zeta: float
    tau: int
    mu: float
    ks: float
    ks_exact: float
    censoring_fraction: float
    table: pd.DataFrame


def predicted_exponential_cdf(t: np.ndarray, zeta: float, mu: float, tau: int) -> np.ndarray:
    """t ≥ μτ 에서 1 − ζ e^{ζμτ} e^{−ζt}, 그 아래는 0"""
    t = np.asarray(t, dtype=float)
    values = 1.0 - zeta * np.exp(zeta * (mu * tau - t))
    return np.where(t >= mu * tau, values, 0.0)


def exponential_law_check(model: PotentialModel, w: Word, cfg: SimConfig) -> ExponentialLawResult:
    """
    [w] 에서 출발한 귀환 시프트 S 의 조건부 법칙을 지수 근사와 비교

    ζ 와 μ(w) 는 정확 모듈 값을 씁니다. KS 는 관측된 S 값에서의 sup 차이입니다.

    Raises:
        InsufficientSamplesError: 중도 절단되지 않은 표본이 100 개 미만
    """
    from .return_exact import return_law, zeta

    n = len(w)
    cfg = cfg if cfg.n == n else replace(cfg, n=n)
    z = zeta(model, w)
    mu = float(np.exp(log_measure_block(model, np.asarray(w.symbols)[None, :])[0]))
    raw = _simulate(model, cfg, "return", word=w.symbols)
    # 시작 위치 k ≥ 2 → 시프트 S = k − 1
    law = _law_from(np.where(raw > 0, raw - 1, raw), cfg.t_max, "S")
    uncensored = int(law.values.size)
    if uncensored < MIN_UNCENSORED:
        raise InsufficientSamplesError(
            f"중도 절단되지 않은 표본이 {uncensored}개로 {MIN_UNCENSORED}개 미만입니다"
        )

    support = np.unique(law.values)
    empirical = law.ecdf(support)
    predicted = predicted_exponential_cdf(mu * support, z.zeta, mu, z.tau)
    exact = return_law(model, w).cdf(support)
    ks = float(np.max(np.abs(empirical - predicted)[support >= z.tau]))
    ks_exact = float(np.max(np.abs(empirical - exact)))

    if support.size > MAX_TABLE_ROWS:
        pick = np.unique(np.linspace(0, support.size - 1, MAX_TABLE_ROWS).round().astype(int))
    else:
        pick = np.arange(support.size)
    table = pd.DataFrame({
        "t": mu * support[pick],
        "empirical": empirical[pick],
        "predicted": predicted[pick],
        "exact": exact[pick],
    })
    status(f"📊 지수 법칙 KS = {ks:.4f} (정확 법칙 대비 {ks_exact:.4f})")
    return ExponentialLawResult(w, z.zeta, z.tau, mu, ks, ks_exact, law.censoring_fraction, table)


def law_summary(law: EmpiricalLaw, n: int, entropy_value: float,
                probabilities: Sequence[float] = (0.1, 0.25, 0.5, 0.75, 0.9)) -> pd.DataFrame:
    """
    분위수 요약표 (p, value, log_rate, censored, censoring_fraction, entropy)
    """
    rows: List[dict] = []
    for p in probabilities:
        qv = law.quantile(p)
        rows.append({
            "p": p,
            "value": qv.value,
            "log_rate": math.log(qv.value) / n if math.isfinite(qv.value) else math.inf,
            "censored": qv.censoring_affected,
            "censoring_fraction": law.censoring_fraction,
            "entropy": entropy_value,
        })
    return pd.DataFrame(rows)


def concentration_fraction(law: EmpiricalLaw, n: int, entropy_value: float, width: float = 0.3) -> float:
    """|(1/n) log R_n − h| > width 인 복제 비율 (절단 표본은 벗어난 것으로 셈)"""
    outside = np.sum(np.abs(law.log_rate(n) - entropy_value) > width) + law.censored
    return float(outside) / law.size
