"""
유한 메모리 포텐셜 모델 모듈

포텐셜 φ 를 정규화된 g-함수로 바꾸고, 유도되는 정상 측도 μ_φ 의
실린더 확률을 정확히 계산합니다.

인덱스 규약:
    (m+1)-단어 x₁…x_{m+1} 의 사전순 인덱스 = a·K^m + s  (a = x₁, s = x₂…x_{m+1})
    g(a s) 는 Σ_a g(a s) = 1 로 정규화된 시간 역방향 조건부 확률
    log μ(w) = Σ_k log g(w_k … w_{k+m}) + log π(마지막 m 기호)
"""

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from ..utils.config import ComputeConfig, get_compute_config
from ..utils.errors import ModelSpecError, NumericalError
from ..utils.hash_utils import canonical_json_bytes, compute_model_digest
from .words import Word

MODEL_KINDS = ("transition", "potential")


@dataclass(frozen=True)
class ModelSpec:
    """
    모델 파일의 선언적 기술

    weights 는 (m+1)-단어 사전순의 평탄 배열입니다.
    kind="transition" 이면 P(x₁…x_m → x_{m+1}) (마지막 기호에 대해 행 정규화),
    kind="potential" 이면 자연로그 스케일의 φ 값입니다.
    """
    alphabet_size: int
    memory: int
    kind: str
    weights: Tuple[float, ...]
    normalize: bool = True
    name: str = ""

    def __post_init__(self):
        K, m = self.alphabet_size, self.memory
        if not isinstance(K, int) or K < 2:
            raise ModelSpecError(f"alphabet_size 는 2 이상의 정수여야 합니다: {K!r}")
        if not isinstance(m, int) or m < 0:
            raise ModelSpecError(f"memory 는 0 이상의 정수여야 합니다: {m!r}")
        if self.kind not in MODEL_KINDS:
            raise ModelSpecError(f"kind 는 {MODEL_KINDS} 중 하나여야 합니다: {self.kind!r}")
        expected = K ** (m + 1)
        if len(self.weights) != expected:
            raise ModelSpecError(
                f"weights 길이가 {len(self.weights)} 입니다 (K^(m+1) = {expected} 필요)"
            )
        values = np.asarray(self.weights, dtype=float)
        if not np.all(np.isfinite(values)):
            raise ModelSpecError("weights 에 유한하지 않은 값이 있습니다")
        if self.kind == "transition":
            if np.any(values <= 0.0):
                raise ModelSpecError(
                    "전이 확률은 모두 양수여야 합니다 (0 전이 = 부분 시프트는 지원하지 않음)"
                )
            rows = values.reshape(K ** m, K).sum(axis=1)
            worst = float(np.max(np.abs(rows - 1.0)))
            if worst > get_compute_config().probability_tol:
                raise ModelSpecError(f"전이 확률 행 합이 1 이 아닙니다 (최대 오차 {worst:.3e})")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ModelSpec":
        """
        JSON 딕셔너리에서 ModelSpec 생성

        Raises:
            ModelSpecError: 필드 누락/형식 오류
        """
        if not isinstance(data, dict):
            raise ModelSpecError("모델 파일 최상위는 JSON 객체여야 합니다")
        missing = [k for k in ("alphabet_size", "memory", "kind", "weights") if k not in data]
        if missing:
            raise ModelSpecError(f"모델 파일 필수 필드 누락: {missing}")
        weights = data["weights"]
        if not isinstance(weights, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in weights
        ):
            raise ModelSpecError("weights 는 숫자 배열이어야 합니다")
        kind = data["kind"]
        normalize = data.get("normalize", True)
        if not isinstance(normalize, bool):
            raise ModelSpecError(f"normalize 는 bool 이어야 합니다: {normalize!r}")
        return cls(
            alphabet_size=data["alphabet_size"],
            memory=data["memory"],
            kind=kind,
            weights=tuple(float(v) for v in weights),
            normalize=normalize,
            name=str(data.get("name", "")),
        )

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "alphabet_size": self.alphabet_size,
            "memory": self.memory,
            "kind": self.kind,
            "weights": list(self.weights),
        }
        if self.kind == "potential":
            data["normalize"] = self.normalize
        if self.name:
            data["name"] = self.name
        return data

    @property
    def digest(self) -> str:
        """정규화 JSON 의 FNV-1a 64-bit digest"""
        return compute_model_digest(self.to_dict())

    def dump(self) -> str:
        """키 정렬 정규 JSON 텍스트 (--dump-model 출력, float 는 repr 로 비트 단위 왕복)"""
        return canonical_json_bytes(self.to_dict()).decode("utf-8")


def load_model_spec(path: Union[str, Path]) -> ModelSpec:
    """
    모델 파일(JSON) 읽기

    Args:
        path: 모델 파일 경로

    Returns:
        ModelSpec

    Raises:
        ModelSpecError: 파일 없음, JSON 오류, 필드 오류
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ModelSpecError(f"모델 파일을 읽을 수 없습니다: {path} ({e})") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelSpecError(f"모델 파일 JSON 파싱 실패: {path} ({e})") from e
    spec = ModelSpec.from_dict(data)
    if not spec.name:
        spec = ModelSpec(spec.alphabet_size, spec.memory, spec.kind, spec.weights,
                         spec.normalize, path.stem)
    return spec


@dataclass(frozen=True, eq=False)
class PotentialModel:
    """
    정규화된 유한 메모리 포텐셜과 그 평형 상태

    normalize() 이후 불변이며 스레드 간 공유가 안전합니다.
    memory 는 내부 메모리(≥ 1)이고, m=0 스펙은 m=1 로 올려 저장합니다.
    """
    alphabet_size: int
    memory: int
    raw_phi: np.ndarray
    log_g: np.ndarray
    log_lambda: float
    eigenfunction: np.ndarray
    stationary_pi: np.ndarray
    variations: np.ndarray
    spec: Optional[ModelSpec] = field(default=None)

    @property
    def n_states(self) -> int:
        """m-단어 상태 수 K^m"""
        return self.alphabet_size ** self.memory

    @property
    def g(self) -> np.ndarray:
        return np.exp(self.log_g)

    @property
    def variation_sum(self) -> float:
        """Σ_k var_k(φ)"""
        return float(np.sum(self.variations))

    @property
    def quasi_bernoulli_C(self) -> float:
        return math.exp(self.variation_sum)

    @property
    def quasi_bernoulli_D(self) -> float:
        return self.quasi_bernoulli_C ** 3

    @property
    def zeta_hat_minus(self) -> float:
        """ζ 의 하한 exp(−2Σ var_k) · e^{inf φ}"""
        return math.exp(-2.0 * self.variation_sum + float(np.min(self.log_g)))

    @cached_property
    def log_pi(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.stationary_pi)

    @cached_property
    def forward_transitions(self) -> np.ndarray:
        """
        순방향 전이 P(s → a) = g(s a) π(s₂…s_m a) / π(s)

        Returns:
            (K^m, K) 행 확률 배열
        """
        K, S = self.alphabet_size, self.n_states
        idx = np.arange(S * K)
        P = (self.g * self.stationary_pi[idx % S]).reshape(S, K) / self.stationary_pi[:, None]
        return P / P.sum(axis=1, keepdims=True)

    def log_pi_marginal(self, n: int) -> np.ndarray:
        """길이 n < m 단어의 log μ (π 주변화)"""
        K, m = self.alphabet_size, self.memory
        if n >= m:
            raise ValueError(f"n < m 이어야 합니다: n={n}, m={m}")
        return logsumexp(self.log_pi.reshape(K ** n, K ** (m - n)), axis=1)

    @property
    def is_degenerate(self) -> bool:
        """g ≡ 1/K (최대 엔트로피 측도) 여부"""
        tol = get_compute_config().degenerate_tol
        return bool(np.max(np.abs(self.g - 1.0 / self.alphabet_size)) <= tol)

    @property
    def name(self) -> str:
        return self.spec.name if self.spec is not None else ""


def _lift_memoryless(spec: ModelSpec) -> Tuple[int, np.ndarray]:
    """m=0 스펙을 m=1 테이블로 변환하고 (memory, raw φ) 반환"""
    K = spec.alphabet_size
    values = np.asarray(spec.weights, dtype=float)
    if spec.kind == "transition":
        raw = np.log(values)
    else:
        raw = values
    if spec.memory >= 1:
        return spec.memory, raw
    if spec.kind == "transition":
        # P(b → a) = p_a
        return 1, np.tile(raw, K)
    # φ(a b) = φ(a)
    return 1, np.repeat(raw, K)


def _apply_transfer(weights: np.ndarray, f: np.ndarray, K: int, m: int) -> np.ndarray:
    """(A f)(s) = Σ_a weights(a s) f(a s_{<m})"""
    S = K ** m
    E = weights.reshape(K, S)
    F = f.reshape(K, S // K)
    return np.einsum("as,as->s", E, F[:, np.arange(S) // K])


def perron_root(
    log_weights: np.ndarray,
    alphabet_size: int,
    memory: int,
    config: Optional[ComputeConfig] = None,
) -> Tuple[float, np.ndarray]:
    """
    가중치 e^{log_weights} 전이 연산자의 Perron 고유값과 양의 고유벡터

    Collatz–Wielandt 상하한 (min/max of Af/f) 의 상대 차가 허용 오차 이하가 될
    때까지 거듭제곱 반복합니다.

    Args:
        log_weights: (K^{m+1},) 로그 가중치
        alphabet_size: K
        memory: m (≥ 1)
        config: 계산 설정 (None 이면 전역 설정)

    Returns:
        (log λ, f), f 는 합 1 로 정규화

    Raises:
        NumericalError: 반복 상한 내 수렴 실패
    """
    config = config or get_compute_config()
    K, m = alphabet_size, memory
    shift = float(np.max(log_weights))
    weights = np.exp(log_weights - shift)
    f = np.full(K ** m, 1.0 / K ** m)
    lo = hi = float("nan")
    for _ in range(config.power_max_iter):
        Af = _apply_transfer(weights, f, K, m)
        ratios = Af / f
        lo, hi = float(ratios.min()), float(ratios.max())
        f = Af / Af.sum()
        if hi - lo <= config.power_tol * hi:
            log_lambda = shift + math.log(0.5 * (lo + hi))
            return log_lambda, f
    raise NumericalError(
        f"Perron 거듭제곱 반복이 {config.power_max_iter} 회 내에 수렴하지 않았습니다 "
        f"(Collatz–Wielandt 구간 [{lo:.6e}, {hi:.6e}])"
    )


def _stationary_of_reversed_chain(g: np.ndarray, K: int, m: int, config: ComputeConfig) -> np.ndarray:
    """g-사슬의 정상 분포 π (π(t) = Σ_b π(t₂…t_m b) g(t b))"""
    S = K ** m
    G = g.reshape(S, K)
    t_mod = np.arange(S) % (S // K)
    pi = np.full(S, 1.0 / S)
    for _ in range(config.power_max_iter):
        Pi = pi.reshape(S // K, K)
        new_pi = np.einsum("tb,tb->t", G, Pi[t_mod])
        new_pi /= new_pi.sum()
        if np.max(np.abs(new_pi - pi)) <= config.power_tol * np.max(new_pi):
            return new_pi
        pi = new_pi
    raise NumericalError(f"정상 분포 반복이 {config.power_max_iter} 회 내에 수렴하지 않았습니다")


def _variations(log_g: np.ndarray, K: int, m: int) -> np.ndarray:
    """var_k(φ), k = 1..m (k > m 이면 0)"""
    return np.array([
        float(np.max(np.ptp(log_g.reshape(K ** k, K ** (m + 1 - k)), axis=1)))
        for k in range(1, m + 1)
    ])


def normalize(spec: ModelSpec, config: Optional[ComputeConfig] = None) -> PotentialModel:
    """
    ModelSpec 을 정규화된 PotentialModel 로 변환

    g(a s) = e^{φ(a s)} f(a s_{<m}) / (λ f(s)), 행 합 Σ_a g(a s) = 1 을 검증합니다.

    Args:
        spec: 모델 스펙
        config: 계산 설정

    Returns:
        PotentialModel (압력 0)

    Raises:
        ModelSpecError: 상태 수 초과, normalize=False 인데 정규화되지 않은 φ
        NumericalError: 고유벡터 수렴 실패, 행 합 검증 실패
    """
    config = config or get_compute_config()
    K = spec.alphabet_size
    m, raw_phi = _lift_memoryless(spec)
    S = K ** m
    if S > config.transfer_state_cap:
        raise ModelSpecError(f"K^m = {S} 이 상태 수 상한 {config.transfer_state_cap} 을 초과합니다")

    if spec.kind == "potential" and not spec.normalize:
        row_sums = np.exp(raw_phi).reshape(K, S).sum(axis=0)
        worst = float(np.max(np.abs(row_sums - 1.0)))
        if worst > config.row_sum_tol:
            raise ModelSpecError(f"normalize=false 인데 Σ_a e^φ(a·) ≠ 1 입니다 (최대 오차 {worst:.3e})")

    log_lambda, f = perron_root(raw_phi, K, m, config)
    log_f = np.log(f)
    a_prefix = np.arange(K)[:, None] * (S // K) + (np.arange(S) // K)[None, :]
    log_g = (raw_phi.reshape(K, S) + log_f[a_prefix] - log_lambda - log_f[None, :]).reshape(-1)

    g = np.exp(log_g)
    row_sums = g.reshape(K, S).sum(axis=0)
    worst = float(np.max(np.abs(row_sums - 1.0)))
    if worst > config.row_sum_tol:
        raise NumericalError(f"정규화 후 행 합 검증 실패 (최대 오차 {worst:.3e})")
    log_g = (log_g.reshape(K, S) - np.log(row_sums)[None, :]).reshape(-1)
    g = np.exp(log_g)

    pi = _stationary_of_reversed_chain(g, K, m, config)
    return PotentialModel(
        alphabet_size=K,
        memory=m,
        raw_phi=raw_phi,
        log_g=log_g,
        log_lambda=float(log_lambda),
        eigenfunction=f,
        stationary_pi=pi,
        variations=_variations(log_g, K, m),
        spec=spec,
    )


def load_model(path: Union[str, Path], config: Optional[ComputeConfig] = None) -> PotentialModel:
    """모델 파일을 읽어 정규화된 PotentialModel 반환"""
    return normalize(load_model_spec(path), config)


def tilt(model: PotentialModel, t: float, config: Optional[ComputeConfig] = None) -> PotentialModel:
    """
    포텐셜 t·φ 의 평형 상태 (φ 는 모델의 정규화 포텐셜)

    반환 모델의 log_lambda 가 P(tφ) 입니다.
    """
    if not math.isfinite(t):
        raise ModelSpecError(f"tilt 인자는 유한해야 합니다: {t}")
    spec = ModelSpec(
        alphabet_size=model.alphabet_size,
        memory=model.memory,
        kind="potential",
        weights=tuple(float(v) for v in t * model.log_g),
        normalize=True,
        name=f"{model.name}@t={t:g}" if model.name else "",
    )
    return normalize(spec, config)


def window_indices(block: np.ndarray, K: int, m: int) -> np.ndarray:
    """
    단어 배열의 (m+1)-창 사전순 인덱스

    Args:
        block: (B, n) 기호 배열 (n ≥ m+1)

    Returns:
        (B, n − m) int64 배열
    """
    block = block.astype(np.int64, copy=False)
    n = block.shape[1]
    count = n - m
    idx = np.zeros((block.shape[0], count), dtype=np.int64)
    for i in range(m + 1):
        idx = idx * K + block[:, i:i + count]
    return idx


def suffix_indices(block: np.ndarray, K: int, m: int) -> np.ndarray:
    """마지막 m 기호의 사전순 인덱스 (B,)"""
    block = block.astype(np.int64, copy=False)
    idx = np.zeros(block.shape[0], dtype=np.int64)
    for i in range(block.shape[1] - m, block.shape[1]):
        idx = idx * K + block[:, i]
    return idx


def log_measure_block(model: PotentialModel, block: np.ndarray) -> np.ndarray:
    """
    단어 배열의 log μ(w) 벡터화 계산

    Args:
        model: 정규화 모델
        block: (B, n) 기호 배열

    Returns:
        (B,) 로그 확률
    """
    K, m = model.alphabet_size, model.memory
    n = block.shape[1]
    if n < m:
        marginal = model.log_pi_marginal(n)
        return marginal[suffix_indices(block, K, n)]
    result = model.log_pi[suffix_indices(block, K, m)]
    if n > m:
        windows = window_indices(block[:, :n], K, m)
        result = result + model.log_g[windows].sum(axis=1)
    return result


def cylinder_measure(model: PotentialModel, w: Union[Word, Sequence[int]]) -> float:
    """
    실린더 확률 log μ([w]) (정확값)

    Args:
        model: 정규화 모델
        w: 단어

    Returns:
        log μ(w)
    """
    symbols = w.symbols if isinstance(w, Word) else tuple(w)
    block = np.asarray(symbols, dtype=np.int64)[None, :]
    return float(log_measure_block(model, block)[0])


def cylinder_stationary_weights(model: PotentialModel) -> np.ndarray:
    """(m+1)-단어의 정상 확률 μ(x) = g(x) π(x₂…x_{m+1})"""
    S = model.n_states
    return model.g * model.stationary_pi[np.arange(S * model.alphabet_size) % S]


def phi_mean(model: PotentialModel, phi: Optional[np.ndarray] = None) -> float:
    """
    ∫ φ dμ (모델 자신의 정상 사슬 기준)

    Args:
        model: 정규화 모델 (적분 측도)
        phi: (m+1)-단어 포텐셜 테이블 (None 이면 모델의 log g → −h)

    Returns:
        기대값
    """
    values = model.log_g if phi is None else np.asarray(phi, dtype=float)
    return float(np.dot(cylinder_stationary_weights(model), values))


def birkhoff_block(model: PotentialModel, block: np.ndarray, extension: Sequence[int]) -> np.ndarray:
    """
    점 확장 x = w·extension 에서 Σ_{k=1}^{n} φ(x_k^∞) (φ = log g)

    Args:
        block: (B, n) 단어 배열
        extension: 길이 m 이상의 확장 기호

    Returns:
        (B,) 합
    """
    K, m = model.alphabet_size, model.memory
    ext = np.broadcast_to(np.asarray(extension[:m], dtype=np.int64), (block.shape[0], m))
    full = np.concatenate([block.astype(np.int64), ext], axis=1)
    return model.log_g[window_indices(full, K, m)].sum(axis=1)


def cylinder_control_bound(model: PotentialModel, n: int) -> float:
    """n·ε_n = Σ_{k=1}^{n} var_k(φ)"""
    return float(np.sum(model.variations[:n]))


@dataclass
class QuasiBernoulliReport:
    """연결 비율 μ(ab)/(μ(a)μ(b)) 표본 요약"""
    samples: int
    max_ratio: float
    min_ratio: float
    D: float

    @property
    def passed(self) -> bool:
        slack = 1e-12
        return self.max_ratio <= self.D * (1 + slack) and self.min_ratio >= (1 - slack) / self.D

    @property
    def max_deviation(self) -> float:
        """max |log ratio|"""
        return max(abs(math.log(self.max_ratio)), abs(math.log(self.min_ratio)))


def concatenation_log_ratio(model: PotentialModel, a: Sequence[int], b: Sequence[int]) -> float:
    """log μ(ab) − log μ(a) − log μ(b)"""
    a, b = tuple(a), tuple(b)
    return cylinder_measure(model, a + b) - cylinder_measure(model, a) - cylinder_measure(model, b)


def quasi_bernoulli_check(
    model: PotentialModel,
    samples: int = 2000,
    seed: int = 0,
    max_length: int = 20,
) -> QuasiBernoulliReport:
    """
    무작위 단어 쌍의 연결 비율이 [1/D, D] 안에 있는지 표본 검사

    Args:
        model: 정규화 모델
        samples: 쌍 개수
        seed: 난수 시드
        max_length: 단어 최대 길이

    Returns:
        QuasiBernoulliReport
    """
    rng = np.random.Generator(np.random.Philox(seed))
    K = model.alphabet_size
    lo, hi = math.inf, -math.inf
    for _ in range(samples):
        la, lb = rng.integers(1, max_length + 1, size=2)
        a = rng.integers(0, K, size=la)
        b = rng.integers(0, K, size=lb)
        value = concatenation_log_ratio(model, a, b)
        lo, hi = min(lo, value), max(hi, value)
    return QuasiBernoulliReport(samples, math.exp(hi), math.exp(lo), model.quasi_bernoulli_D)
