"""
정확한 귀환/도달 시간 법칙 모듈

단어 일치 오토마톤 (KMP 실패 함수) 과 m-단어 마르코프 상태를 결합한
부분확률 사슬로 첫 귀환 시프트 S 의 법칙을 정확히 다룹니다.

    귀환 모드 : [w] 에서 출발, S = inf{j ≥ 1: θ^j x ∈ [w]},  R_n = S + 1
    도달 모드 : 정상 분포에서 출발, T = w 가 처음 나타나는 위치 (T ≥ 1)

모멘트는 생성함수 G(z) = E[z^S] 를 z = e^{−u} 에서 풀고
    E[S^{−p}]   = (1/Γ(p)) ∫ u^{p−1} G(e^{−u}) du
    E[S^{k+r}]  = (r/Γ(1−r)) ∫ u^{−r−1} E[S^k (1 − e^{−uS})] du
를 v = log u 에 대한 사다리꼴 규칙 (지수 수렴) 으로 적분합니다.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu
from scipy.special import comb, gamma as gamma_fn, logsumexp

from ..utils.config import ComputeConfig, get_compute_config, status
from ..utils.errors import BudgetExceededError, DomainError, NumericalError
from .gamma_bounds import upper_incomplete_gamma
from .model import PotentialModel, log_measure_block
from .spectra import gamma_plus, m_spectrum
from .words import Word, check_budget, failure_function, kmp_transitions, map_word_blocks, tau_block

MODES = ("return", "hitting")
DENSE_STATE_CAP = 2048
NODE_STEP = 0.25  # v = log u 간격 상한
SERIES_TERMS = 6  # 작은 u 에서 모멘트 급수 항 수
DECAY_DIGITS = 41.5  # 꼬리 절단 기준 (e^{-41.5} ≈ 1e-18)
MAX_EXTENSION_NODES = 20000
MOMENT_REL_TOL = 1e-12  # 직접 합 나머지의 상대 허용치
MAX_MOMENT_STEPS = 1_000_000
EPS = np.finfo(float).eps


def _word_index(block: np.ndarray, K: int) -> np.ndarray:
    idx = np.zeros(block.shape[0], dtype=np.int64)
    for i in range(block.shape[1]):
        idx = idx * K + block[:, i].astype(np.int64)
    return idx


def _layout(n: int, K: int, m: int) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    축약 상태 배치

    일치 길이 j ≥ m 이면 마지막 m 기호가 w[j−m:j] 로 정해지므로 상태 1 개,
    j < m 이면 끝이 w[:j] 인 m-단어 K^{m−j} 개.
    """
    counts = np.array([K ** (m - j) if j < m else 1 for j in range(n)], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(counts)])
    return counts, offsets, int(offsets[-1])


def automaton_state_count(n: int, K: int, m: int) -> int:
    """단어 길이 n 의 축약 오토마톤 상태 수"""
    return _layout(n, K, m)[2]


class _Operator:
    """부분확률 전이 연산자 Q: (B, S, S) 밀집 배치 또는 단일 희소 행렬"""

    def __init__(self, Q: Union[np.ndarray, sp.csr_matrix]):
        self.Q = Q
        self.sparse = sp.issparse(Q)
        self.size = Q.shape[-1]

    def left_mul(self, x: np.ndarray) -> np.ndarray:
        """x Q (x: (B, S))"""
        if self.sparse:
            return np.asarray(self.Q.T @ x[0])[None, :]
        return np.einsum("bs,bst->bt", x, self.Q)

    def resolvent(self, z: np.ndarray):
        """rhs ↦ rhs (I − zQ)^{-1} 함수 반환"""
        if self.sparse:
            A = (sp.identity(self.size, format="csc") - float(z[0]) * self.Q).tocsc()
            lu = splu(A)
            return lambda rhs: lu.solve(np.ascontiguousarray(rhs[0]), trans="T")[None, :]
        A = np.eye(self.size)[None, :, :] - z[:, None, None] * self.Q
        inv = np.linalg.inv(A)
        return lambda rhs: np.einsum("bs,bst->bt", rhs, inv)


def _build_arrays(model: PotentialModel, block: np.ndarray, mode: str, sparse: bool = False):
    """
    단어 배열 → (Q, r, D0, log μ, τ)

    Returns:
        Q: (B, S, S) 또는 csr (B = 1), r: (B, S) 한 단계 흡수 확률,
        D0: (B, S) 초기 분포, log_mu: (B,), tau: (B,)
    """
    if mode not in MODES:
        raise DomainError(f"mode 는 {MODES} 중 하나여야 합니다: {mode!r}")
    block = np.asarray(block, dtype=np.int64)
    B, n = block.shape
    K, m, Sm = model.alphabet_size, model.memory, model.n_states
    counts, offsets, S = _layout(n, K, m)

    state_j = np.repeat(np.arange(n), counts)
    state_s = np.empty((B, S), dtype=np.int64)
    for j in range(n):
        lo, hi = offsets[j], offsets[j + 1]
        if j >= m:
            state_s[:, lo] = _word_index(block[:, j - m:j], K)
        else:
            v = np.arange(K ** (m - j), dtype=np.int64)
            state_s[:, lo:hi] = v[None, :] * K ** j + _word_index(block[:, :j], K)[:, None]

    delta = np.stack([kmp_transitions(row, K) for row in block])
    P = model.forward_transitions
    r = np.zeros((B, S))
    rows_all, cols_all, vals_all, batch_all = [], [], [], []
    for a in range(K):
        p = P[state_s, a]
        jn = delta[:, state_j, a]
        sn = (state_s * K + a) % Sm
        absorbed = jn == n
        r += np.where(absorbed, p, 0.0)
        jn_c = np.minimum(jn, n - 1)
        target = offsets[jn_c] + np.where(jn_c < m, sn // K ** np.minimum(jn_c, m), 0)
        keep = ~absorbed
        b_idx, s_idx = np.nonzero(keep)
        batch_all.append(b_idx)
        rows_all.append(s_idx)
        cols_all.append(target[keep])
        vals_all.append(p[keep])
    b_idx = np.concatenate(batch_all)
    rows = np.concatenate(rows_all)
    cols = np.concatenate(cols_all)
    vals = np.concatenate(vals_all)
    if sparse:
        Q = sp.coo_matrix((vals, (rows, cols)), shape=(S, S)).tocsr()
    else:
        Q = np.zeros((B, S, S))
        np.add.at(Q, (b_idx, rows, cols), vals)

    tau = tau_block(block)
    log_mu = log_measure_block(model, block)
    D0 = np.zeros((B, S))
    bidx = np.arange(B)
    if mode == "return":
        j0 = n - tau
        if n >= m:
            s0 = _word_index(block[:, n - m:], K)
            state = offsets[j0] + np.where(j0 < m, s0 // K ** np.minimum(j0, m), 0)
            D0[bidx, state] = 1.0
        else:
            tail = _word_index(block, K)
            for v in range(K ** (m - n)):
                s = v * K ** n + tail
                state = offsets[j0] + s // K ** j0
                D0[bidx, state] += model.stationary_pi[s]
            D0 /= D0.sum(axis=1, keepdims=True)
    else:
        D0[:, offsets[0] + np.arange(Sm)] = model.stationary_pi[None, :]
        op = _Operator(Q)
        for _ in range(n - 1):
            D0 = op.left_mul(D0)
    return Q, r, D0, log_mu, tau


def _binomial_shift(moments: np.ndarray, shift: int) -> np.ndarray:
    """E[S^j] → E[(S+shift)^j] (마지막 축이 차수)"""
    if shift == 0:
        return moments
    J = moments.shape[-1]
    out = np.zeros_like(moments)
    for j in range(J):
        for i in range(j + 1):
            out[..., j] += comb(j, i, exact=True) * shift ** (j - i) * moments[..., i]
    return out


def _transforms(op: _Operator, D0: np.ndarray, r: np.ndarray, z: np.ndarray, order: int):
    """
    z 에서 G(z) = E[z^S], H(z) = Σ_t z^t P(S > t), E[S^i z^S] (i ≤ order)

    Z^{(i)}(I − zQ) = z D0 + z Σ_{j<i} C(i,j) Z^{(j)} Q,  E[S^i z^S] = Z^{(i)} r
    """
    solve = op.resolvent(z)
    x = solve(D0)
    H = x.sum(axis=1)
    Z = [z[:, None] * x]
    E = [np.einsum("bs,bs->b", Z[0], r)]
    for i in range(1, order + 1):
        acc = sum(comb(i, j, exact=True) * Z[j] for j in range(i))
        Z.append(solve(z[:, None] * (D0 + op.left_mul(acc))))
        E.append(np.einsum("bs,bs->b", Z[i], r))
    return E[0], H, np.stack(E, axis=1)


@dataclass
class _Quadrature:
    """배치 모멘트 적분용 사전 계산 테이블 (q 와 무관)"""
    shift: int
    int_moments: np.ndarray  # (B, J+2), X = S + shift
    s_min: np.ndarray  # (B,) X 의 최소 가능값
    v_lo: np.ndarray  # (B,)
    h: np.ndarray  # (B,)
    G: np.ndarray  # (B, N)  E[z^X]
    H: np.ndarray  # (B, N)  (1 − G)/(1 − z)
    E: np.ndarray  # (B, N, k+1)  E[X^i z^X]


def _prepare(op: _Operator, D0: np.ndarray, r: np.ndarray, support_min: np.ndarray,
             qs: Sequence[float], shift: int) -> _Quadrature:
    B = D0.shape[0]
    positive = [q for q in qs if q > 0]
    k_max = max([int(math.floor(q)) for q in positive], default=0)
    k_table = max([int(math.floor(q)) for q in positive if not float(q).is_integer()], default=0)
    J = k_max + SERIES_TERMS

    ones = np.ones(B)
    _, _, ES = _transforms(op, D0, r, ones, J + 1)
    EX = _binomial_shift(ES, shift)
    mean = EX[:, 1]
    if not np.all(np.isfinite(mean)) or np.any(mean <= 0):
        raise NumericalError("평균 귀환 시간이 유한한 양수가 아닙니다 (특이한 부분확률 연산자)")

    p_max = max([abs(q) for q in qs if q < 0] + [1.0])
    s_min = np.asarray(support_min, dtype=float) + shift
    U = 45.0 / s_min
    for _ in range(4):
        U = (45.0 + p_max * np.maximum(0.0, np.log(U * mean))) / s_min
    u_lo = 1e-4 / mean
    v_lo, v_hi = np.log(u_lo), np.log(U)
    N = int(np.ceil(np.max(v_hi - v_lo) / NODE_STEP)) + 1
    h = (v_hi - v_lo) / (N - 1)

    G = np.empty((B, N))
    Hs = np.empty((B, N))
    E = np.empty((B, N, k_table + 1))
    for i in range(N):
        u = np.exp(v_lo + i * h)
        z = np.exp(-u)
        g_s, h_s, e_s = _transforms(op, D0, r, z, k_table)
        if shift == 0:
            G[:, i], Hs[:, i], E[:, i, :] = g_s, h_s, e_s
        else:
            G[:, i] = z * g_s
            Hs[:, i] = 1.0 + z * h_s
            E[:, i, :] = z[:, None] * _binomial_shift(e_s, 1)
    return _Quadrature(shift, EX, s_min, v_lo, h, G, Hs, E)


def _strip_factor(q: float, h: np.ndarray) -> np.ndarray:
    """
    무한 사다리꼴 합의 상대 이산화 오차 상한 (B,)

    피적분 함수는 |Im v| < π/2 띠에서 해석적이므로 |I_h − I| ≤ 2M/(e^{2πd/h} − 1).
    q < 0: M ≤ Γ(p)E[X^{−p}]/cos(d)^p (d 를 격자 위에서 최소화),
    q > 0: M ≤ E[X^q]·2^{1−r}/(r(1−r)) (d → π/2).
    """
    if q < 0:
        d = np.linspace(0.05, 0.5 * math.pi - 1e-3, 256)
        log_bound = (math.log(2.0) - (-q) * np.log(np.cos(d))[None, :]
                     - np.log(np.expm1(2.0 * math.pi * d[None, :] / h[:, None])))
        return np.exp(np.min(log_bound, axis=1))
    rr = q - math.floor(q)
    return 2.0 ** (2.0 - rr) / gamma_fn(2.0 - rr) / np.expm1(math.pi ** 2 / h)


def _moment_from_table(tab: _Quadrature, q: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    테이블에서 E[X^q] 와 오차 상한

    오차 = 이산화 (띠 해석성) + 노드 범위 밖 절단 + 급수/상수로 대체한 노드의 근사 오차
    + 부동소수 반올림 (항 크기 합에 비례)

    Returns:
        (값 (B,), 오차 (B,))
    """
    B, N = tab.G.shape
    EX = tab.int_moments
    J = EX.shape[1] - 2  # 급수 차수, EX[:, J+1] 은 나머지 상한용
    if q == 0.0:
        return np.ones(B), np.zeros(B)
    if q > 0 and float(q).is_integer():
        value = EX[:, int(q)]
        return value, 64.0 * EPS * (q + 1.0) * value

    fact = np.array([math.factorial(j) for j in range(J + 2)], dtype=float)
    h = tab.h
    s_min = tab.s_min
    if q < 0:
        p = -q
        L = int(min(MAX_EXTENSION_NODES, math.ceil(DECAY_DIGITS / (p * float(np.min(h))))))
        R = 0
    else:
        k = int(math.floor(q))
        rr = q - k
        L = int(min(MAX_EXTENSION_NODES, math.ceil(DECAY_DIGITS / ((1.0 - rr) * float(np.min(h))))))
        R = int(min(MAX_EXTENSION_NODES, math.ceil(DECAY_DIGITS / (rr * float(np.min(h))))))

    index = np.arange(-L, N + R)
    v = tab.v_lo[:, None] + index[None, :] * h[:, None]
    u = np.exp(v)
    left = index < 0
    mid = (index >= 0) & (index < N)
    right = index >= N
    ul = u[:, left]
    v_first = v[:, 0]
    v_next = tab.v_lo + (N + R) * h

    if q < 0:
        series = np.zeros_like(ul)
        for j in range(J + 1):
            series += (-ul) ** j * (EX[:, j] / fact[j])[:, None]
        body = np.empty_like(u)
        body[:, left] = series
        body[:, mid] = tab.G
        f = u ** p * body
        magnitude = np.abs(f)
        scale = 1.0 / gamma_fn(p)
        # |e^{−y} − Σ_{j≤J} (−y)^j/j!| ≤ y^{J+1}/(J+1)!
        node_error = (ul ** (p + J + 1) * (EX[:, J + 1] / fact[J + 1])[:, None]).sum(axis=1)
        # v < v_first: G ≤ 1
        left_cut = np.exp(p * (v_first - h)) / -np.expm1(-p * h)
        # v ≥ v_next: G(e^{−u}) ≤ e^{−u s_min}, 항 비율 θ 가 1 미만이면 기하 급수
        u_next = np.exp(v_next)
        theta = np.exp(p * h - s_min * u_next * np.expm1(h))
        head = np.exp(p * v_next - s_min * u_next)
        right_cut = np.where(theta < 1.0, head / (1.0 - np.minimum(theta, 1.0 - EPS)), np.inf)
    else:
        series = np.zeros_like(ul)
        for j in range(1, J - k + 1):
            series += (-1.0) ** (j + 1) * ul ** j * (EX[:, k + j] / fact[j])[:, None]
        body = np.empty_like(u)
        body[:, left] = series
        ur = u[:, right]
        if k == 0:
            body[:, mid] = -np.expm1(-u[:, mid]) * tab.H
            body[:, right] = 1.0
            mid_magnitude = np.abs(body[:, mid])
        else:
            body[:, mid] = EX[:, k][:, None] - tab.E[:, :, k]
            body[:, right] = EX[:, k][:, None]
            mid_magnitude = EX[:, k][:, None] + np.abs(tab.E[:, :, k])
        f = u ** (-rr) * body
        magnitude = np.abs(f)
        magnitude[:, mid] = u[:, mid] ** (-rr) * mid_magnitude
        scale = rr / gamma_fn(1.0 - rr)
        # |1 − e^{−y} − Σ_{1≤j≤J−k} (−1)^{j+1} y^j/j!| ≤ y^{J−k+1}/(J−k+1)!
        order = J - k + 1
        node_error = (ul ** (order - rr) * (EX[:, J + 1] / fact[order])[:, None]).sum(axis=1)
        # 오른쪽 노드는 E[X^k e^{−uX}] 를 버림: x ≥ s_min 에서 x^k e^{−ux} 의 최댓값
        s_col = s_min[:, None]
        peak = np.where(ur * s_col >= k, k * np.log(s_col) - ur * s_col,
                        k * (np.log(k / ur) - 1.0) if k > 0 else -ur * s_col)
        node_error = node_error + (ur ** (-rr) * np.exp(peak)).sum(axis=1)
        # v < v_first: 1 − e^{−uX} ≤ uX,  v ≥ v_next: 본문 ≤ E[X^k]
        left_cut = EX[:, k + 1] * np.exp((1.0 - rr) * (v_first - h)) / -np.expm1(-(1.0 - rr) * h)
        right_cut = EX[:, k] * np.exp(-rr * v_next) / -np.expm1(-rr * h)

    total = h * f.sum(axis=1)
    value = scale * total
    if np.any(value <= 0) or not np.all(np.isfinite(value)):
        raise NumericalError(f"E[X^{q}] 적분 결과가 양의 유한값이 아닙니다")
    strip = _strip_factor(q, h)
    discretization = np.where(strip < 1.0, value * strip / (1.0 - np.minimum(strip, 1.0 - EPS)), np.inf)
    approximation = scale * h * (node_error + left_cut + right_cut)
    rounding = 64.0 * EPS * scale * h * magnitude.sum(axis=1)
    return value, discretization + approximation + rounding


def _remainder_bound(q: float, start: int, mass: float, c_tail: float, rho_tail: float) -> float:
    """
    Σ_{s≥0} (start + s)^q p_{T+1+s} 의 상한 (mass = P(S > T))

    q ≤ 0 이면 (start)^q · mass, q > 0 이면 p_{T+1+s} ≤ mass · c_tail · ρ_tail^s 와
    항 비율 (1 + 1/start)^q ρ_tail < 1 인 기하 급수. 비율이 1 이상이면 +∞.
    """
    if mass <= 0.0:
        return 0.0
    if q <= 0.0:
        return start ** q * mass
    ratio = (1.0 + 1.0 / start) ** q * rho_tail
    if ratio >= 1.0:
        return math.inf
    return mass * c_tail * start ** q / (1.0 - ratio)


@dataclass(frozen=True)
class MomentValue:
    """E[S^q] 와 E[(S+1)^q] (인증 오차 포함)"""
    q: float
    s_moment: float
    s_error: float
    r_moment: float
    r_error: float
    t_max: int = 0  # 직접 합 단계 수 (0: 생성함수 적분)


@dataclass(frozen=True)
class ExactSpectrumValue:
    n: int
    q: float
    value: float
    certified_error: float


@dataclass(frozen=True)
class ZetaValue:
    word: Word
    zeta: float
    tau: int


@dataclass(eq=False)
class ReturnLaw:
    """
    단어 w 의 정확한 첫 귀환 시프트 (또는 도달 시간) 법칙

    P(S = t) = D0 Q^{t−1} r,  P(S > t) = D0 Q^t 1
    """
    word: Word
    mode: str
    Q: Union[np.ndarray, sp.csr_matrix]
    r: np.ndarray
    initial: np.ndarray
    log_mu: float
    tau: int
    _tail: Optional[Tuple[float, float]] = field(default=None, init=False, repr=False)

    @property
    def n_states(self) -> int:
        return self.Q.shape[-1]

    @property
    def mu(self) -> float:
        return math.exp(self.log_mu)

    @property
    def support_min(self) -> int:
        """S 의 최소 가능값 (귀환 τ, 도달 1)"""
        return self.tau if self.mode == "return" else 1

    def _operator(self) -> _Operator:
        return _Operator(self.Q if sp.issparse(self.Q) else self.Q[None, :, :])

    def pmf(self, t_max: int) -> np.ndarray:
        """P(S = t), t = 1..t_max"""
        op = self._operator()
        x = self.initial[None, :]
        out = np.empty(t_max)
        for t in range(t_max):
            out[t] = float(x[0] @ self.r)
            x = op.left_mul(x)
        return out

    def cdf(self, ts: Sequence[int]) -> np.ndarray:
        """P(S ≤ t) (흡수 질량 누적, 뺄셈 없음)"""
        ts = np.asarray(ts, dtype=np.int64)
        if ts.size == 0:
            return np.zeros(0)
        probs = np.cumsum(self.pmf(int(max(1, ts.max()))))
        return np.where(ts >= 1, probs[np.clip(ts, 1, None) - 1], 0.0)

    def tail_bound(self) -> Tuple[float, float]:
        """
        P(S > t) ≤ c_tail · ρ_tail^t 인 (c_tail, ρ_tail)

        κ = ‖Q^L‖_∞ (L = max(4·상태 수, n) 에서 시작해 κ ≤ 1/2 까지 제곱),
        ρ = κ^{1/L}, c = 1/κ.

        Raises:
            NumericalError: κ < 1 을 얻지 못함
        """
        if self._tail is not None:
            return self._tail
        L = max(4 * self.n_states, len(self.word))
        y = np.ones(self.n_states)
        for _ in range(L):
            y = np.asarray(self.Q @ y).reshape(-1)
        kappa = float(np.max(y))
        doublings = 0
        while kappa > 0.5 and doublings < 60:
            # ‖Q^{2L}‖ ≤ ‖Q^L‖², 상한만 필요
            kappa = kappa * kappa
            L *= 2
            doublings += 1
        if not kappa < 1.0:
            raise NumericalError(f"꼬리 인증 실패: ‖Q^{L}‖ = {kappa} (ρ_tail ≥ 1)")
        self._tail = (1.0 / kappa, kappa ** (1.0 / L))
        return self._tail

    def horizon(self, rel_tol: float = 1e-12) -> int:
        """c_tail · ρ_tail^t < rel_tol 인 최소 t (pmf 절단 길이)"""
        c, rho = self.tail_bound()
        return max(self.support_min, int(math.ceil(math.log(rel_tol / c) / math.log(rho))))

    def _stepped_moments(self, q: float) -> Optional[Tuple[float, float, float, float, int]]:
        """
        P(S = t) 를 t_max 까지 직접 더하고 나머지를 꼬리 상한으로 인증

        T 단계 뒤 흡수되지 않은 질량 m_T 에 대해 P(S > T + s) ≤ m_T · c_tail · ρ_tail^s.
        t_max 는 horizon() 에서 시작해 두 나머지가 부분합의 MOMENT_REL_TOL 이하가 될 때까지 두 배.

        Returns:
            (E[S^q], 오차, E[(S+1)^q], 오차, t_max), 단계 상한 안에 수렴하지 않으면 None
        """
        c_tail, rho_tail = self.tail_bound()
        target = min(self.horizon(MOMENT_REL_TOL), MAX_MOMENT_STEPS)
        op = self._operator()
        x = self.initial[None, :]
        s_sum = r_sum = 0.0
        t = 0
        while True:
            while t < target:
                t += 1
                p = float(x[0] @ self.r)
                s_sum += t ** q * p
                r_sum += (t + 1) ** q * p
                x = op.left_mul(x)
            mass = float(x.sum())
            s_rest = _remainder_bound(q, t + 1, mass, c_tail, rho_tail)
            r_rest = _remainder_bound(q, t + 2, mass, c_tail, rho_tail)
            if s_rest <= MOMENT_REL_TOL * s_sum and r_rest <= MOMENT_REL_TOL * r_sum:
                break
            if target >= MAX_MOMENT_STEPS:
                return None
            target = min(2 * target, MAX_MOMENT_STEPS)
        rounding = EPS * (t + 1) * (self.n_states + 2)
        return s_sum, s_rest + rounding * s_sum, r_sum, r_rest + rounding * r_sum, t

    def moment(self, q: float) -> MomentValue:
        """
        E[S^q], E[(S+1)^q] 와 인증 오차

        t_max 단계 직접 합 + 꼬리 상한 나머지로 계산하고, t_max 가 MAX_MOMENT_STEPS 를
        넘는 긴 법칙은 생성함수 적분으로 대신합니다 (t_max = 0 으로 표시).

        Args:
            q: 실수 지수
        """
        q = float(q)
        if q == 0.0:
            return MomentValue(q, 1.0, 0.0, 1.0, 0.0, 0)
        stepped = self._stepped_moments(q)
        if stepped is not None:
            return MomentValue(q, *stepped)
        status(f"⚠️ {self.word}: t_max > {MAX_MOMENT_STEPS}, 생성함수 적분으로 E[S^{q:g}] 계산")
        op = self._operator()
        D0 = self.initial[None, :]
        r = self.r[None, :]
        smin = np.array([self.support_min])
        s_val, s_err = _moment_from_table(_prepare(op, D0, r, smin, [q], 0), q)
        r_val, r_err = _moment_from_table(_prepare(op, D0, r, smin, [q], 1), q)
        return MomentValue(q, float(s_val[0]), float(s_err[0]), float(r_val[0]), float(r_err[0]), 0)

    def zeta_from_law(self) -> float:
        """1 − P_w(S = τ(w))"""
        return 1.0 - float(self.pmf(self.tau)[self.tau - 1])


def return_law(model: PotentialModel, w: Word, mode: str = "return",
               config: Optional[ComputeConfig] = None) -> ReturnLaw:
    """
    단어 w 의 정확한 귀환 (mode="return") / 도달 (mode="hitting") 법칙

    Raises:
        BudgetExceededError: (n+1)·K^m 이 상태 예산 초과
    """
    config = config or get_compute_config()
    K, m = model.alphabet_size, model.memory
    n = len(w)
    if w.alphabet_size != K:
        raise DomainError(f"단어 알파벳 크기 {w.alphabet_size} ≠ 모델 {K}")
    nominal = (n + 1) * K ** m
    if nominal > config.state_budget:
        raise BudgetExceededError(f"오토마톤 상태 수 (n+1)·K^m = {nominal} > {config.state_budget}")
    block = np.asarray(w.symbols, dtype=np.int64)[None, :]
    sparse = automaton_state_count(n, K, m) > DENSE_STATE_CAP
    Q, r, D0, log_mu, tau = _build_arrays(model, block, mode, sparse=sparse)
    return ReturnLaw(
        word=w,
        mode=mode,
        Q=Q if sparse else Q[0],
        r=r[0],
        initial=D0[0],
        log_mu=float(log_mu[0]),
        tau=int(tau[0]),
    )


def moment(law: ReturnLaw, q: float) -> MomentValue:
    """law.moment(q) 함수형 별칭"""
    return law.moment(q)


def _spectrum_block_sums(model: PotentialModel, block: np.ndarray, qs: Sequence[float],
                         mode: str, shift: int):
    Q, r, D0, log_mu, tau = _build_arrays(model, block, mode)
    op = _Operator(Q)
    smin = tau if mode == "return" else np.ones_like(tau)
    tab = _prepare(op, D0, r, smin, qs, shift)
    log_sums, err_sums = [], []
    for q in qs:
        value, error = _moment_from_table(tab, q)
        log_terms = log_mu + np.log(value)
        log_sums.append(float(logsumexp(log_terms)))
        err_sums.append(float(np.sum(np.exp(log_mu) * error)))
    return np.array(log_sums), np.array(err_sums)


def _exact_spectra(model: PotentialModel, n: int, qs: Sequence[float], mode: str, shift: int,
                   budget: Optional[int]) -> List[ExactSpectrumValue]:
    qs = [float(q) for q in qs]
    parts = map_word_blocks(
        model.alphabet_size, n,
        lambda block: _spectrum_block_sums(model, block, qs, mode, shift),
        budget,
    )
    log_parts = np.stack([p[0] for p in parts])
    err_parts = np.stack([p[1] for p in parts])
    out = []
    for i, q in enumerate(qs):
        if q == 0.0:
            out.append(ExactSpectrumValue(n, q, 0.0, 0.0))
            continue
        log_total = float(logsumexp(log_parts[:, i]))
        rel = float(np.sum(err_parts[:, i])) / math.exp(log_total) if log_total < 700 else float(
            np.sum(err_parts[:, i]) * math.exp(-log_total))
        out.append(ExactSpectrumValue(n, q, log_total / n, rel / n))
    return out


def exact_return_spectra(model: PotentialModel, n: int, qs: Sequence[float],
                         variable: str = "R", budget: Optional[int] = None) -> List[ExactSpectrumValue]:
    """
    (1/n) log Σ_w μ(w) E_w[X^q] (X = R_n = S+1 또는 S) 를 여러 q 에 대해 한 번에

    Args:
        model: 정규화 모델
        n: 단어 길이
        qs: 지수 목록
        variable: "R" (R_n = S + 1) 또는 "S"
        budget: 열거 예산
    """
    if variable not in ("R", "S"):
        raise DomainError(f"variable 은 'R' 또는 'S' 여야 합니다: {variable!r}")
    return _exact_spectra(model, n, qs, "return", 1 if variable == "R" else 0, budget)


def exact_return_spectrum(model: PotentialModel, n: int, q: float,
                          budget: Optional[int] = None) -> ExactSpectrumValue:
    """(1/n) log ∫ R_n^q dμ (정확값, 인증 오차 포함)"""
    return exact_return_spectra(model, n, [q], "R", budget)[0]


def exact_hitting_spectrum(model: PotentialModel, n: int, q: float,
                           budget: Optional[int] = None) -> ExactSpectrumValue:
    """(1/n) log Σ_x μ(x) E[T_x^q] (y 는 독립 정상 경로)"""
    return _exact_spectra(model, n, [float(q)], "hitting", 0, budget)[0]


def zeta_block(model: PotentialModel, block: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    단어 배열의 ζ = 1 − μ(a₁^τ w)/μ(w) (로그 공간)

    Returns:
        (ζ (B,), τ (B,))
    """
    block = np.asarray(block)
    tau = tau_block(block)
    log_mu = log_measure_block(model, block)
    log_concat = np.empty_like(log_mu)
    for t in np.unique(tau):
        rows = np.nonzero(tau == t)[0]
        extended = np.concatenate([block[rows, :t], block[rows]], axis=1)
        log_concat[rows] = log_measure_block(model, extended)
    return -np.expm1(log_concat - log_mu), tau


def zeta(model: PotentialModel, w: Word) -> ZetaValue:
    """ζ(w) = μ_w(S ≠ τ(w))"""
    z, t = zeta_block(model, np.asarray(w.symbols)[None, :])
    return ZetaValue(w, float(z[0]), int(t[0]))


def _lambda_block(model: PotentialModel, block: np.ndarray) -> float:
    tau = tau_block(block)
    parts = []
    for t in np.unique(tau):
        rows = np.nonzero(tau == t)[0]
        extended = np.concatenate([block[rows, :t], block[rows]], axis=1)
        parts.append(float(logsumexp(log_measure_block(model, extended))))
    return float(logsumexp(parts))


def lambda_n(model: PotentialModel, n: int, budget: Optional[int] = None) -> float:
    """
    Λ^{(n)} = (1/n) log Σ_w (1 − ζ(w)) μ(w) = (1/n) log Σ_w μ(a₁^τ w)

    Raises:
        BudgetExceededError: Kⁿ 이 예산 초과
    """
    parts = map_word_blocks(model.alphabet_size, n, lambda block: _lambda_block(model, block), budget)
    return float(logsumexp(np.array(parts))) / n


def lambda_upper_bound(model: PotentialModel, n: int) -> float:
    """γ⁺ + log(D·n)/n"""
    return gamma_plus(model) + math.log(model.quasi_bernoulli_D * n) / n


def predicted_branch(model: PotentialModel, q: float) -> float:
    """
    n → ∞ 예측: q ≥ 0 이면 M(q), −1 < q < 0 이면 max(γ⁺, M(q)), q ≤ −1 이면 max(γ⁺, M(−1))
    """
    if q >= 0:
        return m_spectrum(model, q)
    return max(gamma_plus(model), m_spectrum(model, max(q, -1.0)))


@dataclass(frozen=True)
class TailValue:
    """log P 와 로그 스케일 인증 오차"""
    n: int
    threshold: float
    lower: bool
    log_prob: float
    certified_error: float


def _power_apply(x: np.ndarray, Q: np.ndarray, power: int) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    x Q^power (배치, 제곱 반복, 로그 스케일 재정규화)

    Returns:
        (정규화된 x, log 스케일 (B,), 행렬 곱 횟수)
    """
    B = x.shape[0]
    log_x = np.zeros(B)
    log_p = np.zeros(B)
    P = Q.copy()
    products = 0
    while power > 0:
        if power & 1:
            x = np.einsum("bs,bst->bt", x, P)
            scale = x.max(axis=1)
            scale = np.where(scale > 0, scale, 1.0)
            x = x / scale[:, None]
            log_x += np.log(scale) + log_p
            products += 1
        power >>= 1
        if power:
            P = P @ P
            scale = P.max(axis=(1, 2))
            scale = np.where(scale > 0, scale, 1.0)
            P = P / scale[:, None, None]
            log_p = 2.0 * log_p + np.log(scale)
            products += 1
    return x, log_x, products


def _tail_block(model: PotentialModel, block: np.ndarray, steps: int, lower: bool):
    Q, r, D0, log_mu, _ = _build_arrays(model, block, "return")
    B, S = r.shape
    if lower:
        # 흡수 상태를 붙인 확률 행렬: 흡수 질량을 뺄셈 없이 계산
        Qa = np.zeros((B, S + 1, S + 1))
        Qa[:, :S, :S] = Q
        Qa[:, :S, S] = r
        Qa[:, S, S] = 1.0
        x0 = np.concatenate([D0, np.zeros((B, 1))], axis=1)
        x, log_x, products = _power_apply(x0, Qa, steps)
        with np.errstate(divide="ignore"):
            log_p = np.log(x[:, S]) + log_x
        size = S + 1
    else:
        x, log_x, products = _power_apply(D0, Q, steps)
        with np.errstate(divide="ignore"):
            log_p = np.log(x.sum(axis=1)) + log_x
        size = S
    return float(logsumexp(log_mu + log_p)), products * size * EPS * 1.01


def exact_tail(model: PotentialModel, n: int, threshold: float, lower: bool = False,
               budget: Optional[int] = None, config: Optional[ComputeConfig] = None) -> TailValue:
    """
    log P(R_n > L) (lower=True 이면 log P(R_n < L)), 제곱 반복으로 정확 계산

    R_n > L ⟺ S > ⌊L⌋ − 1,  R_n < L ⟺ S ≤ ⌈L⌉ − 2

    Raises:
        BudgetExceededError: 상태 수 × log₂ L 이 예산 초과
    """
    config = config or get_compute_config()
    check_budget(model.alphabet_size, n, budget)
    if not math.isfinite(threshold):
        raise DomainError(f"임계값은 유한해야 합니다: {threshold}")
    S = automaton_state_count(n, model.alphabet_size, model.memory)
    cost = (S + 1) * max(1.0, math.log2(max(threshold, 2.0)))
    if cost > config.tail_threshold_budget:
        raise BudgetExceededError(f"exact_tail 비용 {cost:.3g} > {config.tail_threshold_budget}")
    if lower:
        steps = int(math.ceil(threshold)) - 2
        if steps < 1:
            return TailValue(n, threshold, True, -math.inf, 0.0)
    else:
        steps = int(math.floor(threshold)) - 1
        if steps <= 0:
            return TailValue(n, threshold, False, 0.0, 0.0)
    parts = map_word_blocks(
        model.alphabet_size, n,
        lambda block: _tail_block(model, block, steps, lower),
        budget,
    )
    log_prob = float(logsumexp([p[0] for p in parts]))
    error = max(p[1] for p in parts)
    return TailValue(n, threshold, lower, log_prob, error)


def exponential_moment_prediction(model: PotentialModel, w: Word, q: float) -> float:
    """
    지수 법칙 근사로 예측한 E_w[S^{−|q|}] (q < 0)

    μ(w)S 의 법칙을 τμ 에 원자 1−ζ, 그 뒤 밀도 ζ² e^{ζμτ} e^{−ζt} 로 두면
    E_w[S^{−p}] ≈ μ^p · p · I,  I = (μτ)^{−p}/p − ζ^{p+1} e^{ζμτ} Γ(−p, ζμτ)
    """
    if q >= 0:
        raise DomainError(f"q < 0 이어야 합니다: {q}")
    p = -float(q)
    z = zeta(model, w)
    mu = math.exp(log_measure_block(model, np.asarray(w.symbols)[None, :])[0])
    a = mu * z.tau
    x = z.zeta * a
    incomplete = upper_incomplete_gamma(-p, x, allow_integer=True).value
    integral = a ** (-p) / p - z.zeta ** (p + 1.0) * math.exp(x) * incomplete
    return mu ** p * p * integral


def kac_products(model: PotentialModel, n: int, budget: Optional[int] = None) -> np.ndarray:
    """모든 길이 n 단어의 E[S]·μ(w) (Kač: ≡ 1)"""
    def block_fn(block):
        Q, r, D0, log_mu, _ = _build_arrays(model, block, "return")
        _, _, E = _transforms(_Operator(Q), D0, r, np.ones(block.shape[0]), 1)
        return E[:, 1] * np.exp(log_mu)
    return np.concatenate(map_word_blocks(model.alphabet_size, n, block_fn, budget))


def zeta_agreement(model: PotentialModel, n: int, budget: Optional[int] = None) -> np.ndarray:
    """
    항등식 ζ 와 오토마톤 1 − P_w(S = τ) 의 절대 차 (모든 길이 n 단어)
    """
    def block_fn(block):
        Q, r, D0, _, tau = _build_arrays(model, block, "return")
        z_identity, _ = zeta_block(model, block)
        op = _Operator(Q)
        x = D0
        hit = np.zeros(block.shape[0])
        for t in range(1, int(tau.max()) + 1):
            at_t = tau == t
            hit[at_t] = np.einsum("bs,bs->b", x, r)[at_t]
            x = op.left_mul(x)
        return np.abs(z_identity - (1.0 - hit))
    return np.concatenate(map_word_blocks(model.alphabet_size, n, block_fn, budget))
