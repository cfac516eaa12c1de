"""
유한 알파벳 단어 모듈

단어(Word), 자기 겹침 구조(경계 배열), 최소 귀환 시간 τ, 사전순 열거를 다룹니다.
"""

import itertools
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..utils.config import get_compute_config
from ..utils.errors import BudgetExceededError, DomainError


@dataclass(frozen=True)
class Word:
    """
    알파벳 {0, …, K−1} 위의 유한 단어

    생성 후 불변이므로 스레드 간 공유가 안전합니다.
    """
    symbols: Tuple[int, ...]
    alphabet_size: int

    def __post_init__(self):
        if self.alphabet_size < 2:
            raise DomainError(f"알파벳 크기는 2 이상이어야 합니다: {self.alphabet_size}")
        if len(self.symbols) < 1:
            raise DomainError("단어 길이는 1 이상이어야 합니다")
        for a in self.symbols:
            if not 0 <= a < self.alphabet_size:
                raise DomainError(f"기호 {a} 가 [0, {self.alphabet_size}) 범위 밖입니다")
        object.__setattr__(self, "symbols", tuple(int(a) for a in self.symbols))

    @classmethod
    def from_string(cls, text: str, alphabet_size: int) -> "Word":
        """
        문자열 표현에서 Word 생성

        Args:
            text: "0110" (K ≤ 10) 또는 "0,11,3" (쉼표 구분)
            alphabet_size: 알파벳 크기 K

        Returns:
            Word 객체
        """
        text = text.strip()
        if "," in text or alphabet_size > 10:
            parts = [p for p in text.split(",") if p.strip() != ""]
        else:
            parts = list(text)
        try:
            symbols = tuple(int(p) for p in parts)
        except ValueError as e:
            raise DomainError(f"단어 문자열을 해석할 수 없습니다: {text!r}") from e
        return cls(symbols, alphabet_size)

    def __len__(self) -> int:
        return len(self.symbols)

    def __str__(self) -> str:
        return render_symbols(self.symbols, self.alphabet_size)

    @property
    def index(self) -> int:
        """사전순 인덱스 (첫 기호가 최상위 자리)"""
        value = 0
        for a in self.symbols:
            value = value * self.alphabet_size + a
        return value


def render_symbols(symbols: Sequence[int], alphabet_size: int) -> str:
    """K ≤ 10 이면 숫자 나열, 그 외에는 쉼표로 구분한 정수"""
    if alphabet_size <= 10:
        return "".join(str(int(a)) for a in symbols)
    return ",".join(str(int(a)) for a in symbols)


def failure_function(symbols: Sequence[int]) -> List[int]:
    """
    경계 배열 (KMP 실패 함수)

    border[i] 는 길이 i 접두사의 가장 긴 진경계 길이이며 border[0] = -1 입니다.

    Args:
        symbols: 기호 시퀀스

    Returns:
        길이 n+1 리스트
    """
    n = len(symbols)
    border = [-1] * (n + 1)
    k = -1
    for i in range(n):
        while k >= 0 and symbols[k] != symbols[i]:
            k = border[k]
        k += 1
        border[i + 1] = k
    return border


def tau(w: Word) -> int:
    """
    최소 귀환 시간 τ(w)

    a_{i+k} = a_i (1 ≤ i ≤ n−k) 를 만족하는 최소 k ≥ 1. 자기 겹침이 없으면 n.

    Args:
        w: 단어

    Returns:
        1 ≤ τ ≤ n 인 정수
    """
    n = len(w)
    return n - failure_function(w.symbols)[n]


def concat_prefix(w: Word) -> Word:
    """a₁^{τ(w)} · w (길이 n + τ(w))"""
    return Word(w.symbols[:tau(w)] + w.symbols, w.alphabet_size)


def kmp_transitions(symbols: Sequence[int], alphabet_size: int) -> np.ndarray:
    """
    단어 일치 오토마톤의 전이표

    delta[j, a] 는 일치 길이 j (0 ≤ j < n) 에서 기호 a 를 읽은 뒤의 일치 길이.
    delta 값이 n 이면 완전 일치입니다.

    Args:
        symbols: 단어 기호
        alphabet_size: 알파벳 크기 K

    Returns:
        (n, K) 정수 배열
    """
    n = len(symbols)
    border = failure_function(symbols)
    delta = np.zeros((n, alphabet_size), dtype=np.int64)
    for j in range(n):
        for a in range(alphabet_size):
            if symbols[j] == a:
                delta[j, a] = j + 1
            elif j == 0:
                delta[j, a] = 0
            else:
                delta[j, a] = delta[border[j], a]
    return delta


def check_budget(alphabet_size: int, n: int, budget: Optional[int] = None) -> int:
    """
    Kⁿ 이 열거 예산 안인지 확인

    Returns:
        단어 개수 Kⁿ

    Raises:
        BudgetExceededError: Kⁿ > budget
    """
    budget = budget if budget is not None else get_compute_config().enumeration_budget
    if n < 1:
        raise DomainError(f"단어 길이는 1 이상이어야 합니다: {n}")
    count = alphabet_size ** n
    if count > budget:
        raise BudgetExceededError(
            f"단어 열거 예산 초과: {alphabet_size}^{n} = {count} > {budget}"
        )
    return count


def enumerate_words(
    alphabet_size: int,
    n: int,
    budget: Optional[int] = None,
    start: int = 0,
    stop: Optional[int] = None,
) -> Iterator[Word]:
    """
    길이 n 단어를 사전순으로 한 번씩 생성

    start/stop 으로 사전순 인덱스 구간 [start, stop) 만 생성할 수 있습니다
    (병렬 map-reduce 용 구간 분할).

    Raises:
        BudgetExceededError: Kⁿ 이 예산 초과
    """
    count = check_budget(alphabet_size, n, budget)
    stop = count if stop is None else min(stop, count)
    if start == 0 and stop == count:
        for symbols in itertools.product(range(alphabet_size), repeat=n):
            yield Word(symbols, alphabet_size)
        return
    block = word_block(alphabet_size, n, start, stop)
    for row in block:
        yield Word(tuple(int(a) for a in row), alphabet_size)


def word_block(alphabet_size: int, n: int, start: int, stop: int) -> np.ndarray:
    """
    사전순 인덱스 [start, stop) 단어들의 기호 배열

    Returns:
        (stop − start, n) uint8 배열 (K ≤ 256 가정)
    """
    idx = np.arange(start, stop, dtype=np.int64)
    powers = alphabet_size ** np.arange(n - 1, -1, -1, dtype=np.int64)
    digits = (idx[:, None] // powers[None, :]) % alphabet_size
    return digits.astype(np.uint8 if alphabet_size <= 256 else np.int32)


def tau_block(block: np.ndarray) -> np.ndarray:
    """
    단어 배열의 τ 를 벡터화 계산

    Args:
        block: (B, n) 기호 배열

    Returns:
        (B,) int64 배열
    """
    count, n = block.shape
    result = np.full(count, n, dtype=np.int64)
    unresolved = np.ones(count, dtype=bool)
    for k in range(1, n):
        overlap = np.all(block[:, k:] == block[:, :n - k], axis=1) & unresolved
        result[overlap] = k
        unresolved &= ~overlap
        if not unresolved.any():
            break
    return result


def map_word_blocks(
    alphabet_size: int,
    n: int,
    block_fn,
    budget: Optional[int] = None,
    block_size: Optional[int] = None,
    workers: Optional[int] = None,
) -> list:
    """
    길이 n 단어 전체를 고정 크기 블록으로 나눠 block_fn(block_array) 실행

    결과는 사전순 블록 순서로 반환되므로 스레드 수와 무관하게 축약 결과가 같습니다.

    Args:
        alphabet_size: K
        n: 단어 길이
        block_fn: (B, n) 기호 배열 → 블록 결과
        budget: 열거 예산
        block_size: 블록 크기 (None 이면 설정값)
        workers: 워커 수

    Returns:
        블록 결과 리스트
    """
    from ..utils.parallel import map_blocks, split_range

    count = check_budget(alphabet_size, n, budget)
    block_size = block_size or get_compute_config().word_block_size
    blocks = split_range(count, block_size)
    return map_blocks(
        lambda _i, start, stop: block_fn(word_block(alphabet_size, n, start, stop)),
        blocks,
        workers,
    )
