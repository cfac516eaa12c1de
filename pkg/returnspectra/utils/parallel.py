"""
블록 병렬 실행 유틸리티

작업을 고정 크기 블록으로 나누고 ThreadPoolExecutor 로 실행합니다.
결과는 항상 블록 순서대로 반환되므로 워커 수와 무관하게 축약 결과가 같습니다.
"""

from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

from .config import get_compute_config

T = TypeVar("T")


def split_range(total: int, block_size: int) -> List[Tuple[int, int]]:
    """
    [0, total) 을 [start, stop) 블록 목록으로 분할

    Args:
        total: 전체 개수
        block_size: 블록 크기 (워커 수와 무관한 고정값)

    Returns:
        (start, stop) 튜플 리스트
    """
    if block_size < 1:
        raise ValueError(f"block_size 는 1 이상이어야 합니다: {block_size}")
    return [(start, min(start + block_size, total)) for start in range(0, total, block_size)]


def map_blocks(
    func: Callable[[int, int, int], T],
    blocks: Sequence[Tuple[int, int]],
    workers: Optional[int] = None,
) -> List[T]:
    """
    블록마다 func(block_index, start, stop) 를 실행하고 블록 순서대로 결과 반환

    Args:
        func: 블록 작업 함수
        blocks: split_range 결과
        workers: 워커 스레드 수 (None 이면 설정값)

    Returns:
        블록 순서의 결과 리스트
    """
    workers = workers if workers is not None else get_compute_config().workers
    if workers <= 1 or len(blocks) <= 1:
        return [func(i, start, stop) for i, (start, stop) in enumerate(blocks)]

    results: List[Optional[T]] = [None] * len(blocks)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        future_to_index = {
            executor.submit(func, i, start, stop): i
            for i, (start, stop) in enumerate(blocks)
        }
        for future in as_completed(future_to_index):
            index = future_to_index[future]
            try:
                results[index] = future.result()
            except Exception as e:
                raise RuntimeError(f"블록 {index} 처리 실패: {e}") from e
    return results  # type: ignore[return-value]
