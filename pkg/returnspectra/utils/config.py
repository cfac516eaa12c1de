"""
공통 설정 및 초기화 모듈

.env 로드, 프로젝트 루트 경로 계산, 수치 계산 기본값 등
애플리케이션 전역 설정을 중앙에서 관리합니다.
"""

import os
import sys
from contextlib import contextmanager
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterator, Optional

from dotenv import load_dotenv

# .env 파일 로드 (프로젝트 루트의 .env)
_env_loaded = False


def load_env():
    """프로젝트 루트의 .env 파일 로드 (한 번만 실행)"""
    global _env_loaded
    if not _env_loaded:
        env_path = get_project_root() / '.env'
        load_dotenv(env_path)
        _env_loaded = True


def get_project_root() -> Path:
    """
    프로젝트 루트 디렉토리 Path 반환

    Returns:
        프로젝트 루트 디렉토리 Path 객체
    """
    # 현재 파일 위치: returnspectra/utils/config.py
    # returnspectra/utils -> returnspectra -> 프로젝트 루트
    current_file = Path(__file__).resolve()
    return current_file.parent.parent.parent


def get_models_dir() -> Path:
    """번들 모델 파일 디렉토리 (models/) 반환"""
    return get_project_root() / 'models'


# 모듈 import 시 자동으로 .env 로드
load_env()


def _env_int(name: str, default: Optional[int]) -> Optional[int]:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        print(f"⚠️ 환경 변수 {name} 값이 정수가 아닙니다: {raw!r} (기본값 사용)")
        return default


def _env_bool(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    return raw.strip().lower() in ("1", "true", "yes", "on")


@dataclass(frozen=True)
class ComputeConfig:
    """
    수치 계산 설정값 클래스

    이 클래스의 값만 수정하면 전체 애플리케이션의 설정이 변경됩니다.
    CLI 플래그는 dataclasses.replace 로 덮어씁니다.
    """
    # 열거/상태 예산
    enumeration_budget: int = 2 ** 24  # 단어 열거 최대 개수 (Kⁿ)
    state_budget: int = 10 ** 6  # 오토마톤 상태 수 상한 ((n+1)·K^m)
    transfer_state_cap: int = 4096  # 전이 행렬 상태 수 상한 (K^m)
    tail_threshold_budget: int = 10 ** 7  # exact_tail 의 (상태 수 × log2 L) 상한

    # 고유값 / 근 찾기 허용 오차
    power_tol: float = 1e-13  # 거듭제곱 반복 상대 허용 오차
    power_max_iter: int = 10 ** 6  # 거듭제곱 반복 최대 횟수
    row_sum_tol: float = 1e-10  # 정규화 후 행 합 허용 오차
    probability_tol: float = 1e-12  # 전이 확률 행 정규화 허용 오차
    q_star_tol: float = 1e-10  # q* 이분법 허용 오차
    continuity_tol: float = 1e-8  # q* 에서의 R 연속성 허용 오차
    degenerate_tol: float = 1e-12  # g ≡ 1/K 판정 허용 오차

    # 스펙트럼 격자 (기본: [-4, 4] 401 점)
    q_min: float = -4.0
    q_max: float = 4.0
    q_points: int = 401

    # 병렬 처리 설정
    threads: Optional[int] = None  # None = 모든 코어
    word_block_size: int = 2 ** 14  # 단어 열거 블록 크기 (결정적 축약 단위)
    mc_block_size: int = 2 ** 12  # 몬테카를로 복제 블록 크기 (스레드 수와 무관)

    # 몬테카를로 기본값
    seed: int = 20240229
    replicas: int = 10 ** 4
    t_max: int = 10 ** 6

    # 진행 메시지 출력 여부 (stderr)
    verbose: bool = True

    @classmethod
    def from_env(cls) -> "ComputeConfig":
        """환경 변수(RETURNSPECTRA_*)를 반영한 설정 생성"""
        base = cls()
        return replace(
            base,
            threads=_env_int("RETURNSPECTRA_THREADS", base.threads),
            enumeration_budget=_env_int("RETURNSPECTRA_BUDGET", base.enumeration_budget),
            seed=_env_int("RETURNSPECTRA_SEED", base.seed),
            verbose=_env_bool("RETURNSPECTRA_VERBOSE", base.verbose),
        )

    @property
    def workers(self) -> int:
        """실제 사용할 워커 스레드 수"""
        if self.threads is not None and self.threads > 0:
            return self.threads
        return os.cpu_count() or 1


# 전역 설정 인스턴스 (이 값을 수정하면 전체 애플리케이션에 적용됨)
compute_config = ComputeConfig.from_env()


def get_compute_config() -> ComputeConfig:
    """
    계산 설정값 반환

    Returns:
        ComputeConfig 인스턴스
    """
    return compute_config


def set_compute_config(**overrides: Any) -> ComputeConfig:
    """
    전역 설정의 일부 값을 교체 (CLI 플래그 적용용)

    Args:
        **overrides: ComputeConfig 필드명 → 값 (None 인 값은 무시)

    Returns:
        갱신된 ComputeConfig 인스턴스
    """
    global compute_config
    values = {k: v for k, v in overrides.items() if v is not None}
    compute_config = replace(compute_config, **values)
    return compute_config


def status(message: str) -> None:
    """진행 메시지를 stderr 로 출력 (verbose 설정 시에만)"""
    if get_compute_config().verbose:
        print(message, file=sys.stderr)


@contextmanager
def override_compute_config(**overrides: Any) -> Iterator[ComputeConfig]:
    """블록 안에서만 설정을 덮어쓰고 끝나면 이전 설정으로 복원"""
    global compute_config
    previous = compute_config
    try:
        yield set_compute_config(**overrides)
    finally:
        compute_config = previous
