"""
예외 클래스 모듈

CLI 는 예외 타입을 종료 코드로 변환합니다.
(입력 오류 2, 수치 실패 3, 예산 초과 4)
"""


class ModelSpecError(ValueError):
    """모델 파일/가중치가 유효하지 않음 (종료 코드 2)"""


class DomainError(ValueError):
    """연산의 정의역 밖 인자 (종료 코드 2)"""


class OutsideTheoremScopeError(DomainError):
    """rate_I 의 u 가 정의 구간 하한 아래 (이론이 값을 주지 않는 영역)"""


class DegenerateModelError(DomainError):
    """최대 엔트로피(퇴화) 모델에서 정의되지 않는 연산"""


class NumericalError(RuntimeError):
    """수렴 실패, 구간 위반, 불변식 실패 (종료 코드 3)"""


class InsufficientSamplesError(NumericalError):
    """검열되지 않은 표본이 너무 적음"""


class BudgetExceededError(RuntimeError):
    """열거/상태/임계값 예산 초과 (종료 코드 4)"""


EXIT_OK = 0
EXIT_INVALID_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_BUDGET = 4


def exit_code_for(error: BaseException) -> int:
    """
    예외에 대응하는 CLI 종료 코드 반환

    블록 병렬 실행이 감싼 RuntimeError 는 원인 예외를 따라갑니다.

    Args:
        error: 발생한 예외

    Returns:
        종료 코드 (2, 3, 4)
    """
    while type(error) is RuntimeError and error.__cause__ is not None:
        error = error.__cause__
    if isinstance(error, BudgetExceededError):
        return EXIT_BUDGET
    if isinstance(error, (ModelSpecError, DomainError)):
        return EXIT_INVALID_INPUT
    return EXIT_NUMERICAL
