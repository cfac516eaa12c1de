"""
CLI 메인 엔트리 포인트

인자 파싱, 전역 설정 덮어쓰기, 서브커맨드 라우팅을 담당합니다.
각 서브커맨드의 실제 구현은 commands.py 에 분리되어 있습니다.
"""

import argparse
import shlex
import sys
from typing import List, Optional

# 공통 설정 로드 (.env 로드 등)
from ..utils.config import load_env, override_compute_config, status
load_env()  # 명시적으로 .env 로드

from ..core.verification import SuiteSizes  # noqa: E402
from ..utils.errors import exit_code_for  # noqa: E402
from .commands import (  # noqa: E402
    cmd_exact,
    cmd_gamma_check,
    cmd_rate,
    cmd_simulate,
    cmd_spectrum,
    cmd_verify,
)

COMMANDS = {
    "spectrum": cmd_spectrum,
    "exact": cmd_exact,
    "simulate": cmd_simulate,
    "rate": cmd_rate,
    "gamma-check": cmd_gamma_check,
    "verify": cmd_verify,
}


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="모델 JSON 파일 경로")
    common.add_argument("--out", default=None, help="출력 CSV 경로 (기본: stdout)")
    common.add_argument("--seed", type=int, default=None, help="64-bit 난수 시드")
    common.add_argument("--threads", type=int, default=None, help="워커 스레드 수 (기본: 모든 코어)")
    common.add_argument("--budget", type=int, default=None, help="단어 열거 예산 (Kⁿ 상한)")
    common.add_argument("--dump-model", action="store_true",
                        help="파싱한 모델 스펙을 키 정렬 정규 JSON 으로 stderr 에 출력 "
                             "(입력 파일 원문이 아니라 재직렬화, float 는 비트 단위로 왕복)")
    common.add_argument("--quiet", action="store_true", help="진행 메시지 끄기")
    return common


def build_parser() -> argparse.ArgumentParser:
    """서브커맨드 파서 생성"""
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="returnspectra",
        description="귀환/도달 시간 L^q 스펙트럼, 정확 귀환 법칙, 몬테카를로, 대편차 율 함수",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common], help="M/H/R/W 스펙트럼 곡선")
    p.add_argument("--q-min", type=float, default=-4.0)
    p.add_argument("--q-max", type=float, default=4.0)
    p.add_argument("--points", type=int, default=401)
    p.add_argument("--svg", default=None, help="R, M, W 그림 SVG 경로")

    p = sub.add_parser("exact", parents=[common], help="정확한 유한 n 귀환 스펙트럼과 Λ⁽ⁿ⁾")
    p.add_argument("--n-min", type=int, default=1)
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--q", default="-2,-1,-0.5,0,0.5,1", help="쉼표 구분 q 목록")

    p = sub.add_parser("simulate", parents=[common], help="몬테카를로 (return | hitting | explaw)")
    p.add_argument("--mode", choices=["return", "hitting", "explaw"], default="return")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--replicas", type=int, default=None)
    p.add_argument("--t-max", type=int, default=None)
    p.add_argument("--word", default=None, help="explaw 대상 단어 (예: 1111111110)")
    p.add_argument("--raw", default=None, help="복제별 원시값 CSV 경로")

    p = sub.add_parser("rate", parents=[common], help="율 함수 I, J 와 정확 꼬리 비교")
    p.add_argument("--u", default=None, help="쉼표 구분 u 목록")
    p.add_argument("--u-min", type=float, default=None)
    p.add_argument("--u-max", type=float, default=None)
    p.add_argument("--points", type=int, default=41)
    p.add_argument("--ldp-n", default=None, help="정확 꼬리 비교용 n 목록 (예: 6,8,10,12)")
    p.add_argument("--ldp-u", type=float, default=0.1, help="편차 u")
    p.add_argument("--tail", choices=["upper", "lower"], default="upper")

    p = sub.add_parser("gamma-check", parents=[common], help="불완전 감마 부등식 검증")
    p.add_argument("--s", default=None, help="쉼표 구분 s 목록")
    p.add_argument("--x", default=None, help="쉼표 구분 x 목록")

    p = sub.add_parser("verify", parents=[common], help="불변식 전체 검사 (모두 통과 시 0)")
    sizes = SuiteSizes()
    p.add_argument("--kac-n", type=int, default=sizes.kac_n, help="Kač 검사 최대 단어 길이")
    p.add_argument("--zeta-n", type=int, default=sizes.zeta_n, help="ζ 검사 최대 단어 길이")
    p.add_argument("--lambda-n", type=int, default=sizes.lambda_n, help="Λ⁽ⁿ⁾ 검사 최대 단어 길이")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    CLI 메인 함수

    Args:
        argv: 인자 목록 (None 이면 sys.argv[1:])

    Returns:
        종료 코드 (0 성공, 2 입력 오류, 3 수치 실패, 4 예산 초과)
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    command_line = "returnspectra " + " ".join(shlex.quote(a) for a in argv)
    overrides = dict(
        threads=args.threads,
        enumeration_budget=args.budget,
        seed=args.seed,
        verbose=False if args.quiet else None,
    )
    with override_compute_config(**overrides):
        return _run(args, command_line)


def _run(args, command_line: str) -> int:
    status("=" * 60)
    status(f"🔄 {args.command} 실행")
    status("=" * 60)
    try:
        code = COMMANDS[args.command](args, command_line)
    except FileNotFoundError as e:
        status(f"❌ 파일을 찾을 수 없습니다: {e}")
        return 2
    except Exception as e:
        code = exit_code_for(e)
        status(f"❌ {args.command} 실패 ({type(e).__name__}, 종료 코드 {code}): {e}")
        return code
    status(f"✅ {args.command} 완료")
    return code
