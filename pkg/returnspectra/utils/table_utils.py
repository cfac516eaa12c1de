"""
CSV 출력 유틸리티 모듈

DataFrame 을 `#` 메타데이터 헤더와 함께 CSV 로 기록합니다.
본문은 고정 float 포맷을 사용하므로 동일 입력에서 바이트 단위로 같습니다.
"""

import io
import sys
from pathlib import Path
from typing import Any, Iterable, List, Optional, Tuple

import pandas as pd

FLOAT_FORMAT = "%.15g"


class TableUtils:
    """CSV 기록 유틸리티 클래스"""

    @staticmethod
    def format_metadata(items: Iterable[Tuple[str, Any]]) -> List[str]:
        """
        (키, 값) 목록을 `# key: value` 줄로 변환

        Args:
            items: (키, 값) 튜플 목록

        Returns:
            헤더 줄 리스트
        """
        lines = []
        for key, value in items:
            if isinstance(value, float):
                value = FLOAT_FORMAT % value
            lines.append(f"# {key}: {value}")
        return lines

    @staticmethod
    def render_csv(df: pd.DataFrame, header_lines: Optional[List[str]] = None) -> str:
        """
        헤더 줄 + CSV 본문을 하나의 문자열로 생성

        Args:
            df: 출력할 DataFrame
            header_lines: `#` 로 시작하는 메타데이터 줄

        Returns:
            CSV 텍스트
        """
        buffer = io.StringIO()
        for line in header_lines or []:
            buffer.write(line if line.startswith("#") else f"# {line}")
            buffer.write("\n")
        df.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return buffer.getvalue()

    @staticmethod
    def write_csv(df: pd.DataFrame, out_path: Optional[str], header_lines: Optional[List[str]] = None) -> None:
        """
        CSV 를 파일 또는 stdout 으로 기록

        Args:
            df: 출력할 DataFrame
            out_path: 출력 경로 (None 또는 "-" 이면 stdout)
            header_lines: 메타데이터 줄
        """
        text = TableUtils.render_csv(df, header_lines)
        if out_path is None or out_path == "-":
            sys.stdout.write(text)
            sys.stdout.flush()
            return
        path = Path(out_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")

    @staticmethod
    def read_csv(path: str) -> Tuple[List[str], pd.DataFrame]:
        """
        write_csv 로 기록한 파일을 (헤더 줄, DataFrame) 으로 읽기

        Args:
            path: CSV 경로

        Returns:
            (메타데이터 줄 리스트, DataFrame)
        """
        text = Path(path).read_text(encoding="utf-8")
        header = [line for line in text.splitlines() if line.startswith("#")]
        df = pd.read_csv(io.StringIO(text), comment="#")
        return header, df

    @staticmethod
    def body_of(text: str) -> str:
        """CSV 텍스트에서 `#` 헤더를 뺀 본문만 반환"""
        return "\n".join(line for line in text.splitlines() if not line.startswith("#"))
