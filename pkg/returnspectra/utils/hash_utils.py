"""
Hash 계산 유틸리티 모듈

모델 파일을 정규화된 JSON 바이트로 바꾼 뒤 digest 를 계산합니다.
RunManifest 헤더에 사용됩니다.
"""

import json
from typing import Any, Dict

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def canonical_json_bytes(spec_dict: Dict[str, Any]) -> bytes:
    """
    모델 스펙 딕셔너리를 정규화된 JSON 바이트로 변환

    Args:
        spec_dict: 모델 스펙 딕셔너리

    Returns:
        키 정렬, 공백 없는 UTF-8 JSON 바이트
    """
    # JSON을 정렬된 문자열로 변환 (키 순서 무관하게 동일한 digest 생성)
    text = json.dumps(spec_dict, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return text.encode('utf-8')


def fnv1a_64(data: bytes) -> int:
    """64-bit FNV-1a hash"""
    h = FNV64_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV64_PRIME) & _MASK64
    return h


def compute_model_digest(spec_dict: Dict[str, Any]) -> str:
    """
    모델 스펙의 FNV-1a 64-bit digest (16자리 hex)

    Args:
        spec_dict: 모델 스펙 딕셔너리

    Returns:
        hex 문자열 (예: "a3f1...")
    """
    return f"{fnv1a_64(canonical_json_bytes(spec_dict)):016x}"
