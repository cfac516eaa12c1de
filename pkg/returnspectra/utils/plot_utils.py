"""
SVG 그림 출력 모듈

matplotlib(Agg) 으로 스펙트럼 곡선을 SVG 로 저장합니다.
hashsalt 와 날짜 메타데이터를 고정해 같은 입력에서 같은 파일을 만듭니다.
"""

from pathlib import Path
from typing import Dict, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

SVG_HASH_SALT = "returnspectra"


def save_spectrum_svg(
    q: np.ndarray,
    curves: Dict[str, np.ndarray],
    out_path: str,
    q_star: Optional[float] = None,
    title: str = "",
) -> Path:
    """
    q 격자 위의 곡선들(R, M, W 등)을 SVG 로 저장

    Args:
        q: q 격자
        curves: 라벨 → 값 배열
        out_path: 저장 경로 (.svg)
        q_star: 표시할 임계 지수 (None 이면 생략)
        title: 그림 제목

    Returns:
        저장된 파일 Path
    """
    path = Path(out_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        try:
            for label, values in curves.items():
                ax.plot(q, values, label=label, linewidth=1.2)
            if q_star is not None:
                ax.axvline(q_star, color="gray", linestyle="--", linewidth=0.8)
                ax.annotate("q*", xy=(q_star, ax.get_ylim()[0]), xytext=(3, 3),
                            textcoords="offset points", fontsize=8, color="gray")
            ax.set_xlabel("q")
            if title:
                ax.set_title(title)
            ax.legend(loc="upper left", fontsize=8)
            ax.grid(True, linewidth=0.3)
            fig.savefig(path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return path
