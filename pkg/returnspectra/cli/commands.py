"""
서브커맨드 본문 모듈

각 cmd_* 함수는 argparse.Namespace 를 받아 계산을 실행하고
RunManifest 헤더가 붙은 CSV 를 기록한 뒤 종료 코드를 반환합니다.
"""

import platform
import sys
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy

from .. import __version__
from ..core import gamma_bounds
from ..core.ldp import ldp_compare, rate_grid
from ..core.model import PotentialModel, load_model_spec, normalize
from ..core.montecarlo import (
    SimConfig,
    empirical_hitting,
    empirical_return,
    exponential_law_check,
    law_summary,
)
from ..core.return_exact import exact_return_spectra, lambda_n, predicted_branch
from ..core.spectra import entropy, gamma_plus, phase_transition_summary, spectrum_frame
from ..core.verification import SuiteSizes, run_invariant_suite
from ..core.words import Word
from ..utils.config import get_compute_config, status
from ..utils.errors import DomainError, EXIT_NUMERICAL, EXIT_OK
from ..utils.plot_utils import save_spectrum_svg
from ..utils.table_utils import TableUtils


@dataclass
class RunManifest:
    """
    출력 맨 위의 `#` 헤더 정보

    wall_time 은 finish() 에서 채웁니다.
    """
    command_line: str
    model_digest: str = "-"
    seed: Optional[int] = None
    started: float = field(default_factory=time.perf_counter)
    wall_time: float = 0.0

    @staticmethod
    def versions() -> str:
        return (f"returnspectra {__version__}; python {platform.python_version()}; "
                f"numpy {np.__version__}; scipy {scipy.__version__}; pandas {pd.__version__}")

    def finish(self) -> "RunManifest":
        self.wall_time = time.perf_counter() - self.started
        return self

    def header_lines(self, metadata: Sequence[Tuple[str, object]] = ()) -> List[str]:
        items = [
            ("command", self.command_line),
            ("model_digest", self.model_digest),
            ("seed", "-" if self.seed is None else self.seed),
            ("versions", self.versions()),
            ("wall_time_s", f"{self.wall_time:.3f}"),
        ]
        return TableUtils.format_metadata(list(items) + list(metadata))


def _parse_floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise DomainError(f"숫자 목록 형식 오류: {text!r}") from e


def _parse_ints(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise DomainError(f"정수 목록 형식 오류: {text!r}") from e


def _load(args) -> Tuple[PotentialModel, str]:
    """--model 파일 로드 → (정규화 모델, digest)"""
    if not args.model:
        raise DomainError("--model 경로가 필요합니다")
    spec = load_model_spec(args.model)
    if getattr(args, "dump_model", False):
        print(spec.dump(), file=sys.stderr)
    status(f"🔄 모델 로드: {spec.name} (K={spec.alphabet_size}, m={spec.memory}, {spec.kind})")
    model = normalize(spec)
    return model, spec.digest


def _emit(args, manifest: RunManifest, df: pd.DataFrame, metadata: Sequence[Tuple[str, object]] = ()) -> None:
    manifest.finish()
    TableUtils.write_csv(df, args.out, manifest.header_lines(metadata))
    if args.out and args.out != "-":
        status(f"💾 저장 완료: {args.out} ({len(df)}행, {manifest.wall_time:.2f}s)")


def cmd_spectrum(args, command_line: str) -> int:
    """M/H/R/W 곡선 CSV (+ 선택 SVG)"""
    model, digest = _load(args)
    manifest = RunManifest(command_line, digest)
    grid = np.linspace(args.q_min, args.q_max, args.points)
    summary = phase_transition_summary(model)
    df = spectrum_frame(model, grid)
    metadata = [
        ("q_star", summary.q_star),
        ("degenerate", summary.degenerate),
        ("gamma_plus", summary.gamma_plus),
        ("gamma_minus", summary.gamma_minus),
        ("pressure_2phi", summary.pressure_2phi),
        ("m_minus_one", summary.m_minus_one),
        ("entropy", summary.entropy),
    ]
    if args.svg:
        save_spectrum_svg(grid, {"R": df["R"].to_numpy(), "M": df["M"].to_numpy(), "W": df["W"].to_numpy()},
                          args.svg, q_star=summary.q_star, title=model.name)
        status(f"💾 SVG 저장: {args.svg}")
    status(f"📊 q* = {summary.q_star:.6f}, γ⁺ = {summary.gamma_plus:.6f}, h = {summary.entropy:.6f}")
    _emit(args, manifest, df, metadata)
    return EXIT_OK


def cmd_exact(args, command_line: str) -> int:
    """(n, q, exact_spectrum, lambda_n, certified_error, predicted, gap)"""
    model, digest = _load(args)
    manifest = RunManifest(command_line, digest)
    qs = _parse_floats(args.q)
    ns = range(args.n_min, args.n_max + 1)
    gp = gamma_plus(model)
    predictions = {q: predicted_branch(model, q) for q in qs}
    rows = []
    for n in ns:
        status(f"🔄 정확 스펙트럼 n={n}")
        lam = lambda_n(model, n, budget=args.budget)
        for value in exact_return_spectra(model, n, qs, budget=args.budget):
            rows.append({
                "n": n,
                "q": value.q,
                "exact_spectrum": value.value,
                "lambda_n": lam,
                "certified_error": value.certified_error,
                "predicted": predictions[value.q],
                "gap": abs(value.value - predictions[value.q]),
                "gamma_plus_gap": abs(lam - gp),
            })
    _emit(args, manifest, pd.DataFrame(rows), [("gamma_plus", gp)])
    return EXIT_OK


def cmd_simulate(args, command_line: str) -> int:
    """return | hitting 분위수 요약, explaw 곡선표"""
    model, digest = _load(args)
    config = get_compute_config()
    cfg = SimConfig.from_config(args.n, seed=config.seed, replicas=args.replicas, t_max=args.t_max)
    manifest = RunManifest(command_line, digest, cfg.seed)
    h = entropy(model)
    if args.mode == "explaw":
        if not args.word:
            raise DomainError("explaw 모드에는 --word 가 필요합니다")
        w = Word.from_string(args.word, model.alphabet_size)
        result = exponential_law_check(model, w, cfg)
        metadata = [
            ("word", str(w)),
            ("zeta", result.zeta),
            ("tau", result.tau),
            ("mu", result.mu),
            ("ks", result.ks),
            ("ks_exact", result.ks_exact),
            ("censoring_fraction", result.censoring_fraction),
        ]
        _emit(args, manifest, result.table, metadata)
        return EXIT_OK

    runner = empirical_return if args.mode == "return" else empirical_hitting
    law, raw = runner(model, args.n, cfg, raw=True)
    if args.raw:
        TableUtils.write_csv(pd.DataFrame({"replica": np.arange(raw.size), "value": raw}), args.raw,
                             manifest.header_lines([("mode", args.mode), ("censored_value", -1)]))
        status(f"💾 원시값 저장: {args.raw}")
    metadata = [("mode", args.mode), ("n", args.n), ("replicas", cfg.replicas), ("t_max", cfg.t_max)]
    _emit(args, manifest, law_summary(law, args.n, h), metadata)
    return EXIT_OK


def cmd_rate(args, command_line: str) -> int:
    """율 함수 격자 또는 (--ldp-n 지정 시) 정확 꼬리 비교표"""
    model, digest = _load(args)
    manifest = RunManifest(command_line, digest)
    if args.ldp_n:
        df = ldp_compare(model, _parse_ints(args.ldp_n), args.ldp_u, args.tail, budget=args.budget)
        _emit(args, manifest, df, [("entropy", entropy(model))])
        return EXIT_OK
    us = _parse_floats(args.u) if args.u else None
    if us is None and args.u_min is not None and args.u_max is not None:
        us = list(np.linspace(args.u_min, args.u_max, args.points))
    df = rate_grid(model, us)
    summary = phase_transition_summary(model)
    metadata = [
        ("entropy", summary.entropy),
        ("i_domain_lo", summary.i_domain[0]),
        ("i_domain_hi", summary.i_domain[1]),
        ("j_domain_lo", summary.j_domain[0]),
        ("j_domain_hi", summary.j_domain[1]),
    ]
    _emit(args, manifest, df, metadata)
    return EXIT_OK


def cmd_gamma_check(args, command_line: str) -> int:
    """불완전 감마 부등식 보고서"""
    manifest = RunManifest(command_line)
    s_values = _parse_floats(args.s) if args.s else list(gamma_bounds.DEFAULT_S_GRID)
    x_values = _parse_floats(args.x) if args.x else list(gamma_bounds.DEFAULT_X_GRID)
    grid = [(s, x) for s in s_values for x in x_values]
    report = gamma_bounds.verify_bounds(grid)
    bad = gamma_bounds.violations(report)
    oracle = gamma_bounds.oracle_agreement(grid)
    if len(bad):
        status(f"⚠️ 부등식 위반 {len(bad)}건")
    else:
        status("✅ 부등식 위반 없음")
    metadata = [("violations", len(bad)), ("oracle_max_rel_error", float(oracle["rel_error"].max()))]
    _emit(args, manifest, report, metadata)
    return EXIT_OK


def cmd_verify(args, command_line: str) -> int:
    """불변식 전체 검사, 모두 통과해야 0"""
    model, digest = _load(args)
    manifest = RunManifest(command_line, digest)
    sizes = SuiteSizes(kac_n=args.kac_n, zeta_n=args.zeta_n, lambda_n=args.lambda_n)
    report = run_invariant_suite(model, sizes)
    passed = bool(report["passed"].all())
    failed = int((~report["passed"]).sum())
    _emit(args, manifest, report, [("all_passed", passed), ("failed", failed)])
    if passed:
        status("✅ 모든 검사 통과")
        return EXIT_OK
    status(f"❌ 실패한 검사 {failed}개")
    return EXIT_NUMERICAL

