import pandas as pd
import pytest

from returnspectra.utils.config import get_compute_config, override_compute_config, set_compute_config
from returnspectra.utils.errors import (
    BudgetExceededError,
    DegenerateModelError,
    InsufficientSamplesError,
    ModelSpecError,
    NumericalError,
    exit_code_for,
)
from returnspectra.utils.hash_utils import canonical_json_bytes, compute_model_digest, fnv1a_64
from returnspectra.utils.parallel import map_blocks, split_range
from returnspectra.utils.plot_utils import save_spectrum_svg
from returnspectra.utils.table_utils import TableUtils


def test_exit_codes():
    assert exit_code_for(ModelSpecError("x")) == 2
    assert exit_code_for(DegenerateModelError("x")) == 2
    assert exit_code_for(NumericalError("x")) == 3
    assert exit_code_for(InsufficientSamplesError("x")) == 3
    assert exit_code_for(BudgetExceededError("x")) == 4


def test_exit_code_follows_wrapped_cause():
    try:
        try:
            raise BudgetExceededError("inner")
        except BudgetExceededError as e:
            raise RuntimeError("블록 0 처리 실패") from e
    except RuntimeError as wrapped:
        assert exit_code_for(wrapped) == 4


def test_override_restores_previous_config():
    before = get_compute_config()
    with override_compute_config(threads=3, seed=None) as cfg:
        assert cfg.threads == 3
        assert cfg.seed == before.seed
        assert get_compute_config().workers == 3
    assert get_compute_config() is before


def test_set_compute_config_ignores_none():
    with override_compute_config():
        before = get_compute_config()
        after = set_compute_config(replicas=None, t_max=77)
        assert after.replicas == before.replicas
        assert after.t_max == 77


def test_fnv1a_known_vectors():
    assert fnv1a_64(b"") == 0xCBF29CE484222325
    assert fnv1a_64(b"a") == 0xAF63DC4C8601EC8C


def test_digest_is_key_order_independent():
    a = {"kind": "transition", "alphabet_size": 2}
    b = {"alphabet_size": 2, "kind": "transition"}
    assert canonical_json_bytes(a) == canonical_json_bytes(b)
    assert compute_model_digest(a) == compute_model_digest(b)


def test_split_range_and_map_blocks():
    blocks = split_range(10, 4)
    assert blocks == [(0, 4), (4, 8), (8, 10)]
    out = map_blocks(lambda i, start, stop: (i, stop - start), blocks, workers=3)
    assert out == [(0, 4), (1, 4), (2, 2)]
    with pytest.raises(ValueError):
        split_range(10, 0)


def test_map_blocks_wraps_errors():
    def fail(i, start, stop):
        if i == 1:
            raise BudgetExceededError("too big")
        return i

    with pytest.raises(RuntimeError) as info:
        map_blocks(fail, split_range(6, 2), workers=2)
    assert isinstance(info.value.__cause__, BudgetExceededError)


def test_table_render_and_read(tmp_path):
    df = pd.DataFrame({"q": [0.1, 1.0 / 3.0], "value": [1, 2]})
    header = TableUtils.format_metadata([("seed", 5), ("gamma_plus", 0.1)])
    assert header == ["# seed: 5", "# gamma_plus: 0.1"]
    text = TableUtils.render_csv(df, header)
    assert text.startswith("# seed: 5\n# gamma_plus: 0.1\nq,value\n")
    assert "0.333333333333333" in text

    path = tmp_path / "out" / "table.csv"
    TableUtils.write_csv(df, str(path), header)
    lines, loaded = TableUtils.read_csv(str(path))
    assert lines == header
    assert list(loaded.columns) == ["q", "value"]
    assert TableUtils.body_of(text) == "q,value\n0.1,1\n0.333333333333333,2"


def test_svg_is_reproducible(tmp_path):
    q = [-1.0, 0.0, 1.0]
    curves = {"R": [0.1, 0.2, 0.3], "M": [0.0, 0.2, 0.3]}
    a = save_spectrum_svg(q, curves, str(tmp_path / "a.svg"), q_star=-0.5, title="t")
    b = save_spectrum_svg(q, curves, str(tmp_path / "b.svg"), q_star=-0.5, title="t")
    assert a.read_text(encoding="utf-8").startswith("<?xml")
    assert a.read_bytes() == b.read_bytes()
