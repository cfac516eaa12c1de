"""
공통 pytest fixture

번들 모델 파일을 세션 단위로 한 번만 정규화하고,
테스트 중에는 진행 메시지를 끕니다.
"""

import pytest

from returnspectra.core.model import ModelSpec, load_model, normalize
from returnspectra.utils.config import get_models_dir, override_compute_config


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: 10⁵ 복제 몬테카를로 비교 (pytest -m 'not slow' 로 제외)")


@pytest.fixture(autouse=True)
def quiet_config():
    """모든 테스트에서 stderr 진행 메시지 끄기"""
    with override_compute_config(verbose=False):
        yield


@pytest.fixture(scope="session")
def models_dir():
    return get_models_dir()


@pytest.fixture(scope="session")
def bernoulli(models_dir):
    """Bernoulli(2/3, 1/3)"""
    return load_model(models_dir / "bernoulli_23.json")


@pytest.fixture(scope="session")
def markov(models_dir):
    """P(0,0) = 0.2, P(1,1) = 0.6"""
    return load_model(models_dir / "markov_02_06.json")


@pytest.fixture(scope="session")
def uniform(models_dir):
    """K = 2 최대 엔트로피 측도"""
    return load_model(models_dir / "uniform_2.json")


@pytest.fixture(scope="session")
def uniform3():
    return normalize(ModelSpec(3, 0, "transition", (1 / 3, 1 / 3, 1 / 3), name="uniform_3"))
