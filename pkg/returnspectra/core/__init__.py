"""
Core 모듈

단어, 모델, 스펙트럼, 정확 귀환 법칙, 몬테카를로, 율 함수, 불완전 감마 부등식
"""

from .words import Word, tau, enumerate_words, concat_prefix
from .model import ModelSpec, PotentialModel, normalize, load_model, cylinder_measure, tilt
from .spectra import pressure, m_spectrum, entropy, renyi, gamma_plus, q_star, r_spectrum, w_spectrum
from .return_exact import return_law, zeta, lambda_n, exact_return_spectrum, exact_tail
from .montecarlo import SimConfig, empirical_return, empirical_hitting, exponential_law_check
from .ldp import rate_I, rate_J, ldp_compare
from .gamma_bounds import upper_incomplete_gamma, verify_bounds

__all__ = [
    'Word', 'tau', 'enumerate_words', 'concat_prefix',
    'ModelSpec', 'PotentialModel', 'normalize', 'load_model', 'cylinder_measure', 'tilt',
    'pressure', 'm_spectrum', 'entropy', 'renyi', 'gamma_plus', 'q_star', 'r_spectrum', 'w_spectrum',
    'return_law', 'zeta', 'lambda_n', 'exact_return_spectrum', 'exact_tail',
    'SimConfig', 'empirical_return', 'empirical_hitting', 'exponential_law_check',
    'rate_I', 'rate_J', 'ldp_compare',
    'upper_incomplete_gamma', 'verify_bounds',
]
