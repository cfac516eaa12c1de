"""
returnspectra 패키지

유한 메모리 포텐셜로 정의된 정상 과정의 귀환/도달 시간 L^q 스펙트럼,
대편차 율 함수, 정확 귀환 법칙, 몬테카를로 검증을 제공합니다.
"""

__version__ = "0.1.0"
