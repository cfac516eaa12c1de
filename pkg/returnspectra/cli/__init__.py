"""
CLI 모듈

명령행 파서와 서브커맨드
"""
