"""`python -m returnspectra` 실행 진입점"""
import sys

from .cli.app_views import main

if __name__ == "__main__":
    sys.exit(main())
