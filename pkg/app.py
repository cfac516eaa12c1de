"""
Minimal launcher: delegate to `returnspectra.cli.app_views.main`
"""
import sys

from returnspectra.cli.app_views import main

if __name__ == "__main__":
    sys.exit(main())
