"""
Command-line and library entry points.
"""

import sys

from src.cli.app import main
from src.core.npd import compute_npd

__all__ = [
    'main',
    'compute_npd',
]

if __name__ == "__main__":
    sys.exit(main())
