"""
Main entrypoint for python -m smlab
"""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
