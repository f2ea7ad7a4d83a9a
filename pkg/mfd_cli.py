"""
Command-line entry point.

Adds the `mfd/` package directory to sys.path so its flat modules import
the same way they do in the tests, then hands over to ``cli.main``.
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "mfd"))

from cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
