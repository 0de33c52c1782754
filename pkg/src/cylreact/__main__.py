"""``python -m cylreact`` delegates to the command line runner."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
