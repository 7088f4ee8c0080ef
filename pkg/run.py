"""
Command-line entry point
"""

import sys

from monge.cli import main

if __name__ == '__main__':
    sys.exit(main())
