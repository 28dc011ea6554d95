"""
Console helpers shared by the command-line scripts.
"""

import sys


# ANSI color codes
class Colors:
    RED = '\033[0;31m'
    GREEN = '\033[0;32m'
    YELLOW = '\033[1;33m'
    BLUE = '\033[0;34m'
    CYAN = '\033[0;36m'
    NC = '\033[0m'  # No Color


def print_colored(text, color, quiet=False, stream=None):
    """Print text with color"""
    if quiet:
        return
    print(f"{color}{text}{Colors.NC}", file=stream or sys.stdout)


def banner(title, quiet=False):
    print_colored("=" * 50, Colors.BLUE, quiet)
    print_colored(f"{title:^50}", Colors.GREEN, quiet)
    print_colored("=" * 50, Colors.BLUE, quiet)
