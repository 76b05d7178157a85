"""
Command-line entry point for master-slave combinatorial bandit experiments
"""

import sys
import logging
from pathlib import Path

# Add project root to Python path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

# Configure logging
logging.basicConfig(
    level=logging.INFO, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)

from cli.commands import dispatch  # noqa: E402


def main():
    """Run one subcommand and exit with its status"""
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
