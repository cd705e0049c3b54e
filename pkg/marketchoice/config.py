"""
Configuration file for the market choice reductions toolkit

Paths, enumeration limits and logging settings. Values can be overridden
through environment variables or a ``.env`` file at the project root.
"""

import logging
import os
from pathlib import Path

from dotenv import load_dotenv

# Project paths
PROJECT_ROOT = Path(__file__).parent.parent.absolute()
load_dotenv(PROJECT_ROOT / ".env")

OUTPUT_DIR = Path(os.getenv("MARKETCHOICE_OUTPUT_DIR", PROJECT_ROOT / "output"))
CONFIGS_DIR = PROJECT_ROOT / "configs"

# Exact oracles enumerate 2^k subsets
ORACLE_LIMIT = int(os.getenv("MARKETCHOICE_ORACLE_LIMIT", "16"))
CFLMC_ORACLE_LIMIT = 10

# All instance data must fit in signed 64-bit integers
INT64_MAX = 2**63 - 1

# Local search
DEFAULT_MAX_ITERATIONS = 1000

# Generators keep totals well below INT64_MAX
GENERATOR_VALUE_CAP = 2**20

# Logging
LOG_LEVEL = os.getenv("MARKETCHOICE_LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(level: str = None):
    """
    Configure root logging for command line use.

    Args:
        level: Logging level name, defaults to LOG_LEVEL
    """
    logging.basicConfig(level=(level or LOG_LEVEL).upper(), format=LOG_FORMAT)
