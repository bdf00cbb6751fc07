import os
from dotenv import load_dotenv

from vampvae.errors import ContractError

# Load environment variables from .env file
load_dotenv()

LOG_LEVEL = os.getenv("VAMPVAE_LOG_LEVEL", "INFO")

# Defaults used when the CLI is given no explicit value
DEFAULT_PSEUDO_INPUTS = 500
OMNIGLOT_PSEUDO_INPUTS = 1000
DEFAULT_IS_SAMPLES = 5000
IS_CHUNK_SIZE = 500
ACTIVE_UNIT_THRESHOLD = 0.01


def get_thread_count() -> int:
    """Worker cap for evaluation, read from VAMPVAE_THREADS (defaults to the CPU count)."""
    raw = os.getenv("VAMPVAE_THREADS")
    if raw is None or raw == "":
        return max(1, os.cpu_count() or 1)
    try:
        threads = int(raw)
    except ValueError:
        raise ContractError(f"VAMPVAE_THREADS must be an integer, got {raw!r}")
    if threads < 1:
        raise ContractError(f"VAMPVAE_THREADS must be >= 1, got {threads}")
    return threads
