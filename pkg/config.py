import logging
import os

from dotenv import load_dotenv

from errors import UsageError

# ------------------------------ Load environment variables ------------------------------
load_dotenv()

logger = logging.getLogger(__name__)

DEFAULT_UNIVERSE = 1 << 20
MIN_UNIVERSE = 1 << 6


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{name} must be an integer, got {raw!r}")


def check_universe(bound: int) -> int:
    """Universe bounds are powers of two so that dyadic blocks tile exactly."""
    if bound < MIN_UNIVERSE or bound & (bound - 1):
        raise UsageError(f"universe bound must be a power of two >= {MIN_UNIVERSE}, got {bound}")
    return bound


def default_universe() -> int:
    return check_universe(_int_env("APFORCE_UNIVERSE", DEFAULT_UNIVERSE))


def meet_arity() -> int:
    arity = _int_env("APFORCE_MEET_ARITY", 3)
    if arity < 1:
        raise UsageError(f"APFORCE_MEET_ARITY must be >= 1, got {arity}")
    return arity


def preprocess_cap() -> int:
    return max(0, _int_env("APFORCE_PREPROCESS_CAP", 8))


def witness_margin() -> int:
    return max(1, _int_env("APFORCE_WITNESS_MARGIN", 2))


def log_level() -> str:
    return os.getenv("APFORCE_LOG_LEVEL", "INFO").upper()
