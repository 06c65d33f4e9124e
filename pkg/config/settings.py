# settings.py
import os
from dotenv import load_dotenv

load_dotenv()


class Config:
    """Library defaults - values may be overridden from a .env file, CLI flags never read them"""

    # Logging
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
    SHOW_PROGRESS = os.getenv("SHOW_PROGRESS", "False").lower() == "true"

    # Enumeration guards
    ENUM_MAX_N = int(os.getenv("ENUM_MAX_N", "5"))
    ENUM_MAX_HORIZON = int(os.getenv("ENUM_MAX_HORIZON", "4"))

    # Protocol-space search
    SEARCH_MAX_N = int(os.getenv("SEARCH_MAX_N", "3"))
    SEARCH_MAX_T = int(os.getenv("SEARCH_MAX_T", "1"))
    SEARCH_MAX_VALUES = int(os.getenv("SEARCH_MAX_VALUES", "2"))
    SEARCH_DEFAULT_BUDGET = int(float(os.getenv("SEARCH_DEFAULT_BUDGET", "1e8")))

    # Compact messaging
    CODEC_BIT_CONSTANT = int(os.getenv("CODEC_BIT_CONSTANT", "8"))
    CODEC_STRICT = os.getenv("CODEC_STRICT", "False").lower() == "true"

    # Sweeps and reports
    WITNESS_LIMIT = int(os.getenv("WITNESS_LIMIT", "10"))
    SWEEP_CHUNK_SIZE = int(os.getenv("SWEEP_CHUNK_SIZE", "2048"))
    REPORT_SCHEMA_VERSION = os.getenv("REPORT_SCHEMA_VERSION", "1.0")


config = Config()
