import logging
import sys
from typing import Dict, Any, List
from threading import Lock

from config.settings import config

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - [%(threadName)s] - %(message)s'

logging.basicConfig(
    level=getattr(logging, str(config.LOG_LEVEL).upper(), logging.INFO),
    format=LOG_FORMAT,
    stream=sys.stderr
)
logger = logging.getLogger(__name__)

stats_lock = Lock()
activity_lock = Lock()

sweep_stats = {
    'runs_simulated': 0,
    'runs_failed': 0,
    'views_checked': 0,
    'oracle_disagreements': 0,
    'codec_mismatches': 0,
    'tables_audited': 0,
    'errors': 0
}

activity_log: List[Dict[str, Any]] = []
ACTIVITY_LOG_LIMIT = 50


def configure_logging(level: str) -> None:
    """Re-level the root logger (used by the CLI's --log-level)"""
    logging.getLogger().setLevel(getattr(logging, level.upper(), logging.INFO))


def safe_stats_update(updates: Dict[str, Any]) -> None:
    """Thread-safe statistics update"""
    with stats_lock:
        for key, value in updates.items():
            if key in sweep_stats:
                sweep_stats[key] += value


def stats_snapshot() -> Dict[str, Any]:
    with stats_lock:
        return dict(sweep_stats)


def reset_stats() -> None:
    with stats_lock:
        for key in sweep_stats:
            sweep_stats[key] = 0


def safe_activity_log(entry: Dict[str, Any]) -> None:
    """Newest first; one entry per failed workflow run"""
    with activity_lock:
        activity_log.insert(0, entry)
        del activity_log[ACTIVITY_LOG_LIMIT:]
