"""
Sweeps - adversary-level parallelism with a deterministic merge.

The pattern index space of a domain is cut into contiguous ranges; each range is handled by
a picklable worker function returning a partial result. Partial results are merged in range
order, so the outcome is identical for every worker count.
"""
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Optional, Tuple, TypeVar

from tqdm import tqdm

from config.settings import config
from core.logging import safe_stats_update
from services.domain import EnumerationDomain, count_patterns
from tools.utils import log_activity

logger = logging.getLogger(__name__)

T = TypeVar("T")


def default_workers() -> int:
    return os.cpu_count() or 1


def pattern_ranges(dom: EnumerationDomain) -> List[Tuple[int, int]]:
    total = count_patterns(dom)
    size = max(1, config.SWEEP_CHUNK_SIZE // dom.value_vectors)
    return [(start, min(start + size, total)) for start in range(0, total, size)]


def run_sweep(dom: EnumerationDomain, worker: Callable[[EnumerationDomain, int, int], T],
              workers: Optional[int] = None, label: str = "sweep") -> List[T]:
    """Apply worker(dom, start, stop) to every pattern range; results in range order"""
    ranges = pattern_ranges(dom)
    workers = workers or default_workers()
    log_activity(f"{label}: {len(ranges)} chunks over {count_patterns(dom)} failure patterns, {workers} workers")
    progress = tqdm(total=len(ranges), desc=label, disable=not config.SHOW_PROGRESS, leave=False)
    results: List[T] = []
    try:
        if workers == 1 or len(ranges) == 1:
            for start, stop in ranges:
                results.append(worker(dom, start, stop))
                progress.update(1)
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(worker, dom, start, stop) for start, stop in ranges]
                for future in futures:
                    results.append(future.result())
                    progress.update(1)
    except Exception:
        safe_stats_update({"errors": 1})
        raise
    finally:
        progress.close()
    return results
