"""
Parameter sweeps over independent points.
Runs in a process pool when more than one worker is configured, and falls
back to sequential execution when a pool cannot be started.
"""

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from config import Config
from logger import logger

P = TypeVar("P")
R = TypeVar("R")


def _run_sequential(func: Callable[[P], R], points: List[P]) -> List[R]:
    return [func(point) for point in points]


def run_sweep(func: Callable[[P], R], points: Iterable[P], workers: Optional[int] = None) -> List[R]:
    """
    Evaluate func at every point; results come back in input order.

    Args:
        func: Module-level (picklable) function of one argument
        points: Parameter points
        workers: Process count; defaults to Config.SWEEP_WORKERS

    Returns:
        List of results aligned with points
    """
    points = list(points)
    workers = Config.SWEEP_WORKERS if workers is None else workers
    if workers <= 1 or len(points) <= 1:
        return _run_sequential(func, points)

    try:
        executor = ProcessPoolExecutor(max_workers=workers)
    except (OSError, NotImplementedError) as e:
        logger.warning(f"Process pool unavailable ({e}), sweep will run sequentially")
        return _run_sequential(func, points)

    logger.debug(f"Sweep of {len(points)} points on {workers} workers")
    with executor:
        return list(executor.map(func, points))
