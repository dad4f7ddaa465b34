import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

from django.conf import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(func: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> List[R]:
    """
    Параллельное применение функции к набору входов.
    Порядок результатов совпадает с порядком входов, поэтому
    последующая свертка точных значений воспроизводима.
    """
    items = list(items)
    threads = threads or settings.WALSHLAB_THREADS

    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    logger.debug(f"Параллельная обработка: {len(items)} задач, потоков - {threads}")
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(func, items))
