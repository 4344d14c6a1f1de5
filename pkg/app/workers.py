"""Map ordonné, éventuellement sur un pool de processus."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> List[R]:
    """
    Applique fn à chaque élément en conservant l'ordre d'entrée.

    Args:
        fn: fonction picklable (niveau module ou functools.partial)
        items: éléments à traiter
        jobs: nombre de processus; 1 = boucle simple

    Returns:
        Liste des résultats dans l'ordre des éléments
    """
    items = list(items)
    if jobs <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    chunksize = max(1, len(items) // (jobs * 4))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))
