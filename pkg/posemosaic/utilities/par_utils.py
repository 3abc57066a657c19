from multiprocessing.pool import ThreadPool
from typing import Callable, Iterable, List, Sequence, TypeVar

T = TypeVar('T')
R = TypeVar('R')

# Chunk length of the deterministic chunked computations. It never depends on the worker count.
CHUNK_SIZE = 4096


class ParUtils:

    @staticmethod
    def par_map(func: Callable[[T], R], iterable: Iterable[T], workers: int = 1) -> List[R]:
        """
        Parallel map function. Results are returned in input order; with a single worker the map runs inline.
        """
        if workers < 1:
            raise ValueError(f'The worker count must be at least 1, got {workers}.')
        if workers == 1:
            return [func(x) for x in iterable]
        with ThreadPool(workers) as p:
            return p.map(func, iterable)

    @staticmethod
    def par_imap(func: Callable[[T], R], iterable: Iterable[T], workers: int = 1) -> Iterable[R]:
        """
        Lazy parallel map yielding results in input order, for progress reporting over long batches.
        """
        if workers < 1:
            raise ValueError(f'The worker count must be at least 1, got {workers}.')
        if workers == 1:
            yield from map(func, iterable)
            return
        with ThreadPool(workers) as p:
            yield from p.imap(func, iterable)

    @staticmethod
    def chunks(iterable: Sequence[T], chunk_size: int = CHUNK_SIZE) -> List[Sequence[T]]:
        if chunk_size < 1:
            raise ValueError(f'The chunk size must be at least 1, got {chunk_size}.')
        return [iterable[i:i + chunk_size] for i in range(0, len(iterable), chunk_size)]
