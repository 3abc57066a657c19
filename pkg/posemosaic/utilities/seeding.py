import hashlib
import numpy as np


def item_seed(seed: int, item_id: str) -> int:
    """
    Derives the seed of a work item from the global seed and the item id, so that the random draws of an item
    do not depend on which worker processes it or in which order.

    :param seed: the global seed
    :param item_id: the item identifier
    :return: a 64-bit unsigned seed
    """
    digest = hashlib.sha256(f'{int(seed)}:{item_id}'.encode('utf-8')).digest()
    return int.from_bytes(digest[:8], 'little')


def item_rng(seed: int, item_id: str) -> np.random.Generator:
    return np.random.default_rng(item_seed(seed, item_id))
