from dataclasses import dataclass, field
from typing import Optional, Sequence
import numpy as np

from posemosaic.mosaic.probability import ProbabilityMap
from posemosaic.mosaic.warping import WarpedCandidate


@dataclass(frozen=True, eq=False)
class IndexMap:
    """
    The winning candidate of every canvas pixel.

    Candidate indices are 0-based positions in the candidate list.

    Attributes
    ----------
    indices : np.ndarray
        (canvas, canvas) read-only integer raster
    count : int
        the number of candidates, every index is smaller
    """
    indices: np.ndarray = field(repr=False)
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError('An index map needs at least one candidate.')
        if np.any(self.indices < 0) or np.any(self.indices >= self.count):
            raise ValueError(f'Index map entries must lie in [0, {self.count}).')
        self.indices.setflags(write=False)

    @property
    def shape(self):
        return self.indices.shape


def index_map(maps: Sequence[ProbabilityMap], distances: Optional[Sequence[float]] = None) -> IndexMap:
    """
    Computes the per-pixel argmax of the probability maps, ties broken by the smallest candidate index.

    Pixels where every map is 0 go to the candidate with the smallest match distance (smallest index on ties);
    without distances they go to candidate 0.

    :param maps: the probability maps, one per candidate, all of the same size
    :param distances: the match distance of every candidate
    :return: the index map
    """
    if len(maps) == 0:
        raise ValueError('At least one probability map is required.')
    stack = np.stack([m.values for m in maps])
    if distances is not None and len(distances) != len(maps):
        raise ValueError('Exactly one distance per probability map is required.')
    # np.argmax returns the first maximum.
    indices = np.argmax(stack, axis=0)
    empty = ~np.any(stack > 0, axis=0)
    if empty.any():
        fallback = 0 if distances is None else int(np.argmin(np.asarray(distances, dtype=np.float64)))
        indices = np.where(empty, fallback, indices)
    return IndexMap(indices.astype(np.int64), len(maps))


def compose_mosaic(candidates: Sequence[WarpedCandidate], im: IndexMap) -> np.ndarray:
    """
    Copies every pixel from the candidate designated by the index map. Where the winner is invalid, its
    nearest valid pixel is used.

    :param candidates: the warped candidates
    :param im: the index map
    :return: the (canvas, canvas, 3) uint8 mosaic
    """
    if im.count != len(candidates):
        raise ValueError(f'The index map refers to {im.count} candidates, {len(candidates)} given.')
    mosaic = np.zeros(im.shape + (3,))
    for c, candidate in enumerate(candidates):
        where = im.indices == c
        if where.any():
            mosaic[where] = candidate.clamped()[where]
    return np.clip(np.rint(mosaic), 0, 255).astype(np.uint8)
