import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence
import numpy as np

from posemosaic.core import BlendConfig, Skeleton
from posemosaic.mocap import QueryPose
from posemosaic.mosaic import IndexMap, WarpedCandidate
from posemosaic.blending.region import region_size_map

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BlendWeights:
    """
    Per-pixel convex weights of the candidates.

    Attributes
    ----------
    weights : np.ndarray
        (n, H, W) read-only array, non-negative, summing to 1 over the first axis
    """
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.weights.ndim != 3:
            raise ValueError('Blend weights must be an (n, H, W) array.')
        if np.any(self.weights < 0):
            raise ValueError('Blend weights must be non-negative.')
        self.weights.setflags(write=False)

    @property
    def count(self) -> int:
        return self.weights.shape[0]

    @staticmethod
    def one_hot(im: IndexMap) -> 'BlendWeights':
        """
        Returns the weights selecting, at every pixel, the candidate of the index map.
        """
        return BlendWeights((np.arange(im.count)[:, None, None] == im.indices[None]).astype(np.float64))


def _summed_area(mask: np.ndarray) -> np.ndarray:
    table = np.zeros((mask.shape[0] + 1, mask.shape[1] + 1), dtype=np.int64)
    table[1:, 1:] = np.cumsum(np.cumsum(mask.astype(np.int64), axis=0), axis=1)
    return table


def blend_weights(im: IndexMap, qp: QueryPose, cfg: BlendConfig, n: Optional[int] = None,
                  s: Optional[Skeleton] = None) -> BlendWeights:
    """
    Computes the histogram of the index map inside the square region of every pixel, normalized to sum 1.

    Regions are centered on the pixel, sized by :func:`region_size` and clipped to the canvas. The counts come
    from an integer summed-area table per candidate, so each histogram costs O(n) regardless of the region size.

    :param im: the index map
    :param qp: the query pose driving the region sizes
    :param cfg: the region sizing rule
    :param n: the number of candidates, the one of the index map if None
    :param s: the skeleton, the default one if None
    :return: the blend weights
    """
    n = im.count if n is None else n
    if n < im.count:
        raise ValueError(f'The index map refers to {im.count} candidates, only {n} declared.')
    height, width = im.shape
    half = region_size_map(height, width, qp, cfg, s) // 2
    v, u = np.mgrid[0:height, 0:width]
    r0, r1 = np.maximum(v - half, 0), np.minimum(v + half, height - 1) + 1
    c0, c1 = np.maximum(u - half, 0), np.minimum(u + half, width - 1) + 1
    area = ((r1 - r0) * (c1 - c0)).astype(np.float64)

    weights = np.zeros((n, height, width))
    for c in range(im.count):
        table = _summed_area(im.indices == c)
        counts = table[r1, c1] - table[r0, c1] - table[r1, c0] + table[r0, c0]
        weights[c] = counts / area
    logger.debug('Computed blend weights of %d candidates on a %dx%d canvas.', n, height, width)
    return BlendWeights(weights)


def blend(candidates: Sequence[WarpedCandidate], weights: BlendWeights) -> np.ndarray:
    """
    Blends the candidates as the per-pixel weighted sum of their edge-clamped images, rounded to 8 bits.

    :param candidates: the warped candidates
    :param weights: one weight raster per candidate
    :return: the (H, W, 3) uint8 image
    """
    if weights.count != len(candidates):
        raise ValueError(f'{weights.count} weight rasters for {len(candidates)} candidates.')
    total = np.zeros(weights.weights.shape[1:] + (3,))
    for c, candidate in enumerate(candidates):
        w = weights.weights[c]
        if w.any():
            total += w[..., None] * candidate.clamped()
    return np.clip(np.rint(total), 0, 255).astype(np.uint8)
