from dataclasses import dataclass, field
import numpy as np

from posemosaic.core.errors import Degenerate
from posemosaic.mocap import QueryPose
from posemosaic.mosaic.triangulation import TriangleInterpolator
from posemosaic.mosaic.warping import WarpedCandidate

COINCIDENT_PX = 1e-6


@dataclass(frozen=True, eq=False)
class ProbabilityMap:
    """
    The per-pixel affinity of a warped candidate with the query pose.

    Attributes
    ----------
    values : np.ndarray
        (canvas, canvas) read-only raster with values in [0, 1]
    """
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if np.any(self.values < 0) or np.any(self.values > 1):
            raise ValueError('Probability map values must lie in [0, 1].')
        self.values.setflags(write=False)

    @staticmethod
    def zeros(canvas: int) -> 'ProbabilityMap':
        return ProbabilityMap(np.zeros((canvas, canvas)))

    def to_uint8(self) -> np.ndarray:
        """
        Returns the map as an 8-bit grayscale raster (value x 255, rounded).
        """
        return np.rint(self.values * 255.0).astype(np.uint8)


def probability_map(cand: WarpedCandidate, qp: QueryPose, sigma: float) -> ProbabilityMap:
    """
    Rasterizes the probability map of a candidate.

    Every joint k visible both in the query and in the aligned candidate pose becomes a vertex placed at q'_k,
    carrying the value exp(-d(p_k, q'_k)^2 / sigma^2). Coincident vertices are merged into one carrying the mean
    of their values. Pixels inside the Delaunay triangulation of the vertices are barycentrically interpolated,
    pixels outside the convex hull take the value at the nearest point of the hull boundary, and pixels where the
    candidate is invalid are set to 0.

    :param cand: the warped candidate
    :param qp: the query pose
    :param sigma: the bandwidth in pixels
    :return: the probability map
    :raises Degenerate: if fewer than 3 non-collinear joints are mutually visible
    """
    if not sigma > 0:
        raise ValueError(f'Sigma must be positive, got {sigma}.')
    p, q = qp.pose2d, cand.aligned_pose
    if p.n != q.n:
        raise ValueError('The candidate and the query have a different number of joints.')
    mutual = np.flatnonzero(p.visibility & q.visibility)
    if len(mutual) < 3:
        raise Degenerate(f'Only {len(mutual)} joints are mutually visible.')
    vertices = q.joints[mutual]
    residuals = p.joints[mutual] - vertices
    values = np.exp(-np.sum(residuals * residuals, axis=1) / (sigma * sigma))
    vertices, values = _merge_coincident(vertices, values)

    height, width = cand.valid.shape
    raster = TriangleInterpolator(vertices, values).rasterize(height, width)
    raster = np.where(cand.valid, np.clip(raster, 0.0, 1.0), 0.0)
    return ProbabilityMap(raster)


def _merge_coincident(vertices: np.ndarray, values: np.ndarray):
    # Joints rounding to the same COINCIDENT_PX grid point become one vertex, kept at the first joint's place.
    keys = np.round(vertices / COINCIDENT_PX)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    if len(first) == len(vertices):
        return vertices, values
    inverse = inverse.reshape(-1)
    merged = np.bincount(inverse, weights=values) / np.bincount(inverse)
    order = np.argsort(first)
    return vertices[first[order]], merged[order]
