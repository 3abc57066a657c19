from typing import Optional, Tuple
import numpy as np

from posemosaic.core import BlendConfig, Skeleton
from posemosaic.mocap import QueryPose


def distance_to_pose(xy: np.ndarray, qp: QueryPose, s: Optional[Skeleton] = None) -> np.ndarray:
    """
    Computes the Euclidean distance of (m, 2) points to the pose: the distance to the nearest skeleton segment
    whose two joints are visible. Without such a segment the nearest visible joint is used, and without any
    visible joint the distance is infinite.

    :param xy: the points
    :param qp: the query pose
    :param s: the skeleton defining the segments, the default one if None
    :return: the (m,) distances
    """
    s = Skeleton.default() if s is None else s
    p = qp.pose2d
    xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
    best = np.full(len(xy), np.inf)
    segments = [(a, b) for a, b in s.edges if p.visibility[a] and p.visibility[b]]
    for a, b in segments:
        start, end = p.joints[a], p.joints[b]
        edge = end - start
        length2 = float(edge @ edge)
        rel = xy - start
        t = np.zeros(len(xy)) if length2 == 0 else np.clip(rel @ edge / length2, 0.0, 1.0)
        nearest = start + t[:, None] * edge
        best = np.minimum(best, np.hypot(xy[:, 0] - nearest[:, 0], xy[:, 1] - nearest[:, 1]))
    if not segments:
        for k in p.visible_indices():
            best = np.minimum(best, np.hypot(xy[:, 0] - p.joints[k, 0], xy[:, 1] - p.joints[k, 1]))
    return best


def _odd_side(distance: np.ndarray, cfg: BlendConfig) -> np.ndarray:
    grown = np.clip(cfg.s_min + cfg.alpha * distance, cfg.s_min, cfg.s_max)
    side = 2 * np.floor(grown / 2.0).astype(np.int64) + 1
    largest = cfg.s_max if cfg.s_max % 2 == 1 else cfg.s_max - 1
    return np.clip(side, 1, largest)


def region_size(pixel: Tuple[float, float], qp: QueryPose, cfg: BlendConfig, s: Optional[Skeleton] = None) -> int:
    """
    Returns the side length of the square blending region centered at a pixel: the nearest odd integer to
    clamp(s_min + alpha * d, s_min, s_max), where d is the distance of the pixel to the pose. An even s_max caps
    the side at s_max - 1.

    :param pixel: the (u, v) pixel, u being the column
    :param qp: the query pose
    :param cfg: the sizing rule
    :param s: the skeleton, the default one if None
    :return: an odd side length
    """
    d = distance_to_pose(np.array([pixel], dtype=np.float64), qp, s)
    return int(_odd_side(d, cfg)[0])


def region_size_map(height: int, width: int, qp: QueryPose, cfg: BlendConfig,
                    s: Optional[Skeleton] = None) -> np.ndarray:
    """
    Evaluates :func:`region_size` at every pixel of a height x width raster.
    """
    v, u = np.mgrid[0:height, 0:width].astype(np.float64)
    d = distance_to_pose(np.stack([u.ravel(), v.ravel()], axis=1), qp, s)
    return _odd_side(d, cfg).reshape(height, width)
