from dataclasses import dataclass
from typing import Optional, Tuple
import numpy as np

from posemosaic.core import Pose2D, Transform2D, Skeleton, farthest_connected_joint
from posemosaic.core.errors import AllOccluded, DegenerateSegment, OccludedJoint

WEIGHT_FLOOR = 1.0
MIN_SEGMENT = 1e-6


@dataclass(frozen=True, eq=False)
class JointWeights:
    """
    Normalized inverse-distance weights of the joints of a pose with respect to a query joint j.

    Attributes
    ----------
    joint : int
        the query joint j, whose weight is 0
    weights : np.ndarray
        n non-negative weights summing to 1
    """
    joint: int
    weights: np.ndarray

    def __post_init__(self):
        self.weights.setflags(write=False)


def alignment_transform(p: Pose2D, q: Pose2D, j: int, i: int) -> Transform2D:
    """
    Returns the similarity transform T that pins the segment (q_j, q_i) onto the segment (p_j, p_i),
    i.e. such that T(q_j) = p_j and T(q_i) = p_i.

    Two point constraints fix a rotation, an isotropic scale and a translation, so the transform is unique as
    long as both segments have a positive length.

    :param p: the query pose
    :param q: the pose to align
    :param j: the pinned joint
    :param i: the joint defining the direction, usually the farthest neighbor of j in p
    :return: the alignment transform
    :raises OccludedJoint: if one of the four joints is occluded
    :raises DegenerateSegment: if either segment is shorter than 1e-6 px
    """
    if not (p.visibility[j] and p.visibility[i] and q.visibility[j] and q.visibility[i]):
        raise OccludedJoint(f'Joints {j} and {i} must be visible in both poses.')
    a = q.joints[i] - q.joints[j]
    b = p.joints[i] - p.joints[j]
    len_a, len_b = float(np.hypot(*a)), float(np.hypot(*b))
    if len_a < MIN_SEGMENT or len_b < MIN_SEGMENT:
        raise DegenerateSegment(f'Segment ({j}, {i}) is degenerate.')
    rotation = float(np.arctan2(b[1], b[0]) - np.arctan2(a[1], a[0]))
    scale = len_b / len_a
    c, s = np.cos(rotation), np.sin(rotation)
    qx, qy = q.joints[j]
    tx = p.joints[j][0] - scale * (c * qx - s * qy)
    ty = p.joints[j][1] - scale * (s * qx + c * qy)
    return Transform2D(rotation, scale, (tx, ty))


def _inverse_distance_weights(xy: np.ndarray, mask: np.ndarray, j: int) -> np.ndarray:
    """
    Row-wise normalized inverse distance weights of a stack of poses.
    ``xy`` is (N, n, 2), ``mask`` is (N, n); masked out joints and joint j get weight 0.
    Rows without any usable joint are all zeros.
    """
    diff = xy - xy[:, j:j + 1]
    dist = np.sqrt(diff[..., 0] * diff[..., 0] + diff[..., 1] * diff[..., 1])
    usable = mask.copy()
    usable[:, j] = False
    raw = np.where(usable, 1.0 / np.maximum(dist, WEIGHT_FLOOR), 0.0)
    total = _row_sum(raw)
    return np.divide(raw, total[:, None], out=np.zeros_like(raw), where=total[:, None] > 0)


def _row_sum(values: np.ndarray) -> np.ndarray:
    # Fixed-order accumulation: the sum of a row never depends on how many rows are stacked.
    total = np.zeros(values.shape[0])
    for k in range(values.shape[1]):
        total = total + values[:, k]
    return total


def joint_weights(p: Pose2D, j: int, mask: Optional[np.ndarray] = None) -> JointWeights:
    """
    Computes the weights w_k = 1 / max(d(p_k, p_j), 1 px) of the visible joints k != j, normalized to sum 1.
    Joint j and occluded joints get weight 0. The 1 px floor keeps joints coincident with j finite.

    :param p: the pose
    :param j: the query joint, which must be visible
    :param mask: optional extra boolean mask restricting the joints that get a weight
    :return: the normalized weights
    :raises OccludedJoint: if joint j is occluded
    :raises AllOccluded: if no joint other than j is usable
    """
    if not p.visibility[j]:
        raise OccludedJoint(f'Joint {j} is occluded.')
    usable = p.visibility if mask is None else p.visibility & np.asarray(mask, dtype=bool)
    xy = np.where(p.visibility[:, None], p.joints, 0.0)[None]
    weights = _inverse_distance_weights(xy, usable[None], j)[0]
    if not weights.any():
        raise AllOccluded(f'No visible joint other than {j}.')
    return JointWeights(j, weights)


@dataclass(frozen=True, eq=False)
class BatchDistances:
    """
    Conditioned distances of a stack of candidate poses against one query pose.

    Attributes
    ----------
    distances : np.ndarray
        (N,) distances, +inf where the candidate cannot be aligned
    valid : np.ndarray
        (N,) boolean array, True where the candidate can be aligned
    similarity : np.ndarray
        (N, 2) complex-like coefficients (c, s) of the linear part [[c, -s], [s, c]] of each alignment
    translation : np.ndarray
        (N, 2) translations of each alignment
    """
    distances: np.ndarray
    valid: np.ndarray
    similarity: np.ndarray
    translation: np.ndarray

    def transform(self, row: int) -> Transform2D:
        c, s = self.similarity[row]
        return Transform2D(float(np.arctan2(s, c)), float(np.hypot(c, s)), tuple(self.translation[row]))


def batch_conditioned_distances(p_xy: np.ndarray, p_vis: np.ndarray,
                                q_xy: np.ndarray, q_vis: np.ndarray,
                                j: int, i: int) -> BatchDistances:
    """
    Evaluates the conditioned distance D_j between one query pose and a stack of candidate poses.

    The similarity pinning (q_j, q_i) onto (p_j, p_i) is computed as a complex ratio, so that only correctly
    rounded arithmetic is involved: the distance of a candidate does not depend on which other candidates are
    evaluated with it. Both the brute-force scan and the accelerated index rely on this.

    :param p_xy: (n, 2) query coordinates, occluded joints set to 0
    :param p_vis: (n,) query visibility
    :param q_xy: (N, n, 2) candidate coordinates, occluded joints set to 0
    :param q_vis: (N, n) candidate visibility
    :param j: the query joint
    :param i: the farthest visible neighbor of j in the query
    :return: the distances and alignments of every candidate
    """
    a = q_xy[:, i] - q_xy[:, j]
    b = p_xy[i] - p_xy[j]
    len2_a = a[:, 0] * a[:, 0] + a[:, 1] * a[:, 1]
    len_b = np.sqrt(b[0] * b[0] + b[1] * b[1])
    valid = q_vis[:, j] & q_vis[:, i] & (np.sqrt(len2_a) >= MIN_SEGMENT)
    if not (p_vis[j] and p_vis[i] and len_b >= MIN_SEGMENT):
        valid = np.zeros_like(valid)

    safe = np.where(valid, len2_a, 1.0)
    c = (b[0] * a[:, 0] + b[1] * a[:, 1]) / safe
    s = (b[1] * a[:, 0] - b[0] * a[:, 1]) / safe

    rel = q_xy - q_xy[:, j:j + 1]
    aligned_x = p_xy[j][0] + (c[:, None] * rel[..., 0] - s[:, None] * rel[..., 1])
    aligned_y = p_xy[j][1] + (s[:, None] * rel[..., 0] + c[:, None] * rel[..., 1])

    mutual = p_vis[None, :] & q_vis
    w_p = _inverse_distance_weights(np.broadcast_to(p_xy, q_xy.shape), mutual, j)
    w_q = _inverse_distance_weights(q_xy, mutual, j)
    dx = aligned_x - p_xy[None, :, 0]
    dy = aligned_y - p_xy[None, :, 1]
    residual = np.where(mutual, np.sqrt(dx * dx + dy * dy), 0.0)
    distances = _row_sum((w_p + w_q) * residual)
    distances = np.where(valid, distances, np.inf)

    tx = p_xy[j][0] - (c * q_xy[:, j, 0] - s * q_xy[:, j, 1])
    ty = p_xy[j][1] - (s * q_xy[:, j, 0] + c * q_xy[:, j, 1])
    return BatchDistances(distances, valid, np.stack([c, s], axis=1), np.stack([tx, ty], axis=1))


def pose_arrays(p: Pose2D) -> Tuple[np.ndarray, np.ndarray]:
    """
    Returns the coordinates of a pose with occluded joints zeroed, and its visibility.
    """
    return np.where(p.visibility[:, None], p.joints, 0.0), p.visibility.copy()


def conditioned_distance(p: Pose2D, q: Pose2D, j: int, s: Skeleton) -> Tuple[float, Transform2D]:
    """
    Computes the distance between two 2D poses conditioned on joint j.

    The pose q is first aligned onto p with the similarity transform that pins q_j on p_j and q_i on p_i, where i is
    the farthest visible neighbor of j in p. The distance is then the sum, over the joints visible in both poses,
    of the residuals d(p_k, q'_k) weighted by w_k(p) + w_k(q), where both weight sets are the inverse distance
    weights of :func:`joint_weights` restricted to the mutually visible joints.

    :param p: the query pose
    :param q: the candidate pose
    :param j: the conditioning joint
    :param s: the skeleton defining the connectivity
    :return: the distance and the alignment transform of q onto p
    :raises OccludedJoint: if j or its farthest neighbor is occluded in q, or j is occluded in p
    :raises DegenerateSegment: if either pinned segment is degenerate
    """
    if not p.visibility[j]:
        raise OccludedJoint(f'Joint {j} is occluded in the query pose.')
    i = farthest_connected_joint(s, p, j)
    # Validates the pinned segments and raises the specific error.
    alignment_transform(p, q, j, i)
    p_xy, p_vis = pose_arrays(p)
    q_xy, q_vis = pose_arrays(q)
    batch = batch_conditioned_distances(p_xy, p_vis, q_xy[None], q_vis[None], j, i)
    return float(batch.distances[0]), batch.transform(0)
