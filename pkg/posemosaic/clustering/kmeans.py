import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple
import numpy as np
from scipy.cluster.vq import vq
from sklearn.cluster import kmeans_plusplus

from posemosaic.core import Pose2D, Pose3D, Skeleton
from posemosaic.core.errors import TooFewPoses, JointCountMismatch
from posemosaic.mocap import OrientedPose, QueryPose
from posemosaic.utilities import ParUtils
from posemosaic.utilities.par_utils import CHUNK_SIZE

logger = logging.getLogger(__name__)

# Tolerance on the torso center of oriented poses.
_CENTER_TOL = 1e-6


@dataclass(frozen=True)
class PoseClass:
    """
    A cluster of oriented 3D poses.

    Attributes
    ----------
    id : int
        the class id, its position in the class list
    centroid3d : Pose3D
        the mean oriented 3D pose of the members (mm)
    centroid2d : Pose2D
        the mean 2D query pose of the members (canvas px)
    member_count : int
        the number of members, at least 1
    """
    id: int
    centroid3d: Pose3D
    centroid2d: Pose2D
    member_count: int

    def __post_init__(self):
        if self.member_count < 1:
            raise ValueError(f'Class {self.id} has no members.')


@dataclass(frozen=True, eq=False)
class ClusterModel:
    """
    The result of :func:`cluster_poses`.

    Attributes
    ----------
    classes : Tuple[PoseClass, ...]
        the K pose classes
    assignment : np.ndarray
        (N,) read-only class id of every clustered pose
    objective : float
        the final sum of squared distances (mm^2) of the poses to their class centroid
    history : Tuple[float, ...]
        the objective after every assignment step, non-increasing
    seed : int
        the seed of the k-means++ initialization
    """
    classes: Tuple[PoseClass, ...]
    assignment: np.ndarray = field(repr=False)
    objective: float
    history: Tuple[float, ...] = field(repr=False)
    seed: int

    def __post_init__(self):
        self.assignment.setflags(write=False)

    @property
    def k(self) -> int:
        return len(self.classes)

    def sizes(self) -> List[int]:
        return [c.member_count for c in self.classes]

    def centroids3d(self) -> np.ndarray:
        """
        Returns the (K, 3n) flattened 3D centroids.
        """
        return np.stack([c.centroid3d.joints.reshape(-1) for c in self.classes])


def _assign(data: np.ndarray, centers: np.ndarray, workers: int) -> Tuple[np.ndarray, np.ndarray]:
    # vq picks the first nearest center; rows are assigned independently of their chunk.
    results = ParUtils.par_map(lambda chunk: vq(chunk, centers), ParUtils.chunks(data, CHUNK_SIZE), workers)
    labels = np.concatenate([r[0] for r in results]).astype(np.int64)
    distances = np.concatenate([r[1] for r in results]).astype(np.float64)
    return labels, distances


def _objective(data: np.ndarray, centers: np.ndarray, labels: np.ndarray, workers: int) -> float:
    def chunk_sum(bounds: Tuple[int, int]) -> float:
        start, stop = bounds
        diff = data[start:stop] - centers[labels[start:stop]]
        return float(np.sum(diff * diff))

    bounds = [(i, min(i + CHUNK_SIZE, len(data))) for i in range(0, len(data), CHUNK_SIZE)]
    total = 0.0
    for partial in ParUtils.par_map(chunk_sum, bounds, workers):
        total += partial
    return total


def _repair_empty(data: np.ndarray, centers: np.ndarray, labels: np.ndarray, distances: np.ndarray, k: int):
    """
    Re-seeds every empty cluster, in id order, with the point farthest from its centroid among the clusters
    having more than one member. Modifies the arrays in place.
    """
    counts = np.bincount(labels, minlength=k)
    for empty in np.flatnonzero(counts == 0):
        movable = counts[labels] > 1
        candidates = np.where(movable, distances, -np.inf)
        point = int(np.argmax(candidates))
        counts[labels[point]] -= 1
        counts[empty] += 1
        labels[point] = empty
        distances[point] = 0.0
        centers[empty] = data[point]
        logger.debug('Re-seeded empty cluster %d with pose %d.', empty, point)


def _means(values: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    sums = np.zeros((k,) + values.shape[1:])
    np.add.at(sums, labels, values)
    counts = np.bincount(labels, minlength=k).reshape((k,) + (1,) * (values.ndim - 1))
    return sums / counts


def _check_centered(oriented: Sequence[OrientedPose], s: Skeleton):
    for index, op in enumerate(oriented):
        center = op.pose3d.torso_center(s.torso_joints)
        if np.max(np.abs(center)) > _CENTER_TOL:
            raise ValueError(f'Pose {index} is not torso-centered: torso center at {center}.')


def cluster_poses(oriented: Sequence[OrientedPose],
                  queries: Sequence[QueryPose],
                  k: int,
                  seed: int = 0,
                  max_iter: int = 100,
                  tol: float = 1e-4,
                  workers: int = 1,
                  s: Optional[Skeleton] = None) -> ClusterModel:
    """
    Partitions oriented 3D poses into K classes with k-means in the flattened 3n-dimensional joint space (mm).

    Centers are initialized with k-means++ from the given seed, then Lloyd iterations alternate assignment and
    update until the assignment is a fixed point, the relative objective decrease falls below ``tol`` or
    ``max_iter`` update steps are done. A cluster left empty by an assignment step is re-seeded with the pose
    farthest from its centroid. Each class carries the mean 3D pose and the mean 2D query pose of its members.

    The assignment is computed in fixed-size chunks and reductions are combined in chunk order, so the result
    does not depend on the number of workers.

    :param oriented: the oriented, torso-centered 3D poses
    :param queries: the 2D query pose of every oriented pose
    :param k: the number of classes
    :param seed: the seed of the k-means++ initialization
    :param max_iter: the maximum number of update steps
    :param tol: the relative objective decrease below which iterations stop
    :param workers: the number of threads of the assignment step
    :param s: if given, the skeleton whose torso center is checked to be at the origin on every pose
    :return: the cluster model
    :raises TooFewPoses: if K exceeds the number of poses
    """
    if len(queries) != len(oriented):
        raise ValueError(f'{len(oriented)} oriented poses but {len(queries)} query poses.')
    if k < 1:
        raise ValueError(f'The number of classes must be positive, got {k}.')
    if k > len(oriented):
        raise TooFewPoses(f'Cannot form {k} classes from {len(oriented)} poses.')
    if len({op.pose3d.n for op in oriented}) != 1:
        raise JointCountMismatch('All clustered poses must have the same number of joints.')
    if s is not None:
        _check_centered(oriented, s)

    data = np.stack([op.pose3d.joints.reshape(-1) for op in oriented])
    centers, _ = kmeans_plusplus(data, n_clusters=k, random_state=seed % 2 ** 32)
    centers = centers.astype(np.float64)

    labels, distances = _assign(data, centers, workers)
    _repair_empty(data, centers, labels, distances, k)
    history = [_objective(data, centers, labels, workers)]
    for iteration in range(max_iter):
        centers = _means(data, labels, k)
        new_labels, distances = _assign(data, centers, workers)
        _repair_empty(data, centers, new_labels, distances, k)
        history.append(_objective(data, centers, new_labels, workers))
        changed = not np.array_equal(new_labels, labels)
        labels = new_labels
        logger.debug('k-means iteration %d: objective %.6g.', iteration + 1, history[-1])
        if not changed or history[-2] - history[-1] <= tol * history[-2]:
            break

    centers = _means(data, labels, k)
    objective = _objective(data, centers, labels, workers)
    n = oriented[0].pose3d.n
    centers2d = _means(np.stack([q.pose2d.joints for q in queries]), labels, k)
    counts = np.bincount(labels, minlength=k)
    classes = tuple(PoseClass(c, Pose3D(centers[c].reshape(n, 3)), Pose2D(centers2d[c]), int(counts[c]))
                    for c in range(k))
    logger.info('Clustered %d poses into %d classes, objective %.6g after %d steps.',
                len(data), k, objective, len(history) - 1)
    return ClusterModel(classes, labels, objective, tuple(history), seed)


def assign_classes(oriented: Sequence[OrientedPose], model: ClusterModel, workers: int = 1) -> np.ndarray:
    """
    Labels oriented poses with the id of the class whose 3D centroid is nearest, ties broken by the smallest id.

    :param oriented: the oriented poses
    :param model: the cluster model
    :param workers: the number of threads
    :return: the (N,) class ids
    """
    if len(oriented) == 0:
        return np.empty(0, dtype=np.int64)
    data = np.stack([op.pose3d.joints.reshape(-1) for op in oriented])
    centers = model.centroids3d()
    if data.shape[1] != centers.shape[1]:
        raise JointCountMismatch('The poses and the class centroids have a different number of joints.')
    labels, _ = _assign(data, centers, workers)
    return labels
