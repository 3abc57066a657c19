from dataclasses import dataclass, field
from typing import List, Sequence, Tuple, Union
import numpy as np

from posemosaic.core import Pose2D, Pose3D
from posemosaic.clustering.kmeans import PoseClass


@dataclass(frozen=True, eq=False)
class ClassScores:
    """
    A distribution of scores over the pose classes, e.g. the output of a classifier.

    Attributes
    ----------
    scores : np.ndarray
        (K,) read-only finite non-negative scores, at least one positive
    """
    scores: np.ndarray = field(repr=False)

    def __init__(self, scores: Union[np.ndarray, Sequence[float]]):
        scores = np.array(scores, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(scores)) or np.any(scores < 0):
            raise ValueError('Class scores must be finite and non-negative.')
        if not np.any(scores > 0):
            raise ValueError('At least one class score must be positive.')
        scores.setflags(write=False)
        object.__setattr__(self, 'scores', scores)

    def __len__(self) -> int:
        return len(self.scores)


@dataclass(frozen=True)
class Hypothesis:
    """
    A pose estimate decoded from a class.
    """
    class_id: int
    score: float
    centroid3d: Pose3D
    centroid2d: Pose2D


def _check(scores: ClassScores, classes: Sequence[PoseClass]):
    if len(scores) != len(classes):
        raise ValueError(f'{len(scores)} scores for {len(classes)} classes.')


def decode_top_class(scores: ClassScores, classes: Sequence[PoseClass]) -> Tuple[Pose3D, Pose2D]:
    """
    Returns the average 3D and 2D poses of the top scoring class, ties broken by the smallest class id.

    :param scores: one score per class
    :param classes: the pose classes, in id order
    :return: the 3D and 2D centroids of the top class
    """
    _check(scores, classes)
    best = classes[int(np.argmax(scores.scores))]
    return best.centroid3d, best.centroid2d


def top_k_hypotheses(scores: ClassScores, classes: Sequence[PoseClass], k: int) -> List[Hypothesis]:
    """
    Returns the k best classes in non-increasing score order; classes with equal scores keep their id order.

    :param scores: one score per class
    :param classes: the pose classes, in id order
    :param k: the number of hypotheses, at most K
    :return: the hypotheses
    """
    _check(scores, classes)
    if not 1 <= k <= len(classes):
        raise ValueError(f'The number of hypotheses must lie in [1, {len(classes)}], got {k}.')
    order = np.argsort(-scores.scores, kind='stable')[:k]
    return [Hypothesis(classes[c].id, float(scores.scores[c]), classes[c].centroid3d, classes[c].centroid2d)
            for c in order]
