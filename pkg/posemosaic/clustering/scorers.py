from abc import ABC, abstractmethod
from typing import Optional, Sequence, Union
import numpy as np

from posemosaic.core import Pose2D, Pose3D
from posemosaic.core.errors import JointCountMismatch
from posemosaic.mocap import OrientedPose
from posemosaic.clustering.kmeans import PoseClass
from posemosaic.clustering.decoding import ClassScores

DEFAULT_TAU_3D = 100.0
DEFAULT_TAU_2D = 10.0


class Scorer(ABC):
    """
    An abstract class for pose class scorers.
    A scorer maps an observation to a :class:`ClassScores` distribution over a fixed list of pose classes.
    Learned classifiers plug in by implementing :meth:`score`.

    Attributes
    ----------
    classes : Sequence[PoseClass]
        the pose classes, in id order
    """
    classes: Sequence[PoseClass]

    def __init__(self, classes: Sequence[PoseClass]):
        if len(classes) == 0:
            raise ValueError('A scorer needs at least one class.')
        self.classes = classes

    @abstractmethod
    def score(self, observation) -> ClassScores:
        """
        Returns the score of every class for the given observation.
        """
        pass


def _gaussian_scores(distances: np.ndarray, tau: float) -> ClassScores:
    scores = np.exp(-(distances * distances) / (tau * tau))
    # Keeps the scores positive when every class is far enough for exp to underflow.
    return ClassScores(np.maximum(scores, np.finfo(np.float64).tiny))


class CentroidScorer3D(Scorer):
    """
    Scores classes by exp(-d^2 / tau^2), d being the mean per-joint distance (mm) between an oriented 3D pose and
    the 3D class centroid.

    Examples
    --------
    Scoring the centroid of a class gives that class a score of 1::

        scorer = CentroidScorer3D(model.classes)
        scores = scorer.score(model.classes[3].centroid3d)
    """
    tau: float

    def __init__(self, classes: Sequence[PoseClass], tau: float = DEFAULT_TAU_3D):
        super().__init__(classes)
        if not tau > 0:
            raise ValueError(f'Tau must be positive, got {tau}.')
        self.tau = tau
        self._centroids = np.stack([c.centroid3d.joints for c in classes])

    def score(self, observation: Union[OrientedPose, Pose3D]) -> ClassScores:
        pose = observation.pose3d if isinstance(observation, OrientedPose) else observation
        if pose.n != self._centroids.shape[1]:
            raise JointCountMismatch(f'Pose with {pose.n} joints, classes with {self._centroids.shape[1]}.')
        distances = np.linalg.norm(self._centroids - pose.joints[None], axis=2).mean(axis=1)
        return _gaussian_scores(distances, self.tau)


class CentroidScorer2D(Scorer):
    """
    Scores classes by exp(-d^2 / tau^2), d being the mean distance (canvas px) between the visible joints of a
    2D query pose and the corresponding joints of the 2D class centroid.
    """
    tau: float

    def __init__(self, classes: Sequence[PoseClass], tau: float = DEFAULT_TAU_2D):
        super().__init__(classes)
        if not tau > 0:
            raise ValueError(f'Tau must be positive, got {tau}.')
        self.tau = tau
        self._centroids = np.stack([c.centroid2d.joints for c in classes])

    def score(self, observation: Pose2D) -> ClassScores:
        if observation.n != self._centroids.shape[1]:
            raise JointCountMismatch(f'Pose with {observation.n} joints, classes with {self._centroids.shape[1]}.')
        visible = observation.visible_indices()
        if len(visible) == 0:
            raise ValueError('The pose has no visible joint.')
        diff = self._centroids[:, visible] - observation.joints[visible][None]
        distances = np.linalg.norm(diff, axis=2).mean(axis=1)
        return _gaussian_scores(distances, self.tau)


def baseline_scorer(gt: Union[OrientedPose, Pose3D, Pose2D],
                    classes: Sequence[PoseClass],
                    tau: Optional[float] = None) -> ClassScores:
    """
    Scores the classes against a ground-truth observation with the centroid scorers: a 3D pose (or oriented
    pose) is compared with the 3D centroids, a 2D pose with the 2D centroids.

    :param gt: the observation
    :param classes: the pose classes
    :param tau: the bandwidth, 100 mm in 3D and 10 px in 2D by default
    :return: the class scores
    """
    if isinstance(gt, Pose2D):
        return CentroidScorer2D(classes, DEFAULT_TAU_2D if tau is None else tau).score(gt)
    return CentroidScorer3D(classes, DEFAULT_TAU_3D if tau is None else tau).score(gt)
