from dataclasses import dataclass
from typing import Optional

from posemosaic.core.errors import JointCountMismatch
from posemosaic.core.poses import Pose2D, Pose3D


@dataclass(frozen=True)
class PoseRecord:
    """
    An identified pose, as stored in MoCap, prediction and ground-truth pose files.

    Attributes
    ----------
    id : str
        the record identifier
    pose3d : Pose3D
        the 3D joints (mm)
    pose2d : Optional[Pose2D]
        the 2D joints (px) with their visibility, when available
    """
    id: str
    pose3d: Pose3D
    pose2d: Optional[Pose2D] = None

    def __post_init__(self):
        if self.pose2d is not None and self.pose2d.n != self.pose3d.n:
            raise JointCountMismatch(f'Record {self.id}: {self.pose3d.n} 3D joints, {self.pose2d.n} 2D joints.')
