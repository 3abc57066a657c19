from .preparation import OrientedPose, QueryPose, subsample_poses, sample_virtual_cameras, orient_and_center, \
    project, normalize_crop
from .generator import random_pose3d, random_poses3d
