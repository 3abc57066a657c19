from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple
import numpy as np

from posemosaic.core import Pose2D, Pose3D, Camera, Transform2D, Skeleton
from posemosaic.core.errors import InvalidRange, BehindCamera, DegeneratePose


@dataclass(frozen=True)
class OrientedPose:
    """
    A 3D pose expressed in the coordinate frame of a camera and translated so that its torso center is at the
    origin. Oriented poses carry the viewpoint in the pose itself.

    Attributes
    ----------
    pose3d : Pose3D
        the oriented, torso-centered pose (mm)
    camera : Camera
        the camera the pose is oriented for
    """
    pose3d: Pose3D
    camera: Camera


@dataclass(frozen=True)
class QueryPose:
    """
    A 2D query pose framed in the synthesis canvas.

    Attributes
    ----------
    pose2d : Pose2D
        the pose in canvas pixels
    crop : Transform2D
        the transform mapping raw projected coordinates to canvas coordinates
    """
    pose2d: Pose2D
    crop: Transform2D


def subsample_poses(poses: Sequence[Pose3D],
                    min_dist: float,
                    criterion: str = 'max',
                    skeleton: Optional[Skeleton] = None) -> List[int]:
    """
    Greedily selects a subset of poses that are pairwise distinct enough.
    Poses are scanned in input order and a pose is kept iff, for every pose already kept, the
    distance between the two poses is at least ``min_dist``.

    The distance between two poses depends on the criterion:

    - ``max``: the largest per-joint Euclidean distance, so a pose is kept as soon as one of its joints is
      ``min_dist`` apart from the corresponding joint of every kept pose
    - ``mean``: the average per-joint Euclidean distance

    If a skeleton is given, every pose is translated so that its torso center is at the origin before comparison.

    :param poses: the 3D poses to subsample
    :param min_dist: the distance threshold in millimeters, positive
    :param criterion: either 'max' or 'mean'
    :param skeleton: optional skeleton used to torso-center the poses
    :return: the indices of the kept poses, in input order
    """
    if not min_dist > 0:
        raise ValueError(f'min_dist must be positive, got {min_dist}.')
    if criterion not in ('max', 'mean'):
        raise ValueError(f'Unknown subsampling criterion {criterion!r}.')
    if not poses:
        return []

    stacked = np.stack([p.joints for p in poses])
    if skeleton is not None:
        stacked = stacked - stacked[:, list(skeleton.torso_joints)].mean(axis=1, keepdims=True)

    kept: List[int] = []
    kept_joints = np.empty((0,) + stacked.shape[1:])
    for index, joints in enumerate(stacked):
        if kept:
            per_joint = np.linalg.norm(kept_joints - joints, axis=2)
            dist = per_joint.max(axis=1) if criterion == 'max' else per_joint.mean(axis=1)
            if np.any(dist < min_dist):
                continue
        kept.append(index)
        kept_joints = np.concatenate([kept_joints, joints[None]])
    return kept


def sample_virtual_cameras(count: int,
                           azimuth_range: Tuple[float, float] = (0.0, 360.0),
                           elevation_range: Tuple[float, float] = (-45.0, 45.0),
                           distance: float = 5000.0,
                           focal: float = 1100.0,
                           seed: int = 0) -> List[Camera]:
    """
    Samples virtual cameras with azimuth and elevation drawn uniformly (in angle) from the given ranges.
    The result only depends on the arguments, so the same seed always yields the same cameras.

    :param count: the number of cameras, at least 1
    :param azimuth_range: the (low, high) azimuth range in degrees
    :param elevation_range: the (low, high) elevation range in degrees, within [-90, 90]
    :param distance: the camera distance from the torso center in millimeters
    :param focal: the focal length in pixels
    :param seed: the random seed
    :return: the list of sampled cameras
    """
    if count < 1:
        raise ValueError(f'At least one camera must be sampled, got {count}.')
    az_lo, az_hi = azimuth_range
    el_lo, el_hi = elevation_range
    if az_lo > az_hi or el_lo > el_hi:
        raise InvalidRange('Camera sampling ranges must not be empty.')
    if el_lo < -90.0 or el_hi > 90.0:
        raise InvalidRange(f'Elevation range [{el_lo}, {el_hi}] exceeds [-90, 90].')

    rng = np.random.default_rng(seed)
    azimuths = rng.uniform(az_lo, az_hi, size=count) if az_hi > az_lo else np.full(count, float(az_lo))
    elevations = rng.uniform(el_lo, el_hi, size=count) if el_hi > el_lo else np.full(count, float(el_lo))
    return [Camera(float(a), float(e), distance, focal) for a, e in zip(azimuths, elevations)]


def orient_and_center(p: Pose3D, cam: Camera, s: Skeleton) -> OrientedPose:
    """
    Expresses a world pose in the frame of the given camera, translated to the center of the torso:
    the output pose is R_cam (p - c), where c is the mean of the torso joints of p.

    :param p: the world pose
    :param cam: the camera
    :param s: the skeleton defining the torso joints
    :return: the oriented pose
    """
    centered = p.joints - p.torso_center(s.torso_joints)
    return OrientedPose(Pose3D(centered @ cam.rotation().T), cam)


def project(op: OrientedPose) -> Pose2D:
    """
    Projects an oriented pose with its camera, which lies at ``distance`` from the torso center along the optical
    axis. Every projected joint is visible.

    :param op: the oriented pose
    :return: the projected 2D pose in raw image pixels
    :raises BehindCamera: if a joint does not lie in front of the camera
    """
    cam = op.camera
    xyz = op.pose3d.joints
    depth = xyz[:, 2] + cam.distance
    if np.any(depth <= 0):
        raise BehindCamera(f'{int(np.sum(depth <= 0))} joints lie behind the camera.')
    uv = cam.focal * xyz[:, :2] / depth[:, None] + np.array(cam.principal_point)
    return Pose2D(uv)


def normalize_crop(p2d: Pose2D, canvas: int, margin: int) -> QueryPose:
    """
    Frames a 2D pose in a square canvas. The tight bounding box of the visible joints is scaled uniformly so that
    its larger side spans ``canvas - 2 * margin`` pixels, and centered in the canvas. No rotation is applied.

    :param p2d: the raw 2D pose
    :param canvas: the canvas side in pixels
    :param margin: the border in pixels
    :return: the framed query pose with its crop transform
    :raises DegeneratePose: if fewer than 2 joints are visible or all visible joints coincide
    """
    visible = p2d.joints[p2d.visibility]
    if len(visible) < 2:
        raise DegeneratePose('At least two visible joints are needed to frame a pose.')
    lo, hi = visible.min(axis=0), visible.max(axis=0)
    extent = float(np.max(hi - lo))
    if extent < 1e-9:
        raise DegeneratePose('All visible joints coincide.')

    scale = (canvas - 2 * margin) / extent
    center = (lo + hi) / 2.0
    tx, ty = canvas / 2.0 - scale * center
    crop = Transform2D(0.0, scale, (tx, ty))
    return QueryPose(p2d.transformed(crop), crop)
