from typing import Dict, List, Tuple
import numpy as np
from scipy.spatial.transform import Rotation

from posemosaic.core import Pose3D, Skeleton

# Standing pose of the default skeleton (mm), torso-centered, y pointing down.
_TEMPLATE: Dict[str, Tuple[float, float, float]] = {
    'head': (0.0, -620.0, 0.0),
    'l_shoulder': (180.0, -420.0, 0.0), 'r_shoulder': (-180.0, -420.0, 0.0),
    'l_elbow': (210.0, -130.0, 0.0), 'r_elbow': (-210.0, -130.0, 0.0),
    'l_wrist': (230.0, 120.0, 0.0), 'r_wrist': (-230.0, 120.0, 0.0),
    'l_hip': (110.0, 60.0, 0.0), 'r_hip': (-110.0, 60.0, 0.0),
    'l_knee': (120.0, 480.0, 0.0), 'r_knee': (-120.0, 480.0, 0.0),
    'l_ankle': (125.0, 890.0, 0.0), 'r_ankle': (-125.0, 890.0, 0.0),
}

_GENERIC_BONE = 250.0


def _template_offsets(s: Skeleton) -> Dict[Tuple[int, int], np.ndarray]:
    if all(name in _TEMPLATE for name in s.joints):
        rest = np.array([_TEMPLATE[name] for name in s.joints])
        return {(a, b): rest[b] - rest[a] for a, b in s.bfs_edges()}
    # Unknown joint sets hang every bone downwards from its parent.
    return {(a, b): np.array([0.0, _GENERIC_BONE, 0.0]) for a, b in s.bfs_edges()}


def random_pose3d(s: Skeleton,
                  rng: np.random.Generator,
                  max_limb_angle: float = 75.0,
                  size_jitter: float = 0.1) -> Pose3D:
    """
    Generates a random articulated 3D pose for the given skeleton.

    Bones between torso joints, and bones from the root to a torso joint, keep their rest orientation so that the
    torso stays rigid. Every other bone is rotated, together with all the bones below it, by a random rotation of
    at most ``max_limb_angle`` degrees. The whole body is finally scaled by a random factor around 1.

    For the default skeleton the rest pose is a standing person; other joint sets use bones of 250 mm
    hanging from their parent.

    :param s: the skeleton
    :param rng: the random generator
    :param max_limb_angle: the maximum rotation angle of a limb bone with respect to its parent, in degrees
    :param size_jitter: the relative amplitude of the random body scale
    :return: the generated pose, with its torso center at the origin
    """
    offsets = _template_offsets(s)
    torso = set(s.torso_joints)
    joints = np.zeros((s.n, 3))
    frames: Dict[int, Rotation] = {s.root: Rotation.identity()}
    for parent, child in s.bfs_edges():
        frame = frames[parent]
        rigid = child in torso and (parent in torso or parent == s.root)
        if not rigid:
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            angle = np.deg2rad(rng.uniform(0.0, max_limb_angle))
            frame = frame * Rotation.from_rotvec(axis * angle)
        frames[child] = frame
        joints[child] = joints[parent] + frame.apply(offsets[(parent, child)])

    joints *= 1.0 + rng.uniform(-size_jitter, size_jitter)
    if torso:
        joints -= joints[sorted(torso)].mean(axis=0)
    return Pose3D(joints)


def random_poses3d(s: Skeleton, count: int, seed: int, **kwargs) -> List[Pose3D]:
    """
    Generates ``count`` random poses with :func:`random_pose3d` from a single seeded generator.
    """
    rng = np.random.default_rng(seed)
    return [random_pose3d(s, rng, **kwargs) for _ in range(count)]
