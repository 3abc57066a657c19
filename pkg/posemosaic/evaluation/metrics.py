from collections import OrderedDict
from typing import Dict, List, Optional, Tuple, Union
import numpy as np
from scipy.optimize import minimize
from scipy.spatial.transform import Rotation

from posemosaic.core import Pose2D, Pose3D, Skeleton
from posemosaic.core.errors import Degenerate, JointCountMismatch

ALIGNMENT_MODES = ('rigid', 'similarity')

# Joint groups of the pixel error, each matched by name fragments.
JOINT_GROUPS: Tuple[Tuple[str, Tuple[str, ...]], ...] = (
    ('feet', ('ankle', 'foot', 'toe')),
    ('knees', ('knee',)),
    ('hips', ('hip',)),
    ('hands', ('wrist', 'hand')),
    ('elbows', ('elbow',)),
    ('shoulders', ('shoulder',)),
    ('head', ('head', 'neck', 'nose')),
)

# Ratio between the second and first singular values below which a point set is collinear.
_COLLINEAR_RTOL = 1e-9
# Mean distance (mm) below which an alignment is exact and needs no refinement.
_REFINE_ATOL = 1e-9


def _check_counts(pred, gt):
    if pred.n != gt.n:
        raise JointCountMismatch(f'Predicted pose has {pred.n} joints, ground truth has {gt.n}.')


def mpjpe_abs(pred: Pose3D, gt: Pose3D, s: Skeleton) -> float:
    """
    Computes the absolute mean per-joint position error (mm): both poses are translated so that their torso center
    is at the origin, then the joint distances are averaged. Rotation and scale are not corrected.

    :param pred: the predicted pose
    :param gt: the ground-truth pose
    :param s: the skeleton defining the torso
    :return: the error in millimeters
    :raises JointCountMismatch: if the poses have a different number of joints
    """
    _check_counts(pred, gt)
    if not s.torso_joints:
        raise ValueError('The torso must contain at least one joint.')
    return _centered_error(pred.joints, gt.joints, list(s.torso_joints))


def _centered_error(p: np.ndarray, g: np.ndarray, torso: List[int]) -> float:
    centered = (p - p[torso].mean(axis=0)) - (g - g[torso].mean(axis=0))
    return float(np.mean(np.linalg.norm(centered, axis=1)))


def _procrustes(pred: np.ndarray, gt: np.ndarray, mode: str) -> Tuple[float, np.ndarray, np.ndarray]:
    if mode not in ALIGNMENT_MODES:
        raise ValueError(f'Unknown alignment mode {mode}, expected one of {ALIGNMENT_MODES}.')
    if len(gt) < 3:
        raise Degenerate(f'At least 3 joints are needed for alignment, got {len(gt)}.')
    mu_p, mu_g = pred.mean(axis=0), gt.mean(axis=0)
    x, y = pred - mu_p, gt - mu_g
    for points in (x, y):
        sv = np.linalg.svd(points, compute_uv=False)
        if sv[0] == 0 or sv[1] <= _COLLINEAR_RTOL * sv[0]:
            raise Degenerate('The joints are collinear.')

    u, sv, vt = np.linalg.svd(x.T @ y)
    d = np.ones(3)
    d[2] = np.sign(np.linalg.det(vt.T @ u.T)) or 1.0
    rotation = vt.T @ np.diag(d) @ u.T
    scale = float(np.sum(sv * d) / np.sum(x * x)) if mode == 'similarity' else 1.0
    return scale, rotation, mu_g - scale * rotation @ mu_p


def align_poses(pred: np.ndarray, gt: np.ndarray, mode: str = 'rigid') -> np.ndarray:
    """
    Aligns the (n, 3) predicted joints onto the ground truth in the least-squares sense with the closed-form
    orthogonal Procrustes solution: rotation and translation, plus an isotropic scale in similarity mode.
    Reflections are excluded by forcing the determinant of the rotation to be positive.

    :param pred: the predicted joints
    :param gt: the ground-truth joints
    :param mode: 'rigid' or 'similarity'
    :return: the aligned predicted joints
    :raises Degenerate: if either point set is collinear or has fewer than 3 joints
    """
    scale, rotation, translation = _procrustes(pred, gt, mode)
    return scale * pred @ rotation.T + translation


def _mean_distance(params: np.ndarray, pred: np.ndarray, gt: np.ndarray) -> float:
    # params: rotation vector, translation and, in similarity mode, the log of the scale.
    scale = np.exp(params[6]) if len(params) > 6 else 1.0
    rotation = Rotation.from_rotvec(params[:3]).as_matrix()
    return float(np.mean(np.linalg.norm(scale * pred @ rotation.T + params[3:6] - gt, axis=1)))


def _params(scale: float, rotation: np.ndarray, translation: np.ndarray, mode: str) -> np.ndarray:
    params = np.concatenate([Rotation.from_matrix(rotation).as_rotvec(), translation])
    return np.append(params, np.log(scale)) if mode == 'similarity' else params


def _best_alignment(pred: np.ndarray, gt: np.ndarray, mode: str, starts: List[np.ndarray]) -> float:
    errors = [_mean_distance(x0, pred, gt) for x0 in starts]
    best = int(np.argmin(errors))
    if errors[best] <= _REFINE_ATOL:
        return errors[best]
    refined = minimize(_mean_distance, starts[best], args=(pred, gt), method='Powell',
                       options={'xtol': 1e-8, 'ftol': 1e-12, 'maxfev': 20000})
    return min(errors[best], float(refined.fun))


def mpjpe_aligned(pred: Pose3D, gt: Pose3D, mode: str = 'rigid', s: Optional[Skeleton] = None) -> float:
    """
    Computes the mean per-joint position error (mm) after aligning the prediction onto the ground truth.

    The closed-form least-squares alignment of :func:`align_poses` minimizes the squared distances, not their
    mean. It is therefore refined against the mean distance, starting from the better of the least-squares
    alignment and the torso centering of :func:`mpjpe_abs`. The similarity alignment also starts from the rigid
    one. The error never exceeds that of a start, so the rigid error is at most the absolute error and the
    similarity error at most the rigid error.

    :param pred: the predicted pose
    :param gt: the ground-truth pose
    :param mode: 'rigid' or 'similarity'
    :param s: the skeleton defining the torso, the default one if None and the poses have its joint count,
        otherwise the mean of all joints is the center
    :return: the error in millimeters
    :raises JointCountMismatch: if the poses have a different number of joints
    :raises Degenerate: if the joints are collinear
    """
    _check_counts(pred, gt)
    if mode not in ALIGNMENT_MODES:
        raise ValueError(f'Unknown alignment mode {mode}, expected one of {ALIGNMENT_MODES}.')
    p, g = pred.joints, gt.joints
    ls_rigid = _procrustes(p, g, 'rigid')
    if s is None:
        default = Skeleton.default()
        s = default if default.n == gt.n else None
    elif s.n != gt.n:
        raise JointCountMismatch(f'Skeleton has {s.n} joints, poses have {gt.n}.')
    torso = list(s.torso_joints) if s is not None and s.torso_joints else list(range(gt.n))
    centering = (1.0, np.eye(3), g[torso].mean(axis=0) - p[torso].mean(axis=0))
    rigid = _best_alignment(p, g, 'rigid', [_params(*ls_rigid, 'rigid'), _params(*centering, 'rigid')])
    rigid = min(rigid, _centered_error(p, g, torso))
    if mode == 'rigid':
        return rigid
    ls_similarity = _procrustes(p, g, 'similarity')
    starts = [_params(*ls_similarity, 'similarity'), _params(*ls_rigid, 'similarity'),
              _params(*centering, 'similarity')]
    return min(rigid, _best_alignment(p, g, 'similarity', starts))


def joint_groups(s: Skeleton) -> Dict[str, List[int]]:
    """
    Returns the joint indices of every pixel error group, by joint name. Groups without joints are omitted.
    """
    groups = OrderedDict()
    for name, fragments in JOINT_GROUPS:
        members = [k for k, joint in enumerate(s.joints) if any(f in joint.lower() for f in fragments)]
        if members:
            groups[name] = members
    return groups


def pixel_error(pred: Pose2D, gt: Pose2D, per_joint: bool = False,
                s: Optional[Skeleton] = None) -> Union[float, Dict[str, float]]:
    """
    Computes the 2D pose error in pixels on the normalized canvas, over the joints visible in the ground truth.

    :param pred: the predicted pose
    :param gt: the ground-truth pose
    :param per_joint: if True, returns the mean error of every joint group (feet, knees, hips, hands, elbows,
        shoulders, head) instead of the overall mean
    :param s: the skeleton naming the joints, the default one if None
    :return: the mean error, or the mean error of every group having evaluated joints
    :raises JointCountMismatch: if the poses have a different number of joints
    """
    _check_counts(pred, gt)
    errors = np.linalg.norm(pred.joints - gt.joints, axis=1)
    evaluated = gt.visibility.copy()
    if not per_joint:
        if not evaluated.any():
            raise ValueError('The ground truth has no visible joint.')
        return float(np.mean(errors[evaluated]))
    s = Skeleton.default() if s is None else s
    if s.n != gt.n:
        raise JointCountMismatch(f'Skeleton has {s.n} joints, poses have {gt.n}.')
    result = OrderedDict()
    for name, members in joint_groups(s).items():
        members = [k for k in members if evaluated[k]]
        if members:
            result[name] = float(np.mean(errors[members]))
    return result
