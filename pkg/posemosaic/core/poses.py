from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union
import numpy as np
from scipy.spatial.transform import Rotation

from posemosaic.core.errors import JointCountMismatch, InvalidRange


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class Pose2D:
    """
    A 2D pose: n joint positions in pixels, with a visibility flag per joint.
    The image origin is the top-left corner, x grows to the right and y grows downwards.

    Poses are immutable value objects: the underlying arrays are read-only.

    Attributes
    ----------
    joints : np.ndarray
        an (n, 2) float array of (x, y) coordinates
    visibility : np.ndarray
        an (n,) boolean array, True for visible joints
    """
    joints: np.ndarray
    visibility: np.ndarray

    def __init__(self, joints: Union[np.ndarray, Sequence], visibility: Optional[Union[np.ndarray, Sequence]] = None):
        """
        Initializes a 2D pose. If no visibility is given, all joints are visible.

        :param joints: the (n, 2) joint coordinates
        :param visibility: the n visibility flags
        :raises ValueError: if shapes are inconsistent or a visible joint is not finite
        """
        joints = np.array(joints, dtype=np.float64).reshape(-1, 2)
        visibility = np.ones(len(joints), dtype=bool) if visibility is None \
            else np.array(visibility, dtype=bool).reshape(-1)
        if len(visibility) != len(joints):
            raise JointCountMismatch(f'{len(joints)} joints but {len(visibility)} visibility flags.')
        if not np.all(np.isfinite(joints[visibility])):
            raise ValueError('Visible joints must have finite coordinates.')
        self.joints = _frozen(joints)
        self.visibility = _frozen(visibility)

    @property
    def n(self) -> int:
        return len(self.joints)

    def visible_indices(self) -> np.ndarray:
        return np.flatnonzero(self.visibility)

    def transformed(self, t: 'Transform2D') -> 'Pose2D':
        """
        Returns the pose obtained by applying the given transform to every joint.
        Visibility flags are kept.

        :param t: the transform to apply
        :return: the transformed pose
        """
        return Pose2D(t.apply(self.joints), self.visibility)

    def with_visibility(self, visibility: Union[np.ndarray, Sequence]) -> 'Pose2D':
        return Pose2D(self.joints, visibility)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Pose2D):
            return False
        return np.array_equal(self.joints, other.joints) and np.array_equal(self.visibility, other.visibility)

    def __repr__(self) -> str:
        return f'Pose2D({self.n} joints, {int(self.visibility.sum())} visible)'


class Pose3D:
    """
    A 3D pose: n joint positions in millimeters, in a right-handed frame where x grows to the right,
    y grows downwards and z grows forwards (away from the camera).

    Attributes
    ----------
    joints : np.ndarray
        an (n, 3) read-only float array
    """
    joints: np.ndarray

    def __init__(self, joints: Union[np.ndarray, Sequence]):
        joints = np.array(joints, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(joints)):
            raise ValueError('3D joints must have finite coordinates.')
        self.joints = _frozen(joints)

    @property
    def n(self) -> int:
        return len(self.joints)

    def torso_center(self, torso_joints: Sequence[int]) -> np.ndarray:
        """
        Returns the mean position of the given torso joints.

        :param torso_joints: the torso joint indices, non-empty
        :return: a (3,) array
        """
        if len(torso_joints) == 0:
            raise ValueError('The torso must contain at least one joint.')
        return self.joints[list(torso_joints)].mean(axis=0)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Pose3D) and np.array_equal(self.joints, other.joints)

    def __repr__(self) -> str:
        return f'Pose3D({self.n} joints)'


@dataclass(frozen=True)
class Transform2D:
    """
    A 2D similarity transform x -> scale * R(rotation) * x + translation.

    Attributes
    ----------
    rotation : float
        the rotation angle in radians, counter-clockwise in a y-up frame
        (clockwise on screen since y grows downwards)
    scale : float
        the isotropic scale factor, strictly positive
    translation : Tuple[float, float]
        the (tx, ty) translation in pixels
    """
    rotation: float = 0.0
    scale: float = 1.0
    translation: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f'The scale of a transform must be positive, got {self.scale}.')
        object.__setattr__(self, 'rotation', float(self.rotation))
        object.__setattr__(self, 'scale', float(self.scale))
        object.__setattr__(self, 'translation', (float(self.translation[0]), float(self.translation[1])))

    @staticmethod
    def identity() -> 'Transform2D':
        return Transform2D()

    def linear(self) -> np.ndarray:
        """
        Returns the 2x2 linear part scale * R(rotation).
        """
        c, s = np.cos(self.rotation), np.sin(self.rotation)
        return self.scale * np.array([[c, -s], [s, c]])

    def matrix(self) -> np.ndarray:
        """
        Returns the 2x3 affine matrix of the transform.
        """
        return np.hstack([self.linear(), np.array(self.translation).reshape(2, 1)])

    def apply(self, points: Union[np.ndarray, Sequence]) -> np.ndarray:
        """
        Applies the transform to a (2,) point or an (m, 2) array of points.
        """
        points = np.asarray(points, dtype=np.float64)
        return points @ self.linear().T + np.array(self.translation)

    def compose(self, other: 'Transform2D') -> 'Transform2D':
        """
        Returns the transform equivalent to applying ``other`` first and then this transform.
        """
        tx, ty = self.apply(other.translation)
        return Transform2D(self.rotation + other.rotation, self.scale * other.scale, (tx, ty))

    def inverse(self) -> 'Transform2D':
        inv_scale = 1.0 / self.scale
        c, s = np.cos(-self.rotation), np.sin(-self.rotation)
        tx, ty = self.translation
        return Transform2D(-self.rotation, inv_scale,
                           (-inv_scale * (c * tx - s * ty), -inv_scale * (s * tx + c * ty)))


@dataclass(frozen=True)
class Camera:
    """
    A virtual pinhole camera looking at the torso center of a pose.

    The camera orbits the torso: ``azimuth`` rotates it about the vertical axis and ``elevation`` raises it above
    (positive) or below (negative) the horizontal plane. ``distance`` is measured from the torso center along the
    optical axis.

    Attributes
    ----------
    azimuth : float
        degrees
    elevation : float
        degrees, within [-90, 90]
    distance : float
        millimeters, positive
    focal : float
        pixels, positive
    principal_point : Tuple[float, float]
        the pixel where the optical axis meets the image plane
    """
    azimuth: float
    elevation: float
    distance: float = 5000.0
    focal: float = 1100.0
    principal_point: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not -90.0 <= self.elevation <= 90.0:
            raise InvalidRange(f'Elevation must lie in [-90, 90], got {self.elevation}.')
        if not self.distance > 0:
            raise ValueError(f'Camera distance must be positive, got {self.distance}.')
        if not self.focal > 0:
            raise ValueError(f'Camera focal must be positive, got {self.focal}.')
        object.__setattr__(self, 'principal_point',
                           (float(self.principal_point[0]), float(self.principal_point[1])))

    def rotation(self) -> np.ndarray:
        """
        Returns the 3x3 world-to-camera rotation.
        The azimuth rotates the world by -azimuth about the vertical (y) axis, then the elevation tilts it about
        the x axis, so that (azimuth=0, elevation=0) is the identity.
        """
        tilt = Rotation.from_euler('x', self.elevation, degrees=True)
        turn = Rotation.from_euler('y', -self.azimuth, degrees=True)
        return (tilt * turn).as_matrix()


@dataclass(frozen=True, eq=False)
class AnnotatedImage:
    """
    A real image with its 2D pose annotation.

    Attributes
    ----------
    id : str
        the unique identifier of the image in its corpus
    pixels : np.ndarray
        an (H, W, 3) uint8 RGB raster
    pose : Pose2D
        the annotation, in the pixel frame of the image
    """
    id: str
    pixels: np.ndarray = field(repr=False)
    pose: Pose2D

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 3 or pixels.shape[2] != 3 or pixels.dtype != np.uint8:
            raise ValueError(f'Image {self.id} must be an (H, W, 3) uint8 raster.')
        if pixels.flags.writeable:
            pixels = pixels.copy()
        object.__setattr__(self, 'pixels', _frozen(pixels))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def out_of_bounds_joints(self) -> np.ndarray:
        """
        Returns the indices of visible joints lying outside [0, W) x [0, H).
        """
        xy = self.pose.joints
        inside = (xy[:, 0] >= 0) & (xy[:, 0] < self.width) & (xy[:, 1] >= 0) & (xy[:, 1] < self.height)
        return np.flatnonzero(self.pose.visibility & ~inside)
