from dataclasses import dataclass, field, asdict
from typing import Any, Dict, Tuple

from posemosaic.core.errors import InvalidRange


@dataclass(frozen=True)
class BlendConfig:
    """
    Sizing rule of the square blending regions: the side grows linearly with the distance from the pose,
    from ``s_min`` on the skeleton up to ``s_max``.

    Attributes
    ----------
    s_min : int
        side length in pixels of the regions lying on the skeleton
    s_max : int
        maximum side length in pixels
    alpha : float
        pixels of side growth per pixel of distance from the skeleton
    """
    s_min: int = 3
    s_max: int = 21
    alpha: float = 0.2

    def __post_init__(self):
        if not 1 <= self.s_min <= self.s_max:
            raise ValueError(f'Region sizes must satisfy 1 <= s_min <= s_max, got {self.s_min}, {self.s_max}.')
        if self.alpha < 0:
            raise ValueError(f'Region growth alpha must be non-negative, got {self.alpha}.')


@dataclass(frozen=True)
class SynthConfig:
    """
    Parameters of the synthesis of a single image.

    Attributes
    ----------
    canvas : int
        side length in pixels of the square synthetic image
    margin : int
        minimum distance in pixels between the pose bounding box and the canvas border
    sigma : float
        bandwidth in pixels of the probability maps
    blend : BlendConfig
        the blending region sizing rule
    seed : int
        the global seed from which per-item seeds are derived
    """
    canvas: int = 220
    margin: int = 10
    sigma: float = 15.0
    blend: BlendConfig = field(default_factory=BlendConfig)
    seed: int = 0

    def __post_init__(self):
        if self.canvas <= 0:
            raise ValueError(f'Canvas size must be positive, got {self.canvas}.')
        if not 0 <= 2 * self.margin < self.canvas:
            raise ValueError(f'Margin {self.margin} does not fit a canvas of {self.canvas} pixels.')
        if not self.sigma > 0:
            raise ValueError(f'Sigma must be positive, got {self.sigma}.')

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> 'SynthConfig':
        data = dict(data)
        blend = data.pop('blend', None)
        return SynthConfig(blend=BlendConfig(**blend) if blend else BlendConfig(), **data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class CameraSampling:
    """
    Parameters of the virtual cameras sampled for every MoCap pose.

    Attributes
    ----------
    count : int
        the number of cameras per pose
    azimuth_range : Tuple[float, float]
        the azimuth range in degrees
    elevation_range : Tuple[float, float]
        the elevation range in degrees, within [-90, 90]
    distance : float
        the camera distance from the torso center (mm)
    focal : float
        the focal length (px)
    """
    count: int = 2
    azimuth_range: Tuple[float, float] = (0.0, 360.0)
    elevation_range: Tuple[float, float] = (-45.0, 45.0)
    distance: float = 5000.0
    focal: float = 1100.0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f'At least one camera per pose is needed, got {self.count}.')
        object.__setattr__(self, 'azimuth_range', tuple(float(v) for v in self.azimuth_range))
        object.__setattr__(self, 'elevation_range', tuple(float(v) for v in self.elevation_range))
        el_lo, el_hi = self.elevation_range
        if not -90.0 <= el_lo <= el_hi <= 90.0:
            raise InvalidRange(f'Elevation range [{el_lo}, {el_hi}] is empty or exceeds [-90, 90].')
        if self.azimuth_range[0] > self.azimuth_range[1]:
            raise InvalidRange(f'Azimuth range {self.azimuth_range} is empty.')

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> 'CameraSampling':
        return CameraSampling(**data)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['azimuth_range'] = list(self.azimuth_range)
        data['elevation_range'] = list(self.elevation_range)
        return data
