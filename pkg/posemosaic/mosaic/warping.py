from dataclasses import dataclass, field
from typing import Optional
import numpy as np
from scipy import ndimage

from posemosaic.core import AnnotatedImage, Pose2D, Transform2D
from posemosaic.retrieval import Match

# Tolerance on source coordinates landing exactly on the last row or column.
_EDGE_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class WarpedCandidate:
    """
    A corpus image resampled onto the synthesis canvas by its alignment transform.

    Attributes
    ----------
    image : np.ndarray
        (canvas, canvas, 3) float raster of bilinearly resampled RGB values in [0, 255]
    valid : np.ndarray
        (canvas, canvas) boolean mask, False where the source coordinate falls outside the source image
    aligned_pose : Pose2D
        the source annotation mapped onto the canvas
    match : Optional[Match]
        the match the candidate was built from, if any
    """
    image: np.ndarray = field(repr=False)
    valid: np.ndarray = field(repr=False)
    aligned_pose: Pose2D
    match: Optional[Match] = None

    def __post_init__(self):
        self.image.setflags(write=False)
        self.valid.setflags(write=False)

    def clamped(self) -> np.ndarray:
        """
        Returns the image where every invalid pixel takes the value of the nearest valid pixel.
        A candidate without any valid pixel is black.
        """
        if self.valid.all():
            return self.image
        if not self.valid.any():
            return np.zeros_like(self.image)
        _, (rows, cols) = ndimage.distance_transform_edt(~self.valid, return_indices=True)
        return self.image[rows, cols]


def warp_image(src: AnnotatedImage, t: Transform2D, canvas: int, match: Optional[Match] = None) -> WarpedCandidate:
    """
    Resamples a source image onto the canvas with the transform t, which maps source pixels to canvas pixels.
    Every canvas pixel center (u, v) is mapped back with the inverse of t and the source is sampled bilinearly.

    A canvas pixel is valid when its source coordinate lies inside [0, W-1] x [0, H-1], i.e. when all the
    bilinear taps with a non-zero weight are in bounds.

    :param src: the source annotated image
    :param t: the transform from source to canvas pixels
    :param canvas: the canvas side in pixels
    :param match: the match the transform comes from, kept on the candidate
    :return: the warped candidate
    """
    inverse = t.inverse()
    v, u = np.mgrid[0:canvas, 0:canvas].astype(np.float64)
    xy = inverse.apply(np.stack([u.ravel(), v.ravel()], axis=1))
    xs, ys = xy[:, 0].reshape(canvas, canvas), xy[:, 1].reshape(canvas, canvas)

    height, width = src.height, src.width
    valid = (xs >= -_EDGE_EPS) & (xs <= width - 1 + _EDGE_EPS) & (ys >= -_EDGE_EPS) & (ys <= height - 1 + _EDGE_EPS)
    xs = np.clip(xs, 0, width - 1)
    ys = np.clip(ys, 0, height - 1)

    pixels = src.pixels.astype(np.float64)
    image = np.empty((canvas, canvas, 3))
    for channel in range(3):
        image[..., channel] = ndimage.map_coordinates(pixels[..., channel], [ys, xs], order=1, mode='nearest')
    return WarpedCandidate(image, valid, src.pose.transformed(t), match)
