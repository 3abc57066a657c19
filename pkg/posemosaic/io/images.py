import colorsys
import os
import tempfile
from typing import List, Optional, Tuple
import numpy as np
from PIL import Image, ImageDraw

from posemosaic.core import Pose2D, Skeleton

OVERLAY_JOINT_COLOR = (255, 255, 0)
OVERLAY_BONE_COLOR = (0, 255, 0)


def read_png(file_path: str) -> np.ndarray:
    """
    Reads an image as an (H, W, 3) uint8 RGB raster.
    """
    with Image.open(file_path) as image:
        return np.asarray(image.convert('RGB'), dtype=np.uint8).copy()


def _save(image: Image.Image, file_path: str):
    directory = os.path.dirname(os.path.abspath(file_path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix='.' + os.path.basename(file_path), suffix='.tmp', dir=directory)
    os.close(fd)
    try:
        image.save(tmp, format='PNG')
        os.replace(tmp, file_path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def write_png(file_path: str, pixels: np.ndarray):
    """
    Writes an (H, W, 3) uint8 RGB raster or an (H, W) uint8 grayscale raster as a PNG file.
    """
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    mode = 'L' if pixels.ndim == 2 else 'RGB'
    _save(Image.fromarray(pixels, mode=mode), file_path)


def palette(count: int) -> List[Tuple[int, int, int]]:
    """
    Returns ``count`` distinct colors evenly spread on the hue circle.
    """
    return [tuple(int(round(255 * c)) for c in colorsys.hsv_to_rgb(k / max(count, 1), 0.8, 0.95))
            for k in range(count)]


def write_index_png(file_path: str, indices: np.ndarray, count: int):
    """
    Writes an index raster as a paletted PNG with one color per candidate index.

    :param file_path: the path of the image
    :param indices: the (H, W) raster of indices in [0, count)
    :param count: the number of candidates, at most 256
    """
    if not 1 <= count <= 256:
        raise ValueError(f'A paletted image holds 1 to 256 colors, got {count}.')
    image = Image.fromarray(np.ascontiguousarray(indices, dtype=np.uint8), mode='P')
    image.putpalette([v for color in palette(count) for v in color])
    _save(image, file_path)


def draw_skeleton(pixels: np.ndarray, pose: Pose2D, s: Skeleton, radius: float = 2.0,
                  width: int = 1, joint_color: Optional[Tuple[int, int, int]] = None) -> np.ndarray:
    """
    Draws the visible bones and joints of a pose over a copy of an RGB raster.
    Joint discs are centered on the annotated coordinates.

    :param pixels: the (H, W, 3) uint8 raster
    :param pose: the pose, in the pixel frame of the raster
    :param s: the skeleton defining the bones
    :param radius: the joint disc radius in pixels
    :param width: the bone line width in pixels
    :param joint_color: the joint color, yellow by default
    :return: the overlay raster
    """
    image = Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8), mode='RGB')
    draw = ImageDraw.Draw(image)
    xy = pose.joints
    for a, b in s.edges:
        if pose.visibility[a] and pose.visibility[b]:
            draw.line([tuple(xy[a]), tuple(xy[b])], fill=OVERLAY_BONE_COLOR, width=width)
    for k in pose.visible_indices():
        x, y = xy[k]
        draw.ellipse([x - radius, y - radius, x + radius, y + radius], fill=joint_color or OVERLAY_JOINT_COLOR)
    return np.asarray(image, dtype=np.uint8).copy()
