import logging
import os
from typing import List, Optional, Sequence, Tuple
import numpy as np
from scipy import ndimage
from tqdm import tqdm

from posemosaic.core import Pose2D, Camera, Skeleton
from posemosaic.mocap import random_pose3d, orient_and_center, project, normalize_crop
from posemosaic.io.formats import CorpusManifest, CorpusRecord, write_manifest, write_skeleton
from posemosaic.io.images import palette, write_png

logger = logging.getLogger(__name__)

LIMB_RADIUS = 4.0
HEAD_RADIUS = 9.0
STICK_MARGIN = 20
STICK_ELEVATION = (-30.0, 30.0)


def capsule_mask(height: int, width: int, a: Sequence[float], b: Sequence[float], radius: float) -> np.ndarray:
    """
    Rasterizes the capsule of the given radius around segment (a, b): a pixel is inside when the distance from
    its center to the segment is at most the radius.
    """
    v, u = np.mgrid[0:height, 0:width].astype(np.float64)
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    edge = b - a
    length2 = float(edge @ edge)
    if length2 == 0:
        t = np.zeros_like(u)
    else:
        t = np.clip(((u - a[0]) * edge[0] + (v - a[1]) * edge[1]) / length2, 0.0, 1.0)
    du, dv = u - (a[0] + t * edge[0]), v - (a[1] + t * edge[1])
    return du * du + dv * dv <= radius * radius


def textured_background(canvas: int, rng: np.random.Generator) -> np.ndarray:
    """
    Generates a smooth random color field with faint stripes, as an (canvas, canvas, 3) uint8 raster.
    """
    coarse = rng.uniform(40.0, 215.0, size=(6, 6, 3))
    field = ndimage.zoom(coarse, (canvas / 6.0, canvas / 6.0, 1.0), order=1)[:canvas, :canvas]
    angle = rng.uniform(0.0, np.pi)
    period = rng.uniform(8.0, 24.0)
    v, u = np.mgrid[0:canvas, 0:canvas].astype(np.float64)
    stripes = 15.0 * np.sin(2 * np.pi * (u * np.cos(angle) + v * np.sin(angle)) / period)
    return np.clip(np.rint(field + stripes[..., None]), 0, 255).astype(np.uint8)


def render_stick_figure(pose: Pose2D, depth: np.ndarray, s: Skeleton, background: np.ndarray,
                        colors: Sequence[Tuple[int, int, int]], limb_radius: float = LIMB_RADIUS,
                        head_radius: float = HEAD_RADIUS) -> np.ndarray:
    """
    Paints a stick figure over a background: one capsule per bone, farthest bones first, and a disc on the
    root joint. The annotated joints are the capsule endpoints.

    :param pose: the 2D pose in pixels
    :param depth: the depth of every joint, larger is farther
    :param s: the skeleton defining the bones
    :param background: the (H, W, 3) uint8 background
    :param colors: one color per bone, plus one for the root disc
    :param limb_radius: the capsule radius
    :param head_radius: the root disc radius
    :return: the rendered raster
    """
    image = background.copy()
    height, width = image.shape[:2]
    order = sorted(range(len(s.edges)), key=lambda e: (-float(depth[list(s.edges[e])].mean()), e))
    for e in order:
        a, b = s.edges[e]
        image[capsule_mask(height, width, pose.joints[a], pose.joints[b], limb_radius)] = colors[e]
    root = pose.joints[s.root]
    image[capsule_mask(height, width, root, root, head_radius)] = colors[len(s.edges)]
    return image


def _occlude(image: np.ndarray, pose: Pose2D, rate: float, s: Skeleton, rng: np.random.Generator) -> Pose2D:
    hidden = rng.uniform(size=pose.n) < rate
    hidden[s.root] = False
    if not hidden.any():
        return pose
    for k in np.flatnonzero(hidden):
        x, y = np.rint(pose.joints[k]).astype(int)
        image[max(y - 8, 0):y + 9, max(x - 8, 0):x + 9] = 128
    return pose.with_visibility(pose.visibility & ~hidden)


def generate_stick_corpus(count: int,
                          s: Skeleton,
                          canvas: int,
                          seed: int,
                          output_dir: str,
                          occlusion_rate: float = 0.0,
                          progress: bool = False) -> CorpusManifest:
    """
    Generates a corpus of randomized articulated stick figures with exact 2D annotations.

    Every figure is a random 3D pose seen from a random camera, framed in the canvas and rendered with capsule
    limbs of per-limb colors over a textured background. With a positive occlusion rate, joints are randomly
    hidden behind gray patches and marked occluded. The output only depends on the arguments.

    Writes ``skeleton.json``, ``manifest`` and ``images/<id>.png`` under the output directory.

    :param count: the number of images, at least 1
    :param s: the skeleton
    :param canvas: the image side in pixels
    :param seed: the random seed
    :param output_dir: the corpus directory
    :param occlusion_rate: the probability of hiding each non-root joint
    :param progress: if True, shows a progress bar on standard error
    :return: the written manifest
    """
    if count < 1:
        raise ValueError(f'At least one image must be generated, got {count}.')
    if not 0.0 <= occlusion_rate < 1.0:
        raise ValueError(f'The occlusion rate must lie in [0, 1), got {occlusion_rate}.')
    rng = np.random.default_rng(seed)
    base_colors = palette(len(s.edges) + 1)
    records: List[CorpusRecord] = []
    for index in tqdm(range(count), desc='stick figures', disable=not progress):
        record_id = f'stick_{index:05d}'
        pose3d = random_pose3d(s, rng)
        cam = Camera(float(rng.uniform(0.0, 360.0)), float(rng.uniform(*STICK_ELEVATION)))
        oriented = orient_and_center(pose3d, cam, s)
        query = normalize_crop(project(oriented), canvas, STICK_MARGIN)
        shade = rng.uniform(0.7, 1.0)
        colors = [tuple(int(round(c * shade)) for c in color) for color in base_colors]
        image = render_stick_figure(query.pose2d, oriented.pose3d.joints[:, 2], s,
                                    textured_background(canvas, rng), colors)
        pose = _occlude(image, query.pose2d, occlusion_rate, s, rng) if occlusion_rate > 0 else query.pose2d
        image_path = os.path.join('images', record_id + '.png')
        write_png(os.path.join(output_dir, image_path), image)
        records.append(CorpusRecord(record_id, image_path, pose))

    write_skeleton(s, os.path.join(output_dir, 'skeleton.json'))
    manifest = CorpusManifest('skeleton.json', tuple(records), os.path.abspath(output_dir))
    write_manifest(manifest, os.path.join(output_dir, 'manifest'))
    logger.info('Generated %d stick figures in %s.', count, output_dir)
    return manifest
