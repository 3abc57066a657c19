import logging
import os
from typing import Optional
import numpy as np

from posemosaic.core import Pose2D, Skeleton
from posemosaic.io.formats import CorpusManifest, CorpusRecord
from posemosaic.io.images import read_png, write_png

logger = logging.getLogger(__name__)

MIRROR_SUFFIX = '_mirror'


def mirrored_id(record_id: str) -> str:
    """
    Returns the id of the mirrored copy of a record: the suffix ``_mirror`` is appended, or removed if present,
    so that mirroring twice gives back the original id.
    """
    if record_id.endswith(MIRROR_SUFFIX):
        return record_id[:-len(MIRROR_SUFFIX)]
    return record_id + MIRROR_SUFFIX


def mirror_pose(pose: Pose2D, width: int, s: Skeleton) -> Pose2D:
    """
    Mirrors a 2D pose horizontally inside an image of the given width: x' = W - 1 - x, and every left joint
    exchanges its coordinates and visibility with its right counterpart.
    """
    if pose.n != s.n:
        raise ValueError(f'Pose with {pose.n} joints, skeleton with {s.n}.')
    perm = s.mirror_permutation()
    flipped = pose.joints.copy()
    flipped[:, 0] = (width - 1) - flipped[:, 0]
    return Pose2D(flipped[perm], pose.visibility[perm])


def mirror_record(record: CorpusRecord, width: int, s: Skeleton, image_dir: str = 'images') -> CorpusRecord:
    new_id = mirrored_id(record.id)
    return CorpusRecord(new_id, os.path.join(image_dir, new_id + '.png'), mirror_pose(record.pose2d, width, s))


def mirror_corpus(manifest: CorpusManifest, s: Skeleton, output_dir: Optional[str] = None) -> CorpusManifest:
    """
    Doubles a corpus with horizontally flipped copies of its images. The mirrored records are appended after the
    original ones, in the same order, and their flipped images are written under ``images/`` of the output
    directory. Flipping permutes pixel columns, so mirroring is an exact involution.

    :param manifest: the corpus manifest
    :param s: the skeleton, which must define left/right pairs
    :param output_dir: the directory of the new manifest, the one of the input manifest if None
    :return: the doubled manifest, with image paths relative to the output directory
    """
    if not s.left_right_pairs:
        raise ValueError('Mirroring requires a skeleton with left/right pairs.')
    output_dir = manifest.base_dir if output_dir is None else os.path.abspath(output_dir)
    ids = {r.id for r in manifest.records}
    clashes = [mirrored_id(r.id) for r in manifest.records if mirrored_id(r.id) in ids]
    if clashes:
        raise ValueError(f'Mirrored ids already present in the corpus: {", ".join(clashes[:10])}.')

    originals, mirrored = [], []
    for record in manifest.records:
        source_path = manifest.image_path(record)
        pixels = read_png(source_path)
        mirror = mirror_record(record, pixels.shape[1], s)
        write_png(os.path.join(output_dir, mirror.image), pixels[:, ::-1])
        image = os.path.relpath(source_path, output_dir)
        originals.append(CorpusRecord(record.id, image, record.pose2d))
        mirrored.append(mirror)
    logger.info('Mirrored %d images into %s.', len(mirrored), output_dir)
    return CorpusManifest(_relocated(manifest, output_dir), tuple(originals + mirrored), output_dir)


def _relocated(manifest: CorpusManifest, output_dir: str) -> Optional[str]:
    if not manifest.skeleton:
        return None
    return os.path.relpath(os.path.join(manifest.base_dir, manifest.skeleton), output_dir)
