import os
from typing import List

from posemosaic.core import Skeleton, validate_skeleton
from posemosaic.core.errors import PoseMosaicError
from posemosaic.io.formats import CorpusManifest
from posemosaic.io.images import read_png


def validate_manifest(manifest: CorpusManifest, s: Skeleton = None, check_images: bool = True) -> List[str]:
    """
    Checks a corpus manifest and returns the list of violations, empty if the manifest is valid.

    The checked invariants are: the skeleton is well-formed, ids are unique, every record has as many joints as
    the skeleton, every visible joint lies inside its image and every image file exists and is readable.

    :param manifest: the manifest to validate
    :param s: the skeleton, the one referenced by the manifest if None
    :param check_images: if False, image files are neither opened nor bound-checked
    :return: the violations
    """
    violations = []
    if s is None:
        try:
            s = manifest.load_skeleton()
        except (OSError, PoseMosaicError) as e:
            return [f'skeleton cannot be read: {e}']
    violations += [f'skeleton: {v}' for v in validate_skeleton(s)]

    seen = set()
    for index, record in enumerate(manifest.records):
        where = f'record {index} ({record.id})'
        if record.id in seen:
            violations.append(f'{where}: duplicate id')
        seen.add(record.id)
        if record.pose2d.n != s.n:
            violations.append(f'{where}: {record.pose2d.n} joints, skeleton has {s.n}')
        if not check_images:
            continue
        path = manifest.image_path(record)
        if not os.path.isfile(path):
            violations.append(f'{where}: missing image {record.image}')
            continue
        try:
            height, width = read_png(path).shape[:2]
        except OSError as e:
            violations.append(f'{where}: unreadable image {record.image}: {e}')
            continue
        xy = record.pose2d.joints[record.pose2d.visibility]
        if ((xy[:, 0] < 0) | (xy[:, 0] >= width) | (xy[:, 1] < 0) | (xy[:, 1] >= height)).any():
            violations.append(f'{where}: visible joints outside the {width}x{height} image')
    return violations
