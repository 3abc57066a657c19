import logging
import os
from dataclasses import dataclass, field
from typing import List, Optional
import numpy as np

from posemosaic.core import Pose2D, Skeleton
from posemosaic.mocap import QueryPose
from posemosaic.io import SynthRecord, read_png, write_png, write_index_png, draw_skeleton
from posemosaic.synthesis.engine import SynthesisEngine, SynthesisResult

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Intermediates:
    """
    The retained intermediate products of a synthesis, as needed by the preview.

    Attributes
    ----------
    maps : np.ndarray
        (n, canvas, canvas) probability maps
    indices : np.ndarray
        (canvas, canvas) index map
    mosaic : np.ndarray
        (canvas, canvas, 3) uint8 raw mosaic
    image : np.ndarray
        (canvas, canvas, 3) uint8 final image
    source_ids : List[str]
        the source id of every candidate
    """
    maps: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)
    mosaic: np.ndarray = field(repr=False)
    image: np.ndarray = field(repr=False)
    source_ids: List[str]

    @staticmethod
    def of(result: SynthesisResult) -> 'Intermediates':
        return Intermediates(np.stack([m.values for m in result.maps]), result.index_map.indices,
                             result.mosaic, result.image, list(result.source_ids()))


def save_intermediates(result: SynthesisResult, file_path: str):
    """
    Stores the intermediates of a synthesis in a compressed ``.npz`` archive.
    """
    data = Intermediates.of(result)
    os.makedirs(os.path.dirname(os.path.abspath(file_path)), exist_ok=True)
    with open(file_path, 'wb') as f:
        np.savez_compressed(f, maps=data.maps, indices=data.indices, mosaic=data.mosaic, image=data.image,
                            source_ids=np.array(data.source_ids, dtype=str))


def load_intermediates(file_path: str) -> Intermediates:
    with np.load(file_path, allow_pickle=False) as archive:
        return Intermediates(archive['maps'], archive['indices'], archive['mosaic'], archive['image'],
                             [str(s) for s in archive['source_ids']])


def render_preview(data: Intermediates, pose2d: Pose2D, s: Skeleton, item_id: str, output_dir: str) -> List[str]:
    """
    Writes the diagnostic images of a synthesized item: one grayscale probability map per candidate
    (value x 255), the paletted index map, the raw mosaic and the skeleton overlay on the final image.

    :param data: the intermediates of the item
    :param pose2d: the 2D pose of the item, on the canvas
    :param s: the skeleton
    :param item_id: the item id, prefix of every file name
    :param output_dir: the output directory
    :return: the written paths
    """
    paths = []
    for k, values in enumerate(data.maps):
        path = os.path.join(output_dir, f'{item_id}_prob_{k:02d}.png')
        write_png(path, np.rint(np.clip(values, 0.0, 1.0) * 255.0).astype(np.uint8))
        paths.append(path)
    path = os.path.join(output_dir, f'{item_id}_index.png')
    write_index_png(path, data.indices, len(data.maps))
    paths.append(path)
    path = os.path.join(output_dir, f'{item_id}_mosaic.png')
    write_png(path, data.mosaic)
    paths.append(path)
    path = os.path.join(output_dir, f'{item_id}_overlay.png')
    write_png(path, draw_skeleton(data.image, pose2d, s))
    paths.append(path)
    logger.info('Wrote %d preview images of %s to %s.', len(paths), item_id, output_dir)
    return paths


def intermediates_path(synth_dir: str, item_id: str) -> str:
    return os.path.join(synth_dir, 'intermediates', item_id + '.npz')


def preview_record(record: SynthRecord, synth_dir: str, s: Skeleton, output_dir: str,
                   engine: Optional[SynthesisEngine] = None) -> List[str]:
    """
    Writes the preview of a synthetic record, from its retained intermediates when they exist under
    ``<synth_dir>/intermediates/<id>.npz``, otherwise by synthesizing the record's query pose again.

    :param record: the synthetic record
    :param synth_dir: the directory of the synthetic manifest
    :param s: the skeleton
    :param output_dir: the preview directory
    :param engine: the engine used when no intermediates were retained
    :return: the written paths
    """
    stored = intermediates_path(synth_dir, record.id)
    if os.path.exists(stored):
        data = load_intermediates(stored)
    elif engine is None:
        raise ValueError(f'No intermediates retained for {record.id} and no engine to synthesize it again.')
    else:
        logger.info('No intermediates for %s, synthesizing it again.', record.id)
        result = engine.synthesize_query(QueryPose(record.pose2d, record.crop))
        image_path = os.path.join(synth_dir, record.image)
        data = Intermediates.of(result)
        if os.path.exists(image_path):
            data = Intermediates(data.maps, data.indices, data.mosaic, read_png(image_path), data.source_ids)
    return render_preview(data, record.pose2d, s, record.id, output_dir)
