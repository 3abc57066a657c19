import json
import os
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple
import numpy as np

from posemosaic.core import Pose2D, Pose3D, Camera, Transform2D, Skeleton, AnnotatedImage, PoseRecord
from posemosaic.core.errors import ParseError, SchemaMismatch, JointCountMismatch
from posemosaic.clustering import PoseClass, ClusterModel
from posemosaic.mocap import OrientedPose, project
from posemosaic.io.images import read_png
from posemosaic.io.jsonl import RecordWriter, read_records, decode_records, atomic_write_text, FORMAT_VERSION

SKELETON_SCHEMA = 'posemosaic.skeleton'
CORPUS_SCHEMA = 'posemosaic.corpus'
POSES_SCHEMA = 'posemosaic.poses'
SYNTH_SCHEMA = 'posemosaic.synth'
CLUSTERS_SCHEMA = 'posemosaic.clusters'
CAMERAS_SCHEMA = 'posemosaic.cameras'

ROUND_TRIP_TOL = 1e-3


def _coords(array: np.ndarray) -> List[List[Optional[float]]]:
    # Non-finite coordinates, allowed on occluded joints, are written as null.
    return [[float(v) if np.isfinite(v) else None for v in row] for row in np.asarray(array)]


def _array(values: Sequence[Sequence[Optional[float]]], width: int) -> np.ndarray:
    array = np.array([[np.nan if v is None else float(v) for v in row] for row in values], dtype=np.float64)
    if array.size == 0:
        return array.reshape(0, width)
    if array.ndim != 2 or array.shape[1] != width:
        raise ValueError(f'expected rows of {width} coordinates')
    return array


# Skeleton descriptor

def skeleton_to_dict(s: Skeleton) -> Dict[str, Any]:
    return {'joints': list(s.joints),
            'edges': [list(e) for e in s.edges],
            'left_right_pairs': [list(p) for p in s.left_right_pairs],
            'torso_joints': list(s.torso_joints),
            'root': s.root}


def skeleton_from_dict(data: Dict[str, Any]) -> Skeleton:
    return Skeleton(data['joints'], [tuple(e) for e in data['edges']],
                    [tuple(p) for p in data.get('left_right_pairs', [])],
                    data.get('torso_joints', []), data.get('root', 0))


def write_skeleton(s: Skeleton, file_path: str):
    """
    Writes a skeleton descriptor: a JSON object with the fields joints, edges, left_right_pairs, torso_joints
    and root.
    """
    data = {'schema': SKELETON_SCHEMA, 'version': FORMAT_VERSION}
    data.update(skeleton_to_dict(s))
    atomic_write_text(file_path, json.dumps(data, indent=2) + '\n')


def read_skeleton(file_path: str) -> Skeleton:
    """
    Reads a skeleton descriptor. The skeleton is not validated, see :func:`validate_skeleton`.

    :raises ParseError: if the file is not a well-formed descriptor
    :raises SchemaMismatch: if the descriptor has an unsupported version
    """
    try:
        with open(file_path, encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, file_path, e.lineno) from e
    if not isinstance(data, dict):
        raise ParseError('a skeleton descriptor must be an object', file_path, 1)
    if data.get('schema', SKELETON_SCHEMA) != SKELETON_SCHEMA or data.get('version', FORMAT_VERSION) != FORMAT_VERSION:
        raise SchemaMismatch(f'{file_path}: unsupported skeleton descriptor {data.get("schema")} '
                             f'version {data.get("version")}.')
    try:
        return skeleton_from_dict(data)
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f'malformed skeleton descriptor: {e}', file_path, 1) from e


def _resolve_skeleton(reference: Optional[str], base_dir: str) -> Skeleton:
    return Skeleton.default() if not reference else read_skeleton(os.path.join(base_dir, reference))


# Corpus manifest

@dataclass(frozen=True)
class CorpusRecord:
    """
    An annotated image of a corpus manifest.

    Attributes
    ----------
    id : str
        the unique id of the image
    image : str
        the image path, relative to the manifest directory
    pose2d : Pose2D
        the annotation in image pixels
    """
    id: str
    image: str
    pose2d: Pose2D


@dataclass(frozen=True)
class CorpusManifest:
    """
    The list of annotated images of a corpus.

    Attributes
    ----------
    skeleton : Optional[str]
        the skeleton descriptor path relative to the manifest directory, None for the default skeleton
    records : Tuple[CorpusRecord, ...]
        the annotated images
    base_dir : str
        the directory relative paths are resolved against
    """
    skeleton: Optional[str]
    records: Tuple[CorpusRecord, ...]
    base_dir: str = '.'

    def __len__(self) -> int:
        return len(self.records)

    def image_path(self, record: CorpusRecord) -> str:
        return os.path.join(self.base_dir, record.image)

    def load_skeleton(self) -> Skeleton:
        return _resolve_skeleton(self.skeleton, self.base_dir)


def write_manifest(manifest: CorpusManifest, file_path: str):
    writer = RecordWriter(CORPUS_SCHEMA, {'skeleton': manifest.skeleton})
    for record in manifest.records:
        writer.add_record({'id': record.id, 'image': record.image,
                           'pose2d': _coords(record.pose2d.joints),
                           'visibility': [bool(v) for v in record.pose2d.visibility]})
    writer.write(file_path)


def read_manifest(file_path: str) -> CorpusManifest:
    """
    Reads a corpus manifest; relative paths are resolved against the manifest directory.

    :raises ParseError: if a record is malformed, naming its line and record index
    :raises SchemaMismatch: if the file is not a corpus manifest of a supported version
    """
    header, located = read_records(file_path, CORPUS_SCHEMA)
    records = decode_records(file_path, located, lambda d: CorpusRecord(
        str(d['id']), str(d['image']), Pose2D(_array(d['pose2d'], 2), d.get('visibility'))))
    return CorpusManifest(header.get('skeleton'), tuple(records), os.path.dirname(os.path.abspath(file_path)))


def load_corpus(manifest: CorpusManifest) -> List[AnnotatedImage]:
    """
    Reads the images of a manifest, in manifest order.
    """
    return [AnnotatedImage(r.id, read_png(manifest.image_path(r)), r.pose2d) for r in manifest.records]


# Pose records (MoCap, predictions, ground truth)

def pose_record_to_dict(record: PoseRecord) -> Dict[str, Any]:
    data = {'id': record.id, 'joints3d_mm': _coords(record.pose3d.joints)}
    if record.pose2d is not None:
        data['joints2d_px'] = _coords(record.pose2d.joints)
        data['visibility'] = [bool(v) for v in record.pose2d.visibility]
    return data


def pose_record_from_dict(data: Dict[str, Any]) -> PoseRecord:
    pose2d = None
    if data.get('joints2d_px') is not None:
        pose2d = Pose2D(_array(data['joints2d_px'], 2), data.get('visibility'))
    return PoseRecord(str(data['id']), Pose3D(_array(data['joints3d_mm'], 3)), pose2d)


def write_pose_records(records: Sequence[PoseRecord], file_path: str, skeleton: Optional[str] = None):
    """
    Writes pose records: one {id, joints3d_mm, joints2d_px?, visibility?} object per line.
    """
    writer = RecordWriter(POSES_SCHEMA, {'skeleton': skeleton})
    for record in records:
        writer.add_record(pose_record_to_dict(record))
    writer.write(file_path)


def read_pose_records(file_path: str, s: Optional[Skeleton] = None) -> List[PoseRecord]:
    """
    Reads pose records.

    :param s: if given, the skeleton every pose must match
    :raises JointCountMismatch: if a pose does not have the joint count of the skeleton
    """
    _, located = read_records(file_path, POSES_SCHEMA)
    records = decode_records(file_path, located, pose_record_from_dict)
    if s is not None:
        for record in records:
            if record.pose3d.n != s.n:
                raise JointCountMismatch(f'{file_path}: pose {record.id} has {record.pose3d.n} joints, '
                                         f'the skeleton has {s.n}.')
    return records


# Cameras

def camera_to_dict(cam: Camera) -> Dict[str, Any]:
    return {'azimuth': cam.azimuth, 'elevation': cam.elevation, 'distance': cam.distance, 'focal': cam.focal,
            'principal_point': list(cam.principal_point)}


def camera_from_dict(data: Dict[str, Any]) -> Camera:
    return Camera(float(data['azimuth']), float(data['elevation']), float(data['distance']),
                  float(data['focal']), tuple(data.get('principal_point', (0.0, 0.0))))


def write_cameras(cameras: Sequence[Camera], file_path: str):
    writer = RecordWriter(CAMERAS_SCHEMA)
    for cam in cameras:
        writer.add_record(camera_to_dict(cam))
    writer.write(file_path)


def read_cameras(file_path: str) -> List[Camera]:
    _, located = read_records(file_path, CAMERAS_SCHEMA)
    return decode_records(file_path, located, camera_from_dict)


# Synthetic records

@dataclass(frozen=True)
class SynthRecord:
    """
    A synthetic image with its 3D and 2D poses.

    Attributes
    ----------
    id : str
        the item id
    image : str
        the image path, relative to the manifest directory
    pose3d : Pose3D
        the oriented, torso-centered 3D pose (mm)
    pose2d : Pose2D
        the 2D pose on the canvas (px)
    camera : Camera
        the virtual camera
    crop : Transform2D
        the transform from projected to canvas pixels
    source_ids : Tuple[str, ...]
        the corpus ids retrieved for every visible joint, in joint order
    class_id : Optional[int]
        the pose class of the record, if clustered
    """
    id: str
    image: str
    pose3d: Pose3D
    pose2d: Pose2D
    camera: Camera
    crop: Transform2D
    source_ids: Tuple[str, ...] = field(default_factory=tuple)
    class_id: Optional[int] = None

    def with_class(self, class_id: Optional[int]) -> 'SynthRecord':
        return replace(self, class_id=class_id)


def synth_record_to_dict(record: SynthRecord) -> Dict[str, Any]:
    t = record.crop
    return {'id': record.id, 'image': record.image,
            'pose3d_mm': _coords(record.pose3d.joints),
            'pose2d_px': _coords(record.pose2d.joints),
            'visibility': [bool(v) for v in record.pose2d.visibility],
            'camera': camera_to_dict(record.camera),
            'crop': {'rotation': t.rotation, 'scale': t.scale, 'tx': t.translation[0], 'ty': t.translation[1]},
            'class_id': record.class_id,
            'source_ids': list(record.source_ids)}


def synth_record_from_dict(data: Dict[str, Any]) -> SynthRecord:
    crop = data['crop']
    class_id = data.get('class_id')
    return SynthRecord(str(data['id']), str(data['image']),
                       Pose3D(_array(data['pose3d_mm'], 3)),
                       Pose2D(_array(data['pose2d_px'], 2), data.get('visibility')),
                       camera_from_dict(data['camera']),
                       Transform2D(float(crop['rotation']), float(crop['scale']),
                                   (float(crop['tx']), float(crop['ty']))),
                       tuple(str(s) for s in data.get('source_ids', [])),
                       None if class_id is None else int(class_id))


def write_synth_records(records: Sequence[SynthRecord], file_path: str, header: Optional[Dict[str, Any]] = None):
    writer = RecordWriter(SYNTH_SCHEMA, header)
    for record in records:
        writer.add_record(synth_record_to_dict(record))
    writer.write(file_path)


def read_synth_records(file_path: str) -> Tuple[Dict[str, Any], List[SynthRecord]]:
    """
    Reads a synthetic manifest.

    :return: the header and the records
    """
    header, located = read_records(file_path, SYNTH_SCHEMA)
    return header, decode_records(file_path, located, synth_record_from_dict)


def reprojection_error(record: SynthRecord) -> float:
    """
    Returns the largest distance (px) between the visible 2D joints of a record and the projection of its 3D
    pose through the stored camera and crop.
    """
    reprojected = project(OrientedPose(record.pose3d, record.camera)).transformed(record.crop)
    visible = record.pose2d.visibility
    if not visible.any():
        return 0.0
    return float(np.max(np.linalg.norm(reprojected.joints[visible] - record.pose2d.joints[visible], axis=1)))


def check_round_trip(record: SynthRecord, tol: float = ROUND_TRIP_TOL) -> bool:
    """
    Checks that the 2D pose of a record is the projection and crop of its 3D pose within ``tol`` pixels.
    """
    return reprojection_error(record) <= tol


# Cluster models

def write_cluster_model(model: ClusterModel, file_path: str, skeleton: Optional[str] = None):
    """
    Writes a cluster model: K, seed, objective, objective history and skeleton reference in the header, then one
    record per class with its member count and centroids.
    """
    writer = RecordWriter(CLUSTERS_SCHEMA, {'k': model.k, 'seed': model.seed, 'objective': model.objective,
                                            'history': list(model.history), 'skeleton': skeleton})
    for c in model.classes:
        writer.add_record({'id': c.id, 'member_count': c.member_count,
                           'centroid3d_mm': _coords(c.centroid3d.joints),
                           'centroid2d_px': _coords(c.centroid2d.joints)})
    writer.write(file_path)


def read_cluster_model(file_path: str) -> ClusterModel:
    """
    Reads a cluster model. The per-pose assignment is not stored, so the model has an empty assignment.
    """
    header, located = read_records(file_path, CLUSTERS_SCHEMA)
    classes = decode_records(file_path, located, lambda d: PoseClass(
        int(d['id']), Pose3D(_array(d['centroid3d_mm'], 3)), Pose2D(_array(d['centroid2d_px'], 2)),
        int(d['member_count'])))
    if [c.id for c in classes] != list(range(len(classes))) or header.get('k') != len(classes):
        raise ParseError(f'expected classes 0..{header.get("k")} in id order', file_path)
    return ClusterModel(tuple(classes), np.empty(0, dtype=np.int64), float(header['objective']),
                        tuple(float(v) for v in header.get('history', [])), int(header['seed']))
