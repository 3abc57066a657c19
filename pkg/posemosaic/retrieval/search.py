from dataclasses import dataclass
from typing import List, Sequence, Tuple
import numpy as np

from posemosaic.core import Pose2D, Transform2D, Skeleton, AnnotatedImage, farthest_connected_joint
from posemosaic.core.errors import NoCandidate, NoVisibleNeighbor
from posemosaic.mocap import QueryPose
from posemosaic.retrieval.distance import batch_conditioned_distances, pose_arrays, BatchDistances


@dataclass(frozen=True)
class Match:
    """
    The annotated image retrieved for one query joint.

    Attributes
    ----------
    source_id : str
        the id of the retrieved corpus image
    corpus_index : int
        the position of the retrieved image in the corpus
    aligned_pose : Pose2D
        the annotation of the retrieved image after alignment onto the query
    transform : Transform2D
        the alignment transform, from corpus image pixels to canvas pixels
    distance : float
        the conditioned distance of the retrieved pose
    joint : int
        the query joint the image was retrieved for
    """
    source_id: str
    corpus_index: int
    aligned_pose: Pose2D
    transform: Transform2D
    distance: float
    joint: int

    def to_dict(self) -> dict:
        t = self.transform
        return {'source_id': self.source_id, 'joint': self.joint, 'distance': self.distance,
                'transform': {'rotation': t.rotation, 'scale': t.scale,
                              'tx': t.translation[0], 'ty': t.translation[1]}}


class CorpusArrays:
    """
    The annotations of a corpus stacked into arrays, with occluded joints zeroed.

    Attributes
    ----------
    ids : Tuple[str, ...]
        the corpus ids in corpus order
    xy : np.ndarray
        (N, n, 2) read-only coordinates
    visibility : np.ndarray
        (N, n) read-only visibility flags
    poses : Tuple[Pose2D, ...]
        the original annotations
    """

    def __init__(self, corpus: Sequence[AnnotatedImage]):
        if len(corpus) == 0:
            raise ValueError('The corpus must contain at least one annotated image.')
        arrays = [pose_arrays(entry.pose) for entry in corpus]
        self.ids = tuple(entry.id for entry in corpus)
        self.poses = tuple(entry.pose for entry in corpus)
        self.xy = np.stack([xy for xy, _ in arrays])
        self.visibility = np.stack([vis for _, vis in arrays])
        self.xy.setflags(write=False)
        self.visibility.setflags(write=False)

    def __len__(self) -> int:
        return len(self.ids)

    def match(self, batch: BatchDistances, row: int, corpus_index: int, joint: int) -> Match:
        transform = batch.transform(row)
        return Match(source_id=self.ids[corpus_index],
                     corpus_index=corpus_index,
                     aligned_pose=self.poses[corpus_index].transformed(transform),
                     transform=transform,
                     distance=float(batch.distances[row]),
                     joint=joint)


def best_row(distances: np.ndarray, indices: np.ndarray) -> int:
    """
    Returns the row of the smallest finite distance, ties broken by the smallest corpus index,
    or -1 if no distance is finite.
    """
    finite = np.isfinite(distances)
    if not finite.any():
        return -1
    rows = np.flatnonzero(finite)
    order = np.lexsort((indices[rows], distances[rows]))
    return int(rows[order[0]])


def search_joint(arrays: CorpusArrays, qp: QueryPose, s: Skeleton, j: int) -> Match:
    """
    Scans the whole corpus for the best match of query joint j.
    """
    p = qp.pose2d
    try:
        i = farthest_connected_joint(s, p, j)
    except NoVisibleNeighbor:
        raise NoCandidate(j)
    p_xy, p_vis = pose_arrays(p)
    batch = batch_conditioned_distances(p_xy, p_vis, arrays.xy, arrays.visibility, j, i)
    row = best_row(batch.distances, np.arange(len(arrays)))
    if row < 0:
        raise NoCandidate(j)
    return arrays.match(batch, row, row, j)


def retrieve_matches(qp: QueryPose, corpus: Sequence[AnnotatedImage], s: Skeleton) -> List[Match]:
    """
    Retrieves, for every visible joint j of the query pose, the corpus image whose annotation minimizes the
    conditioned distance D_j. Corpus entries that cannot be aligned on j are skipped, ties are broken by the
    smallest corpus index and the same entry may win several joints. Occluded query joints are not searched.

    This is the reference brute-force scan; :class:`RetrievalIndex` returns exactly the same matches.

    :param qp: the query pose
    :param corpus: the annotated images
    :param s: the skeleton
    :return: one match per visible query joint, in joint order
    :raises NoCandidate: if no corpus entry can be aligned on some visible joint
    """
    arrays = CorpusArrays(corpus)
    return [search_joint(arrays, qp, s, int(j)) for j in qp.pose2d.visible_indices()]
