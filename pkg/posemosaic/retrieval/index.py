import logging
from typing import Dict, List, Sequence, Tuple
import numpy as np
from scipy.spatial import cKDTree

from posemosaic.core import Skeleton, AnnotatedImage, farthest_connected_joint
from posemosaic.core.errors import NoCandidate, NoVisibleNeighbor
from posemosaic.mocap import QueryPose
from posemosaic.retrieval.distance import batch_conditioned_distances, pose_arrays, MIN_SEGMENT, \
    _inverse_distance_weights
from posemosaic.retrieval.search import CorpusArrays, Match, best_row, search_joint

logger = logging.getLogger(__name__)

# Relative and absolute slack on the pruning bound, far above the rounding error of the canonical frame.
_BOUND_RTOL = 1e-9
_BOUND_ATOL = 1e-9
_FIRST_BATCH = 16


def _canonical(xy: np.ndarray, j: int, i: int) -> np.ndarray:
    """
    Expresses (N, n, 2) poses in the frame where joint j is at the origin and joint i at (1, 0),
    flattened to (N, 2n) descriptors.
    """
    a = xy[:, i] - xy[:, j]
    len2 = a[:, 0] * a[:, 0] + a[:, 1] * a[:, 1]
    rel = xy - xy[:, j:j + 1]
    x = (rel[..., 0] * a[:, 0:1] + rel[..., 1] * a[:, 1:2]) / len2[:, None]
    y = (rel[..., 1] * a[:, 0:1] - rel[..., 0] * a[:, 1:2]) / len2[:, None]
    return np.stack([x, y], axis=2).reshape(len(xy), -1)


class RetrievalIndex:
    """
    An exact accelerated index answering the same queries as :func:`retrieve_matches`.

    For every directed skeleton edge (j, i) the index stores the fully visible corpus poses in the canonical frame
    pinning j at the origin and i at (1, 0), inside a KD-tree. Since the query is aligned in the same way, the
    conditioned distance of a corpus pose is bounded from below by L * w_min * |p_hat - q_hat|, where L is the
    length of the query segment, w_min the smallest query weight and |p_hat - q_hat| the Euclidean distance of
    the canonical descriptors. Candidates are visited in increasing descriptor distance and re-ranked with the
    exact distance until the bound exceeds the best distance found.

    Corpus poses with occluded joints are always re-ranked exactly, and queries with occluded joints fall back to
    the brute-force scan, so the retrieved matches are always identical to the brute-force ones.

    The index is immutable once built and can be queried concurrently.

    Attributes
    ----------
    skeleton : Skeleton
        the skeleton the index was built for
    arrays : CorpusArrays
        the stacked corpus annotations
    """
    skeleton: Skeleton
    arrays: CorpusArrays
    _trees: Dict[Tuple[int, int], Tuple[cKDTree, np.ndarray]]
    _partial: Dict[Tuple[int, int], np.ndarray]

    def __init__(self, corpus: Sequence[AnnotatedImage], skeleton: Skeleton):
        """
        Builds the index over the given corpus.

        :param corpus: the annotated images, non-empty
        :param skeleton: the skeleton defining the directed edges to index
        """
        self.skeleton = skeleton
        self.arrays = CorpusArrays(corpus)
        self._trees = dict()
        self._partial = dict()
        full = self.arrays.visibility.all(axis=1)
        for a, b in skeleton.edges:
            for j, i in ((a, b), (b, a)):
                seg = self.arrays.xy[:, i] - self.arrays.xy[:, j]
                usable = self.arrays.visibility[:, j] & self.arrays.visibility[:, i] & \
                    (np.sqrt(seg[:, 0] * seg[:, 0] + seg[:, 1] * seg[:, 1]) >= MIN_SEGMENT)
                indexed = np.flatnonzero(usable & full)
                self._partial[(j, i)] = np.flatnonzero(usable & ~full)
                if len(indexed):
                    descriptors = _canonical(self.arrays.xy[indexed], j, i)
                    self._trees[(j, i)] = (cKDTree(descriptors), indexed)
        logger.debug('Built retrieval index over %d poses and %d directed edges.', len(self.arrays), len(self._trees))

    def __len__(self) -> int:
        return len(self.arrays)

    def query(self, qp: QueryPose) -> List[Match]:
        """
        Retrieves one match per visible query joint, exactly as :func:`retrieve_matches` does.

        :param qp: the query pose
        :return: the matches in joint order
        :raises NoCandidate: if no corpus entry can be aligned on some visible joint
        """
        if not qp.pose2d.visibility.all():
            return [search_joint(self.arrays, qp, self.skeleton, int(j)) for j in qp.pose2d.visible_indices()]
        return [self._query_joint(qp, j) for j in range(qp.pose2d.n)]

    def _query_joint(self, qp: QueryPose, j: int) -> Match:
        p = qp.pose2d
        try:
            i = farthest_connected_joint(self.skeleton, p, j)
        except NoVisibleNeighbor:
            raise NoCandidate(j)
        p_xy, p_vis = pose_arrays(p)
        seg = p_xy[i] - p_xy[j]
        length = float(np.sqrt(seg[0] * seg[0] + seg[1] * seg[1]))
        if length < MIN_SEGMENT:
            raise NoCandidate(j)

        weights = _inverse_distance_weights(p_xy[None], p_vis[None], j)[0]
        w_min = float(np.min(np.delete(weights, j)))
        bound_factor = length * w_min

        evaluated: List[np.ndarray] = []
        distances: List[np.ndarray] = []
        batches = []

        def evaluate(indices: np.ndarray):
            if len(indices) == 0:
                return
            batch = batch_conditioned_distances(p_xy, p_vis, self.arrays.xy[indices],
                                                self.arrays.visibility[indices], j, i)
            evaluated.append(indices)
            distances.append(batch.distances)
            batches.append(batch)

        evaluate(self._partial.get((j, i), np.empty(0, dtype=int)))

        if (j, i) in self._trees:
            tree, indexed = self._trees[(j, i)]
            query = _canonical(p_xy[None], j, i)[0]
            seen = np.zeros(len(indexed), dtype=bool)
            k = min(_FIRST_BATCH, len(indexed))
            while True:
                dist, pos = tree.query(query, k=k)
                dist, pos = np.atleast_1d(dist), np.atleast_1d(pos)
                # Membership rather than rank: equal descriptor distances may come back in another order.
                fresh = pos[~seen[pos]]
                seen[fresh] = True
                evaluate(indexed[fresh])
                if k == len(indexed):
                    break
                best = min((float(np.min(d)) for d in distances if len(d)), default=np.inf)
                threshold = best * (1.0 + _BOUND_RTOL) + _BOUND_ATOL
                if bound_factor * float(dist[-1]) > threshold:
                    break
                k = min(2 * k, len(indexed))

        if not evaluated:
            raise NoCandidate(j)
        all_indices = np.concatenate(evaluated)
        all_distances = np.concatenate(distances)
        row = best_row(all_distances, all_indices)
        if row < 0:
            raise NoCandidate(j)
        offset = row
        for batch, indices in zip(batches, evaluated):
            if offset < len(indices):
                return self.arrays.match(batch, offset, int(indices[offset]), j)
            offset -= len(indices)
        raise NoCandidate(j)


def build_index(corpus: Sequence[AnnotatedImage], skeleton: Skeleton) -> RetrievalIndex:
    """
    Builds a :class:`RetrievalIndex` over the given corpus.
    """
    return RetrievalIndex(corpus, skeleton)


def query_index(index: RetrievalIndex, qp: QueryPose, s: Skeleton) -> List[Match]:
    """
    Queries a :class:`RetrievalIndex`. The skeleton must be the one the index was built for.
    """
    if s != index.skeleton:
        raise ValueError('The index was built for a different skeleton.')
    return index.query(qp)
