import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple
import numpy as np

from posemosaic.core import AnnotatedImage, Camera, Pose3D, Skeleton, SynthConfig, CameraSampling, PoseRecord
from posemosaic.core.errors import Degenerate
from posemosaic.mocap import OrientedPose, QueryPose, orient_and_center, project, normalize_crop, \
    sample_virtual_cameras
from posemosaic.retrieval import Match, RetrievalIndex, build_index
from posemosaic.mosaic import WarpedCandidate, ProbabilityMap, IndexMap, warp_image, probability_map, index_map, \
    compose_mosaic
from posemosaic.blending import BlendWeights, blend_weights, blend
from posemosaic.utilities import item_seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SynthItem:
    """
    One (pose, camera) pair to synthesize.

    Attributes
    ----------
    id : str
        the item id, ``<pose id>_c<camera number>``
    pose_id : str
        the id of the MoCap pose
    pose3d : Pose3D
        the world pose (mm)
    camera : Camera
        the virtual camera
    """
    id: str
    pose_id: str
    pose3d: Pose3D
    camera: Camera


def plan_items(poses: Sequence[PoseRecord], sampling: CameraSampling, seed: int) -> List[SynthItem]:
    """
    Lists the items of a synthesis run: ``sampling.count`` virtual cameras per pose, drawn with a seed derived
    from the global seed and the pose id, so that the cameras of a pose do not depend on the other poses.

    :param poses: the MoCap poses
    :param sampling: the camera sampling parameters
    :param seed: the global seed
    :return: the items, pose by pose
    """
    items = []
    for record in poses:
        cameras = sample_virtual_cameras(sampling.count, sampling.azimuth_range, sampling.elevation_range,
                                         sampling.distance, sampling.focal, item_seed(seed, record.id))
        items += [SynthItem(f'{record.id}_c{k:03d}', record.id, record.pose3d, cam) for k, cam in enumerate(cameras)]
    return items


@dataclass(frozen=True, eq=False)
class SynthesisResult:
    """
    The output of one synthesis and all its intermediate products.

    Attributes
    ----------
    query : QueryPose
        the query pose on the canvas
    oriented : Optional[OrientedPose]
        the oriented 3D pose, None when synthesizing from a 2D query only
    matches : Tuple[Match, ...]
        one match per visible query joint
    candidates : Tuple[WarpedCandidate, ...]
        the warped images of the matches
    maps : Tuple[ProbabilityMap, ...]
        the probability map of every candidate
    index_map : IndexMap
        the per-pixel winning candidate
    mosaic : np.ndarray
        the raw (canvas, canvas, 3) uint8 mosaic
    weights : BlendWeights
        the blending weights
    image : np.ndarray
        the final (canvas, canvas, 3) uint8 image
    """
    query: QueryPose
    oriented: Optional[OrientedPose]
    matches: Tuple[Match, ...]
    candidates: Tuple[WarpedCandidate, ...] = field(repr=False)
    maps: Tuple[ProbabilityMap, ...] = field(repr=False)
    index_map: IndexMap = field(repr=False)
    mosaic: np.ndarray = field(repr=False)
    weights: BlendWeights = field(repr=False)
    image: np.ndarray = field(repr=False)

    def source_ids(self) -> Tuple[str, ...]:
        return tuple(m.source_id for m in self.matches)


class SynthesisEngine:
    """
    Synthesizes images of novel poses from a corpus of annotated images.

    For a query pose the engine retrieves, for every visible joint, the corpus image whose pose locally matches
    best, warps it onto the canvas, rasterizes its probability map, picks the most probable candidate at every
    pixel and finally blends the candidates with weights driven by the local histogram of the winners.

    The engine holds no mutable state: one engine can synthesize concurrently from several threads.

    Attributes
    ----------
    corpus : Tuple[AnnotatedImage, ...]
        the annotated images
    skeleton : Skeleton
        the skeleton of the corpus poses
    config : SynthConfig
        the synthesis parameters
    index : RetrievalIndex
        the retrieval index over the corpus

    Examples
    --------
    Synthesizing one view of a 3D pose::

        engine = SynthesisEngine(load_corpus(manifest), manifest.load_skeleton(), SynthConfig())
        result = engine.synthesize(pose3d, Camera(azimuth=30.0, elevation=10.0))
        write_png('item.png', result.image)
    """
    corpus: Tuple[AnnotatedImage, ...]
    skeleton: Skeleton
    config: SynthConfig
    index: RetrievalIndex

    def __init__(self, corpus: Sequence[AnnotatedImage], skeleton: Skeleton, config: SynthConfig = SynthConfig(),
                 index: Optional[RetrievalIndex] = None):
        """
        :param corpus: the annotated images, non-empty
        :param skeleton: the skeleton
        :param config: the synthesis parameters
        :param index: a prebuilt index over the same corpus, built if None
        """
        self.corpus = tuple(corpus)
        self.skeleton = skeleton
        self.config = config
        self.index = build_index(self.corpus, skeleton) if index is None else index
        if len(self.index) != len(self.corpus):
            raise ValueError('The retrieval index was built over another corpus.')

    def synthesize(self, pose3d: Pose3D, camera: Camera) -> SynthesisResult:
        """
        Synthesizes the view of a world pose from a virtual camera.

        :param pose3d: the world pose (mm)
        :param camera: the virtual camera
        :return: the synthesis result
        :raises BehindCamera: if the pose does not lie in front of the camera
        :raises DegeneratePose: if the projected pose cannot be framed
        :raises NoCandidate: if some joint has no usable corpus image
        """
        oriented = orient_and_center(pose3d, camera, self.skeleton)
        query = normalize_crop(project(oriented), self.config.canvas, self.config.margin)
        return self.synthesize_query(query, oriented)

    def synthesize_query(self, query: QueryPose, oriented: Optional[OrientedPose] = None) -> SynthesisResult:
        """
        Synthesizes an image for a 2D query pose already framed in the canvas.
        """
        cfg = self.config
        matches = tuple(self.index.query(query))
        candidates = tuple(warp_image(self.corpus[m.corpus_index], m.transform, cfg.canvas, m) for m in matches)
        maps = tuple(self._probability_map(c, query) for c in candidates)
        im = index_map(maps, [m.distance for m in matches])
        mosaic = compose_mosaic(candidates, im)
        weights = blend_weights(im, query, cfg.blend, s=self.skeleton)
        image = blend(candidates, weights)
        return SynthesisResult(query, oriented, matches, candidates, maps, im, mosaic, weights, image)

    def _probability_map(self, candidate: WarpedCandidate, query: QueryPose) -> ProbabilityMap:
        try:
            return probability_map(candidate, query, self.config.sigma)
        except Degenerate:
            # The candidate can still win pixels through the smallest-distance fallback.
            logger.debug('Degenerate probability map for %s, using zeros.', candidate.match.source_id)
            return ProbabilityMap.zeros(self.config.canvas)
