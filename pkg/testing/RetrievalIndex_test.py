import unittest
import numpy as np

from posemosaic import Skeleton, Pose2D, Transform2D, AnnotatedImage, Camera
from posemosaic.mocap import QueryPose, random_pose3d, orient_and_center, project, normalize_crop
from posemosaic.retrieval import build_index, query_index, retrieve_matches


class RetrievalIndexTest(unittest.TestCase):

    def setUp(self):
        self.skeleton = Skeleton.default()
        self.rng = np.random.default_rng(23)
        self.corpus = [self._sample_entry(f'stick_{k:05d}', self._sample_pose(occlusion=0.1 if k % 5 == 0 else 0.0))
                       for k in range(300)]
        self.index = build_index(self.corpus, self.skeleton)

    def _sample_pose(self, occlusion: float = 0.0) -> Pose2D:
        pose3d = random_pose3d(self.skeleton, self.rng)
        cam = Camera(float(self.rng.uniform(0.0, 360.0)), float(self.rng.uniform(-45.0, 45.0)))
        pose = normalize_crop(project(orient_and_center(pose3d, cam, self.skeleton)), 220, 10).pose2d
        if occlusion > 0:
            visibility = self.rng.random(pose.n) >= occlusion
            visibility[0] = True
            pose = pose.with_visibility(visibility)
        return pose

    @staticmethod
    def _sample_entry(entry_id: str, pose: Pose2D) -> AnnotatedImage:
        return AnnotatedImage(entry_id, np.zeros((4, 4, 3), dtype=np.uint8), pose)

    def _assert_same_matches(self, expected, actual):
        self.assertEqual(len(expected), len(actual))
        for e, a in zip(expected, actual):
            self.assertEqual(e.joint, a.joint)
            self.assertEqual(e.corpus_index, a.corpus_index)
            self.assertEqual(e.source_id, a.source_id)
            self.assertEqual(e.distance, a.distance)
            self.assertEqual(e.transform, a.transform)

    def test_length(self):
        self.assertEqual(300, len(self.index))

    def test_index_matches_brute_force(self):
        for _ in range(60):
            query = QueryPose(self._sample_pose(), Transform2D.identity())
            self._assert_same_matches(retrieve_matches(query, self.corpus, self.skeleton), self.index.query(query))

    def test_index_matches_brute_force_occluded_queries(self):
        for _ in range(20):
            query = QueryPose(self._sample_pose(occlusion=0.2), Transform2D.identity())
            try:
                expected = retrieve_matches(query, self.corpus, self.skeleton)
            except ValueError as e:
                self.assertRaises(type(e), self.index.query, query)
                continue
            self._assert_same_matches(expected, self.index.query(query))

    def test_index_finds_corpus_pose(self):
        for k in (1, 42, 299):
            matches = self.index.query(QueryPose(self.corpus[k].pose, Transform2D.identity()))
            self.assertEqual({k}, {m.corpus_index for m in matches})

    def test_query_index_skeleton_mismatch(self):
        other = Skeleton(self.skeleton.joints, self.skeleton.edges, self.skeleton.left_right_pairs,
                         self.skeleton.torso_joints, root=1)
        query = QueryPose(self._sample_pose(), Transform2D.identity())
        self.assertRaises(ValueError, query_index, self.index, query, other)
        self.assertEqual(13, len(query_index(self.index, query, self.skeleton)))

    def test_empty_corpus(self):
        self.assertRaises(ValueError, build_index, [], self.skeleton)


if __name__ == '__main__':
    unittest.main()
