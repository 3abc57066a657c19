import unittest
import numpy as np

from posemosaic import Skeleton, Pose2D, Transform2D, AnnotatedImage, Camera
from posemosaic.core import OccludedJoint, DegenerateSegment, AllOccluded, NoCandidate, farthest_connected_joint
from posemosaic.mocap import QueryPose, random_pose3d, orient_and_center, project, normalize_crop
from posemosaic.retrieval import joint_weights, alignment_transform, conditioned_distance, retrieve_matches


class RetrievalTest(unittest.TestCase):

    def setUp(self):
        self.skeleton = Skeleton.default()
        self.rng = np.random.default_rng(17)

    def _sample_pose(self) -> Pose2D:
        pose3d = random_pose3d(self.skeleton, self.rng)
        cam = Camera(float(self.rng.uniform(0.0, 360.0)), float(self.rng.uniform(-30.0, 30.0)))
        return normalize_crop(project(orient_and_center(pose3d, cam, self.skeleton)), 220, 10).pose2d

    def _sample_similarity(self) -> Transform2D:
        return Transform2D(self.rng.uniform(-np.pi, np.pi), self.rng.uniform(0.3, 3.0),
                           tuple(self.rng.uniform(-300.0, 300.0, 2)))

    @staticmethod
    def _sample_entry(entry_id: str, pose: Pose2D) -> AnnotatedImage:
        return AnnotatedImage(entry_id, np.zeros((4, 4, 3), dtype=np.uint8), pose)

    def test_joint_weights(self):
        pose = self._sample_pose()
        for j in range(pose.n):
            w = joint_weights(pose, j).weights
            self.assertAlmostEqual(1.0, float(w.sum()))
            self.assertEqual(0.0, w[j])
            self.assertTrue(np.all(w >= 0.0))

    def test_joint_weights_inverse_distance(self):
        pose = Pose2D([[0.0, 0.0], [10.0, 0.0], [0.0, 30.0], [0.5, 0.0]])
        w = joint_weights(pose, 0).weights
        np.testing.assert_allclose(np.array([0.0, 0.1, 1.0 / 30.0, 1.0]) / (0.1 + 1.0 / 30.0 + 1.0), w)

    def test_joint_weights_occlusion(self):
        pose = Pose2D([[0.0, 0.0], [10.0, 0.0], [0.0, 30.0]], [True, False, True])
        np.testing.assert_allclose([0.0, 0.0, 1.0], joint_weights(pose, 0).weights)
        self.assertRaises(OccludedJoint, joint_weights, pose, 1)
        self.assertRaises(AllOccluded, joint_weights, pose.with_visibility([True, False, False]), 0)

    def test_alignment_pins_segment(self):
        for _ in range(1000):
            p, q = self._sample_pose(), self._sample_pose()
            j = int(self.rng.integers(p.n))
            i = farthest_connected_joint(self.skeleton, p, j)
            t = alignment_transform(p, q, j, i)
            np.testing.assert_allclose(p.joints[j], t.apply(q.joints[j]), atol=1e-6)
            np.testing.assert_allclose(p.joints[i], t.apply(q.joints[i]), atol=1e-6)

    def test_alignment_errors(self):
        p = Pose2D([[0.0, 0.0], [10.0, 0.0]])
        self.assertRaises(OccludedJoint, alignment_transform, p, p.with_visibility([True, False]), 0, 1)
        self.assertRaises(DegenerateSegment, alignment_transform, p, Pose2D([[3.0, 3.0], [3.0, 3.0]]), 0, 1)

    def test_distance_to_itself(self):
        for _ in range(1000):
            p = self._sample_pose()
            j = int(self.rng.integers(p.n))
            distance, t = conditioned_distance(p, p, j, self.skeleton)
            self.assertAlmostEqual(0.0, distance, places=9)
            self.assertEqual(Transform2D.identity(), t)

    def test_distance_similarity_invariant(self):
        for _ in range(1000):
            p = self._sample_pose()
            t = self._sample_similarity()
            j = int(self.rng.integers(p.n))
            distance, alignment = conditioned_distance(p, p.transformed(t), j, self.skeleton)
            self.assertLess(distance, 1e-6)
            np.testing.assert_allclose(p.joints, alignment.apply(t.apply(p.joints)), atol=1e-6)

    @staticmethod
    def _straight_line_distance(p: np.ndarray, q: np.ndarray, j: int, i: int) -> float:
        # Fully visible poses; the similarity pinning q_j, q_i onto p_j, p_i as a complex affine map.
        pc, qc = p[:, 0] + 1j * p[:, 1], q[:, 0] + 1j * q[:, 1]
        aligned = pc[j] + (pc[i] - pc[j]) / (qc[i] - qc[j]) * (qc - qc[j])
        total = 0.0
        wp = [0.0 if k == j else 1.0 / max(abs(pc[k] - pc[j]), 1.0) for k in range(len(p))]
        wq = [0.0 if k == j else 1.0 / max(abs(qc[k] - qc[j]), 1.0) for k in range(len(q))]
        for k in range(len(p)):
            total += (wp[k] / sum(wp) + wq[k] / sum(wq)) * abs(pc[k] - aligned[k])
        return total

    def _farthest_neighbor(self, p: np.ndarray, j: int) -> int:
        neighbors = sorted(self.skeleton.neighbors(j))
        return max(neighbors, key=lambda k: np.hypot(*(p[k] - p[j])))

    def test_distance_of_a_bent_chain(self):
        chain = Skeleton(('a', 'b', 'c'), [(0, 1), (1, 2)])
        p = Pose2D([[0.0, 0.0], [10.0, 0.0], [20.0, 0.0]])
        q = Pose2D([[0.0, 0.0], [10.0, 0.0], [20.0, 5.0]])
        distance, t = conditioned_distance(p, q, 0, chain)
        self.assertAlmostEqual(5.0 * (1.0 / 3.0 + (1.0 / np.hypot(20.0, 5.0)) / (0.1 + 1.0 / np.hypot(20.0, 5.0))),
                               distance, places=12)
        self.assertAlmostEqual(3.2998248402, distance, places=9)
        self.assertAlmostEqual(self._straight_line_distance(p.joints, q.joints, 0, 1), distance, places=12)
        np.testing.assert_allclose(q.joints, t.apply(q.joints), atol=1e-12)

    def test_distance_matches_straight_line_formula(self):
        for _ in range(1000):
            p, q = self._sample_pose(), self._sample_pose()
            j = int(self.rng.integers(p.n))
            i = self._farthest_neighbor(p.joints, j)
            expected = self._straight_line_distance(p.joints, q.joints, j, i)
            distance, _ = conditioned_distance(p, q, j, self.skeleton)
            self.assertAlmostEqual(expected, distance, delta=1e-9 * max(1.0, expected))

    def test_retrieve_matches_brute_force_winners(self):
        poses = [self._sample_pose() for _ in range(40)]
        poses += [poses[k] for k in self.rng.integers(0, 40, 10)]
        poses = [poses[k] for k in self.rng.permutation(len(poses))]
        corpus = [self._sample_entry(f'e{k:02d}', pose) for k, pose in enumerate(poses)]
        for _ in range(20):
            query = self._sample_pose()
            matches = retrieve_matches(QueryPose(query, Transform2D.identity()), corpus, self.skeleton)
            for m in matches:
                i = self._farthest_neighbor(query.joints, m.joint)
                distances = [self._straight_line_distance(query.joints, pose.joints, m.joint, i) for pose in poses]
                winner = int(np.argmin(distances))
                self.assertEqual(winner, m.corpus_index)
                self.assertEqual(f'e{winner:02d}', m.source_id)
                self.assertAlmostEqual(distances[winner], m.distance, delta=1e-9 * max(1.0, distances[winner]))

    def test_distance_positive(self):
        p, q = self._sample_pose(), self._sample_pose()
        distance, _ = conditioned_distance(p, q, 5, self.skeleton)
        self.assertGreater(distance, 0.0)

    def test_distance_ignores_occluded_candidate_joints(self):
        p = self._sample_pose()
        joints = p.joints.copy()
        joints[12] += 40.0
        visibility = np.ones(13, dtype=bool)
        visibility[12] = False
        distance, _ = conditioned_distance(p, Pose2D(joints, visibility), 0, self.skeleton)
        self.assertLess(distance, 1e-9)

    def test_retrieve_exact_source(self):
        poses = [self._sample_pose() for _ in range(20)]
        corpus = [self._sample_entry(f'e{k}', pose) for k, pose in enumerate(poses)]
        query = QueryPose(poses[7], Transform2D.identity())
        matches = retrieve_matches(query, corpus, self.skeleton)
        self.assertEqual(13, len(matches))
        for j, m in enumerate(matches):
            self.assertEqual(j, m.joint)
            self.assertEqual('e7', m.source_id)
            self.assertEqual(7, m.corpus_index)
            self.assertLess(m.distance, 1e-9)
            np.testing.assert_array_equal(poses[7].joints, m.aligned_pose.joints)

    def test_retrieve_ties_smallest_index(self):
        pose = self._sample_pose()
        corpus = [self._sample_entry('a', self._sample_pose()), self._sample_entry('b', pose),
                  self._sample_entry('c', pose)]
        matches = retrieve_matches(QueryPose(pose, Transform2D.identity()), corpus, self.skeleton)
        self.assertEqual({'b'}, {m.source_id for m in matches})

    def test_retrieve_skips_occluded_query_joints(self):
        pose = self._sample_pose()
        visibility = np.ones(13, dtype=bool)
        visibility[[5, 6]] = False
        corpus = [self._sample_entry('a', pose)]
        matches = retrieve_matches(QueryPose(pose.with_visibility(visibility), Transform2D.identity()),
                                   corpus, self.skeleton)
        self.assertEqual([0, 1, 2, 3, 4, 7, 8, 9, 10, 11, 12], [m.joint for m in matches])

    def test_retrieve_no_candidate(self):
        pose = self._sample_pose()
        visibility = np.ones(13, dtype=bool)
        visibility[5] = False
        corpus = [self._sample_entry('a', pose.with_visibility(visibility))]
        with self.assertRaises(NoCandidate) as context:
            retrieve_matches(QueryPose(pose, Transform2D.identity()), corpus, self.skeleton)
        # The wrist itself or the elbow, when the wrist is its farthest neighbor.
        self.assertIn(context.exception.joint, (3, 5))


if __name__ == '__main__':
    unittest.main()
