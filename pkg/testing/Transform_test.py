import unittest
import numpy as np

from posemosaic import Pose2D, Pose3D, Transform2D, Camera, AnnotatedImage, PoseRecord, SynthConfig, BlendConfig, \
    CameraSampling
from posemosaic.core import InvalidRange, JointCountMismatch


class TransformTest(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(7)

    def _sample_transform(self) -> Transform2D:
        return Transform2D(self.rng.uniform(-np.pi, np.pi), self.rng.uniform(0.2, 5.0),
                           tuple(self.rng.uniform(-100.0, 100.0, 2)))

    def test_apply(self):
        t = Transform2D(np.pi / 2, 2.0, (1.0, 1.0))
        np.testing.assert_allclose([1.0, 3.0], t.apply([1.0, 0.0]), atol=1e-12)

    def test_inverse(self):
        for _ in range(50):
            t = self._sample_transform()
            points = self.rng.uniform(-200.0, 200.0, (5, 2))
            np.testing.assert_allclose(points, t.inverse().apply(t.apply(points)), atol=1e-9)

    def test_compose(self):
        for _ in range(50):
            a, b = self._sample_transform(), self._sample_transform()
            points = self.rng.uniform(-200.0, 200.0, (5, 2))
            np.testing.assert_allclose(a.apply(b.apply(points)), a.compose(b).apply(points), atol=1e-9)

    def test_identity(self):
        points = self.rng.uniform(-10.0, 10.0, (3, 2))
        np.testing.assert_array_equal(points, Transform2D.identity().apply(points))

    def test_invalid_scale(self):
        self.assertRaises(ValueError, Transform2D, 0.0, 0.0)
        self.assertRaises(ValueError, Transform2D, 0.0, -1.0)

    def test_pose2d(self):
        pose = Pose2D([[0.0, 0.0], [np.nan, np.nan]], [True, False])
        self.assertEqual(2, pose.n)
        np.testing.assert_array_equal([0], pose.visible_indices())
        self.assertRaises(ValueError, pose.joints.__setitem__, (0, 0), 1.0)
        self.assertRaises(ValueError, Pose2D, [[0.0, 0.0], [np.nan, 1.0]])
        self.assertRaises(JointCountMismatch, Pose2D, [[0.0, 0.0]], [True, True])

    def test_pose2d_transformed(self):
        t = Transform2D(0.3, 1.5, (4.0, -2.0))
        pose = Pose2D([[1.0, 2.0], [3.0, 4.0]], [True, False])
        moved = pose.transformed(t)
        np.testing.assert_allclose(t.apply(pose.joints), moved.joints)
        np.testing.assert_array_equal(pose.visibility, moved.visibility)

    def test_pose3d(self):
        pose = Pose3D(np.arange(12.0).reshape(4, 3))
        np.testing.assert_allclose([4.5, 5.5, 6.5], pose.torso_center([1, 2]))
        self.assertRaises(ValueError, pose.torso_center, [])
        self.assertRaises(ValueError, Pose3D, [[0.0, np.inf, 0.0]])
        self.assertEqual(Pose3D(np.arange(12.0)), pose)

    def test_camera(self):
        np.testing.assert_allclose(np.eye(3), Camera(0.0, 0.0).rotation(), atol=1e-12)
        for _ in range(20):
            r = Camera(self.rng.uniform(0.0, 360.0), self.rng.uniform(-90.0, 90.0)).rotation()
            np.testing.assert_allclose(np.eye(3), r @ r.T, atol=1e-12)
            self.assertAlmostEqual(1.0, np.linalg.det(r))
        self.assertRaises(InvalidRange, Camera, 0.0, 91.0)
        self.assertRaises(ValueError, Camera, 0.0, 0.0, -1.0)
        self.assertRaises(ValueError, Camera, 0.0, 0.0, 5000.0, 0.0)

    def test_annotated_image(self):
        pixels = np.zeros((10, 20, 3), dtype=np.uint8)
        image = AnnotatedImage('a', pixels, Pose2D([[5.0, 5.0], [25.0, 5.0], [-1.0, 3.0]], [True, True, False]))
        self.assertEqual(10, image.height)
        self.assertEqual(20, image.width)
        np.testing.assert_array_equal([1], image.out_of_bounds_joints())
        pixels[0, 0] = 255
        self.assertEqual(0, image.pixels[0, 0, 0])
        self.assertRaises(ValueError, AnnotatedImage, 'b', np.zeros((10, 20)), image.pose)
        self.assertRaises(ValueError, AnnotatedImage, 'c', np.zeros((10, 20, 3)), image.pose)

    def test_pose_record(self):
        PoseRecord('a', Pose3D(np.zeros((2, 3))), Pose2D(np.zeros((2, 2))))
        self.assertRaises(JointCountMismatch, PoseRecord, 'a', Pose3D(np.zeros((2, 3))), Pose2D(np.zeros((3, 2))))

    def test_configs(self):
        self.assertRaises(ValueError, BlendConfig, 5, 3)
        self.assertRaises(ValueError, BlendConfig, 0, 3)
        self.assertRaises(ValueError, BlendConfig, 3, 21, -0.1)
        self.assertRaises(ValueError, SynthConfig, 220, 110)
        self.assertRaises(ValueError, SynthConfig, 220, 10, 0.0)
        config = SynthConfig(canvas=128, blend=BlendConfig(5, 9, 0.5), seed=3)
        self.assertEqual(config, SynthConfig.from_dict(config.to_dict()))

    def test_camera_sampling(self):
        sampling = CameraSampling(3, [0, 90], [-10, 10])
        self.assertEqual((0.0, 90.0), sampling.azimuth_range)
        self.assertEqual(sampling, CameraSampling.from_dict(sampling.to_dict()))
        self.assertRaises(InvalidRange, CameraSampling, 1, (0, 360), (-100, 0))
        self.assertRaises(InvalidRange, CameraSampling, 1, (90, 0))
        self.assertRaises(ValueError, CameraSampling, 0)


if __name__ == '__main__':
    unittest.main()
