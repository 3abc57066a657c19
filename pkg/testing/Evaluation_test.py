import io
import math
import unittest
import numpy as np
from scipy.spatial.transform import Rotation

from posemosaic.core import Pose2D, Pose3D, PoseRecord, Skeleton, Degenerate, JointCountMismatch, \
    MissingPrediction, UnknownId
from posemosaic.evaluation import mpjpe_abs, mpjpe_aligned, align_poses, pixel_error, joint_groups, EvalReport, \
    run_protocol


class MetricsTest(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(41)
        self.skeleton = Skeleton.default()
        self.gt = Pose3D(self.rng.normal(0.0, 300.0, (13, 3)))

    def _rotated(self, scale: float = 1.0) -> Pose3D:
        rotation = Rotation.random(random_state=7).as_matrix()
        return Pose3D(scale * self.gt.joints @ rotation.T + [100.0, -40.0, 2500.0])

    def test_identical(self):
        self.assertEqual(0.0, mpjpe_abs(self.gt, self.gt, self.skeleton))
        self.assertAlmostEqual(0.0, mpjpe_aligned(self.gt, self.gt, 'rigid'), places=6)
        self.assertAlmostEqual(0.0, mpjpe_aligned(self.gt, self.gt, 'similarity'), places=6)

    def test_absolute_ignores_translation_only(self):
        shifted = Pose3D(self.gt.joints + [500.0, 0.0, -200.0])
        self.assertAlmostEqual(0.0, mpjpe_abs(shifted, self.gt, self.skeleton), places=9)
        moved = self.gt.joints.copy()
        moved[self.skeleton.index('l_wrist')] += [0.0, 13.0, 0.0]
        self.assertAlmostEqual(1.0, mpjpe_abs(Pose3D(moved), self.gt, self.skeleton), places=9)
        self.assertGreater(mpjpe_abs(self._rotated(), self.gt, self.skeleton), 1.0)

    def test_rigid_alignment(self):
        self.assertAlmostEqual(0.0, mpjpe_aligned(self._rotated(), self.gt, 'rigid'), places=6)
        scaled = self._rotated(1.5)
        self.assertGreater(mpjpe_aligned(scaled, self.gt, 'rigid'), 1.0)
        self.assertAlmostEqual(0.0, mpjpe_aligned(scaled, self.gt, 'similarity'), places=6)

    def test_alignment_reduces_squared_error(self):
        for _ in range(10):
            pred = self.gt.joints + self.rng.normal(0.0, 40.0, (13, 3))
            raw = np.sum((pred - self.gt.joints) ** 2)
            rigid = np.sum((align_poses(pred, self.gt.joints, 'rigid') - self.gt.joints) ** 2)
            similarity = np.sum((align_poses(pred, self.gt.joints, 'similarity') - self.gt.joints) ** 2)
            self.assertLessEqual(rigid, raw * (1 + 1e-9))
            self.assertLessEqual(similarity, rigid * (1 + 1e-9))

    def test_random_rigid_transforms_align_exactly(self):
        rotations = Rotation.random(1000, random_state=3).as_matrix()
        translations = self.rng.uniform(-3000.0, 3000.0, (1000, 3))
        for trial, (rotation, translation) in enumerate(zip(rotations, translations)):
            gt = self.gt if trial % 2 else Pose3D(self.rng.normal(0.0, 300.0, (13, 3)))
            moved = Pose3D(gt.joints @ rotation.T + translation)
            self.assertLess(mpjpe_aligned(moved, gt, 'rigid', self.skeleton), 1e-6)
            self.assertLess(mpjpe_aligned(moved, gt, 'similarity', self.skeleton), 1e-6)

    def _random_pairs(self):
        pairs = []
        for trial in range(90):
            gt = self.rng.normal(0.0, 300.0, (13, 3))
            kind = trial % 3
            if kind == 0:
                pred = gt + self.rng.normal(0.0, 50.0, (13, 3))
            elif kind == 1:
                pred = gt + self.rng.normal(0.0, 5.0, (13, 3))
                pred[self.rng.integers(13)] += self.rng.normal(0.0, 1000.0, 3)
            else:
                pred = self.rng.normal(0.0, 300.0, (13, 3))
            pairs.append((Pose3D(pred), Pose3D(gt)))
        return pairs

    def test_alignment_never_increases_the_error(self):
        for pred, gt in self._random_pairs():
            absolute = mpjpe_abs(pred, gt, self.skeleton)
            rigid = mpjpe_aligned(pred, gt, 'rigid', self.skeleton)
            similarity = mpjpe_aligned(pred, gt, 'similarity', self.skeleton)
            self.assertLessEqual(rigid, absolute)
            self.assertLessEqual(similarity, rigid)

    @staticmethod
    def _grid_search_error(pred: np.ndarray, gt: np.ndarray, half_width: int = 8) -> float:
        # Rotations on a 1 degree grid around the least-squares rotation, each with its optimal translation,
        # the geometric median of the residuals (Weiszfeld iterations).
        center, _ = Rotation.align_vectors(gt - gt.mean(axis=0), pred - pred.mean(axis=0))
        steps = np.arange(-half_width, half_width + 1, dtype=float)
        offsets = np.stack(np.meshgrid(steps, steps, steps, indexing='ij'), axis=-1).reshape(-1, 3)
        rotations = (Rotation.from_euler('xyz', offsets, degrees=True) * center).as_matrix()
        residuals = gt[None] - np.einsum('gij,nj->gni', rotations, pred)
        t = residuals.mean(axis=1)
        for _ in range(200):
            d = np.maximum(np.linalg.norm(residuals - t[:, None], axis=2), 1e-12)
            t = np.sum(residuals / d[..., None], axis=1) / np.sum(1.0 / d, axis=1)[:, None]
        return float(np.min(np.mean(np.linalg.norm(residuals - t[:, None], axis=2), axis=1)))

    def test_rigid_alignment_matches_grid_search(self):
        rotations = Rotation.random(20, random_state=11).as_matrix()
        for rotation in rotations:
            gt = self.rng.normal(0.0, 300.0, (13, 3))
            pred = (gt + self.rng.normal(0.0, 30.0, (13, 3))) @ rotation.T + [250.0, 0.0, 4000.0]
            error = mpjpe_aligned(Pose3D(pred), Pose3D(gt), 'rigid', self.skeleton)
            self.assertAlmostEqual(self._grid_search_error(pred, gt), error, delta=2.0)

    def test_no_reflection(self):
        mirrored = Pose3D(self.gt.joints * [-1.0, 1.0, 1.0])
        self.assertGreater(mpjpe_aligned(mirrored, self.gt, 'rigid'), 1.0)

    def test_alignment_errors(self):
        line = Pose3D([[float(i), 2.0 * i, 0.0] for i in range(13)])
        self.assertRaises(Degenerate, mpjpe_aligned, line, self.gt)
        self.assertRaises(Degenerate, mpjpe_aligned, self.gt, line)
        self.assertRaises(Degenerate, align_poses, self.gt.joints[:2], self.gt.joints[:2])
        self.assertRaises(ValueError, mpjpe_aligned, self.gt, self.gt, 'affine')
        self.assertRaises(JointCountMismatch, mpjpe_aligned, Pose3D(self.gt.joints[:5]), self.gt)
        self.assertRaises(JointCountMismatch, mpjpe_abs, Pose3D(self.gt.joints[:5]), self.gt, self.skeleton)

    def test_joint_groups(self):
        groups = joint_groups(self.skeleton)
        self.assertEqual(['feet', 'knees', 'hips', 'hands', 'elbows', 'shoulders', 'head'], list(groups))
        self.assertEqual([11, 12], groups['feet'])
        self.assertEqual([0], groups['head'])
        generic = Skeleton(('a', 'b', 'c'), [(0, 1), (1, 2)])
        self.assertEqual({}, dict(joint_groups(generic)))

    def test_pixel_error(self):
        gt = Pose2D(np.zeros((13, 2)), [True] * 12 + [False])
        offsets = np.zeros((13, 2))
        offsets[11] = [3.0, 4.0]
        offsets[12] = [100.0, 0.0]
        pred = Pose2D(offsets)
        self.assertAlmostEqual(5.0 / 12.0, pixel_error(pred, gt))
        groups = pixel_error(pred, gt, per_joint=True)
        self.assertEqual(5.0, groups['feet'])
        self.assertEqual(0.0, groups['knees'])
        self.assertRaises(ValueError, pixel_error, pred, gt.with_visibility([False] * 13))
        self.assertRaises(JointCountMismatch, pixel_error, Pose2D(np.zeros((3, 2))), gt)


class ProtocolTest(unittest.TestCase):

    def setUp(self):
        rng = np.random.default_rng(43)
        self.ground_truth = [PoseRecord(f'gt_{i}', Pose3D(rng.normal(0.0, 300.0, (13, 3))),
                                        Pose2D(rng.uniform(0.0, 220.0, (13, 2))))
                             for i in range(5)]
        self.predictions = {gt.id: PoseRecord(gt.id, Pose3D(gt.pose3d.joints + rng.normal(0.0, 20.0, (13, 3))),
                                              Pose2D(gt.pose2d.joints + 2.0))
                            for gt in self.ground_truth}

    def test_full_protocol(self):
        report = run_protocol(self.predictions, self.ground_truth, label='all')
        self.assertEqual(5, len(report))
        self.assertEqual([gt.id for gt in self.ground_truth], [row.id for row in report.rows])
        self.assertAlmostEqual(2.0 * math.sqrt(2.0), report.mean('px'))
        self.assertAlmostEqual(2.0 * math.sqrt(2.0), report.mean('px_feet'))

    def test_perfect_predictions(self):
        perfect = {gt.id: gt for gt in self.ground_truth}
        report = run_protocol(perfect, self.ground_truth, workers=3)
        self.assertEqual(0.0, report.mean('abs_mm'))
        self.assertAlmostEqual(0.0, report.mean('similarity_mm'), places=6)
        self.assertEqual(0.0, report.mean('px'))

    def test_stride(self):
        sparse = {k: self.predictions[k] for k in ('gt_0', 'gt_2', 'gt_4')}
        report = run_protocol(sparse, self.ground_truth, subsample_stride=2)
        self.assertEqual(['gt_0', 'gt_2', 'gt_4'], [row.id for row in report.rows])
        self.assertEqual(2, report.stride)

    def test_missing_and_unknown(self):
        partial = dict(self.predictions)
        del partial['gt_3']
        with self.assertRaises(MissingPrediction) as raised:
            run_protocol(partial, self.ground_truth)
        self.assertEqual(['gt_3'], raised.exception.ids)
        extra = dict(self.predictions)
        extra['ghost'] = self.predictions['gt_0']
        self.assertRaises(UnknownId, run_protocol, extra, self.ground_truth)
        self.assertRaises(ValueError, run_protocol, self.predictions, self.ground_truth, 0)

    def test_without_2d(self):
        bare = {k: PoseRecord(k, p.pose3d) for k, p in self.predictions.items()}
        report = run_protocol(bare, self.ground_truth, label='3d')
        summary = report.summary()
        self.assertIsNone(summary['px'])
        self.assertIsNone(summary['px_head'])
        self.assertEqual(5, summary['samples'])
        self.assertEqual(13, summary['joints'])
        self.assertEqual('3d', summary['label'])

    def test_csv(self):
        report = run_protocol(self.predictions, self.ground_truth)
        out = io.StringIO()
        report.to_csv(out)
        lines = out.getvalue().splitlines()
        self.assertEqual(6, len(lines))
        self.assertEqual('id,abs_mm,rigid_mm,similarity_mm,px,px_feet,px_knees,px_hips,px_hands,px_elbows,'
                         'px_shoulders,px_head', lines[0])
        self.assertTrue(lines[1].startswith('gt_0,'))
        self.assertEqual(float(lines[1].split(',')[1]), report.rows[0].abs_mm)

    def test_empty_report(self):
        report = EvalReport('empty', 1, 13, ())
        self.assertTrue(math.isnan(report.mean('abs_mm')))
        self.assertIsNone(report.summary()['abs_mm'])


if __name__ == '__main__':
    unittest.main()
