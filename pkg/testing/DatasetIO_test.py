import json
import os
import tempfile
import unittest
import numpy as np

from posemosaic.core import Camera, Pose2D, Pose3D, PoseRecord, Skeleton, Transform2D, ParseError, SchemaMismatch
from posemosaic.mocap import orient_and_center, project, normalize_crop, QueryPose
from posemosaic.clustering import cluster_poses
from posemosaic.io import RecordWriter, read_records, read_header, decode_records, atomic_write_text, \
    append_journal, read_journal, read_png, write_png, write_index_png, draw_skeleton, CorpusRecord, \
    CorpusManifest, SynthRecord, read_skeleton, write_skeleton, read_manifest, write_manifest, load_corpus, \
    read_pose_records, write_pose_records, read_cameras, write_cameras, read_synth_records, write_synth_records, \
    read_cluster_model, write_cluster_model, check_round_trip, reprojection_error, mirror_corpus, mirror_pose, \
    mirrored_id, validate_manifest


class RecordFileTest(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, 'records')

    def tearDown(self):
        self.tmp.cleanup()

    def _write_lines(self, *lines: str):
        with open(self.path, 'w', encoding='utf-8') as f:
            f.write('\n'.join(lines) + '\n')

    def test_header_and_records(self):
        writer = RecordWriter('posemosaic.test', {'count': 2})
        writer.add_record({'id': 'a', 'value': 0.1})
        writer.add_record({'id': 'b', 'value': 1e-17})
        writer.write(self.path)
        header, located = read_records(self.path, 'posemosaic.test')
        self.assertEqual({'schema': 'posemosaic.test', 'version': 1, 'count': 2}, header)
        self.assertEqual([(2, 0, {'id': 'a', 'value': 0.1}), (3, 1, {'id': 'b', 'value': 1e-17})], list(located))
        self.assertEqual(header, read_header(self.path))
        self.assertEqual([], [name for name in os.listdir(self.tmp.name) if name.endswith('.tmp')])

    def test_schema_mismatch(self):
        RecordWriter('posemosaic.other').write(self.path)
        self.assertRaises(SchemaMismatch, read_records, self.path, 'posemosaic.test')
        RecordWriter('posemosaic.test', version=7).write(self.path)
        self.assertRaises(SchemaMismatch, read_records, self.path, 'posemosaic.test')

    def test_parse_errors(self):
        self._write_lines('{"schema":"posemosaic.test","version":1}', '{"id":"a"}', '', '{"id":')
        _, located = read_records(self.path, 'posemosaic.test')
        with self.assertRaises(ParseError) as raised:
            list(located)
        self.assertEqual(4, raised.exception.line)
        self.assertEqual(1, raised.exception.record)
        self._write_lines('')
        self.assertRaises(ParseError, read_records, self.path, 'posemosaic.test')
        self.assertRaises(ParseError, read_header, self.path)

    def test_decode_errors(self):
        self._write_lines('{"schema":"posemosaic.test","version":1}', '{"id":"a","x":1}', '{"id":"b"}')
        _, located = read_records(self.path, 'posemosaic.test')
        with self.assertRaises(ParseError) as raised:
            decode_records(self.path, located, lambda d: (d['id'], float(d['x'])))
        self.assertEqual(3, raised.exception.line)
        self.assertEqual(1, raised.exception.record)

    def test_journal(self):
        self.assertEqual([], read_journal(self.path))
        append_journal(self.path, {'id': 'a'})
        append_journal(self.path, {'id': 'b'})
        with open(self.path, 'a', encoding='utf-8') as f:
            f.write('{"id": "c"')
        self.assertEqual([{'id': 'a'}, {'id': 'b'}], read_journal(self.path))
        self._write_lines('{"id": "a"', '{"id": "b"}')
        self.assertRaises(ParseError, read_journal, self.path)

    def test_atomic_write(self):
        atomic_write_text(os.path.join(self.tmp.name, 'nested', 'file.txt'), 'content\n')
        with open(os.path.join(self.tmp.name, 'nested', 'file.txt'), encoding='utf-8') as f:
            self.assertEqual('content\n', f.read())


class FormatsTest(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.rng = np.random.default_rng(47)
        self.skeleton = Skeleton.default()

    def tearDown(self):
        self.tmp.cleanup()

    def _path(self, name: str) -> str:
        return os.path.join(self.tmp.name, name)

    def _sample_synth_record(self, item_id: str) -> SynthRecord:
        cam = Camera(float(self.rng.uniform(0.0, 360.0)), float(self.rng.uniform(-30.0, 30.0)))
        oriented = orient_and_center(Pose3D(self.rng.normal(0.0, 300.0, (13, 3))), cam, self.skeleton)
        query = normalize_crop(project(oriented), 220, 10)
        return SynthRecord(item_id, f'images/{item_id}.png', oriented.pose3d, query.pose2d, cam, query.crop,
                           ('src_1', 'src_2'))

    def test_skeleton(self):
        write_skeleton(self.skeleton, self._path('skeleton.json'))
        self.assertEqual(self.skeleton, read_skeleton(self._path('skeleton.json')))
        with open(self._path('bad.json'), 'w', encoding='utf-8') as f:
            f.write('{"joints": ')
        self.assertRaises(ParseError, read_skeleton, self._path('bad.json'))
        with open(self._path('future.json'), 'w', encoding='utf-8') as f:
            json.dump({'schema': 'posemosaic.skeleton', 'version': 9, 'joints': [], 'edges': []}, f)
        self.assertRaises(SchemaMismatch, read_skeleton, self._path('future.json'))
        with open(self._path('partial.json'), 'w', encoding='utf-8') as f:
            json.dump({'joints': ['a']}, f)
        self.assertRaises(ParseError, read_skeleton, self._path('partial.json'))

    def test_manifest(self):
        joints = self.rng.uniform(0.0, 50.0, (13, 2))
        joints[4] = np.nan
        visibility = np.ones(13, dtype=bool)
        visibility[4] = False
        records = (CorpusRecord('a', 'images/a.png', Pose2D(joints, visibility)),
                   CorpusRecord('b', 'images/b.png', Pose2D(self.rng.uniform(0.0, 50.0, (13, 2)))))
        write_manifest(CorpusManifest('skeleton.json', records), self._path('manifest'))
        manifest = read_manifest(self._path('manifest'))
        self.assertEqual('skeleton.json', manifest.skeleton)
        self.assertEqual(os.path.abspath(self.tmp.name), manifest.base_dir)
        self.assertEqual(['a', 'b'], [r.id for r in manifest.records])
        self.assertEqual(records[1].pose2d, manifest.records[1].pose2d)
        self.assertFalse(manifest.records[0].pose2d.visibility[4])
        self.assertTrue(np.isnan(manifest.records[0].pose2d.joints[4]).all())
        self.assertEqual(os.path.join(manifest.base_dir, 'images', 'a.png'), manifest.image_path(manifest.records[0]))

    def test_load_corpus(self):
        pixels = self.rng.integers(0, 256, (30, 40, 3), dtype=np.uint8)
        write_png(self._path('images/a.png'), pixels)
        manifest = CorpusManifest(None, (CorpusRecord('a', 'images/a.png', Pose2D(np.zeros((13, 2)))),),
                                  self.tmp.name)
        corpus = load_corpus(manifest)
        np.testing.assert_array_equal(pixels, corpus[0].pixels)
        self.assertEqual(self.skeleton, manifest.load_skeleton())

    def test_pose_records(self):
        records = [PoseRecord('p0', Pose3D(self.rng.normal(0.0, 300.0, (13, 3)))),
                   PoseRecord('p1', Pose3D(self.rng.normal(0.0, 300.0, (13, 3))),
                              Pose2D(self.rng.uniform(0.0, 220.0, (13, 2)), [True] * 12 + [False]))]
        write_pose_records(records, self._path('poses'))
        loaded = read_pose_records(self._path('poses'))
        self.assertEqual(records, loaded)
        self.assertIsNone(loaded[0].pose2d)

    def test_cameras(self):
        cameras = [Camera(10.0, -20.0), Camera(350.5, 44.0, 4000.0, 900.0, (3.0, 4.0))]
        write_cameras(cameras, self._path('cameras'))
        self.assertEqual(cameras, read_cameras(self._path('cameras')))

    def test_synth_records(self):
        records = [self._sample_synth_record('i0'), self._sample_synth_record('i1').with_class(3)]
        write_synth_records(records, self._path('manifest'), {'seed': 5})
        header, loaded = read_synth_records(self._path('manifest'))
        self.assertEqual(5, header['seed'])
        self.assertEqual(records, loaded)
        self.assertEqual(3, loaded[1].class_id)
        self.assertIsNone(loaded[0].class_id)
        self.assertRaises(SchemaMismatch, read_pose_records, self._path('manifest'))

    def test_round_trip_check(self):
        record = self._sample_synth_record('i0')
        self.assertLess(reprojection_error(record), 1e-6)
        self.assertTrue(check_round_trip(record))
        moved = record.pose2d.joints.copy()
        moved[2] += [0.0, 0.5]
        broken = SynthRecord(record.id, record.image, record.pose3d, Pose2D(moved), record.camera, record.crop)
        self.assertAlmostEqual(0.5, reprojection_error(broken), places=6)
        self.assertFalse(check_round_trip(broken))

    def test_cluster_model(self):
        cam = Camera(0.0, 0.0)
        oriented = [orient_and_center(Pose3D(self.rng.normal(0.0, 300.0, (13, 3))), cam, self.skeleton)
                    for _ in range(10)]
        queries = [QueryPose(Pose2D(self.rng.uniform(0.0, 220.0, (13, 2))), Transform2D.identity())
                   for _ in range(10)]
        model = cluster_poses(oriented, queries, 3, seed=6)
        write_cluster_model(model, self._path('model'), 'skeleton.json')
        loaded = read_cluster_model(self._path('model'))
        self.assertEqual(model.classes, loaded.classes)
        self.assertEqual(model.objective, loaded.objective)
        self.assertEqual(model.history, loaded.history)
        self.assertEqual(6, loaded.seed)
        self.assertEqual(0, len(loaded.assignment))
        self.assertEqual('skeleton.json', read_header(self._path('model'))['skeleton'])


class ImagesTest(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def test_png(self):
        pixels = np.random.default_rng(53).integers(0, 256, (12, 9, 3), dtype=np.uint8)
        path = os.path.join(self.tmp.name, 'sub', 'rgb.png')
        write_png(path, pixels)
        np.testing.assert_array_equal(pixels, read_png(path))
        gray = np.arange(12, dtype=np.uint8).reshape(3, 4)
        write_png(os.path.join(self.tmp.name, 'gray.png'), gray)
        np.testing.assert_array_equal(np.repeat(gray[..., None], 3, axis=2),
                                      read_png(os.path.join(self.tmp.name, 'gray.png')))

    def test_index_png(self):
        path = os.path.join(self.tmp.name, 'index.png')
        write_index_png(path, np.array([[0, 1], [2, 0]]), 3)
        rgb = read_png(path)
        np.testing.assert_array_equal(rgb[0, 0], rgb[1, 1])
        self.assertFalse(np.array_equal(rgb[0, 0], rgb[0, 1]))
        self.assertRaises(ValueError, write_index_png, path, np.zeros((2, 2)), 300)

    def test_draw_skeleton(self):
        s = Skeleton(('a', 'b'), [(0, 1)])
        pixels = np.zeros((20, 20, 3), dtype=np.uint8)
        overlay = draw_skeleton(pixels, Pose2D([(5.0, 5.0), (15.0, 5.0)], [True, False]), s)
        self.assertEqual((255, 255, 0), tuple(overlay[5, 5]))
        self.assertEqual((0, 0, 0), tuple(overlay[5, 10]))
        self.assertEqual(0, pixels.max())


class MirroringTest(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.rng = np.random.default_rng(59)
        self.skeleton = Skeleton.default()

    def tearDown(self):
        self.tmp.cleanup()

    def _sample_corpus(self, count: int = 3) -> CorpusManifest:
        records = []
        for i in range(count):
            write_png(os.path.join(self.tmp.name, f'images/c{i}.png'),
                      self.rng.integers(0, 256, (30, 40, 3), dtype=np.uint8))
            visibility = self.rng.uniform(size=13) > 0.2
            records.append(CorpusRecord(f'c{i}', f'images/c{i}.png',
                                        Pose2D(self.rng.uniform(0.0, 29.0, (13, 2)), visibility)))
        manifest = CorpusManifest(None, tuple(records), os.path.abspath(self.tmp.name))
        write_manifest(manifest, os.path.join(self.tmp.name, 'manifest'))
        return manifest

    def test_mirrored_id(self):
        self.assertEqual('a_mirror', mirrored_id('a'))
        self.assertEqual('a', mirrored_id(mirrored_id('a')))

    def test_mirror_pose(self):
        pose = Pose2D(self.rng.uniform(0.0, 39.0, (13, 2)), self.rng.uniform(size=13) > 0.3)
        mirrored = mirror_pose(pose, 40, self.skeleton)
        left_wrist, right_wrist = self.skeleton.index('l_wrist'), self.skeleton.index('r_wrist')
        self.assertAlmostEqual(39.0 - pose.joints[right_wrist, 0], mirrored.joints[left_wrist, 0])
        self.assertEqual(pose.visibility[right_wrist], mirrored.visibility[left_wrist])
        self.assertEqual(pose.joints[0, 1], mirrored.joints[0, 1])
        twice = mirror_pose(mirrored, 40, self.skeleton)
        np.testing.assert_allclose(pose.joints, twice.joints, atol=1e-12)
        np.testing.assert_array_equal(pose.visibility, twice.visibility)

    def test_mirror_corpus(self):
        manifest = self._sample_corpus()
        doubled = mirror_corpus(manifest, self.skeleton)
        self.assertEqual(['c0', 'c1', 'c2', 'c0_mirror', 'c1_mirror', 'c2_mirror'], [r.id for r in doubled.records])
        original = read_png(doubled.image_path(doubled.records[1]))
        flipped = read_png(doubled.image_path(doubled.records[4]))
        np.testing.assert_array_equal(original[:, ::-1], flipped)
        self.assertEqual([], validate_manifest(doubled, self.skeleton))

    def test_mirror_into_other_directory(self):
        manifest = self._sample_corpus(2)
        output = os.path.join(self.tmp.name, 'mirrored')
        doubled = mirror_corpus(manifest, self.skeleton, output)
        self.assertEqual(os.path.join('..', 'images', 'c0.png'), doubled.records[0].image)
        self.assertTrue(os.path.isfile(os.path.join(output, 'images', 'c0_mirror.png')))
        self.assertEqual([], validate_manifest(doubled, self.skeleton))

    def test_mirror_errors(self):
        manifest = self._sample_corpus(1)
        clashing = CorpusManifest(None, manifest.records + (CorpusRecord('c0_mirror', 'images/c0.png',
                                                                         manifest.records[0].pose2d),),
                                  manifest.base_dir)
        self.assertRaises(ValueError, mirror_corpus, clashing, self.skeleton)
        no_pairs = Skeleton(self.skeleton.joints, self.skeleton.edges)
        self.assertRaises(ValueError, mirror_corpus, manifest, no_pairs)


class ValidationTest(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.skeleton = Skeleton.default()
        write_png(os.path.join(self.tmp.name, 'images', 'a.png'), np.zeros((30, 40, 3), dtype=np.uint8))
        self.pose = Pose2D(np.full((13, 2), 10.0))

    def tearDown(self):
        self.tmp.cleanup()

    def _manifest(self, *records: CorpusRecord) -> CorpusManifest:
        return CorpusManifest(None, records, self.tmp.name)

    def test_valid(self):
        self.assertEqual([], validate_manifest(self._manifest(CorpusRecord('a', 'images/a.png', self.pose))))

    def test_violations(self):
        outside = self.pose.joints.copy()
        outside[3] = [40.0, 5.0]
        hidden_outside = Pose2D(outside, [True] * 3 + [False] + [True] * 9)
        manifest = self._manifest(CorpusRecord('a', 'images/a.png', self.pose),
                                  CorpusRecord('a', 'images/a.png', self.pose),
                                  CorpusRecord('b', 'images/a.png', Pose2D(np.zeros((5, 2)))),
                                  CorpusRecord('c', 'images/missing.png', self.pose),
                                  CorpusRecord('d', 'images/a.png', Pose2D(outside)),
                                  CorpusRecord('e', 'images/a.png', hidden_outside))
        violations = validate_manifest(manifest)
        self.assertEqual(4, len(violations))
        self.assertIn('record 1 (a): duplicate id', violations)
        self.assertIn('record 2 (b): 5 joints, skeleton has 13', violations)
        self.assertIn('record 3 (c): missing image images/missing.png', violations)
        self.assertIn('record 4 (d): visible joints outside the 40x30 image', violations)
        self.assertEqual(2, len(validate_manifest(manifest, check_images=False)))

    def test_invalid_skeleton(self):
        broken = Skeleton(('a', 'b', 'c'), [(0, 1), (1, 0)])
        violations = validate_manifest(self._manifest(), broken)
        self.assertTrue(violations)
        self.assertTrue(all(v.startswith('skeleton: ') for v in violations))
        unreadable = CorpusManifest('nowhere.json', (), self.tmp.name)
        self.assertEqual(1, len(validate_manifest(unreadable)))


if __name__ == '__main__':
    unittest.main()
