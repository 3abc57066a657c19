import json
import logging
import os
from typing import Any, Dict, List, Optional, Tuple
from tqdm import tqdm

from posemosaic.core import Camera, Skeleton, PoseRecord, SynthConfig, PoseMosaicError, UnknownId
from posemosaic.mocap import OrientedPose, QueryPose, subsample_poses, orient_and_center, project, normalize_crop, \
    random_poses3d
from posemosaic.clustering import ClusterModel, cluster_poses, baseline_scorer, decode_top_class
from posemosaic.evaluation import run_protocol
from posemosaic.io import SynthRecord, read_manifest, write_manifest, load_corpus, read_pose_records, \
    write_pose_records, read_synth_records, write_synth_records, synth_record_to_dict, synth_record_from_dict, \
    read_cluster_model, write_cluster_model, read_skeleton, write_skeleton, read_header, append_journal, \
    read_journal, write_png, check_round_trip, mirror_corpus, validate_manifest, generate_stick_corpus
from posemosaic.io.formats import SYNTH_SCHEMA
from posemosaic.synthesis import SynthItem, SynthesisEngine, plan_items, save_intermediates, preview_record, \
    intermediates_path
from posemosaic.utilities import ParUtils, item_seed
from posemosaic.cli.config import RunConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILURE = 2

# Fraction of failed items above which a synthesis run fails.
FAILURE_RATE = 0.01
JOURNAL_NAME = 'manifest.partial'
MANIFEST_NAME = 'manifest'


def emit_summary(summary: Dict[str, Any]):
    """
    Prints the machine-readable summary of a command as a single JSON line on standard output.
    """
    print(json.dumps(summary, separators=(',', ':')), flush=True)


def _report_violations(command: str, violations: List[str]) -> int:
    for violation in violations:
        logger.error('%s', violation)
    emit_summary({'command': command, 'violations': len(violations)})
    return EXIT_INVALID if violations else EXIT_OK


def _skeleton_of(header: Dict[str, Any], file_path: str) -> Skeleton:
    reference = header.get('skeleton')
    if not reference:
        return Skeleton.default()
    return read_skeleton(os.path.join(os.path.dirname(os.path.abspath(file_path)), reference))


def _skeleton_reference(skeleton_path: Optional[str], output_path: str) -> Optional[str]:
    if not skeleton_path:
        return None
    return os.path.relpath(os.path.abspath(skeleton_path), os.path.dirname(os.path.abspath(output_path)))


def read_pose_source(file_path: str) -> Tuple[Skeleton, List[PoseRecord]]:
    """
    Reads the poses of a pose-record file or of a synthetic manifest, whose records carry their oriented 3D pose
    and canvas 2D pose.

    :return: the skeleton referenced by the file and the pose records
    """
    header = read_header(file_path)
    if header.get('schema') == SYNTH_SCHEMA:
        _, records = read_synth_records(file_path)
        return _skeleton_of(header, file_path), [PoseRecord(r.id, r.pose3d, r.pose2d) for r in records]
    s = _skeleton_of(header, file_path)
    return s, read_pose_records(file_path, s)


# synth

def _synthesize_item(engine: SynthesisEngine, item: SynthItem, output_dir: str,
                     keep_intermediates: bool) -> Optional[SynthRecord]:
    try:
        result = engine.synthesize(item.pose3d, item.camera)
    except PoseMosaicError as e:
        logger.warning('Skipping item %s: %s', item.id, e)
        return None
    image = os.path.join('images', item.id + '.png')
    write_png(os.path.join(output_dir, image), result.image)
    if keep_intermediates:
        save_intermediates(result, intermediates_path(output_dir, item.id))
    return SynthRecord(item.id, image, result.oriented.pose3d, result.query.pose2d, item.camera,
                       result.query.crop, result.source_ids())


def cmd_synth(cfg: RunConfig, progress: bool = True) -> int:
    """
    Synthesizes ``cameras.count`` images per subsampled MoCap pose from the corpus.

    Writes ``images/<id>.png``, the skeleton descriptor and the synthetic manifest under the output directory.
    Every finished item is first appended to a journal, so that an interrupted run started again skips the items
    already done. The manifest lists the items in plan order and only depends on the configuration, whatever
    the number of workers.

    :param cfg: the run configuration
    :param progress: if True, shows a progress bar on standard error
    :return: the exit code, failing when more than 1% of the items fail
    """
    cfg.check_paths('corpus', 'mocap')
    if not cfg.output:
        raise ValueError('No output directory given.')
    manifest = read_manifest(cfg.corpus)
    s = manifest.load_skeleton()
    violations = validate_manifest(manifest, s)
    if violations:
        return _report_violations('synth', violations)

    poses = read_pose_records(cfg.mocap, s)
    kept = [poses[i] for i in subsample_poses([p.pose3d for p in poses], cfg.min_dist, cfg.criterion, s)]
    logger.info('Kept %d of %d MoCap poses at %.1f mm (%s).', len(kept), len(poses), cfg.min_dist, cfg.criterion)
    items = plan_items(kept, cfg.cameras, cfg.seed)
    engine = SynthesisEngine(load_corpus(manifest), s, cfg.synth)

    os.makedirs(os.path.join(cfg.output, 'images'), exist_ok=True)
    journal = os.path.join(cfg.output, JOURNAL_NAME)
    planned = {item.id for item in items}
    done = {data['id']: data for data in read_journal(journal) if data.get('id') in planned}
    pending = [item for item in items if item.id not in done]
    if done:
        logger.info('Resuming: %d of %d items already synthesized.', len(done), len(items))

    failed = 0
    results = ParUtils.par_imap(lambda it: _synthesize_item(engine, it, cfg.output, cfg.keep_intermediates),
                                pending, cfg.workers)
    for item, record in zip(pending, tqdm(results, total=len(pending), desc='synth', disable=not progress)):
        if record is None:
            failed += 1
            continue
        data = synth_record_to_dict(record)
        append_journal(journal, data)
        done[item.id] = data

    records = [synth_record_from_dict(done[item.id]) for item in items if item.id in done]
    write_skeleton(s, os.path.join(cfg.output, 'skeleton.json'))
    manifest_path = os.path.join(cfg.output, MANIFEST_NAME)
    write_synth_records(records, manifest_path, {'skeleton': 'skeleton.json', 'seed': cfg.seed,
                                                 'synth': cfg.synth.to_dict(), 'cameras': cfg.cameras.to_dict()})
    if os.path.exists(journal):
        os.remove(journal)
    logger.info('Synthesized %d of %d items into %s, %d failed.', len(records), len(items), cfg.output, failed)
    emit_summary({'command': 'synth', 'poses': len(kept), 'items': len(items), 'written': len(records),
                  'failed': failed, 'manifest': manifest_path})
    return EXIT_FAILURE if failed > FAILURE_RATE * len(items) else EXIT_OK


# cluster

def _cluster_inputs(file_path: str, cfg: RunConfig) -> Tuple[Skeleton, List[OrientedPose], List[QueryPose]]:
    header = read_header(file_path)
    s = _skeleton_of(header, file_path)
    if header.get('schema') == SYNTH_SCHEMA:
        _, records = read_synth_records(file_path)
        return s, [OrientedPose(r.pose3d, r.camera) for r in records], [QueryPose(r.pose2d, r.crop) for r in records]
    # World poses are seen from a frontal camera.
    cam = Camera(0.0, 0.0, cfg.cameras.distance, cfg.cameras.focal)
    oriented = [orient_and_center(p.pose3d, cam, s) for p in read_pose_records(file_path, s)]
    queries = [normalize_crop(project(op), cfg.synth.canvas, cfg.synth.margin) for op in oriented]
    return s, oriented, queries


def cmd_cluster(input_path: str, output_path: str, cfg: RunConfig, max_iter: int = 100,
                write_classes: bool = False) -> int:
    """
    Clusters the oriented 3D poses of a synthetic manifest, or of a pose-record file, into ``cfg.k`` classes
    and writes the cluster model.

    :param input_path: a synthetic manifest or a pose-record file
    :param output_path: the cluster model path
    :param cfg: the run configuration, providing K, the seed and the workers
    :param max_iter: the maximum number of k-means update steps
    :param write_classes: if True and the input is a synthetic manifest, the class of every record is written
        back into it
    :return: the exit code
    :raises TooFewPoses: if K exceeds the number of poses
    """
    header = read_header(input_path)
    if write_classes and header.get('schema') != SYNTH_SCHEMA:
        raise ValueError(f'Classes can only be written into a synthetic manifest, not {input_path}.')
    s, oriented, queries = _cluster_inputs(input_path, cfg)
    model = cluster_poses(oriented, queries, cfg.k, cfg.seed, max_iter=max_iter, workers=cfg.workers, s=s)
    skeleton = header.get('skeleton')
    skeleton_path = os.path.join(os.path.dirname(os.path.abspath(input_path)), skeleton) if skeleton else None
    write_cluster_model(model, output_path, _skeleton_reference(skeleton_path, output_path))
    if write_classes:
        _write_classes(input_path, model)
    emit_summary({'command': 'cluster', 'poses': len(oriented), 'k': model.k, 'objective': model.objective,
                  'iterations': len(model.history) - 1, 'sizes': model.sizes(), 'model': output_path})
    return EXIT_OK


def _write_classes(manifest_path: str, model: ClusterModel):
    header, records = read_synth_records(manifest_path)
    records = [r.with_class(int(c)) for r, c in zip(records, model.assignment)]
    write_synth_records(records, manifest_path, {k: v for k, v in header.items() if k not in ('schema', 'version')})
    logger.info('Wrote the classes of %d records into %s.', len(records), manifest_path)


# eval

def _decode_baseline(ground_truth: List[PoseRecord], model: ClusterModel, cfg: RunConfig) -> Dict[str, PoseRecord]:
    predictions = dict()
    for gt in ground_truth:
        pose3d, _ = decode_top_class(baseline_scorer(gt.pose3d, model.classes, cfg.tau_3d), model.classes)
        pose2d = None
        if gt.pose2d is not None:
            _, pose2d = decode_top_class(baseline_scorer(gt.pose2d, model.classes, cfg.tau_2d), model.classes)
        predictions[gt.id] = PoseRecord(gt.id, pose3d, pose2d)
    return predictions


def cmd_eval(gt_path: str, report_path: str, cfg: RunConfig, pred_path: Optional[str] = None,
             model_path: Optional[str] = None, stride: int = 1, label: str = '') -> int:
    """
    Evaluates predicted poses against ground-truth poses and writes the CSV report.

    The predictions are either read from a pose-record file or decoded from a cluster model, taking for every
    sample the centroids of the class best scored against its own ground truth, which must then be oriented.

    :param gt_path: the ground-truth pose-record file or synthetic manifest
    :param report_path: the CSV report path
    :param cfg: the run configuration, providing the score bandwidths and the workers
    :param pred_path: the predicted pose-record file
    :param model_path: the cluster model decoded instead of reading predictions
    :param stride: the evaluation stride
    :param label: the protocol label
    :return: the exit code
    :raises MissingPrediction: if an evaluated sample has no prediction
    """
    if (pred_path is None) == (model_path is None):
        raise ValueError('Exactly one of the predictions and the cluster model must be given.')
    s, ground_truth = read_pose_source(gt_path)
    if model_path is not None:
        predictions = _decode_baseline(ground_truth, read_cluster_model(model_path), cfg)
    else:
        predictions = {p.id: p for p in read_pose_source(pred_path)[1]}
    report = run_protocol(predictions, ground_truth, stride, label, s, cfg.workers)
    os.makedirs(os.path.dirname(os.path.abspath(report_path)), exist_ok=True)
    report.to_csv(report_path)
    emit_summary({'command': 'eval', **report.summary(), 'report': report_path})
    return EXIT_OK


# mirror, validate

def cmd_mirror(corpus_path: str, output_dir: Optional[str] = None) -> int:
    """
    Doubles a corpus with its mirrored images and writes the new manifest in the output directory, by default
    over the input manifest.
    """
    manifest = read_manifest(corpus_path)
    mirrored = mirror_corpus(manifest, manifest.load_skeleton(), output_dir)
    path = os.path.join(mirrored.base_dir, MANIFEST_NAME)
    write_manifest(mirrored, path)
    emit_summary({'command': 'mirror', 'records': len(mirrored), 'manifest': path})
    return EXIT_OK


def validate_synth_manifest(manifest_path: str) -> List[str]:
    """
    Lists the violations of a synthetic manifest: duplicate ids, missing images and records whose 2D pose is not
    the projection of their 3D pose.
    """
    _, records = read_synth_records(manifest_path)
    base_dir = os.path.dirname(os.path.abspath(manifest_path))
    violations, seen = [], set()
    for r in records:
        if r.id in seen:
            violations.append(f'{r.id}: duplicate id')
        seen.add(r.id)
        if not os.path.exists(os.path.join(base_dir, r.image)):
            violations.append(f'{r.id}: missing image {r.image}')
        if not check_round_trip(r):
            violations.append(f'{r.id}: the 2D pose is not the projection of the 3D pose')
    return violations


def cmd_validate(corpus_path: Optional[str] = None, synth_path: Optional[str] = None) -> int:
    """
    Validates a corpus manifest and/or a synthetic manifest, logging every violation.

    :return: 1 if a violation was found, 0 otherwise
    """
    if corpus_path is None and synth_path is None:
        raise ValueError('Nothing to validate.')
    violations = []
    if corpus_path is not None:
        violations += validate_manifest(read_manifest(corpus_path))
    if synth_path is not None:
        violations += validate_synth_manifest(synth_path)
    return _report_violations('validate', violations)


# preview

def cmd_preview(synth_path: str, item_id: str, output_dir: Optional[str], cfg: RunConfig) -> int:
    """
    Writes the diagnostic images of a synthetic item. When the item's intermediates were not retained, the item
    is synthesized again from the corpus of ``cfg`` with the synthesis parameters stored in the manifest.

    :raises UnknownId: if the manifest has no such item
    """
    header, records = read_synth_records(synth_path)
    record = next((r for r in records if r.id == item_id), None)
    if record is None:
        raise UnknownId(f'No item {item_id} in {synth_path}.')
    synth_dir = os.path.dirname(os.path.abspath(synth_path))
    output_dir = output_dir or os.path.join(synth_dir, 'preview')
    s = _skeleton_of(header, synth_path)
    engine = None
    if not os.path.exists(intermediates_path(synth_dir, item_id)):
        cfg.check_paths('corpus')
        manifest = read_manifest(cfg.corpus)
        synth = SynthConfig.from_dict(header['synth']) if 'synth' in header else cfg.synth
        engine = SynthesisEngine(load_corpus(manifest), s, synth)
    paths = preview_record(record, synth_dir, s, output_dir, engine)
    emit_summary({'command': 'preview', 'id': item_id, 'files': len(paths), 'output': output_dir})
    return EXIT_OK


# gen-test-corpus

def cmd_gen_test_corpus(output_dir: str, count: int, canvas: int, seed: int, occlusion_rate: float = 0.0,
                        skeleton_path: Optional[str] = None, mocap_path: Optional[str] = None,
                        mocap_count: int = 0, progress: bool = True) -> int:
    """
    Generates a stick-figure corpus and, optionally, a file of ``mocap_count`` random MoCap poses.
    """
    s = read_skeleton(skeleton_path) if skeleton_path else Skeleton.default()
    manifest = generate_stick_corpus(count, s, canvas, seed, output_dir, occlusion_rate, progress)
    summary = {'command': 'gen-test-corpus', 'images': len(manifest),
               'manifest': os.path.join(output_dir, MANIFEST_NAME)}
    if mocap_count > 0:
        mocap_path = mocap_path or os.path.join(output_dir, 'poses')
        poses = random_poses3d(s, mocap_count, item_seed(seed, 'mocap'))
        reference = _skeleton_reference(os.path.join(output_dir, 'skeleton.json'), mocap_path) \
            if skeleton_path else None
        write_pose_records([PoseRecord(f'pose_{i:05d}', p) for i, p in enumerate(poses)], mocap_path, reference)
        summary.update({'poses': mocap_count, 'mocap': mocap_path})
    emit_summary(summary)
    return EXIT_OK
