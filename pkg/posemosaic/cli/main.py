import argparse
import logging
import sys
from typing import List, Optional

from posemosaic.core import ParseError, SchemaMismatch, JointCountMismatch
from posemosaic.cli.config import RunConfig, FLAG_KEYS, SUBSAMPLE_CRITERIA, load_run_config
from posemosaic.cli.commands import EXIT_FAILURE, EXIT_INVALID, cmd_synth, cmd_cluster, cmd_eval, cmd_mirror, \
    cmd_validate, cmd_preview, cmd_gen_test_corpus
from posemosaic.version import __version__

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'
# Errors of unreadable or malformed inputs, reported as validation failures.
INPUT_ERRORS = (FileNotFoundError, ParseError, SchemaMismatch, JointCountMismatch)


def _add_run_options(parser: argparse.ArgumentParser):
    """
    Options overriding the run configuration. Their defaults are None so that unset flags keep the value of the
    configuration file.
    """
    parser.add_argument('--config', help='YAML run configuration file')
    parser.add_argument('--workers', type=int, help='number of worker threads (default 1)')
    parser.add_argument('--seed', type=int, help='global seed (default 0)')


def _add_synth_options(parser: argparse.ArgumentParser):
    group = parser.add_argument_group('synthesis')
    group.add_argument('--canvas', type=int, help='side of the synthetic images in pixels (default 220)')
    group.add_argument('--margin', type=int, help='margin between the pose and the canvas border (default 10)')
    group.add_argument('--sigma', type=float, help='probability map bandwidth in pixels (default 15)')
    group.add_argument('--s-min', dest='s_min', type=int, help='blending region side on the skeleton (default 3)')
    group.add_argument('--s-max', dest='s_max', type=int, help='largest blending region side (default 21)')
    group.add_argument('--alpha', type=float, help='blending region growth per pixel of distance (default 0.2)')


def _add_camera_options(parser: argparse.ArgumentParser):
    group = parser.add_argument_group('virtual cameras')
    group.add_argument('--cameras-per-pose', dest='cameras_per_pose', type=int, help='cameras per pose (default 2)')
    group.add_argument('--azimuth', type=float, nargs=2, metavar=('LO', 'HI'),
                       help='azimuth range in degrees (default 0 360)')
    group.add_argument('--elevation', type=float, nargs=2, metavar=('LO', 'HI'),
                       help='elevation range in degrees (default -45 45)')
    group.add_argument('--distance', type=float, help='camera distance in mm (default 5000)')
    group.add_argument('--focal', type=float, help='focal length in pixels (default 1100)')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='posemosaic', description='Synthesis of annotated images of novel poses.')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('-v', '--verbose', action='store_true', help='log debug messages')
    parser.add_argument('--no-progress', dest='progress', action='store_false', help='hide the progress bars')
    commands = parser.add_subparsers(dest='command', required=True)

    synth = commands.add_parser('synth', help='synthesize images of MoCap poses from a corpus')
    synth.add_argument('--corpus', help='corpus manifest')
    synth.add_argument('--mocap', help='MoCap pose file')
    synth.add_argument('--output', help='output directory')
    synth.add_argument('--min-dist', dest='min_dist', type=float,
                       help='MoCap subsampling threshold in mm (default 50)')
    synth.add_argument('--criterion', choices=SUBSAMPLE_CRITERIA, help='MoCap subsampling criterion (default max)')
    synth.add_argument('--keep-intermediates', dest='keep_intermediates', action='store_true', default=None,
                       help='retain the intermediates of every item for the preview')
    _add_run_options(synth)
    _add_synth_options(synth)
    _add_camera_options(synth)

    cluster = commands.add_parser('cluster', help='cluster oriented 3D poses into pose classes')
    cluster.add_argument('input', help='synthetic manifest or pose file')
    cluster.add_argument('--output', dest='model', default='clusters/model', help='cluster model path')
    cluster.add_argument('-k', type=int, help='number of classes (default 5000)')
    cluster.add_argument('--max-iter', dest='max_iter', type=int, default=100, help='maximum k-means steps')
    cluster.add_argument('--write-classes', dest='write_classes', action='store_true',
                         help='write the class of every record into the synthetic manifest')
    _add_run_options(cluster)
    _add_synth_options(cluster)
    _add_camera_options(cluster)

    evaluate = commands.add_parser('eval', help='evaluate predicted poses')
    evaluate.add_argument('--gt', required=True, help='ground-truth pose file or synthetic manifest')
    source = evaluate.add_mutually_exclusive_group(required=True)
    source.add_argument('--pred', help='predicted pose file')
    source.add_argument('--model', help='cluster model decoded with the baseline scorers')
    evaluate.add_argument('--stride', type=int, default=1, help='evaluation stride (default 1, sparse protocols 64)')
    evaluate.add_argument('--label', default='', help='protocol label')
    evaluate.add_argument('--output', dest='report', help='CSV report path (default reports/<label>.csv)')
    evaluate.add_argument('--tau-3d', dest='tau_3d', type=float, help='3D score bandwidth in mm (default 100)')
    evaluate.add_argument('--tau-2d', dest='tau_2d', type=float, help='2D score bandwidth in px (default 10)')
    _add_run_options(evaluate)

    mirror = commands.add_parser('mirror', help='double a corpus with mirrored images')
    mirror.add_argument('corpus', help='corpus manifest')
    mirror.add_argument('--output', help='output directory (default: the corpus directory)')

    validate = commands.add_parser('validate', help='validate a corpus and/or a synthetic manifest')
    validate.add_argument('--corpus', help='corpus manifest')
    validate.add_argument('--synth', help='synthetic manifest')

    preview = commands.add_parser('preview', help='write the diagnostic images of a synthetic item')
    preview.add_argument('synth', help='synthetic manifest')
    preview.add_argument('id', help='item id')
    preview.add_argument('--corpus', help='corpus manifest, needed when no intermediates were retained')
    preview.add_argument('--output', help='output directory (default: <synth dir>/preview)')
    _add_run_options(preview)

    gen = commands.add_parser('gen-test-corpus', help='generate a stick-figure corpus')
    gen.add_argument('--output', required=True, help='corpus directory')
    gen.add_argument('--count', type=int, default=100, help='number of images (default 100)')
    gen.add_argument('--canvas', type=int, default=220, help='image side in pixels (default 220)')
    gen.add_argument('--seed', type=int, default=0, help='random seed (default 0)')
    gen.add_argument('--occlusion-rate', dest='occlusion_rate', type=float, default=0.0,
                     help='probability of hiding each joint (default 0)')
    gen.add_argument('--skeleton', help='skeleton descriptor (default: the built-in skeleton)')
    gen.add_argument('--mocap-count', dest='mocap_count', type=int, default=0,
                     help='number of random MoCap poses to write (default 0)')
    gen.add_argument('--mocap', help='MoCap pose file (default <output>/poses)')
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    overrides = {key: getattr(args, key) for key in FLAG_KEYS if hasattr(args, key)}
    return load_run_config(getattr(args, 'config', None), overrides)


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == 'synth':
        return cmd_synth(_run_config(args), args.progress)
    if args.command == 'cluster':
        return cmd_cluster(args.input, args.model, _run_config(args), args.max_iter, args.write_classes)
    if args.command == 'eval':
        report = args.report or f'reports/{args.label or "eval"}.csv'
        return cmd_eval(args.gt, report, _run_config(args), args.pred, args.model, args.stride, args.label)
    if args.command == 'mirror':
        return cmd_mirror(args.corpus, args.output)
    if args.command == 'validate':
        return cmd_validate(args.corpus, args.synth)
    if args.command == 'preview':
        return cmd_preview(args.synth, args.id, args.output, _run_config(args))
    return cmd_gen_test_corpus(args.output, args.count, args.canvas, args.seed, args.occlusion_rate,
                               args.skeleton, args.mocap, args.mocap_count, args.progress)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Runs a command line. Logs go to standard error, the summary of the command to standard output.

    :param argv: the arguments, those of the process if None
    :return: 0 on success, 1 on invalid input, 2 on failure
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr, format=LOG_FORMAT, level=logging.DEBUG if args.verbose else logging.INFO)
    try:
        return _dispatch(args)
    except INPUT_ERRORS as e:
        logger.error('%s: invalid input: %s', args.command, e)
        return EXIT_INVALID
    except (OSError, ValueError) as e:
        logger.error('%s failed: %s', args.command, e)
        return EXIT_FAILURE
