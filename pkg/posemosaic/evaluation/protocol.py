import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, IO, List, Mapping, Optional, Sequence, Tuple, Union

from posemosaic.core import PoseRecord, Skeleton
from posemosaic.core.errors import MissingPrediction, UnknownId
from posemosaic.evaluation.metrics import mpjpe_abs, mpjpe_aligned, pixel_error, joint_groups
from posemosaic.utilities import ParUtils

logger = logging.getLogger(__name__)

BASE_COLUMNS = ('id', 'abs_mm', 'rigid_mm', 'similarity_mm', 'px')


@dataclass(frozen=True)
class EvalRow:
    """
    The errors of one evaluated sample. The 2D errors are None when no 2D ground truth or prediction exists.
    """
    id: str
    abs_mm: float
    rigid_mm: float
    similarity_mm: float
    px: Optional[float] = None
    group_px: Dict[str, float] = field(default_factory=dict)


def _mean(values: Sequence[float]) -> float:
    total = 0.0
    for v in values:
        total += v
    return total / len(values) if values else math.nan


@dataclass(frozen=True)
class EvalReport:
    """
    The errors of a protocol run.

    Attributes
    ----------
    label : str
        the protocol label
    stride : int
        every stride-th ground-truth sample was evaluated
    joint_count : int
        the number of joints of the evaluated poses
    rows : Tuple[EvalRow, ...]
        the per-sample errors, in ground-truth order
    groups : Tuple[str, ...]
        the names of the pixel error groups
    """
    label: str
    stride: int
    joint_count: int
    rows: Tuple[EvalRow, ...]
    groups: Tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.rows)

    def mean(self, column: str) -> float:
        """
        Returns the arithmetic mean of a column over the samples where it is defined, NaN if it is never defined.
        Columns are 'abs_mm', 'rigid_mm', 'similarity_mm', 'px' or 'px_<group>'.
        """
        if column.startswith('px_'):
            values = [row.group_px[column[3:]] for row in self.rows if column[3:] in row.group_px]
        else:
            values = [getattr(row, column) for row in self.rows if getattr(row, column) is not None]
        return _mean(values)

    def columns(self) -> List[str]:
        return list(BASE_COLUMNS) + [f'px_{g}' for g in self.groups]

    def summary(self) -> Dict[str, Union[str, int, float, None]]:
        """
        Returns the aggregates of the report, NaN aggregates being None.
        """
        result = {'label': self.label, 'stride': self.stride, 'samples': len(self.rows),
                  'joints': self.joint_count}
        for column in self.columns()[1:]:
            value = self.mean(column)
            result[column] = None if math.isnan(value) else value
        return result

    def to_csv(self, out: Union[str, IO[str]]):
        """
        Writes one line per sample with the columns id, abs_mm, rigid_mm, similarity_mm, px and one px_<group>
        column per joint group. Undefined values are left empty.
        """
        if isinstance(out, str):
            with open(out, 'w', newline='', encoding='utf-8') as f:
                self.to_csv(f)
            return
        writer = csv.writer(out)
        writer.writerow(self.columns())
        for row in self.rows:
            values = [row.id, repr(row.abs_mm), repr(row.rigid_mm), repr(row.similarity_mm),
                      '' if row.px is None else repr(row.px)]
            values += ['' if g not in row.group_px else repr(row.group_px[g]) for g in self.groups]
            writer.writerow(values)


def _evaluate(pred: PoseRecord, gt: PoseRecord, s: Skeleton) -> EvalRow:
    px, groups = None, dict()
    if pred.pose2d is not None and gt.pose2d is not None and gt.pose2d.visibility.any():
        px = pixel_error(pred.pose2d, gt.pose2d)
        groups = pixel_error(pred.pose2d, gt.pose2d, per_joint=True, s=s)
    return EvalRow(gt.id,
                   mpjpe_abs(pred.pose3d, gt.pose3d, s),
                   mpjpe_aligned(pred.pose3d, gt.pose3d, 'rigid', s),
                   mpjpe_aligned(pred.pose3d, gt.pose3d, 'similarity', s),
                   px, groups)


def run_protocol(predictions: Mapping[str, PoseRecord],
                 ground_truth: Sequence[PoseRecord],
                 subsample_stride: int = 1,
                 label: str = '',
                 s: Optional[Skeleton] = None,
                 workers: int = 1) -> EvalReport:
    """
    Evaluates the predictions of every stride-th ground-truth sample (samples 0, stride, 2 stride, ...).
    Every evaluated sample gets the absolute, rigid-aligned and similarity-aligned 3D errors, and the 2D pixel
    errors when both the prediction and the ground truth carry a 2D pose.

    :param predictions: the predicted poses by id
    :param ground_truth: the ground-truth poses, in protocol order
    :param subsample_stride: the evaluation stride, 64 for sparse protocols and 1 to evaluate every sample
    :param label: the protocol label
    :param s: the skeleton, the default one if None
    :param workers: the number of threads
    :return: the report
    :raises MissingPrediction: if an evaluated sample has no prediction
    :raises UnknownId: if a prediction has no ground truth
    """
    if subsample_stride < 1:
        raise ValueError(f'The stride must be at least 1, got {subsample_stride}.')
    s = Skeleton.default() if s is None else s
    known = {gt.id for gt in ground_truth}
    unknown = sorted(set(predictions) - known)
    if unknown:
        raise UnknownId(f'Predictions without ground truth: {", ".join(unknown[:10])}.')
    evaluated = list(ground_truth[::subsample_stride])
    missing = [gt.id for gt in evaluated if gt.id not in predictions]
    if missing:
        raise MissingPrediction(missing)

    rows = ParUtils.par_map(lambda gt: _evaluate(predictions[gt.id], gt, s), evaluated, workers)
    report = EvalReport(label, subsample_stride, s.n, tuple(rows), tuple(joint_groups(s)))
    logger.info('Protocol %s: %d samples evaluated, similarity-aligned error %.2f mm.',
                label or '-', len(rows), report.mean('similarity_mm'))
    return report
