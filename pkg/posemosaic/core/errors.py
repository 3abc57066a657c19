from typing import Iterable, Optional


class PoseMosaicError(ValueError):
    """
    Base class of every domain error raised by posemosaic.
    It derives from ValueError because all of these errors describe input that the operation
    cannot work with.
    """
    pass


class NoVisibleNeighbor(PoseMosaicError):
    pass


class InvalidRange(PoseMosaicError):
    pass


class BehindCamera(PoseMosaicError):
    pass


class DegeneratePose(PoseMosaicError):
    pass


class DegenerateSegment(PoseMosaicError):
    pass


class OccludedJoint(PoseMosaicError):
    pass


class AllOccluded(PoseMosaicError):
    pass


class Degenerate(PoseMosaicError):
    pass


class TooFewPoses(PoseMosaicError):
    pass


class JointCountMismatch(PoseMosaicError):
    pass


class SchemaMismatch(PoseMosaicError):
    pass


class UnknownId(PoseMosaicError):
    pass


class NoCandidate(PoseMosaicError):
    """
    Raised when no corpus entry can be aligned on a query joint.
    """

    def __init__(self, joint: int):
        super().__init__(f'No corpus entry can be aligned on joint {joint}.')
        self.joint = joint


class MissingPrediction(PoseMosaicError):
    """
    Raised when evaluated ground-truth samples have no prediction.
    The ``ids`` attribute lists all the absent ids in ground-truth order.
    """

    def __init__(self, ids: Iterable[str]):
        self.ids = list(ids)
        shown = ', '.join(self.ids[:10]) + (' ...' if len(self.ids) > 10 else '')
        super().__init__(f'{len(self.ids)} samples have no prediction: {shown}')


class ParseError(PoseMosaicError):
    """
    Raised when a record file cannot be parsed.

    Attributes
    ----------
    path : Optional[str]
        the file being read
    line : int
        the 1-based line number of the offending line
    record : Optional[int]
        the 0-based index of the offending record, None for the header line
    """

    def __init__(self, message: str, path: Optional[str] = None, line: int = 0, record: Optional[int] = None):
        location = f'{path or "<stream>"}:{line}'
        if record is not None:
            location += f' (record {record})'
        super().__init__(f'{location}: {message}')
        self.path = path
        self.line = line
        self.record = record
