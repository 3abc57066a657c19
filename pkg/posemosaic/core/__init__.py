from .errors import PoseMosaicError, NoVisibleNeighbor, InvalidRange, BehindCamera, DegeneratePose, \
    DegenerateSegment, OccludedJoint, AllOccluded, NoCandidate, Degenerate, TooFewPoses, JointCountMismatch, \
    MissingPrediction, ParseError, SchemaMismatch, UnknownId
from .poses import Pose2D, Pose3D, Transform2D, Camera, AnnotatedImage
from .skeleton import Skeleton, validate_skeleton, farthest_connected_joint
from .config import SynthConfig, BlendConfig, CameraSampling
from .records import PoseRecord
