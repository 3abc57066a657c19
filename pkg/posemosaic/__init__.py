from .core import Skeleton, Pose2D, Pose3D, Transform2D, Camera, AnnotatedImage, PoseRecord, SynthConfig, \
    BlendConfig, CameraSampling, PoseMosaicError
from .mocap import OrientedPose, QueryPose, subsample_poses, sample_virtual_cameras, orient_and_center, project, \
    normalize_crop
from .retrieval import Match, RetrievalIndex, build_index, conditioned_distance, alignment_transform
from .mosaic import warp_image, probability_map, index_map, compose_mosaic
from .blending import blend_weights, blend, region_size
from .clustering import PoseClass, ClusterModel, cluster_poses, decode_top_class, top_k_hypotheses
from .evaluation import mpjpe_abs, mpjpe_aligned, pixel_error, run_protocol
from .synthesis import SynthesisEngine, SynthesisResult
from .version import __version__
from .io import read_manifest, write_manifest, read_synth_records, write_synth_records, mirror_corpus, \
    generate_stick_corpus
