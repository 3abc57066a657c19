from .kmeans import PoseClass, ClusterModel, cluster_poses, assign_classes
from .decoding import ClassScores, Hypothesis, decode_top_class, top_k_hypotheses
from .scorers import Scorer, CentroidScorer3D, CentroidScorer2D, baseline_scorer
