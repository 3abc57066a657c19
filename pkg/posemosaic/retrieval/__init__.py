from .distance import JointWeights, alignment_transform, joint_weights, conditioned_distance, \
    batch_conditioned_distances
from .search import Match, CorpusArrays, retrieve_matches
from .index import RetrievalIndex, build_index, query_index
