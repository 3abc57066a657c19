from .region import distance_to_pose, region_size, region_size_map
from .weights import BlendWeights, blend_weights, blend
