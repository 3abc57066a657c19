from .warping import WarpedCandidate, warp_image
from .triangulation import delaunay, TriangleInterpolator
from .probability import ProbabilityMap, probability_map
from .composition import IndexMap, index_map, compose_mosaic
