from typing import List, Sequence, Tuple
import numpy as np
from scipy.spatial import Delaunay, QhullError

from posemosaic.core.errors import Degenerate


def delaunay(points: Sequence[Tuple[float, float]]) -> List[Tuple[int, int, int]]:
    """
    Computes the Delaunay triangulation of a set of 2D points with Qhull.
    The triangles cover the convex hull of the points and no input point lies strictly inside the circumcircle of
    a triangle. Duplicated points are triangulated once.

    :param points: the (x, y) points
    :return: the triangles as triples of point indices
    :raises Degenerate: if there are fewer than 3 points or all points are collinear
    """
    return [tuple(int(v) for v in simplex) for simplex in _triangulate(np.asarray(points, dtype=np.float64)).simplices]


def _triangulate(points: np.ndarray) -> Delaunay:
    if len(points) < 3:
        raise Degenerate(f'At least 3 points are needed, got {len(points)}.')
    centered = points - points.mean(axis=0)
    extent = max(float(np.abs(centered).max()), 1.0)
    if np.linalg.matrix_rank(centered, tol=1e-9 * extent) < 2:
        raise Degenerate('All points are collinear.')
    try:
        return Delaunay(points)
    except QhullError as e:
        raise Degenerate(str(e)) from e


class TriangleInterpolator:
    """
    A scalar field defined by values at 2D vertices: barycentric interpolation inside the Delaunay triangles and,
    outside the convex hull, the value at the nearest point of the hull boundary (linearly interpolated along the
    nearest hull edge).

    The field is continuous everywhere, in particular across shared triangle edges and across the hull boundary.

    Attributes
    ----------
    points : np.ndarray
        (m, 2) vertex coordinates
    values : np.ndarray
        (m,) vertex values
    """
    points: np.ndarray
    values: np.ndarray
    _tri: Delaunay
    _hull: np.ndarray

    def __init__(self, points: Sequence[Tuple[float, float]], values: Sequence[float]):
        """
        Triangulates the vertices.

        :param points: the vertex coordinates
        :param values: the value of each vertex
        :raises Degenerate: if the vertices cannot be triangulated
        """
        self.points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        self.values = np.asarray(values, dtype=np.float64).reshape(-1)
        if len(self.values) != len(self.points):
            raise ValueError('Exactly one value per vertex is required.')
        self._tri = _triangulate(self.points)
        self._hull = self._tri.convex_hull

    def triangles(self) -> np.ndarray:
        return self._tri.simplices

    def __call__(self, xy: np.ndarray) -> np.ndarray:
        """
        Evaluates the field at the given (k, 2) points.
        """
        xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
        result = np.empty(len(xy))
        simplex = self._tri.find_simplex(xy)
        inside = simplex >= 0
        if inside.any():
            s = simplex[inside]
            transform = self._tri.transform[s]
            b = np.einsum('kij,kj->ki', transform[:, :2], xy[inside] - transform[:, 2])
            bary = np.column_stack([b, 1.0 - b.sum(axis=1)])
            result[inside] = np.einsum('ki,ki->k', bary, self.values[self._tri.simplices[s]])
        if (~inside).any():
            result[~inside] = self._boundary_values(xy[~inside])
        return result

    def _boundary_values(self, xy: np.ndarray) -> np.ndarray:
        start = self.points[self._hull[:, 0]]
        end = self.points[self._hull[:, 1]]
        edge = end - start
        length2 = np.einsum('ej,ej->e', edge, edge)
        rel = xy[:, None, :] - start[None]
        t = np.clip(np.einsum('kej,ej->ke', rel, edge) / length2, 0.0, 1.0)
        nearest = start[None] + t[..., None] * edge[None]
        dist2 = np.sum((xy[:, None, :] - nearest) ** 2, axis=2)
        best = np.argmin(dist2, axis=1)
        rows = np.arange(len(xy))
        tb = t[rows, best]
        return (1.0 - tb) * self.values[self._hull[best, 0]] + tb * self.values[self._hull[best, 1]]

    def rasterize(self, height: int, width: int) -> np.ndarray:
        """
        Samples the field at every pixel center (x = column, y = row) of a height x width raster.
        """
        v, u = np.mgrid[0:height, 0:width].astype(np.float64)
        return self(np.stack([u.ravel(), v.ravel()], axis=1)).reshape(height, width)
