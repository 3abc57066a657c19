from typing import List, Tuple, Sequence, Optional
import networkx as nx
import numpy as np

from posemosaic.core.errors import NoVisibleNeighbor

DEFAULT_JOINTS = ('head',
                  'l_shoulder', 'r_shoulder',
                  'l_elbow', 'r_elbow',
                  'l_wrist', 'r_wrist',
                  'l_hip', 'r_hip',
                  'l_knee', 'r_knee',
                  'l_ankle', 'r_ankle')


class Skeleton:
    """
    A skeleton is a named set of joints connected by kinematic edges forming a tree.
    It defines which joints are *directly connected*, which joints are the left/right counterparts of each other
    and which joints make up the torso.

    The skeleton is internally represented as an undirected NetworkX graph whose nodes are joint indices.
    A skeleton can be constructed from any data, also invalid one, so that its structure can be checked with
    :func:`validate_skeleton`.

    Attributes
    ----------
    joints : Tuple[str, ...]
        the ordered joint names, of length n
    edges : Tuple[Tuple[int, int], ...]
        the (parent, child) joint index pairs
    left_right_pairs : Tuple[Tuple[int, int], ...]
        the (left index, right index) pairs
    torso_joints : Tuple[int, ...]
        the indices of the joints whose mean defines the torso center
    root : int
        the root joint index

    Examples
    --------
    The default 13-joint skeleton can be obtained and inspected as follows::

        from posemosaic import Skeleton
        s = Skeleton.default()
        s.n                  # 13
        s.neighbors(3)       # [1, 5], shoulder and wrist of the left elbow
    """
    joints: Tuple[str, ...]
    edges: Tuple[Tuple[int, int], ...]
    left_right_pairs: Tuple[Tuple[int, int], ...]
    torso_joints: Tuple[int, ...]
    root: int
    _graph: nx.Graph

    def __init__(self,
                 joints: Sequence[str],
                 edges: Sequence[Tuple[int, int]],
                 left_right_pairs: Sequence[Tuple[int, int]] = (),
                 torso_joints: Sequence[int] = (),
                 root: int = 0):
        """
        Initializes a skeleton from its joint names, kinematic edges, left/right pairs, torso joints and root.

        :param joints: the ordered joint names
        :param edges: the (parent, child) joint index pairs
        :param left_right_pairs: the (left, right) joint index pairs
        :param torso_joints: the joint indices that make up the torso
        :param root: the root joint index
        """
        self.joints = tuple(str(j) for j in joints)
        self.edges = tuple((int(a), int(b)) for a, b in edges)
        self.left_right_pairs = tuple((int(a), int(b)) for a, b in left_right_pairs)
        self.torso_joints = tuple(int(t) for t in torso_joints)
        self.root = int(root)
        self._graph = nx.Graph()
        self._graph.add_nodes_from(range(len(self.joints)))
        self._graph.add_edges_from(self.edges)

    @staticmethod
    def default() -> 'Skeleton':
        """
        Returns the default 13-joint skeleton: head, shoulders, elbows, wrists, hips, knees and ankles.
        The head is the root and is connected to both shoulders, each shoulder to the hip on the same side.
        """
        index = {name: i for i, name in enumerate(DEFAULT_JOINTS)}
        edges = [('head', 'l_shoulder'), ('head', 'r_shoulder')]
        for side in ('l', 'r'):
            edges += [(f'{side}_shoulder', f'{side}_elbow'), (f'{side}_elbow', f'{side}_wrist'),
                      (f'{side}_shoulder', f'{side}_hip'),
                      (f'{side}_hip', f'{side}_knee'), (f'{side}_knee', f'{side}_ankle')]
        pairs = [(index[f'l_{part}'], index[f'r_{part}'])
                 for part in ('shoulder', 'elbow', 'wrist', 'hip', 'knee', 'ankle')]
        torso = [index[name] for name in ('l_shoulder', 'r_shoulder', 'l_hip', 'r_hip')]
        return Skeleton(DEFAULT_JOINTS, [(index[a], index[b]) for a, b in edges], pairs, torso, index['head'])

    @property
    def n(self) -> int:
        return len(self.joints)

    def graph(self) -> nx.Graph:
        """
        Returns a copy of the skeleton as an undirected NetworkX graph over joint indices,
        with the joint name stored in the ``name`` node attribute.

        :return: the corresponding NetworkX graph
        """
        graph = nx.Graph(self._graph)
        nx.set_node_attributes(graph, {i: name for i, name in enumerate(self.joints)
                                       if i in graph}, 'name')
        return graph

    def neighbors(self, j: int) -> List[int]:
        """
        Returns the joints directly connected to joint j, in increasing index order.

        :param j: the joint index
        :return: the sorted list of neighbor indices
        """
        return sorted(self._graph.neighbors(j))

    def index(self, name: str) -> int:
        return self.joints.index(name)

    def mirror_permutation(self) -> np.ndarray:
        """
        Returns the joint permutation that swaps every left joint with its right counterpart.

        :return: an integer array perm such that mirrored[k] = original[perm[k]]
        """
        perm = np.arange(self.n)
        for left, right in self.left_right_pairs:
            perm[left], perm[right] = right, left
        return perm

    def bfs_edges(self) -> List[Tuple[int, int]]:
        """
        Returns the edges of the skeleton oriented away from the root, in breadth-first order.
        """
        return list(nx.bfs_edges(self._graph, self.root, sort_neighbors=sorted))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Skeleton):
            return False
        return (self.joints, self.edges, self.left_right_pairs, self.torso_joints, self.root) == \
            (other.joints, other.edges, other.left_right_pairs, other.torso_joints, other.root)

    def __hash__(self) -> int:
        return hash((self.joints, self.edges, self.left_right_pairs, self.torso_joints, self.root))

    def __repr__(self) -> str:
        return f'Skeleton({self.n} joints, {len(self.edges)} edges)'


def validate_skeleton(s: Skeleton) -> List[str]:
    """
    Checks the structural invariants of a skeleton and returns the list of violated ones.
    An empty list means that the skeleton is well-formed.

    The checked invariants are:

    - the edges form a single tree spanning all the joints (n-1 edges, connected, no cycle)
    - every index in edges, left_right_pairs, torso_joints and root is a valid joint index
    - left/right pairs join two distinct joints and no joint appears in more than one pair
    - torso joints are not repeated

    :param s: the skeleton to validate
    :return: the list of violations, each naming the failed invariant
    """
    violations = []
    n = s.n

    def in_range(i: int) -> bool:
        return 0 <= i < n

    valid_edges = [(a, b) for a, b in s.edges if in_range(a) and in_range(b)]
    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    graph.add_edges_from(valid_edges)
    if n == 0 or len(s.edges) != n - 1 or not nx.is_tree(graph):
        violations.append('edges do not form a tree')

    indices = [i for e in s.edges for i in e] + [i for p in s.left_right_pairs for i in p] + \
        list(s.torso_joints) + [s.root]
    if not all(in_range(i) for i in indices):
        violations.append('index out of range')

    paired = [i for p in s.left_right_pairs for i in p]
    if any(a == b for a, b in s.left_right_pairs):
        violations.append('left_right_pairs are not symmetric')
    if len(paired) != len(set(paired)):
        violations.append('left_right_pairs are not disjoint')

    if len(s.torso_joints) != len(set(s.torso_joints)):
        violations.append('torso_joints contain duplicates')
    return violations


def farthest_connected_joint(s: Skeleton, p: 'Pose2D', j: int) -> int:
    """
    Returns the joint directly connected to j that lies farthest from j in the given 2D pose.
    Only visible neighbors are considered; ties are broken by the smallest joint index.

    :param s: the skeleton defining the connectivity
    :param p: the 2D pose
    :param j: the joint index
    :return: the index of the farthest visible neighbor of j
    :raises NoVisibleNeighbor: if every neighbor of j is occluded in p
    """
    best, best_dist = None, -1.0
    for i in s.neighbors(j):
        if not p.visibility[i]:
            continue
        dist = float(np.hypot(*(p.joints[i] - p.joints[j])))
        if dist > best_dist:
            best, best_dist = i, dist
    if best is None:
        raise NoVisibleNeighbor(f'Every neighbor of joint {j} is occluded.')
    return best
