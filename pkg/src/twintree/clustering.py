"""Hierarchical clustering of graphs into trees of nested vertex sets.

Three clusterers share one center/medoid iteration: the purely
graph-metric one (distances are shortest paths in the symmetrized
graph), the spectral-embedding one (distances are Euclidean between
diffusion coordinates), and a semi-supervised threshold-dynamics scheme
for the finest level.  Coarser levels always come from re-clustering the
coarse-grained cluster graph, so every level is a partition nested in
the one below.

A ClusterTree records the hierarchy: the root at level 0 holds every
vertex, each internal node's children partition its members, and leaves
are single vertices.  The twin-tree builder runs the whole construction
twice per digraph — once for each symmetrized companion — component by
component.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from .digraph import (UndirectedGraph, WeightedDigraph, graph_distance,
                      reciprocal_lengths, symmetrize, weak_component_indices)


# -- cluster trees ---------------------------------------------------------


@dataclass
class ClusterNode:
    id: int
    level: int
    parent: Optional[int]
    children: list[int] = field(default_factory=list)
    members: frozenset[int] = frozenset()
    synthetic: bool = False  # created by depth padding


class ClusterTree:
    """Rooted hierarchy of nested vertex sets with ordered children."""

    def __init__(self, nodes: dict[int, ClusterNode], root: int = 0):
        self.nodes = nodes
        self.root = root
        self._leaf_of_vertex: dict[int, int] = {}
        for node in nodes.values():
            if not node.children:
                if len(node.members) != 1:
                    raise ValueError(
                        f"leaf node {node.id} must hold exactly one vertex")
                (v,) = node.members
                self._leaf_of_vertex[v] = node.id

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, node_id: int) -> ClusterNode:
        return self.nodes[node_id]

    def vertices(self) -> frozenset[int]:
        return self.nodes[self.root].members

    def depth(self) -> int:
        return max(n.level for n in self.nodes.values())

    def leaves(self) -> list[ClusterNode]:
        """Leaf nodes in left-to-right (depth-first) order."""
        out = []
        stack = [self.root]
        while stack:
            node = self.nodes[stack.pop()]
            if not node.children:
                out.append(node)
            else:
                stack.extend(reversed(node.children))
        return out

    def level_nodes(self, level: int) -> list[ClusterNode]:
        return [n for n in self.nodes.values() if n.level == level]

    def leaf_of_vertex(self, v: int) -> int:
        return self._leaf_of_vertex[v]

    def ancestor_at_level(self, v: int, level: int) -> int:
        """Node id covering vertex v at the given level.

        A leaf shallower than the requested level counts as its own
        ancestor (the depth-padding convention: a leaf is repeated as
        its own leftmost child).
        """
        nid = self._leaf_of_vertex[v]
        node = self.nodes[nid]
        if node.level <= level:
            return nid
        while node.level > level:
            node = self.nodes[node.parent]
        return node.id

    def partition_at_level(self, level: int) -> list[frozenset[int]]:
        """Vertex partition induced by a level, padding semantics included."""
        groups: dict[int, set[int]] = {}
        for v in sorted(self.vertices()):
            nid = self.ancestor_at_level(v, level)
            groups.setdefault(nid, set()).add(v)
        return [frozenset(groups[nid]) for nid in sorted(groups)]

    def validate(self) -> None:
        """Raise if the tree is not a consistent nested hierarchy."""
        root = self.nodes[self.root]
        if root.level != 0 or root.parent is not None:
            raise ValueError("root must be at level 0 with no parent")
        seen_leaves: set[int] = set()
        for node in self.nodes.values():
            if node.children:
                union: set[int] = set()
                for c in node.children:
                    child = self.nodes[c]
                    if child.parent != node.id:
                        raise ValueError(f"broken parent link at node {c}")
                    if child.level != node.level + 1:
                        raise ValueError(f"level skip at node {c}")
                    if union & child.members:
                        raise ValueError(f"overlapping children of {node.id}")
                    union |= child.members
                if union != set(node.members):
                    raise ValueError(
                        f"children of {node.id} do not cover its members")
            else:
                seen_leaves |= node.members
        if seen_leaves != set(root.members):
            raise ValueError("leaves do not cover the root")

    # -- persistence ------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {"nodes": [
            {"id": n.id, "level": n.level, "parent": n.parent,
             "children": list(n.children),
             "members": sorted(n.members),
             "synthetic": n.synthetic}
            for n in sorted(self.nodes.values(), key=lambda x: x.id)]}

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ClusterTree":
        nodes = {}
        root = None
        for rec in obj["nodes"]:
            node = ClusterNode(
                id=int(rec["id"]), level=int(rec["level"]),
                parent=None if rec["parent"] is None else int(rec["parent"]),
                children=[int(c) for c in rec["children"]],
                members=frozenset(int(m) for m in rec["members"]),
                synthetic=bool(rec.get("synthetic", False)))
            nodes[node.id] = node
            if node.parent is None:
                root = node.id
        if root is None:
            raise ValueError("tree has no root")
        return cls(nodes, root)

    @classmethod
    def load_json(cls, path) -> "ClusterTree":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


def tree_from_partitions(vertices: Sequence[int],
                         partitions: Sequence[Sequence[frozenset[int]]],
                         ) -> ClusterTree:
    """Assemble a ClusterTree from nested level partitions.

    ``partitions[l-1]`` is the partition at level l (l = 1..L), coarsest
    first; each must refine the previous.  Leaves (single vertices) are
    appended below the finest partition, ordered by vertex id.
    """
    vertices = sorted(vertices)
    levels: list[list[frozenset[int]]] = [
        [frozenset(p) for p in level] for level in partitions]
    levels.append([frozenset([v]) for v in vertices])

    nodes: dict[int, ClusterNode] = {}
    root = ClusterNode(id=0, level=0, parent=None,
                       members=frozenset(vertices))
    nodes[0] = root
    next_id = 1
    prev_nodes = [root]
    for depth, groups in enumerate(levels, start=1):
        union: set[int] = set()
        for g in groups:
            union |= g
        if union != set(vertices):
            raise ValueError(f"level {depth} does not cover the vertex set")
        this_level: list[ClusterNode] = []
        for parent in prev_nodes:
            for g in groups:
                if not g <= parent.members:
                    if g & parent.members:
                        raise ValueError(
                            f"level {depth} does not nest in level {depth-1}")
                    continue
                node = ClusterNode(id=next_id, level=depth,
                                   parent=parent.id, members=g)
                next_id += 1
                parent.children.append(node.id)
                nodes[node.id] = node
                this_level.append(node)
        prev_nodes = this_level
    tree = ClusterTree(nodes)
    tree.validate()
    return tree


def pad_to_depth(tree: ClusterTree, depth: int) -> ClusterTree:
    """Extend shallow leaves by chains of synthetic single children.

    Every leaf above the requested depth is repeated as its own
    (leftmost and only) child until it reaches it; the copies carry the
    synthetic flag so interval construction can collapse them again.
    """
    if depth < tree.depth():
        raise ValueError("cannot pad to a depth above existing leaves")
    nodes = {nid: ClusterNode(n.id, n.level, n.parent, list(n.children),
                              n.members, n.synthetic)
             for nid, n in tree.nodes.items()}
    next_id = max(nodes) + 1
    for leaf in tree.leaves():
        cur = nodes[leaf.id]
        while cur.level < depth:
            child = ClusterNode(id=next_id, level=cur.level + 1,
                                parent=cur.id, members=cur.members,
                                synthetic=True)
            next_id += 1
            cur.children.append(child.id)
            nodes[child.id] = child
            cur = child
    return ClusterTree(nodes, tree.root)


# -- level specifications ---------------------------------------------------


def check_level_spec(K: Sequence[int], n: int) -> tuple[int, ...]:
    """Validate cluster counts: strictly increasing, inside (1, n)."""
    K = tuple(int(k) for k in K)
    for k in K:
        if not 1 < k < n:
            raise ValueError(f"cluster count {k} outside (1, {n})")
    if any(a >= b for a, b in zip(K, K[1:])):
        raise ValueError(f"cluster counts must strictly increase: {K}")
    return K


# -- the shared center/medoid iteration ------------------------------------


def _medoid_iterate(dist: np.ndarray, k: int, centers: np.ndarray,
                    max_iter: int) -> tuple[np.ndarray, np.ndarray]:
    """Assign-to-nearest-center / recenter-at-medoid until stable.

    Ties in the assignment go to the lowest center index; medoid ties go
    to the lowest vertex id.  An empty cluster (possible only when two
    points coincide) is re-seeded with the vertex farthest from its
    assigned center.
    """
    n = dist.shape[0]
    centers = centers.copy()
    assign = np.zeros(n, dtype=int)
    for _ in range(max_iter):
        to_centers = dist[centers]                    # (k, n)
        assign = np.argmin(to_centers, axis=0)
        counts = np.bincount(assign, minlength=k)
        reseeds = 0
        while counts.min() == 0 and reseeds < 2 * k:
            empty = int(np.flatnonzero(counts == 0)[0])
            own = to_centers[assign, np.arange(n)]
            centers[empty] = int(np.argmax(own))
            to_centers = dist[centers]
            assign = np.argmin(to_centers, axis=0)
            counts = np.bincount(assign, minlength=k)
            reseeds += 1
        new_centers = centers.copy()
        for j in range(k):
            member = np.flatnonzero(assign == j)
            if member.size == 0:
                continue
            within = dist[np.ix_(member, member)].sum(axis=1)
            new_centers[j] = member[int(np.argmin(within))]
        if np.array_equal(new_centers, centers):
            break
        centers = new_centers
    return assign, centers


def _medoid_objective(dist: np.ndarray, assign: np.ndarray,
                      centers: np.ndarray) -> float:
    return float(dist[centers[assign], np.arange(dist.shape[0])].sum())


def _initial_centers(n: int, k: int, rng: np.random.Generator,
                     seed_vertices: Optional[Sequence[int]] = None
                     ) -> np.ndarray:
    if seed_vertices:
        chosen = list(dict.fromkeys(int(v) for v in seed_vertices))[:k]
        pool = np.setdiff1d(np.arange(n), chosen)
        extra = k - len(chosen)
        if extra > 0:
            chosen.extend(rng.choice(pool, size=extra, replace=False))
        return np.asarray(chosen, dtype=int)
    return rng.choice(n, size=k, replace=False)


def medoid_partition(dist: np.ndarray, k: int, rng: np.random.Generator,
                     seed_vertices: Optional[Sequence[int]] = None,
                     n_init: int = 1, max_iter: int = 100) -> np.ndarray:
    """Best-of-n_init medoid clustering of a finite metric; returns labels."""
    if not np.all(np.isfinite(dist)):
        raise ValueError("distance matrix has infinite entries "
                         "(graph must be connected)")
    best: Optional[tuple[float, np.ndarray]] = None
    for trial in range(max(1, n_init)):
        seeds = seed_vertices if trial == 0 else None
        centers = _initial_centers(dist.shape[0], k, rng, seeds)
        assign, centers = _medoid_iterate(dist, k, centers, max_iter)
        obj = _medoid_objective(dist, assign, centers)
        if best is None or obj < best[0]:
            best = (obj, assign)
    return best[1]


def _labels_to_groups(assign: np.ndarray, units: list[frozenset[int]],
                      k: int) -> list[frozenset[int]]:
    groups = []
    for j in range(k):
        idx = np.flatnonzero(assign == j)
        if idx.size:
            merged: set[int] = set()
            for i in idx:
                merged |= units[int(i)]
            groups.append(frozenset(merged))
    return groups


def _medoid_hierarchy(G, K: Sequence[int], rng, dist_of,
                      seed_vertices: Optional[list[int]], n_init: int,
                      max_iter: int) -> list[list[frozenset[int]]]:
    """Finest-to-coarsest medoid clustering with coarse-graining.

    dist_of maps the current (coarse) graph to its distance matrix.
    Seeds apply to the finest level only, where vertices are original.
    Returns the level partitions in coarsest-first order, each a list
    of original-vertex sets.
    """
    units = [frozenset([v]) for v in range(G.n)]
    current = G
    partitions: dict[int, list[frozenset[int]]] = {}
    for li in range(len(K), 0, -1):
        k = K[li - 1]
        dist = dist_of(current)
        seeds = seed_vertices if li == len(K) else None
        assign = medoid_partition(dist, k, rng, seeds, n_init, max_iter)
        coarse_units = [frozenset([u]) for u in range(current.n)]
        coarse_groups = _labels_to_groups(assign, coarse_units, k)
        groups = _labels_to_groups(assign, units, k)
        current = coarse_grain(current, coarse_groups)
        units = groups
        partitions[li] = groups
    return [partitions[li] for li in range(1, len(K) + 1)]


# -- clusterers -------------------------------------------------------------


def _edge_length_graph(G: UndirectedGraph, edge_length: str) -> UndirectedGraph:
    if edge_length == "reciprocal":
        return reciprocal_lengths(G)
    if edge_length == "raw":
        return G
    raise ValueError(f"unknown edge_length {edge_length!r}")


def _label_seed_vertices(labeled: Optional[dict]) -> Optional[list[int]]:
    """One representative (lowest id) per distinct class, classes sorted."""
    if not labeled:
        return None
    reps: dict[str, int] = {}
    for v, cls in labeled.items():
        key = "/".join(cls) if isinstance(cls, tuple) else str(cls)
        if key not in reps or v < reps[key]:
            reps[key] = int(v)
    return [reps[key] for key in sorted(reps)]


def nhc_cluster(G: UndirectedGraph, K: Sequence[int], seed: int = 0,
                labeled: Optional[dict] = None,
                edge_length: str = "reciprocal", n_init: int = 1,
                max_iter: int = 100) -> ClusterTree:
    """Hierarchical medoid clustering under graph distance.

    The finest level partitions the vertices into K[-1] clusters by the
    center/medoid iteration on all-pairs shortest-path distances; each
    coarser level re-runs it on the coarse-grained cluster graph, whose
    edge weight between two clusters is the total original weight
    between their members.  With edge_length="reciprocal" (default) an
    edge of weight w contributes length 1/w to a path, so heavily
    coupled vertices are near each other; "raw" uses weights as lengths
    verbatim.
    """
    K = check_level_spec(K, G.n)
    rng = np.random.default_rng(seed)
    ordered = _medoid_hierarchy(
        G, K, rng,
        lambda cur: graph_distance(_edge_length_graph(cur, edge_length)),
        _label_seed_vertices(labeled), n_init, max_iter)
    return tree_from_partitions(range(G.n), ordered)


def coarse_grain(G: WeightedDigraph,
                 partition: Sequence[frozenset[int]]) -> WeightedDigraph:
    """Sum-collapse a graph onto a partition of its vertices.

    The weight between coarse vertices i and j is the sum of all
    original weights from members of part i to members of part j.
    Passing the singleton partition returns a graph equal to G.
    """
    parts = [frozenset(p) for p in partition]
    covered: set[int] = set()
    for p in parts:
        if covered & p:
            raise ValueError("partition parts overlap")
        covered |= p
    if covered != set(range(G.n)):
        raise ValueError("partition must cover every vertex")
    k = len(parts)
    rows, cols = [], []
    for j, p in enumerate(parts):
        for v in p:
            rows.append(j)
            cols.append(v)
    S = sparse.csr_array((np.ones(len(rows)), (rows, cols)),
                         shape=(k, G.n))
    coarse = sparse.csr_array(S @ G.weights @ S.T)
    if isinstance(G, UndirectedGraph):
        from .digraph import _mirror_upper
        return UndirectedGraph(_mirror_upper(coarse))
    return WeightedDigraph(coarse)


def spectral_embedding(G: UndirectedGraph, n_eig: int, t: float = 1.0,
                       seed: int = 0) -> np.ndarray:
    """Diffusion coordinates from the degree-normalized adjacency.

    Rows are vertices; column i is the i-th largest-eigenvalue
    eigenvector of the random-walk matrix, scaled by eigenvalue**t.
    Signs are fixed (largest-magnitude entry positive) so the embedding
    is reproducible.
    """
    n = G.n
    n_eig = min(n_eig, n)
    deg = G.out_degrees()
    if np.any(deg <= 0):
        raise ValueError("every vertex needs positive degree to embed")
    dhalf = 1.0 / np.sqrt(deg)
    A = G.weights
    S = sparse.csr_array(A.multiply(dhalf[:, None]).multiply(dhalf[None, :]))
    if n_eig >= n - 1 or n <= 400:
        lam, U = np.linalg.eigh(S.toarray())
        lam, U = lam[::-1], U[:, ::-1]
        lam, U = lam[:n_eig], U[:, :n_eig]
    else:
        v0 = np.random.default_rng(seed).standard_normal(n)
        lam, U = sparse.linalg.eigsh(S, k=n_eig, which="LA", v0=v0,
                                     tol=1e-8)
        order = np.argsort(lam)[::-1]
        lam, U = lam[order], U[:, order]
    for j in range(U.shape[1]):
        i = int(np.argmax(np.abs(U[:, j])))
        if U[i, j] < 0:
            U[:, j] = -U[:, j]
    phi = dhalf[:, None] * U
    scale = np.sign(lam) * np.abs(lam) ** t if t != 1.0 else lam
    return phi * scale[None, :]


def mll_cluster(G: UndirectedGraph, K: Sequence[int], seed: int = 0,
                n_eig: int = 30, t: float = 1.0,
                labeled: Optional[dict] = None, n_init: int = 1,
                max_iter: int = 100) -> ClusterTree:
    """Hierarchical medoid clustering in diffusion-embedding space.

    Per level the current (coarse) graph is embedded with up to n_eig
    eigenvectors and clustered by the same center/medoid iteration as
    the graph-metric clusterer, but under Euclidean distance between
    embedded points; levels above the finest re-embed the coarse-grained
    graph.
    """
    K = check_level_spec(K, G.n)
    rng = np.random.default_rng(seed)

    def embed_dist(cur):
        coords = spectral_embedding(cur, n_eig, t, seed)
        diff = coords[:, None, :] - coords[None, :, :]
        return np.sqrt((diff * diff).sum(axis=2))

    ordered = _medoid_hierarchy(G, K, rng, embed_dist,
                                _label_seed_vertices(labeled), n_init,
                                max_iter)
    return tree_from_partitions(range(G.n), ordered)


def mbo_cluster(G: UndirectedGraph, labeled: dict[int, int], n_classes: int,
                n_eig: int = 50, dt: float = 0.01, tol: float = 1e-3,
                fidelity: float = 50.0, seed: int = 0,
                max_iter: int = 500) -> np.ndarray:
    """Semi-supervised partition by thresholded diffusion.

    Class indicator rows diffuse in the span of the lowest n_eig
    eigenvectors of the symmetric normalized Laplacian, with a fidelity
    term of strength ``fidelity`` pinning labeled rows, and are
    re-thresholded to the nearest class indicator after every step; the
    iteration stops when the relative change of the thresholded state
    drops below tol.  Unlabeled rows start at the simplex barycenter so
    the labels alone drive the spread.  Returns the class index per
    vertex.
    """
    if not labeled:
        raise ValueError("semi-supervised clustering needs labeled vertices")
    n = G.n
    if not 1 <= n_classes:
        raise ValueError("need at least one class")
    for v, c in labeled.items():
        if not 0 <= int(c) < n_classes:
            raise ValueError(f"label class {c} outside 0..{n_classes - 1}")
    n_eig = min(n_eig, n)
    deg = G.out_degrees()
    if np.any(deg <= 0):
        raise ValueError("every vertex needs positive degree")
    dhalf = 1.0 / np.sqrt(deg)
    A = G.weights
    S = A.multiply(dhalf[:, None]).multiply(dhalf[None, :])
    lap = np.eye(n) - np.asarray(S.todense())
    lam, U = np.linalg.eigh(lap)
    lam, U = lam[:n_eig], U[:, :n_eig]

    u = np.full((n, n_classes), 1.0 / n_classes)
    anchor = np.zeros_like(u)
    mask = np.zeros(n)
    for v, c in labeled.items():
        anchor[int(v)] = 0.0
        anchor[int(v), int(c)] = 1.0
        mask[int(v)] = 1.0
    u[mask == 1.0] = anchor[mask == 1.0]

    prev = u.copy()
    for _ in range(max_iter):
        force = fidelity * mask[:, None] * (u - anchor)
        a = U.T @ u
        b = U.T @ force
        a = (a - dt * b) / (1.0 + dt * lam[:, None])
        u = U @ a
        idx = np.argmax(u, axis=1)
        u = np.zeros_like(u)
        u[np.arange(n), idx] = 1.0
        change = float(((u - prev) ** 2).sum())
        scale = max(float((u ** 2).sum()), 1.0)
        if change / scale < tol:
            break
        prev = u.copy()
    return np.argmax(u, axis=1)


# -- the twin-tree construction ---------------------------------------------


_CLUSTER_ALGOS = ("nhc", "mll", "mbo")


def _cluster_component(S: UndirectedGraph, K: tuple[int, ...], algo: str,
                       seed: int, labeled: Optional[dict],
                       algo_params: dict) -> ClusterTree:
    if algo == "nhc":
        return nhc_cluster(S, K, seed=seed, labeled=labeled, **algo_params)
    if algo == "mll":
        return mll_cluster(S, K, seed=seed, labeled=labeled, **algo_params)
    if algo == "mbo":
        if not labeled:
            raise ValueError("mbo needs labeled vertices")
        classes = sorted({"/".join(c) if isinstance(c, tuple) else str(c)
                          for c in labeled.values()})
        if not K or K[-1] != len(classes):
            raise ValueError(
                f"finest level must have {len(classes)} clusters "
                f"(one per label class), got K={K}")
        class_idx = {name: i for i, name in enumerate(classes)}
        lab = {int(v): class_idx["/".join(c) if isinstance(c, tuple)
                                 else str(c)]
               for v, c in labeled.items()}
        mbo_params = {p: algo_params[p] for p in
                      ("n_eig", "dt", "tol", "fidelity", "max_iter")
                      if p in algo_params}
        assign = mbo_cluster(S, lab, n_classes=K[-1], seed=seed, **mbo_params)
        units = [frozenset([v]) for v in range(S.n)]
        finest = _labels_to_groups(assign, units, K[-1])
        partitions = {len(K): finest}
        current = coarse_grain(S, finest)
        units2 = finest
        rng = np.random.default_rng(seed)
        for li in range(len(K) - 1, 0, -1):
            k = K[li - 1]
            dist = graph_distance(reciprocal_lengths(current))
            assign2 = medoid_partition(dist, k, rng)
            coarse_units = [frozenset([u]) for u in range(current.n)]
            coarse_groups = _labels_to_groups(assign2, coarse_units, k)
            groups = _labels_to_groups(assign2, units2, k)
            current = coarse_grain(current, coarse_groups)
            units2 = groups
            partitions[li] = groups
        ordered = [partitions[li] for li in range(1, len(K) + 1)]
        return tree_from_partitions(range(S.n), ordered)
    raise ValueError(f"unknown clustering algorithm {algo!r}")


def _relabel_tree(tree: ClusterTree, vertex_map: Sequence[int]) -> ClusterTree:
    """Rewrite member ids through a local-id -> original-id map."""
    nodes = {}
    for nid, n in tree.nodes.items():
        nodes[nid] = ClusterNode(
            n.id, n.level, n.parent, list(n.children),
            frozenset(int(vertex_map[v]) for v in n.members), n.synthetic)
    return ClusterTree(nodes, tree.root)


def twt(G: WeightedDigraph, K: Sequence[int] = (), algo: str = "nhc",
        seed: int = 0, labeled: Optional[dict] = None,
        tiny_threshold: int = 4,
        **algo_params) -> tuple[ClusterTree, ClusterTree]:
    """Build the twin cluster trees of a digraph.

    Weak components become the root's children (unless there is exactly
    one, which then *is* the root); each component large enough is
    clustered on its own symmetrized graph — the "es" companion for the
    first tree, the "os" companion for the second — with the requested
    level sizes clipped to what the component can support.  Components
    below tiny_threshold vertices attach their vertices directly.
    """
    if algo not in _CLUSTER_ALGOS:
        raise ValueError(f"unknown clustering algorithm {algo!r}")
    K = tuple(int(k) for k in K)
    comps = weak_component_indices(G)
    seed_seq = np.random.SeedSequence(seed)
    comp_seeds = [s.generate_state(1)[0] for s in seed_seq.spawn(2 * len(comps))]

    trees = []
    for side_index, side in enumerate(("es", "os")):
        subtrees: list[Optional[ClusterTree]] = []
        for ci, idx in enumerate(comps):
            sub_seed = int(comp_seeds[2 * ci + side_index])
            if len(idx) < tiny_threshold:
                subtrees.append(None)
                continue
            sub = G.subgraph(idx)
            S = symmetrize(sub, side)
            K_c = tuple(k for k in K if 1 < k < len(idx))
            local_labeled = None
            if labeled:
                pos = {int(v): j for j, v in enumerate(idx)}
                local_labeled = {pos[v]: c for v, c in labeled.items()
                                 if int(v) in pos}
                if not local_labeled:
                    local_labeled = None
            if algo == "mbo" and local_labeled:
                classes = {"/".join(c) if isinstance(c, tuple) else str(c)
                           for c in local_labeled.values()}
                K_c = tuple(k for k in K_c if k < len(classes)) + (len(classes),)
                if K_c[-1] >= len(idx) or K_c[-1] < 2:
                    subtrees.append(None)
                    continue
            elif algo == "mbo":
                subtrees.append(None)
                continue
            sub_tree = _cluster_component(S, K_c, algo, sub_seed,
                                          local_labeled, dict(algo_params))
            subtrees.append(_relabel_tree(sub_tree, idx))
        trees.append(_graft_components(G, comps, subtrees))
    return trees[0], trees[1]


def _graft_components(G: WeightedDigraph, comps: list[np.ndarray],
                      subtrees: list[Optional[ClusterTree]]) -> ClusterTree:
    if len(comps) == 1:
        if subtrees[0] is not None:
            tree = subtrees[0]
            tree.validate()
            return tree
        # a single tiny component: vertices hang straight off the root
        nodes = {0: ClusterNode(id=0, level=0, parent=None,
                                members=frozenset(range(G.n)))}
        for v in range(G.n):
            nodes[v + 1] = ClusterNode(id=v + 1, level=1, parent=0,
                                       members=frozenset([v]))
            nodes[0].children.append(v + 1)
        tree = ClusterTree(nodes, 0)
        tree.validate()
        return tree

    nodes: dict[int, ClusterNode] = {}
    root = ClusterNode(id=0, level=0, parent=None,
                       members=frozenset(range(G.n)))
    nodes[0] = root
    next_id = 1
    for idx, sub in zip(comps, subtrees):
        comp_node = ClusterNode(id=next_id, level=1, parent=0,
                                members=frozenset(int(v) for v in idx))
        nodes[next_id] = comp_node
        root.children.append(next_id)
        next_id += 1
        if sub is None:
            for v in sorted(int(v) for v in idx):
                leaf = ClusterNode(id=next_id, level=2, parent=comp_node.id,
                                   members=frozenset([v]))
                nodes[next_id] = leaf
                comp_node.children.append(next_id)
                next_id += 1
            continue
        # graft: the subtree root coincides with the component node
        remap = {sub.root: comp_node.id}
        order = [c for c in sub.nodes[sub.root].children]
        queue = list(order)
        while queue:
            old = queue.pop(0)
            n = sub.nodes[old]
            remap[old] = next_id
            next_id += 1
            queue.extend(n.children)
        for old, new in remap.items():
            if old == sub.root:
                continue
            n = sub.nodes[old]
            nodes[new] = ClusterNode(
                id=new, level=n.level + 1, parent=remap[n.parent],
                children=[remap[c] for c in n.children],
                members=n.members, synthetic=n.synthetic)
        comp_node.children.extend(remap[c]
                                  for c in sub.nodes[sub.root].children)
    tree = ClusterTree(nodes, 0)
    tree.validate()
    return tree
