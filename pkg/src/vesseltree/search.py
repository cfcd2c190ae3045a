"""Optimal-path search over the bifurcation graph.

Point-to-point queries use A* with the straight-line distance heuristic,
which is admissible because every edge's arc length is at least the chord
between its endpoints. Running the same code with a zero heuristic gives the
Dijkstra baseline, so the two are comparable instance by instance (costs
identical, A* never expands more nodes up to ties).

A SearchCache holds, for every node, the optimal cost and predecessor
relative to a root, so paths are later recovered by a predecessor walk with
no further search. Components not attached to the root's tree get a
quasi-root (their node closest to the root's component in straight-line
distance) and are searched from there; their cached values are relative to
that quasi-root.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import ValidationError
from .model import SkeletonEdge, SkeletonGraph, SkeletonNode

SHORTEST = "shortest_path"
WIDEST = "widest_path"

UNREACHABLE_CROSS_COMPONENT = "unreachable-across-components"


@dataclass
class PathResult:
    found: bool
    nodes: list[int] = field(default_factory=list)
    edges: list[int] = field(default_factory=list)
    total_cost: float = float("inf")
    arc_length: float = float("inf")
    directions: list[tuple[float, float, float]] = field(default_factory=list)
    nodes_expanded: int = 0
    reason: str | None = None


@dataclass
class SearchStats:
    nodes_expanded: int = 0
    wall_time_s: float = 0.0


@dataclass
class SearchCache:
    """Per-node optimal cost, predecessor node/edge, and component root.

    cost is geodesic mm for the shortest-path criterion; for the widest-path
    criterion it is the bottleneck diameter (mm) with +inf at each root. For
    widest caches the predecessor tree realizes optimal bottlenecks but makes
    no promise about arc length among bottleneck-equal paths; the standalone
    widest_path query applies the shortest-arc tie-break.
    """

    graph: SkeletonGraph
    root_id: int
    criterion: str
    cost: list[float]
    pred_node: list[int]
    pred_edge: list[int]
    component_root: list[int]
    quasi_roots: dict[int, int]  # component index -> root used there
    stats: SearchStats

    def reachable_from_root(self, node_id: int) -> bool:
        return int(self.component_root[node_id]) == self.root_id

    def cost_from_root(self, node_id: int) -> float:
        """Cost relative to the actual root; +inf outside its component."""
        if not self.reachable_from_root(node_id):
            return float("inf")
        return float(self.cost[node_id])


def _path_directions(g: SkeletonGraph, nodes: list[int]) -> list[tuple[float, float, float]]:
    pos = g.pos_list
    dirs = []
    for u, w in zip(nodes[:-1], nodes[1:]):
        dz = pos[w][0] - pos[u][0]
        dy = pos[w][1] - pos[u][1]
        dx = pos[w][2] - pos[u][2]
        n = math.sqrt(dz * dz + dy * dy + dx * dx)
        if n > 0:
            dz, dy, dx = dz / n, dy / n, dx / n
        dirs.append((dz, dy, dx))
    return dirs


def _reconstruct(g: SkeletonGraph, pred_node, pred_edge, start: int, goal: int,
                 total_cost: float, expanded: int) -> PathResult:
    nodes = [goal]
    edges: list[int] = []
    while nodes[-1] != start:
        edges.append(int(pred_edge[nodes[-1]]))
        nodes.append(int(pred_node[nodes[-1]]))
    nodes.reverse()
    edges.reverse()
    arc = 0.0
    for e in edges:
        arc += g.edges[e].arc_length
    return PathResult(
        found=True,
        nodes=nodes,
        edges=edges,
        total_cost=total_cost,
        arc_length=arc,
        directions=_path_directions(g, nodes),
        nodes_expanded=expanded,
    )


# ---------------------------------------------------------- shortest criteria

def _shortest_search(g: SkeletonGraph, start: int, goal: int | None, heuristic=None):
    """Uniform-cost / A* search. goal=None expands the whole component and
    heuristic=None means Dijkstra; both run the same loop so expansion counts
    are directly comparable.

    Returns (dist, pred_node, pred_edge, expanded). Ties in the priority
    queue break on the smaller node id for determinism.
    """
    n = len(g.nodes)
    inf = math.inf
    dist = [inf] * n
    pred_node = [-1] * n
    pred_edge = [-1] * n
    closed = [False] * n
    adj = g._adj_fast
    dist[start] = 0.0
    h0 = heuristic(start) if heuristic else 0.0
    heap = [(h0, start, 0.0)]
    expanded = 0
    while heap:
        f, u, du = heapq.heappop(heap)
        if closed[u] or du > dist[u]:
            continue
        closed[u] = True
        expanded += 1
        if goal is not None and u == goal:
            break
        for w, eid, arc, _ in adj[u]:
            if w == u or closed[w]:
                continue
            nd = du + arc
            if nd < dist[w]:
                dist[w] = nd
                pred_node[w] = u
                pred_edge[w] = eid
                hw = heuristic(w) if heuristic else 0.0
                heapq.heappush(heap, (nd + hw, w, nd))
    return dist, pred_node, pred_edge, expanded


def _euclid_heuristic(g: SkeletonGraph, goal: int):
    gz, gy, gx = g.pos_list[goal]
    pos = g.pos_list

    def h(u):
        p = pos[u]
        return math.sqrt((p[0] - gz) ** 2 + (p[1] - gy) ** 2 + (p[2] - gx) ** 2)

    return h


def astar_path(g: SkeletonGraph, from_node: int, to_node: int) -> PathResult:
    """Arc-length optimal path, straight-line distance as heuristic."""
    a = g.validate_node(from_node)
    b = g.validate_node(to_node)
    if g.component_of[a] != g.component_of[b]:
        return PathResult(found=False, reason=UNREACHABLE_CROSS_COMPONENT)
    dist, pn, pe, expanded = _shortest_search(g, a, b, _euclid_heuristic(g, b))
    return _reconstruct(g, pn, pe, a, b, float(dist[b]), expanded)


def dijkstra_path(g: SkeletonGraph, from_node: int, to_node: int) -> PathResult:
    """Arc-length optimal path without a heuristic; the comparison baseline."""
    a = g.validate_node(from_node)
    b = g.validate_node(to_node)
    if g.component_of[a] != g.component_of[b]:
        return PathResult(found=False, reason=UNREACHABLE_CROSS_COMPONENT)
    dist, pn, pe, expanded = _shortest_search(g, a, b, None)
    return _reconstruct(g, pn, pe, a, b, float(dist[b]), expanded)


# ------------------------------------------------------------ widest criteria

def _bottleneck_search(g: SkeletonGraph, start: int):
    """Maximize, per node, the minimum edge min_radius along the path.

    Label-setting with pop order (-bottleneck, node id); bottleneck of the
    start node is +inf (no edge constrains it yet).
    """
    n = len(g.nodes)
    bott = [-math.inf] * n
    pred_node = [-1] * n
    pred_edge = [-1] * n
    closed = [False] * n
    adj = g._adj_fast
    bott[start] = math.inf
    heap = [(-math.inf, start)]
    expanded = 0
    while heap:
        nb, u = heapq.heappop(heap)
        if closed[u] or -nb < bott[u]:
            continue
        closed[u] = True
        expanded += 1
        for w, eid, _, rmin in adj[u]:
            if w == u or closed[w]:
                continue
            cand = min(bott[u], rmin)
            if cand > bott[w]:
                bott[w] = cand
                pred_node[w] = u
                pred_edge[w] = eid
                heapq.heappush(heap, (-cand, w))
    return bott, pred_node, pred_edge, expanded


def widest_path(g: SkeletonGraph, from_node: int, to_node: int) -> PathResult:
    """Bottleneck-optimal path: maximize the smallest edge min_radius, then
    prefer the shortest arc length. total_cost is the bottleneck diameter."""
    a = g.validate_node(from_node)
    b = g.validate_node(to_node)
    if g.component_of[a] != g.component_of[b]:
        return PathResult(found=False, reason=UNREACHABLE_CROSS_COMPONENT)
    bott, _, _, exp1 = _bottleneck_search(g, a)
    bstar = float(bott[b])
    if a == b:
        return PathResult(found=True, nodes=[a], edges=[], total_cost=float("inf"),
                          arc_length=0.0, nodes_expanded=exp1)

    h = _euclid_heuristic(g, b)
    # Shortest arc length over the subgraph of edges wide enough for bstar.
    n = len(g.nodes)
    dist = [math.inf] * n
    pred_node = [-1] * n
    pred_edge = [-1] * n
    closed = [False] * n
    adj = g._adj_fast
    dist[a] = 0.0
    heap = [(h(a), a, 0.0)]
    expanded = 0
    while heap:
        f, u, du = heapq.heappop(heap)
        if closed[u] or du > dist[u]:
            continue
        closed[u] = True
        expanded += 1
        if u == b:
            break
        for w, eid, arc, rmin in adj[u]:
            if w == u or closed[w] or rmin < bstar:
                continue
            nd = du + arc
            if nd < dist[w]:
                dist[w] = nd
                pred_node[w] = u
                pred_edge[w] = eid
                heapq.heappush(heap, (nd + h(w), w, nd))
    res = _reconstruct(g, pred_node, pred_edge, a, b, 2.0 * bstar, exp1 + expanded)
    res.arc_length = float(dist[b])
    return res


# ------------------------------------------------------------------- caching

def _component_quasi_root(g: SkeletonGraph, comp: list[int], ref_tree: cKDTree) -> int:
    pts = g.positions[comp]
    dists, _ = ref_tree.query(pts)
    order = np.lexsort((comp, dists))  # min distance, ties to smaller id
    return int(comp[order[0]])


def build_cache(g: SkeletonGraph, root: int, criterion: str = SHORTEST) -> SearchCache:
    """Search from the root to every node of its component, then root every
    unattached component at its quasi-root and search there too."""
    root = g.validate_node(root)
    if criterion not in (SHORTEST, WIDEST):
        raise ValidationError(f"criterion: expected {SHORTEST!r} or {WIDEST!r}")
    t0 = time.perf_counter()
    n = len(g.nodes)
    cost = [math.inf] * n
    pred_node = [-1] * n
    pred_edge = [-1] * n
    component_root = [-1] * n
    quasi_roots: dict[int, int] = {}
    expanded = 0

    root_comp = int(g.component_of[root])
    ref_tree = cKDTree(g.positions[g.components[root_comp]])

    for ci, comp in enumerate(g.components):
        if ci == root_comp:
            comp_root = root
        else:
            comp_root = _component_quasi_root(g, comp, ref_tree)
        quasi_roots[ci] = comp_root
        if criterion == SHORTEST:
            dist, pn, pe, exp = _shortest_search(g, comp_root, None)
        else:
            dist, pn, pe, exp = _bottleneck_search(g, comp_root)
            dist = [2.0 * d if math.isfinite(d) else d for d in dist]  # radii to diameters
            dist[comp_root] = math.inf
        expanded += exp
        for nid in comp:
            cost[nid] = dist[nid]
            pred_node[nid] = pn[nid]
            pred_edge[nid] = pe[nid]
            component_root[nid] = comp_root

    return SearchCache(
        graph=g,
        root_id=root,
        criterion=criterion,
        cost=cost,
        pred_node=pred_node,
        pred_edge=pred_edge,
        component_root=component_root,
        quasi_roots=quasi_roots,
        stats=SearchStats(nodes_expanded=expanded, wall_time_s=time.perf_counter() - t0),
    )


def path_from_cache(c: SearchCache, to_node: int, to_component_root: bool = False) -> PathResult:
    """Recover a cached optimal path by walking predecessors; no re-search.

    For nodes outside the root's component the result is unreachable, unless
    to_component_root is set, in which case the path to that component's
    quasi-root is returned.
    """
    to_node = c.graph.validate_node(to_node)
    start = int(c.component_root[to_node])
    if start != c.root_id and not to_component_root:
        return PathResult(found=False, reason=UNREACHABLE_CROSS_COMPONENT)
    res = _reconstruct(c.graph, c.pred_node, c.pred_edge, start, to_node,
                       float(c.cost[to_node]), 0)
    if c.criterion == SHORTEST:
        res.total_cost = float(c.cost[to_node])
    return res


@dataclass
class VisibleSet:
    nodes: list[int]
    edge_fractions: dict[int, float]  # edge id -> visible fraction (0, 1]


def geodesic_visible_set(c: SearchCache, d_max: float) -> VisibleSet:
    """Nodes of the root's component within geodesic distance d_max, plus the
    visible fraction of each incident edge (linear in arc length), for
    smooth suppression of distant structures."""
    if d_max < 0:
        raise ValidationError("d_max: must be >= 0")
    if c.criterion != SHORTEST:
        raise ValidationError("geodesic visibility needs a shortest-path cache")
    g = c.graph
    comp = g.components[int(g.component_of[c.root_id])]
    visible = {nid for nid in comp if c.cost[nid] <= d_max}
    fractions: dict[int, float] = {}
    for e in g.edges:
        if int(g.component_of[e.a]) != int(g.component_of[c.root_id]):
            continue
        a_vis, b_vis = e.a in visible, e.b in visible
        if a_vis and b_vis:
            fractions[e.id] = 1.0
        elif a_vis or b_vis:
            near = float(c.cost[e.a] if a_vis else c.cost[e.b])
            frac = (d_max - near) / e.arc_length if e.arc_length > 0 else 0.0
            if e.a == e.b:
                frac *= 2.0  # a loop is entered from both ends
            frac = float(np.clip(frac, 0.0, 1.0))
            if frac > 0:
                fractions[e.id] = frac
    return VisibleSet(nodes=sorted(visible), edge_fractions=fractions)


def dual_root_candidates(ca: SearchCache, cb: SearchCache, band: float, ceiling: float) -> list[int]:
    """Nodes reading nearly equal, bounded geodesic distances from both caches."""
    if ca.graph is not cb.graph:
        raise ValidationError("caches must come from the same graph")
    out = []
    for nid in range(len(ca.graph.nodes)):
        da = ca.cost_from_root(nid)
        db = cb.cost_from_root(nid)
        if np.isfinite(da) and np.isfinite(db) and da <= ceiling and db <= ceiling \
                and abs(da - db) <= band:
            out.append(nid)
    return out


def dual_root_proximity(
    g: SkeletonGraph,
    root_a: int,
    root_b: int,
    band: float = 10.0,
    ceiling: float = 60.0,
) -> list[int]:
    """Nodes whose geodesic distances to two roots are both small and nearly
    equal; candidate sites of abnormal artery-vein shortcuts."""
    a = g.validate_node(root_a)
    b = g.validate_node(root_b)
    if a == b:
        raise ValidationError("roots must be distinct")
    ca = build_cache(g, a, SHORTEST)
    cb = build_cache(g, b, SHORTEST)
    return dual_root_candidates(ca, cb, band, ceiling)


@dataclass
class EdgeDirection:
    edge_id: int
    vector: np.ndarray  # unit tangent at the node, pointing outward along the edge
    role: str  # 'toward_root' | 'away_from_root' | 'cross'


def edge_directions(c: SearchCache, node_id: int) -> list[EdgeDirection]:
    """Unit tangent of each incident edge at the node, oriented outward: the
    predecessor edge points toward descending cost (back to the root), tree
    edges to successors point away from it. Two tangents pointing the same
    way mark a hairpin, the geometry a sudden narrowing tends to produce."""
    g = c.graph
    node_id = g.validate_node(node_id)
    out = []
    loop_seen: set[int] = set()
    for eid, other in g.incident(node_id):
        e = g.edges[eid]
        if e.a == e.b:
            # incident() lists a self-loop twice; emit one tangent per end
            use_a_end = eid not in loop_seen
            loop_seen.add(eid)
        else:
            use_a_end = e.a == node_id
        vec = e.polyline[1] - e.polyline[0] if use_a_end else e.polyline[-2] - e.polyline[-1]
        n = np.linalg.norm(vec)
        if n == 0:
            vec = g.positions[other] - g.positions[node_id]
            n = np.linalg.norm(vec)
        vec = vec / n if n > 0 else vec
        if int(c.pred_edge[node_id]) == eid:
            role = "toward_root"
        elif int(c.pred_node[other]) == node_id and int(c.pred_edge[other]) == eid:
            role = "away_from_root"
        else:
            role = "cross"
        out.append(EdgeDirection(edge_id=eid, vector=vec, role=role))
    return out


# ----------------------------------------------------- synthetic graphs/bench

def random_vessel_graph(
    n_nodes: int,
    seed: int,
    extra_edge_fraction: float = 0.15,
    n_components: int = 1,
    span: float = 100.0,
) -> SkeletonGraph:
    """Random spatially embedded graph with vessel-like locality: each node
    attaches near an existing one, plus a few extra chords. Arc lengths bow
    slightly above the chord so the straight-line heuristic stays admissible
    and informative."""
    if n_nodes < n_components:
        raise ValidationError("n_nodes must be >= n_components")
    rng = np.random.default_rng(seed)
    pos = rng.uniform(0, span, size=(n_nodes, 3))
    sizes = np.full(n_components, n_nodes // n_components)
    sizes[: n_nodes % n_components] += 1
    nodes = [SkeletonNode(i, pos[i], 0, 1.0) for i in range(n_nodes)]
    edges: list[SkeletonEdge] = []

    def add_edge(a, b):
        p0, p1 = pos[a], pos[b]
        mid = (p0 + p1) / 2
        perp = rng.normal(size=3)
        perp -= perp @ (p1 - p0) * (p1 - p0) / max((p1 - p0) @ (p1 - p0), 1e-12)
        norm = np.linalg.norm(perp)
        chord = np.linalg.norm(p1 - p0)
        if norm > 0 and chord > 0:
            mid = mid + perp / norm * chord * rng.uniform(0.02, 0.15)
        poly = np.vstack([p0, mid, p1])
        arc = float(np.linalg.norm(np.diff(poly, axis=0), axis=1).sum())
        rmin = float(rng.uniform(0.5, 3.0))
        edges.append(SkeletonEdge(len(edges), a, b, poly, arc, rmin, rmin * 1.1))

    start = 0
    for size in sizes:
        ids = list(range(start, start + size))
        for k in range(1, size):
            cand = ids[:k]
            d = np.linalg.norm(pos[cand] - pos[ids[k]], axis=1)
            if rng.random() < 0.7:
                target = cand[int(np.argmin(d))]
            else:
                target = cand[int(rng.integers(0, k))]
            add_edge(target, ids[k])
        n_extra = int(extra_edge_fraction * size)
        for _ in range(n_extra):
            a, b = rng.integers(0, size, 2)
            if a != b:
                add_edge(ids[int(a)], ids[int(b)])
        start += size
    for n in nodes:
        n.radius = 1.0
    return SkeletonGraph(nodes=nodes, edges=edges)


@dataclass
class BenchResult:
    algorithm: str
    repeats: int
    mean_wall_s: float
    mean_expanded: float
    total_cost_checksum: float


def run_benchmark(g: SkeletonGraph, root: int, repeat: int = 100, seed: int = 0) -> list[BenchResult]:
    """Time point-to-point queries from the root to sampled targets with both
    algorithms over identical query sequences."""
    root = g.validate_node(root)
    comp = g.components[int(g.component_of[root])]
    rng = np.random.default_rng(seed)
    targets = [int(comp[i]) for i in rng.integers(0, len(comp), repeat)]
    out = []
    for name, fn in (("astar", astar_path), ("dijkstra", dijkstra_path)):
        t0 = time.perf_counter()
        expanded = 0
        checksum = 0.0
        for tgt in targets:
            res = fn(g, root, tgt)
            expanded += res.nodes_expanded
            checksum += res.total_cost
        wall = time.perf_counter() - t0
        out.append(
            BenchResult(
                algorithm=name,
                repeats=repeat,
                mean_wall_s=wall / repeat,
                mean_expanded=expanded / repeat,
                total_cost_checksum=checksum,
            )
        )
    return out


def format_benchmark(results: list[BenchResult]) -> str:
    lines = [f"{'algorithm':<10} {'repeats':>7} {'mean wall [ms]':>15} {'mean expanded':>14}"]
    for r in results:
        lines.append(
            f"{r.algorithm:<10} {r.repeats:>7} {r.mean_wall_s * 1e3:>15.3f} {r.mean_expanded:>14.1f}"
        )
    if len(results) == 2 and results[1].mean_wall_s > 0:
        ratio = results[0].mean_wall_s / results[1].mean_wall_s
        lines.append(f"astar/dijkstra wall-time ratio: {ratio:.2f}")
    return "\n".join(lines)
