"""Geometric modelling of a segmentation mask: a one-voxel skeleton with
per-voxel radii, a bifurcation-level graph, and a triangle surface mesh.

Graph convention: skeleton voxels with a neighbor count other than 2 become
nodes, maximal chains of pass-through voxels become edges. Pure cycles keep
one anchor node carrying a self-loop edge. Short spurs hanging off junctions
(thinning artifacts) are pruned, and the resulting pass-through nodes are
collapsed so no degree-2 node survives.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from skimage.measure import marching_cubes
from skimage.morphology import skeletonize as _skeletonize_3d

from .errors import ValidationError
from .volume import BinaryMask, Volume

_OFFSETS = np.array(
    [(dz, dy, dx) for dz in (-1, 0, 1) for dy in (-1, 0, 1) for dx in (-1, 0, 1)
     if (dz, dy, dx) != (0, 0, 0)]
)


@dataclass
class SkeletonNode:
    id: int
    position: np.ndarray  # (3,) mm
    degree: int
    radius: float


@dataclass
class SkeletonEdge:
    id: int
    a: int
    b: int
    polyline: np.ndarray  # (K, 3) mm, first point at node a, last at node b
    arc_length: float
    min_radius: float
    mean_radius: float


@dataclass
class SkeletonGraph:
    nodes: list[SkeletonNode]
    edges: list[SkeletonEdge]
    components: list[list[int]] = field(default_factory=list)  # main first

    def __post_init__(self):
        self._adj: list[list[tuple[int, int]]] = [[] for _ in self.nodes]
        # flat adjacency (other, edge_id, arc_length, min_radius) for the
        # search hot loops, which avoid numpy per-element overhead
        self._adj_fast: list[list[tuple[int, int, float, float]]] = [[] for _ in self.nodes]
        for e in self.edges:
            self._adj[e.a].append((e.id, e.b))
            self._adj[e.b].append((e.id, e.a))
            self._adj_fast[e.a].append((e.b, e.id, e.arc_length, e.min_radius))
            self._adj_fast[e.b].append((e.a, e.id, e.arc_length, e.min_radius))
        for n in self.nodes:
            n.degree = len(self._adj[n.id])
        self.positions = np.array([n.position for n in self.nodes], float).reshape(-1, 3)
        self.pos_list: list[tuple[float, float, float]] = [tuple(p) for p in self.positions]
        self.components = self._find_components()
        self.component_of = np.empty(len(self.nodes), int)
        for ci, comp in enumerate(self.components):
            for nid in comp:
                self.component_of[nid] = ci

    def _find_components(self) -> list[list[int]]:
        seen = np.zeros(len(self.nodes), bool)
        comps = []
        for start in range(len(self.nodes)):
            if seen[start]:
                continue
            stack, comp = [start], []
            seen[start] = True
            while stack:
                u = stack.pop()
                comp.append(u)
                for _, w in self._adj[u]:
                    if not seen[w]:
                        seen[w] = True
                        stack.append(w)
            comps.append(sorted(comp))
        comps.sort(key=lambda c: (-len(c), c[0]))
        return comps

    def incident(self, node_id: int) -> list[tuple[int, int]]:
        """Incident (edge_id, other_node) pairs; self-loops appear twice."""
        return self._adj[node_id]

    def euclid(self, a: int, b: int) -> float:
        return float(np.linalg.norm(self.positions[a] - self.positions[b]))

    @property
    def main_component(self) -> list[int]:
        return self.components[0]

    def validate_node(self, node_id) -> int:
        node_id = int(node_id)
        if not 0 <= node_id < len(self.nodes):
            raise ValidationError(f"unknown node id {node_id}")
        return node_id


@dataclass
class SurfaceMesh:
    vertices: np.ndarray  # (V, 3) mm
    triangles: np.ndarray  # (T, 3) int


# ------------------------------------------------------------- skeletonizing

def skeletonize(m: BinaryMask) -> tuple[BinaryMask, Volume]:
    """Thin a mask to a one-voxel 26-connected skeleton, and record at every
    skeleton voxel the distance (mm) to the nearest background voxel."""
    if not m.data.any():
        raise ValidationError("empty mask")
    if m.count() == 1:
        skel = m.data.copy()
    else:
        skel = _skeletonize_3d(m.data).astype(bool)
    edt = ndimage.distance_transform_edt(m.data, sampling=m.spacing)
    radius_map = Volume(np.where(skel, edt, 0.0).astype(np.float32), m.spacing, m.origin)
    return BinaryMask(skel, m.spacing, m.origin), radius_map


# ------------------------------------------------------------ graph building

def _neighbor_counts(skel: np.ndarray) -> np.ndarray:
    kernel = np.ones((3, 3, 3), np.uint8)
    kernel[1, 1, 1] = 0
    return ndimage.convolve(skel.astype(np.uint8), kernel, mode="constant", cval=0)


class _EdgeRec:
    __slots__ = ("a", "b", "voxels", "radii")

    def __init__(self, a, b, voxels, radii):
        self.a = a  # raw node key (voxel tuple)
        self.b = b
        self.voxels = voxels  # interior voxel index tuples, a-side first
        self.radii = radii  # radius samples including both node endpoints


def build_graph(
    skel: BinaryMask,
    radius_map: Volume,
    prune_spurs: bool = True,
    spur_factor: float = 2.0,
) -> SkeletonGraph:
    """Convert a voxel skeleton into a bifurcation-level graph.

    prune_spurs removes leaf branches shorter than spur_factor times the
    junction radius (thinning artifacts), then collapses the pass-through
    nodes this leaves behind.
    """
    data = skel.data
    if not data.any():
        raise ValidationError("empty skeleton")
    counts = _neighbor_counts(data)
    rad = radius_map.data

    node_vox = sorted(map(tuple, np.argwhere(data & (counts != 2))))
    is_node = set(node_vox)
    visited: set[tuple] = set()
    recs: list[_EdgeRec] = []

    def skel_neighbors(v):
        out = []
        for off in _OFFSETS:
            u = (v[0] + off[0], v[1] + off[1], v[2] + off[2])
            if 0 <= u[0] < data.shape[0] and 0 <= u[1] < data.shape[1] and 0 <= u[2] < data.shape[2]:
                if data[u]:
                    out.append(u)
        return out

    def walk(start_node, first):
        chain = [first]
        visited.add(first)
        prev, cur = start_node, first
        while True:
            nxt = [u for u in skel_neighbors(cur) if u != prev]
            if len(nxt) != 1:  # corrupt chain; treat end as terminal
                return chain, cur if not nxt else nxt[0]
            nxt = nxt[0]
            if nxt in is_node:
                return chain, nxt
            chain.append(nxt)
            visited.add(nxt)
            prev, cur = cur, nxt

    for nv in node_vox:
        for nb in skel_neighbors(nv):
            if nb in is_node:
                if nv < nb:
                    recs.append(_EdgeRec(nv, nb, [], [rad[nv], rad[nb]]))
                continue
            if nb in visited:
                continue
            chain, end = walk(nv, nb)
            recs.append(
                _EdgeRec(nv, end, chain, [rad[nv]] + [rad[c] for c in chain] + [rad[end]])
            )

    # Pure cycles: pass-through voxels never reached from any node voxel.
    remaining = data & (counts == 2)
    for c in map(tuple, np.argwhere(remaining)):
        if c in visited or c in is_node:
            continue
        comp = [c]
        visited.add(c)
        anchors = skel_neighbors(c)
        prev, cur = c, min(anchors)
        while cur != c:
            comp.append(cur)
            visited.add(cur)
            nxt = [u for u in skel_neighbors(cur) if u != prev]
            prev, cur = cur, nxt[0]
        anchor = min(comp)
        k = comp.index(anchor)
        ring = comp[k:] + comp[:k]
        node_vox.append(anchor)
        is_node.add(anchor)
        interior = ring[1:]
        recs.append(_EdgeRec(anchor, anchor, interior, [rad[anchor]] + [rad[v] for v in interior] + [rad[anchor]]))

    node_vox = sorted(set(node_vox))
    key_of = {v: i for i, v in enumerate(node_vox)}
    spacing = np.asarray(skel.spacing)
    origin = np.asarray(skel.origin)

    def to_mm(vox_list):
        return np.asarray(vox_list, float) * spacing + origin

    nodes_alive = [True] * len(node_vox)
    node_radius = [float(rad[v]) for v in node_vox]
    node_pos = [to_mm([v])[0] for v in node_vox]

    class _WEdge:
        __slots__ = ("a", "b", "poly", "radii", "alive")

        def __init__(self, a, b, poly, radii):
            self.a, self.b, self.poly, self.radii, self.alive = a, b, poly, radii, True

        @property
        def arc(self):
            return float(np.linalg.norm(np.diff(self.poly, axis=0), axis=1).sum())

    wedges = []
    for r in recs:
        poly = np.vstack([node_pos[key_of[r.a]], to_mm(r.voxels) if r.voxels else np.empty((0, 3)), node_pos[key_of[r.b]]])
        wedges.append(_WEdge(key_of[r.a], key_of[r.b], poly, np.asarray(r.radii, float)))

    def degrees():
        deg = [0] * len(node_vox)
        for e in wedges:
            if e.alive:
                deg[e.a] += 1
                deg[e.b] += 1
        return deg

    if prune_spurs:
        changed = True
        while changed:
            changed = False
            deg = degrees()
            for e in wedges:
                if not e.alive or e.a == e.b:
                    continue
                for leaf, junc in ((e.a, e.b), (e.b, e.a)):
                    if deg[leaf] == 1 and deg[junc] >= 3 and e.arc < spur_factor * node_radius[junc]:
                        e.alive = False
                        nodes_alive[leaf] = False
                        changed = True
                        break
                if changed:
                    break

    # Collapse pass-through nodes left by pruning (or present in synthetic
    # skeletons). A node whose two incident slots belong to one self-loop is
    # a cycle anchor and stays.
    def collapse_once() -> bool:
        deg = degrees()
        incident: dict[int, list[_WEdge]] = {}
        for e in wedges:
            if e.alive:
                incident.setdefault(e.a, []).append(e)
                incident.setdefault(e.b, []).append(e)
        for n in range(len(node_vox)):
            if not nodes_alive[n] or deg[n] != 2:
                continue
            inc = incident.get(n, [])
            if len(inc) != 2 or inc[0] is inc[1]:
                continue  # cycle anchor (one self-loop)
            e1, e2 = inc
            p1 = e1.poly if e1.b == n else e1.poly[::-1]  # ends at n
            p2 = e2.poly if e2.a == n else e2.poly[::-1]  # starts at n
            r1 = e1.radii if e1.b == n else e1.radii[::-1]
            r2 = e2.radii if e2.a == n else e2.radii[::-1]
            a = e1.a if e1.b == n else e1.b
            b = e2.b if e2.a == n else e2.a
            e1.alive = e2.alive = False
            nodes_alive[n] = False
            wedges.append(_WEdge(a, b, np.vstack([p1, p2[1:]]), np.concatenate([r1, r2[1:]])))
            return True
        return False

    while collapse_once():
        pass

    new_id = {}
    for old in range(len(node_vox)):
        if nodes_alive[old]:
            new_id[old] = len(new_id)
    nodes = [
        SkeletonNode(new_id[old], node_pos[old], 0, node_radius[old])
        for old in sorted(new_id)
    ]
    live = [e for e in wedges if e.alive]
    live.sort(key=lambda e: (min(new_id[e.a], new_id[e.b]), max(new_id[e.a], new_id[e.b]), e.arc))
    edges = []
    for i, e in enumerate(live):
        edges.append(
            SkeletonEdge(
                id=i,
                a=new_id[e.a],
                b=new_id[e.b],
                polyline=e.poly,
                arc_length=e.arc,
                min_radius=float(e.radii.min()),
                mean_radius=float(e.radii.mean()),
            )
        )
    return SkeletonGraph(nodes=nodes, edges=edges)


def model_mask(m: BinaryMask, prune_spurs: bool = True) -> SkeletonGraph:
    """Convenience: skeletonize a mask and build its graph."""
    skel, radius_map = skeletonize(m)
    return build_graph(skel, radius_map, prune_spurs=prune_spurs)


# ------------------------------------------------------------------ surface

def build_surface(m: BinaryMask) -> SurfaceMesh:
    """Closed triangle mesh of the mask isosurface at 0.5."""
    if not m.data.any():
        raise ValidationError("empty mask")
    padded = np.pad(m.data.astype(np.float32), 1)
    verts, faces, _, _ = marching_cubes(padded, level=0.5, spacing=m.spacing)
    verts = verts - np.asarray(m.spacing) + np.asarray(m.origin)
    v0, v1, v2 = verts[faces[:, 0]], verts[faces[:, 1]], verts[faces[:, 2]]
    area2 = np.linalg.norm(np.cross(v1 - v0, v2 - v0), axis=1)
    return SurfaceMesh(vertices=verts, triangles=faces[area2 > 1e-12])


# ------------------------------------------------------------------- export

def graph_to_dict(g: SkeletonGraph) -> dict:
    return {
        "nodes": [
            {"id": n.id, "pos": [float(c) for c in n.position], "radius": n.radius}
            for n in g.nodes
        ],
        "edges": [
            {
                "id": e.id,
                "a": e.a,
                "b": e.b,
                "polyline": e.polyline.tolist(),
                "arc_length": e.arc_length,
                "min_radius": e.min_radius,
                "mean_radius": e.mean_radius,
            }
            for e in g.edges
        ],
        "components": [list(c) for c in g.components],
    }


def graph_from_dict(d: dict) -> SkeletonGraph:
    try:
        nodes = [
            SkeletonNode(int(n["id"]), np.asarray(n["pos"], float), 0, float(n["radius"]))
            for n in d["nodes"]
        ]
        edges = [
            SkeletonEdge(
                id=int(e["id"]),
                a=int(e["a"]),
                b=int(e["b"]),
                polyline=np.asarray(e["polyline"], float),
                arc_length=float(e["arc_length"]),
                min_radius=float(e["min_radius"]),
                mean_radius=float(e["mean_radius"]),
            )
            for e in d["edges"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"graph JSON: missing or malformed field ({exc})")
    nodes.sort(key=lambda n: n.id)
    if [n.id for n in nodes] != list(range(len(nodes))):
        raise ValidationError("graph JSON: node ids must be 0..N-1")
    return SkeletonGraph(nodes=nodes, edges=edges)


def save_graph(g: SkeletonGraph, path) -> None:
    with open(path, "w") as fh:
        json.dump(graph_to_dict(g), fh)


def load_graph(path) -> SkeletonGraph:
    with open(path) as fh:
        return graph_from_dict(json.load(fh))


def mesh_to_text(mesh: SurfaceMesh) -> str:
    """Indexed triangle list: `v z y x` vertex lines then 1-based `f i j k`."""
    lines = [f"v {p[0]:.4f} {p[1]:.4f} {p[2]:.4f}" for p in mesh.vertices]
    lines += [f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}" for t in mesh.triangles]
    return "\n".join(lines) + "\n"


def save_mesh(mesh: SurfaceMesh, path) -> None:
    with open(path, "w") as fh:
        fh.write(mesh_to_text(mesh))
