"""Triangulations with boundary/interface markers and subdomain labels.

A :class:`Mesh` is an immutable P1 triangulation.  Every vertex carries a
:class:`Marker` and every triangle a :class:`Region`.  The free interface is
an :class:`InterfaceCurve`: an ordered chain of mesh vertices whose
consecutive pairs are mesh edges.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import shapely
import triangle
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from shapely.geometry import LinearRing, LineString, Point, Polygon


class MeshError(ValueError):
    """Invalid mesh, interface or mesh-generation input."""


class Marker(enum.IntEnum):
    INTERIOR = 0
    SIGMA_PLUS = 1
    SIGMA_MINUS = 2
    GAMMA = 3
    NEUMANN = 4


class Region(enum.IntEnum):
    UNLABELED = 0
    OMEGA_PLUS = 1
    OMEGA_MINUS = 2


#: markers whose vertices carry Dirichlet data in the subdomain solves
DIRICHLET_MARKERS = (Marker.SIGMA_PLUS, Marker.SIGMA_MINUS, Marker.GAMMA)


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray
    markers: np.ndarray
    regions: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vertices", _frozen(self.vertices, np.float64).reshape(-1, 2))
        object.__setattr__(self, "triangles", _frozen(self.triangles, np.int64).reshape(-1, 3))
        object.__setattr__(self, "markers", _frozen(self.markers, np.int8))
        object.__setattr__(self, "regions", _frozen(self.regions, np.int8))
        if self.markers.shape != (len(self.vertices),):
            raise MeshError("one marker per vertex required")
        if self.regions.shape != (len(self.triangles),):
            raise MeshError("one region label per triangle required")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def _edge_table(self):
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        edges, inverse, counts = np.unique(e, axis=0, return_inverse=True, return_counts=True)
        inverse = inverse.reshape(3, -1).T  # (NT, 3): edge id of local edge k
        return edges, inverse.copy(), counts

    @property
    def edges(self) -> np.ndarray:
        """Unique edges, each row sorted, in lexicographic order."""
        return self._edge_table[0]

    @property
    def triangle_edges(self) -> np.ndarray:
        """Edge ids of local edges (v0v1, v1v2, v2v0) of every triangle."""
        return self._edge_table[1]

    @cached_property
    def edge_index(self) -> dict[tuple[int, int], int]:
        return {(int(a), int(b)): i for i, (a, b) in enumerate(self.edges)}

    @cached_property
    def edge_triangles(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(len(self.edges))]
        for t, row in enumerate(self.triangle_edges):
            for e in row:
                out[e].append(t)
        return out

    @property
    def boundary_edges(self) -> np.ndarray:
        edges, _, counts = self._edge_table
        return edges[counts == 1]

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.boundary_edges)

    def region_vertices(self, region: int | None) -> np.ndarray:
        tris = self.triangles if region is None else self.triangles[self.regions == region]
        return np.unique(tris)

    def with_vertices(self, vertices: np.ndarray) -> "Mesh":
        """Same connectivity, markers and labels; new coordinates."""
        return Mesh(vertices, self.triangles, self.markers, self.regions)

    def with_regions(self, regions: np.ndarray) -> "Mesh":
        return Mesh(self.vertices, self.triangles, self.markers, regions)


@dataclass(frozen=True, eq=False)
class InterfaceCurve:
    """Ordered chain of mesh vertices approximating the free interface.

    ``fixed`` flags vertices that never move (junctions with Dirichlet
    boundary, prescribed parts of the zero level set such as a nozzle).
    """

    vertex_ids: np.ndarray
    closed: bool = False
    fixed: np.ndarray | None = field(default=None)

    def __post_init__(self):
        ids = _frozen(self.vertex_ids, np.int64).ravel()
        object.__setattr__(self, "vertex_ids", ids)
        fixed = np.zeros(len(ids), bool) if self.fixed is None else self.fixed
        object.__setattr__(self, "fixed", _frozen(fixed, bool).ravel())
        if len(self.fixed) != len(ids):
            raise MeshError("fixed mask length differs from interface length")
        if len(ids) < 2:
            raise MeshError("interface needs at least two vertices")
        if len(np.unique(ids)) != len(ids):
            raise MeshError("interface visits a vertex twice")

    def __len__(self):
        return len(self.vertex_ids)

    @property
    def segments(self) -> np.ndarray:
        ids = self.vertex_ids
        nxt = np.roll(ids, -1) if self.closed else ids[1:]
        return np.column_stack([ids[: len(nxt)], nxt])

    def points(self, mesh: Mesh) -> np.ndarray:
        return mesh.vertices[self.vertex_ids]


@dataclass(frozen=True)
class MeshQuality:
    min_angle: float  # degrees
    min_area: float
    inverted: bool


# ---------------------------------------------------------------------------
# geometry helpers


def signed_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p = vertices[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def triangle_angles(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Interior angles in degrees, shape (NT, 3)."""
    p = vertices[triangles]
    out = np.empty((len(triangles), 3))
    for k in range(3):
        a = p[:, (k + 1) % 3] - p[:, k]
        b = p[:, (k + 2) % 3] - p[:, k]
        cross = np.abs(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
        dot = np.einsum("ij,ij->i", a, b)
        out[:, k] = np.degrees(np.arctan2(cross, dot))
    return out


def mesh_quality(mesh: Mesh) -> MeshQuality:
    areas = signed_areas(mesh.vertices, mesh.triangles)
    angles = triangle_angles(mesh.vertices, mesh.triangles)
    return MeshQuality(
        min_angle=float(angles.min()),
        min_area=float(areas.min()),
        inverted=bool((areas <= 0).any()),
    )


def check_mesh(mesh: Mesh) -> None:
    """Raise :class:`MeshError` unless the structural invariants hold."""
    t = mesh.triangles
    if t.size and (t.min() < 0 or t.max() >= mesh.n_vertices):
        raise MeshError("triangle vertex index out of range")
    if ((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])).any():
        raise MeshError("triangle with repeated vertex")
    if (signed_areas(mesh.vertices, t) <= 0).any():
        raise MeshError("triangle with non-positive signed area")
    if mesh._edge_table[2].max(initial=0) > 2:
        raise MeshError("edge shared by more than two triangles")
    if not set(np.unique(mesh.markers).tolist()) <= {int(m) for m in Marker}:
        raise MeshError("unknown vertex marker")
    # a triangle joining SIGMA_PLUS and SIGMA_MINUS must also touch GAMMA
    m = mesh.markers[t]
    bad = (m == Marker.SIGMA_PLUS).any(1) & (m == Marker.SIGMA_MINUS).any(1) & ~(m == Marker.GAMMA).any(1)
    if bad.any():
        raise MeshError(f"triangle {int(np.flatnonzero(bad)[0])} joins SIGMA_PLUS and SIGMA_MINUS")


def check_interface(mesh: Mesh, interface: InterfaceCurve) -> None:
    ids = interface.vertex_ids
    if ids.min() < 0 or ids.max() >= mesh.n_vertices:
        raise MeshError("interface vertex index out of range")
    index = mesh.edge_index
    for a, b in interface.segments:
        if (min(a, b), max(a, b)) not in index:
            raise MeshError(f"interface segment ({a}, {b}) is not a mesh edge")
    if not interface.closed:
        ends = mesh.markers[[ids[0], ids[-1]]]
        if (ends == Marker.INTERIOR).any():
            raise MeshError("open interface endpoint is an interior vertex")


# ---------------------------------------------------------------------------
# polylines


def _subdivide(points: np.ndarray, h: float) -> np.ndarray:
    """Arclength-uniform resampling of an open polyline, endpoints kept."""
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    n = max(1, int(math.ceil(s[-1] / h - 1e-9)))
    t = np.linspace(0.0, s[-1], n + 1)
    out = np.column_stack([np.interp(t, s, points[:, 0]), np.interp(t, s, points[:, 1])])
    out[0], out[-1] = points[0], points[-1]
    return out


def _corner_indices(points: np.ndarray, closed: bool, corner_angle: float) -> list[int]:
    n = len(points)
    idx = range(n) if closed else range(1, n - 1)
    corners = [] if closed else [0, n - 1]
    for i in idx:
        a = points[i] - points[i - 1]
        b = points[(i + 1) % n] - points[i]
        turn = math.degrees(abs(math.atan2(a[0] * b[1] - a[1] * b[0], a @ b)))
        if turn > corner_angle:
            corners.append(i)
    return sorted(set(corners))


def resample_polyline(
    points, h: float, closed: bool = False, corner_angle: float = 10.0, breaks: Sequence[int] = ()
) -> np.ndarray:
    """Resample a polyline at spacing close to ``h``, preserving its corners.

    Input points listed in ``breaks`` are kept even where the curve is
    straight.  For a closed polyline the first point is not repeated at the end.
    """
    p = np.asarray(points, float)
    if closed and np.allclose(p[0], p[-1]):
        p = p[:-1]
    keep = np.concatenate([[True], np.linalg.norm(np.diff(p, axis=0), axis=1) > 0])
    new_index = np.cumsum(keep) - 1
    p = p[keep]
    corners = _corner_indices(p, closed, corner_angle)
    extra = {int(new_index[b]) for b in breaks} - {0, len(p) - 1}
    corners = sorted(set(corners) | extra)
    if closed:
        if not corners:
            corners = [0]
        p = np.roll(p, -corners[0], axis=0)
        corners = [c - corners[0] for c in corners] + [len(p)]
        p = np.vstack([p, p[:1]])
    pieces = []
    for a, b in zip(corners[:-1], corners[1:]):
        piece = _subdivide(p[a : b + 1], h)
        pieces.append(piece[:-1])
    if not closed:
        pieces.append(p[-1:])
    return np.vstack(pieces)


# ---------------------------------------------------------------------------
# mesh generation

_BOUNDARY_SEG = 1
_INTERFACE_SEG = 2

BoundaryMarker = Callable[[np.ndarray], np.ndarray]


def _triangulate(ring: np.ndarray, h: float, interface: np.ndarray, closed: bool, min_angle: float):
    """Constrained quality Delaunay triangulation of ``ring`` containing ``interface``."""
    nb, ni = len(ring), len(interface)
    verts = [ring]
    segs = [np.column_stack([np.arange(nb), (np.arange(nb) + 1) % nb])]
    marks = [np.full(nb, _BOUNDARY_SEG)]
    # interface endpoints on the ring reuse the ring vertex
    ids = np.arange(nb, nb + ni)
    fresh = np.ones(ni, bool)
    if not closed:
        for k in (0, ni - 1):
            d = np.linalg.norm(ring - interface[k], axis=1)
            j = int(np.argmin(d))
            if d[j] < 1e-9 * max(1.0, h):
                ids[k] = j
                fresh[k] = False
    inner = interface[fresh]
    ids[fresh] = nb + np.arange(len(inner))
    verts.append(inner)
    iseg = np.column_stack([ids, np.roll(ids, -1)]) if closed else np.column_stack([ids[:-1], ids[1:]])
    segs.append(iseg)
    marks.append(np.full(len(iseg), _INTERFACE_SEG))
    pslg = dict(
        vertices=np.vstack(verts),
        segments=np.vstack(segs),
        segment_markers=np.concatenate(marks).reshape(-1, 1),
    )
    area = math.sqrt(3.0) / 4.0 * h * h
    out = triangle.triangulate(pslg, f"pq{min_angle:g}a{area:.17g}")
    v = out["vertices"]
    t = out["triangles"].astype(np.int64)
    neg = signed_areas(v, t) < 0
    t[neg] = t[neg][:, [0, 2, 1]]
    s = out["segments"][out["segment_markers"].ravel() == _INTERFACE_SEG]
    return v, t, s


def _chain(segments: np.ndarray, closed: bool, vertices: np.ndarray, start_point, second_point) -> np.ndarray:
    adj: dict[int, list[int]] = {}
    for a, b in segments:
        adj.setdefault(int(a), []).append(int(b))
        adj.setdefault(int(b), []).append(int(a))
    if any(len(n) > 2 for n in adj.values()):
        raise MeshError("interface segments branch")
    nodes = np.array(sorted(adj))
    if closed:
        start = int(nodes[np.argmin(np.linalg.norm(vertices[nodes] - start_point, axis=1))])
        nbrs = adj[start]
        d = [np.linalg.norm(vertices[n] - second_point) for n in nbrs]
        nxt = nbrs[int(np.argmin(d))]
    else:
        ends = [n for n in nodes if len(adj[n]) == 1]
        if len(ends) != 2:
            raise MeshError("open interface does not form a single chain")
        start = min(ends, key=lambda n: np.linalg.norm(vertices[n] - start_point))
        nxt = adj[start][0]
    chain = [start, nxt]
    while True:
        cand = [n for n in adj[chain[-1]] if n != chain[-2]]
        if not cand or cand[0] == start:
            break
        chain.append(cand[0])
    if len(chain) != len(nodes):
        raise MeshError("interface segments are not connected")
    return np.array(chain)


def _assemble(v, t, iseg, closed, ipoints, boundary_marker, fixed):
    markers = np.zeros(len(v), np.int8)
    tmp = Mesh(v, t, markers, np.zeros(len(t), np.int8))
    bverts = tmp.boundary_vertices
    if boundary_marker is None:
        markers[bverts] = Marker.SIGMA_PLUS
    else:
        markers[bverts] = np.asarray(boundary_marker(v[bverts]), np.int8)
    chain = _chain(iseg, closed, v, ipoints[0], ipoints[1])
    markers[chain] = Marker.GAMMA
    fmask = None
    if fixed is not None:
        fmask = np.asarray(fixed(v[chain]), bool)
    mesh = Mesh(v, t, markers, np.zeros(len(t), np.int8))
    curve = InterfaceCurve(chain, closed, fmask)
    mesh = mesh.with_regions(partition_subdomains(mesh, curve))
    check_mesh(mesh)
    check_interface(mesh, curve)
    return mesh, curve


def _check_h(h):
    if not (h > 0 and math.isfinite(h)):
        raise MeshError("target edge length must be positive")


def build_strip_mesh(
    width_interval: Sequence[float],
    height_interval: Sequence[float],
    target_edge_length: float,
    interface_polyline,
    boundary_marker: BoundaryMarker | None = None,
    fixed: Callable[[np.ndarray], np.ndarray] | None = None,
    min_angle: float = 20.0,
    breaks: Sequence[int] = (),
) -> tuple[Mesh, InterfaceCurve]:
    """Triangulate a rectangle so that its edge set contains an open polyline.

    ``boundary_marker`` maps boundary vertex coordinates (N, 2) to
    :class:`Marker` codes; the interface endpoints are always ``GAMMA``.
    ``fixed`` maps interface vertex coordinates to a pinned mask and
    ``breaks`` lists polyline points that must become mesh vertices.
    """
    h = float(target_edge_length)
    _check_h(h)
    (x0, x1), (y0, y1) = width_interval, height_interval
    poly = np.asarray(interface_polyline, float)
    if len(poly) < 2:
        raise MeshError("interface polyline needs two points")
    if not LineString(poly).is_simple:
        raise MeshError("interface polyline self-intersects")
    rect = Polygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])
    tol = 1e-9 * max(1.0, x1 - x0, y1 - y0)
    for end in (poly[0], poly[-1]):
        if rect.exterior.distance(Point(end)) > tol:
            raise MeshError(f"interface endpoint {tuple(end)} is not on the rectangle boundary")
    inner = LineString(poly[1:-1]) if len(poly) > 3 else None
    if inner is not None and not rect.contains(inner):
        raise MeshError("interface polyline leaves the rectangle")
    ipts = resample_polyline(poly, h, breaks=breaks)
    # boundary ring: corners plus interface endpoints as break points
    corners = np.array([(x0, y0), (x1, y0), (x1, y1), (x0, y1)], float)
    ring = []
    for k in range(4):
        a, b = corners[k], corners[(k + 1) % 4]
        d = b - a
        L = np.linalg.norm(d)
        stops = [0.0, L]
        for end in (ipts[0], ipts[-1]):
            s = float((end - a) @ d / L)
            off = abs(d[0] * (end - a)[1] - d[1] * (end - a)[0]) / L
            if off <= tol and tol < s < L - tol:
                stops.append(s)
        stops = sorted(stops)
        for s0, s1 in zip(stops[:-1], stops[1:]):
            piece = _subdivide(np.array([a + d * s0 / L, a + d * s1 / L]), h)
            ring.append(piece[:-1])
    ring = np.vstack(ring)
    # snap interface endpoints onto ring points
    for k in (0, -1):
        j = int(np.argmin(np.linalg.norm(ring - ipts[k], axis=1)))
        ipts[k] = ring[j]
    v, t, iseg = _triangulate(ring, h, ipts, False, min_angle)
    return _assemble(v, t, iseg, False, ipts, boundary_marker, fixed)


@dataclass(frozen=True)
class HalfPlaneCut:
    """Removes the points x with (x - point) . direction > 0."""

    point: tuple[float, float]
    direction: tuple[float, float]


@dataclass(frozen=True)
class DiskCut:
    center: tuple[float, float]
    radius: float


_ARC_SEGMENTS = 256


def _domain_polygon(center, radius, cutouts) -> Polygon:
    dom = Point(center).buffer(radius, quad_segs=_ARC_SEGMENTS)
    big = 10.0 * (radius + np.linalg.norm(center) + 1.0)
    for cut in cutouts:
        if isinstance(cut, HalfPlaneCut):
            p = np.asarray(cut.point, float)
            d = np.asarray(cut.direction, float)
            d = d / np.linalg.norm(d)
            tng = np.array([-d[1], d[0]])
            box = Polygon([p + big * tng, p + big * tng + big * d, p - big * tng + big * d, p - big * tng])
            dom = dom.difference(box)
        elif isinstance(cut, DiskCut):
            dom = dom.difference(Point(cut.center).buffer(cut.radius, quad_segs=_ARC_SEGMENTS))
        else:
            raise MeshError(f"unknown cutout {cut!r}")
    if not isinstance(dom, Polygon) or dom.is_empty or len(dom.interiors):
        raise MeshError("cutouts must leave a simply connected domain")
    return shapely.normalize(dom)


def build_disk_mesh(
    center: Sequence[float],
    radius: float,
    target_edge_length: float,
    interface_polyline,
    cutouts: Sequence[HalfPlaneCut | DiskCut] = (),
    boundary_marker: BoundaryMarker | None = None,
    closed: bool = True,
    fixed: Callable[[np.ndarray], np.ndarray] | None = None,
    min_angle: float = 20.0,
) -> tuple[Mesh, InterfaceCurve]:
    """Triangulate a disk (optionally with half-plane/disk cutouts).

    With ``closed=True`` the interface must lie strictly inside; its interior
    becomes ``OMEGA_MINUS`` and every outer boundary vertex is ``SIGMA_PLUS``
    unless ``boundary_marker`` says otherwise.  With ``closed=False`` the
    polyline is a chord whose endpoints lie on the boundary.
    """
    h = float(target_edge_length)
    _check_h(h)
    center = np.asarray(center, float)
    poly = np.asarray(interface_polyline, float)
    dom = _domain_polygon(center, radius, cutouts)
    if closed:
        if np.allclose(poly[0], poly[-1]):
            poly = poly[:-1]
        ring_geom = LinearRing(poly)
        if not ring_geom.is_simple:
            raise MeshError("interface polyline self-intersects")
        if not dom.contains(Polygon(poly)) or dom.exterior.distance(ring_geom) < 1e-9:
            raise MeshError("closed interface touches or crosses the domain boundary")
    else:
        if not LineString(poly).is_simple:
            raise MeshError("interface polyline self-intersects")
        for end in (poly[0], poly[-1]):
            if dom.exterior.distance(Point(end)) > 1e-6 * radius:
                raise MeshError("open interface endpoint is not on the boundary")
    ext = np.asarray(dom.exterior.coords)[:-1]
    if LinearRing(ext).is_ccw is False:
        ext = ext[::-1]
    if not cutouts:
        n = max(8, int(math.ceil(2 * math.pi * radius / h)))
        th = 2 * math.pi * np.arange(n) / n
        ext = center + radius * np.column_stack([np.cos(th), np.sin(th)])
        ring = ext
    else:
        ring = resample_polyline(ext, h, closed=True, corner_angle=10.0)
    ipts = resample_polyline(poly, h, closed=closed)
    if not closed:
        for k in (0, -1):
            d = np.linalg.norm(ring - ipts[k], axis=1)
            j = int(np.argmin(d))
            if d[j] < 0.25 * h:
                ring[j] = ipts[k]
            else:
                # insert endpoint into the ring between its neighbours
                seg_d = [LineString([ring[i], ring[(i + 1) % len(ring)]]).distance(Point(ipts[k])) for i in range(len(ring))]
                i = int(np.argmin(seg_d))
                ring = np.insert(ring, i + 1, ipts[k], axis=0)
    v, t, iseg = _triangulate(ring, h, ipts, closed, min_angle)
    return _assemble(v, t, iseg, closed, ipts, boundary_marker, fixed)


def rectangle_grid(
    nx: int,
    ny: int,
    width_interval=(0.0, 1.0),
    height_interval=(0.0, 1.0),
    boundary_marker: BoundaryMarker | None = None,
) -> Mesh:
    """Structured right-triangle mesh (each cell split along its diagonal)."""
    (x0, x1), (y0, y1) = width_interval, height_interval
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    v = np.column_stack([X.ravel(), Y.ravel()])
    idx = np.arange((nx + 1) * (ny + 1)).reshape(ny + 1, nx + 1)
    a = idx[:-1, :-1].ravel()
    b = idx[:-1, 1:].ravel()
    c = idx[1:, 1:].ravel()
    d = idx[1:, :-1].ravel()
    t = np.concatenate([np.column_stack([a, b, c]), np.column_stack([a, c, d])])
    markers = np.zeros(len(v), np.int8)
    mesh = Mesh(v, t, markers, np.full(len(t), Region.OMEGA_PLUS, np.int8))
    bv = mesh.boundary_vertices
    markers[bv] = Marker.SIGMA_PLUS if boundary_marker is None else np.asarray(boundary_marker(v[bv]), np.int8)
    return Mesh(v, t, markers, mesh.regions)


def interface_from_line(mesh: Mesh, on_line: Callable[[np.ndarray], np.ndarray], key: int = 1) -> InterfaceCurve:
    """Open interface through the vertices selected by ``on_line``, sorted by coordinate ``key``."""
    ids = np.flatnonzero(on_line(mesh.vertices))
    ids = ids[np.argsort(mesh.vertices[ids, key], kind="stable")]
    return InterfaceCurve(ids, closed=False)


# ---------------------------------------------------------------------------
# subdomains and normals


def partition_subdomains(mesh: Mesh, interface: InterfaceCurve) -> np.ndarray:
    """Label triangles by flood fill across non-interface edges.

    The component touching ``SIGMA_PLUS`` vertices is ``OMEGA_PLUS``.
    """
    cut = set()
    for a, b in interface.segments:
        key = (min(a, b), max(a, b))
        if key not in mesh.edge_index:
            raise MeshError(f"interface segment {key} is not a mesh edge")
        cut.add(mesh.edge_index[key])
    rows, cols = [], []
    for e, tris in enumerate(mesh.edge_triangles):
        if len(tris) == 2 and e not in cut:
            rows.append(tris[0])
            cols.append(tris[1])
    nt = mesh.n_triangles
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(nt, nt))
    ncomp, comp = connected_components(graph, directed=False)
    if ncomp != 2:
        raise MeshError(f"interface splits the domain into {ncomp} components, expected 2")
    touches_plus = np.zeros(2, bool)
    plus_tri = (mesh.markers[mesh.triangles] == Marker.SIGMA_PLUS).any(axis=1)
    for c in (0, 1):
        touches_plus[c] = plus_tri[comp == c].any()
    if touches_plus.sum() != 1:
        raise MeshError("SIGMA_PLUS vertices do not identify a unique positive subdomain")
    plus = int(np.flatnonzero(touches_plus)[0])
    regions = np.where(comp == plus, Region.OMEGA_PLUS, Region.OMEGA_MINUS).astype(np.int8)
    minus_tri = (mesh.markers[mesh.triangles] == Marker.SIGMA_MINUS).any(axis=1)
    if (minus_tri & (regions == Region.OMEGA_PLUS)).any():
        raise MeshError("SIGMA_MINUS vertex adjacent to the positive subdomain")
    return regions


def segment_normals(mesh: Mesh, interface: InterfaceCurve) -> np.ndarray:
    """Unit normal of every interface segment, pointing out of OMEGA_PLUS."""
    segs = interface.segments
    v = mesh.vertices
    d = v[segs[:, 1]] - v[segs[:, 0]]
    length = np.linalg.norm(d, axis=1)
    if (length <= 0).any():
        raise MeshError("zero-length interface segment")
    n = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]
    for k, (a, b) in enumerate(segs):
        e = mesh.edge_index[(min(a, b), max(a, b))]
        plus = [t for t in mesh.edge_triangles[e] if mesh.regions[t] == Region.OMEGA_PLUS]
        if not plus:
            raise MeshError(f"interface segment {k} has no OMEGA_PLUS neighbour")
        tri = mesh.triangles[plus[0]]
        third = [x for x in tri if x != a and x != b][0]
        if n[k] @ (v[third] - v[a]) > 0:
            n[k] = -n[k]
    return n


def average_normals(seg_normals: np.ndarray, closed: bool) -> np.ndarray:
    """Vertex normals as the renormalised sum of the adjacent segment normals."""
    seg_normals = np.asarray(seg_normals, float)
    if closed:
        s = seg_normals + np.roll(seg_normals, 1, axis=0)
    else:
        s = np.vstack([seg_normals[:1], seg_normals[:-1] + seg_normals[1:], seg_normals[-1:]])
    norm = np.linalg.norm(s, axis=1)
    if (norm < 1e-12).any():
        raise MeshError("adjacent interface normals are antiparallel")
    return s / norm[:, None]


def interface_vertex_normals(mesh: Mesh, interface: InterfaceCurve) -> np.ndarray:
    return average_normals(segment_normals(mesh, interface), interface.closed)
