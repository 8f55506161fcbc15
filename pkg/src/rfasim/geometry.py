"""Bi-domain channel/tissue meshes with a semicircular electrode notch.

The computational domain is a blood channel (0,L) x (0,H) sitting on a
tissue slab (0,L) x (-H_ts, 0). A half-disc of radius r centered at
(L/2, 0) is carved out of the channel; its curved arc is the wetted
electrode surface on the blood side and the flat diameter segment at
y = 0 below it is the electrode contact on the tissue side. Both carry
boundary tag 8. The two subdomains share every vertex on y = 0 outside
the electrode footprint; those edges carry the interface tag 7 and are
interior to the union mesh.

Boundary tags:
    1 channel inlet x = 0       4 tissue left   x = 0
    2 channel top   y = H       5 tissue bottom y = -H_ts
    3 channel outlet x = L      6 tissue right  x = L
    7 blood/tissue interface (y = 0, |x - L/2| >= r)
    8 electrode surface (arc into the blood + flat segment under it)

Construction: graded tensor grids on both sides (spacing follows the
electrode chord length near the notch and h_target away from it), arc
points on the electrode, Delaunay triangulation of the blood point set
with the half-disc cut out by centroid, and a deterministic right-triangle
split of the tissue grid. Interface strips are rectangles split into
right triangles, which keeps the stiffness matrix an M-matrix there (no
angle opposite a Neumann edge exceeds 90 degrees); interior edges are
Delaunay, so the discrete maximum principle for the potential solves
holds on the default mesh.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial import Delaunay

BLOOD = 0
TISSUE = 1

TAG_INLET = 1
TAG_TOP = 2
TAG_OUTLET = 3
TAG_TISSUE_LEFT = 4
TAG_TISSUE_BOTTOM = 5
TAG_TISSUE_RIGHT = 6
TAG_INTERFACE = 7
TAG_ELECTRODE = 8

ALL_TAGS = tuple(range(1, 9))


class MeshError(ValueError):
    """Raised for invalid geometry parameters, mesh files, or meshes."""


@dataclass(frozen=True)
class GeometryParams:
    """Dimensions of the channel/tissue geometry and mesh sizing knobs.

    n_arc is the number of straight segments approximating the electrode
    arc; h_target the nominal element size away from the electrode.
    """

    length: float = 1.5
    height: float = 1.0
    electrode_radius: float = 0.075
    tissue_depth: float = 0.5
    h_target: float = 0.05
    n_arc: int = 8

    def __post_init__(self):
        if self.length <= 0.0 or self.height <= 0.0 or self.tissue_depth <= 0.0:
            raise MeshError("domain dimensions must be positive")
        if not 0.0 < 2.0 * self.electrode_radius < self.length:
            raise MeshError("electrode diameter must fit inside the channel length")
        if self.electrode_radius >= self.height:
            raise MeshError("electrode radius must be smaller than the channel height")
        if not 0.0 < self.h_target <= self.electrode_radius:
            raise MeshError("h_target must lie in (0, electrode_radius]")
        if self.n_arc < 6:
            raise MeshError("n_arc must be at least 6")


@dataclass(frozen=True)
class QualityReport:
    h_min: float
    h_max: float
    min_angle_deg: float
    is_acute: bool


@dataclass
class Mesh:
    """Conforming triangulation of the two subdomains.

    vertices : (nv, 2) float array.
    triangles : (nt, 3) int array, counterclockwise.
    subdomain : (nt,) int array, BLOOD or TISSUE.
    edges / edge_tags : tagged edges; tags 1..6 and 8 lie on the
        topological boundary (one adjacent triangle), tag 7 edges are
        shared by one blood and one tissue triangle.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    subdomain: np.ndarray
    edges: np.ndarray
    edge_tags: np.ndarray

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    @property
    def boundary_edges(self):
        keep = self.edge_tags != TAG_INTERFACE
        return self.edges[keep], self.edge_tags[keep]

    @property
    def interface_edges(self):
        return self.edges[self.edge_tags == TAG_INTERFACE]

    @cached_property
    def tri_areas(self):
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def tri_grads(self):
        """Gradients of the 3 barycentric functions per triangle, (nt, 3, 2)."""
        p = self.vertices[self.triangles]
        g = np.empty((self.n_triangles, 3, 2))
        twice_area = 2.0 * self.tri_areas
        for i in range(3):
            a = p[:, (i + 1) % 3]
            b = p[:, (i + 2) % 3]
            g[:, i, 0] = (a[:, 1] - b[:, 1]) / twice_area
            g[:, i, 1] = (b[:, 0] - a[:, 0]) / twice_area
        return g

    @cached_property
    def tri_diams(self):
        p = self.vertices[self.triangles]
        e = np.stack(
            [
                np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
                np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
                np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
            ],
            axis=1,
        )
        return e.max(axis=1)

    @cached_property
    def blood_tris(self):
        return np.flatnonzero(self.subdomain == BLOOD)

    @cached_property
    def tissue_tris(self):
        return np.flatnonzero(self.subdomain == TISSUE)

    @cached_property
    def edge_adjacent_tris(self):
        """(ne, 2) triangle indices adjacent to each tagged edge, -1 padded."""
        tri_edges = _tri_edge_array(self.triangles)
        order = np.lexsort((tri_edges[:, 1], tri_edges[:, 0]))
        se = tri_edges[order]
        owner = order // 3
        keys = self.edges.copy()
        keys.sort(axis=1)
        out = np.full((len(self.edges), 2), -1, dtype=np.int64)
        lo = np.searchsorted(
            se[:, 0] * (self.n_vertices + 1) + se[:, 1],
            keys[:, 0] * (self.n_vertices + 1) + keys[:, 1],
            side="left",
        )
        flat = se[:, 0] * (self.n_vertices + 1) + se[:, 1]
        for i, (k, pos) in enumerate(zip(keys[:, 0] * (self.n_vertices + 1) + keys[:, 1], lo)):
            j = pos
            slot = 0
            while j < len(flat) and flat[j] == k and slot < 2:
                out[i, slot] = owner[j]
                slot += 1
                j += 1
        return out

    def vertices_touching(self, sub):
        tris = self.blood_tris if sub == BLOOD else self.tissue_tris
        return np.unique(self.triangles[tris])

    def edges_with_tag(self, tag, side=None):
        """Edges carrying a tag, optionally only those adjacent to one subdomain."""
        idx = np.flatnonzero(self.edge_tags == tag)
        if side is None:
            return self.edges[idx]
        adj = self.edge_adjacent_tris[idx]
        keep = np.zeros(len(idx), dtype=bool)
        for slot in range(2):
            t = adj[:, slot]
            ok = t >= 0
            keep |= ok & (self.subdomain[np.where(ok, t, 0)] == side) & ok
        return self.edges[idx[keep]]


def _tri_edge_array(triangles):
    """Row 3*t + j is edge j of triangle t, vertex pair sorted."""
    e = np.stack(
        [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]], axis=1
    ).reshape(-1, 2)
    e.sort(axis=1)
    return e


def _graded_positions(total, s_fine, s_coarse, ratio=1.3):
    """1D grid over [0, total], spacing s_fine at 0 growing to s_coarse.

    The spacings are rescaled so the last point lands exactly on total.
    """
    if total <= s_fine:
        return np.array([0.0, total])
    steps = []
    s = s_fine
    acc = 0.0
    while acc < total:
        steps.append(s)
        acc += s
        s = min(s * ratio, s_coarse)
    steps = np.asarray(steps) * (total / acc)
    pos = np.concatenate([[0.0], np.cumsum(steps)])
    pos[-1] = total
    return pos


def build_channel_tissue_mesh(params=None):
    """Build the default blood-channel/tissue-slab mesh.

    Deterministic for fixed parameters. Raises MeshError if the point
    layout fails to produce a conforming boundary-fitted triangulation.
    """
    if params is None:
        params = GeometryParams()
    length = params.length
    height = params.height
    r = params.electrode_radius
    depth = params.tissue_depth
    h = params.h_target
    n_arc = params.n_arc
    cx = length / 2.0
    xl = cx - r
    xr = cx + r

    s_arc = 2.0 * r * np.sin(np.pi / (2.0 * n_arc))

    # interface abscissae left of the notch, graded from the arc chord size
    g = _graded_positions(xl, s_arc, h)
    x_left = xl - g
    x_left = np.sort(x_left)
    x_left[0] = 0.0
    x_left[-1] = xl
    x_right = np.sort(length - x_left)
    x_right[0] = xr
    x_right[-1] = length

    n_flat = max(4, int(np.ceil(2.0 * r / s_arc)))
    x_flat = np.linspace(xl, xr, n_flat + 1)

    # arc points, endpoints shared with the interface
    ang = np.linspace(0.0, np.pi, n_arc + 1)
    arc = np.column_stack([cx + r * np.cos(ang), r * np.sin(ang)])
    arc[0] = (xr, 0.0)
    arc[-1] = (xl, 0.0)

    x_cols = np.unique(np.concatenate([x_left, x_flat, x_right]))
    y_rows = np.linspace(0.0, height, max(2, int(round(height / h))) + 1)

    iface_x = np.concatenate([x_left, x_right])
    blood_pts = [np.column_stack([iface_x, np.zeros_like(iface_x)])]
    blood_pts.append(arc[1:-1][::-1])  # interior arc points, left to right
    gx, gy = np.meshgrid(x_cols, y_rows[1:], indexing="ij")
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    dist = np.hypot(grid[:, 0] - cx, grid[:, 1])
    grid = grid[dist > r + 0.55 * s_arc]
    blood_pts.append(grid)
    blood_pts = np.concatenate(blood_pts)

    tri = Delaunay(blood_pts)
    bt = tri.simplices.copy()
    cent = blood_pts[bt].mean(axis=1)
    keep = np.hypot(cent[:, 0] - cx, cent[:, 1]) > r
    bt = bt[keep]
    areas = _signed_areas(blood_pts, bt)
    flip = areas < 0
    bt[flip] = bt[flip][:, [0, 2, 1]]
    degenerate = np.abs(_signed_areas(blood_pts, bt)) < 1e-14 * h * h
    if degenerate.any():
        bt = bt[~degenerate]

    # tissue tensor grid; top row reuses the interface/flat abscissae
    xt = x_cols
    s_top = x_flat[1] - x_flat[0]
    gt = _graded_positions(depth, s_top, h)
    yt = -gt
    yt[0] = 0.0
    yt[-1] = -depth

    # tissue vertex ids: the top row reuses blood interface ids where the
    # abscissa is shared and appends the flat-segment points, then whole
    # rows follow top to bottom
    n_blood = len(blood_pts)
    iface_lookup = {float(x): i for i, x in enumerate(iface_x)}
    top_ids = np.empty(len(xt), dtype=np.int64)
    flat_top_pts = []
    next_id = n_blood
    for j, x in enumerate(xt):
        if float(x) in iface_lookup:
            top_ids[j] = iface_lookup[float(x)]
        else:
            top_ids[j] = next_id
            flat_top_pts.append((x, 0.0))
            next_id += 1
    row_ids = [top_ids]
    for _ in yt[1:]:
        row_ids.append(np.arange(next_id, next_id + len(xt), dtype=np.int64))
        next_id += len(xt)
    pts_list = [blood_pts]
    if flat_top_pts:
        pts_list.append(np.asarray(flat_top_pts))
    for yy in yt[1:]:
        pts_list.append(np.column_stack([xt, np.full(len(xt), yy)]))
    vertices = np.concatenate(pts_list)

    tt = []
    for j in range(len(yt) - 1):
        top = row_ids[j]
        bot = row_ids[j + 1]
        for i in range(len(xt) - 1):
            a, b = top[i], top[i + 1]
            c, d = bot[i], bot[i + 1]
            if (i + j) % 2 == 0:
                tt.append((a, d, b))
                tt.append((a, c, d))
            else:
                tt.append((a, c, b))
                tt.append((b, c, d))
    tt = np.asarray(tt, dtype=np.int64)
    areas = _signed_areas(vertices, tt)
    flip = areas < 0
    tt[flip] = tt[flip][:, [0, 2, 1]]

    triangles = np.concatenate([bt, tt]).astype(np.int64)
    subdomain = np.concatenate(
        [np.full(len(bt), BLOOD, dtype=np.int8), np.full(len(tt), TISSUE, dtype=np.int8)]
    )

    mesh = _finish_mesh(vertices, triangles, subdomain, params, arc)
    validate_mesh(mesh)
    return mesh


def _signed_areas(pts, tris):
    p = pts[tris]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def _finish_mesh(vertices, triangles, subdomain, params, arc):
    """Extract and tag boundary/interface edges; build the Mesh."""
    length = params.length
    height = params.height
    r = params.electrode_radius
    depth = params.tissue_depth
    cx = length / 2.0

    tri_edges = _tri_edge_array(triangles)
    owner = np.repeat(np.arange(len(triangles)), 3)
    order = np.lexsort((tri_edges[:, 1], tri_edges[:, 0]))
    se = tri_edges[order]
    so = owner[order]
    flat = se[:, 0] * (len(vertices) + 1) + se[:, 1]
    start = np.flatnonzero(np.r_[True, np.diff(flat) != 0])
    counts = np.diff(np.r_[start, len(flat)])
    uniq = se[start]
    if counts.max() > 2:
        raise MeshError("edge shared by more than two triangles")

    arc_set = set()
    for p in arc:
        arc_set.add((round(float(p[0]), 12), round(float(p[1]), 12)))

    def on_arc(vid):
        p = vertices[vid]
        return (round(float(p[0]), 12), round(float(p[1]), 12)) in arc_set

    edges = []
    tags = []
    eps = 1e-9
    for k in range(len(uniq)):
        i, j = uniq[k]
        c = counts[k]
        adj = so[start[k]]
        if c == 2:
            other = so[start[k] + 1]
            if subdomain[adj] != subdomain[other]:
                pi, pj = vertices[i], vertices[j]
                if abs(pi[1]) > eps or abs(pj[1]) > eps:
                    raise MeshError("subdomain interface off the y=0 line")
                edges.append((i, j))
                tags.append(TAG_INTERFACE)
            continue
        pi, pj = vertices[i], vertices[j]
        mx, my = 0.5 * (pi + pj)
        if on_arc(i) and on_arc(j) and my > eps:
            tag = TAG_ELECTRODE
        elif abs(my) <= eps and abs(mx - cx) < r:
            tag = TAG_ELECTRODE  # flat contact under the electrode
        elif abs(mx) <= eps:
            tag = TAG_INLET if my > 0 else TAG_TISSUE_LEFT
        elif abs(mx - length) <= eps:
            tag = TAG_OUTLET if my > 0 else TAG_TISSUE_RIGHT
        elif abs(my - height) <= eps:
            tag = TAG_TOP
        elif abs(my + depth) <= eps:
            tag = TAG_TISSUE_BOTTOM
        else:
            raise MeshError(
                "unclassifiable boundary edge between vertices %d and %d at (%g, %g)"
                % (i, j, mx, my)
            )
        edges.append((i, j))
        tags.append(tag)

    mesh = Mesh(
        vertices=np.ascontiguousarray(vertices, dtype=float),
        triangles=np.ascontiguousarray(triangles, dtype=np.int64),
        subdomain=np.ascontiguousarray(subdomain, dtype=np.int8),
        edges=np.asarray(edges, dtype=np.int64),
        edge_tags=np.asarray(tags, dtype=np.int8),
    )
    return mesh


def rectangle_mesh(nx, ny, length=1.0, height=1.0):
    """Structured right-triangle mesh of a rectangle, single subdomain.

    Tags: 1 left, 2 top, 3 right, 5 bottom. Used by convergence tests
    and channel-only flow checks; not part of the bi-domain file format.
    """
    x = np.linspace(0.0, length, nx + 1)
    y = np.linspace(0.0, height, ny + 1)
    gx, gy = np.meshgrid(x, y, indexing="ij")
    vertices = np.column_stack([gx.ravel(), gy.ravel()])

    def vid(i, j):
        return i * (ny + 1) + j

    tris = []
    for i in range(nx):
        for j in range(ny):
            a = vid(i, j)
            b = vid(i + 1, j)
            c = vid(i + 1, j + 1)
            d = vid(i, j + 1)
            if (i + j) % 2 == 0:
                tris.append((a, b, c))
                tris.append((a, c, d))
            else:
                tris.append((a, b, d))
                tris.append((b, c, d))
    triangles = np.asarray(tris, dtype=np.int64)
    edges = []
    tags = []
    for j in range(ny):
        edges.append((vid(0, j), vid(0, j + 1)))
        tags.append(TAG_INLET)
        edges.append((vid(nx, j), vid(nx, j + 1)))
        tags.append(TAG_OUTLET)
    for i in range(nx):
        edges.append((vid(i, ny), vid(i + 1, ny)))
        tags.append(TAG_TOP)
        edges.append((vid(i, 0), vid(i + 1, 0)))
        tags.append(TAG_TISSUE_BOTTOM)
    return Mesh(
        vertices=vertices,
        triangles=triangles,
        subdomain=np.full(len(triangles), BLOOD, dtype=np.int8),
        edges=np.asarray(edges, dtype=np.int64),
        edge_tags=np.asarray(tags, dtype=np.int8),
    )


def mesh_quality(mesh):
    """Edge-length and angle statistics over all triangles."""
    p = mesh.vertices[mesh.triangles]
    e = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]])
    lengths = np.linalg.norm(e, axis=2)
    h = lengths.max(axis=0)
    angles = np.empty((3, mesh.n_triangles))
    for i in range(3):
        a = -e[i]
        b = e[(i + 1) % 3]
        cosv = (a * b).sum(axis=1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
        angles[i] = np.degrees(np.arccos(np.clip(cosv, -1.0, 1.0)))
    return QualityReport(
        h_min=float(h.min()),
        h_max=float(h.max()),
        min_angle_deg=float(angles.min()),
        is_acute=bool(angles.max() < 90.0 - 1e-9),
    )


def validate_mesh(mesh):
    """Check structural invariants; raise MeshError naming the offender."""
    areas = mesh.tri_areas
    bad = np.flatnonzero(areas <= 0.0)
    if bad.size:
        raise MeshError("triangle %d has non-positive area" % bad[0])
    if mesh.triangles.min() < 0 or mesh.triangles.max() >= mesh.n_vertices:
        raise MeshError("triangle vertex index out of range")

    tri_edges = _tri_edge_array(mesh.triangles)
    uniq, counts = np.unique(tri_edges, axis=0, return_counts=True)
    if counts.max() > 2:
        k = int(np.argmax(counts))
        raise MeshError(
            "edge (%d, %d) shared by more than two triangles" % tuple(uniq[k])
        )
    tagged = mesh.edges.copy()
    tagged.sort(axis=1)
    key = lambda e: e[:, 0] * (mesh.n_vertices + 1) + e[:, 1]
    uk = key(uniq)
    boundary_keys = set(uk[counts == 1].tolist())
    tag_keys = key(tagged)
    seen = set()
    for k, t in zip(tag_keys.tolist(), mesh.edge_tags.tolist()):
        if k in seen:
            raise MeshError("edge tagged twice")
        seen.add(k)
        if t != TAG_INTERFACE and k not in boundary_keys:
            raise MeshError("tagged edge with tag %d is not a boundary edge" % t)
    missing = boundary_keys - set(tag_keys.tolist())
    if missing:
        raise MeshError("untagged boundary edge present")

    # hanging nodes: no vertex strictly inside a tagged edge
    for (i, j) in mesh.edges:
        pi = mesh.vertices[i]
        pj = mesh.vertices[j]
        d = pj - pi
        ln2 = float(d @ d)
        rel = mesh.vertices - pi
        tpar = (rel @ d) / ln2
        perp = rel - np.outer(tpar, d)
        on = (np.abs(perp).max(axis=1) < 1e-10) & (tpar > 1e-10) & (tpar < 1 - 1e-10)
        on[i] = on[j] = False
        if on.any():
            raise MeshError(
                "vertex %d hangs on edge (%d, %d)" % (int(np.flatnonzero(on)[0]), i, j)
            )


def write_mesh(mesh, path):
    """Write the plain-text mesh interchange format (version 1)."""
    lines = ["rfa-mesh 1"]
    lines.append("vertices %d" % mesh.n_vertices)
    for x, y in mesh.vertices:
        lines.append("%.17g %.17g" % (x, y))
    lines.append("triangles %d" % mesh.n_triangles)
    for (i, j, k), s in zip(mesh.triangles, mesh.subdomain):
        lines.append("%d %d %d %d" % (i, j, k, s))
    lines.append("boundary %d" % len(mesh.edges))
    for (i, j), t in zip(mesh.edges, mesh.edge_tags):
        lines.append("%d %d %d" % (i, j, t))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_mesh(path):
    """Parse and validate a mesh file; errors carry 1-based line numbers."""
    with open(path) as f:
        raw = f.read().splitlines()

    def fail(lineno, msg):
        raise MeshError("%s:%d: %s" % (path, lineno, msg))

    if not raw or raw[0].strip() != "rfa-mesh 1":
        fail(1, "expected header 'rfa-mesh 1'")
    ln = 1

    def expect_section(name):
        nonlocal ln
        if ln >= len(raw):
            fail(ln + 1, "missing '%s' section" % name)
        parts = raw[ln].split()
        if len(parts) != 2 or parts[0] != name:
            fail(ln + 1, "expected '%s <count>'" % name)
        try:
            count = int(parts[1])
        except ValueError:
            fail(ln + 1, "bad %s count" % name)
        if count < 0:
            fail(ln + 1, "negative %s count" % name)
        ln += 1
        return count

    nv = expect_section("vertices")
    vertices = np.empty((nv, 2))
    for i in range(nv):
        if ln >= len(raw):
            fail(ln + 1, "truncated vertex list")
        parts = raw[ln].split()
        if len(parts) != 2:
            fail(ln + 1, "vertex line needs 2 coordinates")
        try:
            vertices[i] = (float(parts[0]), float(parts[1]))
        except ValueError:
            fail(ln + 1, "bad vertex coordinate")
        ln += 1

    nt = expect_section("triangles")
    triangles = np.empty((nt, 3), dtype=np.int64)
    subdomain = np.empty(nt, dtype=np.int8)
    for i in range(nt):
        if ln >= len(raw):
            fail(ln + 1, "truncated triangle list")
        parts = raw[ln].split()
        if len(parts) != 4:
            fail(ln + 1, "triangle line needs 'i j k subdomain'")
        try:
            triangles[i] = [int(parts[0]), int(parts[1]), int(parts[2])]
            subdomain[i] = int(parts[3])
        except ValueError:
            fail(ln + 1, "bad triangle entry")
        if subdomain[i] not in (BLOOD, TISSUE):
            fail(ln + 1, "subdomain label must be 0 (blood) or 1 (tissue)")
        ln += 1

    ne = expect_section("boundary")
    edges = np.empty((ne, 2), dtype=np.int64)
    tags = np.empty(ne, dtype=np.int8)
    for i in range(ne):
        if ln >= len(raw):
            fail(ln + 1, "truncated boundary list")
        parts = raw[ln].split()
        if len(parts) != 3:
            fail(ln + 1, "boundary line needs 'i j tag'")
        try:
            edges[i] = [int(parts[0]), int(parts[1])]
            tags[i] = int(parts[2])
        except ValueError:
            fail(ln + 1, "bad boundary entry")
        if not 1 <= tags[i] <= 8:
            fail(ln + 1, "boundary tag must lie in 1..8")
        ln += 1

    for i in range(ln, len(raw)):
        if raw[i].strip():
            fail(i + 1, "unexpected trailing content")

    mesh = Mesh(
        vertices=vertices,
        triangles=triangles,
        subdomain=subdomain,
        edges=edges,
        edge_tags=tags,
    )
    if TAG_ELECTRODE not in set(tags.tolist()):
        raise MeshError("%s: required boundary tag absent (electrode, tag 8)" % path)
    validate_mesh(mesh)
    return mesh


def locate_points(mesh, points):
    """Find containing triangles and barycentric coordinates.

    Returns (tri_indices, bary) with bary shaped (n_points, 3). Raises
    MeshError for points outside the mesh.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    tri_idx = np.empty(len(points), dtype=np.int64)
    bary = np.empty((len(points), 3))
    p = mesh.vertices[mesh.triangles]
    for k, pt in enumerate(points):
        d = pt - p[:, 0]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        l1 = (d[:, 0] * d2[:, 1] - d[:, 1] * d2[:, 0]) / det
        l2 = (d1[:, 0] * d[:, 1] - d1[:, 1] * d[:, 0]) / det
        l0 = 1.0 - l1 - l2
        ok = (l0 >= -1e-10) & (l1 >= -1e-10) & (l2 >= -1e-10)
        if not ok.any():
            raise MeshError("point (%g, %g) lies outside the mesh" % tuple(pt))
        t = int(np.flatnonzero(ok)[0])
        tri_idx[k] = t
        bary[k] = (l0[t], l1[t], l2[t])
    return tri_idx, bary
