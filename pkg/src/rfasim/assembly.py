"""Finite element operators on the triangulation.

Scalar fields (potential, temperature) use continuous P1 on a subset of
elements with global vertex numbering; rows of vertices outside the
subset stay empty and must be pinned by the caller. Velocity uses the
MINI element (P1 plus a cubic bubble per triangle) over the blood
elements with a compact numbering, pressure uses P1 on the same compact
vertex set. Velocity dof layout is

    [ux at vertices | ux bubbles | uy at vertices | uy bubbles]

so component c occupies the slice c*n_scalar..(c+1)*n_scalar.

The viscous form is int nu D(u):D(v) with D the symmetric gradient, so
for divergence-free fields it matches -(nu/2) Laplace. Convection is
assembled from a frozen transport field and then skew-symmetrized,
which keeps the operator energy-neutral regardless of how far the
discrete field is from divergence free.
"""

import numpy as np
import scipy.sparse as sp

from .geometry import BLOOD
from .quadrature import triangle_rule
from .sparse import CSRMatrix

# Exact integrals of the normalized cubic bubble b = 27*l1*l2*l3 over one
# triangle of area A: int b = (9/20)A, int li*b = (3/20)A, int b^2 = (81/280)A.
_INT_B = 9.0 / 20.0
_INT_LB = 3.0 / 20.0
_INT_BB = 81.0 / 280.0


class ScalarSpace:
    """P1 space over an element subset, numbered by global vertex id."""

    def __init__(self, mesh, elements=None):
        self.mesh = mesh
        if elements is None:
            elements = np.arange(mesh.n_triangles)
        self.elements = np.asarray(elements, dtype=np.int64)
        self.active = np.unique(mesh.triangles[self.elements])
        self.n_dofs = mesh.n_vertices

    @property
    def inactive(self):
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.active] = False
        return np.flatnonzero(mask)


class VelocitySpace:
    """MINI velocity space over the blood elements.

    Scalar dofs per component: one per blood vertex (compact numbering
    via ``vmap``) followed by one bubble per blood element.
    """

    def __init__(self, mesh):
        self.mesh = mesh
        self.elements = mesh.blood_tris.copy()
        self.vertex_ids = np.unique(mesh.triangles[self.elements])
        self.vmap = np.full(mesh.n_vertices, -1, dtype=np.int64)
        self.vmap[self.vertex_ids] = np.arange(len(self.vertex_ids))
        self.n_vert = len(self.vertex_ids)
        self.n_bub = len(self.elements)
        self.n_scalar = self.n_vert + self.n_bub
        self.n_dofs = 2 * self.n_scalar

    def vertex_dofs(self, vertex_ids, component):
        """Dof indices of a component at the given global vertices."""
        local = self.vmap[np.asarray(vertex_ids, dtype=np.int64)]
        if (local < 0).any():
            raise ValueError("vertex not part of the velocity space")
        return component * self.n_scalar + local

    def from_vertex_field(self, field):
        """Dof vector for an (n_vertices, 2) nodal field, zero bubbles."""
        u = np.zeros(self.n_dofs)
        for c in range(2):
            u[c * self.n_scalar : c * self.n_scalar + self.n_vert] = field[
                self.vertex_ids, c
            ]
        return u

    def vertex_field(self, u):
        """(n_vertices, 2) nodal values of a dof vector, zero off-blood."""
        out = np.zeros((self.mesh.n_vertices, 2))
        for c in range(2):
            out[self.vertex_ids, c] = u[
                c * self.n_scalar : c * self.n_scalar + self.n_vert
            ]
        return out


def element_mean(mesh, elements, vertex_values):
    """Average of the three vertex values per element (P1 centroid value)."""
    return np.asarray(vertex_values, dtype=float)[mesh.triangles[elements]].mean(axis=1)


def element_gradients(mesh, elements, vertex_values):
    """Constant gradient of the P1 interpolant per element, (ne, 2)."""
    vals = np.asarray(vertex_values, dtype=float)[mesh.triangles[elements]]
    return np.einsum("ki,kid->kd", vals, mesh.tri_grads[elements])


def _scatter(n, conn, local):
    """Assemble per-element dense blocks into an n x n CSRMatrix."""
    k = conn.shape[1]
    rows = np.repeat(conn, k, axis=1).ravel()
    cols = np.tile(conn, (1, k)).ravel()
    return CSRMatrix.from_triplets(n, n, rows, cols, local.ravel())


def _coeff_array(coeff, ne):
    if coeff is None:
        return np.ones(ne)
    if np.ndim(coeff) == 0:
        return np.full(ne, float(coeff))
    coeff = np.asarray(coeff, dtype=float)
    if coeff.shape != (ne,):
        raise ValueError("coefficient must be scalar or one value per element")
    return coeff


def assemble_stiffness(space, coeff=None):
    """int c grad(u) . grad(v), c constant per element and positive."""
    m = space.mesh
    els = space.elements
    c = _coeff_array(coeff, len(els))
    if (c <= 0.0).any():
        raise ValueError("stiffness coefficient must be positive everywhere")
    g = m.tri_grads[els]
    loc = np.einsum("k,kid,kjd->kij", c * m.tri_areas[els], g, g)
    return _scatter(space.n_dofs, m.triangles[els], loc)


def assemble_mass(space, coeff=None, lumped=False):
    """int c u v, c constant per element; optionally row-lumped."""
    m = space.mesh
    els = space.elements
    ca = _coeff_array(coeff, len(els)) * m.tri_areas[els]
    conn = m.triangles[els]
    if lumped:
        loc = np.zeros((len(els), 3, 3))
        loc[:, [0, 1, 2], [0, 1, 2]] = (ca / 3.0)[:, None]
    else:
        base = np.full((3, 3), 1.0 / 12.0)
        np.fill_diagonal(base, 1.0 / 6.0)
        loc = ca[:, None, None] * base
    return _scatter(space.n_dofs, conn, loc)


def assemble_advection(space, velocity, bubble=None):
    """int (w . grad u) v for a transport field w given at the vertices.

    velocity is (n_vertices, 2); if the field carries bubble modes,
    ``bubble`` holds their coefficients per element of the space, in the
    space's element order. Exact closed forms are used throughout:
    int li * w = (A/12)(w1+w2+w3+wi) and int li * b = (3/20)A.
    """
    m = space.mesh
    els = space.elements
    conn = m.triangles[els]
    w = np.asarray(velocity, dtype=float)[conn]
    if not np.isfinite(w).all():
        raise ValueError("transport field contains non-finite values")
    wsum = w.sum(axis=1)
    g = m.tri_grads[els]
    a12 = m.tri_areas[els] / 12.0
    # loc[k, i, j] = a12 * (wsum + w_i) . g_j
    loc = np.einsum("k,kid,kjd->kij", a12, wsum[:, None, :] + w, g)
    if bubble is not None:
        bub = np.asarray(bubble, dtype=float)
        if bub.shape != (len(els), 2):
            raise ValueError("bubble coefficients must be (n_elements, 2)")
        ext = np.einsum("k,kd,kjd->kj", _INT_LB * m.tri_areas[els], bub, g)
        loc = loc + ext[:, None, :]
    return _scatter(space.n_dofs, conn, loc)


def assemble_scalar_load(space, fn, degree=6):
    """int f v against the P1 basis, f a callable on (m, 2) points."""
    m = space.mesh
    els = space.elements
    pts, wq = triangle_rule(degree)
    verts = m.vertices[m.triangles[els]]
    xq = np.einsum("qi,kid->kqd", pts, verts)
    fv = np.asarray(fn(xq.reshape(-1, 2)), dtype=float).reshape(len(els), len(wq))
    a = m.tri_areas[els]
    loc = np.einsum("k,q,kq,qi->ki", a, wq, fv, pts)
    out = np.zeros(space.n_dofs)
    np.add.at(out, m.triangles[els].ravel(), loc.ravel())
    return out


def assemble_cellwise_load(space, element_values):
    """int s v for a piecewise constant source s: A/3 to each vertex."""
    m = space.mesh
    els = space.elements
    contrib = (m.tri_areas[els] * np.asarray(element_values, dtype=float)) / 3.0
    out = np.zeros(space.n_dofs)
    np.add.at(out, m.triangles[els].ravel(), np.repeat(contrib, 3))
    return out


def assemble_joule_load(space, sigma, phi):
    """Heat load of the resistive source s = sigma |grad phi|^2.

    sigma is per element, phi a nodal potential on the space's vertices;
    the source is constant per element for P1 potentials.
    """
    grad = element_gradients(space.mesh, space.elements, phi)
    s = _coeff_array(sigma, len(space.elements)) * (grad**2).sum(axis=1)
    return assemble_cellwise_load(space, s)


def _mini_values(pts):
    """Values of the 4 scalar MINI basis functions at barycentric points."""
    vals = np.empty((len(pts), 4))
    vals[:, :3] = pts
    vals[:, 3] = 27.0 * pts[:, 0] * pts[:, 1] * pts[:, 2]
    return vals


def _mini_basis_at(pts, grads):
    """Values and gradients of the 4 scalar MINI basis functions.

    pts: (nq, 3) barycentric points; grads: (ne, 3, 2) P1 gradients.
    Returns vals (nq, 4) shared by all elements and gradq (ne, nq, 4, 2).
    """
    nq = len(pts)
    vals = _mini_values(pts)
    ne = grads.shape[0]
    gradq = np.empty((ne, nq, 4, 2))
    gradq[:, :, :3, :] = grads[:, None, :, :]
    # grad b = 27 * sum_i (product of the other two barycentrics) grad li
    pair = np.stack(
        [pts[:, 1] * pts[:, 2], pts[:, 0] * pts[:, 2], pts[:, 0] * pts[:, 1]], axis=1
    )
    gradq[:, :, 3, :] = 27.0 * np.einsum("qi,kid->kqd", pair, grads)
    return vals, gradq


def _velocity_conn(vspace):
    """(ne, 8) dof indices per element: 4 scalar basis times 2 components."""
    m = vspace.mesh
    els = vspace.elements
    vloc = vspace.vmap[m.triangles[els]]
    bloc = vspace.n_vert + np.arange(len(els))[:, None]
    scal = np.hstack([vloc, bloc])
    return np.hstack([scal, vspace.n_scalar + scal])


def assemble_velocity_mass(vspace, coeff=None):
    """Block-diagonal MINI mass matrix over both components."""
    m = vspace.mesh
    els = vspace.elements
    ca = _coeff_array(coeff, len(els)) * m.tri_areas[els]
    base = np.full((4, 4), 1.0 / 12.0)
    np.fill_diagonal(base, 1.0 / 6.0)
    base[:3, 3] = base[3, :3] = _INT_LB
    base[3, 3] = _INT_BB
    loc8 = np.zeros((len(els), 8, 8))
    loc8[:, :4, :4] = ca[:, None, None] * base
    loc8[:, 4:, 4:] = loc8[:, :4, :4]
    return _scatter(vspace.n_dofs, _velocity_conn(vspace), loc8)


def assemble_viscous(vspace, nu):
    """int nu D(u):D(v) over the blood elements, nu constant per element."""
    m = vspace.mesh
    els = vspace.elements
    nuv = _coeff_array(nu, len(els))
    if (nuv <= 0.0).any():
        raise ValueError("viscosity must be positive everywhere")
    pts, wq = triangle_rule(4)
    _, gq = _mini_basis_at(pts, m.tri_grads[els])
    w = wq[None, :] * (nuv * m.tri_areas[els])[:, None]
    # 0.5*delta_cd grad_a.grad_b + 0.5 * d_c(phi_b) d_d(phi_a)
    dot = np.einsum("kq,kqad,kqbd->kab", w, gq, gq)
    cross = np.einsum("kq,kqbc,kqad->kabcd", w, gq, gq)
    loc = np.zeros((len(els), 8, 8))
    for c in range(2):
        for d in range(2):
            blk = 0.5 * cross[:, :, :, c, d]
            if c == d:
                blk = blk + 0.5 * dot
            loc[:, c * 4 : c * 4 + 4, d * 4 : d * 4 + 4] = blk
    return _scatter(vspace.n_dofs, _velocity_conn(vspace), loc)


def assemble_convection_skew(vspace, w_dofs):
    """Skew-symmetrized convection 0.5*(C - C^T) transported by w_dofs."""
    m = vspace.mesh
    els = vspace.elements
    pts, wq = triangle_rule(6)
    vals, gq = _mini_basis_at(pts, m.tri_grads[els])
    conn = _velocity_conn(vspace)
    # w at quadrature points, (ne, nq, 2)
    wk = np.stack([w_dofs[conn[:, :4]], w_dofs[conn[:, 4:]]], axis=2)
    wq_pts = np.einsum("qa,kac->kqc", vals, wk)
    aw = wq[None, :] * m.tri_areas[els][:, None]
    # c[k, a, b] = int (w . grad phi_b) phi_a, per scalar basis pair
    cab = np.einsum("kq,kqc,kqbc,qa->kab", aw, wq_pts, gq, vals)
    skew = 0.5 * (cab - cab.transpose(0, 2, 1))
    loc = np.zeros((len(els), 8, 8))
    loc[:, :4, :4] = skew
    loc[:, 4:, 4:] = skew
    return _scatter(vspace.n_dofs, conn, loc)


def assemble_divergence(vspace):
    """B with B[l, j] = int q_l d_j(u basis), pressure P1 on blood vertices.

    Vertex velocity columns carry (A/3) d_d(lambda_j) for each of the
    three pressure rows; the bubble column integrates by parts to
    -(9A/20) d_d(lambda_l).
    """
    m = vspace.mesh
    els = vspace.elements
    a = m.tri_areas[els]
    g = m.tri_grads[els]
    vloc = vspace.vmap[m.triangles[els]]
    conn = _velocity_conn(vspace)
    ne = len(els)
    rows, cols, vals = [], [], []
    for c in range(2):
        # vertex columns: same entry for every pressure row of the element
        ent = (a / 3.0)[:, None] * g[:, :, c]
        rows.append(np.repeat(vloc, 3, axis=1).ravel())
        cols.append(np.tile(conn[:, c * 4 : c * 4 + 3], (1, 3)).ravel())
        vals.append(np.tile(ent, (1, 3)).ravel())
        # bubble column
        entb = -(_INT_B * a)[:, None] * g[:, :, c]
        rows.append(vloc.ravel())
        cols.append(np.repeat(conn[:, c * 4 + 3], 3))
        vals.append(entb.ravel())
    return CSRMatrix.from_triplets(
        vspace.n_vert,
        vspace.n_dofs,
        np.concatenate(rows),
        np.concatenate(cols),
        np.concatenate(vals),
    )


def assemble_velocity_load(vspace, fn, degree=6):
    """int f . v against all MINI basis functions, f callable on points."""
    m = vspace.mesh
    els = vspace.elements
    pts, wq = triangle_rule(degree)
    vals = _mini_values(pts)
    verts = m.vertices[m.triangles[els]]
    xq = np.einsum("qi,kid->kqd", pts, verts)
    fv = np.asarray(fn(xq.reshape(-1, 2)), dtype=float).reshape(len(els), len(wq), 2)
    aw = wq[None, :] * m.tri_areas[els][:, None]
    loc = np.einsum("kq,kqc,qa->kca", aw, fv, vals).reshape(len(els), 8)
    out = np.zeros(vspace.n_dofs)
    np.add.at(out, _velocity_conn(vspace).ravel(), loc.ravel())
    return out


def assemble_pressure_mass(vspace, coeff=None):
    """P1 mass matrix on the compact blood-vertex pressure numbering."""
    m = vspace.mesh
    els = vspace.elements
    ca = _coeff_array(coeff, len(els)) * m.tri_areas[els]
    base = np.full((3, 3), 1.0 / 12.0)
    np.fill_diagonal(base, 1.0 / 6.0)
    loc = ca[:, None, None] * base
    return _scatter(vspace.n_vert, vspace.vmap[m.triangles[els]], loc)


def assemble_body_load(vspace, f_elements):
    """int f . v for a force constant per element, f_elements (ne, 2).

    Vertices receive (A/3) f_c, bubbles (9A/20) f_c per component.
    """
    m = vspace.mesh
    els = vspace.elements
    f = np.asarray(f_elements, dtype=float)
    if f.shape != (len(els), 2):
        raise ValueError("force must be (n_elements, 2)")
    a = m.tri_areas[els]
    conn = _velocity_conn(vspace)
    loc = np.empty((len(els), 8))
    for c in range(2):
        loc[:, c * 4 : c * 4 + 3] = (a * f[:, c] / 3.0)[:, None]
        loc[:, c * 4 + 3] = _INT_B * a * f[:, c]
    out = np.zeros(vspace.n_dofs)
    np.add.at(out, conn.ravel(), loc.ravel())
    return out


def collect_scalar_dirichlet(mesh, bc_map, side=None):
    """Vertex dofs and values for tagged Dirichlet data, lower tag wins.

    bc_map maps a boundary tag to a constant or a callable taking an
    (n, 2) coordinate array. A vertex shared by several tagged edges
    takes the value of the lowest tag; iteration runs from the highest
    tag down so lower tags overwrite.
    """
    chosen = {}
    for tag in sorted(bc_map, reverse=True):
        ids = np.unique(mesh.edges_with_tag(tag, side=side))
        if ids.size == 0:
            continue
        g = bc_map[tag]
        if callable(g):
            vals = np.asarray(g(mesh.vertices[ids]), dtype=float)
        else:
            vals = np.full(len(ids), float(g))
        for v, val in zip(ids.tolist(), vals):
            chosen[v] = float(val)
    dofs = np.array(sorted(chosen), dtype=np.int64)
    return dofs, np.array([chosen[d] for d in dofs])


def collect_velocity_dirichlet(vspace, bc_map):
    """Velocity dof/value pairs for tagged Dirichlet data, lower tag wins.

    Values are constants (broadcast to both components) or callables
    returning (n, 2). Only edges adjacent to blood triangles count, so
    tag 8 contributes its arc part only. Bubbles have zero trace and are
    never constrained.
    """
    mesh = vspace.mesh
    chosen = {}
    for tag in sorted(bc_map, reverse=True):
        ids = np.unique(mesh.edges_with_tag(tag, side=BLOOD))
        if ids.size == 0:
            continue
        g = bc_map[tag]
        if callable(g):
            vals = np.asarray(g(mesh.vertices[ids]), dtype=float)
        else:
            vals = np.broadcast_to(np.asarray(g, dtype=float), (len(ids), 2))
        for v, val in zip(ids.tolist(), vals):
            chosen[v] = (float(val[0]), float(val[1]))
    verts = np.array(sorted(chosen), dtype=np.int64)
    if verts.size == 0:
        return np.empty(0, dtype=np.int64), np.empty(0)
    dofs = np.concatenate([vspace.vertex_dofs(verts, c) for c in range(2)])
    values = np.array(
        [chosen[v][0] for v in verts] + [chosen[v][1] for v in verts]
    )
    return dofs, values


def apply_dirichlet(a, b, dofs, values):
    """Eliminate fixed dofs symmetrically; keeps SPD systems SPD.

    Rows and columns of the fixed dofs are zeroed, their coupling moved
    to the right-hand side, the diagonal set to one and the right-hand
    side to the fixed value, so the solution carries the value exactly.
    """
    dofs = np.asarray(dofs, dtype=np.int64)
    values = np.broadcast_to(np.asarray(values, dtype=float), dofs.shape)
    n = a.shape[0]
    mat = a.mat if isinstance(a, CSRMatrix) else sp.csr_matrix(a)
    full = np.zeros(n)
    full[dofs] = values
    out_b = np.asarray(b, dtype=float) - mat @ full
    out_b[dofs] = values
    keep = np.ones(n)
    keep[dofs] = 0.0
    dk = sp.diags(keep)
    fixed = sp.diags(1.0 - keep)
    out = dk @ mat @ dk + fixed
    return CSRMatrix(out), out_b
