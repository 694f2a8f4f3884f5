"""Global function spaces: element families bound to a mesh.

Global DOF order is vertices, then edges (by edge index, slots along the
global low-to-high vertex direction), then cells, which makes DOF maps
reproducible.  H(div) edge DOFs carry a per-cell sign so that normal traces
are single valued across cells; vector Lagrange spaces interleave the x/y
components of each scalar DOF.
"""

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .elements import (HdivElement, ScalarElement, cell_geometry,
                       reference_element, shifted_legendre)
from .quadrature import edge_rule, triangle_rule

_CONFORMITY = {"CG": "H1", "DG": "L2", "RT": "Hdiv", "BDM": "Hdiv"}


def _entity_dof_counts(family):
    k = family.order
    if family.kind == "CG":
        return 1, k - 1, (k - 1) * (k - 2) // 2
    if family.kind == "DG":
        return 0, 0, (k + 1) * (k + 2) // 2
    if family.kind == "RT":
        return 0, k, k * (k - 1)
    return 0, k + 1, k * k - 1          # BDM


class FunctionSpace:
    def __init__(self, mesh, family):
        self.mesh = mesh
        self.family = family
        self.element = reference_element(family)
        self.vector = family.value_shape == "vector2"
        self.conformity = _CONFORMITY[family.kind]

        per_vertex, per_edge, per_cell = _entity_dof_counts(family)
        nv, ne, nc = mesh.num_vertices, mesh.num_edges, mesh.num_cells
        offset_e = nv * per_vertex
        offset_c = offset_e + ne * per_edge
        n_scalar = offset_c + nc * per_cell

        nloc = self.element.ndof
        dofs = np.empty((nc, nloc), dtype=int)
        signs = np.ones((nc, nloc))
        cells = mesh.cells
        for loc, (kind, ent, slot) in enumerate(self.element.dof_tags):
            if kind == "vertex":
                dofs[:, loc] = cells[:, ent]
            elif kind == "edge":
                a = cells[:, (ent + 1) % 3]
                b = cells[:, (ent + 2) % 3]
                ascending = a < b
                g_edge = mesh.cell_edges[:, ent]
                if isinstance(self.element, HdivElement):
                    # moment DOFs keep their order; reversing the edge flips
                    # the normal and gives Legendre parity (-1)^j
                    dofs[:, loc] = offset_e + g_edge * per_edge + slot
                    signs[:, loc] = np.where(ascending, -1.0,
                                             (-1.0) ** slot)
                else:
                    # nodal DOFs are ordered along the global edge direction
                    g_slot = np.where(ascending, slot, per_edge - 1 - slot)
                    dofs[:, loc] = offset_e + g_edge * per_edge + g_slot
            else:
                dofs[:, loc] = offset_c + np.arange(nc) * per_cell + slot

        if self.vector and isinstance(self.element, ScalarElement):
            vec_dofs = np.empty((nc, 2 * nloc), dtype=int)
            vec_dofs[:, 0::2] = 2 * dofs
            vec_dofs[:, 1::2] = 2 * dofs + 1
            self.cell_dofs = vec_dofs
            self.cell_signs = np.ones((nc, 2 * nloc))
            self.ndof = 2 * n_scalar
        else:
            self.cell_dofs = dofs
            self.cell_signs = signs
            self.ndof = n_scalar
        self.cell_dofs.setflags(write=False)
        self.cell_signs.setflags(write=False)

    @property
    def local_dim(self):
        return self.cell_dofs.shape[1]

    def interpolate(self, func):
        """Global DOF interpolation of an analytic field.

        ``func(x, y)`` takes coordinate arrays; it returns values of shape
        (n,) for scalar spaces and (n, 2) for vector spaces.  Exact whenever
        the field lies in the space.
        """
        mesh = self.mesh
        out = np.zeros(self.ndof)
        if isinstance(self.element, ScalarElement):
            nodes = self.element.nodes
            p = mesh.vertices[mesh.cells]        # (nc, 3, 2)
            phys = (p[:, 0, None, :]
                    + nodes[None, :, 0, None] * (p[:, 1] - p[:, 0])[:, None, :]
                    + nodes[None, :, 1, None] * (p[:, 2] - p[:, 0])[:, None, :])
            x = phys[..., 0].ravel()
            y = phys[..., 1].ravel()
            vals = np.asarray(func(x, y), dtype=float)
            if self.vector:
                vals = vals.reshape(mesh.num_cells, nodes.shape[0], 2)
                out[self.cell_dofs[:, 0::2]] = vals[..., 0]
                out[self.cell_dofs[:, 1::2]] = vals[..., 1]
            else:
                out[self.cell_dofs] = vals.reshape(mesh.num_cells, -1)
            return out
        return self._interpolate_hdiv(func, out)

    def _interpolate_hdiv(self, func, out):
        mesh = self.mesh
        k = self.family.order
        elem = self.element
        nmom = elem.edge_moments
        rule = edge_rule(2 * k + 4)
        verts = mesh.vertices[mesh.edges]          # (ne, 2, 2), low then high
        tang = verts[:, 1] - verts[:, 0]
        lengths = np.linalg.norm(tang, axis=1)
        tang = tang / lengths[:, None]
        normals = np.column_stack([-tang[:, 1], tang[:, 0]])   # rotate +90
        pts = (verts[:, None, 0, :]
               + rule.points[None, :, None] * (verts[:, 1] - verts[:, 0])[:, None, :])
        x = pts[..., 0].ravel()
        y = pts[..., 1].ravel()
        vals = np.asarray(func(x, y), dtype=float).reshape(mesh.num_edges, -1, 2)
        flux = np.einsum("eqi,ei->eq", vals, normals)
        for j in range(nmom):
            leg = shifted_legendre(j, rule.points)
            out[np.arange(mesh.num_edges) * nmom + j] = (
                lengths * np.einsum("q,eq->e", rule.weights * leg, flux))

        n_interior = elem.ndof - 3 * nmom
        if n_interior:
            offset = mesh.num_edges * nmom
            trule = triangle_rule(2 * k + 4)
            interior_locs = [loc for loc, tag in enumerate(elem.dof_tags)
                             if tag[0] == "cell"]
            for c in range(mesh.num_cells):
                geom = cell_geometry(mesh.vertices[mesh.cells[c]])

                def pullback(ref_pts, geom=geom):
                    phys = geom.to_physical(ref_pts)
                    f = np.asarray(func(phys[:, 0], phys[:, 1]), dtype=float)
                    return geom.det * (f @ geom.Binv.T)

                local = elem.apply_dofs(pullback)
                for j, loc in enumerate(interior_locs):
                    out[offset + c * n_interior + j] = local[loc]
        return out


def build_space(mesh, family):
    """Bind an element family to a mesh with deterministic numbering."""
    return FunctionSpace(mesh, family)


class BoundarySpace:
    """1D element space on the closed boundary polyline.

    DG_m uses per-edge shifted Legendre modes (block-diagonal mass); CG_m
    uses Lagrange nodes shared at boundary vertices, except at geometric
    corners (normal turn above 60 degrees), where the DOF is duplicated:
    normal-stress data genuinely jumps there and gluing it caps every
    convergence rate at one.  On the polygonal disk all vertices stay glued.

    The default control interpolation is the boundary restriction of the
    domain interpolant: nodal at the incident cell's trace nodes, with DG_0
    evaluating at the cell centroid.  That reproduces the honest O(h^{m+1})
    input error of keeping only the boundary DOFs of a domain DG space;
    per-edge L2 projection is available via scheme='project' but is
    superconvergent in the boundary pairing and changes the observed caps.
    """

    CORNER_COS = 0.5          # glue vertices with normal turn <= 60 degrees

    def __init__(self, mesh, kind, order):
        kind = kind.upper()
        if kind == "DG":
            if order < 0:
                raise ValueError("DG boundary order must be >= 0")
        elif kind == "CG":
            if order < 1:
                raise ValueError("CG boundary order must be >= 1")
        else:
            raise ValueError("boundary family must be DG or CG")
        self.mesh = mesh
        self.kind = kind
        self.order = order
        edges = mesh.edges[mesh.boundary_edges]     # (nbe, 2) low, high
        self.edge_vertices = edges
        self.points_lo = mesh.vertices[edges[:, 0]]
        self.points_hi = mesh.vertices[edges[:, 1]]
        self.lengths = np.linalg.norm(self.points_hi - self.points_lo, axis=1)
        self.normals = mesh.boundary_normals
        self.cells = mesh.boundary_cells
        nbe = edges.shape[0]

        if kind == "DG":
            self.ndof = (order + 1) * nbe
            self.edge_dofs = (np.arange(nbe)[:, None] * (order + 1)
                              + np.arange(order + 1)[None, :])
        else:
            vertex_dof = self._vertex_dofs(edges)
            nbv = 1 + max(max(d.values()) for d in vertex_dof.values())
            inner = max(order - 1, 0)
            self.ndof = nbv + inner * nbe
            dofs = np.empty((nbe, order + 1), dtype=int)
            for i in range(nbe):
                dofs[i, 0] = vertex_dof[int(edges[i, 0])][i]
                dofs[i, -1] = vertex_dof[int(edges[i, 1])][i]
                for j in range(inner):
                    dofs[i, 1 + j] = nbv + i * inner + j
            self.edge_dofs = dofs
        self.edge_dofs.setflags(write=False)
        self._chol = None
        self._nodal_vander = None

    def _vertex_dofs(self, edges):
        """Per-vertex DOF numbers for CG: one shared DOF per smooth vertex,
        one per incident edge at a corner.  Returns {vertex: {edge: dof}}."""
        incident = {}
        for i in range(edges.shape[0]):
            for v in edges[i]:
                incident.setdefault(int(v), []).append(i)
        vertex_dof = {}
        next_dof = 0
        for v in sorted(incident):
            eids = incident[v]
            if len(eids) == 2:
                n1, n2 = self.normals[eids[0]], self.normals[eids[1]]
                glued = float(n1 @ n2) >= self.CORNER_COS
            else:
                glued = len(eids) == 1
            if glued:
                vertex_dof[v] = {e: next_dof for e in eids}
                next_dof += 1
            else:
                vertex_dof[v] = {}
                for e in eids:
                    vertex_dof[v][e] = next_dof
                    next_dof += 1
        return vertex_dof

    @property
    def dofs_per_edge(self):
        return self.edge_dofs.shape[1]

    def eval_basis(self, s):
        """Per-edge basis values at parameters s in [0, 1]: (ndof_edge, npts)."""
        s = np.asarray(s, dtype=float)
        if self.kind == "DG":
            return np.array([shifted_legendre(j, s)
                             for j in range(self.order + 1)])
        nodes = np.linspace(0.0, 1.0, self.order + 1)
        vals = np.ones((self.order + 1, s.size))
        for i, xi in enumerate(nodes):
            for xj in nodes:
                if xj != xi:
                    vals[i] *= (s - xj) / (xi - xj)
        return vals

    def edge_points(self, s):
        """Physical points at parameters s on every boundary edge: (nbe, ns, 2)."""
        s = np.asarray(s, dtype=float)
        return (self.points_lo[:, None, :]
                + s[None, :, None] * (self.points_hi - self.points_lo)[:, None, :])

    def mass_matrix(self):
        """Dense boundary mass matrix (SPD, size ndof)."""
        rule = edge_rule(2 * self.order + 2)
        psi = self.eval_basis(rule.points)
        local = np.einsum("q,iq,jq->ij", rule.weights, psi, psi)
        M = np.zeros((self.ndof, self.ndof))
        for e in range(self.edge_dofs.shape[0]):
            idx = self.edge_dofs[e]
            M[np.ix_(idx, idx)] += self.lengths[e] * local
        return M

    def interpolate(self, func, t, scheme="nodal"):
        """Coefficients of the control at time t.

        ``func(t, x, y, nx, ny)`` is evaluated with each edge's outward
        normal.  'nodal' restricts the domain interpolant (corner vertices
        of a CG space average the two one-sided values); 'project' takes
        per-edge Legendre moments (DG) or the polyline L2 projection (CG).
        """
        if scheme == "nodal":
            return self._interpolate_nodal(func, t)
        if scheme != "project":
            raise ValueError("scheme must be 'nodal' or 'project'")
        rule = edge_rule(max(2 * self.order + 4, 12))
        pts = self.edge_points(rule.points)
        nbe = self.edge_dofs.shape[0]
        nq = rule.points.size
        nx = np.repeat(self.normals[:, 0], nq)
        ny = np.repeat(self.normals[:, 1], nq)
        vals = np.asarray(func(t, pts[..., 0].ravel(), pts[..., 1].ravel(),
                               nx, ny), dtype=float).reshape(nbe, nq)
        if self.kind == "DG":
            out = np.empty(self.ndof)
            for j in range(self.order + 1):
                leg = shifted_legendre(j, rule.points)
                out[self.edge_dofs[:, j]] = (2 * j + 1) * (
                    vals @ (rule.weights * leg))
            return out
        psi = self.eval_basis(rule.points)
        rhs = np.zeros(self.ndof)
        local = np.einsum("eq,iq->ei", vals * rule.weights[None, :], psi)
        np.add.at(rhs, self.edge_dofs, local * self.lengths[:, None])
        if self._chol is None:
            self._chol = cho_factor(self.mass_matrix())
        return cho_solve(self._chol, rhs)

    def _interpolate_nodal(self, func, t):
        nbe = self.edge_dofs.shape[0]
        out = np.zeros(self.ndof)
        if self.kind == "DG" and self.order == 0:
            # the only dof of the incident cell's DG_0 element sits at the
            # cell centroid; its trace on the edge is that centroid value
            mesh = self.mesh
            cent = mesh.vertices[mesh.cells[self.cells]].mean(axis=1)
            out[self.edge_dofs[:, 0]] = np.asarray(
                func(t, cent[:, 0], cent[:, 1],
                     self.normals[:, 0], self.normals[:, 1]), dtype=float)
            return out
        s = np.linspace(0.0, 1.0, self.order + 1)
        pts = self.edge_points(s)
        ns = s.size
        nx = np.repeat(self.normals[:, 0], ns)
        ny = np.repeat(self.normals[:, 1], ns)
        vals = np.asarray(func(t, pts[..., 0].ravel(), pts[..., 1].ravel(),
                               nx, ny), dtype=float).reshape(nbe, ns)
        if self.kind == "CG":
            # shared vertex DOFs average the one-sided limits
            acc = np.zeros(self.ndof)
            cnt = np.zeros(self.ndof)
            np.add.at(acc, self.edge_dofs, vals)
            np.add.at(cnt, self.edge_dofs, np.ones_like(vals))
            return acc / np.maximum(cnt, 1.0)
        # DG_m, m >= 1: nodal values at the trace nodes -> Legendre coeffs
        if self._nodal_vander is None:
            V = np.array([shifted_legendre(j, s)
                          for j in range(self.order + 1)]).T
            self._nodal_vander = np.linalg.inv(V)
        coef = vals @ self._nodal_vander.T
        out[self.edge_dofs] = coef
        return out


def build_boundary_space(mesh, kind, order):
    return BoundarySpace(mesh, kind, order)
