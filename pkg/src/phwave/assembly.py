"""Assembly of the discrete port-Hamiltonian blocks.

Domain matrices are assembled cell-wise from vectorized basis tables and
scattered into sparse COO storage; boundary matrices iterate the boundary
edges with a 1D rule mapped to physical edge length.  The extended
structure matrix is built from the very arrays stored in the system, so the
skew-symmetry check cancels exactly.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cho_factor

from .elements import HdivElement, cell_geometry
from .quadrature import edge_rule, triangle_rule
from .spaces import BoundarySpace, FunctionSpace


class ConformityWarning(UserWarning):
    """Space combination outside the conforming convergence theory."""


def default_degree(*families):
    """2 * (max polynomial order) + 2: exact for same-order products with
    headroom for smoothly varying coefficients."""
    return 2 * max(getattr(f, "order", f) for f in families) + 2


@dataclass
class Geometry:
    B: np.ndarray       # (nc, 2, 2)
    b: np.ndarray       # (nc, 2)
    det: np.ndarray     # (nc,)
    Binv: np.ndarray    # (nc, 2, 2)


def geometry(mesh):
    p = mesh.vertices[mesh.cells]
    B = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
    det = B[:, 0, 0] * B[:, 1, 1] - B[:, 0, 1] * B[:, 1, 0]
    Binv = np.empty_like(B)
    Binv[:, 0, 0] = B[:, 1, 1]
    Binv[:, 0, 1] = -B[:, 0, 1]
    Binv[:, 1, 0] = -B[:, 1, 0]
    Binv[:, 1, 1] = B[:, 0, 0]
    Binv /= det[:, None, None]
    return Geometry(B, p[:, 0].copy(), det, Binv)


def physical_points(geo, ref_points):
    return np.einsum("cij,qj->cqi", geo.B, ref_points) + geo.b[:, None, :]


def scalar_tables(space, ref_points, geo=None):
    """Reference values (nb, nq) and physical gradients (nc, nb, nq, 2)."""
    geo = geo or geometry(space.mesh)
    values, grads = space.element.eval(ref_points)
    phys_grads = np.einsum("bqj,cji->cbqi", grads, geo.Binv)
    return values, phys_grads


def vector_tables(space, ref_points, geo=None):
    """Physical vector basis values (nc, nb, nq, 2) and divergences
    (nc, nb, nq), orientation signs included."""
    geo = geo or geometry(space.mesh)
    nc = space.mesh.num_cells
    if isinstance(space.element, HdivElement):
        vhat, dhat = space.element.eval(ref_points)
        vals = np.einsum("cij,bqj->cbqi", geo.B, vhat) / geo.det[:, None, None, None]
        divs = dhat[None, :, :] / geo.det[:, None, None]
        vals = vals * space.cell_signs[:, :, None, None]
        divs = divs * space.cell_signs[:, :, None]
        return vals, divs
    # componentwise Lagrange: values map by composition
    svals, sgrads = space.element.eval(ref_points)
    nb, nq = svals.shape
    vals = np.zeros((1, 2 * nb, nq, 2))
    vals[0, 0::2, :, 0] = svals
    vals[0, 1::2, :, 1] = svals
    vals = np.broadcast_to(vals, (nc, 2 * nb, nq, 2))
    phys_grads = np.einsum("bqj,cji->cbqi", sgrads, geo.Binv)
    divs = np.empty((nc, 2 * nb, nq))
    divs[:, 0::2, :] = phys_grads[..., 0]
    divs[:, 1::2, :] = phys_grads[..., 1]
    return vals, divs


def _scatter(local, rows_map, cols_map, shape, row_signs=None, col_signs=None):
    nc, ni, nj = local.shape
    if row_signs is not None:
        local = local * row_signs[:, :, None]
    if col_signs is not None:
        local = local * col_signs[:, None, :]
    rows = np.broadcast_to(rows_map[:, :, None], (nc, ni, nj))
    cols = np.broadcast_to(cols_map[:, None, :], (nc, ni, nj))
    A = sp.coo_matrix((local.ravel(), (rows.ravel(), cols.ravel())),
                      shape=shape)
    return A.tocsr()


def assemble_mass_p(space_p, rho, degree=None):
    """M_rho: scalar mass matrix weighted by the density."""
    if space_p.vector:
        raise ValueError("p-space must be scalar")
    degree = degree or default_degree(space_p.family)
    rule = triangle_rule(degree)
    geo = geometry(space_p.mesh)
    values, _ = scalar_tables(space_p, rule.points, geo)
    pts = physical_points(geo, rule.points)
    w = rule.weights[None, :] * geo.det[:, None] * rho(pts[..., 0], pts[..., 1])
    local = np.einsum("cq,iq,jq->cij", w, values, values)
    return _scatter(local, space_p.cell_dofs, space_p.cell_dofs,
                    (space_p.ndof, space_p.ndof))


def assemble_mass_q(space_q, T_inv, degree=None):
    """M_{T^-1}: vector mass matrix weighted by the inverse stiffness.

    ``T_inv(x, y)`` returns arrays of shape (..., 2, 2).
    """
    if not space_q.vector:
        raise ValueError("q-space must be vector valued")
    degree = degree or default_degree(space_q.family)
    rule = triangle_rule(degree)
    geo = geometry(space_q.mesh)
    vals, _ = vector_tables(space_q, rule.points, geo)
    pts = physical_points(geo, rule.points)
    Tinv = T_inv(pts[..., 0], pts[..., 1])
    w = rule.weights[None, :] * geo.det[:, None]
    local = np.einsum("cq,caqi,cqij,cbqj->cab", w, vals, Tinv, vals)
    return _scatter(local, space_q.cell_dofs, space_q.cell_dofs,
                    (space_q.ndof, space_q.ndof))


def assemble_D(space_q, space_p, degree=None):
    """Averaged gradient D = int Phi_q . grad(Phi_p)."""
    if space_p.family.kind == "DG" and space_p.family.order == 0:
        raise ValueError("invalid combination: DG_0 p-space has no gradient")
    degree = degree or default_degree(space_q.family, space_p.family)
    rule = triangle_rule(degree)
    geo = geometry(space_q.mesh)
    qvals, _ = vector_tables(space_q, rule.points, geo)
    _, pgrads = scalar_tables(space_p, rule.points, geo)
    w = rule.weights[None, :] * geo.det[:, None]
    local = np.einsum("cq,caqi,cjqi->caj", w, qvals, pgrads)
    return _scatter(local, space_q.cell_dofs, space_p.cell_dofs,
                    (space_q.ndof, space_p.ndof))


def _trace_points(bspace, s):
    """Reference coordinates of boundary-edge points inside incident cells."""
    pts = bspace.edge_points(s)                     # (nbe, ns, 2)
    mesh = bspace.mesh
    refs = np.empty_like(pts)
    geoms = []
    for k in range(pts.shape[0]):
        geom = cell_geometry(mesh.vertices[mesh.cells[bspace.cells[k]]])
        refs[k] = geom.to_reference(pts[k])
        geoms.append(geom)
    return pts, refs, geoms


def assemble_B(space_p, bspace, degree=None):
    """Discrete boundary control operator B = int_dOmega trace(Phi_p) Psi^T."""
    degree = degree or default_degree(space_p.family, bspace.order)
    rule = edge_rule(degree)
    psi = bspace.eval_basis(rule.points)            # (nbl, nq)
    _, refs, _ = _trace_points(bspace, rule.points)
    rows, cols, data = [], [], []
    for k in range(refs.shape[0]):
        pvals, _ = space_p.element.eval(refs[k])    # (nbp, nq)
        local = bspace.lengths[k] * np.einsum(
            "q,iq,jq->ij", rule.weights, pvals, psi)
        c = bspace.cells[k]
        rows.append(np.repeat(space_p.cell_dofs[c], psi.shape[0]))
        cols.append(np.tile(bspace.edge_dofs[k], pvals.shape[0]))
        data.append(local.ravel())
    A = sp.coo_matrix((np.concatenate(data),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(space_p.ndof, bspace.ndof))
    return A.tocsr()


def assemble_M_boundary(bspace):
    """Boundary mass matrix (dense SPD)."""
    return bspace.mass_matrix()


def assemble_admittance(bspace, Y, t, degree=None):
    """<Y> = int_dOmega Y Psi Psi^T at time t (dense symmetric)."""
    degree = degree or (2 * bspace.order + 4)
    rule = edge_rule(degree)
    psi = bspace.eval_basis(rule.points)
    pts = bspace.edge_points(rule.points)
    yv = np.asarray(Y(t, pts[..., 0], pts[..., 1]), dtype=float)
    M = np.zeros((bspace.ndof, bspace.ndof))
    local = np.einsum("eq,iq,jq->eij", yv * rule.weights[None, :], psi, psi)
    local *= bspace.lengths[:, None, None]
    for e in range(bspace.edge_dofs.shape[0]):
        idx = bspace.edge_dofs[e]
        M[np.ix_(idx, idx)] += local[e]
    return M


def assemble_dirichlet_blocks(space_q, space_p, bspace, degree=None):
    """(D_tilde, B_tilde): -int div(Phi_q) Phi_p^T and the boundary pairing
    int Psi (Phi_q . n)^T for the velocity-controlled causality."""
    if not isinstance(space_q.element, HdivElement):
        raise ValueError("invalid combination: q-space has no well-defined "
                         "normal trace (use RT or BDM)")
    degree = degree or default_degree(space_q.family, space_p.family)
    rule = triangle_rule(degree)
    geo = geometry(space_q.mesh)
    _, qdivs = vector_tables(space_q, rule.points, geo)
    pvals, _ = scalar_tables(space_p, rule.points, geo)
    w = rule.weights[None, :] * geo.det[:, None]
    local = -np.einsum("cq,caq,jq->caj", w, qdivs, pvals)
    Dt = _scatter(local, space_q.cell_dofs, space_p.cell_dofs,
                  (space_q.ndof, space_p.ndof))
    Bt = _normal_trace_pairing(space_q, bspace)
    return Dt, Bt


def _normal_trace_pairing(space_q, bspace, degree=None):
    """B_tilde = int_dOmega Psi (gamma_n Phi_q)^T, shape (N_bnd, N_q)."""
    degree = degree or default_degree(space_q.family, bspace.order)
    rule = edge_rule(degree)
    psi = bspace.eval_basis(rule.points)
    _, refs, geoms = _trace_points(bspace, rule.points)
    mesh = space_q.mesh
    nmom = space_q.element.edge_moments
    rows, cols, data = [], [], []
    for k in range(refs.shape[0]):
        c = bspace.cells[k]
        # only this edge's own DOFs have a nonzero normal trace here
        e = mesh.boundary_edges[k]
        loc = [i for i, d in enumerate(space_q.cell_dofs[c])
               if e * nmom <= d < (e + 1) * nmom]
        vhat, _ = space_q.element.eval(refs[k])     # (nb, nq, 2)
        geom = geoms[k]
        vals = np.einsum("ij,bqj->bqi", geom.B, vhat[loc]) / geom.det
        vals = vals * space_q.cell_signs[c][loc][:, None, None]
        flux = vals @ bspace.normals[k]             # (nloc, nq)
        local = bspace.lengths[k] * np.einsum(
            "q,iq,bq->ib", rule.weights, psi, flux)
        rows.append(np.repeat(bspace.edge_dofs[k], flux.shape[0]))
        cols.append(np.tile(space_q.cell_dofs[c][loc], psi.shape[0]))
        data.append(local.ravel())
    A = sp.coo_matrix((np.concatenate(data),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(bspace.ndof, space_q.ndof))
    return A.tocsr()


def assemble_boundary_pairing(space_q, space_p, degree=None):
    """int_dOmega (Phi_q . n) trace(Phi_p)^T, the Green-identity boundary
    term, shape (N_q, N_p).  Oracle for D - D_tilde."""
    if not isinstance(space_q.element, HdivElement):
        raise ValueError("invalid combination: q-space has no normal trace")
    mesh = space_q.mesh
    degree = degree or default_degree(space_q.family, space_p.family)
    rule = edge_rule(degree)
    rows, cols, data = [], [], []
    edges = mesh.edges[mesh.boundary_edges]
    for k, e in enumerate(mesh.boundary_edges):
        c = mesh.boundary_cells[k]
        geom = cell_geometry(mesh.vertices[mesh.cells[c]])
        lo, hi = edges[k]
        p0, p1 = mesh.vertices[lo], mesh.vertices[hi]
        length = np.linalg.norm(p1 - p0)
        pts = p0[None, :] + rule.points[:, None] * (p1 - p0)[None, :]
        refs = geom.to_reference(pts)
        vhat, _ = space_q.element.eval(refs)
        vals = np.einsum("ij,bqj->bqi", geom.B, vhat) / geom.det
        vals = vals * space_q.cell_signs[c][:, None, None]
        flux = vals @ mesh.boundary_normals[k]
        pvals, _ = space_p.element.eval(refs)
        local = length * np.einsum("q,aq,jq->aj", rule.weights, flux, pvals)
        rows.append(np.repeat(space_q.cell_dofs[c], pvals.shape[0]))
        cols.append(np.tile(space_p.cell_dofs[c], flux.shape[0]))
        data.append(local.ravel())
    A = sp.coo_matrix((np.concatenate(data),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(space_q.ndof, space_p.ndof))
    return A.tocsr()


@dataclass
class PHSystem:
    """Assembled blocks of the discrete port-Hamiltonian system."""
    causality: str
    space_q: FunctionSpace
    space_p: FunctionSpace
    boundary_space: BoundarySpace
    M_q: sp.csr_matrix
    M_p: sp.csr_matrix
    M_bnd: np.ndarray
    coupling: sp.csr_matrix          # D (Neumann) or D_tilde (Dirichlet)
    control_op: sp.csr_matrix        # B (N_p x N_bnd) or B_tilde (N_bnd x N_q)
    material: object = None
    quad_degree: int = 0
    _bnd_chol: object = field(default=None, repr=False)

    @property
    def n_q(self):
        return self.space_q.ndof

    @property
    def n_p(self):
        return self.space_p.ndof

    @property
    def n_bnd(self):
        return self.boundary_space.ndof

    def mass_block(self):
        return sp.block_diag([self.M_q, self.M_p], format="csc")

    def structure_block(self):
        """Skew block [[0, D], [-D^T, 0]] acting on (e_q, e_p)."""
        D = self.coupling
        return sp.bmat([[None, D], [-D.T, None]], format="csr")

    def input_matrix(self):
        """G with M dE/dt = A E + G u."""
        nq, npp, nb = self.n_q, self.n_p, self.n_bnd
        if self.causality == "neumann":
            G = sp.bmat([[sp.csr_matrix((nq, nb))], [self.control_op]],
                        format="csr")
        else:
            G = sp.bmat([[self.control_op.T], [sp.csr_matrix((npp, nb))]],
                        format="csr")
        return G

    def extended_structure(self):
        """The (N_q+N_p+N_bnd) extended structure matrix of the kernel
        representation; exactly skew by construction."""
        D = self.coupling
        nq, npp, nb = self.n_q, self.n_p, self.n_bnd
        if self.causality == "neumann":
            B = self.control_op
            return sp.bmat([[None, D, sp.csr_matrix((nq, nb))],
                            [-D.T, None, B],
                            [sp.csr_matrix((nb, nq)), -B.T, None]],
                           format="csr")
        Bt = self.control_op
        return sp.bmat([[None, D, Bt.T],
                        [-D.T, None, sp.csr_matrix((npp, nb))],
                        [-Bt, sp.csr_matrix((nb, npp)), None]],
                       format="csr")

    def bnd_chol(self):
        if self._bnd_chol is None:
            self._bnd_chol = cho_factor(self.M_bnd)
        return self._bnd_chol


def build_system(space_q, space_p, bspace, material, causality="neumann",
                 degree=None):
    """Assemble the full system for either causality.

    Emits a ConformityWarning (not an error) for combinations outside the
    convergence theory, e.g. a discontinuous p-space under force control;
    such divergent cases are legitimate negative controls.
    """
    if causality not in ("neumann", "dirichlet"):
        raise ValueError("causality must be 'neumann' or 'dirichlet'")
    degree = degree or default_degree(space_q.family, space_p.family,
                                      bspace.order)
    if causality == "neumann" and space_p.conformity != "H1":
        warnings.warn("p-space is not H1-conforming under force control; "
                      "convergence theory does not apply", ConformityWarning,
                      stacklevel=2)
    if causality == "dirichlet" and space_q.conformity != "Hdiv":
        warnings.warn("q-space is not H(div)-conforming under velocity "
                      "control; convergence theory does not apply",
                      ConformityWarning, stacklevel=2)
    M_q = assemble_mass_q(space_q, material.T_inv, degree)
    M_p = assemble_mass_p(space_p, material.rho, degree)
    M_bnd = assemble_M_boundary(bspace)
    if causality == "neumann":
        coupling = assemble_D(space_q, space_p, degree)
        control_op = assemble_B(space_p, bspace, degree)
    else:
        coupling, control_op = assemble_dirichlet_blocks(
            space_q, space_p, bspace, degree)
    return PHSystem(causality, space_q, space_p, bspace,
                    M_q, M_p, M_bnd, coupling, control_op,
                    material=material, quad_degree=degree)


def dump_matrix(A, stream):
    """Coordinate 'row col value' text dump."""
    if sp.issparse(A):
        coo = A.tocoo()
        stream.write("%d %d %d\n" % (coo.shape[0], coo.shape[1], coo.nnz))
        order = np.lexsort((coo.col, coo.row))
        for i in order:
            stream.write("%d %d %.17g\n" % (coo.row[i], coo.col[i],
                                            coo.data[i]))
    else:
        A = np.asarray(A)
        nz = np.nonzero(A)
        stream.write("%d %d %d\n" % (A.shape[0], A.shape[1], len(nz[0])))
        for i, j in zip(*nz):
            stream.write("%d %d %.17g\n" % (i, j, A[i, j]))
