"""Reference finite elements on the triangle.

Scalar Lagrange elements (continuous CG_k and cell-local DG_k) are nodal;
the H(div) families RT_k and BDM_k use edge moments against shifted
Legendre polynomials plus interior moments, so that a per-cell sign is all
that is needed to glue normal traces across cells.  RT_k here follows the
convention where the lowest order is RT_1 (span (P_{k-1})^2 + x Ptilde_{k-1}).

All bases are built by inverting the degree-of-freedom matrix over a
monomial span; evaluation is exact polynomial arithmetic up to roundoff.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import legval

from .mesh import DegenerateCellError
from .quadrature import edge_rule, triangle_rule

# reference triangle: vertices, edge i opposite vertex i (first -> second),
# edge lengths and outward unit normals
REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
EDGE_VERTICES = ((1, 2), (2, 0), (0, 1))
EDGE_LENGTHS = (np.sqrt(2.0), 1.0, 1.0)
EDGE_NORMALS = (np.array([1.0, 1.0]) / np.sqrt(2.0),
                np.array([-1.0, 0.0]),
                np.array([0.0, -1.0]))

ORDER_CAPS = {"CG": (1, 3), "DG": (0, 3), "RT": (1, 2), "BDM": (1, 2)}


@dataclass(frozen=True)
class ElementFamily:
    kind: str            # CG | DG | RT | BDM
    order: int
    value_shape: str = "scalar"   # scalar | vector2

    def __post_init__(self):
        if self.kind not in ORDER_CAPS:
            raise ValueError("unknown element kind %r" % (self.kind,))
        lo, hi = ORDER_CAPS[self.kind]
        if not lo <= self.order <= hi:
            raise ValueError("%s order %d outside supported range [%d, %d]"
                             % (self.kind, self.order, lo, hi))
        if self.kind in ("RT", "BDM") and self.value_shape != "vector2":
            raise ValueError("%s elements are vector valued" % (self.kind,))
        if self.value_shape not in ("scalar", "vector2"):
            raise ValueError("bad value_shape %r" % (self.value_shape,))

    def __str__(self):
        return "%s_%d" % (self.kind, self.order)


def parse_family(text, value_shape="scalar"):
    """Parse 'CG_2', 'RT_1', ... into an ElementFamily."""
    try:
        kind, order = text.strip().split("_")
        order = int(order)
    except ValueError:
        raise ValueError("cannot parse element family %r" % (text,))
    kind = kind.upper()
    if kind in ("RT", "BDM"):
        value_shape = "vector2"
    return ElementFamily(kind, order, value_shape)


def _monomial_exponents(degree):
    return [(a, b) for total in range(degree + 1)
            for a in range(total, -1, -1) for b in (total - a,)]


def _eval_monomials(exps, points):
    points = np.atleast_2d(points)
    out = np.empty((points.shape[0], len(exps)))
    for m, (a, b) in enumerate(exps):
        out[:, m] = points[:, 0] ** a * points[:, 1] ** b
    return out


def _eval_monomial_grads(exps, points):
    points = np.atleast_2d(points)
    out = np.zeros((points.shape[0], len(exps), 2))
    for m, (a, b) in enumerate(exps):
        if a > 0:
            out[:, m, 0] = a * points[:, 0] ** (a - 1) * points[:, 1] ** b
        if b > 0:
            out[:, m, 1] = b * points[:, 0] ** a * points[:, 1] ** (b - 1)
    return out


def shifted_legendre(j, s):
    """Legendre polynomial of degree j mapped to [0, 1]."""
    c = np.zeros(j + 1)
    c[j] = 1.0
    return legval(2.0 * np.asarray(s) - 1.0, c)


def lagrange_nodes(order):
    """Lagrange node positions and (kind, entity, slot) tags, ordered
    vertices, then edges (along each edge's first -> second vertex), then
    interior."""
    if order == 0:
        return np.array([[1.0 / 3.0, 1.0 / 3.0]]), [("cell", 0, 0)]
    nodes = [tuple(v) for v in REF_VERTICES]
    tags = [("vertex", i, 0) for i in range(3)]
    for e, (a, b) in enumerate(EDGE_VERTICES):
        pa, pb = REF_VERTICES[a], REF_VERTICES[b]
        for j in range(order - 1):
            t = (j + 1) / order
            nodes.append(tuple(pa + t * (pb - pa)))
            tags.append(("edge", e, j))
    slot = 0
    for i in range(1, order):        # interior barycentric lattice points
        for j in range(1, order - i):
            nodes.append((i / order, j / order))
            tags.append(("cell", 0, slot))
            slot += 1
    return np.array(nodes), tags


class ScalarElement:
    """Nodal Lagrange element (shared entities for CG, cell-local for DG)."""

    def __init__(self, family):
        if family.kind not in ("CG", "DG"):
            raise ValueError("family mismatch: %s is not a scalar Lagrange "
                             "family" % (family,))
        self.family = family
        self.nodes, tags = lagrange_nodes(family.order)
        if family.kind == "DG":
            tags = [("cell", 0, j) for j in range(len(tags))]
        self.dof_tags = tags
        self.ndof = len(tags)
        self._exps = _monomial_exponents(max(family.order, 0))
        V = _eval_monomials(self._exps, self.nodes)
        self._coeffs = np.linalg.inv(V)

    def eval(self, points):
        """Basis values (ndof, npts) and reference gradients (ndof, npts, 2)."""
        mono = _eval_monomials(self._exps, points)
        gmono = _eval_monomial_grads(self._exps, points)
        values = (mono @ self._coeffs).T
        grads = np.einsum("pmd,mb->bpd", gmono, self._coeffs)
        return values, grads


class HdivElement:
    """RT_k / BDM_k element with Legendre edge moments and interior moments."""

    def __init__(self, family):
        if family.kind not in ("RT", "BDM"):
            raise ValueError("family mismatch: %s is not an H(div) family"
                             % (family,))
        self.family = family
        k = family.order
        self._exps = _monomial_exponents(k)
        self._span_x, self._span_y = self._build_span(family)
        ns = self._span_x.shape[0]
        self.edge_moments = k if family.kind == "RT" else k + 1
        self._interior_weights = self._build_interior_weights(family)
        self.dof_tags = ([("edge", e, j) for e in range(3)
                          for j in range(self.edge_moments)]
                         + [("cell", 0, j)
                            for j in range(len(self._interior_weights))])
        self.ndof = len(self.dof_tags)
        if self.ndof != ns:
            raise AssertionError("dof/span count mismatch")
        A = self._dof_matrix()
        self._coeffs = np.linalg.inv(A)

    def _build_span(self, family):
        k = family.order
        exps = self._exps
        idx = {e: m for m, e in enumerate(exps)}
        rows_x, rows_y = [], []

        def add(xmono, ymono):
            rx = np.zeros(len(exps))
            ry = np.zeros(len(exps))
            for a, b, c in xmono:
                rx[idx[(a, b)]] += c
            for a, b, c in ymono:
                ry[idx[(a, b)]] += c
            rows_x.append(rx)
            rows_y.append(ry)

        if family.kind == "BDM":
            for a, b in _monomial_exponents(k):
                add([(a, b, 1.0)], [])
                add([], [(a, b, 1.0)])
        else:
            for a, b in _monomial_exponents(k - 1):
                add([(a, b, 1.0)], [])
                add([], [(a, b, 1.0)])
            for a in range(k - 1, -1, -1):          # x * homogeneous degree k-1
                b = k - 1 - a
                add([(a + 1, b, 1.0)], [(a, b + 1, 1.0)])
        return np.array(rows_x), np.array(rows_y)

    def _build_interior_weights(self, family):
        """Constant interior weight fields; BDM_2 adds the rotation (-y, x)."""
        k = family.order
        if family.kind == "RT":
            n = k * (k - 1)
            w = [lambda p: np.column_stack([np.ones(len(p)), np.zeros(len(p))]),
                 lambda p: np.column_stack([np.zeros(len(p)), np.ones(len(p))])]
            return w[:n]
        n = k * k - 1
        w = [lambda p: np.column_stack([np.ones(len(p)), np.zeros(len(p))]),
             lambda p: np.column_stack([np.zeros(len(p)), np.ones(len(p))]),
             lambda p: np.column_stack([-p[:, 1], p[:, 0]])]
        return w[:n]

    def _span_values(self, points):
        mono = _eval_monomials(self._exps, points)
        gmono = _eval_monomial_grads(self._exps, points)
        vx = mono @ self._span_x.T            # (npts, nspan)
        vy = mono @ self._span_y.T
        div = gmono[:, :, 0] @ self._span_x.T + gmono[:, :, 1] @ self._span_y.T
        return vx, vy, div

    def apply_dofs(self, fhat):
        """Apply the reference DOF functionals to fhat: points (n,2) -> (n,2)."""
        k = self.family.order
        erule = edge_rule(2 * k + 2)
        trule = triangle_rule(2 * k + 2)
        out = np.empty(self.ndof)
        d = 0
        for e in range(3):
            a, b = EDGE_VERTICES[e]
            pts = (REF_VERTICES[a][None, :]
                   + erule.points[:, None] * (REF_VERTICES[b] - REF_VERTICES[a]))
            vals = fhat(pts)
            flux = vals @ EDGE_NORMALS[e]
            for j in range(self.edge_moments):
                leg = shifted_legendre(j, erule.points)
                out[d] = EDGE_LENGTHS[e] * np.sum(erule.weights * flux * leg)
                d += 1
        if self._interior_weights:
            vals = fhat(trule.points)
            for w in self._interior_weights:
                wv = w(trule.points)
                out[d] = np.sum(trule.weights * np.sum(vals * wv, axis=1))
                d += 1
        return out

    def _dof_matrix(self):
        A = np.empty((self.ndof, self.ndof))
        for s in range(self.ndof):
            sx = self._span_x[s]
            sy = self._span_y[s]

            def span_fn(p, sx=sx, sy=sy):
                mono = _eval_monomials(self._exps, p)
                return np.column_stack([mono @ sx, mono @ sy])

            A[:, s] = self.apply_dofs(span_fn)
        return A

    def eval(self, points):
        """Basis vector values (ndof, npts, 2) and divergences (ndof, npts)."""
        vx, vy, div = self._span_values(points)
        bx = (vx @ self._coeffs).T
        by = (vy @ self._coeffs).T
        values = np.stack([bx, by], axis=2)
        divs = (div @ self._coeffs).T
        return values, divs


_ELEMENT_CACHE = {}


def reference_element(family):
    """Build (and cache) the reference element for a family."""
    key = (family.kind, family.order)
    if key not in _ELEMENT_CACHE:
        if family.kind in ("CG", "DG"):
            elem = ScalarElement(ElementFamily(family.kind, family.order))
        else:
            elem = HdivElement(ElementFamily(family.kind, family.order,
                                             "vector2"))
        _ELEMENT_CACHE[key] = elem
    return _ELEMENT_CACHE[key]


def eval_scalar_basis(elem, points):
    """Values and reference gradients of a scalar Lagrange element."""
    if not isinstance(elem, ScalarElement):
        raise ValueError("family mismatch: expected a CG/DG element")
    return elem.eval(points)


def eval_hdiv_basis(elem, points):
    """Vector values and reference divergences of an RT/BDM element."""
    if not isinstance(elem, HdivElement):
        raise ValueError("family mismatch: expected an RT/BDM element")
    return elem.eval(points)


@dataclass(frozen=True)
class CellGeometry:
    """Affine map F(xhat) = B xhat + b of a physical triangle."""
    B: np.ndarray
    b: np.ndarray
    det: float
    Binv: np.ndarray

    def to_physical(self, ref_points):
        return np.atleast_2d(ref_points) @ self.B.T + self.b

    def to_reference(self, phys_points):
        return (np.atleast_2d(phys_points) - self.b) @ self.Binv.T


def cell_geometry(coords):
    coords = np.asarray(coords, dtype=float)
    B = np.column_stack([coords[1] - coords[0], coords[2] - coords[0]])
    det = B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0]
    if det == 0.0:
        raise DegenerateCellError("degenerate cell map (det B = 0)")
    Binv = np.array([[B[1, 1], -B[0, 1]], [-B[1, 0], B[0, 0]]]) / det
    return CellGeometry(B, coords[0].copy(), det, Binv)


def map_cell(geom, elem, values, derivs, signs=None):
    """Push reference basis tables to a physical cell.

    Scalars keep their values and get gradients B^{-T} grad; H(div) elements
    get the contravariant Piola transform (1/det B) B v and divergences
    div/det B.  ``signs`` (ndof,) flips rows so that edge DOFs agree with the
    globally oriented edges.
    """
    if isinstance(elem, ScalarElement):
        phys_grads = derivs @ geom.Binv
        return values, phys_grads
    phys_vals = np.einsum("ij,bpj->bpi", geom.B, values) / geom.det
    phys_divs = derivs / geom.det
    if signs is not None:
        phys_vals = phys_vals * signs[:, None, None]
        phys_divs = phys_divs * signs[:, None]
    return phys_vals, phys_divs


def interpolate_local(elem, func, coords):
    """Local coefficients of ``func`` on one cell via the reference DOFs.

    ``func`` maps physical points (n, 2) to values: (n,) for scalar elements
    and (n, 2) for H(div) elements.  Exact whenever ``func`` lies in the
    mapped element space.
    """
    geom = cell_geometry(coords)
    if isinstance(elem, ScalarElement):
        return np.asarray(func(geom.to_physical(elem.nodes)), dtype=float)

    def pullback(ref_pts):
        phys = np.asarray(func(geom.to_physical(ref_pts)), dtype=float)
        return geom.det * (phys @ geom.Binv.T)

    return elem.apply_dofs(pullback)
