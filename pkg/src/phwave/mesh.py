"""Simplicial triangulations of the unit square, the L-shape and the unit disk.

Meshes are immutable after construction: vertices, counterclockwise cells,
sorted-pair edges with cell incidence, and the boundary edge list with
outward normals.  Structured meshes split every grid square along the same
diagonal, which keeps the refinement family quasi-uniform by construction.
"""

import numpy as np


class DegenerateCellError(ValueError):
    """A cell has zero or negative signed area."""


class Mesh:
    """Immutable 2D triangle mesh.

    Attributes
    ----------
    vertices : (nv, 2) float array
    cells : (nc, 3) int array
        Vertex indices, counterclockwise.  Local edge ``i`` connects local
        vertices ``(i+1) % 3 -> (i+2) % 3`` (the edge opposite vertex ``i``).
    edges : (ne, 2) int array
        Unique edges as sorted vertex pairs (low index first).
    cell_edges : (nc, 3) int array
        Global edge index of each local edge.
    edge_cells : (ne, 2) int array
        Incident cells per edge, -1 padded; interior edges have two.
    boundary_edges : (nbe,) int array
        Edge indices with exactly one incident cell.
    boundary_normals : (nbe, 2) float array
        Outward unit normal of each boundary edge.
    h : float
        Maximum cell diameter.
    """

    def __init__(self, vertices, cells):
        vertices = np.asarray(vertices, dtype=float)
        cells = np.asarray(cells, dtype=int)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise ValueError("vertices must be an (nv, 2) array")
        if cells.ndim != 2 or cells.shape[1] != 3:
            raise ValueError("cells must be an (nc, 3) array")
        if not np.all(np.isfinite(vertices)):
            raise ValueError("vertex coordinates must be finite")
        self.vertices = vertices
        self.cells = cells
        areas = _signed_areas(vertices, cells)
        if cells.size and np.any(areas <= 0.0):
            bad = int(np.argmax(areas <= 0.0))
            raise DegenerateCellError(
                "cell %d has non-positive signed area %g" % (bad, areas[bad]))
        self.cell_areas = areas
        self._build_edges()
        self.h = float(self.cell_diameters().max()) if cells.size else 0.0
        self.vertices.setflags(write=False)
        self.cells.setflags(write=False)

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_cells(self):
        return self.cells.shape[0]

    @property
    def num_edges(self):
        return self.edges.shape[0]

    def _build_edges(self):
        nc = self.num_cells
        # local edge i is opposite local vertex i
        raw = np.stack([self.cells[:, [1, 2]],
                        self.cells[:, [2, 0]],
                        self.cells[:, [0, 1]]], axis=1).reshape(3 * nc, 2)
        key = np.sort(raw, axis=1)
        edges, inverse = np.unique(key, axis=0, return_inverse=True)
        self.edges = edges
        self.cell_edges = inverse.reshape(nc, 3)

        ne = edges.shape[0]
        edge_cells = np.full((ne, 2), -1, dtype=int)
        counts = np.zeros(ne, dtype=int)
        for c in range(nc):
            for e in self.cell_edges[c]:
                edge_cells[e, counts[e]] = c
                counts[e] += 1
        if counts.size and counts.max() > 2:
            raise ValueError("edge shared by more than two cells")
        self.edge_cells = edge_cells
        self.edge_counts = counts
        self.boundary_edges = np.nonzero(counts == 1)[0]

        # outward normal: boundary edges are traversed CCW by their only cell,
        # so the tangent rotated -90 degrees points out of the domain
        normals = np.zeros((self.boundary_edges.size, 2))
        bcells = np.zeros(self.boundary_edges.size, dtype=int)
        for k, e in enumerate(self.boundary_edges):
            c = edge_cells[e, 0]
            bcells[k] = c
            loc = int(np.nonzero(self.cell_edges[c] == e)[0][0])
            a = self.cells[c, (loc + 1) % 3]
            b = self.cells[c, (loc + 2) % 3]
            t = self.vertices[b] - self.vertices[a]
            t /= np.hypot(t[0], t[1])
            normals[k] = (t[1], -t[0])
        self.boundary_normals = normals
        self.boundary_cells = bcells

    def cell_diameters(self):
        """Longest edge of each triangle."""
        p = self.vertices[self.cells]
        d01 = np.linalg.norm(p[:, 0] - p[:, 1], axis=1)
        d12 = np.linalg.norm(p[:, 1] - p[:, 2], axis=1)
        d20 = np.linalg.norm(p[:, 2] - p[:, 0], axis=1)
        return np.maximum(d01, np.maximum(d12, d20))

    def edge_lengths(self):
        v = self.vertices[self.edges]
        return np.linalg.norm(v[:, 1] - v[:, 0], axis=1)

    def boundary_loop(self):
        """Boundary vertices ordered into the closed polyline (CCW)."""
        nxt = {}
        for k, e in enumerate(self.boundary_edges):
            a, b = self.edges[e]
            # orient the edge CCW around the domain: tangent = normal rotated +90
            n = self.boundary_normals[k]
            t = self.vertices[b] - self.vertices[a]
            if t[0] * (-n[1]) + t[1] * n[0] < 0:
                a, b = b, a
            nxt[int(a)] = int(b)
        start = next(iter(nxt))
        loop = [start]
        while True:
            v = nxt[loop[-1]]
            if v == start:
                break
            loop.append(v)
        return np.array(loop, dtype=int)

    def dump(self, stream):
        """Plain-text dump: one section per array, space-separated numbers."""
        stream.write("vertices %d\n" % self.num_vertices)
        for x, y in self.vertices:
            stream.write("%.17g %.17g\n" % (x, y))
        stream.write("cells %d\n" % self.num_cells)
        for a, b, c in self.cells:
            stream.write("%d %d %d\n" % (a, b, c))
        stream.write("boundary_edges %d\n" % self.boundary_edges.size)
        for k, e in enumerate(self.boundary_edges):
            a, b = self.edges[e]
            nx, ny = self.boundary_normals[k]
            stream.write("%d %d %.17g %.17g\n" % (a, b, nx, ny))


def _signed_areas(vertices, cells):
    p = vertices[cells]
    return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                  - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))


def build_unit_square(n):
    """Structured mesh of (0,1)^2: n x n squares, each split along the
    lower-left to upper-right diagonal.  2*n^2 cells, (n+1)^2 vertices."""
    if n < 1:
        raise ValueError("n must be >= 1")
    xs = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    cells = []
    for j in range(n):
        for i in range(n):
            v00 = vid(i, j)
            v10 = vid(i + 1, j)
            v01 = vid(i, j + 1)
            v11 = vid(i + 1, j + 1)
            cells.append((v00, v10, v11))
            cells.append((v00, v11, v01))
    return Mesh(vertices, np.array(cells, dtype=int))


def build_lshape(n):
    """Unit square minus the upper-right quadrant [1/2,1]x[1/2,1].

    n must be even so the re-entrant corner lies on the grid; area 3/4.
    """
    if n < 2 or n % 2 != 0:
        raise ValueError("n must be even and >= 2")
    square = build_unit_square(n)
    centers = square.vertices[square.cells].mean(axis=1)
    keep = ~((centers[:, 0] > 0.5) & (centers[:, 1] > 0.5))
    cells = square.cells[keep]
    used = np.unique(cells)
    remap = -np.ones(square.num_vertices, dtype=int)
    remap[used] = np.arange(used.size)
    return Mesh(square.vertices[used], remap[cells])


def build_disk(n):
    """Polygonal approximation of the unit disk.

    Level 1 is a fan of 8 triangles around the origin; each further level
    refines every triangle into four and projects the new boundary vertices
    onto the unit circle.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    angles = 2.0 * np.pi * np.arange(8) / 8.0
    vertices = np.vstack([[0.0, 0.0],
                          np.column_stack([np.cos(angles), np.sin(angles)])])
    cells = np.array([(0, 1 + k, 1 + (k + 1) % 8) for k in range(8)], dtype=int)
    mesh = Mesh(vertices, cells)
    for _ in range(n - 1):
        mesh = _refine_project(mesh)
    return mesh


def _refine_project(mesh):
    """Uniform 1->4 refinement with boundary midpoints pushed to the circle."""
    mids = mesh.vertices[mesh.edges].mean(axis=1)
    on_boundary = np.zeros(mesh.num_edges, dtype=bool)
    on_boundary[mesh.boundary_edges] = True
    norms = np.linalg.norm(mids[on_boundary], axis=1)
    mids[on_boundary] /= norms[:, None]
    vertices = np.vstack([mesh.vertices, mids])
    mid_id = mesh.num_vertices + np.arange(mesh.num_edges)

    cells = []
    for c in range(mesh.num_cells):
        v0, v1, v2 = mesh.cells[c]
        m0, m1, m2 = mid_id[mesh.cell_edges[c]]
        cells.extend([(v0, m2, m1), (v1, m0, m2), (v2, m1, m0), (m0, m1, m2)])
    return Mesh(vertices, np.array(cells, dtype=int))


def mesh_size(mesh):
    """Maximum cell diameter (longest triangle edge)."""
    if mesh.num_cells == 0:
        raise ValueError("empty mesh")
    return float(mesh.cell_diameters().max())


def shape_regularity(mesh):
    """max over cells of diameter / inscribed-circle diameter (4*area/perimeter)."""
    if mesh.num_cells == 0:
        raise ValueError("empty mesh")
    if np.any(mesh.cell_areas <= 0.0):
        raise DegenerateCellError("mesh contains a degenerate cell")
    p = mesh.vertices[mesh.cells]
    per = (np.linalg.norm(p[:, 0] - p[:, 1], axis=1)
           + np.linalg.norm(p[:, 1] - p[:, 2], axis=1)
           + np.linalg.norm(p[:, 2] - p[:, 0], axis=1))
    d_in = 4.0 * mesh.cell_areas / per
    return float((mesh.cell_diameters() / d_in).max())
