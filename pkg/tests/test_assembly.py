import io
import warnings

import numpy as np
import pytest

from phwave.assembly import (ConformityWarning, assemble_admittance,
                             assemble_B, assemble_boundary_pairing,
                             assemble_D, assemble_dirichlet_blocks,
                             assemble_M_boundary, assemble_mass_p,
                             assemble_mass_q, build_system, default_degree,
                             dump_matrix)
from phwave.elements import ElementFamily
from phwave.materials import aniso_const_material, unit_material
from phwave.mesh import Mesh, build_unit_square
from phwave.spaces import build_boundary_space, build_space

UNIT = unit_material()


def single_cell_mesh():
    return Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
                np.array([[0, 1, 2]]))


def test_cg1_local_mass_matrix():
    m = single_cell_mesh()
    sp = build_space(m, ElementFamily("CG", 1))
    M = assemble_mass_p(sp, UNIT.rho).toarray()
    A = 0.5
    expected = (A / 12.0) * np.array([[2.0, 1.0, 1.0],
                                      [1.0, 2.0, 1.0],
                                      [1.0, 1.0, 2.0]])
    assert np.abs(M - expected).max() < 1e-14


def test_dg0_mass_is_cell_areas_and_linear_in_rho():
    m = build_unit_square(3)
    sp = build_space(m, ElementFamily("DG", 0))
    M1 = assemble_mass_p(sp, UNIT.rho).toarray()
    assert np.abs(M1 - np.diag(m.cell_areas)).max() < 1e-14
    M2 = assemble_mass_p(sp, lambda x, y: np.full_like(x, 2.0)).toarray()
    assert np.abs(M2 - 2.0 * M1).max() < 1e-14


def test_mass_p_rejects_vector_space():
    m = build_unit_square(2)
    spv = build_space(m, ElementFamily("CG", 1, "vector2"))
    with pytest.raises(ValueError):
        assemble_mass_p(spv, UNIT.rho)


def test_mass_q_scaling():
    m = build_unit_square(2)
    spq = build_space(m, ElementFamily("RT", 1, "vector2"))
    M1 = assemble_mass_q(spq, UNIT.T_inv).toarray()
    quarter = assemble_mass_q(
        spq, lambda x, y: np.broadcast_to(np.eye(2) / 4.0,
                                          np.shape(x) + (2, 2)),
    ).toarray()
    assert np.abs(quarter - 0.25 * M1).max() < 1e-13


def test_mass_q_aniso_constant_field_quadratic_form():
    # 1^T M 1 over the interpolant of (1, 0) equals T^{-1}[0,0] |Omega| = 3/11
    m = build_unit_square(4)
    mat = aniso_const_material()
    spq = build_space(m, ElementFamily("CG", 1, "vector2"))
    M = assemble_mass_q(spq, mat.T_inv)
    u = spq.interpolate(lambda x, y: np.stack(
        [np.ones_like(x), np.zeros_like(x)], axis=-1))
    assert u @ (M @ u) == pytest.approx(3.0 / 11.0, rel=1e-13)


def test_D_annihilates_constants():
    m = build_unit_square(3)
    spq = build_space(m, ElementFamily("RT", 1, "vector2"))
    spp = build_space(m, ElementFamily("CG", 1))
    D = assemble_D(spq, spp)
    assert np.abs(D @ np.ones(spp.ndof)).max() < 1e-13


def test_D_rows_for_linear_p_dg0_vector_q():
    # p = interpolant of x, q = vector DG_0: each cell row pair is (area, 0)
    m = build_unit_square(2)
    spq = build_space(m, ElementFamily("DG", 0, "vector2"))
    spp = build_space(m, ElementFamily("CG", 1))
    D = assemble_D(spq, spp)
    px = spp.interpolate(lambda x, y: x)
    v = D @ px
    expected = np.zeros(spq.ndof)
    expected[0::2] = m.cell_areas
    assert np.abs(v - expected).max() < 1e-14


def test_D_rejects_dg0_p():
    m = build_unit_square(2)
    spq = build_space(m, ElementFamily("RT", 1, "vector2"))
    spp = build_space(m, ElementFamily("DG", 0))
    with pytest.raises(ValueError):
        assemble_D(spq, spp)


def test_B_column_sums_and_interior_rows():
    m = build_unit_square(4)
    spp = build_space(m, ElementFamily("CG", 1))
    bs = build_boundary_space(m, "DG", 0)
    B = assemble_B(spp, bs)
    colsum = np.asarray(B.sum(axis=0)).ravel()
    assert np.abs(colsum - bs.lengths).max() < 1e-14
    assert B.sum() == pytest.approx(4.0, rel=1e-13)
    on_boundary = np.zeros(spp.ndof, dtype=bool)
    on_boundary[np.unique(m.edges[m.boundary_edges])] = True
    rows = np.abs(B.toarray()).sum(axis=1)
    assert np.abs(rows[~on_boundary]).max() == 0.0


def test_boundary_mass_values():
    m = build_unit_square(4)
    bs = build_boundary_space(m, "DG", 0)
    M = assemble_M_boundary(bs)
    assert M.shape == (16, 16)
    assert np.abs(M - 0.25 * np.eye(16)).max() < 1e-15
    assert np.trace(M) == pytest.approx(4.0)


def test_admittance_limits():
    m = build_unit_square(3)
    bs = build_boundary_space(m, "DG", 1)
    Mb = assemble_M_boundary(bs)
    zero = assemble_admittance(bs, lambda t, x, y: np.zeros_like(x), 0.0)
    assert np.abs(zero).max() == 0.0
    one = assemble_admittance(bs, lambda t, x, y: np.ones_like(x), 0.0)
    assert np.abs(one - Mb).max() < 1e-13
    three = assemble_admittance(bs, lambda t, x, y: np.full_like(x, 3.0), 1.0)
    assert np.abs(three - 3.0 * Mb).max() < 1e-13


def test_dirichlet_blocks_divergence_free_field():
    # div commutes with the RT interpolant: the rotation field (-y, x) is
    # divergence free, so D_tilde annihilates its interpolant
    m = build_unit_square(3)
    spq = build_space(m, ElementFamily("RT", 1, "vector2"))
    spp = build_space(m, ElementFamily("DG", 0))
    bs = build_boundary_space(m, "DG", 0)
    Dt, Bt = assemble_dirichlet_blocks(spq, spp, bs)
    u = spq.interpolate(lambda x, y: np.stack([-y, x], axis=-1))
    assert np.abs(u @ Dt).max() < 1e-13
    # B_tilde columns of interior-edge DOFs vanish
    interior = np.ones(spq.ndof, dtype=bool)
    nmom = spq.element.edge_moments
    for k, e in enumerate(m.boundary_edges):
        interior[e * nmom:(e + 1) * nmom] = False
    cols = np.abs(Bt.toarray()).sum(axis=0)
    assert cols[interior].max() == 0.0


def test_dirichlet_blocks_reject_non_hdiv_q():
    m = build_unit_square(2)
    spq = build_space(m, ElementFamily("CG", 1, "vector2"))
    spp = build_space(m, ElementFamily("DG", 0))
    bs = build_boundary_space(m, "DG", 0)
    with pytest.raises(ValueError):
        assemble_dirichlet_blocks(spq, spp, bs)


@pytest.mark.parametrize("qfam", [("RT", 1), ("RT", 2), ("BDM", 1),
                                  ("BDM", 2)])
@pytest.mark.parametrize("porder", [1, 2])
def test_discrete_green_identity(qfam, porder):
    m = build_unit_square(3)
    spq = build_space(m, ElementFamily(qfam[0], qfam[1], "vector2"))
    spp = build_space(m, ElementFamily("CG", porder))
    bs = build_boundary_space(m, "DG", 0)
    D = assemble_D(spq, spp)
    Dt, _ = assemble_dirichlet_blocks(spq, spp, bs)
    C = assemble_boundary_pairing(spq, spp)
    resid = (D - Dt - C).toarray()
    assert np.abs(resid).max() < 1e-12


def test_skew_structure_exact():
    m = build_unit_square(3)
    mat = UNIT
    spq = build_space(m, ElementFamily("RT", 1, "vector2"))
    spp = build_space(m, ElementFamily("CG", 1))
    bs = build_boundary_space(m, "DG", 0)
    sys_n = build_system(spq, spp, bs, mat, "neumann")
    J = sys_n.extended_structure()
    S = J + J.T
    assert S.nnz == 0 or np.abs(S.data).max() == 0.0
    spp2 = build_space(m, ElementFamily("DG", 1))
    sys_d = build_system(spq, spp2, bs, mat, "dirichlet")
    J = sys_d.extended_structure()
    S = J + J.T
    assert S.nnz == 0 or np.abs(S.data).max() == 0.0


def test_quadrature_independence_constant_coefficients():
    m = build_unit_square(3)
    spq = build_space(m, ElementFamily("RT", 2, "vector2"))
    spp = build_space(m, ElementFamily("CG", 2))
    deg = default_degree(spq.family, spp.family)
    for build, args in [(assemble_mass_q, (spq, UNIT.T_inv)),
                        (assemble_mass_p, (spp, UNIT.rho)),
                        (assemble_D, (spq, spp))]:
        A = build(*args, degree=deg).toarray()
        B = build(*args, degree=deg + 2).toarray()
        assert np.abs(A - B).max() < 1e-12


ALL_SPACES = ([("CG", k, "scalar") for k in (1, 2, 3)]
              + [("DG", k, "scalar") for k in (1, 2, 3)]
              + [("CG", k, "vector2") for k in (1, 2)]
              + [("DG", k, "vector2") for k in (0, 1, 2)]
              + [("RT", k, "vector2") for k in (1, 2)]
              + [("BDM", k, "vector2") for k in (1, 2)])


@pytest.mark.parametrize("n", [2, 4])
def test_mass_matrices_spd(n):
    m = build_unit_square(n)
    for kind, order, shape in ALL_SPACES:
        sp = build_space(m, ElementFamily(kind, order, shape))
        if shape == "scalar":
            M = assemble_mass_p(sp, UNIT.rho).toarray()
        else:
            M = assemble_mass_q(sp, UNIT.T_inv).toarray()
        np.linalg.cholesky(M)   # raises if not SPD
    for kind, order in [("DG", 0), ("DG", 1), ("CG", 1), ("CG", 2)]:
        bs = build_boundary_space(m, kind, order)
        np.linalg.cholesky(assemble_M_boundary(bs))


def test_conformity_warning_dg_p_neumann():
    m = build_unit_square(2)
    spq = build_space(m, ElementFamily("CG", 1, "vector2"))
    spp = build_space(m, ElementFamily("DG", 1))
    bs = build_boundary_space(m, "DG", 0)
    with pytest.warns(ConformityWarning):
        build_system(spq, spp, bs, UNIT, "neumann")


def test_no_warning_for_conforming_combo():
    m = build_unit_square(2)
    spq = build_space(m, ElementFamily("RT", 1, "vector2"))
    spp = build_space(m, ElementFamily("CG", 1))
    bs = build_boundary_space(m, "DG", 0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        build_system(spq, spp, bs, UNIT, "neumann")


def test_build_system_validates_causality():
    m = build_unit_square(2)
    spq = build_space(m, ElementFamily("RT", 1, "vector2"))
    spp = build_space(m, ElementFamily("CG", 1))
    bs = build_boundary_space(m, "DG", 0)
    with pytest.raises(ValueError):
        build_system(spq, spp, bs, UNIT, "robin")


def test_dump_matrix_roundtrip():
    m = build_unit_square(2)
    spp = build_space(m, ElementFamily("CG", 1))
    M = assemble_mass_p(spp, UNIT.rho)
    buf = io.StringIO()
    dump_matrix(M, buf)
    lines = buf.getvalue().splitlines()
    rows, cols, nnz = (int(v) for v in lines[0].split())
    assert (rows, cols) == (spp.ndof, spp.ndof)
    assert len(lines) == nnz + 1
    r, c, v = lines[1].split()
    assert M.toarray()[int(r), int(c)] == pytest.approx(float(v))
    # dense dump path
    buf = io.StringIO()
    dump_matrix(np.eye(3), buf)
    assert buf.getvalue().splitlines()[0] == "3 3 3"
