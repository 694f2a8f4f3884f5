import io

import numpy as np
import pytest

from phwave import analysis
from phwave.analysis import (ConvergenceReport, LevelResult, convergence_rate,
                             discrete_hamiltonian, energy_ledger,
                             hamiltonian_error, state_error)
from phwave.driver import build_level, initial_state, run_simulation
from phwave.mesh import build_unit_square
from phwave.scenarios import Scenario, scenario_square
from phwave.materials import unit_material
from phwave.timestepper import State

SQ = scenario_square()


def closed_standing_wave():
    """Eigenmode with zero normal stress on the whole boundary: the exact
    system is closed, H is constant pi^2/4."""
    w = np.sqrt(2.0) * np.pi

    def alpha_q(t, x, y):
        c = np.cos(w * t) * np.pi
        return np.stack([-c * np.sin(np.pi * x) * np.cos(np.pi * y),
                         -c * np.cos(np.pi * x) * np.sin(np.pi * y)], axis=-1)

    def alpha_p(t, x, y):
        return -w * np.sin(w * t) * np.cos(np.pi * x) * np.cos(np.pi * y)

    # control None: the normal stress vanishes identically on the boundary,
    # so the run is declared closed rather than driven by interpolated zeros
    return Scenario(name="standing", build_mesh=build_unit_square,
                    material=unit_material(), causality="neumann",
                    horizon=0.5, dt=1e-3, alpha_q=alpha_q, alpha_p=alpha_p,
                    exact_H=lambda t: np.pi ** 2 / 4.0)


def test_standing_wave_is_closed_and_consistent():
    sc = closed_standing_wave()
    mesh = sc.build_mesh(3)
    mids = mesh.vertices[mesh.edges[mesh.boundary_edges]].mean(axis=1)
    n = mesh.boundary_normals
    u = sc.normal_stress(0.3, mids[:, 0], mids[:, 1], n[:, 0], n[:, 1])
    assert np.abs(u).max() < 1e-14
    # exact H by quadrature
    from phwave.assembly import geometry, physical_points
    from phwave.quadrature import triangle_rule
    geo = geometry(sc.build_mesh(16))
    rule = triangle_rule(10)
    pts = physical_points(geo, rule.points)
    x, y = pts[..., 0].ravel(), pts[..., 1].ravel()
    for t in (0.0, 0.2):
        aq = sc.alpha_q(t, x, y)
        ap = sc.alpha_p(t, x, y)
        dens = np.einsum("pi,pi->p", aq, aq) + ap * ap
        w = (rule.weights[None, :] * geo.det[:, None]).ravel()
        assert 0.5 * np.sum(w * dens) == pytest.approx(np.pi ** 2 / 4,
                                                       rel=1e-10)


def test_discrete_hamiltonian_basics():
    system = build_level(SQ, 4, "CG_1", "CG_1", "DG_0")
    zero = State(np.zeros(system.n_q), np.zeros(system.n_p), 0.0)
    assert discrete_hamiltonian(system, zero) == 0.0
    st = initial_state(SQ, system)
    H = discrete_hamiltonian(system, st)
    st2 = State(2 * st.e_q, 2 * st.e_p, 0.0)
    assert discrete_hamiltonian(system, st2) == pytest.approx(4 * H,
                                                              rel=1e-13)


def test_discrete_hamiltonian_close_to_exact_on_fine_mesh():
    system = build_level(SQ, 16, "CG_1", "CG_1", "DG_0")
    st = initial_state(SQ, system)
    H = discrete_hamiltonian(system, st)
    assert H == pytest.approx(SQ.exact_H(0.0), rel=2e-3)
    assert SQ.exact_H(0.0) == pytest.approx(3.5084, abs=5e-5)


def test_hamiltonian_equals_field_quadrature():
    # H from the quadratic form equals the quadrature of the discrete fields
    system = build_level(SQ, 4, "RT_2", "CG_2", "DG_1")
    st = initial_state(SQ, system)
    H = discrete_hamiltonian(system, st)

    from phwave.assembly import (geometry, physical_points, scalar_tables,
                                 vector_tables)
    from phwave.quadrature import triangle_rule
    rule = triangle_rule(system.quad_degree)
    geo = geometry(system.space_q.mesh)
    qv, _ = vector_tables(system.space_q, rule.points, geo)
    eq = np.einsum("cb,cbqi->cqi", st.e_q[system.space_q.cell_dofs], qv)
    pv, _ = scalar_tables(system.space_p, rule.points, geo)
    ep = np.einsum("cb,bq->cq", st.e_p[system.space_p.cell_dofs], pv)
    pts = physical_points(geo, rule.points)
    Ti = system.material.T_inv(pts[..., 0], pts[..., 1])
    rho = system.material.rho(pts[..., 0], pts[..., 1])
    dens = np.einsum("cqi,cqij,cqj->cq", eq, Ti, eq) + rho * ep * ep
    w = rule.weights[None, :] * geo.det[:, None]
    assert H == pytest.approx(0.5 * np.sum(w * dens), abs=1e-12, rel=1e-12)


def test_state_error_unit_field():
    # exact fields zero, discrete e_p = 1 with rho = 1: EX = sqrt(|Omega|)
    zero_sc = closed_standing_wave()
    zero_sc.alpha_q = lambda t, x, y: np.zeros(np.shape(x) + (2,))
    zero_sc.alpha_p = lambda t, x, y: np.zeros(np.shape(x))
    system = build_level(zero_sc, 4, "CG_1", "CG_1", "DG_0")
    st = State(np.zeros(system.n_q),
               system.space_p.interpolate(lambda x, y: np.ones_like(x)), 0.0)
    assert state_error(system, st, zero_sc) == pytest.approx(1.0, rel=1e-13)


def test_state_error_formula_equivalence():
    # energy-variable and co-energy forms of EX agree
    sc = scenario_square()
    system = build_level(sc, 4, "RT_1", "CG_1", "DG_0")
    st = initial_state(sc, system)
    st.e_q += 0.01 * np.sin(np.arange(system.n_q))
    st.e_p += 0.01 * np.cos(np.arange(system.n_p))
    ex = state_error(system, st, sc, t=0.0)

    from phwave.assembly import (geometry, physical_points, scalar_tables,
                                 vector_tables)
    from phwave.quadrature import triangle_rule
    rule = triangle_rule(min(system.quad_degree + 2, 12))
    geo = geometry(system.space_q.mesh)
    qv, _ = vector_tables(system.space_q, rule.points, geo)
    eq_d = np.einsum("cb,cbqi->cqi", st.e_q[system.space_q.cell_dofs], qv)
    pv, _ = scalar_tables(system.space_p, rule.points, geo)
    ep_d = np.einsum("cb,bq->cq", st.e_p[system.space_p.cell_dofs], pv)
    pts = physical_points(geo, rule.points)
    x, y = pts[..., 0].ravel(), pts[..., 1].ravel()
    T = sc.material.T(x, y).reshape(pts.shape[:2] + (2, 2))
    Ti = sc.material.T_inv(x, y).reshape(pts.shape[:2] + (2, 2))
    rho = sc.material.rho(x, y).reshape(pts.shape[:2])
    aq_ex = sc.alpha_q(0.0, x, y).reshape(eq_d.shape)
    ap_ex = sc.alpha_p(0.0, x, y).reshape(ep_d.shape)
    # energy variables of the discrete state
    aq_d = np.einsum("cqij,cqj->cqi", Ti, eq_d)
    ap_d = rho * ep_d
    dq = aq_ex - aq_d
    dp = ap_ex - ap_d
    dens = np.einsum("cqi,cqij,cqj->cq", dq, T, dq) + dp * dp / rho
    w = rule.weights[None, :] * geo.det[:, None]
    ex_energy = float(np.sqrt(np.sum(w * dens)))
    assert ex == pytest.approx(ex_energy, rel=1e-12)


def test_state_error_requires_exact_solution():
    from phwave.scenarios import scenario_damped_disk
    sc = scenario_damped_disk()
    system = build_level(sc, 2, "RT_1", "CG_1", "CG_1")
    st = State(np.zeros(system.n_q), np.zeros(system.n_p), 0.0)
    with pytest.raises(ValueError):
        state_error(system, st, sc)
    with pytest.raises(ValueError):
        hamiltonian_error(system, st, sc)


def test_closed_run_eh_constant():
    sc = closed_standing_wave()
    res = run_simulation(sc, 8, "CG_1", "CG_1", "DG_0", dt=2e-3, horizon=0.2)
    eh = [v for _, v in res.eh_samples]
    assert max(eh) - min(eh) < 1e-10


def test_eh_identity_reported():
    # Theorem-style identity EH(t) - EH(0) vs (EX(t)^2 - EX(0)^2) / 2:
    # reported, not asserted (compatibility conditions unverifiable here)
    res = run_simulation(SQ, 8, "DG_1", "CG_1", "DG_1", dt=1e-3, horizon=0.1)
    eh0 = res.eh_samples[0][1]
    ex0 = res.ex_samples[0][1]
    lhs = res.eh_samples[-1][1] - eh0
    rhs = 0.5 * (res.ex_samples[-1][1] ** 2 - ex0 ** 2)
    print("EH identity: lhs=%.3e rhs=%.3e" % (lhs, rhs))
    assert np.isfinite(lhs) and np.isfinite(rhs)


def test_ledger_closed_system():
    res = run_simulation(closed_standing_wave(), 4, "CG_1", "CG_1", "DG_0",
                         dt=2e-3, horizon=0.1)
    led = energy_ledger(res.trace)
    assert np.abs(led.S).max() < 1e-12
    assert np.abs(led.Dmp).max() < 1e-12
    assert np.abs(led.E - led.H).max() < 1e-12
    assert np.abs(led.H - led.H[0]).max() < 1e-12 * max(1.0, led.H[0])


def test_ledger_driven_midpoint_order():
    drifts = []
    for dt in (2e-3, 1e-3):
        res = run_simulation(SQ, 8, "CG_1", "CG_1", "DG_0", dt=dt,
                             horizon=0.4)
        led = energy_ledger(res.trace)
        # undamped: E = H - supplied, flat up to the quadrature of the series
        drifts.append(np.abs(led.E - led.E[0]).max())
        assert np.abs(led.supplied + led.S).max() == 0.0
    assert drifts[0] / drifts[1] == pytest.approx(4.0, rel=0.25)


def test_convergence_rate_fitting():
    hs = [1 / 4, 1 / 8, 1 / 16]
    assert convergence_rate([(h, 3.0 * h ** 2) for h in hs]) == pytest.approx(
        2.0, abs=1e-12)
    assert convergence_rate([(h, 0.7 * h ** 0.99) for h in hs]) == (
        pytest.approx(0.99, abs=1e-12))
    assert convergence_rate([(h, 0.0) for h in hs]) is None
    with pytest.raises(ValueError):
        convergence_rate([(0.5, 1.0)])


def test_report_slopes_and_csv():
    rep = ConvergenceReport()
    for k, n in enumerate((4, 8, 16)):
        h = np.sqrt(2) / n
        rep.add(LevelResult(n=n, h=h, n_q=n, n_p=n, n_bnd=n,
                            ex_final=2.0 * h, ex_max=2.5 * h,
                            eh_final=h * h))
    assert rep.ex_slope == pytest.approx(1.0, abs=1e-12)
    assert rep.eh_slope == pytest.approx(2.0, abs=1e-12)
    assert rep.slope_through(0) is None
    assert rep.slope_through(2) == pytest.approx(1.0, abs=1e-12)
    buf = io.StringIO()
    rep.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ("h,N_q,N_p,N_boundary,EX_final,EX_max,EH_final,"
                        "slope_so_far")
    assert len(lines) == 4
    assert lines[1].endswith(",")          # no slope at the first level
    with pytest.raises(ValueError):
        rep.add(LevelResult(n=2, h=1.0, n_q=1, n_p=1, n_bnd=1,
                            ex_final=1.0, ex_max=1.0, eh_final=1.0))


def test_energy_csv_format():
    res = run_simulation(SQ, 2, "CG_1", "CG_1", "DG_0", dt=1e-2, horizon=0.05)
    led = energy_ledger(res.trace)
    buf = io.StringIO()
    analysis.write_energy_csv(led, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,H,S,Dmp,E,EPot,EKin"
    assert len(lines) == 1 + led.t.size
    first = [float(v) for v in lines[1].split(",")]
    assert first[0] == 0.0
    assert first[1] == pytest.approx(led.H[0])
