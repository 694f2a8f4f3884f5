"""Error norms, discrete Hamiltonian, energy ledger and convergence rates.

The state error is the weighted norm

    EX^2 = int (e_q_ex - e_q_d)^T T^{-1} (e_q_ex - e_q_d)
         + rho (e_p_ex - e_p_d)^2,

evaluated by cell quadrature two degrees above the assembly default.  All
post-processing here is read-only over recorded traces.
"""

from dataclasses import dataclass, field

import numpy as np

from .assembly import geometry, physical_points, scalar_tables, vector_tables
from .quadrature import MAX_TRIANGLE_DEGREE, triangle_rule


def discrete_hamiltonian(system, state):
    """H = 1/2 e_q^T M_q e_q + 1/2 e_p^T M_p e_p."""
    return potential_energy(system, state) + kinetic_energy(system, state)


def potential_energy(system, state):
    return 0.5 * float(state.e_q @ (system.M_q @ state.e_q))


def kinetic_energy(system, state):
    return 0.5 * float(state.e_p @ (system.M_p @ state.e_p))


def _field_values(space, coeffs, tables):
    """Evaluate a coefficient field at quadrature points from basis tables."""
    dofs = space.cell_dofs
    c = coeffs[dofs]                                   # (nc, nb)
    if tables.ndim == 4:                               # vector: (nc, nb, nq, 2)
        return np.einsum("cb,cbqi->cqi", c, tables)
    return np.einsum("cb,bq->cq", c, tables)


def state_error(system, state, scenario, t=None):
    """EX at time t (defaults to the state's own time)."""
    if not scenario.has_exact:
        raise ValueError("not applicable: scenario has no exact solution")
    if t is None:
        t = state.t
    degree = min(system.quad_degree + 2, MAX_TRIANGLE_DEGREE)
    rule = triangle_rule(degree)
    geo = geometry(system.space_q.mesh)
    pts = physical_points(geo, rule.points)
    x, y = pts[..., 0], pts[..., 1]

    qv, _ = vector_tables(system.space_q, rule.points, geo)
    eq_d = _field_values(system.space_q, state.e_q, qv)
    pv, _ = scalar_tables(system.space_p, rule.points, geo)
    ep_d = _field_values(system.space_p, state.e_p, pv)

    eq_ex = scenario.e_q(t, x.ravel(), y.ravel()).reshape(eq_d.shape)
    ep_ex = scenario.e_p(t, x.ravel(), y.ravel()).reshape(ep_d.shape)

    Tinv = system.material.T_inv(x, y)
    rho = system.material.rho(x, y)
    dq = eq_ex - eq_d
    dp = ep_ex - ep_d
    integrand = (np.einsum("cqi,cqij,cqj->cq", dq, Tinv, dq)
                 + rho * dp * dp)
    w = rule.weights[None, :] * geo.det[:, None]
    return float(np.sqrt(np.sum(w * integrand)))


def hamiltonian_error(system, state, scenario, t=None):
    """EH = H_exact(t) - H_discrete (signed)."""
    if scenario.exact_H is None:
        raise ValueError("not applicable: scenario has no exact Hamiltonian")
    if t is None:
        t = state.t
    return float(scenario.exact_H(t)) - discrete_hamiltonian(system, state)


@dataclass
class EnergyLedger:
    """Endpoint time series; E = H + S + Dmp is the conserved total, with S
    the (signed) energy returned through the boundary port."""
    t: np.ndarray
    H: np.ndarray
    EPot: np.ndarray
    EKin: np.ndarray
    S: np.ndarray
    Dmp: np.ndarray
    E: np.ndarray

    @property
    def supplied(self):
        """Energy supplied by the external source, -S."""
        return -self.S


def energy_ledger(trace):
    """Integrate the recorded boundary powers with the midpoint rule.

    ``trace`` provides endpoint arrays t, H, EPot, EKin and the endpoint
    power samples pu (u^T M_bnd y, actual input) and pd (y^T <Y> y).  The
    midpoint values are the averages of the endpoint samples, so the
    identity E = const holds to the midpoint-rule order O(dt^2).
    """
    t = np.asarray(trace.t)
    pu = np.asarray(trace.pu)
    pd = np.asarray(trace.pd)
    dt = np.diff(t)
    s_u = np.concatenate([[0.0], np.cumsum(dt * 0.5 * (pu[1:] + pu[:-1]))])
    dmp = np.concatenate([[0.0], np.cumsum(dt * 0.5 * (pd[1:] + pd[:-1]))])
    s_in = s_u + dmp                    # external source: P_v = P_u + P_d
    H = np.asarray(trace.H)
    S = -s_in + 0.0
    E = H + S + dmp
    return EnergyLedger(t=t, H=H, EPot=np.asarray(trace.EPot),
                        EKin=np.asarray(trace.EKin), S=S, Dmp=dmp, E=E)


def convergence_rate(samples):
    """Least-squares slope of log(error) against log(h).

    ``samples`` is a sequence of (h, error); returns None when an error is
    zero or negative (exact reproduction, rate undefined).
    """
    samples = list(samples)
    if len(samples) < 2:
        raise ValueError("need at least two levels to fit a rate")
    h = np.array([s[0] for s in samples], dtype=float)
    e = np.array([s[1] for s in samples], dtype=float)
    if np.any(e <= 0.0):
        return None
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


@dataclass
class LevelResult:
    n: int
    h: float
    n_q: int
    n_p: int
    n_bnd: int
    ex_final: float
    ex_max: float
    eh_final: float


@dataclass
class ConvergenceReport:
    levels: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    fit_levels: int = 4

    def add(self, level):
        if self.levels and level.h >= self.levels[-1].h:
            raise ValueError("mesh sizes must be strictly decreasing")
        self.levels.append(level)

    def _fit(self, key):
        rows = self.levels[-self.fit_levels:]
        if len(rows) < 2:
            return None
        return convergence_rate([(r.h, abs(getattr(r, key))) for r in rows])

    @property
    def ex_slope(self):
        return self._fit("ex_final")

    @property
    def ex_max_slope(self):
        return self._fit("ex_max")

    @property
    def eh_slope(self):
        return self._fit("eh_final")

    def slope_through(self, k):
        """EX slope using levels up to index k (the CSV 'slope so far')."""
        if k < 1:
            return None
        rows = self.levels[max(0, k + 1 - self.fit_levels):k + 1]
        return convergence_rate([(r.h, r.ex_final) for r in rows])

    def write_csv(self, stream):
        stream.write("h,N_q,N_p,N_boundary,EX_final,EX_max,EH_final,"
                     "slope_so_far\n")
        for k, r in enumerate(self.levels):
            slope = self.slope_through(k)
            stream.write("%.17g,%d,%d,%d,%.17g,%.17g,%.17g,%s\n"
                         % (r.h, r.n_q, r.n_p, r.n_bnd, r.ex_final, r.ex_max,
                            r.eh_final,
                            "" if slope is None else "%.17g" % slope))


def write_energy_csv(ledger, stream):
    stream.write("t,H,S,Dmp,E,EPot,EKin\n")
    for i in range(ledger.t.size):
        stream.write("%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n"
                     % (ledger.t[i], ledger.H[i], ledger.S[i], ledger.Dmp[i],
                        ledger.E[i], ledger.EPot[i], ledger.EKin[i]))
