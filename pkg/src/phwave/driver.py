"""End-to-end runs: build, assemble, integrate, measure.

`run_simulation` advances one mesh level and records the endpoint energy
series plus boundary power samples for the ledger; `run_sweep` repeats over
refinement levels and fits convergence rates.
"""

from dataclasses import dataclass, field

import numpy as np

from scipy.linalg import cho_solve

from . import analysis
from .assembly import assemble_admittance, build_system
from .elements import parse_family
from .spaces import build_boundary_space, build_space
from .timestepper import SteppingPlan, State, output


@dataclass
class Trace:
    """Endpoint series recorded during a run."""
    t: np.ndarray
    H: np.ndarray
    EPot: np.ndarray
    EKin: np.ndarray
    pu: np.ndarray        # u^T M_bnd y at endpoints (actual input)
    pd: np.ndarray        # y^T <Y> y at endpoints
    pu_mid: np.ndarray    # exact per-step midpoint power u_mid^T M_bnd y_mid


@dataclass
class RunResult:
    scenario: object
    system: object
    n: int
    h: float
    dt: float
    horizon: float
    state: object                 # final state
    trace: Trace = None
    sample_states: list = field(default_factory=list)
    ex_samples: list = field(default_factory=list)   # (t, EX)
    eh_samples: list = field(default_factory=list)   # (t, EH)

    @property
    def ex_final(self):
        return self.ex_samples[-1][1] if self.ex_samples else None

    @property
    def ex_max(self):
        vals = [e for t, e in self.ex_samples if t > 0.0]
        return max(vals) if vals else None

    @property
    def eh_final(self):
        return self.eh_samples[-1][1] if self.eh_samples else None


def _resolve_families(q_family, p_family, b_family):
    q = parse_family(q_family, "vector2") if isinstance(q_family, str) else q_family
    p = parse_family(p_family) if isinstance(p_family, str) else p_family
    if isinstance(b_family, str):
        kind, order = b_family.strip().split("_")
        b = (kind.upper(), int(order))
    else:
        b = b_family
    return q, p, b


def initial_state(scenario, system):
    """DOF interpolation of the exact co-energy fields at t = 0 (zero state
    for ledger scenarios without an exact solution)."""
    if scenario.has_exact:
        e_q0 = system.space_q.interpolate(
            lambda x, y: scenario.e_q(0.0, x, y))
        e_p0 = system.space_p.interpolate(
            lambda x, y: scenario.e_p(0.0, x, y))
    else:
        e_q0 = np.zeros(system.n_q)
        e_p0 = np.zeros(system.n_p)
    return State(e_q0, e_p0, 0.0)


def build_level(scenario, n, q_family, p_family, b_family, causality=None,
                degree=None):
    q_fam, p_fam, (b_kind, b_order) = _resolve_families(
        q_family, p_family, b_family)
    mesh = scenario.build_mesh(n)
    space_q = build_space(mesh, q_fam)
    space_p = build_space(mesh, p_fam)
    bspace = build_boundary_space(mesh, b_kind, b_order)
    system = build_system(space_q, space_p, bspace, scenario.material,
                          causality or scenario.causality, degree=degree)
    return system


def run_simulation(scenario, n, q_family, p_family, b_family, dt=None,
                   horizon=None, causality=None, degree=None,
                   input_mode="midpoint", n_error_samples=10,
                   check_residual=True):
    """Integrate one level and record energies, powers and error samples."""
    dt = dt if dt is not None else scenario.dt
    horizon = horizon if horizon is not None else scenario.horizon
    causality = causality or scenario.causality
    system = build_level(scenario, n, q_family, p_family, b_family,
                         causality, degree)
    bspace = system.boundary_space

    control = None
    if causality == "dirichlet":
        if scenario.has_exact:
            control = lambda t: bspace.interpolate(
                scenario.velocity_control, t)
    elif scenario.control is not None:
        control = lambda t: bspace.interpolate(scenario.control, t)

    admittance = None
    if scenario.admittance is not None:
        admittance = lambda t: assemble_admittance(
            bspace, scenario.admittance, t)

    plan = SteppingPlan(system, dt, control=control, admittance=admittance,
                        input_mode=input_mode, check_residual=check_residual)

    n_steps = int(round(horizon / dt))
    if abs(n_steps * dt - horizon) > 1e-9 * max(horizon, 1.0):
        n_steps = int(np.ceil(horizon / dt))
    sample_idx = sorted({int(round(k * n_steps / n_error_samples))
                         for k in range(n_error_samples + 1)})

    state = initial_state(scenario, system)
    ts = np.empty(n_steps + 1)
    H = np.empty(n_steps + 1)
    EPot = np.empty(n_steps + 1)
    EKin = np.empty(n_steps + 1)
    pu = np.zeros(n_steps + 1)
    pd = np.zeros(n_steps + 1)
    pu_mid = np.zeros(n_steps)

    result = RunResult(scenario, system, n, system.space_q.mesh.h, dt,
                       n_steps * dt, state)

    def record_endpoint(i, st):
        ts[i] = st.t
        EPot[i] = analysis.potential_energy(system, st)
        EKin[i] = analysis.kinetic_energy(system, st)
        H[i] = EPot[i] + EKin[i]
        if control is not None or admittance is not None:
            y = output(system, st)
            u = control(st.t) if control is not None else np.zeros(
                system.n_bnd)
            if admittance is not None:
                Yt = admittance(st.t)
                w = Yt @ y
                pd[i] = float(y @ w)
                u = u - cho_solve(system.bnd_chol(), w)
            pu[i] = float(u @ (system.M_bnd @ y))
        if i in sample_set:
            result.sample_states.append(st.copy())
            if scenario.has_exact:
                result.ex_samples.append(
                    (st.t, analysis.state_error(system, st, scenario)))
            if scenario.exact_H is not None:
                result.eh_samples.append(
                    (st.t, analysis.hamiltonian_error(system, st, scenario)))

    sample_set = set(sample_idx)
    record_endpoint(0, state)
    for i in range(n_steps):
        state, u_mid, y_mid = plan.step(state)
        if u_mid is not None:
            pu_mid[i] = float(u_mid @ (system.M_bnd @ y_mid))
        record_endpoint(i + 1, state)

    result.state = state
    result.trace = Trace(ts, H, EPot, EKin, pu, pd, pu_mid)
    return result


def run_sweep(scenario, levels, q_family, p_family, b_family, dt=None,
              horizon=None, causality=None, degree=None,
              input_mode="midpoint"):
    """Convergence sweep over mesh levels; rates fitted on the finest
    (up to four) levels."""
    if len(levels) < 1:
        raise ValueError("need at least one level")
    report = analysis.ConvergenceReport(meta={
        "scenario": scenario.name,
        "q": str(q_family), "p": str(p_family), "boundary": str(b_family),
        "dt": dt if dt is not None else scenario.dt,
        "causality": causality or scenario.causality,
        "levels": list(levels),
    })
    for n in levels:
        res = run_simulation(scenario, n, q_family, p_family, b_family,
                             dt=dt, horizon=horizon, causality=causality,
                             degree=degree, input_mode=input_mode)
        eh = res.eh_final if res.eh_final is not None else np.nan
        report.add(analysis.LevelResult(
            n=n, h=res.h, n_q=res.system.n_q, n_p=res.system.n_p,
            n_bnd=res.system.n_bnd, ex_final=res.ex_final,
            ex_max=res.ex_max, eh_final=eh))
    return report
