"""Implicit midpoint integration of the linear port-Hamiltonian ODE.

One sparse LU factorization of (M - dt/2 A) is reused for every step.  The
admittance/impedance feedback u = v - M_bnd^{-1} <Y> y is eliminated into
the dynamics; because the damping term is a low-rank boundary update, the
damped solve uses the Woodbury identity around the same factorization, so
a time-dependent <Y(t)> costs only a small dense solve per step.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve as dense_solve
from scipy.sparse.linalg import splu


class SolverError(RuntimeError):
    """Singular stepping operator or unacceptable solve residual."""


@dataclass
class State:
    e_q: np.ndarray
    e_p: np.ndarray
    t: float

    def copy(self):
        return State(self.e_q.copy(), self.e_p.copy(), self.t)


def output(system, state):
    """Boundary observation: solves M_bnd y = G^T E (velocity trace under
    force control, normal stress under velocity control)."""
    if system.causality == "neumann":
        rhs = system.control_op.T @ state.e_p
    else:
        rhs = system.control_op @ state.e_q
    return cho_solve(system.bnd_chol(), rhs)


class SteppingPlan:
    """Factorized midpoint stepper for one system and time step.

    Parameters
    ----------
    system : PHSystem
    dt : float
    control : callable t -> (N_bnd,) coefficients, or None for a closed run.
        Under feedback this is the external input v.
    admittance : callable t -> (N_bnd, N_bnd) dense <Y(t)>, or None.
    input_mode : 'midpoint' (default, exact discrete power balance) or
        'trapezoid' (average of the endpoint inputs).
    check_residual : verify each linear solve to 1e-11 relative.
    """

    def __init__(self, system, dt, control=None, admittance=None,
                 input_mode="midpoint", check_residual=True):
        if input_mode not in ("midpoint", "trapezoid"):
            raise ValueError("input_mode must be 'midpoint' or 'trapezoid'")
        if dt == 0.0:
            raise ValueError("dt must be nonzero")
        self.system = system
        self.dt = float(dt)
        self.control = control
        self.admittance = admittance
        self.input_mode = input_mode
        self.check_residual = check_residual
        self._build(system, self.dt)

    def _build(self, system, dt):
        M = system.mass_block()
        A = system.structure_block()
        self.G = system.input_matrix().tocsr()
        self._minus = (M - 0.5 * dt * A).tocsc()
        self._plus = (M + 0.5 * dt * A).tocsr()
        try:
            self._lu = splu(self._minus)
        except RuntimeError as exc:
            raise SolverError("stepping operator is singular: %s" % exc)
        self.n = M.shape[0]
        if self.admittance is not None:
            # G_e = G M_bnd^{-1}: damping enters as G_e <Y> G_e^T
            Ge = cho_solve(system.bnd_chol(), self.G.toarray().T).T
            self._Ge = Ge
            self._Z = self._lu.solve(Ge)            # (n, N_bnd)
            self._P = Ge.T @ self._Z                # (N_bnd, N_bnd)

    def with_dt(self, dt):
        """A fresh plan with a new step (triggers refactorization)."""
        return SteppingPlan(self.system, dt, control=self.control,
                            admittance=self.admittance,
                            input_mode=self.input_mode,
                            check_residual=self.check_residual)

    def _input_at(self, t0, t1):
        if self.control is None:
            return None
        if self.input_mode == "midpoint":
            return self.control(0.5 * (t0 + t1))
        return 0.5 * (self.control(t0) + self.control(t1))

    def _check(self, lhs_extra, x, rhs):
        if not self.check_residual:
            return
        res = self._minus @ x - rhs
        if lhs_extra is not None:
            res = res + lhs_extra(x)
        denom = max(np.linalg.norm(rhs), 1.0)
        if np.linalg.norm(res) > 1e-11 * denom:
            raise SolverError("linear solve residual %.3e exceeds 1e-11"
                              % (np.linalg.norm(res) / denom))

    def step(self, state):
        """Advance one step; returns the new state and the midpoint
        input/output pair (u_mid, y_mid) used, both None for a closed run
        without feedback."""
        t0 = state.t
        t1 = t0 + self.dt
        E = np.concatenate([state.e_q, state.e_p])
        if self.admittance is None:
            u = self._input_at(t0, t1)
            rhs = self._plus @ E
            if u is not None:
                rhs = rhs + self.dt * (self.G @ u)
            E1 = self._lu.solve(rhs)
            self._check(None, E1, rhs)
            Emid = 0.5 * (E + E1)
            y_mid = self._output_of(Emid)
            return self._wrap(E1, t1), u, y_mid

        tm = 0.5 * (t0 + t1)
        Ym = self.admittance(tm)
        v = self._input_at(t0, t1)
        damped = np.any(Ym)
        rhs = self._plus @ E
        if damped:
            rhs = rhs - 0.5 * self.dt * (self._Ge @ (Ym @ (self._Ge.T @ E)))
        if v is not None:
            rhs = rhs + self.dt * (self.G @ v)
        E1 = self._lu.solve(rhs)
        if damped:
            # Woodbury: (K + (dt/2) Ge Ym Ge^T)^{-1}
            C = 0.5 * self.dt * Ym
            S = np.eye(Ym.shape[0]) + C @ self._P
            try:
                w = dense_solve(S, C @ (self._Ge.T @ E1))
            except np.linalg.LinAlgError as exc:
                raise SolverError("damped stepping operator singular: %s"
                                  % exc)
            E1 = E1 - self._Z @ w
            self._check(lambda x: 0.5 * self.dt
                        * (self._Ge @ (Ym @ (self._Ge.T @ x))), E1, rhs)
        else:
            self._check(None, E1, rhs)
        Emid = 0.5 * (E + E1)
        y_mid = self._output_of(Emid)
        u_mid = v if v is not None else np.zeros(self.system.n_bnd)
        if damped:
            u_mid = u_mid - cho_solve(self.system.bnd_chol(), Ym @ y_mid)
        return self._wrap(E1, t1), u_mid, y_mid

    def _output_of(self, E):
        nq = self.system.n_q
        st = State(E[:nq], E[nq:], 0.0)
        return output(self.system, st)

    def _wrap(self, E, t):
        nq = self.system.n_q
        return State(E[:nq], E[nq:], t)


def step_damped(plan, state, external=None):
    """One damped step; ``external`` overrides the plan's control sampler."""
    if plan.admittance is None:
        raise ValueError("plan was built without an admittance path")
    if external is not None:
        saved = plan.control
        plan.control = external
        try:
            return plan.step(state)
        finally:
            plan.control = saved
    return plan.step(state)
