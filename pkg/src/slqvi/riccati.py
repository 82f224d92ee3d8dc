"""Riccati map, optimal gain, closed-loop residual, and the forward Riccati flow.

``riccati_map(P)`` is the left-hand side of the stochastic algebraic Riccati
equation.  Integrating ``dP/dt = riccati_map(P)`` forward from any PSD start
converges monotonically to the maximal solution, which is what
:func:`solve_sare_oracle` does; the result serves as ground truth for the
iterative solvers.
"""

import numpy as np
from scipy.integrate import solve_ivp

from .symmat import mat_from_vecs, vecs

PD_FLOOR = 1e-10


class SingularityError(ValueError):
    """``R + D'PD`` (or ``R + H``) is not positive definite."""


class ConvergenceError(RuntimeError):
    def __init__(self, msg, P=None, residual=np.inf):
        super().__init__(msg)
        self.P = P
        self.residual = residual


def _sym(X):
    return 0.5 * (X + X.T)


def _solve_pd(S, rhs, pd_floor=PD_FLOOR, what="R + D'PD"):
    lam = np.linalg.eigvalsh(S)[0]
    if not lam > pd_floor:
        raise SingularityError(f"{what} must be positive definite (min eigenvalue {lam:.3e})")
    return np.linalg.solve(S, rhs)


def riccati_map(model, P, pd_floor=PD_FLOOR):
    """A'P + PA + Q + C'PC - (PB + C'PD)(R + D'PD)^{-1}(B'P + D'PC)."""
    A, B, C, D = model.A, model.B, model.C, model.D
    P = np.asarray(P, dtype=float)
    L = B.T @ P + D.T @ P @ C
    S = model.R + D.T @ P @ D
    out = A.T @ P + P @ A + model.Q + C.T @ P @ C - L.T @ _solve_pd(S, L, pd_floor)
    return _sym(out)


def gain(model, P, pd_floor=PD_FLOOR):
    """Feedback gain ``K = -(R + D'PD)^{-1}(B'P + D'PC)``."""
    P = np.asarray(P, dtype=float)
    L = model.B.T @ P + model.D.T @ P @ model.C
    return -_solve_pd(model.R + model.D.T @ P @ model.D, L, pd_floor)


def lyapunov_residual(model, P, K):
    """(A+BK)'P + P(A+BK) + (C+DK)'P(C+DK) + K'RK + Q."""
    P = np.asarray(P, dtype=float)
    K = np.asarray(K, dtype=float).reshape(model.m, model.n)
    Acl = model.A + model.B @ K
    Ccl = model.C + model.D @ K
    out = Acl.T @ P + P @ Acl + Ccl.T @ P @ Ccl + K.T @ model.R @ K + model.Q
    return _sym(out)


def _flow_rhs(model, pd_floor):
    def rhs(t, p):
        return vecs(riccati_map(model, mat_from_vecs(p), pd_floor))
    return rhs


def riccati_flow(model, P0, t_eval, pd_floor=PD_FLOOR, ode_rtol=1e-10, ode_atol=1e-12):
    """Sample the forward Riccati flow at the times ``t_eval``.

    Returns an array of shape ``(len(t_eval), n, n)``.
    """
    t_eval = np.asarray(t_eval, dtype=float)
    sol = solve_ivp(
        _flow_rhs(model, pd_floor), (0.0, t_eval[-1]), vecs(P0),
        method="RK45", t_eval=t_eval, rtol=ode_rtol, atol=ode_atol,
    )
    if not sol.success:
        raise ConvergenceError(f"Riccati flow integration failed: {sol.message}")
    return np.stack([mat_from_vecs(p) for p in sol.y.T])


def solve_sare_oracle(model, P0=None, t_end=200.0, rtol=1e-10, pd_floor=PD_FLOOR):
    """Maximal solution of the SARE by forward integration of the Riccati flow.

    Integration runs with adaptive RK45 in half-vectorized coordinates and
    stops as soon as ``||riccati_map(P)||_F < rtol``.

    Raises
    ------
    SingularityError
        The flow left the region where ``R + D'PD`` is positive definite.
    ConvergenceError
        ``t_end`` was reached before the residual fell below ``rtol``; the
        exception carries the final iterate and residual.
    """
    P0 = np.zeros((model.n, model.n)) if P0 is None else np.asarray(P0, dtype=float)
    if np.linalg.eigvalsh(P0)[0] < -1e-12:
        raise ValueError("P0 must be positive semidefinite")

    def pd_margin(t, p):
        P = mat_from_vecs(p)
        return np.linalg.eigvalsh(model.R + model.D.T @ P @ model.D)[0] - pd_floor

    def converged(t, p):
        try:
            r = np.linalg.norm(riccati_map(model, mat_from_vecs(p), pd_floor))
        except SingularityError:
            return 1.0
        return r - 0.5 * rtol

    pd_margin.terminal = True
    converged.terminal = True
    converged.direction = -1

    rhs = _flow_rhs(model, pd_floor)

    def guarded(t, p):
        try:
            return rhs(t, p)
        except SingularityError:
            # let the pd_margin event locate the boundary instead of raising mid-step
            return np.zeros_like(p)

    sol = solve_ivp(
        guarded, (0.0, t_end), vecs(P0), method="RK45",
        events=(pd_margin, converged), rtol=1e-12, atol=1e-14,
    )
    P = mat_from_vecs(sol.y[:, -1])
    if sol.t_events[0].size:
        raise SingularityError(
            f"R + D'PD lost positive definiteness at t={sol.t_events[0][0]:.4g}"
        )
    res = float(np.linalg.norm(riccati_map(model, P, pd_floor)))
    if res >= rtol:
        raise ConvergenceError(
            f"Riccati flow did not reach residual {rtol:g} by t={t_end:g} (residual {res:.3e})",
            P=P, residual=res,
        )
    return P
