"""Problem data for the stochastic LQ regulator and structural checks on it.

The dynamics are

    dx = (A x + B u) ds + (C x + D u) dw,   x(0) = x0,

with a scalar Brownian motion ``w`` and running cost ``u'Ru + x'Qx``.
Exact observability of ``[A, C | Q]`` is assumed by the convergence theory
and is left to the caller; it is not checked here.
"""

import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .symmat import DimensionError, as_symmetric

PSD_TOL = 1e-10


@dataclass(frozen=True)
class SlqModel:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    x0: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = A.shape[0]
        B = np.asarray(self.B, dtype=float).reshape(n, -1)
        m = B.shape[1]
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        D = np.asarray(self.D, dtype=float).reshape(n, -1)
        Q = as_symmetric(self.Q)
        R = as_symmetric(self.R)
        x0 = np.asarray(self.x0, dtype=float).ravel()

        if A.shape != (n, n) or C.shape != (n, n):
            raise DimensionError("A and C must be n x n")
        if D.shape != (n, m):
            raise DimensionError(f"D must be {n} x {m}, got {D.shape}")
        if Q.shape != (n, n) or R.shape != (m, m) or x0.shape != (n,):
            raise DimensionError("Q, R or x0 has inconsistent dimensions")
        if np.linalg.eigvalsh(Q)[0] < -PSD_TOL:
            raise ValueError("Q must be positive semidefinite")
        if np.linalg.eigvalsh(R)[0] <= 0:
            raise ValueError("R must be positive definite")
        if np.linalg.eigvalsh(Q)[0] <= PSD_TOL:
            warnings.warn(
                "Q is singular; exact observability of [A, C | Q] is assumed, not checked",
                stacklevel=3,
            )
        for name, val in zip("ABCDQR", (A, B, C, D, Q, R)):
            val.flags.writeable = False
            object.__setattr__(self, name, val)
        x0.flags.writeable = False
        object.__setattr__(self, "x0", x0)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in ("A", "B", "C", "D", "Q", "R", "x0")}

    @classmethod
    def from_dict(cls, d):
        missing = {"A", "B", "C", "D", "Q", "R", "x0"} - set(d)
        if missing:
            raise KeyError(f"model is missing keys: {sorted(missing)}")
        return cls(*(np.asarray(d[k], dtype=float) for k in ("A", "B", "C", "D", "Q", "R", "x0")))

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))


def benchmark():
    """The two-state, single-input system used as the running benchmark."""
    return SlqModel(
        A=[[0.0, -0.6], [0.6, -0.3]],
        B=[[0.05], [0.01]],
        C=[[-0.02, 0.03], [-0.05, 0.02]],
        D=[[0.001], [0.03]],
        Q=np.diag([0.05, 0.1]),
        R=[[1.0]],
        x0=[0.5, -0.1],
    )


def _check_gain(model, K):
    K = np.asarray(K, dtype=float).reshape(model.m, -1)
    if K.shape != (model.m, model.n):
        raise DimensionError(f"gain must be {model.m} x {model.n}, got {K.shape}")
    return K


def second_moment_generator(model, K):
    """Matrix ``L`` with ``d vec(E[x x']) / ds = L vec(E[x x'])`` under ``u = Kx``."""
    K = _check_gain(model, K)
    Acl = model.A + model.B @ K
    Ccl = model.C + model.D @ K
    eye = np.eye(model.n)
    return np.kron(eye, Acl) + np.kron(Acl, eye) + np.kron(Ccl, Ccl)


def ms_decay_rate(model, K):
    """Largest real part of the second-moment generator spectrum."""
    return float(np.max(np.linalg.eigvals(second_moment_generator(model, K)).real))


def is_ms_stabilizing(model, K, tol_margin=0.0):
    """True iff ``u = Kx`` drives ``E[x'x]`` to zero for every initial state."""
    return ms_decay_rate(model, K) < -tol_margin


def evaluate_cost_mc(model, K, sim, horizon):
    """Monte-Carlo estimate of the truncated cost ``E int_0^T (u'Ru + x'Qx) ds``.

    Returns ``(estimate, standard_error)``.  The integral is accumulated with
    the trapezoidal rule on the simulation grid.
    """
    from .simulator import iter_ensemble

    K = _check_gain(model, K)
    if not is_ms_stabilizing(model, K):
        raise ValueError("gain is not mean-square stabilizing; the cost integral diverges")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    costs = []
    for ens in iter_ensemble(model, [0.0, float(horizon)], sim, K=K):
        x, u = ens.states, ens.inputs
        run = (np.einsum("psi,ij,psj->ps", x, model.Q, x)
               + np.einsum("psi,ij,psj->ps", u, model.R, u))
        costs.append(trapezoid(run, ens.t, axis=1))
    per_path = np.concatenate(costs)
    se = per_path.std(ddof=1) / np.sqrt(per_path.size) if per_path.size > 1 else 0.0
    return float(per_path.mean()), float(se)


def random_model(rng, n, m, drift_scale=1.0, noise_scale=0.3):
    """Random problem with ``Q, R > 0``; not necessarily stabilizable."""
    G = rng.standard_normal((n, n))
    H = rng.standard_normal((m, m))
    return SlqModel(
        A=drift_scale * rng.standard_normal((n, n)) / np.sqrt(n),
        B=rng.standard_normal((n, m)),
        C=noise_scale * rng.standard_normal((n, n)),
        D=noise_scale * rng.standard_normal((n, m)),
        Q=G @ G.T / n + 0.1 * np.eye(n),
        R=H @ H.T / m + 0.5 * np.eye(m),
        x0=rng.standard_normal(n),
    )
