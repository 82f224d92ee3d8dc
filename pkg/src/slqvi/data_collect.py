"""Data matrices from the Ito identity and least-squares recovery of (M, N, H).

For any symmetric ``P`` and input ``u``, Ito's formula on ``x'Px`` gives,
over each collection interval ``[t_i, t_{i+1}]``,

    E[x'Px](t_{i+1}) - E[x'Px](t_i)
        = E int (x'Mx + 2u'Nx + u'Hu) ds,

with ``M = A'P + PA + C'PC``, ``N = B'P + D'PC`` and ``H = D'PD``.  Stacking
the intervals gives the linear system

    [d_xx, 2 d_xu, d_uu] [vecs(M); vec(N); vecs(H)] = I_xx vecs(P),

which is solved once for the operator ``theta`` that maps ``vecs(P)`` to
the stacked unknowns.  Nothing downstream of ``theta`` reads A, B, C or D.
"""

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.linalg import qr, solve_triangular

from .symmat import mat_from_vecs, outer_basis, quad_basis, sym_dim, unvec, vec, vecs

RANK_TOL = 1e-8


class RankError(ValueError):
    pass


class ItoTriple(NamedTuple):
    M: np.ndarray
    N: np.ndarray
    H: np.ndarray


def model_triple(model, P):
    """(A'P + PA + C'PC, B'P + D'PC, D'PD) computed from the model."""
    A, B, C, D = model.A, model.B, model.C, model.D
    P = np.asarray(P, dtype=float)
    M = A.T @ P + P @ A + C.T @ P @ C
    return ItoTriple(0.5 * (M + M.T), B.T @ P + D.T @ P @ C, D.T @ P @ D)


@dataclass
class DataMatrices:
    I_xx: np.ndarray
    d_xx: np.ndarray
    d_xu: np.ndarray
    d_uu: np.ndarray
    rank_tol: float = RANK_TOL

    def __post_init__(self):
        self.I_xx = np.atleast_2d(np.asarray(self.I_xx, dtype=float))
        self.d_xx = np.atleast_2d(np.asarray(self.d_xx, dtype=float))
        self.d_xu = np.atleast_2d(np.asarray(self.d_xu, dtype=float))
        self.d_uu = np.atleast_2d(np.asarray(self.d_uu, dtype=float))
        self.n = sym_dim(self.I_xx.shape[1])
        self.m = sym_dim(self.d_uu.shape[1])
        rows = {a.shape[0] for a in (self.I_xx, self.d_xx, self.d_xu, self.d_uu)}
        if len(rows) != 1:
            raise ValueError(f"data blocks have different row counts: {sorted(rows)}")
        if self.d_xx.shape[1] != self.I_xx.shape[1] or self.d_xu.shape[1] != self.n * self.m:
            raise ValueError("data block widths do not match n and m")

        sv = np.linalg.svd(self.regressor, compute_uv=False)
        cols = self.regressor.shape[1]
        self.max_singular_value = float(sv[0]) if sv.size else 0.0
        self.min_singular_value = float(sv[-1]) if sv.size == cols else 0.0
        self.rank_ok = bool(
            self.rows >= cols
            and self.max_singular_value > 0
            and self.min_singular_value > self.rank_tol * self.max_singular_value
        )
        self._theta = _lstsq_operator(self.regressor, self.I_xx) if self.rank_ok else None

    @property
    def rows(self):
        return self.I_xx.shape[0]

    @property
    def regressor(self):
        return np.hstack([self.d_xx, 2.0 * self.d_xu, self.d_uu])

    @property
    def theta(self):
        self.require_full_rank()
        return self._theta

    def require_full_rank(self):
        if self._theta is None:
            need = self.regressor.shape[1]
            raise RankError(
                f"data matrix [d_xx, 2 d_xu, d_uu] is rank deficient "
                f"(sigma_min/sigma_max = {self.min_singular_value / max(self.max_singular_value, 1e-300):.2e}, "
                f"{self.rows} rows for {need} unknowns); the input is not exciting enough"
            )

    def theta_normal_equations(self):
        """theta from the explicit normal-equations inverse, for cross-checking."""
        Phi = self.regressor
        return np.linalg.inv(Phi.T @ Phi) @ Phi.T @ self.I_xx

    def to_csv(self, path):
        """One row per interval; column prefixes name the block."""
        blocks = (("Ixx", self.I_xx), ("dxx", self.d_xx), ("dxu", self.d_xu), ("duu", self.d_uu))
        header = [f"{name}_{j}" for name, b in blocks for j in range(b.shape[1])]
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(header)
            for row in np.hstack([b for _, b in blocks]):
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path, rank_tol=RANK_TOL):
        with open(path, newline="") as f:
            r = csv.reader(f)
            header = next(r)
            data = np.array([[float(v) for v in row] for row in r if row])
        prefixes = [h.split("_")[0] for h in header]
        blocks = {}
        for name in ("Ixx", "dxx", "dxu", "duu"):
            idx = [i for i, p in enumerate(prefixes) if p == name]
            if not idx:
                raise ValueError(f"column block {name!r} missing from {path}")
            blocks[name] = data[:, idx]
        return cls(blocks["Ixx"], blocks["dxx"], blocks["dxu"], blocks["duu"], rank_tol)


def _lstsq_operator(Phi, rhs):
    # column scaling + Householder QR
    scale = np.linalg.norm(Phi, axis=0)
    scale[scale == 0] = 1.0
    Qf, Rf = qr(Phi / scale, mode="economic")
    return solve_triangular(Rf, Qf.T @ rhs) / scale[:, None]


def interval_sums(ensemble):
    """Per-interval data rows summed over the paths of ``ensemble``.

    Returns ``(I_xx, d_xx, d_xu, d_uu)`` sums (not yet divided by the path
    count), so chunks can be accumulated in a fixed order.
    """
    x, u, t, marks = ensemble.states, ensemble.inputs, ensemble.t, ensemble.marks
    h = np.diff(t)[None, :, None]
    xb = quad_basis(x)
    xu = outer_basis(x, u)
    ub = quad_basis(u)

    def integrate(f):
        steps = 0.5 * h * (f[:, 1:] + f[:, :-1])
        return np.add.reduceat(steps, marks[:-1], axis=1).sum(axis=0)

    I_xx = (xb[:, marks[1:]] - xb[:, marks[:-1]]).sum(axis=0)
    return I_xx, integrate(xb), integrate(xu), integrate(ub)


def collect(ensemble, rank_tol=RANK_TOL):
    """Ensemble-averaged data matrices from one trajectory ensemble."""
    return collect_chunks([ensemble], rank_tol)


def collect_chunks(chunks, rank_tol=RANK_TOL):
    """Same as :func:`collect` but streams over ensemble chunks in order."""
    total, paths = None, 0
    for ch in chunks:
        s = interval_sums(ch)
        total = list(s) if total is None else [a + b for a, b in zip(total, s)]
        paths += ch.paths
    if total is None:
        raise ValueError("no ensemble data")
    return DataMatrices(*(a / paths for a in total), rank_tol=rank_tol)


def collect_from_simulation(model, exploration, times, cfg, rank_tol=RANK_TOL):
    """Simulate with the probing input and collect without storing all paths."""
    from .simulator import iter_ensemble

    return collect_chunks(iter_ensemble(model, times, cfg, exploration=exploration), rank_tol)


def recover_triple(data, P):
    """Split ``theta @ vecs(P)`` into ``(M, N, H)``."""
    n, m = data.n, data.m
    z = data.theta @ vecs(P)
    a, b = n * (n + 1) // 2, n * (n + 1) // 2 + m * n
    return ItoTriple(mat_from_vecs(z[:a]), unvec(z[a:b], m, n), mat_from_vecs(z[b:]))


def _triple_operator(model):
    """Matrix mapping vecs(P) to [vecs(M); vec(N); vecs(H)] for the model."""
    k = model.n * (model.n + 1) // 2
    cols = []
    for j in range(k):
        e = np.zeros(k)
        e[j] = 1.0
        M, N, H = model_triple(model, mat_from_vecs(e))
        cols.append(np.concatenate([vecs(M), vec(N), vecs(H)]))
    return np.column_stack(cols)


def synthetic_exact_data(model, intervals=20, interval_length=0.1, degree=None, seed=0):
    """Data matrices for which the Ito identity holds exactly.

    The expected quadratic signals ``E[xbar(s)]``, ``E[x(s) kron u(s)]`` and
    ``E[ubar(s)]`` are random polynomials in ``s``; their interval integrals
    are evaluated in closed form (Chebyshev series on the collection
    window, default degree two above the number of unknowns), and ``I_xx`` is the left-hand side implied
    by the model through the identity.  With enough intervals the result is
    full rank and ``recover_triple`` returns the model's triple up to
    round-off.
    """
    rng = np.random.default_rng(seed)
    n, m = model.n, model.m
    widths = (n * (n + 1) // 2, n * m, m * (m + 1) // 2)
    edges = interval_length * np.arange(intervals + 1)
    if degree is None:
        degree = sum(widths) + 2
    blocks = []
    for w in widths:
        block = np.empty((intervals, w))
        for j in range(w):
            F = Chebyshev(rng.standard_normal(degree + 1), domain=[0.0, edges[-1]]).integ()
            block[:, j] = F(edges[1:]) - F(edges[:-1])
        blocks.append(block)
    d_xx, d_xu, d_uu = blocks
    Phi = np.hstack([d_xx, 2.0 * d_xu, d_uu])
    I_xx = Phi @ _triple_operator(model)
    return DataMatrices(I_xx, d_xx, d_xu, d_uu)
