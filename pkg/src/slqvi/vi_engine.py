"""Value iteration with stochastic-approximation steps and trust-set resets.

Both drivers iterate

    P~ = P_k + eps_k * F(P_k),
    P_{k+1} = P~        if P~ lies in the trust set D_q,
    P_{k+1} = P_0, q+1  otherwise,

where ``F`` is the Riccati map (model-based) or its data-driven twin
``M + Q - N'(R + H)^{-1} N`` with ``(M, N, H)`` recovered from data
(model-free).  No stabilizing initial gain is needed.
"""

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .data_collect import recover_triple
from .riccati import PD_FLOOR, SingularityError, gain, riccati_map

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepSchedule:
    """eps_k = a / (k + 1 + b) ** gamma, with gamma in (0.5, 1]."""

    a: float = 1.0
    b: float = 0.0
    gamma: float = 0.7

    def __post_init__(self):
        if not self.a > 0 or self.b < 0:
            raise ValueError("need a > 0 and b >= 0")
        if not 0.5 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0.5, 1] so that sum eps_k = inf and eps_k -> 0")

    def __call__(self, k):
        return self.a / (k + 1 + self.b) ** self.gamma


@dataclass(frozen=True)
class TrustSetFamily:
    """D_q = {P PSD : ||P||_F <= r0 * growth**q}.

    Nested in q, bounded, with nonempty interior, and their union is the
    whole PSD cone.
    """

    r0: float
    growth: float = 2.0

    def __post_init__(self):
        if not self.r0 > 0 or not self.growth > 1:
            raise ValueError("need r0 > 0 and growth > 1")

    def radius(self, q):
        return self.r0 * self.growth ** q

    def contains(self, P, q, psd_tol=0.0):
        P = np.asarray(P, dtype=float)
        if np.linalg.norm(P) > self.radius(q):
            return False
        return bool(np.linalg.eigvalsh(P)[0] >= -psd_tol)


def trust_contains(family, P, q):
    return family.contains(P, q)


def default_trust_radius(Q):
    return 10.0 * (1.0 + np.linalg.norm(Q))


@dataclass
class ViConfig:
    P0: np.ndarray
    trust: TrustSetFamily
    schedule: StepSchedule = field(default_factory=StepSchedule)
    stop_tol: float = 1e-5
    max_iter: int = 200_000

    def __post_init__(self):
        self.P0 = np.asarray(self.P0, dtype=float)
        if not np.allclose(self.P0, self.P0.T) or np.linalg.eigvalsh(self.P0)[0] <= 0:
            raise ValueError("P0 must be symmetric positive definite")
        if not self.trust.contains(self.P0, 0):
            raise ValueError(
                f"P0 lies outside D_0 (||P0||_F = {np.linalg.norm(self.P0):.3g} > r0 = {self.trust.r0:.3g}); "
                "resets would leave the trust set"
            )
        if not self.stop_tol > 0 or self.max_iter < 1:
            raise ValueError("need stop_tol > 0 and max_iter >= 1")

    @classmethod
    def for_weights(cls, Q, P0=None, **kw):
        """Defaults: P0 = I, r0 = 10 (1 + ||Q||_F), growth 2."""
        Q = np.asarray(Q, dtype=float)
        if P0 is None:
            P0 = np.eye(Q.shape[0])
        r0 = kw.pop("trust_radius0", None) or default_trust_radius(Q)
        growth = kw.pop("trust_growth", 2.0)
        return cls(P0=P0, trust=TrustSetFamily(r0, growth), **kw)


@dataclass
class ViState:
    P: np.ndarray
    k: int = 0
    q: int = 0
    resets: int = 0
    residual_history: list = field(default_factory=list)
    eps_history: list = field(default_factory=list)
    q_history: list = field(default_factory=list)
    last_reset: bool = False

    @classmethod
    def initial(cls, cfg):
        return cls(P=cfg.P0.copy())


def _advance(state, cfg, direction):
    eps = cfg.schedule(state.k)
    if direction is None:
        P_new = None
    else:
        P_new = state.P + eps * direction
        P_new = 0.5 * (P_new + P_new.T)
    if P_new is not None and cfg.trust.contains(P_new, state.q):
        residual = float(np.linalg.norm(P_new - state.P)) / eps
        state.P = P_new
        state.last_reset = False
    else:
        residual = np.nan if P_new is None else float(np.linalg.norm(P_new - state.P)) / eps
        state.P = cfg.P0.copy()
        state.q += 1
        state.resets += 1
        state.last_reset = True
        log.debug("reset at k=%d, q -> %d", state.k, state.q)
    state.residual_history.append(residual)
    state.eps_history.append(eps)
    state.q_history.append(state.q)
    state.k += 1
    return state


def vi_step_model_based(model, state, cfg, pd_floor=PD_FLOOR):
    """One step with the Riccati map of a known model (updates ``state`` in place)."""
    try:
        direction = riccati_map(model, state.P, pd_floor)
    except SingularityError:
        log.debug("R + D'PD not PD at k=%d; treating as trust-set exit", state.k)
        direction = None
    return _advance(state, cfg, direction)


def data_riccati_map(data, Q, R, P, pd_floor=PD_FLOOR):
    """M + Q - N'(R + H)^{-1} N with (M, N, H) recovered from data at P."""
    M, N, H = recover_triple(data, P)
    S = R + H
    lam = np.linalg.eigvalsh(S)[0]
    if not lam > pd_floor:
        raise SingularityError(f"R + H must be positive definite (min eigenvalue {lam:.3e})")
    out = M + Q - N.T @ np.linalg.solve(S, N)
    return 0.5 * (out + out.T)


def data_gain(data, R, P, pd_floor=PD_FLOOR):
    """Gain -(R + H)^{-1} N implied by the data at P."""
    _, N, H = recover_triple(data, P)
    S = R + H
    if not np.linalg.eigvalsh(S)[0] > pd_floor:
        raise SingularityError("R + H must be positive definite")
    return -np.linalg.solve(S, N)


def vi_step_model_free(data, Q, R, state, cfg, pd_floor=PD_FLOOR):
    """One step with the data-driven map; A, B, C, D are never touched."""
    data.require_full_rank()
    Q = np.asarray(Q, dtype=float)
    R = np.atleast_2d(np.asarray(R, dtype=float))
    try:
        direction = data_riccati_map(data, Q, R, state.P, pd_floor)
    except SingularityError:
        log.debug("R + H not PD at k=%d; treating as trust-set exit", state.k)
        direction = None
    return _advance(state, cfg, direction)


@dataclass
class ViResult:
    P_final: np.ndarray
    K_final: np.ndarray
    iterations: int
    resets: int
    residual_history: list
    eps_history: list
    q_history: list
    converged: bool

    def write_history_csv(self, path):
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["k", "eps_k", "residual", "q"])
            for k, (e, r, q) in enumerate(zip(self.eps_history, self.residual_history, self.q_history)):
                w.writerow([k, repr(e), repr(r), q])


def run(stepper, cfg, gain_fn=None, state=None):
    """Iterate ``stepper(state, cfg)`` until the stop rule or ``max_iter``.

    The stop rule ``||P~ - P_k|| / eps_k < stop_tol`` is not evaluated on
    iterations that ended in a reset.  Exhausting ``max_iter`` returns a
    result with ``converged=False``.
    """
    state = ViState.initial(cfg) if state is None else state
    converged = False
    while state.k < cfg.max_iter:
        stepper(state, cfg)
        if not state.last_reset and state.residual_history[-1] < cfg.stop_tol:
            converged = True
            break
    K = gain_fn(state.P) if gain_fn is not None else None
    return ViResult(
        P_final=state.P, K_final=K, iterations=state.k, resets=state.resets,
        residual_history=state.residual_history, eps_history=state.eps_history,
        q_history=state.q_history, converged=converged,
    )


def run_model_based(model, cfg):
    return run(lambda s, c: vi_step_model_based(model, s, c), cfg,
               gain_fn=lambda P: gain(model, P))


def run_model_free(data, Q, R, cfg):
    Q = np.asarray(Q, dtype=float)
    R = np.atleast_2d(np.asarray(R, dtype=float))
    return run(lambda s, c: vi_step_model_free(data, Q, R, s, c), cfg,
               gain_fn=lambda P: data_gain(data, R, P))
