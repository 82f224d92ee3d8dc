"""Euler-Maruyama simulation of the controlled SDE and exploration inputs.

Every path owns a Philox stream keyed by ``(seed, path index)``; draws are
consumed in step order, so an ensemble is bit-identical no matter how paths
are grouped into chunks or workers.  Each path draws one row of
``1 + m`` standard normals per grid point: column 0 drives the Brownian
increment, the remaining ``m`` columns are the exploration white noise.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .symmat import DimensionError

CHUNK_PATHS = 1024


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    paths: int = 1000
    seed: int = 0
    scheme: str = "euler_maruyama"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.paths < 1:
            raise ValueError("paths must be >= 1")
        if self.scheme != "euler_maruyama":
            raise ValueError(f"unsupported scheme {self.scheme!r}")


@dataclass(frozen=True)
class ExplorationInput:
    """Multi-sine probing signal plus white noise.

    ``amplitudes``, ``frequencies`` and ``phases`` have shape ``(m, N)``: row
    ``i`` lists the sinusoids summed into control channel ``i``.  1-D arrays
    are treated as a single channel.
    """

    amplitudes: np.ndarray
    frequencies: np.ndarray
    phases: np.ndarray
    noise_std: float = 0.0

    def __post_init__(self):
        arrs = [np.atleast_2d(np.asarray(getattr(self, k), dtype=float))
                for k in ("amplitudes", "frequencies", "phases")]
        if not (arrs[0].shape == arrs[1].shape == arrs[2].shape) or arrs[0].shape[1] < 1:
            raise DimensionError("amplitudes, frequencies and phases must share a shape (m, N>=1)")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        for k, a in zip(("amplitudes", "frequencies", "phases"), arrs):
            object.__setattr__(self, k, a)

    @property
    def channels(self):
        return self.amplitudes.shape[0]

    def deterministic(self, t):
        """Sinusoidal part evaluated at times ``t``; shape ``(len(t), m)``."""
        t = np.asarray(t, dtype=float)
        arg = self.frequencies[None] * t[:, None, None] + self.phases[None]
        return (self.amplitudes[None] * np.sin(arg)).sum(axis=-1)

    def to_dict(self):
        return {
            "amplitudes": self.amplitudes.tolist(),
            "frequencies": self.frequencies.tolist(),
            "phases": self.phases.tolist(),
            "noise_std": self.noise_std,
        }


@dataclass
class TrajectoryEnsemble:
    """Sampled paths on a fine grid.

    ``times`` are the coarse instants requested by the caller (the data
    collection instants); ``t`` is the fine simulation grid and ``marks``
    indexes ``times`` inside it.  ``states`` has shape ``(paths, len(t), n)``
    and ``inputs`` ``(paths, len(t), m)``.
    """

    times: np.ndarray
    t: np.ndarray
    marks: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    seed: int
    path_ids: np.ndarray = field(default=None)

    @property
    def paths(self):
        return self.states.shape[0]

    def to_csv(self, path):
        """Write one row per (path, step): path, step, t, x_1..x_n, u_1..u_m."""
        n, m = self.states.shape[-1], self.inputs.shape[-1]
        ids = np.arange(self.paths) if self.path_ids is None else self.path_ids
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["path", "step", "t"] + [f"x{i+1}" for i in range(n)]
                       + [f"u{i+1}" for i in range(m)])
            for p, pid in enumerate(ids):
                for s, ts in enumerate(self.t):
                    w.writerow([int(pid), s, repr(float(ts))]
                               + [repr(float(v)) for v in self.states[p, s]]
                               + [repr(float(v)) for v in self.inputs[p, s]])


def fine_grid(times, dt):
    """Subdivide each interval of ``times`` into steps no longer than ``dt``.

    Returns ``(t, marks)`` with ``t[marks] == times``.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise ValueError("time grid needs at least two points")
    if times[0] != 0.0 or np.any(np.diff(times) <= 0):
        raise ValueError("time grid must start at 0 and be strictly increasing")
    pieces, marks = [times[:1]], [0]
    for a, b in zip(times[:-1], times[1:]):
        k = max(1, int(np.ceil((b - a) / dt - 1e-9)))
        pieces.append(np.linspace(a, b, k + 1)[1:])
        marks.append(marks[-1] + k)
    return np.concatenate(pieces), np.asarray(marks)


def path_normals(seed, path_id, rows, cols):
    """Standard normals for one path from its own counter-based stream."""
    key = (int(seed) & 0xFFFFFFFFFFFFFFFF, int(path_id))
    gen = np.random.Generator(np.random.Philox(key=np.array(key, dtype=np.uint64)))
    return gen.standard_normal((rows, cols))


def _simulate_chunk(model, t, seed, path_ids, exploration=None, K=None):
    n, m = model.n, model.m
    steps = t.size - 1
    dt = np.diff(t)
    sdt = np.sqrt(dt)
    noise = np.stack([path_normals(seed, p, t.size, 1 + m) for p in path_ids])
    z = noise[:, :, 0]

    x = np.empty((len(path_ids), t.size, n))
    x[:, 0] = model.x0
    if K is None:
        u = np.zeros((len(path_ids), t.size, m))
        if exploration is not None:
            if exploration.channels != m:
                raise DimensionError(f"exploration has {exploration.channels} channels, model has m={m}")
            u += exploration.deterministic(t)[None]
            if exploration.noise_std > 0:
                u += exploration.noise_std * noise[:, :, 1:]
    else:
        u = np.empty((len(path_ids), t.size, m))

    At, Bt, Ct, Dt = model.A.T, model.B.T, model.C.T, model.D.T
    for k in range(steps):
        xk = x[:, k]
        if K is not None:
            u[:, k] = xk @ K.T
        uk = u[:, k]
        drift = xk @ At + uk @ Bt
        diff = xk @ Ct + uk @ Dt
        x[:, k + 1] = xk + drift * dt[k] + diff * (sdt[k] * z[:, k])[:, None]
    if K is not None:
        u[:, -1] = x[:, -1] @ K.T
    return x, u


def iter_ensemble(model, times, cfg, exploration=None, K=None, chunk=CHUNK_PATHS):
    """Yield the ensemble in consecutive path chunks of fixed size."""
    t, marks = fine_grid(times, cfg.dt)
    if K is not None:
        K = np.asarray(K, dtype=float).reshape(model.m, model.n)
    for start in range(0, cfg.paths, chunk):
        ids = np.arange(start, min(start + chunk, cfg.paths))
        x, u = _simulate_chunk(model, t, cfg.seed, ids, exploration, K)
        yield TrajectoryEnsemble(np.asarray(times, dtype=float), t, marks, x, u, cfg.seed, ids)


def _gather(chunks):
    chunks = list(chunks)
    first = chunks[0]
    return TrajectoryEnsemble(
        first.times, first.t, first.marks,
        np.concatenate([c.states for c in chunks]),
        np.concatenate([c.inputs for c in chunks]),
        first.seed, np.concatenate([c.path_ids for c in chunks]),
    )


def simulate_open_loop(model, exploration, times, cfg):
    """Simulate ``dx = (Ax + Bu)ds + (Cx + Du)dw`` with a probing input.

    ``exploration=None`` means ``u = 0``.
    """
    return _gather(iter_ensemble(model, times, cfg, exploration=exploration))


def simulate_closed_loop(model, K, times, cfg):
    """Simulate the closed loop under ``u = Kx``."""
    return _gather(iter_ensemble(model, times, cfg, K=K))


_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
           73, 79, 83, 89, 97, 101, 103, 107, 109, 113)


def regressor_count(n, m):
    """Number of unknowns in the data equation: mn + n(n+1)/2 + m(m+1)/2."""
    return m * n + n * (n + 1) // 2 + m * (m + 1) // 2


def default_exploration(model, intervals, amplitude=1.0, base_frequency=1.0, noise_ratio=0.01):
    """Probing input with one distinct sinusoid per unknown in the data equation.

    Frequencies are ``base_frequency * sqrt(p)`` for consecutive primes ``p``,
    so no two are rationally related.  Sinusoids are dealt to channels round
    robin; every channel gets at least one.  The rank condition still has to
    be checked on the collected data.
    """
    n, m = model.n, model.m
    need = regressor_count(n, m)
    if intervals < need:
        raise ValueError(
            f"{intervals} collection intervals cannot give rank {need}: "
            f"need at least mn + n(n+1)/2 + m(m+1)/2 = {need} rows"
        )
    per_channel = max(1, int(np.ceil(need / m)))
    total = per_channel * m
    if total > len(_PRIMES):
        raise ValueError("problem too large for the built-in frequency table")
    freqs = base_frequency * np.sqrt(np.array(_PRIMES[:total], dtype=float))
    freqs = freqs.reshape(per_channel, m).T
    amp = np.full((m, per_channel), amplitude / np.sqrt(per_channel))
    phases = np.linspace(0, np.pi, total, endpoint=False).reshape(per_channel, m).T
    return ExplorationInput(amp, freqs, phases, noise_std=noise_ratio * float(amp.max()))
