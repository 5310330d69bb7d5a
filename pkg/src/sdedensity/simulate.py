"""Euler path ensembles with scheduling-independent, counter-based randomness.

Paths are grouped into fixed blocks of ``BLOCK_PATHS``; block ``b`` draws all
of its normals from a Philox stream keyed by ``(seed, b)``, and path ``i``
always owns row ``i % BLOCK_PATHS`` of block ``i // BLOCK_PATHS``.  The noise
of a path is therefore a pure function of ``(seed, path index, step)`` -- it
does not depend on the number of workers, on scheduling, or on how many other
paths are simulated.  Runs with identical (seed, config) are bitwise
reproducible at any thread count.

One-step diagnostics (the frozen-coefficient step, stopped increments, exit
probabilities) reuse exactly the increments that drove the simulation by
regenerating the blocks.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import AlignmentError, ConfigError, SimulationError
from .model import CoefficientModel, LocalWindow
from .util import MCEstimate, map_ordered, mean_se, path_chunks

BLOCK_PATHS = 4096
_MAGIC = b"SDEPATH1"
_VERSION = 1


@dataclass(frozen=True)
class SimConfig:
    x0: float
    t_final: float
    h: float
    n_paths: int
    seed: int
    scheme: str = "euler"

    def __post_init__(self):
        if not (0.0 < self.t_final <= 1.0):
            raise ConfigError("t_final must lie in (0, 1]")
        if self.h <= 0.0:
            raise ConfigError("step size must be positive")
        n = round(self.t_final / self.h)
        if n < 1 or abs(n * self.h - self.t_final) > 1e-12:
            raise ConfigError("h must divide t_final (within 1e-12)")
        if self.n_paths < 1:
            raise ConfigError("n_paths must be >= 1")
        if self.scheme != "euler":
            raise ConfigError(f"unsupported scheme {self.scheme!r}")
        if not (0 <= self.seed < 2**64):
            raise ConfigError("seed must fit in 64 bits")

    @property
    def n_steps(self) -> int:
        return round(self.t_final / self.h)


@dataclass(frozen=True)
class RngStreams:
    """Per-path stream identifiers: path i -> (seed, block, row)."""

    seed: int
    block_paths: int

    def stream_id(self, i: int) -> tuple[int, int, int]:
        return (self.seed, i // self.block_paths, i % self.block_paths)

    def philox_key(self, block: int) -> np.ndarray:
        return np.array([self.seed, block], dtype=np.uint64)


def _noise_block(streams: RngStreams, block: int, n_steps: int) -> np.ndarray:
    """The (n_steps, BLOCK_PATHS) standard-normal block that drives `block`."""
    gen = np.random.Generator(np.random.Philox(key=streams.philox_key(block)))
    return gen.standard_normal((n_steps, streams.block_paths))


@dataclass(eq=False)
class PathEnsemble:
    """Simulated paths on the uniform grid, plus RNG provenance.

    ``states[i, k]`` is path i at time k*h.  ``window_flags`` caches
    localization indicators keyed by (xi, delta, k_start, k_end).
    """

    time_grid: np.ndarray
    states: np.ndarray
    config: SimConfig
    rng_streams: RngStreams
    window_flags: dict = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        return self.states.shape[0]

    def time_index(self, t: float) -> int:
        k = round(t / self.config.h)
        if k < 0 or k > self.config.n_steps or abs(k * self.config.h - t) > 1e-9:
            raise AlignmentError(f"t={t} is not on the simulation grid (h={self.config.h})")
        return k

    def states_at(self, t: float) -> np.ndarray:
        return self.states[:, self.time_index(t)]


def simulate(model: CoefficientModel, cfg: SimConfig, threads: int = 1) -> PathEnsemble:
    """Euler scheme X_{k+1} = X_k + mu(X_k) h + sigma(X_k) sqrt(h) G_{i,k}.

    Bitwise deterministic for fixed (seed, cfg) at any thread count.
    """
    n_steps = cfg.n_steps
    sqrth = math.sqrt(cfg.h)
    streams = RngStreams(seed=cfg.seed, block_paths=BLOCK_PATHS)
    states = np.empty((cfg.n_paths, n_steps + 1))
    mu_const = model.mu.constant_value
    sig_const = model.sigma.constant_value

    def run_block(args):
        block, (start, stop) = args
        rows = stop - start
        inc = sqrth * _noise_block(streams, block, n_steps)[:, :rows]
        local = np.empty((n_steps + 1, rows))
        x = np.full(rows, float(cfg.x0))
        local[0] = x
        for k in range(n_steps):
            if mu_const is None:
                x = x + model.mu(x) * cfg.h
            elif mu_const != 0.0:
                x = x + mu_const * cfg.h
            if sig_const is None:
                x = x + model.sigma(x) * inc[k]
            elif sig_const == 1.0:
                x = x + inc[k]
            elif sig_const != 0.0:
                x = x + sig_const * inc[k]
            if not np.all(np.isfinite(x)):
                j = int(np.argmin(np.isfinite(x)))
                raise SimulationError(
                    f"path {start + j} became non-finite at step {k + 1} "
                    f"(t={(k + 1) * cfg.h})"
                )
            local[k + 1] = x
        states[start:stop] = local.T

    tasks = list(enumerate(path_chunks(cfg.n_paths, BLOCK_PATHS)))
    map_ordered(run_block, tasks, threads=threads)
    return PathEnsemble(
        time_grid=cfg.h * np.arange(n_steps + 1),
        states=states,
        config=cfg,
        rng_streams=streams,
    )


def _window_indices(ens: PathEnsemble, eps: float, t: float) -> tuple[int, int]:
    k_end = ens.time_index(t)
    k_start = ens.time_index(t - eps)
    if k_start >= k_end:
        raise AlignmentError("eps must span at least one grid step")
    return k_start, k_end


def euler_z(ens: PathEnsemble, model: CoefficientModel, eps: float, t: float,
            threads: int = 1) -> np.ndarray:
    """Frozen-coefficient one-step value from t-eps to t, per path:

        Z = X_{t-eps} + eps*mu(X_{t-eps}) + sigma(X_{t-eps}) (W_t - W_{t-eps})

    The Brownian increments are the exact ones that drove the simulation
    (regenerated from the per-block streams), accumulated in simulation
    order so the driftless unit-diffusion case reproduces X_t bitwise.
    """
    k0, k_end = _window_indices(ens, eps, t)
    cfg = ens.config
    sqrth = math.sqrt(cfg.h)
    out = np.empty(ens.n_paths)

    def run_block(args):
        block, (start, stop) = args
        rows = stop - start
        inc = sqrth * _noise_block(ens.rng_streams, block, cfg.n_steps)[:, :rows]
        x0s = ens.states[start:stop, k0]
        mu0 = model.mu(x0s)
        sig0 = model.sigma(x0s)
        z = x0s + eps * mu0
        for k in range(k0, k_end):
            z = z + sig0 * inc[k]
        out[start:stop] = z

    tasks = list(enumerate(path_chunks(ens.n_paths, BLOCK_PATHS)))
    map_ordered(run_block, tasks, threads=threads)
    return out


def localization_indicator(ens: PathEnsemble, w: LocalWindow, eps: float, t: float) -> np.ndarray:
    """Per path: True iff every grid state in [t-eps, t] lies in [xi-delta, xi+delta]."""
    k0, k_end = _window_indices(ens, eps, t)
    key = (w.xi, w.delta, k0, k_end)
    cached = ens.window_flags.get(key)
    if cached is not None:
        return cached
    seg = ens.states[:, k0:k_end + 1]
    flags = np.all(np.abs(seg - w.xi) <= w.delta, axis=1)
    ens.window_flags[key] = flags
    return flags


def _first_exit(seg: np.ndarray, xi: float, delta: float) -> np.ndarray:
    """Index of the first grid state outside the open window, else n_cols."""
    out = np.abs(seg - xi) >= delta
    has = out.any(axis=1)
    return np.where(has, out.argmax(axis=1), seg.shape[1])


def stopped_increment_moment(ens: PathEnsemble, w: LocalWindow, eps: float, t: float,
                             p: float, block: int = 16384) -> MCEstimate:
    """MC estimate of E[ sup_{s in [t-eps, t]} |X^tau_s - X^tau_{t-eps}|^p ]

    where tau is the first grid exit of the open window after t-eps.
    """
    if p < 1.0:
        raise ConfigError("p must be >= 1")
    k0, k_end = _window_indices(ens, eps, t)
    m = k_end - k0 + 1
    vals = np.empty(ens.n_paths)
    for start, stop in path_chunks(ens.n_paths, block):
        seg = ens.states[start:stop, k0:k_end + 1]
        fo = np.minimum(_first_exit(seg, w.xi, w.delta), m - 1)
        idx = np.minimum(np.arange(m)[None, :], fo[:, None])
        stopped = np.take_along_axis(seg, idx, axis=1)
        sup = np.max(np.abs(stopped - stopped[:, :1]), axis=1)
        vals[start:stop] = sup**p
    return mean_se(vals)


def exit_probability(ens: PathEnsemble, w: LocalWindow, eps: float, t: float) -> MCEstimate:
    """MC estimate of P( X_{t-eps} in B_{delta - delta0/2}(xi)  and  exit before t )."""
    k0, k_end = _window_indices(ens, eps, t)
    m = k_end - k0 + 1
    seg = ens.states[:, k0:k_end + 1]
    start_in = np.abs(seg[:, 0] - w.xi) < w.delta - w.delta0 / 2.0
    fo = _first_exit(seg, w.xi, w.delta)
    exited_before_t = fo <= m - 2
    return mean_se((start_in & exited_before_t).astype(float))


# ---------------------------------------------------------------------------
# binary ensemble artifact
# ---------------------------------------------------------------------------

_HEADER = struct.Struct("<8sIQQdddQI")


def save_ensemble(path, ens: PathEnsemble) -> None:
    """Versioned little-endian dump: header then row-major float64 states."""
    cfg = ens.config
    header = _HEADER.pack(
        _MAGIC, _VERSION, ens.n_paths, cfg.n_steps,
        cfg.h, cfg.t_final, cfg.x0, cfg.seed, ens.rng_streams.block_paths,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(ens.states, dtype="<f8").tobytes())


def load_ensemble(path) -> PathEnsemble:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        magic, version, n_paths, n_steps, h, t_final, x0, seed, block_paths = _HEADER.unpack(raw)
        if magic != _MAGIC:
            raise ConfigError(f"{path}: not an ensemble file")
        if version != _VERSION:
            raise ConfigError(f"{path}: unsupported version {version}")
        data = np.frombuffer(fh.read(), dtype="<f8").reshape(n_paths, n_steps + 1)
    cfg = SimConfig(x0=x0, t_final=t_final, h=h, n_paths=n_paths, seed=seed)
    return PathEnsemble(
        time_grid=h * np.arange(n_steps + 1),
        states=data.astype(float),
        config=cfg,
        rng_streams=RngStreams(seed=seed, block_paths=block_paths),
    )
