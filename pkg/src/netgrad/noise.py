"""Seeded random streams and noise models.

Draws are counter-based: every value is a pure function of
``(root_seed, channel, agent, iteration, slot)`` through a splitmix-style
64-bit hash, so identical coordinates give identical draws regardless of
execution order, parallelism, or which other channels were consumed. Normal
variates come from the inverse normal CDF applied to the hashed uniforms;
this convention is fixed and recorded as ``STREAM_VERSION`` in run outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

# stream-derivation algorithm identifier, recorded for reproducibility
STREAM_VERSION = "splitmix-ndtri/1"

CHANNEL_GRADIENT = 1
CHANNEL_ANNEALING = 2
CHANNEL_DATA = 3
CHANNEL_INIT = 4
CHANNEL_DIAGNOSTIC = 5

_U64 = np.uint64
_M1 = _U64(0xBF58476D1CE4E5B9)
_M2 = _U64(0x94D049BB133111EB)
_GOLD = _U64(0x9E3779B97F4A7C15)
_SALT_CHANNEL = _U64(0xD1B54A32D192ED03)
_SALT_SLOT = _U64(0x8BB84B93962EACC9)
_SALT_RUN = _U64(0x2545F4914F6CDD1D)


def _mix(z):
    """splitmix64 finalizer on uint64 arrays (wrapping arithmetic)."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _U64(30))) * _M1
        z = (z ^ (z >> _U64(27))) * _M2
        return z ^ (z >> _U64(31))


def _to_unit(bits: np.ndarray) -> np.ndarray:
    """Map uint64 words to doubles strictly inside (0, 1)."""
    return ((bits >> _U64(11)).astype(np.float64) + 0.5) * 2.0**-53


def derive_run_seed(root_seed: int, run_index: int) -> int:
    """Per-run seed for a Monte Carlo experiment, independent of scheduling."""
    with np.errstate(over="ignore"):
        z = _mix(_U64(root_seed & 0xFFFFFFFFFFFFFFFF) ^ _SALT_RUN)
        z = _mix(z + (_U64(run_index) + _U64(1)) * _GOLD)
    return int(z)


@dataclass(frozen=True)
class RngStream:
    """Counter-based stream rooted at a 64-bit seed.

    Channels keep gradient noise, annealing noise, data sampling, and
    initialization independent: consuming or skipping one never shifts
    another.
    """

    root_seed: int

    def _block(self, channel: int, agents: np.ndarray, ks: np.ndarray, per: int) -> np.ndarray:
        with np.errstate(over="ignore"):
            s = _mix(np.asarray(self.root_seed & 0xFFFFFFFFFFFFFFFF, dtype=_U64) ^ _GOLD)
            s = _mix(s + _U64(channel) * _SALT_CHANNEL)
            a = _mix(s + (np.asarray(agents, dtype=_U64) + _U64(1)) * _GOLD)
            ak = _mix(a[None, :] + (np.asarray(ks, dtype=_U64)[:, None] + _U64(1)) * _SALT_CHANNEL)
            bits = _mix(ak[:, :, None]
                        + (np.arange(per, dtype=_U64) + _U64(1)) * _SALT_SLOT)
        return _to_unit(bits)

    def uniform_block(self, channel: int, n_agents: int, ks, per: int) -> np.ndarray:
        """Uniform(0,1) draws of shape (len(ks), n_agents, per)."""
        return self._block(channel, np.arange(n_agents), np.asarray(ks), per)

    def normal_block(self, channel: int, n_agents: int, ks, per: int) -> np.ndarray:
        """Standard normal draws (inverse-CDF of the uniform block)."""
        return ndtri(self.uniform_block(channel, n_agents, ks, per))

    def uniforms(self, channel: int, agent: int, k: int, per: int) -> np.ndarray:
        """Uniform draws for one (agent, iteration) coordinate, shape (per,)."""
        return self._block(channel, np.asarray([agent]), np.asarray([k]), per)[0, 0]

    def normals(self, channel: int, agent: int, k: int, per: int) -> np.ndarray:
        return ndtri(self.uniforms(channel, agent, k, per))


NOISE_NONE = "none"
NOISE_GAUSSIAN = "gaussian"
NOISE_BOUNDED_UNIFORM = "bounded-uniform"


@dataclass(frozen=True)
class GradientNoiseModel:
    """Additive gradient-noise law: zero mean with bounded second moment."""

    kind: str
    sigma: float = 0.0   # gaussian std
    bound: float = 0.0   # uniform half-width


def no_noise() -> GradientNoiseModel:
    return GradientNoiseModel(NOISE_NONE)


def gaussian(sigma: float) -> GradientNoiseModel:
    if sigma <= 0:
        raise ValueError("gaussian noise needs sigma > 0")
    return GradientNoiseModel(NOISE_GAUSSIAN, sigma=float(sigma))


def bounded_uniform(bound: float) -> GradientNoiseModel:
    if bound <= 0:
        raise ValueError("bounded-uniform noise needs a positive half-width")
    return GradientNoiseModel(NOISE_BOUNDED_UNIFORM, bound=float(bound))


def gradient_noise_block(model: GradientNoiseModel, stream: RngStream,
                         n_agents: int, ks, dim: int):
    """Noise for a range of iterations, shape (len(ks), n_agents, dim).

    Returns None for the no-noise model (the zero vector, left implicit).
    """
    if model.kind == NOISE_NONE:
        return None
    if model.kind == NOISE_GAUSSIAN:
        return model.sigma * stream.normal_block(CHANNEL_GRADIENT, n_agents, ks, dim)
    if model.kind == NOISE_BOUNDED_UNIFORM:
        u = stream.uniform_block(CHANNEL_GRADIENT, n_agents, ks, dim)
        return model.bound * (2.0 * u - 1.0)
    raise ValueError(f"unknown noise kind {model.kind!r}")


def draw_gradient_noise(model: GradientNoiseModel, stream: RngStream,
                        agent: int, k: int, dim: int) -> np.ndarray:
    """One agent's gradient-noise vector at iteration k."""
    if model.kind == NOISE_NONE:
        return np.zeros(dim)
    block = gradient_noise_block(model, stream, agent + 1, [k], dim)
    return block[0, agent]


def draw_annealing_noise(stream: RngStream, agent: int, k: int, dim: int) -> np.ndarray:
    """One agent's standard-normal annealing vector at iteration k."""
    return stream.normals(CHANNEL_ANNEALING, agent, k, dim)


@dataclass(frozen=True)
class RegressionData:
    """Scalar-regression sampling law for the online learning experiment.

    x is uniform on (x_low, x_high); with probability mix_p the response uses
    slope_main, otherwise slope_alt, plus standard normal noise.
    """

    x_low: float = 0.0
    x_high: float = 12.0
    mix_p: float = 0.55
    slope_main: float = 0.7
    slope_alt: float = 0.1
    noise_std: float = 1.0

    def __post_init__(self):
        if not self.x_low < self.x_high:
            raise ValueError("regression data needs x_low < x_high")
        if not 0.0 <= self.mix_p <= 1.0:
            raise ValueError("mixture probability must lie in [0, 1]")
        if self.noise_std < 0:
            raise ValueError("noise std must be >= 0")


def regression_block(data: RegressionData, stream: RngStream,
                     n_agents: int, ks, batch: int = 1):
    """(x, y) samples for a range of iterations.

    Returns arrays of shape (len(ks), n_agents, batch). Each sample consumes
    three uniform slots (x, branch, noise) laid out consecutively, so the
    batch=1 block reproduces :func:`sample_regression` exactly.
    """
    u = stream.uniform_block(CHANNEL_DATA, n_agents, ks, 3 * batch)
    u = u.reshape(u.shape[0], n_agents, batch, 3)
    xs = data.x_low + (data.x_high - data.x_low) * u[..., 0]
    slope = np.where(u[..., 1] < data.mix_p, data.slope_main, data.slope_alt)
    ys = slope * xs + data.noise_std * ndtri(u[..., 2])
    return xs, ys


def sample_regression(data: RegressionData, stream: RngStream,
                      agent: int, k: int) -> tuple[float, float]:
    """One (x, y) sample for agent ``agent`` at iteration ``k``."""
    xs, ys = regression_block(data, stream, agent + 1, [k], batch=1)
    return float(xs[0, agent, 0]), float(ys[0, agent, 0])


def stochastic_regression_gradient(w: float, sample: tuple[float, float], n: int) -> float:
    """Sample gradient of the per-agent robust regression risk at weight w.

    The loss is log(8 (w x - y)^2 + 1) scaled by 1/n.
    """
    if n < 1:
        raise ValueError("scaling count must be >= 1")
    x, y = sample
    r = w * x - y
    return 16.0 * x * r / (8.0 * r * r + 1.0) / n


def verify_min_excitation(model: GradientNoiseModel, directions: int, draws: int,
                          dim: int = 2, seed: int = 0) -> float:
    """Monte Carlo check that noise excites every direction.

    Samples random unit vectors theta and estimates E[(xi' theta)^+] for each;
    returns the minimum over directions (0 for the no-noise model, which
    cannot excite anything).
    """
    if directions < 1 or draws < 1:
        raise ValueError("need at least one direction and one draw")
    if model.kind == NOISE_NONE:
        return 0.0
    stream = RngStream(seed)
    xi = gradient_noise_block(model, stream, 1, np.arange(draws), dim)[:, 0, :]
    thetas = stream.normal_block(CHANNEL_DIAGNOSTIC, 1, np.arange(directions), dim)[:, 0, :]
    thetas /= np.linalg.norm(thetas, axis=1, keepdims=True)
    proj = xi @ thetas.T
    return float(np.maximum(proj, 0.0).mean(axis=0).min())
