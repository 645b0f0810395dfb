"""Network dynamics: stochastic recursions and their continuous-time flows.

The discrete stepper implements the synchronous per-agent update

    x_n <- x_n + b_k * sum_{l in nbrs(n)} (x_l - x_n)
               - a_k * (grad f_n(x_n) + noise)
               + c_k * w_n(k)

where every agent reads the previous snapshot (the consensus sum is the
negated Laplacian action). With the ``direct`` coupling b_k = beta_k and
c_k = gamma_k; with ``lr-scaled`` coupling the consensus and annealing terms
are premultiplied by alpha_k, which is the update produced by running plain
stochastic descent on a local loss augmented with the quadratic disagreement
penalty. Continuous flows are integrated with classical fixed-step RK4.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .analysis import consensus_error
from .graph import Graph, is_connected, laplacian
from .noise import (CHANNEL_ANNEALING, STREAM_VERSION, GradientNoiseModel,
                    RngStream, draw_annealing_noise, draw_gradient_noise,
                    gradient_noise_block, no_noise, regression_block)
from .objective import AgentObjectives, Objective
from .schedule import (Schedule, ValidationReport, WeightTriple, constant,
                       validate_annealing, validate_dsgd)

COUPLING_DIRECT = "direct"
COUPLING_LR_SCALED = "lr-scaled"


class ConfigurationError(ValueError):
    """A simulation configuration that cannot be run."""


@dataclass
class NetworkState:
    """Stacked agent estimates (one row per agent) at iteration k."""

    states: np.ndarray
    k: int = 0
    diverged: bool = False


@dataclass(frozen=True)
class SimConfig:
    """Everything one seeded simulation run needs."""

    graph: Graph
    objectives: AgentObjectives
    weights: WeightTriple
    init: np.ndarray
    steps: int
    noise: GradientNoiseModel = field(default_factory=no_noise)
    batch: int = 1
    divergence_radius: float = 1e8
    record_every: int = 1
    coupling: str = COUPLING_DIRECT

    def validate(self, strict: bool = False) -> ValidationReport:
        """Structural problems are always errors; theory-regime mismatches and
        disconnected graphs are errors only under ``strict``."""
        report = ValidationReport()
        n, d = self.graph.n_vertices, self.objectives.dimension
        if self.objectives.n_agents != n:
            report.fail(f"graph has {n} vertices but {self.objectives.n_agents} "
                        "agent objectives were given")
        init = np.asarray(self.init)
        if init.shape != (n, d):
            report.fail(f"initial state must have shape ({n}, {d}), got {init.shape}")
        elif not np.all(np.isfinite(init)):
            report.fail("initial state must be finite")
        if self.steps < 1:
            report.fail("step count must be >= 1")
        if self.record_every < 1:
            report.fail("record_every must be >= 1")
        if self.divergence_radius <= 0:
            report.fail("divergence radius must be positive")
        if self.coupling not in (COUPLING_DIRECT, COUPLING_LR_SCALED):
            report.fail(f"coupling must be '{COUPLING_DIRECT}' or '{COUPLING_LR_SCALED}', "
                        f"got {self.coupling!r}")
        if self.batch < 1:
            report.fail("batch must be >= 1")
        if self.objectives.data is not None:
            if self.noise.kind != "none":
                report.fail("online regression mode draws its own samples; "
                            "set the gradient-noise model to 'none'")
            if d != 1:
                report.fail("online regression mode is one-dimensional")
        elif self.batch != 1:
            report.fail("batch > 1 only applies to the online regression mode")
        if not is_connected(self.graph):
            report.fail("communication graph is not connected; every run requires "
                        "a connected undirected graph for consensus", permissive=not strict)
        if self.weights.gamma.is_zero:
            report.merge(_soften(validate_dsgd(self.weights, permissive=not strict,
                                               max_degree=self.graph.max_degree),
                                 permissive=not strict))
        else:
            report.merge(_soften(validate_annealing(self.weights), permissive=not strict))
        return report

    def fingerprint(self) -> str:
        """Stable digest of the run configuration (plus the stream version)."""
        h = hashlib.sha256()
        parts = [
            f"graph:{self.graph.n_vertices}:{self.graph.edges()}",
            f"objective:{self.objectives.name}",
            f"weights:{self.weights.describe()}",
            f"noise:{self.noise.kind}:{self.noise.sigma!r}:{self.noise.bound!r}",
            f"batch:{self.batch}",
            f"steps:{self.steps}",
            f"radius:{self.divergence_radius!r}",
            f"record:{self.record_every}",
            f"coupling:{self.coupling}",
            f"stream:{STREAM_VERSION}",
        ]
        h.update("|".join(parts).encode())
        h.update(np.ascontiguousarray(np.asarray(self.init, dtype=np.float64)).tobytes())
        return h.hexdigest()[:16]


def _soften(report: ValidationReport, permissive: bool) -> ValidationReport:
    if permissive and not report.ok:
        return ValidationReport(ok=True, errors=[], warnings=report.warnings + report.errors)
    return report


@dataclass
class Trajectory:
    """Seeded run summary: sampled states, consensus series, and outcome."""

    ks: np.ndarray
    states: np.ndarray            # (samples, agents, dim)
    consensus: np.ndarray         # (samples,)
    final_states: np.ndarray      # (agents, dim); last fully finite state
    diverged: bool
    diverged_at: Optional[int]
    seed: int
    fingerprint: str
    steps: int


@dataclass
class _StepPlan:
    """Pre-drawn randomness for a contiguous range of iterations.

    Every entry is a pure function of (seed, channel, agent, iteration), so a
    one-step plan is bit-identical to the matching rows of a full-run plan.
    """

    xi: Optional[np.ndarray]        # (K, N, d) gradient noise
    xs: Optional[np.ndarray]        # (K, N, B) regression inputs
    ys: Optional[np.ndarray]        # (K, N, B) regression responses
    anneal: Optional[np.ndarray]    # (K, N, d) standard normals
    denom: int
    batched_gradient: Optional[Objective]


def _draw_plan(cfg: SimConfig, stream: RngStream, ks: np.ndarray) -> _StepPlan:
    n, d = cfg.graph.n_vertices, cfg.objectives.dimension
    xi = xs = ys = anneal = None
    if cfg.objectives.data is not None:
        xs, ys = regression_block(cfg.objectives.data, stream, n, ks, cfg.batch)
    else:
        xi = gradient_noise_block(cfg.noise, stream, n, ks, d)
    if not cfg.weights.gamma.is_zero:
        anneal = stream.normal_block(CHANNEL_ANNEALING, n, ks, d)
    shared = cfg.objectives.shared_agent
    batched = shared if (shared is not None and shared.vectorized) else None
    return _StepPlan(xi, xs, ys, anneal, cfg.objectives.risk_denominator, batched)


def _grad_matrix(objectives: AgentObjectives, states: np.ndarray,
                 batched: Optional[Objective]) -> np.ndarray:
    if batched is not None:
        return np.asarray(batched.gradient(states))
    return np.stack([np.asarray(o.gradient(states[i]))
                     for i, o in enumerate(objectives.agents)])


def _gradient_term(cfg: SimConfig, states: np.ndarray, plan: _StepPlan, i: int) -> np.ndarray:
    if plan.xs is not None:
        x, y = plan.xs[i], plan.ys[i]
        r = states[:, 0][:, None] * x - y
        g = 16.0 * x * r / (8.0 * r * r + 1.0) / plan.denom
        return g.mean(axis=1)[:, None]
    g = _grad_matrix(cfg.objectives, states, plan.batched_gradient)
    if plan.xi is not None:
        g = g + plan.xi[i]
    return g


def _advance(states: np.ndarray, i: int, cfg: SimConfig, L: np.ndarray,
             alphas: np.ndarray, betas: np.ndarray,
             gammas: Optional[np.ndarray], plan: _StepPlan) -> np.ndarray:
    a = alphas[i]
    b = betas[i]
    if cfg.coupling == COUPLING_LR_SCALED:
        b = a * b
    g = _gradient_term(cfg, states, plan, i)
    new = states + b * (-(L @ states)) - a * g
    if gammas is not None:
        c = gammas[i]
        if cfg.coupling == COUPLING_LR_SCALED:
            c = a * c
        new = new + c * plan.anneal[i]
    return new


def _blown_up(states: np.ndarray, radius: float) -> bool:
    if not np.all(np.isfinite(states)):
        return True
    return bool(np.linalg.norm(states, axis=-1).max() > radius)


def _schedule_rows(weights: WeightTriple, ks: np.ndarray):
    alphas = weights.alpha.eval_array(ks)
    betas = weights.beta.eval_array(ks)
    gammas = None if weights.gamma.is_zero else weights.gamma.eval_array(ks)
    return alphas, betas, gammas


def dsgd_step(state: NetworkState, cfg: SimConfig, stream: RngStream) -> NetworkState:
    """One synchronous network update from the snapshot in ``state``.

    With gamma identically zero this is the plain distributed stochastic
    descent recursion; a nonzero gamma adds the per-agent annealing noise.
    A non-finite or out-of-radius result is returned flagged as diverged.
    """
    states = np.asarray(state.states, dtype=np.float64)
    if not np.all(np.isfinite(states)):
        raise ValueError("cannot step a non-finite network state")
    L = laplacian(cfg.graph).astype(np.float64)
    ks = np.asarray([state.k])
    alphas, betas, gammas = _schedule_rows(cfg.weights, ks)
    plan = _draw_plan(cfg, RngStream(stream.root_seed), ks)
    new = _advance(states, 0, cfg, L, alphas, betas, gammas, plan)
    return NetworkState(new, state.k + 1, diverged=_blown_up(new, cfg.divergence_radius))


def run(cfg: SimConfig, seed: int) -> Trajectory:
    """Iterate the network recursion for ``cfg.steps`` steps.

    Deterministic in (cfg, seed). Divergence halts the run and is recorded as
    an outcome, not raised; the stored final state is the last one with all
    entries finite.
    """
    report = cfg.validate(strict=False)
    if not report.ok:
        raise ConfigurationError("; ".join(report.errors))
    L = laplacian(cfg.graph).astype(np.float64)
    K = cfg.steps
    ks = np.arange(K)
    alphas, betas, gammas = _schedule_rows(cfg.weights, ks)
    plan = _draw_plan(cfg, RngStream(seed), ks)
    states = np.array(cfg.init, dtype=np.float64, copy=True)

    rec_ks = [0]
    rec_states = [states.copy()]
    rec_cons = [consensus_error(states)]
    diverged = False
    diverged_at: Optional[int] = None
    steps_done = 0
    for i in range(K):
        new = _advance(states, i, cfg, L, alphas, betas, gammas, plan)
        steps_done = i + 1
        if _blown_up(new, cfg.divergence_radius):
            diverged = True
            diverged_at = steps_done
            if np.all(np.isfinite(new)):
                states = new
            break
        states = new
        if steps_done % cfg.record_every == 0:
            rec_ks.append(steps_done)
            rec_states.append(states.copy())
            rec_cons.append(consensus_error(states))
    return Trajectory(
        ks=np.asarray(rec_ks),
        states=np.stack(rec_states),
        consensus=np.asarray(rec_cons),
        final_states=states.copy(),
        diverged=diverged,
        diverged_at=diverged_at,
        seed=int(seed),
        fingerprint=cfg.fingerprint(),
        steps=steps_done,
    )


def sgd_run(objective: Objective, alpha: Schedule, steps: int, x0, seed: int,
            noise_model: Optional[GradientNoiseModel] = None,
            gamma: Optional[Schedule] = None,
            divergence_radius: float = 1e8):
    """Standalone single-agent recursion x <- x - a_k (grad f + noise) [+ c_k w].

    This is the centralized reference: it shares the noise-stream convention
    with the network stepper (agent id 0) but none of its code path. Returns
    (iterates, diverged) with iterates of shape (stopped_steps + 1, d).
    """
    noise_model = noise_model if noise_model is not None else no_noise()
    gamma = gamma if gamma is not None else constant(0.0)
    stream = RngStream(seed)
    x = np.array(x0, dtype=np.float64).reshape(objective.dimension)
    iterates = [x.copy()]
    for k in range(steps):
        g = np.asarray(objective.gradient(x)) + draw_gradient_noise(
            noise_model, stream, 0, k, objective.dimension)
        x = x - alpha.eval(k) * g
        if not gamma.is_zero:
            x = x + gamma.eval(k) * draw_annealing_noise(stream, 0, k, objective.dimension)
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > divergence_radius:
            return np.stack(iterates), True
        iterates.append(x.copy())
    return np.stack(iterates), False


@dataclass
class FlowTrajectory:
    """Fixed-step integration record; states carry one row per time point."""

    times: np.ndarray
    states: np.ndarray
    diverged: bool = False
    diverged_at: Optional[float] = None


def _rk4_span(t_end: float, h: float) -> int:
    if h <= 0:
        raise ValueError("step size must be positive")
    if t_end <= 0:
        raise ValueError("horizon must be positive")
    n = int(round(t_end / h))
    if n < 1:
        raise ValueError("horizon shorter than one step")
    return n


def gf_integrate(o: Objective, x0, t_end: float, h: float,
                 divergence_radius: float = 1e8) -> FlowTrajectory:
    """Classical RK4 for the descent flow dx/dt = -grad f(x) from x(0) = x0."""
    n = _rk4_span(t_end, h)
    x = np.array(x0, dtype=np.float64).reshape(o.dimension)
    times = h * np.arange(n + 1)
    out = np.empty((n + 1, o.dimension))
    out[0] = x
    for i in range(n):
        k1 = -np.asarray(o.gradient(x))
        k2 = -np.asarray(o.gradient(x + (0.5 * h) * k1))
        k3 = -np.asarray(o.gradient(x + (0.5 * h) * k2))
        k4 = -np.asarray(o.gradient(x + h * k3))
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > divergence_radius:
            return FlowTrajectory(times[: i + 1], out[: i + 1], True, float(times[i + 1]))
        out[i + 1] = x
    return FlowTrajectory(times, out)


def dgf_integrate(cfg: SimConfig, t0: float, t_end: float, h: float) -> FlowTrajectory:
    """RK4 for the network flow dx_n/dt = b_t * consensus - a_t * grad f_n.

    The weight laws are evaluated at physical time; the run starts at t0
    (which must keep the laws finite, i.e. t0 >= 0). Noise, annealing, and
    coupling settings of ``cfg`` play no role in the continuous flow.
    """
    if t_end <= t0:
        raise ValueError("t_end must exceed t0")
    if t0 < 0:
        raise ValueError("t0 must be >= 0")
    n = _rk4_span(t_end - t0, h)
    if cfg.objectives.n_agents != cfg.graph.n_vertices:
        raise ConfigurationError("graph size does not match the agent objectives")
    L = laplacian(cfg.graph).astype(np.float64)
    shared = cfg.objectives.shared_agent
    batched = shared if (shared is not None and shared.vectorized) else None

    def field_at(t: float, states: np.ndarray) -> np.ndarray:
        a = cfg.weights.alpha.eval(t)
        b = cfg.weights.beta.eval(t)
        return b * (-(L @ states)) - a * _grad_matrix(cfg.objectives, states, batched)

    x = np.array(cfg.init, dtype=np.float64)
    times = t0 + h * np.arange(n + 1)
    out = np.empty((n + 1,) + x.shape)
    out[0] = x
    for i in range(n):
        t = float(times[i])
        k1 = field_at(t, x)
        k2 = field_at(t + 0.5 * h, x + (0.5 * h) * k1)
        k3 = field_at(t + 0.5 * h, x + (0.5 * h) * k2)
        k4 = field_at(t + h, x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if _blown_up(x, cfg.divergence_radius):
            return FlowTrajectory(times[: i + 1], out[: i + 1], True, float(times[i + 1]))
        out[i + 1] = x
    return FlowTrajectory(times, out)
