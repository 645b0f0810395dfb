"""Objective functions, per-agent splits, and critical-point classification."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .noise import RegressionData

LOCAL_MIN = "local-min"
LOCAL_MAX = "local-max"
REGULAR_SADDLE = "regular-saddle"
DEGENERATE = "degenerate"
NOT_CRITICAL = "not-critical"


class HessianUnavailableError(RuntimeError):
    """Raised when classification needs a Hessian and no fallback is allowed."""


@dataclass(frozen=True)
class Objective:
    """A smooth function R^d -> R with gradient and optional Hessian access.

    ``vectorized`` objectives accept arrays with leading batch axes in
    ``value`` and ``gradient`` (last axis indexes the d coordinates).
    """

    dimension: int
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""
    vectorized: bool = False


@dataclass(frozen=True)
class CriticalPointClass:
    kind: str
    q: int
    min_abs_eigenvalue: float


def quadratic_saddle(d: int, q: int) -> Objective:
    """0.5 x'Ax with A = diag(+1 repeated d-q, -1 repeated q).

    The origin is a critical point whose Hessian has exactly q negative
    eigenvalues; the flow started on the span of the +1 coordinates stays
    there.
    """
    if d < 2:
        raise ValueError("quadratic saddle needs dimension >= 2")
    if not 1 <= q <= d:
        raise ValueError(f"negative-eigenvalue count must lie in [1, {d}], got {q}")
    diag = np.concatenate([np.ones(d - q), -np.ones(q)])
    A = np.diag(diag)
    return Objective(
        dimension=d,
        value=lambda x: 0.5 * np.sum(diag * np.asarray(x) ** 2, axis=-1),
        gradient=lambda x: diag * np.asarray(x),
        hessian=lambda x: A,
        name=f"quadratic_saddle:d={d},q={q}",
        vectorized=True,
    )


def cubic_saddle() -> Objective:
    """x1^2 - x2^2 + x1^2 x2 + x1 x2^2: a regular saddle at the origin with a
    genuinely curved stable surface."""
    def value(x):
        x = np.asarray(x)
        x1, x2 = x[..., 0], x[..., 1]
        return x1 * x1 - x2 * x2 + x1 * x1 * x2 + x1 * x2 * x2

    def gradient(x):
        x = np.asarray(x)
        x1, x2 = x[..., 0], x[..., 1]
        return np.stack([2.0 * x1 + 2.0 * x1 * x2 + x2 * x2,
                         -2.0 * x2 + x1 * x1 + 2.0 * x1 * x2], axis=-1)

    def hessian(x):
        x1, x2 = float(x[0]), float(x[1])
        return np.array([[2.0 + 2.0 * x2, 2.0 * x1 + 2.0 * x2],
                         [2.0 * x1 + 2.0 * x2, -2.0 + 2.0 * x1]])

    return Objective(2, value, gradient, hessian, name="cubic_saddle", vectorized=True)


def double_well_1d() -> Objective:
    """w^4 - w^2 + 0.3w: two wells of different depth, the deeper one at
    negative w. Coercive, so suitable for annealing demonstrations."""
    def value(x):
        w = np.asarray(x)[..., 0]
        return w ** 4 - w * w + 0.3 * w

    def gradient(x):
        w = np.asarray(x)[..., 0]
        return (4.0 * w ** 3 - 2.0 * w + 0.3)[..., None]

    def hessian(x):
        w = float(x[0])
        return np.array([[12.0 * w * w - 2.0]])

    return Objective(1, value, gradient, hessian, name="double_well_1d", vectorized=True)


def double_well_2d() -> Objective:
    """0.25 x1^4 - 0.5 x1^2 + 0.5 x2^2: minima at (+-1, 0), saddle at the
    origin, quartic confinement."""
    def value(x):
        x = np.asarray(x)
        x1, x2 = x[..., 0], x[..., 1]
        return 0.25 * x1 ** 4 - 0.5 * x1 * x1 + 0.5 * x2 * x2

    def gradient(x):
        x = np.asarray(x)
        x1, x2 = x[..., 0], x[..., 1]
        return np.stack([x1 ** 3 - x1, x2], axis=-1)

    def hessian(x):
        x1 = float(x[0])
        return np.array([[3.0 * x1 * x1 - 1.0, 0.0], [0.0, 1.0]])

    return Objective(2, value, gradient, hessian, name="double_well_2d", vectorized=True)


def robust_loss(y, y_hat):
    """Outlier-robust regression loss log(8 (y - y_hat)^2 + 1)."""
    d = np.asarray(y) - np.asarray(y_hat)
    return np.log(8.0 * d * d + 1.0)


@lru_cache(maxsize=None)
def _quadrature_nodes():
    # population-risk quadrature: Gauss-Legendre in x, Gauss-Hermite in the
    # response noise (transformed to the standard normal weight)
    xg, xw = np.polynomial.legendre.leggauss(96)
    eg, ew = np.polynomial.hermite.hermgauss(64)
    return xg, xw, np.sqrt(2.0) * eg, ew / np.sqrt(np.pi)


def _population_risk(data: RegressionData) -> Objective:
    """Quadrature approximation of E[log(8 (w x - y)^2 + 1)] under ``data``."""
    xg, xw, eg, ew = _quadrature_nodes()
    half = 0.5 * (data.x_high - data.x_low)
    xs = data.x_low + half * (xg + 1.0)
    xw = xw * half / (data.x_high - data.x_low)  # uniform density folded in
    branches = ((data.slope_main, data.mix_p), (data.slope_alt, 1.0 - data.mix_p))

    def _accumulate(w, integrand):
        w = np.asarray(w, dtype=np.float64)[..., 0]
        total = 0.0
        for slope, p in branches:
            r = (w[..., None, None] - slope) * xs[:, None] - data.noise_std * eg[None, :]
            total = total + p * np.sum(integrand(r) * (xw[:, None] * ew[None, :]),
                                       axis=(-2, -1))
        return total

    def value(x):
        return _accumulate(x, lambda r: robust_loss(r, 0.0))

    def gradient(x):
        g = _accumulate(x, lambda r: 16.0 * xs[:, None] * r / (8.0 * r * r + 1.0))
        return g[..., None]

    def hessian(x):
        h = _accumulate(np.asarray(x, dtype=np.float64).reshape(1, 1),
                        lambda r: 16.0 * xs[:, None] ** 2 * (1.0 - 8.0 * r * r)
                        / (8.0 * r * r + 1.0) ** 2)
        return h.reshape(1, 1)

    return Objective(1, value, gradient, hessian, name="population_risk", vectorized=True)


def scale_objective(o: Objective, s: float) -> Objective:
    """The objective s * o (gradients and Hessians scale with it)."""
    if s == 1.0:
        return o
    hess = None if o.hessian is None else (lambda x: s * o.hessian(x))
    return Objective(
        dimension=o.dimension,
        value=lambda x: s * o.value(x),
        gradient=lambda x: s * o.gradient(x),
        hessian=hess,
        name=f"{o.name}|x{s:g}",
        vectorized=o.vectorized,
    )


@dataclass(frozen=True)
class AgentObjectives:
    """Per-agent objectives together with the network objective they sum to.

    ``data`` marks the online-regression mode, where gradients are estimated
    from fresh samples; ``risk_denominator`` is the 1/n factor carried by each
    agent's risk in that mode.
    """

    agents: tuple[Objective, ...]
    total: Objective
    name: str = ""
    data: Optional[RegressionData] = None
    risk_denominator: int = 1

    def __post_init__(self):
        if not self.agents:
            raise ValueError("need at least one agent objective")
        if any(a.dimension != self.dimension for a in self.agents):
            raise ValueError("agent objectives must share one dimension")
        if self.total.dimension != self.dimension:
            raise ValueError("network objective dimension mismatch")

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def dimension(self) -> int:
        return self.agents[0].dimension

    @property
    def shared_agent(self) -> Optional[Objective]:
        """The single Objective instance all agents share, if they do."""
        first = self.agents[0]
        return first if all(a is first for a in self.agents) else None


def split_uniform(o: Objective, n_agents: int) -> AgentObjectives:
    """Distribute ``o`` as f_n = o / n so the agent objectives sum to ``o``."""
    if n_agents < 1:
        raise ValueError("need at least one agent")
    shared = scale_objective(o, 1.0 / n_agents)
    return AgentObjectives((shared,) * n_agents, o, name=f"{o.name}|split:{n_agents}")


def replicate(o: Objective, n_agents: int) -> AgentObjectives:
    """Give every agent the full objective; the network objective is n * o."""
    if n_agents < 1:
        raise ValueError("need at least one agent")
    return AgentObjectives((o,) * n_agents, scale_objective(o, float(n_agents)),
                           name=f"{o.name}|replica:{n_agents}")


def robust_regression(n_agents: int, data: Optional[RegressionData] = None,
                      normalized: bool = True) -> AgentObjectives:
    """Per-agent robust regression risks for the online learning experiment.

    With ``normalized`` (the default) each agent carries (1/n) of the
    population risk, so the network objective is the population risk itself.
    Otherwise every agent carries the full risk, which is what makes the
    published Monte Carlo success counts reproducible; the minimizer locations
    are identical either way.
    """
    if n_agents < 1:
        raise ValueError("need at least one agent")
    data = data if data is not None else RegressionData()
    risk = _population_risk(data)
    if normalized:
        bundle = split_uniform(risk, n_agents)
        denom = n_agents
    else:
        bundle = replicate(risk, n_agents)
        denom = 1
    return AgentObjectives(bundle.agents, bundle.total,
                           name=f"robust_regression:n={n_agents},normalized={normalized}",
                           data=data, risk_denominator=denom)


def check_gradient(o: Objective, x, h: float = 1e-5) -> float:
    """Max relative error of the analytic gradient against central differences."""
    if h <= 0:
        raise ValueError("step size must be positive")
    x = np.asarray(x, dtype=np.float64)
    analytic = np.asarray(o.gradient(x), dtype=np.float64)
    err = 0.0
    for j in range(o.dimension):
        e = np.zeros_like(x)
        e[j] = h
        numeric = (float(o.value(x + e)) - float(o.value(x - e))) / (2.0 * h)
        err = max(err, abs(analytic[j] - numeric) / max(1.0, abs(analytic[j])))
    return err


def fd_hessian(o: Objective, x, h: float = 1e-5) -> np.ndarray:
    """Symmetrized central differences of the gradient."""
    x = np.asarray(x, dtype=np.float64)
    d = o.dimension
    H = np.zeros((d, d))
    for j in range(d):
        e = np.zeros_like(x)
        e[j] = h
        H[:, j] = (np.asarray(o.gradient(x + e)) - np.asarray(o.gradient(x - e))) / (2.0 * h)
    return 0.5 * (H + H.T)


def classify(o: Objective, x, grad_tol: float = 1e-6,
             eig_tol: Optional[float] = None,
             fd_fallback: bool = True) -> CriticalPointClass:
    """Classify a point by the gradient norm and the Hessian spectrum.

    Eigenvalues below -eig_tol count toward q; any eigenvalue within eig_tol
    of zero makes the point degenerate (the classification the theory needs
    is undefined there). eig_tol defaults to 1e-8 * (1 + spectral radius).
    """
    x = np.asarray(x, dtype=np.float64)
    grad = np.asarray(o.gradient(x), dtype=np.float64)
    if np.linalg.norm(grad) > grad_tol:
        return CriticalPointClass(NOT_CRITICAL, 0, float("nan"))
    if o.hessian is not None:
        H = np.asarray(o.hessian(x), dtype=np.float64)
    elif fd_fallback:
        H = fd_hessian(o, x)
    else:
        raise HessianUnavailableError(
            f"objective {o.name or '<anonymous>'} has no Hessian and the "
            "finite-difference fallback is disabled")
    vals = np.linalg.eigvalsh(0.5 * (H + H.T))
    if eig_tol is None:
        eig_tol = 1e-8 * (1.0 + float(np.max(np.abs(vals), initial=0.0)))
    q = int(np.sum(vals < -eig_tol))
    min_abs = float(np.min(np.abs(vals)))
    if np.any(np.abs(vals) <= eig_tol):
        return CriticalPointClass(DEGENERATE, q, min_abs)
    if q == 0:
        return CriticalPointClass(LOCAL_MIN, q, min_abs)
    if q == o.dimension:
        return CriticalPointClass(LOCAL_MAX, q, min_abs)
    return CriticalPointClass(REGULAR_SADDLE, q, min_abs)


def _parse_param(raw: str):
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def from_spec(spec: str, n_agents: int) -> AgentObjectives:
    """Build per-agent objectives from a registry string.

    Examples: ``quadratic_saddle:d=2,q=1``, ``cubic_saddle``,
    ``double_well_1d``, ``double_well_2d:agents=replica``,
    ``robust_regression:normalized=false``. The ``agents`` parameter selects
    how the function is distributed: ``split`` (f_n = F/n, default) or
    ``replica`` (every agent carries the full function).
    """
    name, _, tail = spec.partition(":")
    name = name.strip()
    params = {}
    if tail:
        for item in tail.split(","):
            key, _, raw = item.partition("=")
            if not _:
                raise ValueError(f"malformed objective parameter {item!r} in {spec!r}")
            params[key.strip()] = _parse_param(raw.strip())

    if name == "robust_regression":
        normalized = params.pop("normalized", True)
        if params:
            raise ValueError(f"unknown robust_regression parameters: {sorted(params)}")
        return robust_regression(n_agents, normalized=bool(normalized))

    mode = params.pop("agents", "split")
    if mode not in ("split", "replica"):
        raise ValueError(f"agents must be 'split' or 'replica', got {mode!r}")
    if name == "quadratic_saddle":
        base = quadratic_saddle(int(params.pop("d", 2)), int(params.pop("q", 1)))
    elif name == "cubic_saddle":
        base = cubic_saddle()
    elif name == "double_well_1d":
        base = double_well_1d()
    elif name == "double_well_2d":
        base = double_well_2d()
    else:
        raise ValueError(f"unknown objective {name!r}")
    if params:
        raise ValueError(f"unknown {name} parameters: {sorted(params)}")
    bundle = split_uniform(base, n_agents) if mode == "split" else replicate(base, n_agents)
    return AgentObjectives(bundle.agents, bundle.total, name=spec, data=None)
