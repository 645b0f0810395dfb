"""Run diagnostics: consensus error, basin labels, stable subspaces, and
Gibbs-measure quadrature."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

LABEL_DIVERGED = "diverged"
LABEL_UNRESOLVED = "unresolved"


class DegenerateDensityError(ValueError):
    """The Gibbs quadrature produced no usable mass on the grid."""


def _states_of(s) -> np.ndarray:
    return np.atleast_2d(np.asarray(getattr(s, "states", s), dtype=np.float64))


def consensus_error(s) -> float:
    """Largest pairwise distance between agent states.

    Accepts a NetworkState or a plain (agents, dim) array. Zero iff all agents
    agree; invariant under relabeling agents and under common translations.
    """
    x = _states_of(s)
    diff = x[:, None, :] - x[None, :, :]
    return float(np.sqrt((diff * diff).sum(axis=-1)).max())


@dataclass(frozen=True)
class BasinLabel:
    """Nearest-anchor classification of a finished run."""

    label: str
    anchor: Optional[np.ndarray]
    distance: float


def classify_basin(final, anchors: Sequence, radius: float) -> BasinLabel:
    """Label the mean agent state by its nearest anchor within ``radius``.

    ``anchors`` is a sequence of (point, label) pairs. A diverged state is
    labeled diverged regardless of position; a mean farther than ``radius``
    from every anchor is unresolved.
    """
    if not anchors:
        raise ValueError("need at least one anchor")
    if radius <= 0:
        raise ValueError("radius must be positive")
    if getattr(final, "diverged", False):
        return BasinLabel(LABEL_DIVERGED, None, float("nan"))
    mean = _states_of(final).mean(axis=0)
    best_label, best_point, best_dist = None, None, np.inf
    for point, label in anchors:
        point = np.atleast_1d(np.asarray(point, dtype=np.float64))
        dist = float(np.linalg.norm(mean - point))
        if dist < best_dist:
            best_label, best_point, best_dist = label, point, dist
    if best_dist <= radius:
        return BasinLabel(best_label, best_point, best_dist)
    return BasinLabel(LABEL_UNRESOLVED, None, best_dist)


def stable_subspace(A: np.ndarray, eig_tol: float = 1e-9) -> tuple[np.ndarray, int]:
    """Orthonormal basis of the span of eigenvectors with eigenvalue >= 0.

    For the linearized flow dx/dt = -A x this span is the set of directions
    that are not repelled. Returns (basis with d - q columns, q) where q
    counts eigenvalues below -eig_tol.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("need a square matrix")
    if not np.allclose(A, A.T, atol=1e-12 * (1.0 + np.abs(A).max())):
        raise ValueError("need a symmetric matrix")
    vals, vecs = np.linalg.eigh(A)
    keep = vals >= -eig_tol
    q = int(np.sum(~keep))
    return vecs[:, keep], q


def gibbs_measure_1d(o, epsilon: float, lo: float, hi: float,
                     step: float) -> tuple[np.ndarray, np.ndarray]:
    """Normalized density proportional to exp(-2 f(x) / epsilon^2) on a grid.

    The grid minimum of f is subtracted before exponentiating, which leaves
    the normalized density unchanged and avoids wholesale underflow at small
    epsilon. Trapezoidal normalization.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if step <= 0 or hi <= lo:
        raise ValueError("need a grid with lo < hi and positive step")
    xs = np.arange(lo, hi + 0.5 * step, step)
    if o.vectorized:
        fs = np.asarray(o.value(xs[:, None]), dtype=np.float64)
    else:
        fs = np.array([float(o.value(np.array([x]))) for x in xs])
    if not np.all(np.isfinite(fs)):
        raise DegenerateDensityError("objective is not finite on the grid")
    density = np.exp(-2.0 * (fs - fs.min()) / (epsilon * epsilon))
    mass = float(np.trapezoid(density, dx=step))
    if not np.isfinite(mass) or mass <= 0.0:
        raise DegenerateDensityError("density has no mass on the grid")
    return xs, density / mass


def mass_within(xs: np.ndarray, density: np.ndarray, center: float,
                radius: float) -> float:
    """Trapezoidal mass of a normalized grid density inside |x - center| <= radius."""
    inside = np.abs(xs - center) <= radius
    if inside.sum() < 2:
        return 0.0
    return float(np.trapezoid(density[inside], xs[inside]))


@dataclass(frozen=True)
class _FinalView:
    states: np.ndarray
    diverged: bool


def classify_trajectory(traj, anchors: Sequence, radius: float) -> BasinLabel:
    """Basin label for a finished run (its final states and diverged flag)."""
    return classify_basin(_FinalView(traj.final_states, traj.diverged), anchors, radius)


@dataclass
class MonteCarloSummary:
    """Tally of labeled runs plus consensus-error statistics."""

    runs: int
    counts: dict
    seeds: list
    mean_final_consensus_error: float
    max_final_consensus_error: float

    def count(self, label: str) -> int:
        return self.counts.get(label, 0)


def aggregate(runs, anchors: Sequence, radius: float) -> MonteCarloSummary:
    """Classify every trajectory and tally labels; counts always sum to runs."""
    runs = list(runs)
    if not runs:
        raise ValueError("need at least one run")
    counts: dict = {}
    seeds = []
    errors = []
    for traj in runs:
        label = classify_trajectory(traj, anchors, radius).label
        counts[label] = counts.get(label, 0) + 1
        seeds.append(traj.seed)
        errors.append(consensus_error(traj.final_states))
    return MonteCarloSummary(
        runs=len(runs),
        counts=counts,
        seeds=seeds,
        mean_final_consensus_error=float(np.mean(errors)),
        max_final_consensus_error=float(np.max(errors)),
    )
