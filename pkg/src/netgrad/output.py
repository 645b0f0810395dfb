"""Delimited and JSON output writers with stable, versioned schemas.

Column orders never change within a format version. JSON replaces non-finite
floats with null so files stay standard-compliant even for diverged runs.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1


def jsonable(value):
    """Recursively convert to JSON-safe types; non-finite floats become null."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    body = dict(payload)
    body.setdefault("format_version", FORMAT_VERSION)
    path.write_text(json.dumps(jsonable(body), sort_keys=True, indent=2) + "\n")
    return path


def _write_rows(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def _cell(v):
    if isinstance(v, (np.floating, float)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def state_columns(n_agents: int, dim: int) -> list[str]:
    return [f"x{n}_{j}" for n in range(n_agents) for j in range(dim)]


def write_trajectory_csv(path, traj, n_agents: int, dim: int) -> Path:
    header = ["k"] + state_columns(n_agents, dim) + ["consensus_error"]
    rows = []
    for i, k in enumerate(traj.ks):
        rows.append([int(k)] + list(traj.states[i].reshape(-1)) + [traj.consensus[i]])
    return _write_rows(path, header, rows)


def write_flow_csv(path, flow, *, n_agents: int = 0, dim: int = 0,
                   consensus=None) -> Path:
    """gf flows write (t, x_j...); network flows add per-agent columns and the
    consensus error series."""
    if n_agents:
        header = ["t"] + state_columns(n_agents, dim) + ["consensus_error"]
        rows = [[t] + list(flow.states[i].reshape(-1)) + [consensus[i]]
                for i, t in enumerate(flow.times)]
    else:
        header = ["t"] + [f"x_{j}" for j in range(flow.states.shape[1])]
        rows = [[t] + list(flow.states[i]) for i, t in enumerate(flow.times)]
    return _write_rows(path, header, rows)


def write_runs_csv(path, records, dim: int) -> Path:
    header = (["run", "seed"] + [f"mean_{j}" for j in range(dim)]
              + ["basin", "final_consensus_error"])
    rows = [[r["run"], r["seed"]] + list(r["mean"]) + [r["basin"], r["consensus"]]
            for r in records]
    return _write_rows(path, header, rows)


def write_sweep_csv(path, parameter: str, rows) -> Path:
    header = [parameter, "global_rate", "local_rate", "diverged_rate",
              "unresolved_rate", "mean_consensus_error"]
    return _write_rows(path, header, rows)


def write_density_csv(path, xs, densities: dict) -> Path:
    """densities maps epsilon -> grid density; one column per epsilon."""
    eps = list(densities)
    header = ["x"] + [f"density_eps_{e:g}" for e in eps]
    rows = [[x] + [densities[e][i] for e in eps] for i, x in enumerate(xs)]
    return _write_rows(path, header, rows)
