"""Experiment configuration: parsing, normalization, overrides, and builders.

Configs are TOML (or JSON) trees. Parsing fills defaults and rejects unknown
keys with path-precise messages; the normalized tree round-trips losslessly
through ``to_dict`` and is the unit that gets fingerprinted into run outputs.
"""

from __future__ import annotations

import copy
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import schedule as sched
from .engine import SimConfig
from .graph import Graph, make_cycle, make_from_edges, make_petersen, parse_edge_list
from .noise import (CHANNEL_INIT, GradientNoiseModel, RngStream,
                    bounded_uniform, gaussian, no_noise)
from .objective import AgentObjectives, from_spec

SCHEMA_VERSION = 1

MODES = ("dsgd", "gf", "dgf", "gibbs")
GRAPH_KINDS = ("cycle", "petersen", "edges", "file")
NOISE_KINDS = ("none", "gaussian", "bounded-uniform", "regression-data")
INIT_KINDS = ("constant", "point", "per-agent", "uniform")
VALIDATION_MODES = ("strict", "permissive")
COUPLINGS = ("direct", "lr-scaled")


class ConfigError(ValueError):
    """A configuration that cannot be normalized or built."""


def _err(path: str, message: str) -> ConfigError:
    return ConfigError(f"{path}: {message}")


def _expect_table(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise _err(path, f"expected a table, got {type(value).__name__}")
    return value


def _take_scalar(table: dict, key: str, path: str, kinds, default=None, required=False):
    if key not in table:
        if required:
            raise _err(f"{path}.{key}", "missing required key")
        return default
    value = table.pop(key)
    if kinds is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kinds is int and isinstance(value, bool):
        raise _err(f"{path}.{key}", "expected an integer, got a boolean")
    if not isinstance(value, kinds):
        want = kinds.__name__ if isinstance(kinds, type) else "/".join(k.__name__ for k in kinds)
        raise _err(f"{path}.{key}", f"expected {want}, got {type(value).__name__}")
    return value


def _reject_unknown(table: dict, path: str):
    if table:
        raise _err(path, f"unknown key(s): {', '.join(sorted(table))}")


def _norm_schedule(raw, path: str) -> dict:
    raw = dict(_expect_table(raw, path))
    law = _take_scalar(raw, "law", path, str, required=True)
    out = {"law": law, "c": _take_scalar(raw, "c", path, float, required=True)}
    if law == "power":
        out["tau"] = _take_scalar(raw, "tau", path, float, required=True)
        out["k0"] = _take_scalar(raw, "k0", path, int, default=1)
    elif law in ("exponential", "exp-sqrt"):
        out["r"] = _take_scalar(raw, "r", path, float, required=True)
    elif law == "annealing":
        out["k0"] = _take_scalar(raw, "k0", path, int, default=sched.MIN_ANNEALING_OFFSET)
    elif law == "constant":
        pass
    else:
        raise _err(f"{path}.law", f"unknown law {law!r}")
    _reject_unknown(raw, path)
    return out


def _norm_point(value, path: str) -> list:
    if not isinstance(value, list) or not value or \
            not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise _err(path, "expected a non-empty list of numbers")
    return [float(v) for v in value]


def normalize(raw: dict) -> dict:
    """Validate a parsed config tree and fill defaults."""
    raw = copy.deepcopy(_expect_table(raw, "<root>"))
    out: dict = {}
    out["schema_version"] = _take_scalar(raw, "schema_version", "<root>", int,
                                         default=SCHEMA_VERSION)
    if out["schema_version"] != SCHEMA_VERSION:
        raise _err("schema_version", f"unsupported version {out['schema_version']}")
    out["name"] = _take_scalar(raw, "name", "<root>", str, default="experiment")
    out["mode"] = _take_scalar(raw, "mode", "<root>", str, default="dsgd")
    if out["mode"] not in MODES:
        raise _err("mode", f"must be one of {MODES}, got {out['mode']!r}")

    out["objective"] = _take_scalar(raw, "objective", "<root>", str, required=True)

    graph = dict(_expect_table(raw.pop("graph", {"kind": "cycle", "n": 4}), "graph"))
    kind = _take_scalar(graph, "kind", "graph", str, required=True)
    if kind not in GRAPH_KINDS:
        raise _err("graph.kind", f"must be one of {GRAPH_KINDS}, got {kind!r}")
    gout = {"kind": kind}
    # n is tolerated (and ignored) for kinds that do not need it, so sweeps
    # can switch graph.kind without rewriting the table
    n = _take_scalar(graph, "n", "graph", int, default=None)
    if kind == "cycle":
        if n is None:
            raise _err("graph.n", "missing required key")
        gout["n"] = n
    elif kind == "edges":
        if n is None:
            raise _err("graph.n", "missing required key")
        gout["n"] = n
        edges = graph.pop("edges", None)
        if not isinstance(edges, list):
            raise _err("graph.edges", "expected a list of [i, j] pairs")
        pairs = []
        for e in edges:
            if not (isinstance(e, list) and len(e) == 2 and
                    all(isinstance(v, int) for v in e)):
                raise _err("graph.edges", f"expected [i, j] integer pairs, got {e!r}")
            pairs.append([e[0], e[1]])
        gout["edges"] = pairs
    elif kind == "file":
        gout["path"] = _take_scalar(graph, "path", "graph", str, required=True)
    _reject_unknown(graph, "graph")
    out["graph"] = gout

    weights = dict(_expect_table(raw.pop("weights", {}), "weights"))
    wout = {}
    for part, default in (("alpha", None), ("beta", {"law": "constant", "c": 0.0}),
                          ("gamma", {"law": "constant", "c": 0.0})):
        if part in weights:
            wout[part] = _norm_schedule(weights.pop(part), f"weights.{part}")
        elif default is not None:
            wout[part] = dict(default)
        elif out["mode"] in ("dsgd", "dgf"):
            raise _err(f"weights.{part}", "missing required table")
    _reject_unknown(weights, "weights")
    out["weights"] = wout

    noise = dict(_expect_table(raw.pop("noise", {"kind": "none"}), "noise"))
    nkind = _take_scalar(noise, "kind", "noise", str, default="none")
    if nkind not in NOISE_KINDS:
        raise _err("noise.kind", f"must be one of {NOISE_KINDS}, got {nkind!r}")
    nout = {"kind": nkind, "batch": _take_scalar(noise, "batch", "noise", int, default=1)}
    if nkind == "gaussian":
        nout["sigma"] = _take_scalar(noise, "sigma", "noise", float, required=True)
    elif nkind == "bounded-uniform":
        nout["bound"] = _take_scalar(noise, "bound", "noise", float, required=True)
    _reject_unknown(noise, "noise")
    out["noise"] = nout

    init = dict(_expect_table(raw.pop("init", {"kind": "constant", "value": 0.0}), "init"))
    ikind = _take_scalar(init, "kind", "init", str, required=True)
    if ikind not in INIT_KINDS:
        raise _err("init.kind", f"must be one of {INIT_KINDS}, got {ikind!r}")
    iout = {"kind": ikind}
    if ikind == "constant":
        iout["value"] = _take_scalar(init, "value", "init", float, default=0.0)
    elif ikind == "point":
        iout["point"] = _norm_point(init.pop("point", None), "init.point")
    elif ikind == "per-agent":
        points = init.pop("points", None)
        if not isinstance(points, list) or not points:
            raise _err("init.points", "expected a list of points")
        iout["points"] = [_norm_point(p, "init.points") for p in points]
    elif ikind == "uniform":
        iout["low"] = _take_scalar(init, "low", "init", float, required=True)
        iout["high"] = _take_scalar(init, "high", "init", float, required=True)
        if not iout["low"] < iout["high"]:
            raise _err("init", "uniform init needs low < high")
    _reject_unknown(init, "init")
    out["init"] = iout

    run = dict(_expect_table(raw.pop("run", {}), "run"))
    rout = {
        "steps": _take_scalar(run, "steps", "run", int, default=1000),
        "seed": _take_scalar(run, "seed", "run", int, default=0),
        "runs": _take_scalar(run, "runs", "run", int, default=1),
        "record_every": _take_scalar(run, "record_every", "run", int, default=1),
        "divergence_radius": _take_scalar(run, "divergence_radius", "run", float,
                                          default=1e8),
        "jobs": _take_scalar(run, "jobs", "run", int, default=1),
        "validation": _take_scalar(run, "validation", "run", str, default="strict"),
        "coupling": _take_scalar(run, "coupling", "run", str, default="direct"),
    }
    if rout["validation"] not in VALIDATION_MODES:
        raise _err("run.validation", f"must be one of {VALIDATION_MODES}")
    if rout["coupling"] not in COUPLINGS:
        raise _err("run.coupling", f"must be one of {COUPLINGS}")
    for key in ("steps", "runs", "record_every", "jobs"):
        if rout[key] < 1:
            raise _err(f"run.{key}", "must be >= 1")
    _reject_unknown(run, "run")
    out["run"] = rout

    analysis = dict(_expect_table(raw.pop("analysis", {}), "analysis"))
    anchors = analysis.pop("anchors", [])
    aout = {"anchors": [], "radius": _take_scalar(analysis, "radius", "analysis",
                                                  float, default=0.25)}
    if not isinstance(anchors, list):
        raise _err("analysis.anchors", "expected an array of tables")
    for i, anchor in enumerate(anchors):
        anchor = dict(_expect_table(anchor, f"analysis.anchors[{i}]"))
        point = _norm_point(anchor.pop("point", None), f"analysis.anchors[{i}].point")
        label = _take_scalar(anchor, "label", f"analysis.anchors[{i}]", str, required=True)
        _reject_unknown(anchor, f"analysis.anchors[{i}]")
        aout["anchors"].append({"point": point, "label": label})
    if aout["radius"] <= 0:
        raise _err("analysis.radius", "must be positive")
    _reject_unknown(analysis, "analysis")
    out["analysis"] = aout

    if out["mode"] in ("gf", "dgf") or "flow" in raw:
        flow = dict(_expect_table(raw.pop("flow", {}), "flow"))
        fout = {
            "t0": _take_scalar(flow, "t0", "flow", float, default=0.0),
            "t_end": _take_scalar(flow, "t_end", "flow", float, required=True),
            "h": _take_scalar(flow, "h", "flow", float, default=1e-3),
        }
        _reject_unknown(flow, "flow")
        out["flow"] = fout

    if out["mode"] == "gibbs" or "gibbs" in raw:
        gibbs = dict(_expect_table(raw.pop("gibbs", {}), "gibbs"))
        epsilons = gibbs.pop("epsilons", None)
        if not isinstance(epsilons, list) or not epsilons or \
                not all(isinstance(e, (int, float)) and not isinstance(e, bool) and e > 0
                        for e in epsilons):
            raise _err("gibbs.epsilons", "expected a non-empty list of positive numbers")
        bout = {
            "epsilons": [float(e) for e in epsilons],
            "lo": _take_scalar(gibbs, "lo", "gibbs", float, required=True),
            "hi": _take_scalar(gibbs, "hi", "gibbs", float, required=True),
            "step": _take_scalar(gibbs, "step", "gibbs", float, default=1e-3),
            "mass_radius": _take_scalar(gibbs, "mass_radius", "gibbs", float, default=0.1),
        }
        _reject_unknown(gibbs, "gibbs")
        out["gibbs"] = bout

    output = dict(_expect_table(raw.pop("output", {}), "output"))
    out["output"] = {"dir": _take_scalar(output, "dir", "output", str, default="")}
    _reject_unknown(output, "output")

    _reject_unknown(raw, "<root>")
    return out


def load_raw(path) -> dict:
    path = Path(path)
    try:
        text = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if path.suffix == ".json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    try:
        return tomllib.loads(text.decode())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from exc


def parse_override_value(raw: str):
    low = raw.strip()
    if low.lower() in ("true", "false"):
        return low.lower() == "true"
    try:
        return int(low)
    except ValueError:
        pass
    try:
        return float(low)
    except ValueError:
        return low


def apply_override(tree: dict, dotted: str, value) -> None:
    """Set an existing config path like ``weights.gamma.c``; unknown paths fail."""
    parts = dotted.split(".")
    node = tree
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"unknown config path {dotted!r}")
        node = node[part]
    leaf = parts[-1]
    if not isinstance(node, dict) or leaf not in node:
        raise ConfigError(f"unknown config path {dotted!r}")
    node[leaf] = value


def apply_overrides(tree: dict, pairs) -> dict:
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep:
            raise ConfigError(f"override must look like path=value, got {pair!r}")
        apply_override(tree, key.strip(), parse_override_value(raw))
    return tree


def _build_schedule(spec: dict) -> sched.Schedule:
    law = spec["law"]
    if spec["c"] == 0.0:
        # a zero coefficient disables the term whatever the law says
        return sched.constant(0.0)
    try:
        if law == "power":
            return sched.power(spec["c"], spec["tau"], spec.get("k0", 1))
        if law == "exponential":
            return sched.exponential(spec["c"], spec["r"])
        if law == "exp-sqrt":
            return sched.exp_sqrt(spec["c"], spec["r"])
        if law == "annealing":
            return sched.annealing(spec["c"], spec.get("k0", sched.MIN_ANNEALING_OFFSET))
        return sched.constant(spec["c"])
    except ValueError as exc:
        raise ConfigError(f"invalid schedule {spec!r}: {exc}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    """A normalized config tree with typed builders for the simulation objects."""

    data: dict

    @classmethod
    def from_raw(cls, raw: dict) -> "ExperimentConfig":
        return cls(normalize(raw))

    @classmethod
    def load(cls, path, overrides=()) -> "ExperimentConfig":
        tree = normalize(load_raw(path))
        if overrides:
            tree = normalize(apply_overrides(tree, overrides))
        return cls(tree)

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def with_override(self, dotted: str, value) -> "ExperimentConfig":
        tree = self.to_dict()
        apply_override(tree, dotted, value)
        return ExperimentConfig(normalize(tree))

    def fingerprint(self) -> str:
        blob = json.dumps(self.data, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    # -- typed accessors -------------------------------------------------
    @property
    def name(self) -> str:
        return self.data["name"]

    @property
    def mode(self) -> str:
        return self.data["mode"]

    @property
    def run(self) -> dict:
        return self.data["run"]

    @property
    def out_dir(self) -> str:
        return self.data["output"]["dir"]

    def build_graph(self) -> Graph:
        g = self.data["graph"]
        try:
            if g["kind"] == "cycle":
                return make_cycle(g["n"])
            if g["kind"] == "petersen":
                return make_petersen()
            if g["kind"] == "edges":
                return make_from_edges(g["n"], [tuple(e) for e in g["edges"]])
            return parse_edge_list(Path(g["path"]).read_text())
        except (ValueError, OSError) as exc:
            raise ConfigError(f"graph: {exc}") from exc

    def build_weights(self) -> sched.WeightTriple:
        w = self.data["weights"]
        try:
            return sched.WeightTriple(_build_schedule(w["alpha"]),
                                      _build_schedule(w["beta"]),
                                      _build_schedule(w["gamma"]))
        except ValueError as exc:
            raise ConfigError(f"weights: {exc}") from exc

    def build_objectives(self, n_agents: int) -> AgentObjectives:
        try:
            bundle = from_spec(self.data["objective"], n_agents)
        except ValueError as exc:
            raise ConfigError(f"objective: {exc}") from exc
        is_regression = bundle.data is not None
        declares_regression = self.data["noise"]["kind"] == "regression-data"
        if is_regression != declares_regression:
            raise ConfigError(
                "noise.kind 'regression-data' and the robust_regression objective "
                "must be used together")
        return bundle

    def build_noise_model(self) -> GradientNoiseModel:
        n = self.data["noise"]
        if n["kind"] == "gaussian":
            return gaussian(n["sigma"])
        if n["kind"] == "bounded-uniform":
            return bounded_uniform(n["bound"])
        return no_noise()

    def anchors(self):
        return [(np.asarray(a["point"]), a["label"])
                for a in self.data["analysis"]["anchors"]]

    @property
    def radius(self) -> float:
        return self.data["analysis"]["radius"]

    def initial_states(self, n_agents: int, dim: int, seed: int) -> np.ndarray:
        """Per-run initial network state; the uniform kind draws one shared
        point per run from the init channel of the run's stream."""
        init = self.data["init"]
        if init["kind"] == "constant":
            return np.full((n_agents, dim), init["value"], dtype=np.float64)
        if init["kind"] == "point":
            point = np.asarray(init["point"], dtype=np.float64)
            if point.shape != (dim,):
                raise ConfigError(f"init.point must have length {dim}")
            return np.tile(point, (n_agents, 1))
        if init["kind"] == "per-agent":
            points = np.asarray(init["points"], dtype=np.float64)
            if points.shape != (n_agents, dim):
                raise ConfigError(f"init.points must have shape ({n_agents}, {dim})")
            return points.copy()
        u = RngStream(seed).uniforms(CHANNEL_INIT, 0, 0, dim)
        point = init["low"] + (init["high"] - init["low"]) * u
        return np.tile(point, (n_agents, 1))

    def build_sim_config(self, seed: int) -> SimConfig:
        graph = self.build_graph()
        objectives = self.build_objectives(graph.n_vertices)
        run = self.run
        return SimConfig(
            graph=graph,
            objectives=objectives,
            weights=self.build_weights(),
            init=self.initial_states(graph.n_vertices, objectives.dimension, seed),
            steps=run["steps"],
            noise=self.build_noise_model(),
            batch=self.data["noise"]["batch"],
            divergence_radius=run["divergence_radius"],
            record_every=run["record_every"],
            coupling=run["coupling"],
        )
