"""Declarative scenario files: schema, strict validation and construction.

Scenarios are YAML trees with ``version: 1``.  Unknown fields are errors,
not warnings, and every validation error names the offending field (for
list entries, the index).  See README for the full field reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import yaml

from .entangle import ClusterSpec, PumpProfile, fig5_linear_spec, fig5_ring_spec
from .errors import ScenarioError
from .gates import GateDescriptor
from .wavefield import Grid1D, ScaleContext

SCHEMA_VERSION = 1

_DEFAULT_TOLERANCES = {
    "norm": 1e-9,
    "fidelity": 1e-9,
    "nullifier_monotonic": 0.0,
}


def _require_keys(mapping: dict, allowed: set[str], required: set[str], where: str):
    if not isinstance(mapping, dict):
        raise ScenarioError(f"{where}: expected a mapping, got {type(mapping).__name__}")
    unknown = set(mapping) - allowed
    if unknown:
        raise ScenarioError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = required - set(mapping)
    if missing:
        raise ScenarioError(f"{where}: missing required field(s) {sorted(missing)}")


def _number(mapping: dict, key: str, where: str, default=None):
    if key not in mapping:
        if default is not None:
            return default
        raise ScenarioError(f"{where}.{key}: missing")
    v = mapping[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)


@dataclass(frozen=True)
class MeasurementSpec:
    dof: str
    kind: str  # position | quadrature
    theta: float = 0.0
    f: float | None = None
    outcome: float | None = None
    sample: bool = False
    seed: int | None = None


@dataclass(frozen=True)
class OutputSpec:
    kind: str  # marginal | moments | phase_surface | nullifiers | fidelity_vs
    dof: str | None = None
    representation: str = "position"
    ladder: tuple[float, ...] = ()
    ref: str = "initial"
    min_fidelity: float | None = None


@dataclass(frozen=True)
class Scenario:
    """Validated scenario: grid/scale config, initial state spec, gate
    program, measurements, outputs and tolerances."""

    grid: Grid1D
    scale: ScaleContext
    initial_kind: str
    initial_params: dict
    program: tuple[GateDescriptor, ...]
    measurements: tuple[MeasurementSpec, ...]
    outputs: tuple[OutputSpec, ...]
    tolerances: dict
    seed: int | None = None
    trace: bool = False
    source: dict = field(default_factory=dict)


def _parse_grid(node, where="grid") -> Grid1D:
    _require_keys(node, {"n", "half_extent"}, {"n", "half_extent"}, where)
    n = node["n"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise ScenarioError(f"{where}.n: expected an integer, got {n!r}")
    try:
        return Grid1D(n, _number(node, "half_extent", where))
    except ValueError as err:
        raise ScenarioError(f"{where}: {err}") from err


def _parse_scale(node, where="scale") -> ScaleContext:
    _require_keys(node, {"k", "lambda", "d", "f_prime"}, set(), where)
    has_k, has_lam = "k" in node, "lambda" in node
    if has_k == has_lam:
        raise ScenarioError(f"{where}: give exactly one of 'k' or 'lambda'")
    k = _number(node, "k", where) if has_k else 2 * math.pi / _number(node, "lambda", where)
    has_d, has_fp = "d" in node, "f_prime" in node
    if has_d == has_fp:
        raise ScenarioError(f"{where}: give exactly one of 'd' or 'f_prime'")
    try:
        if has_d:
            return ScaleContext(k, _number(node, "d", where))
        return ScaleContext.from_fractional_focal(k, _number(node, "f_prime", where))
    except ValueError as err:
        raise ScenarioError(f"{where}: {err}") from err


_GATE_FIELDS = {
    "propagate": ({"z"}, {"z"}),
    "lens": ({"f"}, {"f"}),
    "fourier": ({"f"}, set()),
    "frft": ({"theta", "f"}, {"theta"}),
    "squeeze": ({"f1", "f2", "mode", "compensate_inversion"}, {"f1", "f2"}),
    "pauli_x": ({"t", "method"}, {"t"}),
    "pauli_z": ({"s"}, {"s"}),
    "phase_poly": ({"n", "alpha"}, {"n", "alpha"}),
    "slm_mask": ({"mask_id"}, {"mask_id"}),
}


def _parse_gate(node, index: int) -> GateDescriptor:
    where = f"program[{index}]"
    if not isinstance(node, dict) or "gate" not in node:
        raise ScenarioError(f"{where}: each entry needs a 'gate' field")
    kind = node["gate"]
    if kind not in _GATE_FIELDS:
        raise ScenarioError(f"{where}.gate: unknown kind {kind!r}")
    allowed, required = _GATE_FIELDS[kind]
    _require_keys(node, allowed | {"gate"}, required | {"gate"}, where)
    params = {k: v for k, v in node.items() if k != "gate"}
    try:
        return GateDescriptor(kind=kind, **params)
    except (TypeError, ValueError) as err:
        raise ScenarioError(f"{where}: {err}") from err


_STATE_FIELDS = {
    "gaussian": ({"center_x", "center_p", "width"}, set()),
    "hermite_gauss": ({"order"}, {"order"}),
    "epr": ({"q_total", "sigma_corr", "sigma_env", "labels"}, set()),
    "spdc": ({"pump", "labels"}, {"pump"}),
    "cluster": ({"topology", "nodes", "edges", "node_squeezing", "realization"}, set()),
}


def _parse_initial(node) -> tuple[str, dict]:
    where = "initial_state"
    if not isinstance(node, dict) or "kind" not in node:
        raise ScenarioError(f"{where}: needs a 'kind' field")
    kind = node["kind"]
    if kind not in _STATE_FIELDS:
        raise ScenarioError(f"{where}.kind: unknown kind {kind!r}")
    allowed, required = _STATE_FIELDS[kind]
    _require_keys(node, allowed | {"kind"}, required | {"kind"}, where)
    params = {k: v for k, v in node.items() if k != "kind"}

    if kind == "gaussian":
        params.setdefault("center_x", 0.0)
        params.setdefault("center_p", 0.0)
        params.setdefault("width", 1.0)
    elif kind == "epr":
        params.setdefault("q_total", 0.0)
        params.setdefault("sigma_corr", 0.1)
        params.setdefault("sigma_env", 10.0)
        params.setdefault("labels", ["x1", "x2"])
    elif kind == "spdc":
        params["pump"] = _parse_pump(params["pump"])
        params.setdefault("labels", ["x1", "x2"])
    elif kind == "cluster":
        params["spec"] = _parse_cluster(params, where)
        params = {"spec": params["spec"], "realization": node.get("realization", "generic")}
    return kind, params


def _parse_pump(node) -> PumpProfile:
    where = "initial_state.pump"
    _require_keys(node, {"kind", "width", "coordinates", "amplitudes"}, {"kind"}, where)
    kind = node["kind"]
    try:
        if kind == "plane_wave":
            return PumpProfile.plane_wave(_number(node, "width", where, default=0.1))
        if kind == "gaussian":
            return PumpProfile.gaussian(_number(node, "width", where))
        if kind == "sampled":
            return PumpProfile.sampled(node["coordinates"], node["amplitudes"])
    except (ValueError, KeyError) as err:
        raise ScenarioError(f"{where}: {err}") from err
    raise ScenarioError(f"{where}.kind: unknown kind {kind!r}")


def _parse_cluster(params: dict, where: str) -> ClusterSpec:
    w_p = params.get("node_squeezing", 0.1)
    topology = params.get("topology")
    if topology is not None:
        if topology == "linear":
            return fig5_linear_spec(w_p)
        if topology == "ring":
            return fig5_ring_spec(w_p)
        raise ScenarioError(f"{where}.topology: unknown topology {topology!r}")
    if "nodes" not in params:
        raise ScenarioError(f"{where}: cluster needs 'topology' or explicit 'nodes'")
    edges = []
    for i, e in enumerate(params.get("edges", [])):
        if not isinstance(e, (list, tuple)) or len(e) not in (2, 3):
            raise ScenarioError(f"{where}.edges[{i}]: expected [a, b] or [a, b, weight]")
        edges.append(tuple(e))
    try:
        return ClusterSpec(tuple(params["nodes"]), tuple(edges), w_p)
    except Exception as err:
        raise ScenarioError(f"{where}: {err}") from err


def _parse_measurement(node, index: int) -> MeasurementSpec:
    where = f"measurements[{index}]"
    _require_keys(
        node, {"dof", "kind", "theta", "f", "outcome", "sample", "seed"}, {"dof", "kind"}, where
    )
    kind = node["kind"]
    if kind not in ("position", "quadrature"):
        raise ScenarioError(f"{where}.kind: unknown kind {kind!r}")
    sample = bool(node.get("sample", False))
    outcome = node.get("outcome")
    if sample == (outcome is not None):
        raise ScenarioError(f"{where}: give exactly one of 'outcome' or 'sample: true'")
    seed = node.get("seed")
    if sample and seed is None:
        raise ScenarioError(f"{where}.seed: required whenever sampling is requested")
    theta = _number(node, "theta", where, default=0.0) if kind == "quadrature" else 0.0
    return MeasurementSpec(
        dof=str(node["dof"]),
        kind=kind,
        theta=theta,
        f=node.get("f"),
        outcome=None if outcome is None else float(outcome),
        sample=sample,
        seed=seed,
    )


def _parse_output(node, index: int) -> OutputSpec:
    where = f"outputs[{index}]"
    if not isinstance(node, dict) or "kind" not in node:
        raise ScenarioError(f"{where}: needs a 'kind' field")
    kind = node["kind"]
    if kind == "marginal":
        _require_keys(node, {"kind", "dof", "representation"}, {"kind", "dof"}, where)
        rep = node.get("representation", "position")
        if rep not in ("position", "wavevector"):
            raise ScenarioError(f"{where}.representation: {rep!r}")
        return OutputSpec(kind=kind, dof=str(node["dof"]), representation=rep)
    if kind == "moments":
        _require_keys(node, {"kind", "dof"}, {"kind", "dof"}, where)
        return OutputSpec(kind=kind, dof=str(node["dof"]))
    if kind == "phase_surface":
        _require_keys(node, {"kind"}, {"kind"}, where)
        return OutputSpec(kind=kind)
    if kind == "nullifiers":
        _require_keys(node, {"kind", "ladder"}, {"kind"}, where)
        ladder = tuple(float(v) for v in node.get("ladder", (0.4, 0.2, 0.1)))
        if len(ladder) < 1:
            raise ScenarioError(f"{where}.ladder: needs at least one squeezing value")
        return OutputSpec(kind=kind, ladder=ladder)
    if kind == "fidelity_vs":
        _require_keys(node, {"kind", "ref", "min"}, {"kind"}, where)
        ref = node.get("ref", "initial")
        if ref != "initial":
            raise ScenarioError(f"{where}.ref: only 'initial' is supported, got {ref!r}")
        m = node.get("min")
        return OutputSpec(kind=kind, ref=ref, min_fidelity=None if m is None else float(m))
    raise ScenarioError(f"{where}.kind: unknown kind {kind!r}")


def parse_scenario(tree: dict) -> Scenario:
    if not isinstance(tree, dict):
        raise ScenarioError("scenario root: expected a mapping")
    _require_keys(
        tree,
        {
            "version",
            "grid",
            "scale",
            "seed",
            "initial_state",
            "program",
            "measurements",
            "outputs",
            "tolerances",
        },
        {"version", "grid", "scale", "initial_state"},
        "scenario",
    )
    if tree["version"] != SCHEMA_VERSION:
        raise ScenarioError(f"version: expected {SCHEMA_VERSION}, got {tree['version']!r}")

    grid = _parse_grid(tree["grid"])
    scale = _parse_scale(tree["scale"])
    kind, params = _parse_initial(tree["initial_state"])

    program = tuple(_parse_gate(g, i) for i, g in enumerate(tree.get("program") or []))
    if program and kind not in ("gaussian", "hermite_gauss"):
        raise ScenarioError("program: gate programs apply to single-DOF initial states only")

    measurements = tuple(
        _parse_measurement(m, i) for i, m in enumerate(tree.get("measurements") or [])
    )
    outputs = tuple(_parse_output(o, i) for i, o in enumerate(tree.get("outputs") or []))

    tolerances = dict(_DEFAULT_TOLERANCES)
    for key, value in (tree.get("tolerances") or {}).items():
        if key not in _DEFAULT_TOLERANCES:
            raise ScenarioError(f"tolerances: unknown field {key!r}")
        tolerances[key] = float(value)

    seed = tree.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ScenarioError(f"seed: expected an integer, got {seed!r}")

    return Scenario(
        grid=grid,
        scale=scale,
        initial_kind=kind,
        initial_params=params,
        program=program,
        measurements=measurements,
        outputs=outputs,
        tolerances=tolerances,
        seed=seed,
        source=tree,
    )


def load_scenario(path) -> Scenario:
    try:
        with open(path, "r") as fh:
            tree = yaml.safe_load(fh)
    except yaml.YAMLError as err:
        raise ScenarioError(f"cannot parse scenario file {path}: {err}") from err
    return parse_scenario(tree)
