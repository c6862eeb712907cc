"""Scenario-driven batch runner and compiler front end.

Subcommands:

* ``run --scenario PATH --out DIR [--grid-n N] [--seed S] [--trace] [--figures]``
  executes a declarative scenario and writes CSV outputs plus a ``report.txt``
  listing every check with pass/fail and measured values.
* ``compile --matrix a,b,c,d [--displace t,s] --k VALUE [--f-prime F] --out DIR``
  factors a symplectic target into gates and emits the optical layout table
  plus the recomposition residual.
* ``validate --profile fast|full [--out DIR]`` runs the oracle cross-check
  suite and writes a machine-readable JSON report.

Exit codes: 0 success, 1 schema/execution error, 2 tolerance-check failure.
Identical scenario + seed reproduce bit-identical output files; every
numeric written to CSV/JSON is checked finite.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .entangle import (
    LinkedState,
    build_cluster,
    dof_moments,
    fwm_entangle,
    measure_position,
    measure_quadrature,
    nullifier_variance,
    spdc_state,
)
from .errors import CvPhotonError, ScenarioError
from .gates import GateProgram, apply_program
from .scenario import Scenario, load_scenario
from .symplectic import RayMatrix, decompose_to_gates, layout_of
from .wavefield import (
    BipartiteWaveFunction,
    Grid1D,
    SampledWaveFunction1D,
    ScaleContext,
    as_representation,
    convert_axis,
    make_gaussian,
    make_hermite_gauss,
    moments,
    overlap,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CHECK_FAILED = 2


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _require_finite(values, context: str):
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ScenarioError(f"{context}: non-finite numeric output")


def _write_csv(path: Path, header: str, columns):
    columns = [np.asarray(c) for c in columns]
    for c in columns:
        _require_finite(c, str(path.name))
    lines = [header]
    for row in zip(*columns):
        lines.append(",".join(_fmt(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_matrix_csv(path: Path, matrix: np.ndarray):
    _require_finite(matrix, str(path.name))
    lines = [",".join(_fmt(float(v)) for v in row) for row in np.asarray(matrix)]
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# run

class _RunContext:
    def __init__(self, scenario: Scenario, out_dir: Path, figures: bool, trace: bool):
        self.scenario = scenario
        self.out = out_dir
        self.figures = figures
        self.trace = trace
        self.report_lines: list[str] = []
        self.checks: list[tuple[str, bool, str]] = []

    def check(self, name: str, passed: bool, detail: str):
        self.checks.append((name, passed, detail))

    def line(self, text: str):
        self.report_lines.append(text)


def _build_initial(sc: Scenario):
    kind, p = sc.initial_kind, sc.initial_params
    if kind == "gaussian":
        return make_gaussian(sc.grid, p["center_x"], p["center_p"], p["width"], sc.scale)
    if kind == "hermite_gauss":
        return make_hermite_gauss(sc.grid, p["order"], sc.scale)
    if kind == "epr":
        return fwm_entangle(
            p["q_total"], p["sigma_corr"], p["sigma_env"], sc.grid, sc.grid, sc.scale,
            tuple(p["labels"]),
        )
    if kind == "spdc":
        return spdc_state(p["pump"], sc.grid, sc.grid, sc.scale, tuple(p["labels"]))
    if kind == "cluster":
        return build_cluster(p["spec"], sc.grid, sc.scale, p["realization"])
    raise ScenarioError(f"initial_state.kind: unsupported {kind!r}")


def _state_labels(state) -> tuple[str, ...]:
    if isinstance(state, SampledWaveFunction1D):
        return ("psi",)
    if isinstance(state, BipartiteWaveFunction):
        return state.dof_labels
    if isinstance(state, LinkedState):
        return state.dof_labels
    return ()


def _resolve_dof(state, dof: str, where: str):
    labels = _state_labels(state)
    if dof not in labels:
        raise ScenarioError(f"{where}: unknown DOF {dof!r}; state has {list(labels)}")


def _run_measurements(ctx: _RunContext, state, seed_override):
    sc = ctx.scenario
    for i, m in enumerate(sc.measurements):
        where = f"measurements[{i}]"
        if state is None:
            raise ScenarioError(f"{where}: no DOF left to measure")
        _resolve_dof(state, m.dof, f"{where}.dof")
        rng = None
        outcome = m.outcome
        if m.sample:
            seed = seed_override if seed_override is not None else m.seed
            rng = np.random.default_rng(seed + i if seed_override is not None else seed)
        try:
            if m.kind == "position":
                result = measure_position(state, m.dof, outcome, rng)
            else:
                result = measure_quadrature(state, m.dof, m.theta, m.f, outcome, rng)
        except CvPhotonError as err:
            raise ScenarioError(f"{where}: {err}") from err
        state = result.state
        ctx.line(
            f"{where}: dof={m.dof} kind={m.kind} outcome={_fmt(result.outcome)} "
            f"density={_fmt(result.density)}"
        )
    return state


def _marginal_of(state, dof: str, representation: str, where: str):
    if isinstance(state, SampledWaveFunction1D):
        s = as_representation(state, representation)
        return s.coordinates, s.amplitudes
    if isinstance(state, BipartiteWaveFunction):
        s = convert_axis(state, dof, representation)
        coords, rho = s.marginal(dof)
        return coords, rho  # density only; no single-DOF amplitude exists
    if isinstance(state, LinkedState):
        idx, _ = state.locate(dof)
        comp = state.components[idx]
        if representation != "position" and state.links_touching(dof):
            raise ScenarioError(
                f"{where}: wavevector marginal of a CZ-linked DOF needs the dense joint state"
            )
        return _marginal_of(comp, dof, representation, where)
    raise ScenarioError(f"{where}: no marginal for state type {type(state).__name__}")


def _moments_of(state, dof: str, where: str):
    if isinstance(state, SampledWaveFunction1D):
        return moments(state)
    if isinstance(state, BipartiteWaveFunction):
        return dof_moments(state, dof)
    if isinstance(state, LinkedState):
        idx, _ = state.locate(dof)
        labels = state.component_labels[idx]
        if any(state.links_touching(l) for l in labels):
            raise ScenarioError(
                f"{where}: moments of a CZ-linked component are not defined without the "
                f"dense joint state; measure the linked partners first"
            )
        return _moments_of(state.components[idx], dof, where)
    raise ScenarioError(f"{where}: no moments for state type {type(state).__name__}")


def _emit_outputs(ctx: _RunContext, state, initial, post_program):
    sc = ctx.scenario
    for i, spec in enumerate(sc.outputs):
        where = f"outputs[{i}]"
        if spec.kind == "marginal":
            _resolve_dof(state, spec.dof, f"{where}.dof")
            coords, data = _marginal_of(state, spec.dof, spec.representation, where)
            path = ctx.out / f"marginal_{spec.dof}_{spec.representation}.csv"
            if np.iscomplexobj(data):
                _write_csv(
                    path, "coordinate,real,imag,abs2",
                    [coords, data.real, data.imag, np.abs(data) ** 2],
                )
            else:
                zeros = np.zeros_like(coords)
                _write_csv(path, "coordinate,real,imag,abs2", [coords, zeros, zeros, data])
            if ctx.figures:
                from . import plotting

                dens = np.abs(data) ** 2 if np.iscomplexobj(data) else data
                plotting.save_marginal(
                    ctx.out / f"marginal_{spec.dof}_{spec.representation}.png",
                    coords, dens, spec.dof, spec.representation,
                )
        elif spec.kind == "moments":
            _resolve_dof(state, spec.dof, f"{where}.dof")
            ms = _moments_of(state, spec.dof, where)
            path = ctx.out / f"moments_{spec.dof}.csv"
            _write_csv(
                path, "mean_x,mean_p,var_x,var_p,cov_xp",
                [[ms.mean[0]], [ms.mean[1]], [ms.var_x], [ms.var_p], [ms.cov_xp]],
            )
            ctx.line(
                f"{where}: dof={spec.dof} mean_x={_fmt(ms.mean[0])} mean_p={_fmt(ms.mean[1])} "
                f"var_x={_fmt(ms.var_x)} var_p={_fmt(ms.var_p)} cov_xp={_fmt(ms.cov_xp)}"
            )
            if ctx.figures:
                from . import plotting

                plotting.save_moment_ellipse(ctx.out / f"moments_{spec.dof}.png", ms, spec.dof)
        elif spec.kind == "phase_surface":
            if not isinstance(state, BipartiteWaveFunction):
                raise ScenarioError(f"{where}: phase_surface needs a two-DOF state")
            mag = np.abs(state.amplitudes)
            phase = np.angle(state.amplitudes)
            _write_matrix_csv(ctx.out / "phase_surface_magnitude.csv", mag)
            _write_matrix_csv(ctx.out / "phase_surface_phase.csv", phase)
            if ctx.figures:
                from . import plotting

                plotting.save_phase_surface(
                    ctx.out / "phase_surface_magnitude.png",
                    ctx.out / "phase_surface_phase.png",
                    mag, phase, state.dof_labels,
                )
        elif spec.kind == "nullifiers":
            _emit_nullifiers(ctx, spec, where)
        elif spec.kind == "fidelity_vs":
            if not isinstance(post_program, SampledWaveFunction1D):
                raise ScenarioError(f"{where}: fidelity_vs applies to single-DOF states")
            fid = abs(overlap(initial, post_program)) ** 2
            threshold = (
                spec.min_fidelity
                if spec.min_fidelity is not None
                else 1.0 - sc.tolerances["fidelity"]
            )
            ok = fid >= threshold
            ctx.check(
                "fidelity_vs_initial", ok, f"value={_fmt(fid)} threshold={_fmt(threshold)}"
            )


def _emit_nullifiers(ctx: _RunContext, spec, where: str):
    sc = ctx.scenario
    if sc.initial_kind != "cluster":
        raise ScenarioError(f"{where}: nullifiers need a cluster initial state")
    cluster_spec = sc.initial_params["spec"]
    realization = sc.initial_params["realization"]
    nodes = cluster_spec.nodes
    table = {node: [] for node in nodes}
    for w_p in spec.ladder:
        spec_w = replace(cluster_spec, node_squeezing=w_p)
        state_w = build_cluster(spec_w, sc.grid, sc.scale, realization)
        for node in nodes:
            neighbors = []
            weights = []
            for a, b, g in cluster_spec.edges:
                if a == node:
                    neighbors.append(b)
                    weights.append(g)
                elif b == node:
                    neighbors.append(a)
                    weights.append(g)
            table[node].append(nullifier_variance(state_w, node, neighbors, weights))

    header = "node," + ",".join(f"w_p={_fmt(w)}" for w in spec.ladder)
    lines = [header]
    for node in nodes:
        _require_finite(table[node], f"{where} nullifiers")
        lines.append(node + "," + ",".join(_fmt(v) for v in table[node]))
    (ctx.out / "nullifiers.csv").write_text("\n".join(lines) + "\n")

    if len(spec.ladder) > 1:
        margin = sc.tolerances["nullifier_monotonic"]
        decreasing = all(
            table[node][i + 1] < table[node][i] - margin
            for node in nodes
            for i in range(len(spec.ladder) - 1)
        )
        ctx.check(
            "nullifiers_strictly_decreasing", decreasing,
            "across ladder " + ",".join(_fmt(w) for w in spec.ladder),
        )
    for node in nodes:
        ctx.line(f"{where}: node={node} variances=" + ",".join(_fmt(v) for v in table[node]))
    if ctx.figures:
        from . import plotting

        plotting.save_nullifier_ladder(ctx.out / "nullifiers.png", spec.ladder, table)


def _write_report(ctx: _RunContext, scenario_path: str, effective: dict, exit_code: int):
    lines = ["# cvphoton run report", f"scenario: {scenario_path}"]
    lines.append("[effective]")
    for key, value in effective.items():
        lines.append(f"{key}: {_fmt(value)}")
    lines.append("[log]")
    lines.extend(ctx.report_lines)
    lines.append("[checks]")
    for name, passed, detail in ctx.checks:
        lines.append(f"{name}: {'PASS' if passed else 'FAIL'} {detail}")
    result = "PASS" if all(p for _, p, _ in ctx.checks) else "FAIL"
    lines.append(f"result: {result}")
    lines.append(f"exit_code: {exit_code}")
    (ctx.out / "report.txt").write_text("\n".join(lines) + "\n")


def run_command(args) -> int:
    scenario_path = Path(args.scenario)
    out_dir = Path(args.out)
    try:
        sc = load_scenario(scenario_path)
        if args.grid_n is not None:
            sc = replace(sc, grid=Grid1D(args.grid_n, sc.grid.half_extent))
        out_dir.mkdir(parents=True, exist_ok=True)
        ctx = _RunContext(sc, out_dir, args.figures, args.trace)

        initial = _build_initial(sc)
        post_program = initial
        if sc.program:
            if not isinstance(initial, SampledWaveFunction1D):
                raise ScenarioError("program: gate programs apply to single-DOF states")
            program = GateProgram(sc.program, sc.scale)
            if args.trace:
                post_program, steps = apply_program(initial, program, trace=True)
                for st in steps:
                    ctx.line(
                        f"trace step {st.index} ({st.kind}): norm={_fmt(st.norm)} "
                        f"mean_x={_fmt(st.moments.mean[0])} mean_p={_fmt(st.moments.mean[1])} "
                        f"var_x={_fmt(st.moments.var_x)} var_p={_fmt(st.moments.var_p)}"
                    )
            else:
                post_program = apply_program(initial, program)

        state = _run_measurements(ctx, post_program, args.seed)
        _emit_outputs(ctx, state, initial, post_program)

        effective = {
            "grid.n": sc.grid.num_samples,
            "grid.half_extent": sc.grid.half_extent,
            "scale.k": sc.scale.wavenumber_k,
            "scale.d": sc.scale.scale_d,
            "seed_override": args.seed,
            "trace": args.trace,
            "figures": args.figures,
        }
        exit_code = EXIT_OK if all(p for _, p, _ in ctx.checks) else EXIT_CHECK_FAILED
        _write_report(ctx, str(scenario_path), effective, exit_code)
        return exit_code
    except CvPhotonError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR


# ---------------------------------------------------------------------------
# compile

def compile_command(args) -> int:
    try:
        entries = [float(v) for v in args.matrix.split(",")]
        if len(entries) != 4:
            raise ValueError("expected four comma-separated entries a,b,c,d")
        displacement = np.zeros(2)
        if args.displace:
            parts = [float(v) for v in args.displace.split(",")]
            if len(parts) != 2:
                raise ValueError("--displace expects t,s")
            displacement = np.array(parts)
        scale = ScaleContext.from_fractional_focal(args.k, args.f_prime)
        target = RayMatrix(np.array(entries).reshape(2, 2), displacement)
    except (ValueError, CvPhotonError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        program = decompose_to_gates(target, scale)
        layout = layout_of(program, scale)
        from .symplectic import abcd_of_program, layout_to_table

        recomposed = abcd_of_program(program)
        residual = float(np.linalg.norm(recomposed.m - target.m))
        _require_finite([residual], "compile residual")
        (out_dir / "layout.txt").write_text(layout_to_table(layout))
        report = [
            "# cvphoton compile report",
            f"target_matrix: {','.join(_fmt(v) for v in entries)}",
            f"displacement: {_fmt(float(displacement[0]))},{_fmt(float(displacement[1]))}",
            f"k: {_fmt(float(args.k))}",
            f"f_prime: {_fmt(float(args.f_prime))}",
            "program: " + "; ".join(_describe_gate(g) for g in program.gates),
            f"elements: {len(layout.elements)}",
            f"total_length_m: {_fmt(layout.total_length)}",
            f"recomposition_residual: {_fmt(residual)}",
        ]
        ok = residual <= 1e-9
        report.append(f"result: {'PASS' if ok else 'FAIL'}")
        (out_dir / "compile_report.txt").write_text("\n".join(report) + "\n")
        print(f"residual {residual:.3e}; layout written to {out_dir / 'layout.txt'}")
        return EXIT_OK if ok else EXIT_CHECK_FAILED
    except CvPhotonError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR


def _describe_gate(g) -> str:
    fields = {
        "propagate": ("z",), "lens": ("f",), "fourier": (), "frft": ("theta",),
        "squeeze": ("f1", "f2"), "pauli_x": ("t",), "pauli_z": ("s",),
        "phase_poly": ("n", "alpha"), "slm_mask": ("mask_id",),
    }[g.kind]
    params = ",".join(f"{f}={_fmt(getattr(g, f))}" for f in fields)
    return f"{g.kind}({params})"


# ---------------------------------------------------------------------------
# validate

def validate_command(args) -> int:
    from .validation import results_to_dict, run_validation

    try:
        results = run_validation(args.profile)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR
    payload = results_to_dict(args.profile, results)
    for check in payload["checks"]:
        _require_finite([check["value"]], check["name"])
        status = "PASS" if check["passed"] else "FAIL"
        print(f"{check['name']}: {status} value={check['value']:.3e} tol={check['tolerance']:.0e}")
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "validate_report.json").write_text(json.dumps(payload, indent=2) + "\n")
    return EXIT_OK if payload["passed"] else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvphoton",
        description="Simulate continuous-variable quantum gates on the transverse "
        "spatial degrees of freedom of paraxial photons.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario file")
    p_run.add_argument("--scenario", required=True, help="path to the YAML scenario")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--grid-n", type=int, default=None, help="override grid.n")
    p_run.add_argument("--seed", type=int, default=None, help="override sampling seeds")
    p_run.add_argument("--trace", action="store_true", help="record per-step norm and moments")
    p_run.add_argument("--figures", action="store_true",
                       help="render PNG figures alongside the CSV outputs")
    p_run.set_defaults(func=run_command)

    p_c = sub.add_parser("compile", help="lower a symplectic target to an optical layout")
    p_c.add_argument("--matrix", required=True, help="row-major a,b,c,d with det = 1")
    p_c.add_argument("--displace", default=None, help="affine displacement t,s")
    p_c.add_argument("--k", type=float, required=True, help="wavenumber [rad/m]")
    p_c.add_argument("--f-prime", type=float, default=0.5,
                     help="pinned fractional focal length d^2 k [m] (default 0.5)")
    p_c.add_argument("--out", required=True, help="output directory")
    p_c.set_defaults(func=compile_command)

    p_v = sub.add_parser("validate", help="run the oracle cross-check suite")
    p_v.add_argument("--profile", choices=("fast", "full"), default="fast")
    p_v.add_argument("--out", default=None, help="directory for validate_report.json")
    p_v.set_defaults(func=validate_command)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
