"""Command-line entry point: JSON configs in, reports and CSV profiles out.

Exit codes: 0 converged/decided, 1 usage errors, 2 infeasible/obstructed
(with the obstruction named), 3 non-convergence, 4 I/O failures.  Reports
are written atomically and embed the conventions hash, so every number is
traceable to the sign conventions that produced it.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import reporting
from .bundles import HiggsConfig
from .errors import (
    ConfigurationError,
    GravortexError,
    InfeasibleError,
    ObstructionError,
)
from .geometry import build_grid, round_metric, write_profile_csv
from .gravitating import (
    ContinuationSchedule,
    c_from_integral_identity,
    c_predictions,
    einstein_bogomolnyi_solve,
    gravitating_residual,
    solve_gravitating,
)
from .obstructions import (
    FutakiInput,
    abelian_futaki_quadrature,
    futaki_closed_form,
    futaki_quadrature,
    stability_check,
)
from .quiver import (
    Arrow,
    Quiver,
    QuiverBundleSpec,
    arrow_profile,
    quiver_vortex_residual,
    trace_identity_check,
)
from .vortex import NewtonOptions, solve_vortex

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_OBSTRUCTED = 2
EXIT_NOT_CONVERGED = 3
EXIT_IO = 4

COMMANDS = (
    "solve-vortex",
    "solve-gravitating",
    "eb-solve",
    "futaki",
    "stability",
    "quiver-check",
    "sweep",
)

OUTPUT_DIR_ENV = "GRAVORTEX_OUT"

_TOP_KEYS = {"command", "problem", "numerics", "output", "sweep"}
_PROBLEM_KEYS = {"degrees", "exponents", "tau", "alpha", "quiver"}
_NUMERICS_KEYS = {"n", "tolerance", "max_iter", "schedule"}
_OUTPUT_KEYS = {"directory", "formats"}
_FLAT_SUGAR = _PROBLEM_KEYS | _NUMERICS_KEYS


class ConfigValidationError(GravortexError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass
class Numerics:
    n: int = 129
    tolerance: float = 1e-10
    max_iter: int = 50
    schedule: tuple[float, ...] | None = None


@dataclass
class OutputSpec:
    directory: str = "."
    formats: tuple[str, ...] = ("json", "csv")


@dataclass
class RunConfig:
    command: str
    problem: dict = field(default_factory=dict)
    numerics: Numerics = field(default_factory=Numerics)
    output: OutputSpec = field(default_factory=OutputSpec)
    sweep: dict | None = None
    override_obstruction: bool = False

    def to_json_dict(self) -> dict:
        out = {
            "command": self.command,
            "problem": dict(self.problem),
            "numerics": {
                "n": self.numerics.n,
                "tolerance": self.numerics.tolerance,
                "max_iter": self.numerics.max_iter,
            },
            "output": {
                "directory": self.output.directory,
                "formats": list(self.output.formats),
            },
        }
        if self.numerics.schedule is not None:
            out["numerics"]["schedule"] = list(self.numerics.schedule)
        if self.sweep is not None:
            out["sweep"] = self.sweep
        return out


def _validate_problem(
    problem: dict, errors: list[str], want_quiver: bool, supplied_later: set | None = None
) -> None:
    unknown = set(problem) - _PROBLEM_KEYS
    for key in sorted(unknown):
        errors.append(f"unknown problem key: {key!r}")
    if want_quiver:
        if "quiver" not in problem:
            errors.append("missing required key: problem.quiver")
        return
    supplied_later = supplied_later or set()
    for key in ("degrees", "exponents", "tau"):
        if key not in problem and key not in supplied_later:
            errors.append(f"missing required key: problem.{key}")
    if "tau" in problem:
        try:
            if not (float(problem["tau"]) > 0):
                errors.append("tau must be positive")
        except (TypeError, ValueError):
            errors.append("tau must be a positive number")
    if "degrees" in problem and "exponents" in problem:
        try:
            HiggsConfig(
                degrees=tuple(problem["degrees"]),
                exponents=tuple(problem["exponents"]),
                tau=float(problem.get("tau", 1.0)) if float(problem.get("tau", 1.0)) > 0 else 1.0,
                alpha=float(problem.get("alpha", 0.0)),
            )
        except (ConfigurationError, TypeError, ValueError) as exc:
            errors.append(str(exc))


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration.

    Flat problem/numerics keys at the top level are accepted as sugar for
    the nested groups.  All validation errors are collected and reported
    together, not just the first.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigValidationError([f"invalid JSON: {exc}"]) from exc
    if not isinstance(raw, dict):
        raise ConfigValidationError(["configuration must be a JSON object"])

    errors: list[str] = []
    unknown = set(raw) - _TOP_KEYS - _FLAT_SUGAR
    for key in sorted(unknown):
        errors.append(f"unknown key: {key!r}")

    command = raw.get("command")
    if command is None:
        errors.append("missing required key: command")
    elif command not in COMMANDS:
        errors.append(f"unknown command: {command!r} (expected one of {', '.join(COMMANDS)})")

    problem = dict(raw.get("problem", {}))
    numerics_raw = dict(raw.get("numerics", {}))
    for key in _PROBLEM_KEYS & set(raw):
        problem.setdefault(key, raw[key])
    for key in _NUMERICS_KEYS & set(raw):
        numerics_raw.setdefault(key, raw[key])

    unknown_numerics = set(numerics_raw) - _NUMERICS_KEYS
    for key in sorted(unknown_numerics):
        errors.append(f"unknown numerics key: {key!r}")

    n = numerics_raw.get("n", 129)
    if not isinstance(n, int) or isinstance(n, bool):
        errors.append("n must be an integer")
    else:
        if n % 2 == 0:
            errors.append("n must be odd")
        if not (33 <= n <= 4097):
            errors.append("n must satisfy 33 <= n <= 4097")
    tolerance = numerics_raw.get("tolerance", 1e-10)
    if not isinstance(tolerance, (int, float)) or tolerance <= 0:
        errors.append("tolerance must be positive")
    max_iter = numerics_raw.get("max_iter", 50)
    if not isinstance(max_iter, int) or max_iter < 1:
        errors.append("max_iter must be a positive integer")
    schedule = numerics_raw.get("schedule")
    if schedule is not None:
        try:
            sched = tuple(float(a) for a in schedule)
            if not sched or sched[0] != 0.0 or any(
                b <= a for a, b in zip(sched, sched[1:])
            ):
                errors.append("schedule must be strictly increasing and start at 0")
        except (TypeError, ValueError):
            errors.append("schedule must be a list of numbers")
            schedule = None

    output_raw = dict(raw.get("output", {}))
    unknown_output = set(output_raw) - _OUTPUT_KEYS
    for key in sorted(unknown_output):
        errors.append(f"unknown output key: {key!r}")
    formats = tuple(output_raw.get("formats", ("json", "csv")))
    for fmt in formats:
        if fmt not in ("json", "csv"):
            errors.append(f"unknown output format: {fmt!r}")

    if command == "sweep":
        sweep = raw.get("sweep")
        if not isinstance(sweep, dict) or "over" not in sweep:
            errors.append("sweep requires a 'sweep' object with an 'over' map")
            swept_keys = set()
        else:
            swept_keys = set(sweep["over"])
        _validate_problem(problem, errors, want_quiver=False, supplied_later=swept_keys)
    elif command == "quiver-check":
        _validate_problem(problem, errors, want_quiver=True)
    elif command in COMMANDS:
        _validate_problem(problem, errors, want_quiver=False)

    if errors:
        raise ConfigValidationError(errors)

    default_dir = os.environ.get(OUTPUT_DIR_ENV, ".")
    return RunConfig(
        command=command,
        problem=problem,
        numerics=Numerics(
            n=n,
            tolerance=float(tolerance),
            max_iter=max_iter,
            schedule=tuple(float(a) for a in schedule) if schedule else None,
        ),
        output=OutputSpec(
            directory=output_raw.get("directory", default_dir), formats=formats
        ),
        sweep=raw.get("sweep"),
    )


def serialize_config(config: RunConfig) -> str:
    return json.dumps(config.to_json_dict(), indent=2, sort_keys=True)


def _higgs_from_problem(problem: dict) -> HiggsConfig:
    return HiggsConfig(
        degrees=tuple(problem["degrees"]),
        exponents=tuple(problem["exponents"]),
        tau=problem["tau"],
        alpha=float(problem.get("alpha", 0.0)),
    )


def _quiver_from_problem(problem: dict) -> QuiverBundleSpec:
    q = problem["quiver"]
    quiver = Quiver(
        vertices=tuple(q["vertices"]),
        arrows=tuple(
            Arrow(name=a["id"], tail=a["tail"], head=a["head"]) for a in q["arrows"]
        ),
    )
    return QuiverBundleSpec(
        quiver=quiver,
        ranks={v: int(r) for v, r in q.get("ranks", {v: 1 for v in q["vertices"]}).items()},
        degrees={v: int(d) for v, d in q["degrees"].items()},
        section_exponents={a["id"]: a.get("exponent") for a in q["arrows"]},
        rho=float(q.get("rho", 1.0)),
        sigma={v: float(x) for v, x in q["sigma"].items()},
        tau={v: float(x) for v, x in q["tau"].items()},
        section_scales={a["id"]: float(a.get("scale", 1.0)) for a in q["arrows"]},
    )


def _want(config: RunConfig, fmt: str) -> bool:
    return fmt in config.output.formats


def _run_solve_vortex(config: RunConfig, report: dict, outdir: str) -> int:
    higgs = _higgs_from_problem(config.problem)
    grid = build_grid(config.numerics.n)
    options = NewtonOptions(
        tolerance=config.numerics.tolerance, max_iter=config.numerics.max_iter
    )
    pot, solve_report = solve_vortex(grid, round_metric(grid), higgs, options)
    report["solver"] = solve_report.to_json_dict()
    if _want(config, "csv"):
        path = os.path.join(outdir, "vortex_v.csv")
        write_profile_csv(path, grid.nodes, pot.v, header="s,v")
        report["outputs"].append(path)
    if not solve_report.converged:
        report["status"] = "not_converged"
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _run_solve_gravitating(config: RunConfig, report: dict, outdir: str) -> int:
    higgs = _higgs_from_problem(config.problem)
    grid = build_grid(config.numerics.n)
    schedule = ContinuationSchedule(
        alphas=config.numerics.schedule or (0.0,),
        newton=NewtonOptions(
            tolerance=config.numerics.tolerance, max_iter=config.numerics.max_iter
        ),
    )
    state, cont = solve_gravitating(
        higgs, schedule, grid, override_obstruction=config.override_obstruction
    )
    r1, r2, c_est = gravitating_residual(grid, state, higgs)
    report["continuation"] = cont.to_json_dict()
    report["solver"] = cont.final_solve_report().to_json_dict()
    report["checks"] = {
        "c_est": c_est,
        "c_identity": c_from_integral_identity(grid, state, higgs),
        "c_predictions": c_predictions(higgs, state.alpha),
        "residual_sup": max(float(np.abs(r1).max()), float(np.abs(r2).max())),
    }
    if _want(config, "csv"):
        for k, step in enumerate(cont.steps):
            if step.u is None:
                continue
            for name, values in (("u", step.u), ("v", step.v)):
                path = os.path.join(outdir, f"gravitating_{name}_step{k:02d}.csv")
                write_profile_csv(path, grid.nodes, values, header=f"s,{name}")
                report["outputs"].append(path)
        for name, values in (("u", state.metric.u), ("v", state.bundle.v)):
            path = os.path.join(outdir, f"gravitating_{name}.csv")
            write_profile_csv(path, grid.nodes, values, header=f"s,{name}")
            report["outputs"].append(path)
    if not cont.converged:
        report["status"] = "not_converged"
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _run_eb_solve(config: RunConfig, report: dict, outdir: str) -> int:
    higgs = _higgs_from_problem(config.problem)
    grid = build_grid(config.numerics.n)
    result = einstein_bogomolnyi_solve(
        higgs,
        grid,
        newton=NewtonOptions(
            tolerance=config.numerics.tolerance, max_iter=config.numerics.max_iter
        ),
        override_obstruction=config.override_obstruction,
    )
    report["einstein_bogomolnyi"] = result.to_json_dict()
    if _want(config, "csv"):
        for name, values in (("u", result.state.metric.u), ("v", result.state.bundle.v)):
            path = os.path.join(outdir, f"eb_{name}.csv")
            write_profile_csv(path, grid.nodes, values, header=f"s,{name}")
            report["outputs"].append(path)
    if not result.converged:
        report["status"] = "not_converged"
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _run_futaki(config: RunConfig, report: dict, outdir: str) -> int:
    higgs = _higgs_from_problem(config.problem)
    # quadrature accuracy budget wants at least the reference resolution
    grid = build_grid(max(config.numerics.n, 257))
    if higgs.is_abelian:
        value = abelian_futaki_quadrature(
            grid, higgs, np.zeros(grid.n), np.zeros(grid.n)
        )
        report["futaki"] = {
            "quadrature": value,
            "closed_form": None,
            "resolution": grid.n,
        }
    else:
        quad = futaki_quadrature(
            grid,
            FutakiInput(
                config=higgs,
                u=np.zeros(grid.n),
                v1=np.zeros(grid.n),
                v2=np.zeros(grid.n),
            ),
        )
        report["futaki"] = {
            "quadrature": quad,
            "closed_form": futaki_closed_form(higgs),
            "resolution": grid.n,
        }
    return EXIT_OK


def _run_stability(config: RunConfig, report: dict, outdir: str) -> int:
    higgs = _higgs_from_problem(config.problem)
    verdict = stability_check(higgs)
    report["stability"] = verdict.to_json_dict()
    if verdict.obstructed:
        report["status"] = "obstructed"
        report["reasons"] = list(verdict.reasons)
        return EXIT_OBSTRUCTED
    return EXIT_OK


def _run_quiver_check(config: RunConfig, report: dict, outdir: str) -> int:
    spec = _quiver_from_problem(config.problem)
    grid = build_grid(config.numerics.n)
    potentials = {v: np.zeros(grid.n) for v in spec.quiver.vertices}
    res = quiver_vortex_residual(spec, potentials, None, grid)
    phi = {}
    herm = {}
    mid = grid.n // 2
    for a in spec.quiver.arrows:
        phi[a.name] = np.array([[math.sqrt(arrow_profile(grid, spec, a)[mid])]])
    for v in spec.quiver.vertices:
        herm[v] = np.eye(1)
    identity = trace_identity_check(spec.quiver, phi, herm, spec.sigma, spec.tau)
    report["quiver"] = {
        "c_est": res.c_est,
        "vertex_residual_sup": {
            v: float(np.abs(r).max()) for v, r in res.vertex_residuals.items()
        },
        "metric_residual_sup": float(np.abs(res.metric_residual).max()),
        "trace_identity_defect_at_midpoint": identity.defect,
    }
    return EXIT_OK


def _run_sweep(config: RunConfig, report: dict, outdir: str) -> int:
    over = config.sweep["over"]
    keys = sorted(over)
    rows = []
    for combo in itertools.product(*(over[k] for k in keys)):
        problem = dict(config.problem)
        problem.update(dict(zip(keys, combo)))
        higgs = _higgs_from_problem(problem)
        verdict = stability_check(higgs)
        row = {k: v for k, v in zip(keys, combo)}
        row.update(
            {
                "obstructed": verdict.obstructed,
                "abelian_window": verdict.abelian_window,
                "nonabelian_window": verdict.nonabelian_window,
                "reduced_window": verdict.reduced_window,
                "balanced": verdict.balanced,
                "z_stable": verdict.z_stable,
                "futaki_value": verdict.futaki_value,
            }
        )
        rows.append(row)
    report["sweep"] = {"rows": rows, "parameters": keys}
    if _want(config, "csv") and rows:
        columns = list(rows[0].keys())
        lines = [",".join(columns)]
        for row in rows:
            rendered = []
            for col in columns:
                val = row[col]
                if isinstance(val, float):
                    rendered.append(f"{val:.17g}")
                else:
                    rendered.append(str(val))
            lines.append(",".join(rendered))
        path = os.path.join(outdir, "sweep_summary.csv")
        reporting.atomic_write_text(path, "\n".join(lines) + "\n")
        report["outputs"].append(path)
    return EXIT_OK


_RUNNERS = {
    "solve-vortex": _run_solve_vortex,
    "solve-gravitating": _run_solve_gravitating,
    "eb-solve": _run_eb_solve,
    "futaki": _run_futaki,
    "stability": _run_stability,
    "quiver-check": _run_quiver_check,
    "sweep": _run_sweep,
}


def execute(config: RunConfig) -> tuple[dict, int]:
    """Dispatch a validated configuration and write its report atomically."""
    start = time.perf_counter()
    outdir = config.output.directory
    report = {
        "command": config.command,
        "config": config.to_json_dict(),
        "version": reporting.__version__,
        "conventions_hash": reporting.conventions_hash(),
        "status": "ok",
        "reasons": [],
        "outputs": [],
    }
    try:
        os.makedirs(outdir, exist_ok=True)
    except OSError as exc:
        report["status"] = "error"
        report["reasons"] = [f"cannot create output directory: {exc}"]
        report["wall_time_seconds"] = time.perf_counter() - start
        return report, EXIT_IO

    try:
        code = _RUNNERS[config.command](config, report, outdir)
    except ObstructionError as exc:
        report["status"] = "obstructed"
        report["reasons"] = list(exc.reasons)
        code = EXIT_OBSTRUCTED
    except InfeasibleError as exc:
        report["status"] = "infeasible"
        report["reasons"] = [str(exc)]
        code = EXIT_OBSTRUCTED
    except GravortexError as exc:
        report["status"] = "error"
        report["reasons"] = [str(exc)]
        code = EXIT_USAGE

    report["wall_time_seconds"] = time.perf_counter() - start
    if _want(config, "json"):
        path = os.path.join(outdir, "report.json")
        try:
            reporting.atomic_write_json(path, report)
            report["outputs"].append(path)
        except OSError as exc:
            print(f"error: cannot write report: {exc}", file=sys.stderr)
            return report, EXIT_IO
    return report, code


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="gravortex",
        description="Vortex, coupled-metric, and obstruction computations on the sphere.",
    )
    parser.add_argument("--config", required=True, help="path to a JSON run configuration")
    parser.add_argument("--out", help="output directory (overrides config and env)")
    parser.add_argument(
        "--resolution", type=int, help="override the grid resolution n (odd)"
    )
    parser.add_argument(
        "--override-obstruction",
        action="store_true",
        help="run the coupled solver even when an obstruction fires",
    )
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        config = parse_config(text)
    except ConfigValidationError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_USAGE

    if args.out:
        config.output.directory = args.out
    if args.resolution:
        if args.resolution % 2 == 0 or not (33 <= args.resolution <= 4097):
            print("error: --resolution must be odd in [33, 4097]", file=sys.stderr)
            return EXIT_USAGE
        config.numerics.n = args.resolution
    config.override_obstruction = args.override_obstruction

    report, code = execute(config)
    print(json.dumps({"status": report["status"], "reasons": report["reasons"]}))
    return code


if __name__ == "__main__":
    sys.exit(main())
