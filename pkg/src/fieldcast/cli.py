"""Command-line pipeline: parse, validate, assemble, solve, certify, export.

Exit codes: 0 success, 2 usage error, 3 scenario parse/validation failure,
4 accuracy infeasible at the current resolution, 5 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .certify import Certificate, certify_solution, empirical_mismatches, scenario_difference_fields
from .fields import build_target, default_grid, eval_on_grid, resolve_epsilon, write_grid
from .geometry import Discretization, Scenario, ScenarioValidationError, build_rules, validate_scenario
from .operator import assemble_forward, dump_operator, weighted_svd
from .scenario_io import ScenarioFormatError, load_scenario
from .solver import InfeasibleAccuracyError, SolveReport, solve_min_energy, sweep_alpha

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_INFEASIBLE = 4
EXIT_NUMERICAL = 5

SPECTRUM_FIT_COUNT = 30
EMPIRICAL_SAMPLES = 500


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, bool):
        return "yes" if value else "no"
    return str(value)


def _resolve_scenario_path(arg: str) -> Path:
    p = Path(arg)
    if p.exists():
        return p
    alt = p.with_suffix(".scn")
    if alt.exists():
        return alt
    raise FileNotFoundError(f"scenario file not found: {arg}")


def _load(args) -> Scenario:
    s = load_scenario(_resolve_scenario_path(args.scenario))
    if getattr(args, "nodes", None):
        parts = args.nodes.split(",")
        if len(parts) != 2:
            raise ScenarioFormatError("--nodes expects '<antenna>,<control>'")
        s = replace(s, discretization=Discretization(int(parts[0]), int(parts[1])))
    if getattr(args, "epsilon", None):
        if args.epsilon == "auto":
            s = replace(s, epsilon="auto")
        else:
            s = replace(s, epsilon=float(args.epsilon))
    validate_scenario(s)
    return resolve_epsilon(s)


def _scenario_lines(s: Scenario, path: str) -> list[tuple[str, object]]:
    lines: list[tuple[str, object]] = [
        ("file", path),
        ("dim", s.dim),
        ("delta", float(s.delta)),
        ("epsilon", float(s.epsilon)),
        ("seed", s.seed),
        ("nodes-antenna", s.discretization.antenna),
        ("nodes-control", s.discretization.control),
        ("observation-radius", float(s.observation_radius)),
        ("outer-control-radius", float(s.outer_control_radius)),
        ("exterior-field", s.exterior_target.kind),
    ]
    for k, r in enumerate(s.regions, start=1):
        lines.append((f"region-{k}.center", ",".join(repr(float(c)) for c in r.center)))
        lines.append((f"region-{k}.radius", float(r.radius)))
        lines.append((f"region-{k}.control-radius", float(r.control_radius)))
        lines.append((f"region-{k}.field", r.target.kind))
    return lines


def _spectrum_lines(sigma: np.ndarray) -> list[tuple[str, object]]:
    cutoff = 1e-12 * float(sigma[0])
    count = min(SPECTRUM_FIT_COUNT, sigma.shape[0])
    usable = sigma[:count][sigma[:count] > 0]
    slope = float(np.polyfit(np.arange(usable.shape[0]), np.log10(usable), 1)[0])
    return [
        ("sigma-1", float(sigma[0])),
        ("sigma-min", float(sigma[-1])),
        ("count", int(sigma.shape[0])),
        ("rank-above-cutoff", int(np.sum(sigma > cutoff))),
        ("decay-slope-log10", slope),
    ]


def _solve_lines(report: SolveReport) -> list[tuple[str, object]]:
    lines = [
        ("alpha-star", report.alpha_star),
        ("epsilon", report.epsilon),
        ("discrepancy", report.discrepancy),
        ("relative-gap", abs(report.discrepancy - report.epsilon) / report.epsilon),
        ("energy", report.energy),
        ("bracket-iterations", report.bracket_iterations),
        ("epsilon-floor", report.epsilon_floor),
        ("degenerate", report.degenerate),
    ]
    n_regions = len(report.block_residuals) - 1
    for k, res in enumerate(report.block_residuals, start=1):
        label = f"region-{k}" if k <= n_regions else "outer"
        lines.append((f"residual-{label}", res))
    return lines


def _certificate_lines(cert: Certificate) -> list[tuple[str, object]]:
    lines = []
    for entry in list(cert.regions) + [cert.exterior]:
        for key, val in (
            ("residual-l2", entry.mismatch_l2),
            ("l1-factor", entry.l1_factor),
            ("constant-conservative", entry.constant_conservative),
            ("constant-sharp", entry.constant_sharp),
            ("bound-conservative", entry.bound_conservative),
            ("bound-sharp", entry.bound_sharp),
        ):
            lines.append((f"{entry.label}.{key}", val))
    return lines


def write_report(path: Path, sections: list[tuple[str, list[tuple[str, object]]]]) -> None:
    with open(path, "w") as fh:
        fh.write("format-version: 1\n")
        fh.write(f"generator: fieldcast {__version__}\n")
        for name, lines in sections:
            fh.write(f"\n[{name}]\n")
            for key, value in lines:
                fh.write(f"{key}: {_fmt(value)}\n")


def write_spectrum(path: Path, sigma: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write("format-version: 1\n")
        fh.write("index\tsigma\n")
        for i, s in enumerate(sigma):
            fh.write(f"{i}\t{float(s)!r}\n")


def cmd_run(args) -> int:
    timings: list[tuple[str, object]] = []

    def stage(name):
        class _Timer:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                timings.append((f"{name}-seconds", max(time.perf_counter() - self.t0, 1e-9)))

        return _Timer()

    scenario = _load(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    with stage("assemble"):
        antenna, controls = build_rules(scenario)
        K = assemble_forward(antenna, controls)
    with stage("svd"):
        svd = weighted_svd(K)
    with stage("target"):
        v = build_target(scenario, controls)
    with stage("solve"):
        h, report = solve_min_energy(K, v, float(scenario.epsilon))
    with stage("certify"):
        cert = certify_solution(K, h, v, scenario)
    with stage("empirical"):
        rng = np.random.default_rng(scenario.seed)
        region_max, exterior_max = empirical_mismatches(
            h, scenario_difference_fields(scenario), scenario, rng, EMPIRICAL_SAMPLES
        )

    empirical_lines: list[tuple[str, object]] = [("samples", EMPIRICAL_SAMPLES)]
    for entry, observed in zip(cert.regions, region_max):
        empirical_lines.append((f"{entry.label}.sampled-max", observed))
        empirical_lines.append((f"{entry.label}.bound-conservative", entry.bound_conservative))
        empirical_lines.append((f"{entry.label}.within-bound",
                                observed <= entry.bound_conservative))
    empirical_lines.append(("exterior.sampled-max", exterior_max))
    empirical_lines.append(("exterior.bound-conservative", cert.exterior.bound_conservative))
    empirical_lines.append(("exterior.within-bound",
                            exterior_max <= cert.exterior.bound_conservative))

    outputs: list[tuple[str, object]] = []
    spectrum_path = out_dir / "spectrum.tsv"
    write_spectrum(spectrum_path, svd.sigma)
    outputs.append(("spectrum", spectrum_path.name))

    if args.grid:
        with stage("grid"):
            shape = tuple(int(p) for p in args.grid.split(","))
            grid = eval_on_grid(h, scenario, default_grid(scenario, shape))
            grid_path = out_dir / "grid.tsv"
            write_grid(grid, grid_path)
        outputs.append(("grid", grid_path.name))

    if args.dump_operator:
        op_path = out_dir / "operator.bin"
        dump_operator(K, op_path)
        outputs.append(("operator", op_path.name))

    report_path = out_dir / "report.txt"
    write_report(
        report_path,
        [
            ("scenario", _scenario_lines(scenario, args.scenario)),
            ("spectrum", _spectrum_lines(svd.sigma)),
            ("solve", _solve_lines(report)),
            ("certificate", _certificate_lines(cert)),
            ("empirical", empirical_lines),
            ("outputs", outputs),
            ("timings", timings),
        ],
    )
    print(f"report: {report_path}")
    print(f"discrepancy: {report.discrepancy!r} (epsilon {report.epsilon!r})")
    print(f"energy: {report.energy!r}")
    for entry in list(cert.regions) + [cert.exterior]:
        print(f"bound[{entry.label}]: {entry.bound_conservative!r}")
    return EXIT_OK


def _parse_ladder(text: str, name: str) -> list[float]:
    values = [float(p) for p in text.split(",") if p.strip()]
    if not values:
        raise ValueError(f"{name} ladder is empty")
    if any(v <= 0 for v in values):
        raise ValueError(f"{name} ladder values must be positive")
    return values


def cmd_sweep(args) -> int:
    scenario = _load(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    antenna, controls = build_rules(scenario)
    K = assemble_forward(antenna, controls)
    v = build_target(scenario, controls)
    svd = weighted_svd(K)

    sweep_path = out_dir / "sweep.tsv"
    with open(sweep_path, "w") as fh:
        fh.write("format-version: 1\n")
        if args.alphas:
            rows = sweep_alpha(K, v, _parse_ladder(args.alphas, "alpha"))
            fh.write("alpha\tdiscrepancy\tenergy\n")
            for a, d, e in rows:
                fh.write(f"{a!r}\t{d!r}\t{e!r}\n")
        else:
            fh.write("epsilon\tdiscrepancy\tenergy\n")
            for eps in sorted(_parse_ladder(args.epsilons, "epsilon")):
                _, rep = solve_min_energy(K, v, eps)
                fh.write(f"{eps!r}\t{rep.discrepancy!r}\t{rep.energy!r}\n")

    spectrum_path = out_dir / "spectrum.tsv"
    write_spectrum(spectrum_path, svd.sigma)
    print(f"sweep: {sweep_path}")
    print(f"spectrum: {spectrum_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fieldcast",
        description="Minimal-energy antenna densities for harmonic field control.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve a scenario and write report, spectrum, grids")
    run.add_argument("scenario", help="scenario file (.scn suffix may be omitted)")
    run.add_argument("--out", default="fieldcast-out", help="output directory")
    run.add_argument("--grid", default=None, metavar="NX[,NY[,NZ]]",
                     help="export the total field on a grid with these counts")
    run.add_argument("--nodes", default=None, metavar="ANTENNA,CONTROL",
                     help="override per-boundary node counts")
    run.add_argument("--epsilon", default=None, metavar="VALUE|auto",
                     help="override the scenario's accuracy budget")
    run.add_argument("--dump-operator", action="store_true",
                     help="write the operator matrix and spectrum as binary")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="tabulate discrepancy/energy over a ladder")
    sweep.add_argument("scenario")
    sweep.add_argument("--out", default="fieldcast-out")
    sweep.add_argument("--nodes", default=None, metavar="ANTENNA,CONTROL")
    sweep.add_argument("--epsilon", default=None, help=argparse.SUPPRESS)
    group = sweep.add_mutually_exclusive_group(required=True)
    group.add_argument("--epsilons", default=None, metavar="E1,E2,...")
    group.add_argument("--alphas", default=None, metavar="A1,A2,...")
    sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioFormatError, ScenarioValidationError, FileNotFoundError) as exc:
        print(f"error [validation]: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except InfeasibleAccuracyError as exc:
        print(f"error [infeasible]: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        # Malformed ladders and similar argument-shaped problems.
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RuntimeError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error [numerical]: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
