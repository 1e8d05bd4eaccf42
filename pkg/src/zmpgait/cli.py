"""Command line pipeline: parameters -> references -> joint trajectories, plus checks and KPIs.

Exit status: 0 success, 1 infeasible trajectory or stability violation,
2 invalid input (missing file, malformed file, invalid parameters).
"""

import argparse
from dataclasses import dataclass, field, replace
import logging
from pathlib import Path
import sys

from zmpgait import __version__
from zmpgait.ik_solver import SolverOptions, default_posture, solve_trajectory
from zmpgait.kpi import LogError, analyze
from zmpgait.params import ParameterError, load_params
from zmpgait.pattern_gen import PatternError, generate_footsteps, generate_references
from zmpgait.robot_model import ModelError, bundled_model_path, load_model
from zmpgait import trajio

LOG = logging.getLogger("zmpgait")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2

# trajectory solves stop well below the 1e-4 feasibility threshold
TRAJECTORY_OPTIONS = SolverOptions(residual_tolerance=1e-12)
FIRST_SAMPLE_ITERATIONS = 1000


@dataclass
class PipelineConfig:
    params_path: str = None
    model_path: str = None
    output_directory: str = "."
    scenario: str = None
    solver_overrides: dict = field(default_factory=dict)
    emit_svg: bool = False
    refs_path: str = None
    log_path: str = None
    meta_path: str = None
    measured: bool = False
    margin: float = 0.0
    window: float = None

    @property
    def out(self):
        path = Path(self.output_directory)
        path.mkdir(parents=True, exist_ok=True)
        return path


def _require_params(config):
    if not config.params_path:
        raise ParameterError("--params is required")
    return load_params(config.params_path)


def solver_options(overrides):
    return replace(TRAJECTORY_OPTIONS, **overrides)


def cmd_gen(config):
    params = _require_params(config)
    refs = generate_references(params)
    out = config.out
    trajio.write_references(out / "references.csv", refs)
    trajio.write_footsteps(out / "footsteps.csv", refs.plan)
    trajio.write_timeline(out / "timeline.csv", refs.plan)
    if config.emit_svg:
        from zmpgait.plots import plot_pattern, plot_timeseries

        plot_pattern(refs, out / "pattern.svg")
        plot_timeseries(refs, out / "timeseries.svg")
    print(f"{refs.n_samples} samples over {params.duration:g} s, "
          f"{len(refs.plan.footholds)} footholds -> {out}")
    return EXIT_OK


def run_ik(config):
    """Load inputs and solve; returns (references, model, TrajectoryResult)."""
    params = _require_params(config)
    model = load_model(config.model_path or bundled_model_path())
    if config.refs_path:
        refs = trajio.read_references(config.refs_path, generate_footsteps(params), params)
    else:
        refs = generate_references(params)
    options = solver_options(config.solver_overrides)
    first = replace(options, max_iterations=max(options.max_iterations, FIRST_SAMPLE_ITERATIONS))
    result = solve_trajectory(model, refs, default_posture(model), options, first_options=first)
    return refs, model, result


def cmd_ik(config):
    refs, model, result = run_ik(config)
    out = config.out
    trajio.write_joint_trajectory(out / "joints_deg.csv", result.trajectory, degrees=True)
    trajio.write_joint_trajectory(out / "joints_rad.csv", result.trajectory)
    trajio.write_ik_report(out / "ik_report.csv", result)
    worst = float(result.residual_norms.max())
    if not result.feasible:
        k = result.failed_sample
        print(f"infeasible: sample {k} (t = {refs.times[k]:.4f} s) task error "
              f"{result.results[k].residual_norm:.3g} m/rad; worst {worst:.3g}")
        return EXIT_FAILED
    print(f"all {refs.n_samples} samples converged (worst task error {worst:.3g}) -> {out}")
    return EXIT_OK


def cmd_check(config):
    params = _require_params(config)
    plan = generate_footsteps(params)
    if config.refs_path:
        header, data, _ = trajio.read_numeric(config.refs_path, ["t", "zmp_x", "zmp_y"])
        zmp = data[:, [header.index("zmp_x"), header.index("zmp_y")]]
        times = data[:, header.index("t")]
        foot_dims = (0.2, 0.1)
    elif config.log_path:
        if not config.meta_path:
            raise LogError("--meta is required with --log")
        log, _ = trajio.read_log(config.log_path, config.meta_path)
        zmp = log.zmp_meas if config.measured else log.zmp_des
        times = log.times
        foot_dims = log.foot_dims
    else:
        raise ParameterError("check needs --refs or --log")
    from zmpgait.kpi import stability_check

    report = stability_check(zmp, plan, times, foot_dims, config.margin)
    print(f"violations: {report.n_violations}/{len(times)} "
          f"(fraction {report.violation_fraction:.6g}); worst margin {report.worst_margin:.6g} m")
    if report.n_violations:
        first = int((~report.inside).argmax())
        print(f"first violation at sample {first} (t = {times[first]:.4f} s)")
        return EXIT_FAILED
    return EXIT_OK


def cmd_analyze(config):
    if not config.log_path or not config.meta_path:
        raise LogError("analyze needs --log and --meta")
    log, meta = trajio.read_log(config.log_path, config.meta_path)
    params = load_params(config.params_path) if config.params_path else None
    scenario = config.scenario or meta.get("scenario") or (params.type if params else None)
    if scenario is None:
        raise ParameterError("scenario unknown: pass --scenario, --params or a 'scenario' metadata entry")
    window = config.window or (float(meta["window"]) if "window" in meta else None)
    if window is None:
        if params is None:
            raise ParameterError("window unknown: pass --window, --params or a 'window' metadata entry")
        window = params.T_stride
    report = analyze(log, window, level_ground=(scenario == "level"))
    text = report.format()
    (config.out / "kpi_report.txt").write_text(text)
    print(text, end="")
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "ik": cmd_ik, "check": cmd_check, "analyze": cmd_analyze}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--params", help="parameter file or bundled scenario name (e.g. level_4s)")
    common.add_argument("--model", help="robot model file (default: bundled heicub_like.model)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--svg", action="store_true", help="also write SVG plots")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="zmpgait", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("gen", parents=[common], help="generate footsteps and reference trajectories")

    ik = sub.add_parser("ik", parents=[common], help="solve joint trajectories")
    ik.add_argument("--refs", help="reference CSV written by 'gen' (default: regenerate)")
    ik.add_argument("--max-iterations", type=int)
    ik.add_argument("--residual-tolerance", type=float)
    ik.add_argument("--step-tolerance", type=float)

    check = sub.add_parser("check", parents=[common], help="ZMP support-polygon check")
    check.add_argument("--refs", help="reference CSV (desired ZMP)")
    check.add_argument("--log", help="execution log CSV")
    check.add_argument("--meta", help="execution log metadata sidecar")
    check.add_argument("--measured", action="store_true", help="check the measured ZMP of the log")
    check.add_argument("--margin", type=float, default=0.0, help="required interior margin [m]")

    an = sub.add_parser("analyze", parents=[common], help="compute KPIs from an execution log")
    an.add_argument("--log", help="execution log CSV")
    an.add_argument("--meta", help="execution log metadata sidecar")
    an.add_argument("--scenario", choices=["level", "slope_up", "slope_down", "stairs_up"])
    an.add_argument("--window", type=float, help="velocity window [s] (default: T_stride)")
    return parser


def config_from_args(args):
    overrides = {}
    for key in ("max_iterations", "residual_tolerance", "step_tolerance"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return PipelineConfig(
        params_path=args.params,
        model_path=args.model,
        output_directory=args.out,
        scenario=getattr(args, "scenario", None),
        solver_overrides=overrides,
        emit_svg=args.svg,
        refs_path=getattr(args, "refs", None),
        log_path=getattr(args, "log", None),
        meta_path=getattr(args, "meta", None),
        measured=getattr(args, "measured", False),
        margin=getattr(args, "margin", 0.0),
        window=getattr(args, "window", None),
    )


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](config_from_args(args))
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except (ParameterError, ModelError, PatternError, LogError, trajio.CsvFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
