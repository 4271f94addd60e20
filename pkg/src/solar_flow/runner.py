"""
Executes experiments and writes their artifacts: series.csv, snapshot
files, report.json and SVG plots
"""
import logging
import multiprocessing
import os
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from . import __version__
from .calculus import continuous_min, derivative
from .closed_form import (
    HS_DEMO_REFERENCE_TIME,
    SLOPE_OVERSAMPLE,
    hs_breakdown_time,
)
from .diagnostics import (
    ReconstructionError,
    conserved_quantities,
    lagrangian_transport_residual,
    lemma_monitors,
    mckean_classify,
    pressure_check,
    reconstruct,
    riccati_monitor,
    vorticity_transport_check,
)
from .experiment import Experiment
from .integration import SERIES_COLUMNS, RunOutput, integrate
from .osw import (
    OSW_SERIES_COLUMNS,
    OswRunOutput,
    degregorio_bound_check,
    ermakov_check,
    osw_integrate,
    transport_error,
)
from .particle import (
    particle_integrate,
    radius_barrier_margin,
    riccati_envelope_check,
)
from .solar_model import g_formula_discrepancy
from .utils import svg_utils, utils

LOGGER = logging.getLogger(__name__)

# IO types
PathLike = Union[str, Path]

SCHEMA_VERSION = "1.0"

SNAPSHOT_COLUMNS = ["theta", "x", "v", "y", "w", "u", "m"]
OSW_SNAPSHOT_COLUMNS = ["theta", "eta", "eta_theta", "psi", "m"]
PARTICLE_COLUMNS = ["t", "x", "vx", "y", "vy", "radius", "angular_momentum"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BREAKDOWN = 2

WORKERS_VARIABLE = "SOLAR_FLOW_WORKERS"


def _snapshot_indices(count: int, total: int) -> List[int]:
    """
    Evenly spaced sample indices, first and last included.
    """
    if total <= count:
        return list(range(total))
    return sorted(
        {int(round(i)) for i in np.linspace(0, total - 1, count)}
    )


def _snapshot_name(t: float) -> str:
    """File name of the snapshot at time t."""
    return f"snap_{t:.6f}.csv"


def _write_plot(
    output_dir: Path,
    name: str,
    curves: Dict[str, Tuple[np.ndarray, np.ndarray]],
    x_label: str = "t",
) -> None:
    """Writes one SVG line plot."""
    svg = svg_utils.create_line_plot(curves, title=name, x_label=x_label)
    utils.save_string_to_txt(svg, output_dir.joinpath(f"{name}.svg"))


def _solar_snapshot(run: RunOutput, index: int, monitors: dict) -> dict:
    """
    Columns of one solar snapshot; u and m stay empty when the flow map
    is not invertible.
    """
    state = run.states[index]
    n = state.n
    columns = {
        "theta": np.arange(n) / n,
        "x": state.x,
        "v": state.v,
        "y": state.y,
        "w": state.w,
        "u": np.full(n, np.nan),
        "m": np.full(n, np.nan),
    }
    if monitors["reconstruct"]:
        try:
            snapshot = reconstruct(
                state, run.params, int(monitors["newton_iterations"])
            )
            columns["u"], columns["m"] = snapshot.u, snapshot.m
        except ReconstructionError as error:
            LOGGER.debug("No reconstruction at t=%g: %s", state.t, error)
    return columns


def _oracle_report(run: RunOutput) -> dict:
    """
    Closed-form breakdown times for the zero-mean members (lambda = 2, 3).
    """
    params = run.params
    if params.sigma != 0.0 or not np.any(derivative(run.u0)):
        return {}

    report = {}
    if params.lam == 3.0:
        slope, _ = continuous_min(derivative(run.u0), SLOPE_OVERSAMPLE)
        report["closed_form_T"] = -1.0 / slope if slope < 0 else None
    elif params.lam == 2.0:
        report["closed_form_T"] = hs_breakdown_time(run.u0)
        report["reference_T"] = HS_DEMO_REFERENCE_TIME

    simulated = run.breakdown.T if run.breakdown.occurred else None
    report["simulated_T"] = simulated
    if simulated is not None and report["closed_form_T"] is not None:
        report["T_discrepancy"] = simulated - report["closed_form_T"]
    return report


def run_mu_lambda(experiment: Experiment) -> Tuple[int, dict]:
    """
    Runs a mu-lambda experiment and writes its artifacts.

    Parameters
    ------------------------
    experiment: Experiment
        Experiment of family mu-lambda.

    Returns
    ------------------------
    Tuple[int, dict]
        Exit code and report.
    """
    output_dir = experiment.output_dir
    monitors = experiment.monitors
    params = experiment.model_params
    config = experiment.run_config
    u0 = experiment.u0()

    try:
        run = integrate(u0, params, config)
    except RuntimeError as error:
        partial = getattr(error, "partial_output", None)
        if partial is not None:
            utils.save_to_csv(
                partial.series,
                output_dir.joinpath("series.csv"),
                SERIES_COLUMNS,
            )
            LOGGER.info(
                "Partial series written up to t=%.6f",
                partial.final_state.t,
            )
        raise

    utils.save_to_csv(
        run.series, output_dir.joinpath("series.csv"), SERIES_COLUMNS
    )

    report = {
        "breakdown": run.breakdown.to_dict(),
        "oracle": _oracle_report(run),
        "g_formula": g_formula_discrepancy(run.final_state, params),
    }
    if monitors["mckean"]:
        report["mckean"] = mckean_classify(
            u0, params, config.eps_sign_factor
        ).to_dict()
    if monitors["lemmas"] and run.breakdown.occurred:
        try:
            report["lemmas"] = lemma_monitors(
                run, tol=monitors["lemma_tol"]
            ).to_dict()
        except ValueError as error:
            report["lemmas"] = {"applicable": False, "reason": str(error)}
    if monitors["transport"] and len(run.states) >= 3:
        report["transport"] = {
            "lagrangian_residual": lagrangian_transport_residual(run)
        }
    if params.lam == 3.0 and len(run.states) >= 3:
        report["pressure"] = pressure_check(run)
    report["riccati"] = riccati_monitor(run).to_dict()

    if monitors["reconstruct"]:
        try:
            snapshot = reconstruct(
                run.final_state, params, int(monitors["newton_iterations"])
            )
            report["final_snapshot"] = {
                "t": snapshot.t,
                "conserved": conserved_quantities(snapshot),
                "vorticity_transport": vorticity_transport_check(
                    run.final_state, snapshot, run.m0, params
                ),
            }
        except ReconstructionError as error:
            report["final_snapshot"] = {"refused": str(error)}

    if monitors["snapshots"]:
        indices = _snapshot_indices(
            int(monitors["snapshot_count"]), len(run.states)
        )
        for index in indices:
            utils.save_to_csv(
                _solar_snapshot(run, index, monitors),
                output_dir.joinpath(_snapshot_name(run.states[index].t)),
                SNAPSHOT_COLUMNS,
            )

    if monitors["plots"]:
        series = run.series
        _write_plot(
            output_dir, "min_x", {"min_x": (series["t"], series["min_x"])}
        )
        _write_plot(
            output_dir,
            "invariants",
            {
                column: (series["t"], series[column] - series[column].iloc[0])
                for column in ("E", "L2", "sigma")
            },
        )
        _write_plot(
            output_dir,
            "x_final",
            {"x": (np.arange(u0.size) / u0.size, run.final_state.x)},
            x_label="theta",
        )

    stopped = run.breakdown.occurred and not config.continuation
    return (EXIT_BREAKDOWN if stopped else EXIT_OK), report


def run_osw(experiment: Experiment) -> Tuple[int, dict]:
    """
    Runs an OSW experiment and writes its artifacts.

    Parameters
    ------------------------
    experiment: Experiment
        Experiment of family osw.

    Returns
    ------------------------
    Tuple[int, dict]
        Exit code and report.
    """
    output_dir = experiment.output_dir
    monitors = experiment.monitors
    u0 = experiment.u0()
    lambda_osw = experiment.lambda_osw

    run: OswRunOutput = osw_integrate(u0, lambda_osw, experiment.run_config)
    utils.save_to_csv(
        run.series, output_dir.joinpath("series.csv"), OSW_SERIES_COLUMNS
    )

    report = {
        "stopped_early": run.stopped_early,
        "stop_time": run.stop_time,
        "min_force": run.min_force,
    }
    if monitors["transport"]:
        error, coverage = transport_error(
            run.states[-1], monitors["max_amplification"]
        )
        report["transport"] = {"error": error, "coverage": coverage}
    if monitors["ermakov"] and len(run.states) >= 5:
        report["ermakov"] = ermakov_check(run.states).to_dict()
    if monitors["degregorio_bound"] and lambda_osw == -1.0:
        report["degregorio_bound"] = degregorio_bound_check(
            run, tol=monitors["bound_tol"]
        ).to_dict()

    if monitors["snapshots"]:
        for index in _snapshot_indices(
            int(monitors["snapshot_count"]), len(run.states)
        ):
            state = run.states[index]
            utils.save_to_csv(
                {
                    "theta": np.arange(state.n) / state.n,
                    "eta": state.eta,
                    "eta_theta": state.eta_theta,
                    "psi": state.psi,
                    "m": state.m,
                },
                output_dir.joinpath(_snapshot_name(state.t)),
                OSW_SNAPSHOT_COLUMNS,
            )

    if monitors["plots"]:
        series = run.series
        _write_plot(
            output_dir,
            "eta_theta",
            {
                "min": (series["t"], series["min_eta_theta"]),
                "max": (series["t"], series["max_eta_theta"]),
            },
        )
        _write_plot(
            output_dir, "min_F", {"min_F": (series["t"], series["min_F"])}
        )

    stopped = run.stopped_early and lambda_osw > 0
    return (EXIT_BREAKDOWN if stopped else EXIT_OK), report


def run_particle(experiment: Experiment) -> Tuple[int, dict]:
    """
    Integrates one particle and writes its artifacts.

    Parameters
    ------------------------
    experiment: Experiment
        Experiment of family particle.

    Returns
    ------------------------
    Tuple[int, dict]
        Exit code and report.
    """
    force, p0 = experiment.particle
    t_end, dt = experiment.particle_horizon
    trajectory = particle_integrate(force, p0, t_end, dt)

    table = pd.DataFrame(
        {
            "t": trajectory.t,
            "x": trajectory.x,
            "vx": trajectory.vx,
            "y": trajectory.y,
            "vy": trajectory.vy,
            "radius": trajectory.radius,
            "angular_momentum": trajectory.angular_momentum,
        }
    )
    utils.save_to_csv(
        table, experiment.output_dir.joinpath("series.csv"), PARTICLE_COLUMNS
    )

    report = {
        "x_crossings": trajectory.x_crossings,
        "y_crossings": trajectory.y_crossings,
        "radius_minima": [list(item) for item in trajectory.radius_minima],
        "radius_barrier_margin": radius_barrier_margin(trajectory),
    }
    if np.all(trajectory.x > 0):
        envelope = np.maximum.accumulate(
            np.sqrt(np.maximum(trajectory.force, 0.0))
        )
        passed, margin = riccati_envelope_check(
            trajectory, lambda t: envelope
        )
        report["riccati"] = {"passed": passed, "margin": margin}

    if experiment.monitors["plots"]:
        _write_plot(
            experiment.output_dir,
            "orbit",
            {"orbit": (trajectory.x, trajectory.y)},
            x_label="x",
        )
        _write_plot(
            experiment.output_dir,
            "radius",
            {"r": (trajectory.t, trajectory.radius)},
        )
    return EXIT_OK, report


RUNNERS = {
    "mu-lambda": run_mu_lambda,
    "osw": run_osw,
    "particle": run_particle,
}


def run_experiment(experiment: Experiment) -> int:
    """
    Runs one experiment and writes report.json next to its other
    artifacts. Errors are recorded in the report and mapped to exit 1.

    Parameters
    ------------------------
    experiment: Experiment
        Parsed experiment (no sweep).

    Returns
    ------------------------
    int
        0 completed, 2 breakdown reached with stop-at-breakdown, 1 error.
    """
    output_dir = experiment.output_dir
    utils.create_folder(output_dir, experiment.verbose)
    report = {
        "schema_version": SCHEMA_VERSION,
        "solar_flow_version": __version__,
        "experiment": experiment.describe(),
    }
    LOGGER.info("Running %s experiment in %s", experiment.family, output_dir)

    try:
        code, results = RUNNERS[experiment.family](experiment)
        report.update(results)
    except (ValueError, RuntimeError) as error:
        LOGGER.error("Run failed: %s", error)
        report["error"] = f"{type(error).__name__}: {error}"
        code = EXIT_ERROR

    report["exit_code"] = code
    utils.save_dict_as_json(
        output_dir.joinpath("report.json"), report, experiment.verbose
    )
    LOGGER.info("Artifacts written to %s (exit %d)", output_dir, code)
    return code


def _run_sweep_member(arguments: Tuple[dict, str, bool]) -> int:
    """Pool entry point: rebuilds and runs one sweep member."""
    config, output_dir, verbose = arguments
    return run_experiment(Experiment(config, output_dir, verbose))


def worker_count() -> int:
    """
    Number of sweep workers from SOLAR_FLOW_WORKERS, default cpu count.

    Returns
    ------------------------
    int
        Positive worker count.
    """
    value = os.environ.get(WORKERS_VARIABLE)
    if value is None:
        return os.cpu_count() or 1
    workers = int(value)
    if workers < 1:
        raise ValueError(f"{WORKERS_VARIABLE} must be >= 1. Received {value}")
    return workers


def run_sweep(
    experiment: Experiment, workers: Optional[int] = None
) -> int:
    """
    Runs every member of the sweep section, each in its own output
    directory, across a process pool.

    Parameters
    ------------------------
    experiment: Experiment
        Experiment with or without a sweep section.
    workers: Optional[int]
        Pool size. Default worker_count().

    Returns
    ------------------------
    int
        1 if any member failed, else 2 if any stopped at breakdown, else 0.
    """
    members = list(experiment.sweep_experiments())
    if len(members) == 1 and not experiment.sweep:
        return run_experiment(experiment)

    arguments = [
        (member.as_dict(), str(member.output_dir), member.verbose)
        for _, member in members
    ]
    workers = worker_count() if workers is None else workers
    LOGGER.info("Sweep of %d runs on %d workers", len(arguments), workers)
    if workers == 1:
        codes = [_run_sweep_member(item) for item in arguments]
    else:
        with multiprocessing.Pool(processes=workers) as pool:
            codes = pool.map(_run_sweep_member, arguments)

    if EXIT_ERROR in codes:
        return EXIT_ERROR
    return EXIT_BREAKDOWN if EXIT_BREAKDOWN in codes else EXIT_OK
