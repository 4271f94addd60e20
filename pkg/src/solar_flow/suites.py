"""
Acceptance suites run by `solar-flow verify`, with junit-style results
"""
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

import numpy as np
import xmltodict

from .calculus import evaluate
from .closed_form import (
    HS_DEMO_REFERENCE_TIME,
    burgers_solution,
    hs_breakdown_time,
    hs_solution,
)
from .diagnostics import (
    lemma_monitors,
    mckean_classify,
    pde_residual,
    reconstruct,
)
from .experiment import InitialCondition
from .integration import (
    RunConfig,
    RunOutput,
    convergence_study,
    integrate,
    sign_crossings,
)
from .osw import (
    OswRunConfig,
    degregorio_bound_check,
    ermakov_check,
    osw_integrate,
    transport_error,
)
from .particle import (
    ParticleState,
    constant_force,
    particle_integrate,
    riccati_envelope_check,
    spiral_force,
)
from .solar_model import ModelParams, initial_momentum
from .utils import utils

LOGGER = logging.getLogger(__name__)

# IO types
PathLike = Union[str, Path]

ACCEPTANCE_N = 256
ACCEPTANCE_DT = 1e-3


@dataclass
class CriterionResult:
    """
    Outcome of one acceptance criterion.

    Attributes
    ------------------------
    suite: str
        Suite name.
    name: str
        Criterion name.
    measured: Optional[float]
        Measured value.
    threshold: Optional[float]
        Bound the value is compared with.
    passed: bool
        Whether the criterion holds.
    detail: str
        Free text shown in the results file.
    """

    suite: str
    name: str
    measured: Optional[float]
    threshold: Optional[float]
    passed: bool
    detail: str = ""

    def to_testcase(self) -> dict:
        """
        Junit testcase element as an xmltodict mapping.

        Returns
        ------------------------
        dict
            Testcase with measured and threshold properties.
        """
        properties = []
        for key, value in (
            ("measured", self.measured),
            ("threshold", self.threshold),
        ):
            text = "none" if value is None else f"{value:.9e}"
            properties.append({"@name": key, "@value": text})
        if self.detail:
            properties.append({"@name": "detail", "@value": self.detail})

        testcase = {
            "@classname": f"solar_flow.verify.{self.suite}",
            "@name": self.name,
            "properties": {"property": properties},
        }
        if not self.passed:
            testcase["failure"] = {
                "@message": f"{self.name}: measured {self.measured} "
                f"against {self.threshold}"
            }
        return testcase


def _at_most(
    suite: str, name: str, measured: float, threshold: float, detail=""
) -> CriterionResult:
    """Criterion measured <= threshold (non-finite values fail)."""
    passed = bool(np.isfinite(measured)) and measured <= threshold
    return CriterionResult(
        suite, name, float(measured), threshold, passed, detail
    )


def _holds(suite: str, name: str, passed: bool, detail="") -> CriterionResult:
    """Criterion without a measured value."""
    return CriterionResult(suite, name, None, None, bool(passed), detail)


def _circle_distance(a: float, b: float) -> float:
    """Distance between two labels on the unit circle."""
    gap = abs(a - b) % 1.0
    return min(gap, 1.0 - gap)


def _state_at(run: RunOutput, t: float):
    """Stored sample at time t."""
    for state in run.states:
        if math.isclose(state.t, t, rel_tol=0.0, abs_tol=1e-9):
            return state
    raise ValueError(f"No stored sample at t = {t}")


def _samples(name: str, n: int = ACCEPTANCE_N, reflected=False):
    """Samples of a preset initial condition."""
    condition = InitialCondition.preset(name)
    if reflected:
        condition = condition.reflected()
    return condition.samples(n), condition.constant


def _burgers_run() -> RunOutput:
    """Burgers acceptance run, past the shock time."""
    u0, _ = _samples("burgers")
    config = RunConfig(n=ACCEPTANCE_N, dt=ACCEPTANCE_DT, t_end=1.1)
    return integrate(u0, ModelParams(lam=3.0, sigma=0.0), config)


def _hs_run() -> RunOutput:
    """Hunter-Saxton acceptance run, past its breakdown time."""
    u0, _ = _samples("hunter-saxton")
    t_end = math.ceil((hs_breakdown_time(u0) + 0.05) * 100) / 100
    config = RunConfig(n=ACCEPTANCE_N, dt=ACCEPTANCE_DT, t_end=t_end)
    return integrate(u0, ModelParams(lam=2.0, sigma=0.0), config)


def _mckean_run(lam: float, reflected: bool = False) -> RunOutput:
    """Breakdown run for 1 + 0.1 sin(2 pi theta), optionally reflected."""
    u0, sigma = _samples("mckean-breakdown", reflected=reflected)
    config = RunConfig(n=ACCEPTANCE_N, dt=ACCEPTANCE_DT, t_end=5.0)
    return integrate(u0, ModelParams(lam=lam, sigma=sigma), config)


def oracles_suite() -> List[CriterionResult]:
    """
    Closed-form comparisons for Burgers, Hunter-Saxton and constant data.

    Returns
    ------------------------
    List[CriterionResult]
        One result per criterion.
    """
    suite = "oracles"
    results = []
    u0, _ = _samples("burgers")

    run = _burgers_run()
    error = np.max(np.abs(_state_at(run, 0.5).x - burgers_solution(u0, 0.5).x))
    results.append(_at_most(suite, "burgers_x_at_0.5", error, 1e-8))
    breakdown = run.breakdown
    results.append(_holds(suite, "burgers_breakdown", breakdown.occurred))
    if breakdown.occurred:
        results.append(
            _at_most(suite, "burgers_T", abs(breakdown.T - 1.0), 1e-4)
        )
        results.append(
            _at_most(
                suite,
                "burgers_theta_star",
                _circle_distance(breakdown.theta_star, 0.5),
                1.0 / ACCEPTANCE_N,
            )
        )

    u0, _ = _samples("hunter-saxton")
    expected_T = hs_breakdown_time(u0)
    run = _hs_run()
    error = np.max(np.abs(_state_at(run, 0.3).x - hs_solution(u0, 0.3).x))
    results.append(_at_most(suite, "hs_x_at_0.3", error, 1e-7))
    breakdown = run.breakdown
    results.append(_holds(suite, "hs_breakdown", breakdown.occurred))
    if breakdown.occurred:
        results.append(
            _at_most(suite, "hs_T", abs(breakdown.T - expected_T), 1e-4)
        )
        where = np.array([breakdown.theta_star])
        state = run.breakdown_state
        both = max(
            abs(float(evaluate(state.x, where)[0])),
            abs(float(evaluate(state.y, where)[0])),
        )
        results.append(_at_most(suite, "hs_x_y_vanish", both, 1e-3))
        results.append(
            _holds(
                suite,
                "hs_reference_time",
                True,
                f"closed form {expected_T:.6f}, simulated "
                f"{breakdown.T:.6f}, quoted {HS_DEMO_REFERENCE_TIME}",
            )
        )

    u0, sigma = _samples("constant")
    run = integrate(
        u0,
        ModelParams(lam=2.0, sigma=sigma),
        RunConfig(n=ACCEPTANCE_N, dt=ACCEPTANCE_DT, t_end=10.0),
    )
    global_run = not run.breakdown.occurred
    results.append(_holds(suite, "constant_global", global_run))
    results.append(
        _at_most(
            suite,
            "constant_min_x",
            float(np.max(np.abs(run.series["min_x"] - 1.0))),
            1e-12,
        )
    )
    return results


def _conservation_checks(
    name: str, run: RunOutput, results: List[CriterionResult]
) -> None:
    """Drift criteria over the samples before 0.9 T."""
    suite = "conservation"
    series = run.series
    horizon = (
        0.9 * run.breakdown.T if run.breakdown.occurred else math.inf
    )
    window = series[series["t"] <= horizon]
    lam = run.params.lam

    results.append(
        _at_most(
            suite,
            f"{name}_angular_momentum",
            window["angmom_err_max"].max(),
            1e-7,
        )
    )
    results.append(_at_most(suite, f"{name}_c1", window["c1"].max(), 1e-7))
    results.append(_at_most(suite, f"{name}_c3", window["c3"].max(), 1e-6))
    sigma = window["sigma"]
    results.append(
        _at_most(
            suite,
            f"{name}_sigma_drift",
            float(np.max(np.abs(sigma - sigma.iloc[0]))),
            1e-9,
        )
    )
    if lam == 2.0:
        energy = window["E"]
        results.append(
            _at_most(
                suite,
                f"{name}_E_drift",
                float(np.max(np.abs(energy - energy.iloc[0]))),
                1e-6,
            )
        )
    if lam == 3.0:
        positive = window[window["min_x"] > 0.05]["L2"]
        results.append(
            _at_most(
                suite,
                f"{name}_L2_drift",
                float(np.max(np.abs(positive - positive.iloc[0]))),
                1e-6,
            )
        )


def conservation_suite() -> List[CriterionResult]:
    """
    Drift of the conserved quantities and constraints, and the RK4 order.

    Returns
    ------------------------
    List[CriterionResult]
        One result per criterion.
    """
    results = []
    _conservation_checks("burgers", _burgers_run(), results)
    _conservation_checks("hs", _hs_run(), results)
    for lam in (2.0, 3.0):
        _conservation_checks(f"mean_one_lam{lam:g}", _mckean_run(lam), results)

    u0, sigma = _samples("mckean-breakdown")
    study = convergence_study(
        u0,
        ModelParams(lam=2.0, sigma=sigma),
        RunConfig(n=ACCEPTANCE_N, t_end=0.5),
        dts=[0.02, 0.01],
    )
    ratio = study.ratios[0]
    results.append(
        CriterionResult(
            "conservation",
            "rk4_order_ratio",
            ratio,
            None,
            8.0 <= ratio <= 32.0,
            f"errors {study.errors}",
        )
    )
    return results


def mckean_suite() -> List[CriterionResult]:
    """
    Global existence for positive m0, breakdown at a + -> - crossing of a
    sign-changing m0, and the same verdicts for reflected data.

    Returns
    ------------------------
    List[CriterionResult]
        One result per criterion.
    """
    suite = "mckean"
    results = []
    for lam in (2.0, 3.0):
        for reflected in (False, True):
            tag = f"lam{lam:g}" + ("_reflected" if reflected else "")

            u0, sigma = _samples(
                "mckean-global", n=128, reflected=reflected
            )
            params = ModelParams(lam=lam, sigma=sigma)
            run = integrate(u0, params, RunConfig(n=128, dt=5e-3, t_end=50))
            verdict = mckean_classify(u0, params)
            results.append(
                _holds(
                    suite, f"global_{tag}_verdict", verdict.kind == "global"
                )
            )
            results.append(
                _holds(
                    suite,
                    f"global_{tag}_no_breakdown",
                    not run.breakdown.occurred,
                )
            )
            results.append(
                CriterionResult(
                    suite,
                    f"global_{tag}_min_x",
                    float(run.series["min_x"].min()),
                    0.1,
                    bool(run.series["min_x"].min() >= 0.1),
                )
            )

            u0, sigma = _samples("mckean-breakdown", reflected=reflected)
            params = ModelParams(lam=lam, sigma=sigma)
            verdict = mckean_classify(u0, params)
            run = _mckean_run(lam, reflected)
            results.append(
                _holds(
                    suite,
                    f"breakdown_{tag}_verdict",
                    verdict.kind == "breakdown",
                )
            )
            results.append(
                _holds(
                    suite,
                    f"breakdown_{tag}_occurred",
                    run.breakdown.occurred,
                )
            )
            if not run.breakdown.occurred:
                continue

            m0 = initial_momentum(u0)
            crossings = [
                theta
                for theta, direction in sign_crossings(
                    m0, 1e-9 * np.max(np.abs(m0))
                )
                if direction == "+->-"
            ]
            distance = min(
                _circle_distance(run.breakdown.theta_star, theta)
                for theta in crossings
            )
            results.append(
                _at_most(
                    suite,
                    f"breakdown_{tag}_theta_star",
                    distance,
                    2.0 / ACCEPTANCE_N,
                    f"theta_star {run.breakdown.theta_star:.6f}",
                )
            )
            if reflected:
                mirror = _mckean_run(lam).breakdown.theta_star
                results.append(
                    _at_most(
                        suite,
                        f"breakdown_{tag}_mirrored",
                        _circle_distance(
                            run.breakdown.theta_star, 1.0 - mirror
                        ),
                        2.0 / ACCEPTANCE_N,
                    )
                )
    return results


def lemmas_suite() -> List[CriterionResult]:
    """
    Monitors of the breakdown proof on the sign-changing runs.

    Returns
    ------------------------
    List[CriterionResult]
        One result per criterion.
    """
    suite = "lemmas"
    results = []
    for lam in (2.0, 3.0):
        report = lemma_monitors(_mckean_run(lam), tol=1e-4)
        results.append(
            _holds(suite, f"lam{lam:g}_applicable", report.applicable)
        )
        for name in ("monotone", "upper_bound", "decay", "integral_bound"):
            results.append(
                _at_most(
                    suite,
                    f"lam{lam:g}_{name}",
                    getattr(report, f"{name}_margin"),
                    1e-4,
                )
            )
    return results


def residual_suite() -> List[CriterionResult]:
    """
    PDE residual of the reconstructed velocity at three interior times.

    Returns
    ------------------------
    List[CriterionResult]
        One result per criterion.
    """
    suite = "residual"
    cases = [
        ("burgers", 3.0, (0.25, 0.5, 0.75)),
        ("hunter-saxton", 2.0, (0.1, 0.2, 0.3)),
        ("mckean-global", 2.0, (1.0, 2.0, 3.0)),
    ]
    results = []
    for name, lam, times in cases:
        u0, sigma = _samples(name)
        params = ModelParams(lam=lam, sigma=sigma)
        config = RunConfig(
            n=ACCEPTANCE_N,
            dt=ACCEPTANCE_DT,
            t_end=max(times) + ACCEPTANCE_DT,
            sample_every=1,
        )
        run = integrate(u0, params, config)
        for t in times:
            index = int(round(t / ACCEPTANCE_DT))
            snapshots = [
                reconstruct(state, params)
                for state in run.states[index - 1:index + 2]
            ]
            results.append(
                _at_most(
                    suite,
                    f"{name}_t{t:g}",
                    pde_residual(snapshots, params),
                    1e-3,
                )
            )
    return results


def osw_suite() -> List[CriterionResult]:
    """
    Force positivity, breakdown for lambda = 1 and the De Gregorio checks.

    Returns
    ------------------------
    List[CriterionResult]
        One result per criterion.
    """
    suite = "osw"
    results = []
    u0, _ = _samples("sine", n=512)

    run = osw_integrate(u0, 1.0, OswRunConfig(t_end=1.0))
    results.append(_holds(suite, "lam1_force_positive", run.min_force > 0))
    results.append(
        _holds(
            suite,
            "lam1_reaches_threshold",
            run.stopped_early,
            f"stop time {run.stop_time}",
        )
    )

    run = osw_integrate(u0, -1.0, OswRunConfig())
    results.append(
        _holds(suite, "degregorio_force_positive", run.min_force > 0)
    )
    worst, coverage = 0.0, 1.0
    for state in run.states:
        error, covered = transport_error(state)
        worst, coverage = max(worst, error), min(coverage, covered)
    results.append(
        _at_most(
            suite,
            "degregorio_transport",
            worst,
            1e-5,
            f"smallest label coverage {coverage:.3f}",
        )
    )
    ermakov = ermakov_check(run.states)
    for name in ("rho_residual", "linear_residual", "angular_momentum_drift"):
        results.append(
            _at_most(
                suite,
                f"degregorio_{name}",
                getattr(ermakov, name),
                1e-3,
                f"relative {getattr(ermakov, name + '_relative'):.3e}, "
                f"smallest label coverage {ermakov.label_coverage:.3f}",
            )
        )
    bound = degregorio_bound_check(run)
    results.append(
        _at_most(suite, "degregorio_bound", bound.margin, 1e-6)
    )
    return results


def particle_suite() -> List[CriterionResult]:
    """
    Free particle, harmonic orbit, spiral force and the ratio bound.

    Returns
    ------------------------
    List[CriterionResult]
        One result per criterion.
    """
    suite = "particle"
    results = []

    free = particle_integrate(
        constant_force(0.0), ParticleState(1.0, -1.0, 0.0, 0.0), 2.0, 1e-3
    )
    results.append(
        _at_most(suite, "free_zero", abs(free.x_crossings[0] - 1.0), 1e-8)
    )

    orbit = particle_integrate(
        constant_force(-1.0), ParticleState(1.0, 0.0, 0.0, 1.0), 20.0, 1e-3
    )
    results.append(
        _at_most(
            suite,
            "harmonic_radius",
            float(np.max(np.abs(orbit.radius - 1.0))),
            1e-3,
        )
    )

    spiral = particle_integrate(
        spiral_force(1.0), ParticleState(1.0, 0.0, 0.0, 0.1), 0.999, 1e-5
    )
    crossings = len(spiral.x_crossings) + len(spiral.y_crossings)
    results.append(
        CriterionResult(
            suite,
            "spiral_crossings",
            float(crossings),
            3.0,
            crossings >= 3 and len(spiral.x_crossings) >= 2,
            f"x {len(spiral.x_crossings)}, y {len(spiral.y_crossings)}",
        )
    )
    results.append(
        _at_most(
            suite,
            "spiral_radius",
            float(spiral.radius[-1] / spiral.radius[0]),
            0.1,
        )
    )

    for name, force, p0, envelope in (
        ("free", 0.0, ParticleState(1.0, 1.0, 0.0, 0.0), 0.0),
        ("cosh", 1.0, ParticleState(1.0, 0.0, 0.0, 0.0), 1.0),
    ):
        trajectory = particle_integrate(constant_force(force), p0, 3.0, 1e-3)
        passed, margin = riccati_envelope_check(trajectory, envelope)
        results.append(
            CriterionResult(
                suite, f"riccati_{name}", margin, 1e-9, passed
            )
        )
    return results


SUITES: Dict[str, Callable[[], List[CriterionResult]]] = {
    "oracles": oracles_suite,
    "conservation": conservation_suite,
    "mckean": mckean_suite,
    "lemmas": lemmas_suite,
    "osw": osw_suite,
    "particle": particle_suite,
    "residual": residual_suite,
}


def junit_document(name: str, results: List[CriterionResult]) -> str:
    """
    Junit-style XML for one suite.

    Parameters
    ------------------------
    name: str
        Suite name.
    results: List[CriterionResult]
        Criteria outcomes.

    Returns
    ------------------------
    str
        XML document.
    """
    failures = sum(not result.passed for result in results)
    document = {
        "testsuite": {
            "@name": name,
            "@tests": str(len(results)),
            "@failures": str(failures),
            "testcase": [result.to_testcase() for result in results],
        }
    }
    return xmltodict.unparse(document, pretty=True)


def verify(name: str, output_dir: PathLike) -> int:
    """
    Runs one suite and writes verify_<name>.xml to output_dir.

    Parameters
    ------------------------
    name: str
        Suite name.
    output_dir: PathLike
        Directory for the results file.

    Returns
    ------------------------
    int
        0 when every criterion passed, else 1.

    Raises
    ------------------------
    ValueError:
        If the suite does not exist.
    """
    if name not in SUITES:
        raise ValueError(
            f"Unknown suite {name!r}. Available: {sorted(SUITES)}"
        )

    LOGGER.info("Running suite %s", name)
    results = SUITES[name]()
    utils.create_folder(output_dir)
    path = Path(output_dir).joinpath(f"verify_{name}.xml")
    utils.save_string_to_txt(junit_document(name, results), path)

    failed = [result.name for result in results if not result.passed]
    for result in results:
        LOGGER.info(
            "%s %s measured=%s",
            "PASS" if result.passed else "FAIL",
            result.name,
            result.measured,
        )
    if failed:
        LOGGER.warning("Suite %s failed: %s", name, ", ".join(failed))
    return 1 if failed else 0
