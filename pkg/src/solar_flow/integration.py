"""
Fixed-step RK4 integration of the solar system with breakdown detection
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from .calculus import FieldLike, _unwrap, continuous_min, evaluate
from .solar_model import (
    EPS_POS,
    ModelParams,
    SolarState,
    StateOutsideManifoldError,
    angular_momentum,
    constraint_residuals,
    initial_momentum,
    initial_state,
    lagrangian_invariants,
    rhs,
)

LOGGER = logging.getLogger(__name__)

SERIES_COLUMNS = [
    "t",
    "min_x",
    "E",
    "L2",
    "sigma",
    "angmom_err_max",
    "c1",
    "c2",
    "c3",
]

# grid minimum above which the oversampled minimum is not needed
COARSE_MIN_THRESHOLD = 0.25


@dataclass(frozen=True)
class RunConfig:
    """
    Numerical settings of one run.

    Attributes
    ------------------------
    n: int
        Grid size.
    dt: float
        RK4 step.
    t_end: float
        Horizon.
    sample_every: int
        Steps between stored samples.
    event_refine_tol: float
        Width of the final breakdown bracket in time.
    continuation: bool
        Integrate past breakdown (lambda = 2 and 3 only).
    constraint_tol: float
        Tolerance above which constraint drift is logged as a warning.
    eps_pos: float
        Positivity threshold for non-integer gamma.
    eps_sign_factor: float
        Sign band for m0, relative to max |m0|.
    min_oversample: int
        Oversampling factor for min_theta x.
    """

    n: int = 256
    dt: float = 1e-3
    t_end: float = 1.0
    sample_every: int = 10
    event_refine_tol: float = 1e-7
    continuation: bool = False
    constraint_tol: float = 1e-7
    eps_pos: float = EPS_POS
    eps_sign_factor: float = 1e-9
    min_oversample: int = 4

    def __post_init__(self) -> None:
        """Validates the settings."""
        if self.dt <= 0 or self.t_end <= 0:
            raise ValueError("dt and t_end must be positive")
        every = self.sample_every
        if int(every) != every or every < 1:
            raise ValueError("sample_every must be a positive integer")
        if self.event_refine_tol < np.finfo(float).eps * self.t_end:
            raise ValueError("event_refine_tol is below machine resolution")

    @property
    def n_steps(self) -> int:
        """Number of RK4 steps to t_end."""
        return max(int(round(self.t_end / self.dt)), 1)


@dataclass
class BreakdownReport:
    """
    Outcome of breakdown detection.

    Attributes
    ------------------------
    occurred: bool
        Whether min_theta x reached zero before t_end.
    T: Optional[float]
        Breakdown time.
    theta_star: Optional[float]
        Label where x vanishes.
    sign_transition: Optional[str]
        Sign pattern of m0 around theta_star.
    min_x_history: List[Tuple[float, float]]
        (t, min_theta x) at the stored samples.
    refine_width: Optional[float]
        Final bracket width of the bisection.
    refine_steps: int
        Number of bisection steps.
    """

    occurred: bool = False
    T: Optional[float] = None
    theta_star: Optional[float] = None
    sign_transition: Optional[str] = None
    min_x_history: List[Tuple[float, float]] = field(default_factory=list)
    refine_width: Optional[float] = None
    refine_steps: int = 0
    x_at_T: Optional[float] = None

    def to_dict(self) -> dict:
        """
        Plain dictionary used by report.json.

        Returns
        ------------------------
        dict
            Breakdown fields, history as two lists.
        """
        return {
            "occurred": self.occurred,
            "T": self.T,
            "theta_star": self.theta_star,
            "sign_transition": self.sign_transition,
            "x_at_T": self.x_at_T,
            "refine_width": self.refine_width,
            "refine_steps": self.refine_steps,
            "min_x_history": {
                "t": [t for t, _ in self.min_x_history],
                "min_x": [value for _, value in self.min_x_history],
            },
        }


@dataclass
class RunOutput:
    """
    Samples, diagnostics and breakdown report of one run.
    """

    params: ModelParams
    config: RunConfig
    u0: np.ndarray
    m0: np.ndarray
    states: List[SolarState]
    series: pd.DataFrame
    breakdown: BreakdownReport
    breakdown_state: Optional[SolarState] = None

    @property
    def times(self) -> np.ndarray:
        """Times of the stored samples."""
        return np.array([state.t for state in self.states])

    @property
    def final_state(self) -> SolarState:
        """Last stored sample."""
        return self.states[-1]


def step_rk4(
    state: SolarState,
    params: ModelParams,
    dt: float,
    eps_pos: float = EPS_POS,
) -> SolarState:
    """
    One classical RK4 step of the full state, including the time
    integral of x^gamma and the base point.

    Parameters
    ------------------------
    state: SolarState
        Current phase point.
    params: ModelParams
        Model parameters.
    dt: float
        Step size (may be zero).
    eps_pos: float
        Positivity threshold for non-integer gamma.

    Returns
    ------------------------
    SolarState
        State at t + dt.

    Raises
    ------------------------
    StateOutsideManifoldError:
        If a stage leaves the manifold.
    """
    y0 = state.pack()
    t0 = state.t

    def slope(t: float, vector: np.ndarray) -> np.ndarray:
        return rhs(SolarState.unpack(t, vector), params, eps_pos).pack()

    k1 = slope(t0, y0)
    k2 = slope(t0 + 0.5 * dt, y0 + 0.5 * dt * k1)
    k3 = slope(t0 + 0.5 * dt, y0 + 0.5 * dt * k2)
    k4 = slope(t0 + dt, y0 + dt * k3)
    return SolarState.unpack(
        t0 + dt, y0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    )


def min_x(state: SolarState, oversample: int = 4) -> Tuple[float, float]:
    """
    Minimum over theta of x and its location.

    The grid minimum is used while it is comfortably positive; closer to
    zero the trigonometric interpolant is oversampled.

    Parameters
    ------------------------
    state: SolarState
        Phase point.
    oversample: int
        Oversampling factor near zero. Default 4.

    Returns
    ------------------------
    Tuple[float, float]
        min x and theta where it is attained.
    """
    index = int(np.argmin(state.x))
    if state.x[index] > COARSE_MIN_THRESHOLD:
        return float(state.x[index]), index / state.n
    return continuous_min(state.x, oversample)


def sign_crossings(f: FieldLike, eps: float) -> List[Tuple[float, str]]:
    """
    Sign changes of a periodic field with values within eps treated as
    zero.

    Crossings are located on the trigonometric interpolant with brentq.

    Parameters
    ------------------------
    f: FieldLike
        Periodic samples.
    eps: float
        Sign band.

    Returns
    ------------------------
    List[Tuple[float, str]]
        (theta, direction) with direction "+->-" or "-->+",
        sorted by theta.
    """
    values, _ = _unwrap(f)
    n = values.size
    signs = np.where(values > eps, 1, np.where(values < -eps, -1, 0))
    nonzero = np.flatnonzero(signs)
    if nonzero.size == 0:
        return []

    def interpolant(theta: float) -> float:
        return float(evaluate(values, np.array([theta]))[0])

    crossings = []
    for position, index in enumerate(nonzero):
        following = nonzero[(position + 1) % nonzero.size]
        if signs[index] == signs[following]:
            continue
        lower = index / n
        upper = following / n
        if upper <= lower:
            upper += 1.0
        try:
            root = brentq(interpolant, lower, upper, xtol=1e-14)
        except ValueError:
            root = 0.5 * (lower + upper)
        direction = "+->-" if signs[index] > 0 else "-->+"
        crossings.append((float(np.mod(root, 1.0)), direction))

    return sorted(crossings)


def classify_sign_transition(
    m0: np.ndarray, theta_star: float, eps: float
) -> str:
    """
    Sign pattern of m0 on both sides of theta_star.

    Parameters
    ------------------------
    m0: np.ndarray
        Initial momentum samples.
    theta_star: float
        Breakdown label.
    eps: float
        Sign band.

    Returns
    ------------------------
    str
        "+->-", "-->+", "interior-negative", "interior-positive" or
        "indeterminate".
    """
    delta = 2.0 / m0.size
    left, right = evaluate(
        m0, np.array([theta_star - delta, theta_star + delta])
    )
    if left > eps and right < -eps:
        return "+->-"
    if left < -eps and right > eps:
        return "-->+"
    if left < -eps and right < -eps:
        return "interior-negative"
    if left > eps and right > eps:
        return "interior-positive"
    return "indeterminate"


def _breakdown_threshold(params: ModelParams, config: RunConfig) -> float:
    """min x at or below which the flow map has broken down."""
    return 0.0 if params.continues_through_zero else config.eps_pos


def _bracket_value(
    state: SolarState, params: ModelParams, tau: float, config: RunConfig
) -> Tuple[float, Optional[SolarState]]:
    """min x after a partial step tau, -inf when the step fails."""
    try:
        trial = step_rk4(state, params, tau, config.eps_pos)
    except StateOutsideManifoldError:
        return -math.inf, None
    return min_x(trial, config.min_oversample)[0], trial


def refine_breakdown(
    checkpoint: SolarState,
    params: ModelParams,
    config: RunConfig,
    m0: np.ndarray,
) -> Tuple[BreakdownReport, SolarState]:
    """
    Locates the first zero of min_theta x in the step following a
    checkpoint by bisection on a single partial RK4 step.

    For non-integer gamma the zero is replaced by the positivity
    threshold eps_pos and the returned state is the last one above it.

    Parameters
    ------------------------
    checkpoint: SolarState
        Last state with min x above the breakdown threshold.
    params: ModelParams
        Model parameters.
    config: RunConfig
        Run settings (dt and event_refine_tol).
    m0: np.ndarray
        Initial momentum, used to classify the sign transition.

    Returns
    ------------------------
    Tuple[BreakdownReport, SolarState]
        Report (without history) and the state at T.

    Raises
    ------------------------
    RuntimeError:
        If min x does not cross the threshold within one step.
    """
    threshold = _breakdown_threshold(params, config)
    lower, upper = 0.0, config.dt
    lower_state = checkpoint
    lower_value = min_x(checkpoint, config.min_oversample)[0]
    upper_value, _ = _bracket_value(checkpoint, params, upper, config)
    if not (lower_value > threshold >= upper_value):
        raise RuntimeError(
            f"No breakdown bracket after t = {checkpoint.t}: min x goes "
            f"from {lower_value} to {upper_value}"
        )

    steps = 0
    while upper - lower > config.event_refine_tol:
        middle = 0.5 * (lower + upper)
        value, trial = _bracket_value(checkpoint, params, middle, config)
        if value > threshold:
            lower, lower_state = middle, trial
        else:
            upper = middle
        steps += 1

    tau = 0.5 * (lower + upper)
    if params.continues_through_zero:
        state_at_T = step_rk4(checkpoint, params, tau)
    else:
        state_at_T = lower_state
    x_at_T, theta_star = continuous_min(state_at_T.x, config.min_oversample)

    eps = config.eps_sign_factor * float(np.max(np.abs(m0)))
    report = BreakdownReport(
        occurred=True,
        T=float(checkpoint.t + tau),
        theta_star=float(theta_star),
        sign_transition=classify_sign_transition(m0, theta_star, eps),
        refine_width=upper - lower,
        refine_steps=steps,
        x_at_T=float(x_at_T),
    )
    LOGGER.info(
        "Breakdown at T = %.9f, theta* = %.6f (%s)",
        report.T,
        report.theta_star,
        report.sign_transition,
    )
    return report, state_at_T


def diagnostics_row(
    state: SolarState, params: ModelParams, m0: np.ndarray, config: RunConfig
) -> Dict[str, float]:
    """
    One row of the diagnostics series.

    Parameters
    ------------------------
    state: SolarState
        Phase point.
    params: ModelParams
        Model parameters.
    m0: np.ndarray
        Initial momentum.
    config: RunConfig
        Run settings.

    Returns
    ------------------------
    Dict[str, float]
        Values keyed by SERIES_COLUMNS.
    """
    invariants = lagrangian_invariants(state, params, config.eps_pos)
    residuals = constraint_residuals(state, params)
    row = {
        "t": state.t,
        "min_x": min_x(state, config.min_oversample)[0],
        "E": invariants["E"],
        "L2": invariants["L2"],
        "sigma": invariants["sigma"],
        "angmom_err_max": float(
            np.max(np.abs(angular_momentum(state) - m0))
        ),
    }
    row.update(residuals)
    return row


def integrate(
    u0: FieldLike, params: ModelParams, config: RunConfig
) -> RunOutput:
    """
    Integrates from the initial state of u0 to t_end or to breakdown.

    After a breakdown the run stops, unless continuation is requested
    and x may cross zero (lambda = 2, 3).

    Parameters
    ------------------------
    u0: FieldLike
        Initial velocity samples (length config.n).
    params: ModelParams
        Model parameters.
    config: RunConfig
        Run settings.

    Returns
    ------------------------
    RunOutput
        Stored samples, diagnostics series and breakdown report.

    Raises
    ------------------------
    ValueError:
        If u0 does not live on the configured grid.
    StateOutsideManifoldError:
        If continuation is requested for a non-integer gamma.
    RuntimeError:
        If the state becomes non-finite. Errors raised inside the time loop
        carry the samples so far as ``partial_output`` (a RunOutput).
    """
    values, _ = _unwrap(u0)
    if values.size != config.n:
        raise ValueError(
            f"u0 has {values.size} samples, config expects n = {config.n}"
        )
    if config.continuation and not params.continues_through_zero:
        raise StateOutsideManifoldError(
            "Continuation needs a positive integer gamma (lambda = 2, 3). "
            f"Received: {params.gamma}",
            t=0.0,
            theta=0.0,
        )

    m0 = initial_momentum(values)
    state = initial_state(values, params)
    states = [state]
    rows = [diagnostics_row(state, params, m0, config)]
    report = BreakdownReport()
    report.min_x_history.append((0.0, rows[0]["min_x"]))
    breakdown_state = None

    LOGGER.info(
        "Run lambda=%g sigma=%g n=%d dt=%g t_end=%g",
        params.lam,
        params.sigma,
        config.n,
        config.dt,
        config.t_end,
    )

    threshold = _breakdown_threshold(params, config)
    previous_min = rows[0]["min_x"]
    try:
        for step in range(config.n_steps):
            t_next = (step + 1) * config.dt
            try:
                candidate = step_rk4(state, params, config.dt, config.eps_pos)
                candidate_min = min_x(candidate, config.min_oversample)[0]
            except StateOutsideManifoldError:
                candidate, candidate_min = None, -math.inf

            if (
                not report.occurred
                and previous_min > threshold >= candidate_min
            ):
                found, breakdown_state = refine_breakdown(
                    state, params, config, m0
                )
                found.min_x_history = report.min_x_history
                report = found
                if not config.continuation:
                    states.append(breakdown_state)
                    rows.append(
                        diagnostics_row(breakdown_state, params, m0, config)
                    )
                    report.min_x_history.append(
                        (breakdown_state.t, rows[-1]["min_x"])
                    )
                    break

            if candidate is None or not np.all(
                np.isfinite(candidate.pack())
            ):
                raise RuntimeError(f"Non-finite state at t = {t_next}")

            state = candidate.at_time(t_next)
            previous_min = candidate_min

            if (step + 1) % config.sample_every == 0 or (
                step + 1 == config.n_steps
            ):
                states.append(state)
                row = diagnostics_row(state, params, m0, config)
                rows.append(row)
                report.min_x_history.append((state.t, row["min_x"]))
                LOGGER.debug(
                    "t=%.6f min_x=%.6e angmom_err=%.3e",
                    state.t,
                    row["min_x"],
                    row["angmom_err_max"],
                )
                drift = max(row["c1"], row["c2"])
                if drift > config.constraint_tol and row["min_x"] > 0:
                    LOGGER.warning(
                        "Constraint drift %.3e at t=%.6f exceeds %.1e",
                        drift,
                        state.t,
                        config.constraint_tol,
                    )
    except RuntimeError as error:
        # samples up to the failure travel with the error
        error.partial_output = RunOutput(
            params=params,
            config=config,
            u0=values.copy(),
            m0=m0,
            states=states,
            series=pd.DataFrame(rows, columns=SERIES_COLUMNS),
            breakdown=report,
            breakdown_state=breakdown_state,
        )
        LOGGER.error("Run failed after t=%.6f: %s", states[-1].t, error)
        raise

    series = pd.DataFrame(rows, columns=SERIES_COLUMNS)
    LOGGER.info(
        "Run finished at t=%.6f, breakdown=%s", states[-1].t, report.occurred
    )
    return RunOutput(
        params=params,
        config=config,
        u0=values.copy(),
        m0=m0,
        states=states,
        series=series,
        breakdown=report,
        breakdown_state=breakdown_state,
    )


@dataclass
class ConvergenceResult:
    """
    Errors of a step-halving study.
    """

    dts: List[float]
    errors: List[float]

    @property
    def ratios(self) -> List[float]:
        """Error ratios between consecutive step sizes."""
        return [
            self.errors[i] / self.errors[i + 1]
            for i in range(len(self.errors) - 1)
        ]

    @property
    def orders(self) -> List[float]:
        """Observed orders log(ratio) / log(dt ratio)."""
        return [
            math.log(self.errors[i] / self.errors[i + 1])
            / math.log(self.dts[i] / self.dts[i + 1])
            for i in range(len(self.errors) - 1)
        ]


def convergence_study(
    u0: FieldLike,
    params: ModelParams,
    config: RunConfig,
    dts: Sequence[float],
    oracle_x: Optional[np.ndarray] = None,
) -> ConvergenceResult:
    """
    Runs the same problem with each dt up to config.t_end and measures
    the error at the final time.

    With an oracle the error is max |x - oracle_x|; without one it is the
    maximal angular momentum error.

    Parameters
    ------------------------
    u0: FieldLike
        Initial velocity samples.
    params: ModelParams
        Model parameters.
    config: RunConfig
        Base settings; dt is replaced by each entry of dts.
    dts: Sequence[float]
        Step sizes, typically halving.
    oracle_x: Optional[np.ndarray]
        Exact x at config.t_end.

    Returns
    ------------------------
    ConvergenceResult
        Step sizes and errors.
    """
    errors = []
    for dt in dts:
        run_config = replace(config, dt=float(dt))
        output = integrate(u0, params, run_config)
        final = output.final_state
        if oracle_x is not None:
            error = float(np.max(np.abs(final.x - oracle_x)))
        else:
            error = float(np.max(np.abs(angular_momentum(final) - output.m0)))
        LOGGER.info("dt=%g error=%.3e", dt, error)
        errors.append(error)

    return ConvergenceResult(dts=[float(dt) for dt in dts], errors=errors)
