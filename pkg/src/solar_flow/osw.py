"""
Okamoto-Sakajo-Wunsch family m_t + u m_theta + lambda u_theta m = 0 with
m = H u_theta, integrated pseudospectrally together with its Lagrangian
flow, and the Ermakov-Pinney form of the flow.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .calculus import (
    FieldLike,
    _unwrap,
    cumulative_integral,
    dealias_mask,
    derivative,
    evaluate,
    half_spectrum,
    hilbert,
    mean,
    trig_basis,
    upsample,
)
from .solar_model import StateOutsideManifoldError

LOGGER = logging.getLogger(__name__)

OSW_SERIES_COLUMNS = [
    "t",
    "min_eta_theta",
    "max_eta_theta",
    "min_F",
    "mean_m",
]


@dataclass(frozen=True)
class OswState:
    """
    Eulerian vorticity and Lagrangian flow of the OSW family.

    Attributes
    ------------------------
    t: float
        Time.
    m: np.ndarray
        Vorticity H u_theta on the Eulerian grid.
    eta: np.ndarray
        Flow map at the labels (not reduced modulo one).
    eta_theta: np.ndarray
        Its label derivative, evolved by its own equation.
    psi: np.ndarray
        Phase of the Ermakov-Pinney planar point.
    lambda_osw: float
        Family parameter.
    m0: np.ndarray
        Initial vorticity.
    """

    t: float
    m: np.ndarray
    eta: np.ndarray
    eta_theta: np.ndarray
    psi: np.ndarray
    lambda_osw: float
    m0: np.ndarray

    @property
    def n(self) -> int:
        """Grid size."""
        return self.m.size

    def pack(self) -> np.ndarray:
        """Concatenates (m, eta, eta_theta, psi)."""
        return np.concatenate([self.m, self.eta, self.eta_theta, self.psi])

    def with_vector(self, t: float, vector: np.ndarray) -> "OswState":
        """Same run constants, new time and packed fields."""
        parts = vector.reshape(4, self.n)
        return OswState(
            t=float(t),
            m=parts[0].copy(),
            eta=parts[1].copy(),
            eta_theta=parts[2].copy(),
            psi=parts[3].copy(),
            lambda_osw=self.lambda_osw,
            m0=self.m0,
        )


def _dealias(values: np.ndarray) -> np.ndarray:
    """Applies the two-thirds rule to real samples."""
    mask = dealias_mask(values.size)
    return np.fft.ifft(np.fft.fft(values) * mask).real


def osw_velocity(
    m: FieldLike, tol: float = 1e-10
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Recovers u and u_theta from m = H u_theta.

    u_theta = -H m, and u is its antiderivative normalized to mean zero.

    Parameters
    ------------------------
    m: FieldLike
        Vorticity samples.
    tol: float
        Allowed |mean(m)| relative to max(1, max |m|). Default 1e-10.

    Returns
    ------------------------
    Tuple[np.ndarray, np.ndarray]
        u and u_theta.

    Raises
    ------------------------
    ValueError:
        If mean(m) is not zero.
    """
    values, _ = _unwrap(m)
    average = mean(values)
    if abs(average) > tol * max(1.0, float(np.max(np.abs(values)))):
        raise ValueError(f"m = H u_theta has zero mean. Received {average!r}")

    u_theta = -hilbert(values)
    u = cumulative_integral(u_theta)
    return u - mean(u), u_theta


def _force_fine(u: np.ndarray) -> np.ndarray:
    """
    F = -u u_thetatheta - H(u H u_thetatheta) on the grid twice as fine,
    where the quadratic products are free of aliasing.
    """
    u_fine = upsample(u, 2)
    curvature_fine = upsample(derivative(u, order=2), 2)
    product = u_fine * hilbert(curvature_fine)
    return -u_fine * curvature_fine - hilbert(product)


def osw_force(u: FieldLike) -> np.ndarray:
    """
    Force coefficient F = -u u_thetatheta - H(u H u_thetatheta).

    Products are formed on a grid twice as fine and the result is sampled
    back at the original points, so the values are exact for band-limited
    u.

    Parameters
    ------------------------
    u: FieldLike
        Velocity samples.

    Returns
    ------------------------
    np.ndarray
        F at the grid points.
    """
    values, _ = _unwrap(u)
    return _force_fine(values)[::2]


def osw_initial_state(u0: FieldLike, lambda_osw: float) -> OswState:
    """
    m0 = H u0' (dealiased), eta = theta, eta_theta = 1, psi = 0.

    Parameters
    ------------------------
    u0: FieldLike
        Initial velocity samples.
    lambda_osw: float
        Family parameter.

    Returns
    ------------------------
    OswState
        State at t = 0.
    """
    values, _ = _unwrap(u0)
    n = values.size
    m0 = _dealias(hilbert(derivative(values)))
    return OswState(
        t=0.0,
        m=m0.copy(),
        eta=np.arange(n) / n,
        eta_theta=np.ones(n),
        psi=np.zeros(n),
        lambda_osw=float(lambda_osw),
        m0=m0,
    )


def _slope(state: OswState, vector: np.ndarray) -> np.ndarray:
    """Time derivative of the packed (m, eta, eta_theta, psi)."""
    n = state.n
    lam = state.lambda_osw
    m, eta, eta_theta, _ = vector.reshape(4, n)

    if np.min(eta_theta) <= 0:
        index = int(np.argmin(eta_theta))
        raise StateOutsideManifoldError(
            f"eta_theta = {eta_theta[index]:.3e} <= 0",
            t=state.t,
            theta=index / n,
        )

    m = _dealias(m)
    u, u_theta = osw_velocity(m, tol=1e-8)
    transport = u * derivative(m) + lam * u_theta * m
    dm = -_dealias(transport)

    # u and u_theta at eta share one power table
    coefficients = half_spectrum(u, max_mode=n // 3)
    k = np.arange(coefficients.size)
    basis = trig_basis(eta, coefficients.size - 1)
    u_eta = (basis @ coefficients).real
    u_theta_eta = (basis @ (coefficients * 2j * np.pi * k)).real

    dpsi = lam * state.m0 / 2.0 * np.power(eta_theta, -lam)
    return np.concatenate([dm, u_eta, u_theta_eta * eta_theta, dpsi])


def osw_step(state: OswState, dt: float) -> OswState:
    """
    One RK4 step of m, eta, eta_theta and psi.

    eta_t = u(eta), eta_thetat = u_theta(eta) eta_theta and
    psi_t = (lambda m0 / 2) / eta_theta^lambda, with u evaluated on its
    trigonometric interpolant.

    Parameters
    ------------------------
    state: OswState
        Current state.
    dt: float
        Step size.

    Returns
    ------------------------
    OswState
        State at t + dt.

    Raises
    ------------------------
    StateOutsideManifoldError:
        If eta_theta reaches zero at some stage.
    RuntimeError:
        If the result is not finite.
    """
    y0 = state.pack()
    k1 = _slope(state, y0)
    k2 = _slope(state, y0 + 0.5 * dt * k1)
    k3 = _slope(state, y0 + 0.5 * dt * k2)
    k4 = _slope(state, y0 + dt * k3)
    vector = y0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(vector)):
        raise RuntimeError(f"Non-finite OSW state after t = {state.t}")
    return state.with_vector(state.t + dt, vector)


@dataclass(frozen=True)
class OswRunConfig:
    """
    Settings of an OSW run.

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
    stop_eta_theta: float
        For lambda > 0 the run stops once min eta_theta falls to this
        value.
    """

    n: int = 512
    dt: float = 5e-4
    t_end: float = 5.0
    sample_every: int = 10
    stop_eta_theta: float = 0.01

    def __post_init__(self) -> None:
        """Validates the settings."""
        if self.dt <= 0 or self.t_end <= 0:
            raise ValueError("dt and t_end must be positive")
        if self.sample_every < 1:
            raise ValueError("sample_every must be a positive integer")

    @property
    def n_steps(self) -> int:
        """Number of RK4 steps to t_end."""
        return max(int(round(self.t_end / self.dt)), 1)


@dataclass
class OswRunOutput:
    """
    Stored samples and monitors of an OSW run.
    """

    lambda_osw: float
    config: OswRunConfig
    u0: np.ndarray
    states: List[OswState]
    series: pd.DataFrame
    min_force: float
    stopped_early: bool = False
    stop_time: Optional[float] = None

    @property
    def m0(self) -> np.ndarray:
        """Initial vorticity."""
        return self.states[0].m0


def osw_integrate(
    u0: FieldLike, lambda_osw: float, config: OswRunConfig
) -> OswRunOutput:
    """
    Integrates the OSW family from u0 to t_end, checking F > 0 at every
    step and stopping early when min eta_theta falls to stop_eta_theta
    (lambda > 0).

    Parameters
    ------------------------
    u0: FieldLike
        Initial velocity samples (length config.n).
    lambda_osw: float
        Family parameter.
    config: OswRunConfig
        Run settings.

    Returns
    ------------------------
    OswRunOutput
        Samples, series and monitors.
    """
    values, _ = _unwrap(u0)
    if values.size != config.n:
        raise ValueError(
            f"u0 has {values.size} samples, config expects n = {config.n}"
        )

    state = osw_initial_state(values, lambda_osw)
    states = [state]
    rows = [_series_row(state)]
    min_force = rows[0]["min_F"]
    stopped_early, stop_time = False, None

    LOGGER.info(
        "OSW run lambda=%g n=%d dt=%g t_end=%g",
        lambda_osw,
        config.n,
        config.dt,
        config.t_end,
    )

    for step in range(config.n_steps):
        try:
            candidate = osw_step(state, config.dt)
        except StateOutsideManifoldError as error:
            LOGGER.info("OSW run left the manifold: %s", error)
            stopped_early, stop_time = True, state.t
            break
        state = candidate.with_vector((step + 1) * config.dt, candidate.pack())
        row = _series_row(state)
        min_force = min(min_force, row["min_F"])
        if row["min_F"] <= 0 and np.max(np.abs(state.m)) > 0:
            LOGGER.warning("F <= 0 at t=%.6f: %.3e", state.t, row["min_F"])

        reached = (
            lambda_osw > 0
            and row["min_eta_theta"] <= config.stop_eta_theta
        )
        if (step + 1) % config.sample_every == 0 or reached or (
            step + 1 == config.n_steps
        ):
            states.append(state)
            rows.append(row)
        if reached:
            stopped_early, stop_time = True, state.t
            LOGGER.info(
                "min eta_theta = %.3e at t = %.6f",
                row["min_eta_theta"],
                state.t,
            )
            break

    return OswRunOutput(
        lambda_osw=float(lambda_osw),
        config=config,
        u0=values.copy(),
        states=states,
        series=pd.DataFrame(rows, columns=OSW_SERIES_COLUMNS),
        min_force=float(min_force),
        stopped_early=stopped_early,
        stop_time=stop_time,
    )


def _series_row(state: OswState) -> Dict[str, float]:
    """Monitors of one OSW state."""
    u, _ = osw_velocity(state.m, tol=1e-8)
    force = osw_force(u)
    return {
        "t": state.t,
        "min_eta_theta": float(np.min(state.eta_theta)),
        "max_eta_theta": float(np.max(state.eta_theta)),
        "min_F": float(np.min(force)) if np.any(u) else 0.0,
        "mean_m": mean(state.m),
    }


def force_at_flow(state: OswState) -> np.ndarray:
    """
    F(eta) at the labels, evaluated from the alias-free fine-grid F.

    Parameters
    ------------------------
    state: OswState
        Current state.

    Returns
    ------------------------
    np.ndarray
        F composed with the flow map.
    """
    u, _ = osw_velocity(state.m, tol=1e-8)
    return evaluate(_force_fine(u), state.eta)


def transport_error(
    state: OswState, max_amplification: float = 1e5
) -> Tuple[float, float]:
    """
    max |eta_theta^lambda m(eta) - m0| over labels whose weight
    eta_theta^lambda stays below max_amplification.

    Larger weights multiply the round-off of m(eta) past any useful
    tolerance once labels crowd together.

    Parameters
    ------------------------
    state: OswState
        Current state.
    max_amplification: float
        Largest weight checked. Default 1e5.

    Returns
    ------------------------
    Tuple[float, float]
        Maximal error and the fraction of labels checked.
    """
    weight = np.power(state.eta_theta, state.lambda_osw)
    checked = weight <= max_amplification
    if not np.any(checked):
        return 0.0, 0.0
    transported = weight * evaluate(state.m, state.eta)
    error = np.abs(transported - state.m0)
    return float(np.max(error[checked])), float(np.mean(checked))


@dataclass
class ErmakovReport:
    """
    Residuals of the Ermakov-Pinney form over a run.

    The plain residuals are absolute. The *_relative values divide by the
    size of the terms each equation balances.
    """

    rho_residual: float = 0.0
    linear_residual: float = 0.0
    angular_momentum_drift: float = 0.0
    rho_residual_relative: float = 0.0
    linear_residual_relative: float = 0.0
    angular_momentum_drift_relative: float = 0.0
    f_positivity: float = math.inf
    windows_checked: int = 0
    label_coverage: float = 1.0

    def to_dict(self) -> dict:
        """Plain dictionary used by report.json."""
        return {
            "rho_residual": self.rho_residual,
            "linear_residual": self.linear_residual,
            "angular_momentum_drift": self.angular_momentum_drift,
            "rho_residual_relative": self.rho_residual_relative,
            "linear_residual_relative": self.linear_residual_relative,
            "angular_momentum_drift_relative": (
                self.angular_momentum_drift_relative
            ),
            "f_positivity": self.f_positivity,
            "windows_checked": self.windows_checked,
            "label_coverage": self.label_coverage,
        }


def _second_difference(samples: np.ndarray, delta: float) -> np.ndarray:
    """Five-point central second derivative at the middle sample."""
    weights = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
    return np.tensordot(weights, samples, axes=1) / delta**2


def _first_difference(samples: np.ndarray, delta: float) -> np.ndarray:
    """Five-point central first derivative at the middle sample."""
    weights = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
    return np.tensordot(weights, samples, axes=1) / delta


def ermakov_check(
    states: Sequence[OswState], max_amplification: float = 1e2
) -> ErmakovReport:
    """
    Checks rho_tt = (lambda^2/4) m0^2 / rho^3 - (lambda/2) F(eta) rho with
    rho = eta_theta^(lambda/2), the linear equations
    x_tt = -(lambda/2) F(eta) x of x = rho cos psi and y = rho sin psi, and
    x y_t - y x_t = (lambda/2) m0.

    Time derivatives are five-point central differences over windows of
    equally spaced samples. Labels whose rho^2 = eta_theta^lambda leaves
    [1 / max_amplification, max_amplification] anywhere in a window are
    skipped there, since eta_theta itself has lost its relative precision.

    Parameters
    ------------------------
    states: Sequence[OswState]
        Stored samples of one run.
    max_amplification: float
        Largest rho^2 and 1 / rho^2 checked. Default 1e2.

    Returns
    ------------------------
    ErmakovReport
        Worst absolute and relative residuals and min F.

    Raises
    ------------------------
    ValueError:
        If fewer than five samples are given or eta_theta <= 0.
    """
    if len(states) < 5:
        raise ValueError("ermakov_check needs at least five samples")

    report = ErmakovReport()
    for state in states:
        if np.min(state.eta_theta) <= 0:
            raise ValueError(f"eta_theta <= 0 at t = {state.t}")
        if np.any(state.m):
            u, _ = osw_velocity(state.m, tol=1e-8)
            report.f_positivity = min(
                report.f_positivity, float(np.min(osw_force(u)))
            )

    windows = zip(*(states[offset:] for offset in range(5)))
    for window in windows:
        times = np.array([state.t for state in window])
        steps = np.diff(times)
        delta = float(steps[0])
        if delta <= 0 or not np.allclose(steps, delta, rtol=1e-9, atol=0):
            continue
        now = window[2]
        lam = now.lambda_osw
        m0 = now.m0

        weight = np.array([state.eta_theta**lam for state in window])
        checked = np.all(
            (weight <= max_amplification)
            & (weight >= 1.0 / max_amplification),
            axis=0,
        )
        report.label_coverage = min(
            report.label_coverage, float(np.mean(checked))
        )
        if not np.any(checked):
            continue
        report.windows_checked += 1

        rho = np.sqrt(weight)
        psi = np.array([state.psi for state in window])
        x, y = rho * np.cos(psi), rho * np.sin(psi)
        force = force_at_flow(now)
        half = lam / 2.0

        repulsion = half**2 * m0**2 / rho[2] ** 3
        attraction = half * force * rho[2]
        residual = np.abs(
            _second_difference(rho, delta) - repulsion + attraction
        )[checked]
        scale = (1.0 + np.abs(repulsion) + np.abs(attraction))[checked]
        report.rho_residual = max(report.rho_residual, float(np.max(residual)))
        report.rho_residual_relative = max(
            report.rho_residual_relative, float(np.max(residual / scale))
        )

        scale = (rho[2] * (1.0 + np.abs(half * force)))[checked]
        for coordinate in (x, y):
            residual = np.abs(
                _second_difference(coordinate, delta)
                + half * force * coordinate[2]
            )[checked]
            report.linear_residual = max(
                report.linear_residual, float(np.max(residual))
            )
            report.linear_residual_relative = max(
                report.linear_residual_relative,
                float(np.max(residual / scale)),
            )

        momentum = x[2] * _first_difference(y, delta) - y[2] * (
            _first_difference(x, delta)
        )
        drift = np.abs(momentum - half * m0)[checked]
        report.angular_momentum_drift = max(
            report.angular_momentum_drift, float(np.max(drift))
        )
        report.angular_momentum_drift_relative = max(
            report.angular_momentum_drift_relative,
            float(np.max(drift / (1.0 + np.abs(half * m0[checked])))),
        )

    return report


@dataclass
class BoundReport:
    """
    Worst margin of eta_theta <= 1 + u0'^2 / m0^2.
    """

    margin: float = -math.inf
    points_checked: int = 0
    tol: float = 1e-6
    worst_theta: Optional[float] = None
    worst_t: Optional[float] = None

    @property
    def passed(self) -> bool:
        """Margin within tolerance (vacuous with no qualifying point)."""
        return self.margin <= self.tol

    def to_dict(self) -> dict:
        """Plain dictionary used by report.json."""
        return {
            "margin": self.margin,
            "points_checked": self.points_checked,
            "tol": self.tol,
            "worst_theta": self.worst_theta,
            "worst_t": self.worst_t,
            "passed": self.passed,
        }


def degregorio_bound_check(
    run: OswRunOutput,
    u0: Optional[FieldLike] = None,
    delta: Optional[float] = None,
    tol: float = 1e-6,
) -> BoundReport:
    """
    Checks eta_theta(t, theta) <= 1 + u0'(theta)^2 / m0(theta)^2 for the
    De Gregorio member (lambda = -1) at labels with |m0| > delta.

    Parameters
    ------------------------
    run: OswRunOutput
        De Gregorio run.
    u0: Optional[FieldLike]
        Initial data. Default: the data of the run.
    delta: Optional[float]
        Threshold on |m0|. Default 0.1 max |m0|.
    tol: float
        Allowed violation. Default 1e-6.

    Returns
    ------------------------
    BoundReport
        Worst margin and its location.

    Raises
    ------------------------
    ValueError:
        If the run is not lambda = -1.
    """
    if run.lambda_osw != -1.0:
        raise ValueError(
            f"The bound holds for lambda = -1. Received: {run.lambda_osw}"
        )
    values = run.u0 if u0 is None else _unwrap(u0)[0]
    m0 = run.m0
    slope = derivative(values)
    report = BoundReport(tol=tol)

    largest = float(np.max(np.abs(m0)))
    if largest == 0.0:
        return report
    threshold = 0.1 * largest if delta is None else delta
    qualifying = np.abs(m0) > threshold
    report.points_checked = int(np.count_nonzero(qualifying))
    if report.points_checked == 0:
        return report

    bound = 1.0 + slope[qualifying] ** 2 / m0[qualifying] ** 2
    labels = np.flatnonzero(qualifying) / m0.size
    for state in run.states:
        excess = state.eta_theta[qualifying] - bound
        index = int(np.argmax(excess))
        if excess[index] > report.margin:
            report.margin = float(excess[index])
            report.worst_theta = float(labels[index])
            report.worst_t = state.t

    if not report.passed:
        LOGGER.warning("De Gregorio bound violated: %s", report.to_dict())
    return report
