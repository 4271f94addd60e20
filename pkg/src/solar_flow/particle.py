"""
Single planar particle under a prescribed central force x'' = F(t) x,
y'' = F(t) y, with the barrier and envelope bounds that govern how close
such a particle can get to the origin.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Tuple, Union

import numpy as np
from scipy.optimize import brentq

LOGGER = logging.getLogger(__name__)

ForceFunction = Callable[[float], float]


@dataclass(frozen=True)
class ParticleState:
    """
    Position and velocity of one particle.
    """

    x: float
    vx: float
    y: float
    vy: float

    def __post_init__(self) -> None:
        """Rejects non-finite components."""
        for name in ("x", "vx", "y", "vy"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"Particle component {name} is not finite")
            object.__setattr__(self, name, value)

    @property
    def angular_momentum(self) -> float:
        """x vy - y vx."""
        return self.x * self.vy - self.y * self.vx

    @property
    def radius(self) -> float:
        """Distance to the origin."""
        return math.hypot(self.x, self.y)


@dataclass
class ParticleTrajectory:
    """
    Sampled RK4 trajectory and the events found along it.

    Attributes
    ------------------------
    t, x, vx, y, vy: np.ndarray
        Samples at every step.
    force: np.ndarray
        F(t) at the samples.
    x_crossings: List[float]
        Times where x changes sign.
    y_crossings: List[float]
        Times where y changes sign.
    radius_minima: List[Tuple[float, float]]
        (t, r) at the interior local minima of r.
    """

    t: np.ndarray
    x: np.ndarray
    vx: np.ndarray
    y: np.ndarray
    vy: np.ndarray
    force: np.ndarray
    x_crossings: List[float] = field(default_factory=list)
    y_crossings: List[float] = field(default_factory=list)
    radius_minima: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def radius(self) -> np.ndarray:
        """r(t) at the samples."""
        return np.hypot(self.x, self.y)

    @property
    def angular_momentum(self) -> np.ndarray:
        """omega0 at the samples."""
        return self.x * self.vy - self.y * self.vx


def _rk4_step(
    force: ForceFunction, t: float, state: Tuple[float, ...], h: float
) -> Tuple[float, ...]:
    """Classical RK4 step for the linear system with force F(t)."""
    x, vx, y, vy = state
    f0 = force(t)
    f_half = force(t + 0.5 * h)
    f1 = force(t + h)

    k1 = (vx, f0 * x, vy, f0 * y)
    s = [c + 0.5 * h * k for c, k in zip(state, k1)]
    k2 = (s[1], f_half * s[0], s[3], f_half * s[2])
    s = [c + 0.5 * h * k for c, k in zip(state, k2)]
    k3 = (s[1], f_half * s[0], s[3], f_half * s[2])
    s = [c + h * k for c, k in zip(state, k3)]
    k4 = (s[1], f1 * s[0], s[3], f1 * s[2])

    return tuple(
        c + h / 6.0 * (a + 2.0 * b + 2.0 * d + e)
        for c, a, b, d, e in zip(state, k1, k2, k3, k4)
    )


def _hermite_root(
    t0: float, t1: float, p0: float, p1: float, d0: float, d1: float
) -> float:
    """
    Root in [t0, t1] of the cubic Hermite interpolant of (p, dp/dt).
    """
    h = t1 - t0

    def cubic(t: float) -> float:
        s = (t - t0) / h
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        return h00 * p0 + h10 * h * d0 + h01 * p1 + h11 * h * d1

    if p0 == 0.0:
        return t0
    if p1 == 0.0:
        return t1
    return brentq(cubic, t0, t1, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def sign_crossings(
    t: np.ndarray, values: np.ndarray, slopes: np.ndarray
) -> List[float]:
    """
    Times where a sampled signal changes sign, located on the cubic Hermite
    interpolant between the bracketing samples.

    Zero samples are skipped when deciding the sign, so touching zero
    without changing sign is not a crossing.

    Parameters
    ------------------------
    t: np.ndarray
        Sample times.
    values: np.ndarray
        Signal samples.
    slopes: np.ndarray
        Time derivative samples.

    Returns
    ------------------------
    List[float]
        Crossing times in increasing order.
    """
    crossings = []
    last = None
    for i, value in enumerate(values):
        if value == 0.0:
            continue
        if last is not None and np.sign(value) != np.sign(values[last]):
            if i == last + 1:
                crossings.append(
                    _hermite_root(
                        t[last],
                        t[i],
                        values[last],
                        values[i],
                        slopes[last],
                        slopes[i],
                    )
                )
            else:
                crossings.append(float(t[last + 1]))
        last = i
    return crossings


def particle_integrate(
    force: ForceFunction,
    p0: ParticleState,
    t_end: float,
    dt: float,
) -> ParticleTrajectory:
    """
    Integrates x'' = F(t) x, y'' = F(t) y with classical RK4.

    The last step is shortened to land on t_end. F is sampled at the RK4
    stage times, so it must be finite on [0, t_end].

    Parameters
    ------------------------
    force: ForceFunction
        Force coefficient F(t).
    p0: ParticleState
        Initial particle state.
    t_end: float
        Final time.
    dt: float
        Step size.

    Returns
    ------------------------
    ParticleTrajectory
        Samples, sign changes of x and y, and local minima of r.

    Raises
    ------------------------
    ValueError:
        If dt or t_end is not positive.
    RuntimeError:
        If the force or the state becomes non-finite.
    """
    if dt <= 0 or t_end <= 0:
        raise ValueError("dt and t_end must be positive")

    n_steps = int(math.ceil(t_end / dt - 1e-9))
    times = [0.0]
    samples = [(p0.x, p0.vx, p0.y, p0.vy)]
    forces = [float(force(0.0))]

    state = samples[0]
    t = 0.0
    for i in range(n_steps):
        t_next = min((i + 1) * dt, t_end)
        state = _rk4_step(force, t, state, t_next - t)
        t = t_next
        f_value = float(force(t))
        if not all(math.isfinite(c) for c in state):
            raise RuntimeError(f"Non-finite particle state at t = {t}")
        if not math.isfinite(f_value):
            raise RuntimeError(f"Non-finite force at t = {t}")
        times.append(t)
        samples.append(state)
        forces.append(f_value)

    data = np.array(samples)
    trajectory = ParticleTrajectory(
        t=np.array(times),
        x=data[:, 0],
        vx=data[:, 1],
        y=data[:, 2],
        vy=data[:, 3],
        force=np.array(forces),
    )
    trajectory.x_crossings = sign_crossings(
        trajectory.t, trajectory.x, trajectory.vx
    )
    trajectory.y_crossings = sign_crossings(
        trajectory.t, trajectory.y, trajectory.vy
    )

    radius = trajectory.radius
    for i in range(1, radius.size - 1):
        if radius[i] < radius[i - 1] and radius[i] <= radius[i + 1]:
            trajectory.radius_minima.append(
                (float(trajectory.t[i]), float(radius[i]))
            )

    LOGGER.debug(
        "Particle run to t=%g: %d x crossings, min r = %.3e",
        t_end,
        len(trajectory.x_crossings),
        float(np.min(radius)),
    )
    return trajectory


def radius_lower_bound(
    r1: float, rdot1: float, omega0: float, f_bar: float
) -> float:
    """
    Lower bound on r over an interval where r decreases from r1.

    r(t) >= |omega0| r1 / sqrt(r1^2 rdot1^2 + omega0^2 + f_bar r1^4),
    where f_bar bounds -F from above on the interval (f_bar >= 0).

    Parameters
    ------------------------
    r1: float
        Radius at the start of the interval.
    rdot1: float
        Radial velocity at the start of the interval.
    omega0: float
        Angular momentum.
    f_bar: float
        Upper bound for max(-F, 0) on the interval.

    Returns
    ------------------------
    float
        The barrier radius.
    """
    if f_bar < 0:
        raise ValueError("f_bar bounds max(-F, 0) and cannot be negative")
    denominator = math.sqrt(r1**2 * rdot1**2 + omega0**2 + f_bar * r1**4)
    if denominator == 0.0:
        return 0.0
    return abs(omega0) * r1 / denominator


def radius_barrier_margin(trajectory: ParticleTrajectory) -> float:
    """
    Smallest r(t) - bound(t) over the decreasing stretches of r.

    Each stretch starts at a local maximum of r (or t = 0) and the bound
    uses f_bar = max(-F, 0) over the stretch.

    Parameters
    ------------------------
    trajectory: ParticleTrajectory
        Sampled trajectory.

    Returns
    ------------------------
    float
        Worst margin; non-negative when the barrier holds.
    """
    radius = trajectory.radius
    radial_velocity = np.divide(
        trajectory.x * trajectory.vx + trajectory.y * trajectory.vy,
        radius,
        out=np.zeros_like(radius),
        where=radius > 0,
    )
    omega = trajectory.angular_momentum
    worst = math.inf

    start = 0
    while start < radius.size - 1:
        end = start
        while end + 1 < radius.size and radius[end + 1] <= radius[end]:
            end += 1
        if end > start:
            f_bar = max(float(np.max(-trajectory.force[start:end + 1])), 0.0)
            bound = radius_lower_bound(
                radius[start],
                radial_velocity[start],
                omega[start],
                f_bar,
            )
            worst = min(worst, float(np.min(radius[start:end + 1]) - bound))
        start = end + 1

    return worst


def riccati_margin(
    t: np.ndarray,
    phi: np.ndarray,
    dphi: np.ndarray,
    envelope: np.ndarray,
) -> float:
    """
    Worst value of phi'/phi - max(phi'(0)/phi(0), f(t)).

    Parameters
    ------------------------
    t: np.ndarray
        Sample times (only used for error messages).
    phi: np.ndarray
        Positive samples; leading axis is time.
    dphi: np.ndarray
        Time derivative samples.
    envelope: np.ndarray
        f(t), broadcastable against phi.

    Returns
    ------------------------
    float
        Largest violation; non-positive when the bound holds.

    Raises
    ------------------------
    ValueError:
        If phi is not strictly positive.
    """
    phi = np.asarray(phi, dtype=float)
    if np.any(phi <= 0):
        index = np.unravel_index(int(np.argmin(phi)), phi.shape)
        raise ValueError(
            f"Ratio undefined: phi <= 0 at t = {t[index[0]]:.6g}"
        )
    ratio = np.asarray(dphi, dtype=float) / phi
    bound = np.maximum(ratio[0], envelope)
    return float(np.max(ratio - bound))


def riccati_envelope_check(
    trajectory: ParticleTrajectory,
    envelope: Union[float, Callable[[np.ndarray], np.ndarray]],
    tol: float = 1e-9,
) -> Tuple[bool, float]:
    """
    Checks x_t / x <= max(x_t(0) / x(0), f(t)) + tol along a trajectory.

    Parameters
    ------------------------
    trajectory: ParticleTrajectory
        Trajectory with x > 0 throughout.
    envelope: Union[float, Callable[[np.ndarray], np.ndarray]]
        Increasing f with F <= f^2, as a constant or a function of t.
    tol: float
        Tolerance. Default 1e-9.

    Returns
    ------------------------
    Tuple[bool, float]
        Pass flag and worst margin.
    """
    if callable(envelope):
        f_values = np.asarray(envelope(trajectory.t), dtype=float)
    else:
        f_values = np.full(trajectory.t.shape, float(envelope))

    margin = riccati_margin(
        trajectory.t, trajectory.x, trajectory.vx, f_values
    )
    return margin <= tol, margin


def force_envelope(force_history: np.ndarray) -> np.ndarray:
    """
    Empirical envelope f(t) = running max of sqrt(max(F, 0)).

    Parameters
    ------------------------
    force_history: np.ndarray
        F samples, time along the first axis (per label along the second
        for solar runs).

    Returns
    ------------------------
    np.ndarray
        Non-decreasing envelope with F <= f^2 at every sample.
    """
    positive = np.sqrt(np.maximum(np.asarray(force_history, float), 0.0))
    return np.maximum.accumulate(positive, axis=0)


def spiral_force(k: float) -> ForceFunction:
    """
    Force -k^2 / (1 - t)^2, singular at t = 1.

    Parameters
    ------------------------
    k: float
        Strength. Particles spiral into the origin when k > 1/2.

    Returns
    ------------------------
    ForceFunction
        F(t).
    """

    def force(t: float) -> float:
        gap = 1.0 - t
        if gap <= 0:
            return -math.inf
        return -(k**2) / gap**2

    return force


def constant_force(value: float) -> ForceFunction:
    """Time independent force coefficient."""

    def force(t: float) -> float:
        return value

    return force
