"""
Exact solutions for zero-mean data: inviscid Burgers (lambda = 3),
Hunter-Saxton (lambda = 2) and rigid rotations.
"""
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad

from .calculus import (
    FieldLike,
    _unwrap,
    continuous_min,
    cumulative_integral,
    derivative,
    mean,
)
from .solar_model import SolarState

LOGGER = logging.getLogger(__name__)

ZERO_MEAN_TOL = 1e-12
# oversampling used to locate min u0' between grid points
SLOPE_OVERSAMPLE = 8

# amplitude (2/pi) arctan(1/sqrt(2)) of the Hunter-Saxton demo profile
HS_DEMO_ALPHA = 2.0 / math.pi * math.atan(1.0 / math.sqrt(2.0))
# breakdown time quoted for the demo profile, kept for comparison only
HS_DEMO_REFERENCE_TIME = 1.0


class OracleFields(NamedTuple):
    """
    Exact x, y and their time derivatives on the grid.
    """

    x: np.ndarray
    y: np.ndarray
    v: np.ndarray
    w: np.ndarray


@dataclass(frozen=True)
class HsParams:
    """
    Frequency of the Hunter-Saxton solar oscillator, K^2 = E0 / 4.
    """

    K: float

    def __post_init__(self) -> None:
        """Rejects negative or non-finite K."""
        if not math.isfinite(self.K) or self.K < 0:
            raise ValueError(f"K must be finite and >= 0. Received: {self.K}")

    @classmethod
    def from_u0(cls, u0: FieldLike) -> "HsParams":
        """
        K = sqrt(mean(u0'^2)) / 2.

        Parameters
        ------------------------
        u0: FieldLike
            Initial velocity samples.

        Returns
        ------------------------
        HsParams
            Oscillator frequency.
        """
        values, _ = _unwrap(u0)
        return cls(K=math.sqrt(mean(derivative(values) ** 2)) / 2.0)


def _require_zero_mean(values: np.ndarray) -> None:
    """Raises ValueError when sigma = mean(u0) is not zero."""
    sigma = mean(values)
    if abs(sigma) > ZERO_MEAN_TOL:
        raise ValueError(
            f"Closed forms need sigma = 0. Received: mean(u0) = {sigma!r}"
        )


def burgers_solution(u0: FieldLike, t: float) -> OracleFields:
    """
    x = 1 + t u0' and y = -t u0'' for lambda = 3, sigma = 0.

    Parameters
    ------------------------
    u0: FieldLike
        Zero-mean initial velocity.
    t: float
        Time.

    Returns
    ------------------------
    OracleFields
        x, y, x_t = u0', y_t = -u0''.

    Raises
    ------------------------
    ValueError:
        If mean(u0) is not zero.
    """
    values, _ = _unwrap(u0)
    _require_zero_mean(values)
    first = derivative(values)
    second = derivative(values, order=2)
    return OracleFields(
        x=1.0 + t * first, y=-t * second, v=first, w=-second
    )


def burgers_flow_map(u0: FieldLike, t: float) -> np.ndarray:
    """
    Straight characteristics eta = theta + t u0(theta), valid for all t.

    Parameters
    ------------------------
    u0: FieldLike
        Zero-mean initial velocity.
    t: float
        Time.

    Returns
    ------------------------
    np.ndarray
        eta at the grid labels.
    """
    values, _ = _unwrap(u0)
    _require_zero_mean(values)
    theta = np.arange(values.size) / values.size
    return theta + t * values


def hs_solution(u0: FieldLike, t: float) -> OracleFields:
    """
    x = cos Kt + u0'/(2K) sin Kt and y = -(u0''/K) sin Kt for lambda = 2,
    sigma = 0.

    Parameters
    ------------------------
    u0: FieldLike
        Zero-mean, nonconstant initial velocity.
    t: float
        Time.

    Returns
    ------------------------
    OracleFields
        x, y and their time derivatives.

    Raises
    ------------------------
    ValueError:
        If mean(u0) is not zero or u0 is constant (K = 0).
    """
    values, _ = _unwrap(u0)
    _require_zero_mean(values)
    K = HsParams.from_u0(values).K
    if K == 0.0:
        raise ValueError("K = 0: constant data, use constant_solution")

    first = derivative(values)
    second = derivative(values, order=2)
    c, s = math.cos(K * t), math.sin(K * t)
    return OracleFields(
        x=c + first / (2.0 * K) * s,
        y=-second / K * s,
        v=-K * s + first / 2.0 * c,
        w=-second * c,
    )


def hs_breakdown_time(u0: FieldLike) -> float:
    """
    First positive zero of min_theta x for Hunter-Saxton data,
    T = arctan(2K / |min u0'|) / K.

    Parameters
    ------------------------
    u0: FieldLike
        Zero-mean initial velocity.

    Returns
    ------------------------
    float
        Breakdown time; inf for constant data.
    """
    values, _ = _unwrap(u0)
    _require_zero_mean(values)
    K = HsParams.from_u0(values).K
    if K == 0.0:
        return math.inf

    slope, _ = continuous_min(derivative(values), SLOPE_OVERSAMPLE)
    return math.atan2(2.0 * K, -slope) / K


def hs_base_point(u0: FieldLike, t: float) -> float:
    """
    eta(t, 0) for Hunter-Saxton data, by quadrature of
    G(tau, 0) = -2 mean(x^2 C) with C = cumulative_integral(x x_t).

    Parameters
    ------------------------
    u0: FieldLike
        Zero-mean, nonconstant initial velocity.
    t: float
        Time.

    Returns
    ------------------------
    float
        Base point.
    """
    values, _ = _unwrap(u0)

    def base_velocity(tau: float) -> float:
        fields = hs_solution(values, tau)
        primitive = cumulative_integral(fields.x * fields.v)
        return -2.0 * mean(fields.x**2 * primitive)

    value, _ = quad(base_velocity, 0.0, t, epsabs=1e-13, epsrel=1e-12)
    return float(value)


def hs_flow_map(u0: FieldLike, t: float) -> np.ndarray:
    """
    eta = eta(t, 0) + cumulative_integral(x^2) for Hunter-Saxton data.

    Parameters
    ------------------------
    u0: FieldLike
        Zero-mean, nonconstant initial velocity.
    t: float
        Time.

    Returns
    ------------------------
    np.ndarray
        eta at the grid labels.
    """
    values, _ = _unwrap(u0)
    x = hs_solution(values, t).x
    return hs_base_point(values, t) + cumulative_integral(x**2)


def constant_solution(c: float, t: float, n: int) -> SolarState:
    """
    Rigid rotation eta = theta + c t in solar variables.

    Parameters
    ------------------------
    c: float
        Constant velocity.
    t: float
        Time.
    n: int
        Grid size.

    Returns
    ------------------------
    SolarState
        x = 1, v = 0, y = c t, w = c, A = t, b = c t.
    """
    return SolarState(
        t=float(t),
        x=np.ones(n),
        v=np.zeros(n),
        y=np.full(n, c * t),
        w=np.full(n, float(c)),
        time_integral=np.full(n, float(t)),
        b=c * t,
    )
