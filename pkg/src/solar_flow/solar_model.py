"""
Central-force formulation of the mu-lambda family of Euler-Arnold
equations.

Every label theta carries a planar point (x, y) moving under the central
force x_tt = F x, y_tt = F y. Here x = eta_theta^(1/gamma) with
gamma = 2 / (lambda - 1), and the angular momentum x y_t - y x_t equals
the initial momentum m0(theta).
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Dict

import numpy as np

from .calculus import (
    FieldLike,
    _unwrap,
    cumulative_integral,
    derivative,
    mean,
)

LOGGER = logging.getLogger(__name__)

EPS_POS = 1e-10
SIGMA_MATCH_TOL = 1e-12


class StateOutsideManifoldError(RuntimeError):
    """
    Raised when a state leaves the region where the transformed system
    is defined (x <= 0 with a non-integer exponent, eta_theta <= 0 in the
    OSW family).
    """

    def __init__(self, message: str, t: float, theta: float) -> None:
        """
        Class constructor

        Parameters
        ------------------------
        message: str
            Human readable description.
        t: float
            Time at which the state was rejected.
        theta: float
            Label where the positivity condition failed.
        """
        super().__init__(message)
        self.t = t
        self.theta = theta


@dataclass(frozen=True)
class ModelParams:
    """
    Family parameter lambda, conserved mean sigma and the derived
    exponent gamma = 2 / (lambda - 1).
    """

    lam: float
    sigma: float
    gamma: float = field(init=False)

    def __post_init__(self) -> None:
        """Validates lambda and derives gamma."""
        lam = float(self.lam)
        if not np.isfinite(lam) or not np.isfinite(float(self.sigma)):
            raise ValueError("lambda and sigma must be finite")
        if lam == 1.0:
            raise ValueError(
                "lambda = 1 is excluded: gamma = 2/(lambda-1) is singular"
            )
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "gamma", 2.0 / (lam - 1.0))

    @property
    def integer_gamma(self) -> bool:
        """True when gamma is an integer (x^gamma defined for x <= 0)."""
        return float(self.gamma).is_integer()

    @property
    def continues_through_zero(self) -> bool:
        """
        True when x may cross zero without leaving the manifold, i.e. for
        positive integer gamma (lambda = 2 and lambda = 3).
        """
        return self.integer_gamma and self.gamma > 0


@dataclass(frozen=True)
class SolarState:
    """
    Phase point of the transformed system.

    Attributes
    ------------------------
    t: float
        Time.
    x: np.ndarray
        x = eta_theta^(1/gamma).
    v: np.ndarray
        x_t.
    y: np.ndarray
        Second coordinate of the planar point.
    w: np.ndarray
        y_t.
    time_integral: np.ndarray
        Integral of x^gamma from 0 to t, per label.
    b: float
        Base point eta(t, 0).
    """

    t: float
    x: np.ndarray
    v: np.ndarray
    y: np.ndarray
    w: np.ndarray
    time_integral: np.ndarray
    b: float

    @property
    def n(self) -> int:
        """Number of labels."""
        return self.x.size

    def pack(self) -> np.ndarray:
        """
        Flattens the state into one vector (x, v, y, w, time_integral, b).

        Returns
        ------------------------
        np.ndarray
            Vector of length 5 n + 1.
        """
        return np.concatenate(
            [self.x, self.v, self.y, self.w, self.time_integral, [self.b]]
        )

    @classmethod
    def unpack(cls, t: float, vector: np.ndarray) -> "SolarState":
        """
        Inverse of pack.

        Parameters
        ------------------------
        t: float
            Time of the state.
        vector: np.ndarray
            Vector produced by pack.

        Returns
        ------------------------
        SolarState
            Rebuilt state.
        """
        n = (vector.size - 1) // 5
        parts = vector[:-1].reshape(5, n)
        return cls(
            t=float(t),
            x=parts[0].copy(),
            v=parts[1].copy(),
            y=parts[2].copy(),
            w=parts[3].copy(),
            time_integral=parts[4].copy(),
            b=float(vector[-1]),
        )

    def at_time(self, t: float) -> "SolarState":
        """Same phase point relabelled with time t."""
        return replace(self, t=float(t))


@dataclass(frozen=True)
class SolarTangent:
    """
    Time derivative of a SolarState.
    """

    dx: np.ndarray
    dv: np.ndarray
    dy: np.ndarray
    dw: np.ndarray
    dtime_integral: np.ndarray
    db: float

    def pack(self) -> np.ndarray:
        """Flattens the tangent in the same order as SolarState.pack."""
        return np.concatenate(
            [
                self.dx,
                self.dv,
                self.dy,
                self.dw,
                self.dtime_integral,
                [self.db],
            ]
        )


@dataclass(frozen=True)
class ForcingDiagnostics:
    """
    Nonlocal quantities driving the central force.

    Attributes
    ------------------------
    E: float
        Energy gamma^2 * integral of x^(gamma-2) x_t^2. nan when the
        integrand is singular (x <= 0 with gamma < 2).
    G: np.ndarray
        eta_t - sigma per label.
    F: np.ndarray
        Central force coefficient.
    """

    E: float
    G: np.ndarray
    F: np.ndarray


def field_power(x: np.ndarray, p: float) -> np.ndarray:
    """
    x^p with integer exponents kept valid for x <= 0.

    Parameters
    ------------------------
    x: np.ndarray
        Base.
    p: float
        Exponent.

    Returns
    ------------------------
    np.ndarray
        Powers of x.

    Raises
    ------------------------
    ValueError:
        If p is not an integer and some x is not strictly positive.
    """
    x = np.asarray(x, dtype=float)
    if float(p).is_integer():
        exponent = int(p)
        if exponent < 0:
            return 1.0 / np.power(x, -exponent)
        return np.power(x, exponent)

    if np.any(x <= 0):
        raise ValueError(f"x^{p} needs x > 0")
    return np.exp(p * np.log(x))


def check_manifold(
    state: SolarState, params: ModelParams, eps_pos: float = EPS_POS
) -> None:
    """
    Rejects states with min x <= eps_pos unless x may cross zero.

    Parameters
    ------------------------
    state: SolarState
        State to check.
    params: ModelParams
        Model parameters.
    eps_pos: float
        Positivity threshold. Default 1e-10.

    Raises
    ------------------------
    StateOutsideManifoldError:
        If the state is outside the manifold.
    """
    if params.continues_through_zero:
        return

    index = int(np.argmin(state.x))
    if state.x[index] <= eps_pos:
        raise StateOutsideManifoldError(
            f"min x = {state.x[index]:.3e} <= {eps_pos:g} with "
            f"gamma = {params.gamma:g}",
            t=state.t,
            theta=index / state.n,
        )


def initial_momentum(u0: FieldLike) -> np.ndarray:
    """
    Initial momentum m0 = sigma - u0'' with sigma = mean(u0).

    Parameters
    ------------------------
    u0: FieldLike
        Initial velocity samples.

    Returns
    ------------------------
    np.ndarray
        Samples of m0.
    """
    values, _ = _unwrap(u0)
    return mean(values) - derivative(values, order=2)


def initial_state(u0: FieldLike, params: ModelParams) -> SolarState:
    """
    Phase point at t = 0: x = 1, x_t = u0'/gamma, y = 0, y_t = m0.

    Parameters
    ------------------------
    u0: FieldLike
        Initial velocity samples.
    params: ModelParams
        Model parameters. sigma must equal mean(u0).

    Returns
    ------------------------
    SolarState
        Initial state.

    Raises
    ------------------------
    ValueError:
        If mean(u0) does not match params.sigma.
    """
    values, _ = _unwrap(u0)
    sigma = mean(values)
    if abs(sigma - params.sigma) > SIGMA_MATCH_TOL * max(1.0, abs(sigma)):
        raise ValueError(
            f"mean(u0) = {sigma!r} does not match sigma = {params.sigma!r}"
        )

    n = values.size
    return SolarState(
        t=0.0,
        x=np.ones(n),
        v=derivative(values) / params.gamma,
        y=np.zeros(n),
        w=initial_momentum(values),
        time_integral=np.zeros(n),
        b=0.0,
    )


def _forcing_terms(state: SolarState, params: ModelParams, eps_pos: float):
    """
    Shared evaluation of E, G, F and x^gamma.

    Returns
    ------------------------
    Tuple[float, np.ndarray, np.ndarray, np.ndarray]
        E, G, F and x^gamma.
    """
    check_manifold(state, params, eps_pos)
    gamma = params.gamma
    lam = params.lam
    x, v = state.x, state.v

    x_gamma_minus_one = field_power(x, gamma - 1.0)
    x_gamma = x_gamma_minus_one * x

    primitive = cumulative_integral(x_gamma_minus_one * v)
    G = gamma * (primitive - mean(x_gamma * primitive))

    energy_coefficient = (lam - 1.0) * (lam - 3.0) / 4.0
    if gamma >= 2.0 or np.min(x) > 0:
        E = gamma**2 * mean(field_power(x, gamma - 2.0) * v**2)
    else:
        E = float("nan")

    F = (lam * (lam - 1.0) * params.sigma / 2.0) * G
    if energy_coefficient != 0.0:
        if not np.isfinite(E):
            raise StateOutsideManifoldError(
                "Energy is singular at x = 0 for this lambda",
                t=state.t,
                theta=int(np.argmin(np.abs(x))) / state.n,
            )
        F = F + energy_coefficient * E

    return E, G, F, x_gamma


def forcing(
    state: SolarState, params: ModelParams, eps_pos: float = EPS_POS
) -> ForcingDiagnostics:
    """
    Evaluates E, G = eta_t - sigma and the force coefficient
    F = lambda (lambda - 1) sigma / 2 * G + (lambda-1)(lambda-3)/4 * E.

    G is normalized with G_theta = gamma x^(gamma-1) x_t and weighted
    mean zero against x^gamma.

    Parameters
    ------------------------
    state: SolarState
        Phase point.
    params: ModelParams
        Model parameters.
    eps_pos: float
        Positivity threshold for non-integer gamma. Default 1e-10.

    Returns
    ------------------------
    ForcingDiagnostics
        E, G and F.

    Raises
    ------------------------
    StateOutsideManifoldError:
        If min x <= eps_pos with non-integer gamma.
    """
    E, G, F, _ = _forcing_terms(state, params, eps_pos)
    return ForcingDiagnostics(E=E, G=G, F=F)


def rhs(
    state: SolarState, params: ModelParams, eps_pos: float = EPS_POS
) -> SolarTangent:
    """
    Right-hand side of the first-order system
    (x_t, v_t, y_t, w_t, A_t, b_t) = (v, F x, w, F y, x^gamma, G(0) + sigma).

    Parameters
    ------------------------
    state: SolarState
        Phase point.
    params: ModelParams
        Model parameters.
    eps_pos: float
        Positivity threshold for non-integer gamma. Default 1e-10.

    Returns
    ------------------------
    SolarTangent
        Time derivative of the state.
    """
    _, G, F, x_gamma = _forcing_terms(state, params, eps_pos)
    return SolarTangent(
        dx=state.v,
        dv=F * state.x,
        dy=state.w,
        dw=F * state.y,
        dtime_integral=x_gamma,
        db=float(G[0]) + params.sigma,
    )


def angular_momentum(state: SolarState) -> np.ndarray:
    """
    Pointwise angular momentum x y_t - y x_t.

    Parameters
    ------------------------
    state: SolarState
        Phase point.

    Returns
    ------------------------
    np.ndarray
        Angular momentum per label.
    """
    return state.x * state.w - state.y * state.v


def constraint_residuals(
    state: SolarState, params: ModelParams
) -> Dict[str, float]:
    """
    Residuals of the constraints carried by every valid state.

    c1 = |mean(x^gamma) - 1|, c2 = |mean(G x^gamma)| and
    c3 = max |y - (-gamma x_theta + sigma x A)|.

    Parameters
    ------------------------
    state: SolarState
        Phase point.
    params: ModelParams
        Model parameters.

    Returns
    ------------------------
    Dict[str, float]
        Keys c1, c2, c3.
    """
    gamma = params.gamma
    x_gamma = field_power(state.x, gamma)
    primitive = cumulative_integral(
        field_power(state.x, gamma - 1.0) * state.v
    )
    G = gamma * (primitive - mean(x_gamma * primitive))

    y_definition = (
        -gamma * derivative(state.x)
        + params.sigma * state.x * state.time_integral
    )
    return {
        "c1": abs(mean(x_gamma) - 1.0),
        "c2": abs(mean(G * x_gamma)),
        "c3": float(np.max(np.abs(state.y - y_definition))),
    }


def lagrangian_invariants(
    state: SolarState, params: ModelParams, eps_pos: float = EPS_POS
) -> Dict[str, float]:
    """
    sigma, E and L2 written as integrals over labels.

    With U = G + sigma the Lagrangian velocity, sigma = mean(U x^gamma),
    L2 = mean(U^2 x^gamma) and E as in forcing. These stay defined after
    eta stops being a diffeomorphism.

    Parameters
    ------------------------
    state: SolarState
        Phase point.
    params: ModelParams
        Model parameters.
    eps_pos: float
        Positivity threshold for non-integer gamma. Default 1e-10.

    Returns
    ------------------------
    Dict[str, float]
        Keys sigma, E, L2.
    """
    E, G, _, x_gamma = _forcing_terms_safe(state, params, eps_pos)
    velocity = G + params.sigma
    return {
        "sigma": mean(velocity * x_gamma),
        "E": E,
        "L2": mean(velocity**2 * x_gamma),
    }


def _forcing_terms_safe(
    state: SolarState, params: ModelParams, eps_pos: float
):
    """
    Like _forcing_terms but reports a singular energy as nan instead of
    raising, for diagnostics taken at or after breakdown.
    """
    try:
        return _forcing_terms(state, params, eps_pos)
    except StateOutsideManifoldError:
        if not params.integer_gamma:
            raise
        gamma = params.gamma
        x_gamma_minus_one = field_power(state.x, gamma - 1.0)
        x_gamma = x_gamma_minus_one * state.x
        primitive = cumulative_integral(x_gamma_minus_one * state.v)
        G = gamma * (primitive - mean(x_gamma * primitive))
        F = np.full(state.n, np.nan)
        return float("nan"), G, F, x_gamma


def pressure(state: SolarState, params: ModelParams) -> np.ndarray:
    """
    Pressure of the lambda = 3 continuation, defined by
    P_theta = (eta_t - sigma) eta_theta and mean(P eta_theta) = 0, so that
    eta_tt = 3 sigma P holds through and past breakdown.

    Parameters
    ------------------------
    state: SolarState
        Phase point.
    params: ModelParams
        Model parameters with lambda = 3.

    Returns
    ------------------------
    np.ndarray
        Samples of P.

    Raises
    ------------------------
    ValueError:
        If lambda is not 3.
    """
    if params.lam != 3.0:
        raise ValueError(
            f"Pressure is defined for lambda = 3. Received: {params.lam}"
        )
    G = forcing(state, params).G
    primitive = cumulative_integral(G * state.x)
    return primitive - mean(state.x * primitive)


def g_formula_discrepancy(
    state: SolarState, params: ModelParams
) -> Dict[str, Dict[str, float]]:
    """
    Compares G built without the gamma factor against the gamma-consistent
    G used by forcing.

    For each version reports the residual of G_theta = gamma x^(gamma-1) x_t
    and the weighted mean |mean(G x^gamma)|.

    Parameters
    ------------------------
    state: SolarState
        Phase point.
    params: ModelParams
        Model parameters.

    Returns
    ------------------------
    Dict[str, Dict[str, float]]
        Keys "without_gamma" and "with_gamma", each with
        "derivative_residual" and "weighted_mean".
    """
    gamma = params.gamma
    x_gamma_minus_one = field_power(state.x, gamma - 1.0)
    x_gamma = x_gamma_minus_one * state.x
    target = gamma * x_gamma_minus_one * state.v

    primitive = cumulative_integral(x_gamma_minus_one * state.v)
    bare = primitive - mean(x_gamma * primitive)

    report = {}
    candidates = (("without_gamma", bare), ("with_gamma", gamma * bare))
    for name, candidate in candidates:
        report[name] = {
            "derivative_residual": float(
                np.max(np.abs(derivative(candidate) - target))
            ),
            "weighted_mean": abs(mean(candidate * x_gamma)),
        }
    return report
