"""
Eulerian reconstruction of solar states and the checks built on it:
PDE residual, conserved quantities, vorticity transport, the sign
criterion for global existence and the monitors of the breakdown proof.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import PchipInterpolator

from .calculus import (
    FieldLike,
    _unwrap,
    continuous_min,
    cumulative_integral,
    derivative,
    evaluate,
    mean,
)
from .integration import RunOutput, sign_crossings
from .particle import force_envelope, riccati_margin
from .solar_model import (
    ModelParams,
    SolarState,
    field_power,
    forcing,
    initial_momentum,
    pressure,
)

LOGGER = logging.getLogger(__name__)

NEWTON_ITERATIONS = 4
SIGMA_ZERO_TOL = 1e-12


class ReconstructionError(RuntimeError):
    """
    Raised when the flow map is not invertible (min x <= 0).
    """


@dataclass(frozen=True)
class EulerianSnapshot:
    """
    Eulerian fields recovered from a solar state.

    Attributes
    ------------------------
    t: float
        Time.
    eta: np.ndarray
        Flow map at the labels, eta = b + cumulative_integral(x^gamma).
    u: np.ndarray
        Velocity on the uniform Eulerian grid.
    u_theta: np.ndarray
        Velocity gradient on the Eulerian grid.
    m: np.ndarray
        Momentum sigma - u_thetatheta on the Eulerian grid.
    preimages: np.ndarray
        Labels mapped onto the Eulerian grid points by eta.
    """

    t: float
    eta: np.ndarray
    u: np.ndarray
    u_theta: np.ndarray
    m: np.ndarray
    preimages: np.ndarray


def reconstruct(
    state: SolarState,
    params: ModelParams,
    newton_iterations: int = NEWTON_ITERATIONS,
) -> EulerianSnapshot:
    """
    Recovers eta, u, u_theta and m from a solar state.

    eta is inverted with a monotone PCHIP guess on the periodically lifted
    samples, polished by Newton iterations on the trigonometric
    interpolant. u and u_theta are the Lagrangian velocity G + sigma and
    gamma x_t / x evaluated at the preimages.

    Parameters
    ------------------------
    state: SolarState
        Phase point with min x > 0.
    params: ModelParams
        Model parameters.
    newton_iterations: int
        Number of Newton polish iterations. Default 4.

    Returns
    ------------------------
    EulerianSnapshot
        Eulerian fields.

    Raises
    ------------------------
    ReconstructionError:
        If min x <= 0.
    """
    smallest, where = continuous_min(state.x)
    if smallest <= 0:
        raise ReconstructionError(
            f"eta is not a diffeomorphism at t={state.t:.6f}: "
            f"min x = {smallest:.3e} at theta = {where:.6f}"
        )

    n = state.n
    gamma = params.gamma
    theta = np.arange(n) / n
    x_gamma = field_power(state.x, gamma)
    slope = mean(x_gamma)
    periodic = cumulative_integral(x_gamma) - slope * theta
    eta = state.b + slope * theta + periodic

    lifted_theta = np.concatenate([theta - 1.0, theta, theta + 1.0, [2.0]])
    lifted_eta = np.concatenate(
        [eta - slope, eta, eta + slope, [eta[0] + 2.0 * slope]]
    )
    targets = state.b + np.mod(theta - state.b, 1.0)
    guess = PchipInterpolator(lifted_eta, lifted_theta)(targets)

    preimages = guess.copy()
    for _ in range(newton_iterations):
        residual = state.b + slope * preimages
        residual = residual + evaluate(periodic, preimages) - targets
        update = preimages - residual / evaluate(x_gamma, preimages)
        # keep the polish local to the monotone guess
        preimages = np.where(
            np.abs(update - guess) <= 2.0 / n, update, preimages
        )

    G = forcing(state, params).G
    u = evaluate(G, preimages) + params.sigma
    u_theta = (
        gamma
        * evaluate(state.v, preimages)
        / evaluate(state.x, preimages)
    )
    m = params.sigma - derivative(u_theta)

    return EulerianSnapshot(
        t=state.t,
        eta=eta,
        u=u,
        u_theta=u_theta,
        m=m,
        preimages=preimages,
    )


def pde_residual(
    snapshots: Sequence[EulerianSnapshot], params: ModelParams
) -> float:
    """
    Residual of u_ttheta + u u_thetatheta + (lambda-1)/2 u_theta^2
    - lambda sigma u = I(t), I = (lambda-3)/2 E(t) - lambda sigma^2.

    The time derivative is a central difference over the three snapshots.

    Parameters
    ------------------------
    snapshots: Sequence[EulerianSnapshot]
        Snapshots at t - delta, t, t + delta.
    params: ModelParams
        Model parameters.

    Returns
    ------------------------
    float
        Maximal absolute residual at the middle time.

    Raises
    ------------------------
    ValueError:
        If there are not three equally spaced snapshots.
    """
    if len(snapshots) != 3:
        raise ValueError("pde_residual needs exactly three snapshots")
    before, now, after = snapshots
    delta = now.t - before.t
    if delta <= 0 or not math.isclose(
        after.t - now.t, delta, rel_tol=1e-9, abs_tol=1e-12
    ):
        raise ValueError("Snapshots must be equally spaced in time")

    lam, sigma = params.lam, params.sigma
    u_t_theta = (after.u_theta - before.u_theta) / (2.0 * delta)
    u_theta_theta = derivative(now.u_theta)
    energy = mean(now.u_theta**2)
    forcing_term = (lam - 3.0) / 2.0 * energy - lam * sigma**2

    residual = (
        u_t_theta
        + now.u * u_theta_theta
        + (lam - 1.0) / 2.0 * now.u_theta**2
        - lam * sigma * now.u
        - forcing_term
    )
    return float(np.max(np.abs(residual)))


def conserved_quantities(snapshot: EulerianSnapshot) -> Dict[str, float]:
    """
    mean(u), mean(u_theta^2) and mean(u^2) of an Eulerian snapshot.

    Parameters
    ------------------------
    snapshot: EulerianSnapshot
        Reconstructed fields.

    Returns
    ------------------------
    Dict[str, float]
        Keys sigma_t, E_t, L2_t.
    """
    return {
        "sigma_t": mean(snapshot.u),
        "E_t": mean(snapshot.u_theta**2),
        "L2_t": mean(snapshot.u**2),
    }


def vorticity_transport_check(
    state: SolarState,
    snapshot: EulerianSnapshot,
    m0: np.ndarray,
    params: ModelParams,
) -> float:
    """
    max |eta_theta^lambda m(eta) - m0| with eta_theta^lambda = x^(gamma
    lambda) and m(eta) from the trigonometric interpolant of snapshot.m.

    Parameters
    ------------------------
    state: SolarState
        Phase point with min x > 0.
    snapshot: EulerianSnapshot
        Its reconstruction.
    m0: np.ndarray
        Initial momentum.
    params: ModelParams
        Model parameters.

    Returns
    ------------------------
    float
        Maximal transport error.
    """
    weight = field_power(state.x, params.gamma * params.lam)
    transported = weight * evaluate(snapshot.m, snapshot.eta)
    return float(np.max(np.abs(transported - m0)))


def reflect(u0: FieldLike) -> np.ndarray:
    """
    Reflection v0(theta) = -u0(1 - theta).

    Maps solutions to solutions with sigma -> -sigma and labels
    theta -> 1 - theta.

    Parameters
    ------------------------
    u0: FieldLike
        Periodic samples.

    Returns
    ------------------------
    np.ndarray
        Reflected samples.
    """
    values, _ = _unwrap(u0)
    n = values.size
    return -values[(-np.arange(n)) % n]


@dataclass
class McKeanVerdict:
    """
    Classification of initial data by the sign of m0.

    Attributes
    ------------------------
    kind: str
        "global", "breakdown" or "sigma-zero".
    theta_star_candidates: List[float]
        Labels where m0 goes from + to - (sigma != 0), or where u0' is
        minimal (sigma = 0).
    theorem_backed: bool
        True for lambda = 2 and 3; advisory otherwise.
    reflected: bool
        True when the data was reflected to make sigma positive.
    note: str
        Short explanation.
    """

    kind: str
    theta_star_candidates: List[float] = field(default_factory=list)
    theorem_backed: bool = True
    reflected: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        """Plain dictionary used by report.json."""
        return {
            "kind": self.kind,
            "theta_star_candidates": list(self.theta_star_candidates),
            "theorem_backed": self.theorem_backed,
            "reflected": self.reflected,
            "note": self.note,
        }


def mckean_classify(
    u0: FieldLike, params: ModelParams, eps_sign_factor: float = 1e-9
) -> McKeanVerdict:
    """
    Predicts global existence or breakdown from the sign of m0.

    Data with sigma < 0 is reflected first and the candidates mapped back
    by theta -> 1 - theta. For sigma = 0 every nonconstant u0 breaks down
    (lambda = 2) or shocks (lambda = 3) where u0' is minimal.

    Parameters
    ------------------------
    u0: FieldLike
        Initial velocity samples.
    params: ModelParams
        Model parameters (only lambda is used; sigma is mean(u0)).
    eps_sign_factor: float
        Sign band relative to max |m0|. Default 1e-9.

    Returns
    ------------------------
    McKeanVerdict
        Verdict and breakdown candidates.
    """
    values, _ = _unwrap(u0)
    sigma = mean(values)
    theorem_backed = params.lam in (2.0, 3.0)

    if sigma < -SIGMA_ZERO_TOL:
        verdict = mckean_classify(reflect(values), params, eps_sign_factor)
        verdict.reflected = True
        verdict.theta_star_candidates = sorted(
            float(np.mod(1.0 - theta, 1.0))
            for theta in verdict.theta_star_candidates
        )
        return verdict

    if abs(sigma) <= SIGMA_ZERO_TOL:
        slope = derivative(values)
        if np.max(np.abs(slope)) <= SIGMA_ZERO_TOL:
            return McKeanVerdict(
                kind="global",
                theorem_backed=theorem_backed,
                note="constant data",
            )
        _, theta_star = continuous_min(slope, 8)
        notes = {
            2.0: "sigma = 0: every nonconstant u0 breaks down",
            3.0: "sigma = 0: every nonconstant u0 forms a shock",
        }
        advisory = "advisory: no theorem for this lambda"
        return McKeanVerdict(
            kind="sigma-zero",
            theta_star_candidates=[theta_star],
            theorem_backed=theorem_backed,
            note=notes.get(params.lam, advisory),
        )

    m0 = initial_momentum(values)
    eps = eps_sign_factor * float(np.max(np.abs(m0)))
    if np.all(m0 >= -eps) or np.all(m0 <= eps):
        return McKeanVerdict(
            kind="global",
            theorem_backed=theorem_backed,
            note="m0 does not change sign",
        )

    candidates = [
        theta
        for theta, direction in sign_crossings(m0, eps)
        if direction == "+->-"
    ]
    return McKeanVerdict(
        kind="breakdown",
        theta_star_candidates=candidates,
        theorem_backed=theorem_backed,
        note="m0 changes sign",
    )


@dataclass
class LemmaMonitorReport:
    """
    Worst violations of the inequalities used in the breakdown proof.

    Margins are measured as violations: a monitor passes when its margin
    is at most tol.
    """

    applicable: bool
    a: Optional[float] = None
    b: Optional[float] = None
    c: Optional[float] = None
    d: Optional[float] = None
    M: Optional[float] = None
    N: Optional[float] = None
    monotone_margin: float = -math.inf
    upper_bound_margin: float = -math.inf
    decay_margin: float = -math.inf
    integral_bound_margin: float = -math.inf
    samples_checked: int = 0
    tol: float = 1e-4

    @property
    def monotone_ok(self) -> bool:
        """x nondecreasing on [a, d]."""
        return self.monotone_margin <= self.tol

    @property
    def upper_bound_ok(self) -> bool:
        """x(t, c) <= (d - c)^(-1/gamma)."""
        return self.upper_bound_margin <= self.tol

    @property
    def decay_ok(self) -> bool:
        """x(t, b) <= x(t, c) exp(-M t)."""
        return self.decay_margin <= self.tol

    @property
    def integral_ok(self) -> bool:
        """Integral bound with N / x(t, b)^2."""
        return self.integral_bound_margin <= self.tol

    @property
    def passed(self) -> bool:
        """All four monitors hold, or the monitors do not apply."""
        if not self.applicable:
            return True
        return (
            self.monotone_ok
            and self.upper_bound_ok
            and self.decay_ok
            and self.integral_ok
        )

    def to_dict(self) -> dict:
        """Plain dictionary used by report.json."""
        return {
            "applicable": self.applicable,
            "interval": [self.a, self.b, self.c, self.d],
            "M": self.M,
            "N": self.N,
            "monotone_margin": self.monotone_margin,
            "upper_bound_margin": self.upper_bound_margin,
            "decay_margin": self.decay_margin,
            "integral_bound_margin": self.integral_bound_margin,
            "samples_checked": self.samples_checked,
            "tol": self.tol,
            "passed": self.passed,
        }


def _negative_interval(m0: np.ndarray, eps: float):
    """
    Grid indices strictly inside the first interval where m0 < -eps,
    ordered along the circle starting after the + -> - crossing.

    Returns
    ------------------------
    Optional[Tuple[float, float, np.ndarray, np.ndarray]]
        (a, d, indices, lifted labels), or None when m0 never goes
        from + to -.
    """
    crossings = sign_crossings(m0, eps)
    starts = [i for i, (_, kind) in enumerate(crossings) if kind == "+->-"]
    if not starts:
        return None

    position = starts[0]
    a = crossings[position][0]
    d = crossings[(position + 1) % len(crossings)][0]
    if d <= a:
        d += 1.0

    n = m0.size
    theta = np.arange(n) / n
    lifted = np.where(theta <= a, theta + 1.0, theta)
    order = np.argsort(lifted)
    inside = [j for j in order if a < lifted[j] < d and m0[j] < -eps]
    indices = np.array(inside, dtype=int)
    return a, d, indices, lifted[indices]


def lemma_monitors(
    run: RunOutput,
    u0: Optional[FieldLike] = None,
    tol: float = 1e-4,
    b: Optional[float] = None,
    c: Optional[float] = None,
) -> LemmaMonitorReport:
    """
    Checks the monotonicity, upper bound, exponential decay and integral
    inequalities of the breakdown proof at every stored sample before
    breakdown.

    On the interval (a, d) where m0 < 0, with b and c at the interior
    thirds, the constants are
    A = (2/gamma)^(gamma/(gamma+2)) (1/gamma + 1/2),
    M = A sigma^(2/(gamma+2)) * int_b^c |m0|^(gamma/(gamma+2)) and
    N = (2/gamma) (int_a^b sqrt|m0|)^2. Integrals use the trapezoid rule
    on the grid points inside (a, d).

    Parameters
    ------------------------
    run: RunOutput
        Run to monitor.
    u0: Optional[FieldLike]
        Initial data. Default: the data of the run.
    tol: float
        Allowed violation. Default 1e-4.
    b: Optional[float]
        Override for b (snapped to the grid).
    c: Optional[float]
        Override for c (snapped to the grid).

    Returns
    ------------------------
    LemmaMonitorReport
        Worst margins; not applicable when m0 has no + -> - crossing.

    Raises
    ------------------------
    ValueError:
        If sigma <= 0, gamma <= 0, or the interval spans fewer than four
        grid points.
    """
    params = run.params
    values = run.u0 if u0 is None else _unwrap(u0)[0]
    if params.sigma <= 0:
        raise ValueError("Monitors need sigma > 0; reflect the data first")
    if params.gamma <= 0:
        raise ValueError("Monitors need gamma > 0")

    m0 = initial_momentum(values)
    eps = run.config.eps_sign_factor * float(np.max(np.abs(m0)))
    found = _negative_interval(m0, eps)
    if found is None:
        return LemmaMonitorReport(applicable=False, tol=tol)

    a, d, indices, lifted = found
    if indices.size < 4:
        raise ValueError(
            f"Negative interval ({a:.6f}, {d:.6f}) spans {indices.size} "
            "grid points, at least 4 are needed"
        )

    def snap(target: float) -> int:
        target = target + 1.0 if target <= a else target
        return int(np.argmin(np.abs(lifted - target)))

    pos_b = snap(b if b is not None else a + (d - a) / 3.0)
    pos_c = snap(c if c is not None else a + 2.0 * (d - a) / 3.0)
    pos_b = min(max(pos_b, 1), indices.size - 3)
    pos_c = min(max(pos_c, pos_b + 1), indices.size - 2)

    gamma, sigma = params.gamma, params.sigma
    abs_m0 = np.abs(m0[indices])
    A = (2.0 / gamma) ** (gamma / (gamma + 2.0)) * (1.0 / gamma + 0.5)
    M = (
        A
        * sigma ** (2.0 / (gamma + 2.0))
        * trapezoid(
            abs_m0[pos_b:pos_c + 1] ** (gamma / (gamma + 2.0)),
            lifted[pos_b:pos_c + 1],
        )
    )
    N = (2.0 / gamma) * trapezoid(
        np.sqrt(abs_m0[:pos_b + 1]), lifted[:pos_b + 1]
    ) ** 2
    upper_bound = (d - lifted[pos_c]) ** (-1.0 / gamma)

    report = LemmaMonitorReport(
        applicable=True,
        a=a,
        b=float(np.mod(lifted[pos_b], 1.0)),
        c=float(np.mod(lifted[pos_c], 1.0)),
        d=float(np.mod(d, 1.0)),
        M=float(M),
        N=float(N),
        tol=tol,
    )

    T = run.breakdown.T if run.breakdown.occurred else math.inf
    for state in run.states:
        if state.t >= T or np.min(state.x) <= 0:
            continue
        x = state.x[indices]
        report.samples_checked += 1
        report.monotone_margin = max(
            report.monotone_margin, float(np.max(-np.diff(x)))
        )
        report.upper_bound_margin = max(
            report.upper_bound_margin, float(x[pos_c] - upper_bound)
        )
        report.decay_margin = max(
            report.decay_margin,
            float(x[pos_b] - x[pos_c] * math.exp(-M * state.t)),
        )

        head = slice(0, pos_b + 1)
        y = state.y[indices][head]
        if np.all(y < 0):
            left = trapezoid(state.v[indices][head] / x[head], lifted[head])
            right = trapezoid(state.w[indices][head] / y, lifted[head])
            right -= N / x[pos_b] ** 2
            report.integral_bound_margin = max(
                report.integral_bound_margin, float(left - right)
            )

    if not report.passed:
        LOGGER.warning("Lemma monitors violated: %s", report.to_dict())
    return report


def lagrangian_transport_residual(
    run: RunOutput, min_abs_x: float = 0.05
) -> float:
    """
    Central-difference residual of d/dt (y / x) = m0 / x^2 over stored
    samples, relative to 1 + |m0 / x^2|, at labels with |x| > min_abs_x.

    Parameters
    ------------------------
    run: RunOutput
        Run with equally spaced stored samples.
    min_abs_x: float
        Labels closer to x = 0 are skipped. Default 0.05.

    Returns
    ------------------------
    float
        Maximal relative residual (0 when no triple qualifies).
    """
    worst = 0.0
    states = run.states
    for before, now, after in zip(states, states[1:], states[2:]):
        delta = now.t - before.t
        if delta <= 0 or not math.isclose(
            after.t - now.t, delta, rel_tol=1e-9
        ):
            continue
        mask = (
            (np.abs(before.x) > min_abs_x)
            & (np.abs(now.x) > min_abs_x)
            & (np.abs(after.x) > min_abs_x)
        )
        if not np.any(mask):
            continue
        rate = (after.y / after.x - before.y / before.x) / (2.0 * delta)
        expected = run.m0 / now.x**2
        residual = np.abs(rate - expected) / (1.0 + np.abs(expected))
        worst = max(worst, float(np.max(residual[mask])))
    return worst


def pressure_check(run: RunOutput) -> Dict[str, float]:
    """
    Checks the lambda = 3 continuation equation eta_tt = 3 sigma P.

    eta_t = G + sigma at every label, so G_t is compared with 3 sigma P by
    central differences over the whole grid, and the base point with
    b_tt = 3 sigma P(0). Both hold through x = 0.

    Parameters
    ------------------------
    run: RunOutput
        Run of the lambda = 3 member with equally spaced stored samples.

    Returns
    ------------------------
    Dict[str, float]
        "field_residual", "base_point_residual" (maximal absolute values)
        and "windows_checked".

    Raises
    ------------------------
    ValueError:
        If lambda is not 3.
    """
    params = run.params
    if params.lam != 3.0:
        raise ValueError(
            f"The pressure equation holds for lambda = 3. Received: "
            f"{params.lam}"
        )
    report = {
        "field_residual": 0.0,
        "base_point_residual": 0.0,
        "windows_checked": 0,
    }
    states = run.states
    for before, now, after in zip(states, states[1:], states[2:]):
        delta = now.t - before.t
        if delta <= 0 or not math.isclose(
            after.t - now.t, delta, rel_tol=1e-9
        ):
            continue
        target = 3.0 * params.sigma * pressure(now, params)
        rate = (forcing(after, params).G - forcing(before, params).G) / (
            2.0 * delta
        )
        base = (after.b - 2.0 * now.b + before.b) / delta**2
        report["field_residual"] = max(
            report["field_residual"], float(np.max(np.abs(rate - target)))
        )
        report["base_point_residual"] = max(
            report["base_point_residual"], abs(base - float(target[0]))
        )
        report["windows_checked"] += 1
    return report


@dataclass
class RiccatiReport:
    """
    Worst margin of x_t / x <= max(x_t(0) / x(0), f(t)) over a run, with
    f the empirical force envelope of each label.
    """

    margin: float = -math.inf
    labels_checked: int = 0
    tol: float = 1e-6

    @property
    def passed(self) -> bool:
        """Margin within tolerance."""
        return self.margin <= self.tol

    def to_dict(self) -> dict:
        """Plain dictionary used by report.json."""
        return {
            "margin": self.margin,
            "labels_checked": self.labels_checked,
            "tol": self.tol,
            "passed": self.passed,
        }


def riccati_monitor(run: RunOutput, tol: float = 1e-6) -> RiccatiReport:
    """
    Applies the ratio bound of the particle toolkit to every label of a
    solar run that keeps x > 0 over the stored samples.

    The envelope is the running maximum of sqrt(max(F, 0)) at the
    samples, so forces between samples are not seen.

    Parameters
    ------------------------
    run: RunOutput
        Solar run.
    tol: float
        Allowed violation. Default 1e-6.

    Returns
    ------------------------
    RiccatiReport
        Worst margin and number of labels checked.
    """
    states = run.states
    x = np.array([s.x for s in states])
    positive = np.all(x > 0, axis=0)
    report = RiccatiReport(tol=tol, labels_checked=int(positive.sum()))
    if report.labels_checked == 0:
        return report

    force = np.array(
        [forcing(s, run.params, run.config.eps_pos).F for s in states]
    )
    envelope = force_envelope(force[:, positive])
    v = np.array([s.v for s in states])[:, positive]
    report.margin = riccati_margin(
        np.array([s.t for s in states]), x[:, positive], v, envelope
    )
    if not report.passed:
        LOGGER.warning("Riccati bound violated: %s", report.to_dict())
    return report
