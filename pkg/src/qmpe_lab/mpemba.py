"""Thermalization trajectories and the "exceeding" predicate.

A trajectory records Frobenius and trace distances of an evolving state to the
thermal state on a shared time grid. Trajectory 1 *exceeds* trajectory 2 when
there is a finite t' with d1(t) <= d2(t) for all t >= t'. A finite grid cannot
certify the infinite tail, so the verdict combines a grid scan with a tail
certificate comparing the slowest-decay-mode coefficients; coefficient ties
with an undecided grid yield an explicit inconclusive status.

Also provided: log-linear convergence-rate fits, the detuning-squared
convergence bound on the ground state's distance (prefactor 11/10), and the
dimension-concentration failure-probability bound for exceeding a randomized
reference state.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import model, spectral
from .linalg import expm_dense, frobenius_norm, trace_norm, vectorize
from .thermometry import ProbeState

__all__ = [
    "Trajectory",
    "ExceedanceReport",
    "TheoremBoundInputs",
    "Lemma4Report",
    "default_time_grid",
    "TrajectoryEvolver",
    "evolve_trajectory",
    "detect_exceeding",
    "fit_convergence_rate",
    "lemma4_bound_check",
    "mu_d",
    "theorem1_delta",
]

#: Grid verdict tolerance for d1 - d2 comparisons.
GRID_TOL = 1e-12
#: Tie tolerance for slow-mode coefficient comparisons.
TIE_TOL = 1e-9


@dataclass(frozen=True)
class Trajectory:
    """Distances to the thermal state along a time grid."""

    times: np.ndarray
    frobenius_dist: np.ndarray
    trace_dist: np.ndarray  # (1/2) ||rho_t - tau||_1
    label: str = ""
    tail_coefficient: float | None = None  # rms overlap with the Lambda_min group


@dataclass(frozen=True)
class ExceedanceReport:
    """Verdict of detect_exceeding.

    ``exceeds`` implies ``t_prime`` is set and d1 <= d2 + tol on the grid from
    t_prime on. ``inconclusive`` marks coefficient ties the grid cannot break.
    """

    exceeds: bool
    t_prime: float | None
    method: str  # "mode-coefficient" or "grid"
    detail: str
    inconclusive: bool = False


def default_time_grid(lambda_min: float, n_points: int = 200, horizon: float = 10.0) -> np.ndarray:
    """t = 0 plus n_points log-spaced times on [1e-3, horizon]/lambda_min."""
    if lambda_min <= 0:
        raise ValueError("lambda_min must be positive")
    grid = np.geomspace(1e-3 / lambda_min, horizon / lambda_min, n_points)
    return np.concatenate(([0.0], grid))


class TrajectoryEvolver:
    """Step-reusing propagator for many initial states on one time grid.

    The dense step propagators exp(L * dt_k) between consecutive grid points
    are built once and shared; evolving one more state costs one matrix-vector
    product per grid point. When spectral data is supplied, each trajectory
    carries its slow-group tail coefficient for the exceedance certificate.
    """

    #: Frobenius tolerance for the propagation-vs-mode-expansion cross-check.
    CROSS_CHECK_TOL = 1e-6

    def __init__(
        self,
        liouvillian: model.Liouvillian,
        times: np.ndarray,
        spec: spectral.SpectralData | None = None,
    ):
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or len(times) < 2 or np.any(np.diff(times) <= 0):
            raise ValueError("times must be a strictly increasing grid")
        if times[0] < 0:
            raise ValueError("times must be nonnegative")
        self.times = times
        self.liouvillian = liouvillian
        self.spec = spec
        self.tau = model.gibbs_state(liouvillian.probe, liouvillian.bath)
        self._tau_vec = vectorize(self.tau)
        self._steps = [
            expm_dense(liouvillian.matrix, dt) for dt in np.diff(times)
        ]
        self._initial = expm_dense(liouvillian.matrix, times[0]) if times[0] > 0 else None
        if spec is not None:
            self._slow = spectral.slow_mode_indices(spec)
            self._modes_right = np.stack(
                [vectorize(t.right) for t in spec.triples], axis=1
            )
            self._eigs = spec.eigenvalues
            # cross-check the stepped propagation at a few interior grid points
            n = len(times)
            self._checkpoints = sorted({1, n // 2, n - 1})

    def evolve(self, state: ProbeState) -> Trajectory:
        d = self.liouvillian.dim
        v = vectorize(state.matrix)
        if self._initial is not None:
            v = self._initial @ v
        coeffs = (
            spectral.mode_overlaps(self.spec, state.matrix)
            if self.spec is not None
            else None
        )
        frob = np.empty(len(self.times))
        tdist = np.empty(len(self.times))
        for k in range(len(self.times)):
            if k > 0:
                v = self._steps[k - 1] @ v
            diff = (v - self._tau_vec).reshape(d, d)
            frob[k] = frobenius_norm(diff)
            tdist[k] = 0.5 * trace_norm(diff)
            if coeffs is not None and k in self._checkpoints:
                expansion = self._modes_right @ (
                    coeffs * np.exp(self._eigs * self.times[k])
                )
                residual = float(np.linalg.norm(expansion - v))
                if residual > self.CROSS_CHECK_TOL:
                    raise RuntimeError(
                        f"propagation disagrees with the mode expansion at "
                        f"t={self.times[k]:.6g}: residual {residual:.3e}"
                    )
        tail = None
        if coeffs is not None:
            tail = float(
                np.sqrt(sum(abs(coeffs[i]) ** 2 for i in self._slow))
            )
        return Trajectory(
            times=self.times,
            frobenius_dist=frob,
            trace_dist=tdist,
            label=state.label,
            tail_coefficient=tail,
        )


def evolve_trajectory(
    liouvillian: model.Liouvillian,
    state: ProbeState,
    t_max: float,
    n_points: int,
    spec: spectral.SpectralData | None = None,
) -> Trajectory:
    """Distances to the thermal state on t = 0 plus a log grid up to t_max."""
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    grid = np.concatenate(([0.0], np.geomspace(1e-4 * t_max, t_max, n_points)))
    return TrajectoryEvolver(liouvillian, grid, spec).evolve(state)


def _grid_suffix_start(diff: np.ndarray) -> int | None:
    """First index from which diff <= GRID_TOL holds through the end, or None."""
    above = np.nonzero(diff > GRID_TOL)[0]
    if len(above) == 0:
        return 0
    start = int(above[-1]) + 1
    return start if start < len(diff) else None


def detect_exceeding(traj1: Trajectory, traj2: Trajectory) -> ExceedanceReport:
    """Does trajectory 1 exceed trajectory 2 (Frobenius distances)?

    Grid scan locates the last crossing of d1 - d2; the tail is certified by
    comparing the slow-mode coefficients when both trajectories carry them
    (method "mode-coefficient"), else by the final grid margin ("grid"). A
    decisive adverse tail overrides a favorable grid suffix; a tie with an
    undecided grid is reported inconclusive rather than silently resolved.
    """
    if traj1.times.shape != traj2.times.shape or np.any(traj1.times != traj2.times):
        raise ValueError("trajectories live on different time grids")

    diff = traj1.frobenius_dist - traj2.frobenius_dist
    start = _grid_suffix_start(diff)

    if traj1.tail_coefficient is not None and traj2.tail_coefficient is not None:
        method = "mode-coefficient"
        c1, c2 = traj1.tail_coefficient, traj2.tail_coefficient
        margin = c2 - c1
        detail = f"slow-mode coefficients c1={c1:.6e} c2={c2:.6e}"
    else:
        method = "grid"
        margin = float(-diff[-1])
        detail = f"final grid margin d2-d1={margin:.6e}"

    if margin > TIE_TOL:  # tail decisively favors trajectory 1
        if start is not None:
            return ExceedanceReport(True, float(traj1.times[start]), method, detail)
        return ExceedanceReport(
            False, None, method,
            detail + "; crossing lies beyond the grid horizon", inconclusive=True,
        )
    if margin < -TIE_TOL:  # trajectory 1 eventually sits above
        return ExceedanceReport(False, None, method, detail)
    # tie: fall back to the grid verdict when it is decided
    if start is not None:
        return ExceedanceReport(True, float(traj1.times[start]), method, detail + "; tie, grid suffix holds")
    return ExceedanceReport(
        False, None, method, detail + "; tie, grid undecided", inconclusive=True
    )


def fit_convergence_rate(traj: Trajectory, window=(0.0, 1.0)) -> float:
    """Least-squares slope of log(Frobenius distance) vs t, negated.

    Points with distance <= 1e-14 are dropped (with a warning) before the fit.
    """
    lo, hi = window
    mask = (traj.times >= lo) & (traj.times <= hi)
    t = traj.times[mask]
    dist = traj.frobenius_dist[mask]
    keep = dist > 1e-14
    if not np.all(keep):
        warnings.warn(
            "distances underflowed inside the fit window; window truncated",
            RuntimeWarning,
        )
        t, dist = t[keep], dist[keep]
    if len(t) < 2:
        raise ValueError("fit window contains fewer than two usable points")
    slope = np.polyfit(t, np.log(dist), 1)[0]
    return float(-slope)


@dataclass(frozen=True)
class Lemma4Report:
    """Earliest grid time after which the convergence bound holds throughout."""

    t_prime: float
    violations_after: int
    bound_prefactor: float
    lambda_min: float
    margins: np.ndarray  # bound - lhs on the grid (diagnostic)


def lemma4_bound_check(
    probe: model.ProbeSpec,
    bath: model.BathSpec,
    t_grid: np.ndarray | None = None,
    atol: float = 1e-12,
) -> Lemma4Report:
    """Verify the ground-state convergence bound on a grid.

    Checks ||rho_t - tau||_F^2 <= (11/10) eps^2 e^{-2 Lambda_min t}
    ((d-2)/(d-1)) g^2 + atol for rho_0 the ground state, reporting the
    earliest grid time t' from which it holds through the horizon (default
    10/Lambda_min). The additive atol covers the zero-detuning case, where
    the right side vanishes and the check degrades to the left side decaying
    below 1e-12. Raises if no such t' exists.
    """
    if probe.d < 3:
        raise ValueError("the convergence bound requires d >= 3")
    liou = model.build_liouvillian(probe, bath)
    spec = spectral.numerical_spectrum(liou)
    lam_min = spec.lambda_min_nonzero
    if t_grid is None:
        t_grid = default_time_grid(lam_min)
    g = abs(model.rate_log_derivative(bath, probe.gap))
    prefactor = 1.1 * probe.epsilon**2 * ((probe.d - 2) / (probe.d - 1)) * g**2

    traj = TrajectoryEvolver(liou, t_grid).evolve(ProbeState.ground(probe.d))
    lhs = traj.frobenius_dist**2
    rhs = prefactor * np.exp(-2.0 * lam_min * t_grid) + atol
    holds = lhs <= rhs
    failing = np.nonzero(~holds)[0]
    if len(failing) == 0:
        start = 0
    else:
        start = int(failing[-1]) + 1
        if start >= len(t_grid):
            raise RuntimeError(
                "convergence bound never settles within the grid horizon; "
                f"worst margin {float((lhs - rhs).max()):.3e}"
            )
    return Lemma4Report(
        t_prime=float(t_grid[start]),
        violations_after=int(np.sum(~holds[start:])),
        bound_prefactor=prefactor,
        lambda_min=lam_min,
        margins=rhs - lhs,
    )


def mu_d(d: int) -> float:
    """Haar mean of the excited-coherence weight f: (d-1)(d-2)/(d(d+1))."""
    return (d - 1) * (d - 2) / (d * (d + 1))


@dataclass(frozen=True)
class TheoremBoundInputs:
    """Inputs and derived quantities of the exceedance probability bound."""

    d: int
    epsilon: float
    alpha: float
    g: float
    mu_d: float
    theta: float
    delta_bound: float

    @classmethod
    def compute(cls, d: int, epsilon: float, alpha: float, g: float) -> "TheoremBoundInputs":
        if d < 2:
            raise ValueError("d must be >= 2")
        if not 0.0 < alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        mu = mu_d(d)
        theta = 1.1 * (epsilon**2 / alpha**2) * ((d - 2) / (d - 1)) * g**2
        if d == 2:
            delta = 0.0
        else:
            bracket = max(0.0, mu - theta)
            delta = min(1.0, 2.0 * math.exp(-(d / (36.0 * math.pi**3)) * bracket**2))
        return cls(d=d, epsilon=epsilon, alpha=alpha, g=g, mu_d=mu, theta=theta,
                   delta_bound=delta)

    @classmethod
    def from_model(cls, probe: model.ProbeSpec, bath: model.BathSpec, alpha: float):
        g = abs(model.rate_log_derivative(bath, probe.gap))
        return cls.compute(probe.d, probe.epsilon, alpha, g)

    @property
    def vacuous(self) -> bool:
        return self.delta_bound >= 1.0


def theorem1_delta(inputs: TheoremBoundInputs) -> float:
    """Failure-probability bound, clamped to [0, 1]; exactly 0 for d = 2."""
    return inputs.delta_bound
