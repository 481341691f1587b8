"""Haar-random reference states and exceedance statistics.

Samples reference states rho_ref = (1-alpha) tau_beta + alpha sigma with sigma
a Haar-random pure state, runs the exceedance test of the ground state against
each sample, and aggregates the empirical frequency together with the
concentration bound it is compared against.

Randomness contract: every sample i draws from its own counter-based
substream keyed by (seed, i), so results are bit-identical for a given seed
regardless of execution order or the configured parallel width.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import model, mpemba, spectral
from .thermometry import ProbeState

__all__ = [
    "MCConfig",
    "MCReport",
    "substream",
    "haar_pure_state",
    "f_statistic",
    "lipschitz_check",
    "wilson_interval",
    "run_exceedance_experiment",
]

LIPSCHITZ_BOUND = 2.0 * np.sqrt(2.0)


def substream(seed: int, index: int) -> np.random.Generator:
    """Counter-based generator for sample ``index`` of stream ``seed``."""
    key = np.array([np.uint64(seed), np.uint64(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def haar_pure_state(d: int, seed: int, index: int = 0) -> np.ndarray:
    """Unit vector Haar-distributed on C^d (normalized complex Gaussian)."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    rng = substream(seed, index)
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def f_statistic(psi) -> float:
    """Excited-manifold coherence weight sum_{i != j >= 1} |psi_i|^2 |psi_j|^2."""
    p = np.abs(np.asarray(psi)[1:]) ** 2
    return float(p.sum() ** 2 - (p**2).sum())


def lipschitz_check(n_pairs: int, d: int, seed: int, batch: int = 4096) -> float:
    """Max |f(psi)-f(phi)| / ||psi-phi|| over sampled pairs; must stay <= 2*sqrt(2).

    Coincident pairs (separation below 1e-12) are skipped. Raises on a bound
    violation, carrying the offending ratio.
    """
    rng = substream(seed, 0)
    worst = 0.0
    remaining = n_pairs
    while remaining > 0:
        m = min(batch, remaining)
        remaining -= m
        psi = rng.standard_normal((m, d)) + 1j * rng.standard_normal((m, d))
        phi = rng.standard_normal((m, d)) + 1j * rng.standard_normal((m, d))
        psi /= np.linalg.norm(psi, axis=1, keepdims=True)
        phi /= np.linalg.norm(phi, axis=1, keepdims=True)
        p = np.abs(psi[:, 1:]) ** 2
        q = np.abs(phi[:, 1:]) ** 2
        f_psi = p.sum(axis=1) ** 2 - (p**2).sum(axis=1)
        f_phi = q.sum(axis=1) ** 2 - (q**2).sum(axis=1)
        sep = np.linalg.norm(psi - phi, axis=1)
        ok = sep > 1e-12
        ratios = np.abs(f_psi[ok] - f_phi[ok]) / sep[ok]
        if len(ratios):
            worst = max(worst, float(ratios.max()))
    if worst > LIPSCHITZ_BOUND + 1e-9:
        raise RuntimeError(
            f"Lipschitz ratio {worst:.12g} exceeds 2*sqrt(2) = {LIPSCHITZ_BOUND:.12g}"
        )
    return worst


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple:
    """95% Wilson score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    p = k / n
    denom = 1.0 + z**2 / n
    center = (p + z**2 / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z**2 / (4 * n**2)) / denom
    # the Wilson interval contains p by construction; guard the last ulp
    lo = min(max(0.0, center - half), p)
    hi = max(min(1.0, center + half), p)
    return (lo, hi)


@dataclass(frozen=True)
class MCConfig:
    """Sampling plan for the exceedance experiment."""

    n_samples: int
    alpha: float = 0.2
    seed: int = 0
    parallel_width: int = 1

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if self.parallel_width < 1:
            raise ValueError("parallel_width must be >= 1")


@dataclass(frozen=True)
class MCReport:
    """Aggregated exceedance statistics for one configuration."""

    exceed_count: int
    n: int
    frequency: float
    wilson_ci95: tuple
    mean_f: float
    se_f: float
    mu_d: float
    delta_bound: float
    inconclusive_count: int
    t_primes: tuple  # per-sample t' (None where not exceeded / inconclusive)

    def to_dict(self) -> dict:
        return {
            "exceed_count": self.exceed_count,
            "n": self.n,
            "frequency": self.frequency,
            "wilson_ci95": list(self.wilson_ci95),
            "mean_f": self.mean_f,
            "se_f": self.se_f,
            "mu_d": self.mu_d,
            "delta_bound": self.delta_bound,
            "inconclusive_count": self.inconclusive_count,
            "t_primes": list(self.t_primes),
        }


def run_exceedance_experiment(
    probe: model.ProbeSpec,
    bath: model.BathSpec,
    mc: MCConfig,
    t_max: float | None = None,
    n_points: int = 200,
) -> MCReport:
    """Ground state vs sampled references: empirical exceedance frequency.

    For each sample i, sigma is Haar-drawn from substream (seed, i), the
    reference (1-alpha) tau + alpha sigma and the ground state are evolved on
    a shared grid, and the exceedance verdict recorded. Inconclusive verdicts
    are excluded from exceed_count and reported separately. The attached
    delta_bound is the concentration bound the frequency is compared against.
    """
    liou = model.build_liouvillian(probe, bath)
    spec = spectral.numerical_spectrum(liou)
    if t_max is None:
        grid = mpemba.default_time_grid(spec.lambda_min_nonzero, n_points)
    else:
        grid = np.concatenate(
            ([0.0], np.geomspace(1e-4 * t_max, t_max, n_points))
        )
    evolver = mpemba.TrajectoryEvolver(liou, grid, spec)
    tau = evolver.tau
    star = evolver.evolve(ProbeState.ground(probe.d))

    reports = [None] * mc.n_samples
    f_values = np.empty(mc.n_samples)

    def run_sample(i: int):
        sigma_vec = haar_pure_state(probe.d, mc.seed, i)
        f_values[i] = f_statistic(sigma_vec)
        sigma = np.outer(sigma_vec, sigma_vec.conj())
        ref = ProbeState(
            (1.0 - mc.alpha) * tau + mc.alpha * sigma,
            f"mixed(alpha={mc.alpha} seed={mc.seed} i={i})",
        )
        reports[i] = mpemba.detect_exceeding(star, evolver.evolve(ref))

    if mc.parallel_width > 1:
        with ThreadPoolExecutor(max_workers=mc.parallel_width) as pool:
            list(pool.map(run_sample, range(mc.n_samples)))
    else:
        for i in range(mc.n_samples):
            run_sample(i)

    exceed_count = sum(1 for r in reports if r.exceeds)
    inconclusive = sum(1 for r in reports if r.inconclusive)
    n = mc.n_samples
    bound = mpemba.TheoremBoundInputs.from_model(probe, bath, mc.alpha)
    return MCReport(
        exceed_count=exceed_count,
        n=n,
        frequency=exceed_count / n,
        wilson_ci95=wilson_interval(exceed_count, n),
        mean_f=float(f_values.mean()),
        se_f=float(f_values.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
        mu_d=bound.mu_d,
        delta_bound=bound.delta_bound,
        inconclusive_count=inconclusive,
        t_primes=tuple(r.t_prime for r in reports),
    )
