"""Star-topology probe coupled to a bosonic heat bath.

A d-level probe with ground energy 0 and excited levels omega_j = gap + eps_j
exchanges quanta with a thermal bath only through ground<->excited transitions.
The weak-coupling (Davies) generator is

    L_beta[rho] = -i [H, rho]
                  + sum_j Gamma_beta(-omega_j) D_down_j[rho]
                  + sum_j Gamma_beta(+omega_j) D_up_j[rho],

with transition weights Gamma_beta(omega) = J(omega) / (exp(beta*omega) - 1)
for omega > 0 (absorption) and Gamma_beta(-omega) = J(omega) (1 + n_bar) for
emission, which satisfy detailed balance Gamma(omega)/Gamma(-omega) =
exp(-beta*omega). The module also provides the exact beta-derivative of the
generator, the Gibbs state, and a detailed-balance checker.

All superoperators use the row-major vectorization of :mod:`qmpe_lab.linalg`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import kron, vectorize

__all__ = [
    "SpectralDensity",
    "BathSpec",
    "ProbeSpec",
    "Liouvillian",
    "occupation",
    "occupation_beta_derivative",
    "rate",
    "rate_beta_derivative",
    "rate_log_derivative",
    "build_liouvillian",
    "gibbs_state",
    "kms_check",
    "optimal_frequency",
]


@dataclass(frozen=True)
class SpectralDensity:
    """Bath spectral density J(omega), evaluated at |omega|.

    kind="flat"  : J(omega) = gamma (uniform coupling, the default used by
                   the reproduction runs).
    kind="ohmic" : J(omega) = gamma * omega / omega_ref.
    """

    kind: str = "flat"
    omega_ref: float = 1.0

    def __post_init__(self):
        if self.kind not in ("flat", "ohmic"):
            raise ValueError(f"unknown spectral density kind {self.kind!r}")
        if self.kind == "ohmic" and self.omega_ref <= 0:
            raise ValueError("ohmic spectral density requires omega_ref > 0")

    def value(self, gamma: float, omega: float) -> float:
        w = abs(omega)
        if self.kind == "flat":
            return gamma
        return gamma * w / self.omega_ref

    def derivative(self, gamma: float, omega: float) -> float:
        """dJ/domega at |omega|."""
        if self.kind == "flat":
            return 0.0
        return gamma / self.omega_ref


@dataclass(frozen=True)
class BathSpec:
    """Thermal bath: inverse temperature, base coupling rate, spectral density."""

    beta: float
    gamma: float
    spectral_density: SpectralDensity = field(default_factory=SpectralDensity)

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    def coupling(self, omega: float) -> float:
        """J(|omega|)."""
        return self.spectral_density.value(self.gamma, omega)

    def with_beta(self, beta: float) -> "BathSpec":
        return BathSpec(beta=beta, gamma=self.gamma, spectral_density=self.spectral_density)


@dataclass(frozen=True)
class ProbeSpec:
    """Star-topology probe: dimension, energy gap, per-level detunings.

    Level energies are omega_0 = 0 and omega_j = gap + detunings[j-1] for
    j = 1 .. d-1.
    """

    d: int
    gap: float
    detunings: tuple = ()

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"probe dimension must be >= 2, got {self.d}")
        if self.gap <= 0:
            raise ValueError(f"gap must be positive, got {self.gap}")
        det = tuple(float(x) for x in self.detunings) or (0.0,) * (self.d - 1)
        if len(det) != self.d - 1:
            raise ValueError(f"expected {self.d - 1} detunings, got {len(det)}")
        object.__setattr__(self, "detunings", det)
        if any(self.gap + e <= 0 for e in det):
            raise ValueError("all excited level energies must stay positive")

    @classmethod
    def with_ramp(cls, d: int, gap: float, epsilon: float) -> "ProbeSpec":
        """Deterministic detuning ramp eps_j = epsilon*(2j-d)/(d-2), |eps_j| <= epsilon.

        For d = 2 the single excited level carries zero detuning.
        """
        if d == 2 or epsilon == 0.0:
            return cls(d=d, gap=gap, detunings=(0.0,) * (d - 1))
        det = tuple(epsilon * (2 * j - d) / (d - 2) for j in range(1, d))
        return cls(d=d, gap=gap, detunings=det)

    @property
    def level_energies(self) -> np.ndarray:
        """(omega_0, ..., omega_{d-1}) with omega_0 = 0."""
        return np.concatenate(([0.0], self.gap + np.asarray(self.detunings)))

    @property
    def epsilon(self) -> float:
        """Detuning scale max_j |eps_j|."""
        return max((abs(e) for e in self.detunings), default=0.0)


@dataclass(frozen=True)
class Liouvillian:
    """Assembled generator: full matrix, its parts, and its beta-derivative.

    ``matrix`` acts on row-major vectorized operators;
    ``matrix = hamiltonian_part + dissipative_part``.
    """

    probe: ProbeSpec
    bath: BathSpec
    matrix: np.ndarray
    hamiltonian_part: np.ndarray
    dissipative_part: np.ndarray
    beta_derivative: np.ndarray

    @property
    def dim(self) -> int:
        return self.probe.d


def occupation(beta: float, omega: float) -> float:
    """Mean bosonic occupation n_bar = 1/(exp(beta*omega) - 1), omega > 0."""
    return 1.0 / math.expm1(beta * omega)


def occupation_beta_derivative(beta: float, omega: float) -> float:
    """d n_bar / d beta = -omega * exp(beta*omega) * n_bar^2.

    Evaluated as -omega * exp(-x) / expm1(-x)^2 with x = beta*omega, which is
    stable for both small and large x.
    """
    x = beta * omega
    return -omega * math.exp(-x) / math.expm1(-x) ** 2


def rate(bath: BathSpec, omega: float) -> float:
    """Transition weight Gamma_beta(omega) = J(omega) f_beta(omega).

    omega > 0 is absorption, J(omega)*n_bar; omega < 0 is emission,
    J(|omega|)*(1 + n_bar). omega = 0 hits the Bose divergence.
    """
    if omega == 0:
        raise ValueError("Gamma_beta(0) diverges (Bose function pole)")
    n = occupation(bath.beta, abs(omega))
    j = bath.coupling(omega)
    return j * n if omega > 0 else j * (1.0 + n)


def rate_beta_derivative(bath: BathSpec, omega: float) -> float:
    """d Gamma_beta(omega) / d beta; equals J(|omega|) * dn_bar/dbeta for both signs."""
    if omega == 0:
        raise ValueError("Gamma_beta(0) diverges (Bose function pole)")
    return bath.coupling(omega) * occupation_beta_derivative(bath.beta, abs(omega))


def rate_log_derivative(bath: BathSpec, omega: float) -> float:
    """d/domega of log[exp(omega*beta) * Gamma_beta(omega)] at omega > 0.

    Equals J'(omega)/J(omega) - beta*n_bar(omega); for flat J this is
    -beta*n_bar. Its absolute value is the sensitivity constant that enters
    the overlap and convergence bounds.
    """
    if omega <= 0:
        raise ValueError("rate_log_derivative expects omega > 0")
    jp = bath.spectral_density.derivative(bath.gamma, omega)
    j = bath.coupling(omega)
    return jp / j - bath.beta * occupation(bath.beta, omega)


def _dissipator(jump: np.ndarray) -> np.ndarray:
    """Vectorized Lindblad dissipator for a single jump operator.

    D = L (x) L* - 1/2 [ (L^dag L) (x) I + I (x) (L^dag L)^T ].
    """
    d = jump.shape[0]
    eye = np.eye(d)
    ldl = jump.conj().T @ jump
    return kron(jump, jump.conj()) - 0.5 * (kron(ldl, eye) + kron(eye, ldl.T))


def build_liouvillian(probe: ProbeSpec, bath: BathSpec) -> Liouvillian:
    """Assemble the star-topology Davies generator and its beta-derivative.

    Only ground<->excited transitions carry dissipation. The beta-derivative
    is exact: each transition pair contributes J(omega_j) * dn_bar_j/dbeta
    times the sum of its up and down dissipators (J is beta-independent).
    """
    d = probe.d
    energies = probe.level_energies
    h = np.diag(energies).astype(np.complex128)
    eye = np.eye(d)
    ham_part = -1j * (kron(h, eye) - kron(eye, h.T))

    diss = np.zeros((d * d, d * d), dtype=np.complex128)
    dbeta = np.zeros_like(diss)
    for j in range(1, d):
        omega_j = energies[j]
        down = np.zeros((d, d), dtype=np.complex128)
        down[0, j] = 1.0  # |0><j|, emission j -> 0
        up = np.zeros((d, d), dtype=np.complex128)
        up[j, 0] = 1.0  # |j><0|, absorption 0 -> j
        d_down = _dissipator(down)
        d_up = _dissipator(up)
        diss += rate(bath, -omega_j) * d_down + rate(bath, omega_j) * d_up
        dbeta += rate_beta_derivative(bath, omega_j) * (d_down + d_up)

    return Liouvillian(
        probe=probe,
        bath=bath,
        matrix=ham_part + diss,
        hamiltonian_part=ham_part,
        dissipative_part=diss,
        beta_derivative=dbeta,
    )


def gibbs_state(probe: ProbeSpec, bath: BathSpec) -> np.ndarray:
    """Thermal state diag(exp(-beta*omega_j)) / Z; the generator's fixed point."""
    w = np.exp(-bath.beta * probe.level_energies)
    return np.diag(w / w.sum()).astype(np.complex128)


def kms_check(bath: BathSpec, omegas) -> float:
    """Max over the grid of |Gamma(omega)/Gamma(-omega) - exp(-beta*omega)|."""
    dev = 0.0
    for w in omegas:
        if w == 0:
            raise ValueError("detailed balance is undefined at omega = 0")
        ratio = rate(bath, w) / rate(bath, -w)
        dev = max(dev, abs(ratio - math.exp(-bath.beta * w)))
    return dev


def optimal_frequency(bath: BathSpec, n_points: int = 400) -> float:
    """Grid-search argmax_omega |d Gamma_beta(omega)/d beta| over (0, 10/beta].

    Reported for documentation; the probe gap is taken as given by the caller.
    """
    grid = np.linspace(10.0 / bath.beta / n_points, 10.0 / bath.beta, n_points)
    sens = [abs(rate_beta_derivative(bath, w)) for w in grid]
    return float(grid[int(np.argmax(sens))])


def trace_preservation_defect(liouvillian: Liouvillian) -> float:
    """Residual of vec(I)^dag L, zero for a trace-preserving generator."""
    d = liouvillian.dim
    left = vectorize(np.eye(d)).conj() @ liouvillian.matrix
    return float(np.abs(left).max())
