"""Thermometric figure of merit for the star-topology probe.

The short-time temperature sensitivity of an initial state rho is the trace
norm ||d_beta L[rho]||_1. For the star model it obeys the state-independent
roof

    ||d_beta L[rho]||_1 <= 2 |sum_j d_beta Gamma_beta(omega_j)|,

attained exactly (and only, among basis states) by the ground state. The
module evaluates the sensitivity, the roof, the block decomposition of
d_beta L[rho] for pure states, a sampling-based optimality verifier, and the
finite-interrogation-time counterpart ||d_beta rho_dt||_1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import model
from .linalg import apply_super, devectorize, expm_dense, trace_norm, vectorize

__all__ = [
    "ProbeState",
    "Blocks",
    "DistinguishabilityReport",
    "OptimalityViolation",
    "local_distinguishability",
    "roof_bound",
    "eq_blocks",
    "assemble_blocks",
    "distinguishability_report",
    "verify_ground_optimality",
    "FiniteTimeSensitivity",
    "finite_time_distinguishability",
]

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = -1e-10


@dataclass(frozen=True)
class ProbeState:
    """Validated density matrix with a provenance label."""

    matrix: np.ndarray
    label: str = "explicit"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"state must be a square matrix, got shape {m.shape}")
        if np.abs(m - m.conj().T).max() > HERMITICITY_TOL:
            raise ValueError("state is not Hermitian")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL or abs(np.trace(m).imag) > TRACE_TOL:
            raise ValueError(f"state trace {np.trace(m):.12g} is not 1")
        if np.linalg.eigvalsh(m).min() < POSITIVITY_TOL:
            raise ValueError("state has a negative eigenvalue beyond tolerance")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def ground(cls, d: int) -> "ProbeState":
        m = np.zeros((d, d), dtype=np.complex128)
        m[0, 0] = 1.0
        return cls(m, "ground")

    @classmethod
    def basis(cls, d: int, j: int) -> "ProbeState":
        m = np.zeros((d, d), dtype=np.complex128)
        m[j, j] = 1.0
        return cls(m, f"basis({j})")

    @classmethod
    def from_pure(cls, psi, label: str) -> "ProbeState":
        v = np.asarray(psi, dtype=np.complex128)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()), label)

    @classmethod
    def uniform_excited(cls, d: int) -> "ProbeState":
        v = np.concatenate(([0.0], np.full(d - 1, 1.0 / np.sqrt(d - 1))))
        return cls.from_pure(v, "excited_uniform")

    @classmethod
    def uniform_all(cls, d: int) -> "ProbeState":
        return cls.from_pure(np.full(d, 1.0 / np.sqrt(d)), "uniform_all")


@dataclass(frozen=True)
class Blocks:
    """Blocks of d_beta L[rho] for a pure state psi = sqrt(eta)|0> + sqrt(1-eta)|psi~>.

    A is the excited block of d_beta L[|psi~><psi~|] and a its ground entry;
    B (diagonal) and b come from d_beta L[|0><0|]; c is the ground-excited
    coupling column of d_beta L applied to the cross terms.
    """

    A: np.ndarray  # (d-1, d-1)
    B: np.ndarray  # (d-1, d-1) diagonal
    a: float
    b: float
    c: np.ndarray  # (d-1,) column entries at (j, 0)


class OptimalityViolation(RuntimeError):
    """A sampled state beat the roof bound; carries the counterexample."""

    def __init__(self, message: str, state: ProbeState, value: float, roof: float):
        super().__init__(message)
        self.state = state
        self.value = value
        self.roof = roof


def local_distinguishability(liouvillian: model.Liouvillian, state: ProbeState) -> float:
    """|| d_beta L [rho] ||_1 for a validated state."""
    return trace_norm(apply_super(liouvillian.beta_derivative, state.matrix))


def roof_bound(probe: model.ProbeSpec, bath: model.BathSpec) -> float:
    """State-independent roof 2 |sum_j d_beta Gamma_beta(omega_j)|."""
    total = sum(
        model.rate_beta_derivative(bath, w) for w in probe.level_energies[1:]
    )
    return 2.0 * abs(total)


def eq_blocks(probe: model.ProbeSpec, bath: model.BathSpec, excited_amplitudes) -> Blocks:
    """Block data of d_beta L[rho] for excited-manifold amplitudes psi~.

    With s_k = J(omega_k) * dn_k (all <= 0) and S = sum_k s_k:
    A = -(|phi><psi~| + |psi~><phi|)/2 with phi_k = s_k psi_k,
    B = diag(s), a = sum_k s_k |psi_k|^2, b = -S,
    c_j = -psi_j (s_j + S) / 2.
    """
    psi = np.asarray(excited_amplitudes, dtype=np.complex128)
    if psi.shape != (probe.d - 1,):
        raise ValueError(f"expected {probe.d - 1} excited amplitudes, got {psi.shape}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError("excited amplitudes must be normalized")
    s = np.array(
        [model.rate_beta_derivative(bath, w) for w in probe.level_energies[1:]]
    )
    total = s.sum()
    phi = s * psi
    a_block = -0.5 * (np.outer(phi, psi.conj()) + np.outer(psi, phi.conj()))
    return Blocks(
        A=a_block,
        B=np.diag(s).astype(np.complex128),
        a=float(np.real(s @ (np.abs(psi) ** 2))),
        b=float(-total),
        c=-0.5 * psi * (s + total),
    )


def assemble_blocks(blocks: Blocks, eta: float) -> np.ndarray:
    """Full d x d matrix d_beta L[rho] from the block data at mixing weight eta."""
    k = blocks.A.shape[0]
    out = np.zeros((k + 1, k + 1), dtype=np.complex128)
    out[0, 0] = eta * blocks.b + (1.0 - eta) * blocks.a
    out[1:, 1:] = eta * blocks.B + (1.0 - eta) * blocks.A
    coupling = np.sqrt(eta * (1.0 - eta)) * blocks.c
    out[1:, 0] = coupling
    out[0, 1:] = coupling.conj()
    return out


@dataclass(frozen=True)
class DistinguishabilityReport:
    value: float
    roof: float
    gap_to_roof: float
    blocks: Blocks | None = None


def distinguishability_report(
    liouvillian: model.Liouvillian, state: ProbeState
) -> DistinguishabilityReport:
    """Sensitivity value with the roof and, for pure states, the block data."""
    value = local_distinguishability(liouvillian, state)
    roof = roof_bound(liouvillian.probe, liouvillian.bath)
    blocks = None
    evals, evecs = np.linalg.eigh(state.matrix)
    if evals[-1] > 1.0 - 1e-10:  # pure state: decompose into (eta, psi~)
        psi = evecs[:, -1]
        excited = psi[1:]
        nrm = np.linalg.norm(excited)
        if nrm > 1e-12:
            blocks = eq_blocks(liouvillian.probe, liouvillian.bath, excited / nrm)
    return DistinguishabilityReport(
        value=value, roof=roof, gap_to_roof=roof - value, blocks=blocks
    )


def verify_ground_optimality(
    liouvillian: model.Liouvillian,
    n_samples: int,
    seed: int,
    roof_tol: float = 1e-9,
):
    """Check the roof bound on Haar samples plus structured candidates.

    Evaluates every basis state, the uniform superpositions, the ground state
    and ``n_samples`` Haar-random pure states. Raises
    :class:`OptimalityViolation` if any value exceeds roof + roof_tol or if
    the ground state fails to attain the roof within roof_tol.

    Returns a list of (label, value) pairs and the summary dict
    {max_sampled, roof, ground_value}.
    """
    from .montecarlo import haar_pure_state  # deferred: montecarlo imports mpemba

    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    probe, bath = liouvillian.probe, liouvillian.bath
    d = probe.d
    roof = roof_bound(probe, bath)

    candidates = [ProbeState.ground(d)]
    candidates += [ProbeState.basis(d, j) for j in range(1, d)]
    candidates += [ProbeState.uniform_all(d), ProbeState.uniform_excited(d)]
    candidates += [
        ProbeState.from_pure(haar_pure_state(d, seed, i), f"haar(seed={seed} i={i})")
        for i in range(n_samples)
    ]

    rows = []
    ground_value = None
    for state in candidates:
        value = local_distinguishability(liouvillian, state)
        rows.append((state.label, value))
        if state.label == "ground":
            ground_value = value
        if value > roof + roof_tol:
            raise OptimalityViolation(
                f"state {state.label} exceeds the roof: {value:.12g} > {roof:.12g}",
                state, value, roof,
            )
    if ground_value < roof - roof_tol:
        raise OptimalityViolation(
            f"ground state misses the roof: {ground_value:.12g} < {roof:.12g}",
            candidates[0], ground_value, roof,
        )
    summary = {
        "max_sampled": max(v for _, v in rows),
        "roof": roof,
        "ground_value": ground_value,
    }
    return rows, summary


class FiniteTimeSensitivity:
    """Evaluator of ||d_beta rho_dt||_1 by central differences in beta.

    Precomputes the two propagators exp(L_{beta +/- dbeta} * dt) so that a
    batch of states costs one matrix-vector product each.
    """

    def __init__(self, probe: model.ProbeSpec, bath: model.BathSpec, dt: float,
                 dbeta: float | None = None):
        if dt < 0:
            raise ValueError("dt must be >= 0")
        if dbeta is None:
            dbeta = 1e-4 * bath.beta
        if dbeta <= 0:
            raise ValueError("dbeta must be positive")
        self.dt = dt
        self.dbeta = dbeta
        plus = model.build_liouvillian(probe, bath.with_beta(bath.beta + dbeta))
        minus = model.build_liouvillian(probe, bath.with_beta(bath.beta - dbeta))
        self._diff = (expm_dense(plus.matrix, dt) - expm_dense(minus.matrix, dt)) / (
            2.0 * dbeta
        )

    def value(self, state: ProbeState) -> float:
        if self.dt == 0.0:
            return 0.0
        return trace_norm(devectorize(self._diff @ vectorize(state.matrix)))


def finite_time_distinguishability(
    probe: model.ProbeSpec,
    bath: model.BathSpec,
    state: ProbeState,
    dt: float,
    dbeta: float | None = None,
    check_step: bool = True,
) -> float:
    """||(rho_dt(beta+h) - rho_dt(beta-h)) / 2h||_1 with h = dbeta.

    Default h = 1e-4 * beta. When ``check_step`` is set, the evaluation is
    repeated at h/2 and a >10% disagreement (roundoff-dominated difference)
    raises a warning.
    """
    if dt == 0.0:
        return 0.0
    evaluator = FiniteTimeSensitivity(probe, bath, dt, dbeta)
    value = evaluator.value(state)
    if check_step:
        half = FiniteTimeSensitivity(probe, bath, dt, evaluator.dbeta / 2.0).value(state)
        scale = max(abs(value), abs(half), 1e-300)
        if abs(value - half) / scale > 0.1:
            warnings.warn(
                f"finite-difference step {evaluator.dbeta:.3e} looks roundoff-dominated: "
                f"value {value:.6e} vs {half:.6e} at half step",
                RuntimeWarning,
            )
    return value
