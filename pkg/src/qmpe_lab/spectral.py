"""Spectral machinery for the star-topology Davies generator.

Provides the exact eigentriples of the zero-detuning generator, the numerical
eigendecomposition for arbitrary detunings with biorthonormal left/right
pairing, mode overlaps Tr(l^dag rho0), and the perturbative bound on the
ground state's overlap with the slow decay modes.

Conventions: right operators are Frobenius-normalized, ||r_i|| = 1, and left
operators scaled so Tr(l_i^dag r_j) = delta_ij. Triples are sorted by |Re
lambda| ascending, so the unique zero mode (the Gibbs state) comes first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import model
from .linalg import devectorize, frobenius_norm, vectorize

__all__ = [
    "EigenTriple",
    "SpectralData",
    "PairingError",
    "analytic_spectrum_degenerate",
    "numerical_spectrum",
    "mode_overlaps",
    "mode_evolve",
    "slow_mode_indices",
    "perturbation_overlap_bound",
    "eigenvalue_match_deviation",
    "coherence_rate_comparison",
]

POPULATION = "population"
COHERENCE = "coherence"


class PairingError(RuntimeError):
    """Left/right eigenvector pairing or biorthonormalization failed."""


@dataclass(frozen=True)
class EigenTriple:
    """One decay mode: eigenvalue, right and left eigenoperators, subspace tag."""

    lam: complex
    right: np.ndarray  # (d, d), Frobenius norm 1
    left: np.ndarray  # (d, d), Tr(left^dag right) = 1
    subspace: str  # POPULATION or COHERENCE
    residual: float = 0.0

    @property
    def decay_rate(self) -> float:
        return abs(self.lam.real)


@dataclass(frozen=True)
class SpectralData:
    """Biorthonormal eigentriples sorted by |Re lambda| ascending."""

    dim: int
    triples: tuple

    def __post_init__(self):
        if len(self.triples) != self.dim * self.dim:
            raise PairingError(
                f"expected {self.dim**2} modes, got {len(self.triples)}"
            )

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([t.lam for t in self.triples])

    @property
    def zero_index(self) -> int:
        return 0  # sorted by |Re lambda|; validated unique at construction

    @property
    def lambda_min_nonzero(self) -> float:
        """Slowest nonzero decay rate."""
        return min(t.decay_rate for t in self.triples[1:])

    @property
    def lambda_max(self) -> float:
        """Fastest decay rate."""
        return max(t.decay_rate for t in self.triples)

    def population_min_rate(self) -> float:
        """Slowest nonzero decay rate among population modes."""
        return min(
            t.decay_rate
            for i, t in enumerate(self.triples)
            if i != self.zero_index and t.subspace == POPULATION
        )


def _canonical_phase(r: np.ndarray, l: np.ndarray):
    """Rotate a (right, left) pair so the largest entry of r is real positive."""
    flat = r.reshape(-1)
    k = int(np.argmax(np.abs(flat)))
    a = flat[k]
    if abs(a) == 0.0:
        return r, l
    phase = a / abs(a)
    return r / phase, l / phase


def _sort_and_validate(dim: int, triples, zero_tol: float, bi_tol: float = 1e-8):
    scale = max(1.0, max(abs(t.lam) for t in triples))
    zeros = [t for t in triples if abs(t.lam) <= zero_tol * scale]
    if len(zeros) != 1:
        raise PairingError(f"expected exactly one zero mode, found {len(zeros)}")
    if any(t.lam.real > 1e-10 * scale for t in triples):
        raise PairingError("positive decay eigenvalue: generator is not dissipative")
    ordered = sorted(
        triples, key=lambda t: (abs(t.lam.real), t.lam.imag, t.subspace)
    )
    if ordered[0] is not zeros[0]:
        raise PairingError("zero mode is not the slowest mode after ordering")
    rights = np.stack([vectorize(t.right) for t in ordered], axis=1)
    lefts = np.stack([vectorize(t.left) for t in ordered], axis=1)
    gram = lefts.conj().T @ rights
    defect = np.abs(gram - np.eye(len(ordered))).max()
    if defect > bi_tol:
        raise PairingError(f"biorthogonality defect {defect:.3e} exceeds {bi_tol:.1e}")
    return SpectralData(dim=dim, triples=tuple(ordered))


def _helmert_basis(n: int) -> np.ndarray:
    """Orthonormal basis (columns) of the zero-sum subspace of R^n, n-1 vectors.

    Column k-1 is (1,..,1,-k,0,..,0)/sqrt(k(k+1)) with k leading ones; the
    first column is (1,-1,0,..)/sqrt(2).
    """
    basis = np.zeros((n, n - 1))
    for k in range(1, n):
        basis[:k, k - 1] = 1.0
        basis[k, k - 1] = -k
        basis[:, k - 1] /= np.sqrt(k * (k + 1))
    return basis


def analytic_spectrum_degenerate(probe: model.ProbeSpec, bath: model.BathSpec) -> SpectralData:
    """Exact eigentriples for the zero-detuning generator.

    Population space: the Gibbs state at eigenvalue 0 (left operator identity),
    the fast mode at -(g*(d*n+1)) pairing the ground level against the uniform
    excited combination, and a (d-2)-fold degenerate slow eigenspace at
    -(g*(1+n)) spanned by zero-sum diagonal operators (chosen orthonormal).
    Coherence space is diagonal: |i><j| decays at -(R_i+R_j)/2 - i(w_i - w_j)
    where R_i is the total outflow rate from level i in the assembled
    generator (the ground-excited rate is *not* taken from a closed formula;
    see :func:`coherence_rate_comparison` for the discrepant published forms).
    """
    if probe.epsilon != 0.0:
        raise ValueError("analytic spectrum requires zero detuning")
    d = probe.d
    delta = probe.gap
    g = bath.coupling(delta)
    n = model.occupation(bath.beta, delta)
    energies = probe.level_energies

    def diag_op(vec_d: np.ndarray) -> np.ndarray:
        return np.diag(vec_d.astype(np.complex128))

    triples = []

    # Gibbs mode: right is the thermal state, left the identity.
    tau = model.gibbs_state(probe, bath)
    tau_norm = frobenius_norm(tau)
    triples.append(
        EigenTriple(
            lam=0.0 + 0.0j,
            right=tau / tau_norm,
            left=np.eye(d, dtype=np.complex128) * tau_norm,
            subspace=POPULATION,
        )
    )

    # Fast population mode at -(g (d n + 1)).
    r_fast = np.zeros(d)
    r_fast[0] = np.sqrt((d - 1) / d)
    r_fast[1:] = -1.0 / np.sqrt(d * (d - 1))
    l_fast = np.zeros(d)
    l_fast[0] = n * np.sqrt(d - 1)
    l_fast[1:] = -(1.0 + n) / np.sqrt(d - 1)
    l_fast *= np.sqrt(d) / (d * n + 1.0)  # enforce Tr(l^dag r) = 1
    triples.append(
        EigenTriple(
            lam=complex(-g * (d * n + 1.0)),
            right=diag_op(r_fast),
            left=diag_op(l_fast),
            subspace=POPULATION,
        )
    )

    # Slow population modes at -(g (1 + n)), multiplicity d-2: orthonormal
    # zero-sum combinations of excited projectors (left equals right).
    if d >= 3:
        for col in _helmert_basis(d - 1).T:
            v = np.concatenate(([0.0], col))
            triples.append(
                EigenTriple(
                    lam=complex(-g * (1.0 + n)),
                    right=diag_op(v),
                    left=diag_op(v),
                    subspace=POPULATION,
                )
            )

    # Coherence modes: |i><j| with rate (R_i + R_j)/2 and frequency w_i - w_j,
    # where R_0 = (d-1) Gamma(+Delta) and R_k = Gamma(-Delta).
    out_rate = np.empty(d)
    out_rate[0] = (d - 1) * model.rate(bath, delta)
    out_rate[1:] = model.rate(bath, -delta)
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            op = np.zeros((d, d), dtype=np.complex128)
            op[i, j] = 1.0
            lam = -0.5 * (out_rate[i] + out_rate[j]) - 1j * (energies[i] - energies[j])
            triples.append(
                EigenTriple(lam=lam, right=op, left=op.copy(), subspace=COHERENCE)
            )

    return _sort_and_validate(d, triples, zero_tol=1e-9)


def _cluster(eigs: np.ndarray, tol: float):
    """Group eigenvalue indices by complex proximity (transitive within tol)."""
    order = np.lexsort((eigs.imag, eigs.real))
    clusters = []
    for idx in order:
        placed = False
        for cl in clusters:
            if abs(eigs[idx] - eigs[cl[0]]) <= tol:
                cl.append(idx)
                placed = True
                break
        if not placed:
            clusters.append([int(idx)])
    return clusters


def _block_triples(block: np.ndarray, embed, dim: int, tag: str, cluster_tol: float):
    """Eigentriples of one invariant block, biorthonormalized within clusters.

    ``embed`` maps a block-local vector to the full d^2 vectorized operator.
    Degenerate right eigenvectors are QR-orthonormalized inside each cluster
    (any basis of the eigenspace is admissible), then the left vectors are
    solved from the small Gram system so that Tr(l_i^dag r_j) = delta_ij.
    """
    w, vl, vr = scipy.linalg.eig(block, left=True, right=True)
    scale = max(1.0, float(np.abs(w).max()))
    triples = []
    for members in _cluster(w, cluster_tol * scale):
        r_cols = vr[:, members]
        q, _ = np.linalg.qr(r_cols)
        l_cols = vl[:, members]
        gram = l_cols.conj().T @ q
        try:
            l_new = l_cols @ np.linalg.inv(gram).conj().T
        except np.linalg.LinAlgError as exc:
            raise PairingError(
                f"singular Gram system for cluster near {w[members[0]]:.6g}"
            ) from exc
        if not np.all(np.isfinite(l_new)):
            raise PairingError(
                f"ill-conditioned pairing for cluster near {w[members[0]]:.6g}"
            )
        for k in range(len(members)):
            r = q[:, k]
            l = l_new[:, k]
            lam = complex(l.conj() @ (block @ r))  # Rayleigh quotient of the pair
            residual = float(np.linalg.norm(block @ r - lam * r))
            r_full = devectorize(embed(r, dim))
            l_full = devectorize(embed(l, dim))
            r_full, l_full = _canonical_phase(r_full, l_full)
            triples.append(
                EigenTriple(lam=lam, right=r_full, left=l_full, subspace=tag,
                            residual=residual)
            )
    return triples


def numerical_spectrum(
    liouvillian: model.Liouvillian,
    cluster_tol: float = 1e-6,
    residual_tol: float = 1e-8,
) -> SpectralData:
    """Full d^2 biorthonormal eigentriples of an assembled generator.

    The generator couples populations only to populations and coherences only
    to coherences; this is checked exactly, and the eigendecomposition runs on
    the two invariant blocks so every mode carries an exact subspace tag.
    """
    d = liouvillian.dim
    m = liouvillian.matrix
    pop_idx = np.array([i * d + i for i in range(d)])
    coh_idx = np.array([i * d + j for i in range(d) for j in range(d) if i != j])
    if np.any(m[np.ix_(pop_idx, coh_idx)] != 0) or np.any(m[np.ix_(coh_idx, pop_idx)] != 0):
        raise PairingError("generator couples the population and coherence subspaces")

    def embed_factory(idx):
        def embed(vec_block, dim):
            full = np.zeros(dim * dim, dtype=np.complex128)
            full[idx] = vec_block
            return full

        return embed

    triples = _block_triples(
        m[np.ix_(pop_idx, pop_idx)], embed_factory(pop_idx), d, POPULATION, cluster_tol
    )
    triples += _block_triples(
        m[np.ix_(coh_idx, coh_idx)], embed_factory(coh_idx), d, COHERENCE, cluster_tol
    )

    worst = max(t.residual for t in triples)
    if worst > residual_tol:
        raise PairingError(
            f"worst eigentriple residual {worst:.3e} exceeds {residual_tol:.1e}"
        )
    return _sort_and_validate(d, triples, zero_tol=1e-9)


def mode_overlaps(spec: SpectralData, rho0: np.ndarray, trace_tol: float = 1e-9) -> np.ndarray:
    """Overlap coefficients c_i = Tr(l_i^dag rho0), aligned with spec.triples."""
    rho0 = np.asarray(rho0, dtype=np.complex128)
    if abs(np.trace(rho0) - 1.0) > trace_tol:
        raise ValueError(f"state trace {np.trace(rho0):.12g} is not 1")
    if np.abs(rho0 - rho0.conj().T).max() > trace_tol:
        raise ValueError("state is not Hermitian")
    return np.array([np.vdot(t.left, rho0) for t in spec.triples])


def mode_evolve(spec: SpectralData, rho0: np.ndarray, t: float) -> np.ndarray:
    """Evolved state via the mode expansion sum_i e^{lambda_i t} c_i r_i."""
    coeffs = mode_overlaps(spec, rho0)
    out = np.zeros((spec.dim, spec.dim), dtype=np.complex128)
    for c, triple in zip(coeffs, spec.triples):
        out += c * np.exp(triple.lam * t) * triple.right
    return out


def slow_mode_indices(spec: SpectralData) -> list:
    """Indices of the lower-tail modes covered by the ground-overlap bound.

    The tail threshold is (d-1)/2 times the slowest *population* rate (which
    equals the global slowest rate except at small d, where a ground-excited
    coherence rate can dip below it), and the fastest population cluster
    (rates >= 0.9 * Lambda_max) is excluded: the overlap bound concerns the
    perturbed degenerate slow modes, not the fast mode aligned with the
    ground state.
    """
    lam_pop = spec.population_min_rate()
    threshold = 0.5 * (spec.dim - 1) * lam_pop * (1.0 + 1e-9)
    fast_cut = 0.9 * spec.lambda_max
    return [
        i
        for i, t in enumerate(spec.triples)
        if i != spec.zero_index and t.decay_rate <= threshold and t.decay_rate < fast_cut
    ]


def perturbation_overlap_bound(probe: model.ProbeSpec, bath: model.BathSpec) -> float:
    """First-order bound eps/sqrt(d-1) * |d_w log(e^{w beta} Gamma(w))| at w = gap.

    Bounds |Tr(l_j^dag rho*)| for the slow-tail modes, rho* the ground state.
    Zero at zero detuning. Not applicable to d = 2 (no slow tail).
    """
    if probe.d < 3:
        raise ValueError("the overlap bound requires d >= 3")
    g = abs(model.rate_log_derivative(bath, probe.gap))
    return probe.epsilon / np.sqrt(probe.d - 1) * g


def eigenvalue_match_deviation(w_a, w_b) -> float:
    """Max pairwise distance under the optimal matching of two eigenvalue multisets."""
    import scipy.optimize

    w_a = np.asarray(w_a)
    w_b = np.asarray(w_b)
    if w_a.shape != w_b.shape:
        raise ValueError("eigenvalue multisets differ in size")
    cost = np.abs(w_a[:, None] - w_b[None, :])
    rows, cols = scipy.optimize.linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def coherence_rate_comparison(probe: model.ProbeSpec, bath: model.BathSpec) -> dict:
    """Ground-excited coherence decay rate: assembled value vs published forms.

    The two closed-form expressions in circulation disagree with each other;
    the assembled generator's diagonal action is treated as ground truth and
    both deviations are reported.
    """
    d = probe.d
    delta = probe.gap
    g = bath.coupling(delta)
    n = model.occupation(bath.beta, delta)
    assembled = 0.5 * (model.rate(bath, -delta) + (d - 1) * model.rate(bath, delta))
    variant_a = 0.5 * (2.0 * g + g * n * (d + 1))
    variant_b = 0.5 * (g * n + (d - 1) * g * (1.0 + n))
    return {
        "assembled": assembled,
        "formula_a": variant_a,
        "formula_b": variant_b,
        "deviation_a": abs(variant_a - assembled),
        "deviation_b": abs(variant_b - assembled),
    }
