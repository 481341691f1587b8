"""Property-test engines for the trace-norm block inequalities.

Two matrix inequalities underpin the thermometric roof bound:

1. Bordered-block bound: for square A, column c and scalar b,
   ||[[A, c], [c^dag, b]]||_1 <= ||A||_1 + sqrt(4||c||^2 + |b|^2).
2. Conditional mixing bound: the trace norm of the eta-mixture block matrix
   is at most max(||A (+) a||_1, ||B (+) b||_1) whenever
   (i)  |a-b| >= 2||c||, or the critical point
        (2||c||^2 + (a-b)b) / (4||c||^2 - (a-b)^2) lies outside [0, 1];
   (ii) (||A||_1 - ||B||_1)(|a| - |b|) >= 0.

The module evaluates both sides on random instances (general complex and
Hermitian-restricted generators), and machine-checks the four structural
conditions satisfied by the physical blocks of the probe's sensitivity
derivative for arbitrary excited-manifold amplitudes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import model
from .linalg import trace_norm
from .thermometry import eq_blocks

__all__ = [
    "BlockInstance",
    "ConditionFlags",
    "Lemma1Result",
    "Lemma2Result",
    "lemma1_check",
    "lemma2_check",
    "thermometry_conditions_check",
    "random_lemma1_instance",
    "random_lemma2_instance",
    "condition_violating_instance",
    "condition_satisfying_instances",
]

HOLD_TOL = 1e-9
#: |denominator| below this treats the critical point as undefined and lets
#: the first branch alone decide condition 1.
DEGENERATE_DENOM_TOL = 1e-12


@dataclass(frozen=True)
class BlockInstance:
    """One instance of the conditional mixing inequality."""

    A: np.ndarray
    B: np.ndarray
    c: np.ndarray
    a: float
    b: float
    alpha: float


@dataclass(frozen=True)
class ConditionFlags:
    cond1: bool
    cond2: bool

    @property
    def both(self) -> bool:
        return self.cond1 and self.cond2


@dataclass(frozen=True)
class Lemma1Result:
    lhs: float
    rhs: float
    holds: bool


@dataclass(frozen=True)
class Lemma2Result:
    flags: ConditionFlags
    lhs: float
    rhs: float
    holds: bool


def _bordered(block: np.ndarray, c: np.ndarray, corner: complex) -> np.ndarray:
    k = block.shape[0]
    out = np.zeros((k + 1, k + 1), dtype=np.complex128)
    out[:k, :k] = block
    out[:k, k] = c
    out[k, :k] = c.conj()
    out[k, k] = corner
    return out


def lemma1_check(A: np.ndarray, c: np.ndarray, b: complex) -> Lemma1Result:
    """Evaluate both sides of the bordered-block bound."""
    A = np.asarray(A, dtype=np.complex128)
    c = np.asarray(c, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or c.shape != (A.shape[0],):
        raise ValueError(f"inconsistent block shapes A{A.shape}, c{c.shape}")
    lhs = trace_norm(_bordered(A, c, b))
    rhs = trace_norm(A) + np.sqrt(4.0 * np.linalg.norm(c) ** 2 + abs(b) ** 2)
    return Lemma1Result(lhs=lhs, rhs=float(rhs), holds=lhs <= rhs + HOLD_TOL)


def condition_flags(inst: BlockInstance) -> ConditionFlags:
    """The two admissibility conditions of the mixing inequality.

    A degenerate critical-point denominator (|4||c||^2 - (a-b)^2| <= 1e-12)
    leaves condition 1 to the first branch alone.
    """
    c_sq = float(np.linalg.norm(inst.c) ** 2)
    gap = inst.a - inst.b
    cond1 = abs(gap) >= 2.0 * np.sqrt(c_sq)
    denom = 4.0 * c_sq - gap**2
    if not cond1 and abs(denom) > DEGENERATE_DENOM_TOL:
        crit = (2.0 * c_sq + gap * inst.b) / denom
        cond1 = not (0.0 <= crit <= 1.0)
    cond2 = (trace_norm(inst.A) - trace_norm(inst.B)) * (abs(inst.a) - abs(inst.b)) >= 0.0
    return ConditionFlags(cond1=cond1, cond2=cond2)


def lemma2_check(inst: BlockInstance) -> Lemma2Result:
    """Evaluate the conditional mixing inequality on one instance.

    ``holds`` is asserted (lhs <= rhs within tolerance) only when both
    conditions are met; otherwise the evaluation is informational and the
    inequality may legitimately fail.
    """
    al = inst.alpha
    if not 0.0 <= al <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    mixed = _bordered(
        al * inst.A + (1.0 - al) * inst.B,
        np.sqrt(al * (1.0 - al)) * inst.c,
        al * inst.a + (1.0 - al) * inst.b,
    )
    lhs = trace_norm(mixed)
    rhs = max(
        trace_norm(inst.A) + abs(inst.a),  # block-diagonal: norms add
        trace_norm(inst.B) + abs(inst.b),
    )
    return Lemma2Result(
        flags=condition_flags(inst), lhs=lhs, rhs=rhs, holds=lhs <= rhs + HOLD_TOL
    )


def thermometry_conditions_check(
    probe: model.ProbeSpec, bath: model.BathSpec, excited_amplitudes
) -> dict:
    """The four structural conditions behind the roof bound, machine-checked.

    Built from the physical blocks of d_beta L for the given excited-manifold
    amplitudes: (i) |b| >= |a|, (ii) (a-b)^2 <= 4||c||^2,
    (iii) b(a-b) + 2||c||^2 <= 0, (iv) ||A||_1 <= ||B||_1.
    All four hold for every valid input; basis states realize (ii) and (iii)
    with equality, hence the relative slack.
    """
    blocks = eq_blocks(probe, bath, excited_amplitudes)
    c_sq = float(np.linalg.norm(blocks.c) ** 2)
    gap = blocks.a - blocks.b
    norm_a = trace_norm(blocks.A)
    norm_b = trace_norm(blocks.B)
    scale = max(1.0, norm_b**2)
    tol = 1e-12 * scale
    return {
        "abs_b_ge_abs_a": abs(blocks.b) + tol >= abs(blocks.a),
        "gap_sq_le_4c_sq": gap**2 <= 4.0 * c_sq + tol,
        "b_gap_plus_2c_sq_le_0": blocks.b * gap + 2.0 * c_sq <= tol,
        "norm_A_le_norm_B": norm_a <= norm_b + tol,
    }


def random_lemma1_instance(rng: np.random.Generator, d: int):
    """Gaussian complex (A, c, b)."""
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    c = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    b = complex(rng.standard_normal() + 1j * rng.standard_normal())
    return A, c, b


def random_lemma2_instance(
    rng: np.random.Generator, d: int, hermitian: bool = True
) -> BlockInstance:
    """Gaussian instance; Hermitian A, B and real a, b mirror the physical use.

    The coupling norm is drawn relative to |a-b| (scale factor uniform on
    (0, 1.4)): a raw Gaussian c makes the critical point concentrate inside
    [0, 1] as d grows, which would starve the condition-satisfying sampler.
    Both branches of condition 1 stay exercised.
    """
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    B = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    if hermitian:
        A = 0.5 * (A + A.conj().T)
        B = 0.5 * (B + B.conj().T)
    a = float(rng.standard_normal())
    b = float(rng.standard_normal())
    direction = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    direction /= np.linalg.norm(direction)
    c_norm = 0.5 * abs(a - b) * rng.uniform(0.0, 1.4)
    return BlockInstance(
        A=A, B=B, c=c_norm * direction, a=a, b=b, alpha=float(rng.uniform())
    )


def condition_violating_instance(
    rng: np.random.Generator, d: int, hermitian: bool = True
) -> BlockInstance:
    """Deliberately break condition 1: large coupling puts the critical point
    near 1/2, inside [0, 1]. Feeds the informational violation gallery."""
    inst = random_lemma2_instance(rng, d, hermitian=hermitian)
    gap = abs(inst.a - inst.b)
    direction = inst.c / np.linalg.norm(inst.c) if np.linalg.norm(inst.c) else inst.c
    big_c = direction * max(gap, 1.0) * rng.uniform(2.0, 5.0)
    return BlockInstance(inst.A, inst.B, big_c, inst.a, inst.b, inst.alpha)


def condition_satisfying_instances(
    rng: np.random.Generator,
    d: int,
    n: int,
    hermitian: bool = True,
    max_attempts: int = 100_000,
):
    """Rejection-sample ``n`` instances with both conditions satisfied."""
    out = []
    attempts = 0
    while len(out) < n:
        attempts += 1
        if attempts > max_attempts:
            raise RuntimeError(
                f"could not draw {n} condition-satisfying instances "
                f"in {max_attempts} attempts (got {len(out)})"
            )
        inst = random_lemma2_instance(rng, d, hermitian=hermitian)
        if condition_flags(inst).both:
            out.append(inst)
    return out
