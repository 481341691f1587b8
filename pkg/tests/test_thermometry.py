import numpy as np
import pytest

from qmpe_lab import linalg, model, thermometry
from qmpe_lab.thermometry import ProbeState
from conftest import random_density


def test_probe_state_validation():
    with pytest.raises(ValueError):
        ProbeState(np.array([[0.5, 0.1], [0.2, 0.5]]))  # not Hermitian
    with pytest.raises(ValueError):
        ProbeState(np.eye(2))  # trace 2
    with pytest.raises(ValueError):
        ProbeState(np.diag([1.5, -0.5]))  # negative eigenvalue
    s = ProbeState.ground(4)
    assert s.dim == 4 and s.label == "ground"
    assert ProbeState.uniform_excited(3).matrix[0, 0] == 0.0


def test_ground_state_value_d3(liou3):
    value = thermometry.local_distinguishability(liou3, ProbeState.ground(3))
    assert value == pytest.approx(3.6826946, abs=1e-6)
    # equals 4 e / (e-1)^2 exactly
    assert value == pytest.approx(4 * np.e / (np.e - 1.0) ** 2, rel=1e-12)


def test_distinguishability_finite_difference_oracle(bath):
    # independent route: trace norm of (L_{beta+h} - L_{beta-h})[rho] / 2h
    probe = model.ProbeSpec(2, 1.0)
    liou = model.build_liouvillian(probe, bath)
    tau = model.gibbs_state(probe, bath)
    state = ProbeState(tau, "gibbs")
    h = 1e-4
    plus = model.build_liouvillian(probe, bath.with_beta(1.0 + h)).matrix
    minus = model.build_liouvillian(probe, bath.with_beta(1.0 - h)).matrix
    fd = linalg.trace_norm(linalg.apply_super((plus - minus) / (2 * h), tau))
    got = thermometry.local_distinguishability(liou, state)
    assert got == pytest.approx(fd, rel=1e-6)


def test_distinguishability_norm_axiom(liou3):
    rng = np.random.default_rng(20)
    for _ in range(5):
        state = ProbeState(random_density(rng, 3), "random")
        value = thermometry.local_distinguishability(liou3, state)
        image = linalg.apply_super(liou3.beta_derivative, state.matrix)
        assert value >= 0.0
        assert (value == 0.0) == (np.abs(image).max() == 0.0)


def test_roof_bound_values(probe3, bath):
    assert thermometry.roof_bound(probe3, bath) == pytest.approx(3.6826946, abs=1e-6)
    assert thermometry.roof_bound(model.ProbeSpec(2, 1.0), bath) == pytest.approx(
        1.8413473, abs=1e-6
    )
    double = model.BathSpec(beta=1.0, gamma=2.0)
    assert thermometry.roof_bound(probe3, double) == pytest.approx(
        2 * thermometry.roof_bound(probe3, bath), rel=1e-12
    )


def test_roof_dominates_random_states(bath):
    rng = np.random.default_rng(21)
    for d in (2, 4, 7):
        probe = model.ProbeSpec.with_ramp(d, 1.0, 0.05)
        liou = model.build_liouvillian(probe, bath)
        roof = thermometry.roof_bound(probe, bath)
        for _ in range(50):
            state = ProbeState(random_density(rng, d), "random")
            assert thermometry.local_distinguishability(liou, state) <= roof + 1e-9


def test_block_decomposition_matches_direct_evaluation(bath):
    # Eq-(8)-style assembly must reproduce d_beta L [rho] entrywise.
    probe = model.ProbeSpec.with_ramp(5, 1.0, 0.05)
    liou = model.build_liouvillian(probe, bath)
    rng = np.random.default_rng(22)
    for _ in range(10):
        eta = float(rng.uniform())
        psi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        psi /= np.linalg.norm(psi)
        full = np.concatenate(([np.sqrt(eta)], np.sqrt(1 - eta) * psi))
        rho = np.outer(full, full.conj())
        direct = linalg.apply_super(liou.beta_derivative, rho)
        blocks = thermometry.eq_blocks(probe, bath, psi)
        # assembled matrix uses basis order (ground, excited...)
        assembled = thermometry.assemble_blocks(blocks, eta)
        assert np.abs(direct - assembled).max() <= 1e-10


def test_block_entries_match_closed_forms(probe3, bath):
    # psi = (1, 0): a = g1*dn1, b = -(g1*dn1 + g2*dn2)
    blocks = thermometry.eq_blocks(probe3, bath, np.array([1.0, 0.0]))
    s = [model.rate_beta_derivative(bath, w) for w in probe3.level_energies[1:]]
    assert blocks.a == pytest.approx(s[0], rel=1e-12)
    assert blocks.b == pytest.approx(-(s[0] + s[1]), rel=1e-12)
    assert linalg.trace_norm(blocks.B) == pytest.approx(abs(s[0]) + abs(s[1]), rel=1e-12)


def test_convexity_of_distinguishability(liou3):
    rng = np.random.default_rng(23)
    for _ in range(10):
        r1, r2 = random_density(rng, 3), random_density(rng, 3)
        lam = float(rng.uniform())
        mix = ProbeState(lam * r1 + (1 - lam) * r2, "mix")
        v_mix = thermometry.local_distinguishability(liou3, mix)
        v1 = thermometry.local_distinguishability(liou3, ProbeState(r1, "r1"))
        v2 = thermometry.local_distinguishability(liou3, ProbeState(r2, "r2"))
        assert v_mix <= lam * v1 + (1 - lam) * v2 + 1e-9


def test_verify_ground_optimality(liou3):
    rows, summary = thermometry.verify_ground_optimality(liou3, 50, seed=5)
    assert summary["ground_value"] == pytest.approx(summary["roof"], abs=1e-9)
    assert summary["max_sampled"] <= summary["roof"] + 1e-9
    labels = [label for label, _ in rows]
    assert "ground" in labels and "excited_uniform" in labels and "basis(1)" in labels


def test_ground_optimality_large_sample_d10(bath):
    probe = model.ProbeSpec.with_ramp(10, 1.0, 0.05)
    liou = model.build_liouvillian(probe, bath)
    _, summary = thermometry.verify_ground_optimality(liou, 1000, seed=6)
    assert summary["max_sampled"] <= summary["roof"] + 1e-9
    assert summary["ground_value"] == pytest.approx(summary["roof"], abs=1e-9)


def test_excited_basis_state_strictly_below_roof(liou3):
    value = thermometry.local_distinguishability(liou3, ProbeState.basis(3, 1))
    roof = thermometry.roof_bound(liou3.probe, liou3.bath)
    assert value < roof - 1e-3  # strict gap, not a saturation case


def test_saturation_unique_among_basis_states(bath):
    # only the ground state reaches the roof; every excited projector sits a
    # macroscopic distance below it
    for d in (3, 5, 8):
        probe = model.ProbeSpec.with_ramp(d, 1.0, 0.05)
        liou = model.build_liouvillian(probe, bath)
        roof = thermometry.roof_bound(probe, bath)
        ground = thermometry.local_distinguishability(liou, ProbeState.ground(d))
        assert abs(ground - roof) <= 1e-9
        for j in range(1, d):
            value = thermometry.local_distinguishability(liou, ProbeState.basis(d, j))
            assert value < roof - 1e-3


def test_distinguishability_report_fields(liou3):
    rep = thermometry.distinguishability_report(liou3, ProbeState.uniform_excited(3))
    assert rep.gap_to_roof == pytest.approx(rep.roof - rep.value, rel=1e-12)
    assert rep.value <= rep.roof + 1e-9
    assert rep.blocks is not None  # pure state with excited support
    rng = np.random.default_rng(24)
    mixed = thermometry.distinguishability_report(
        liou3, ProbeState(random_density(rng, 3), "mixed")
    )
    assert mixed.blocks is None


def test_finite_time_zero_interval(probe3, bath):
    assert thermometry.finite_time_distinguishability(
        probe3, bath, ProbeState.ground(3), dt=0.0
    ) == 0.0


def test_finite_time_short_interval_slope(probe3, bath):
    # value/dt converges to the instantaneous sensitivity as dt -> 0
    liou = model.build_liouvillian(probe3, bath)
    state = ProbeState.ground(3)
    dt = 1e-3
    value = thermometry.finite_time_distinguishability(probe3, bath, state, dt)
    instant = thermometry.local_distinguishability(liou, state)
    assert value / dt == pytest.approx(instant, rel=1e-2)


def test_finite_time_warns_on_roundoff_dominated_step(probe3, bath):
    with pytest.warns(RuntimeWarning):
        thermometry.finite_time_distinguishability(
            probe3, bath, ProbeState.ground(3), dt=0.1, dbeta=1e-15
        )


def test_finite_time_ground_beats_haar_samples(bath):
    from qmpe_lab.montecarlo import haar_pure_state

    probe = model.ProbeSpec.with_ramp(10, 1.0, 0.05)
    sens = thermometry.FiniteTimeSensitivity(probe, bath, dt=0.1)
    ground = sens.value(ProbeState.ground(10))
    for i in range(25):
        psi = haar_pure_state(10, 99, i)
        assert sens.value(ProbeState.from_pure(psi, "haar")) < ground
