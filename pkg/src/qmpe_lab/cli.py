"""Command-line entry point.

    qmpe-lab <spectrum|evolve|optimal|mpemba|montecarlo|lemmas|figure3>
             --config <path> [--out <dir>] [--seed <u64>]

Every command validates the JSON configuration against the packaged schema
before computing, writes CSV/JSON results plus a RunManifest into the output
directory, and returns 0 on success, 1 on a scientific check failure, 2 on a
usage or configuration error. Result files are deterministic functions of
(config, seed); the manifest carries the only timestamps.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import jsonschema
import numpy as np

from . import __version__, config as cfgmod, lemmas, model, montecarlo, mpemba, spectral
from .config import ConfigError
from .thermometry import (
    FiniteTimeSensitivity,
    OptimalityViolation,
    ProbeState,
    roof_bound,
    verify_ground_optimality,
)

COMMANDS = ("spectrum", "evolve", "optimal", "mpemba", "montecarlo", "lemmas", "figure3")


def _fmt(x) -> str:
    """Full-precision scientific notation (17 significant digits)."""
    return f"{float(x):.16e}"


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            line = ",".join(row)
            if line.count(",") != len(header) - 1:
                raise ValueError(f"CSV field would corrupt column layout: {row!r}")
            fh.write(line + "\n")


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _trajectory_rows(trajectories):
    for traj in trajectories:
        for k in range(len(traj.times)):
            yield (
                _fmt(traj.times[k]),
                _fmt(traj.frobenius_dist[k]),
                _fmt(traj.trace_dist[k]),
                traj.label,
            )


def _build(cfg):
    probe = cfgmod.probe_from_config(cfg["model"])
    bath = cfgmod.bath_from_config(cfg["model"])
    return probe, bath


def _spectrum_csv(path: str, spec: spectral.SpectralData) -> None:
    rows = (
        (str(i), _fmt(t.lam.real), _fmt(t.lam.imag), t.subspace, _fmt(t.residual))
        for i, t in enumerate(spec.triples)
    )
    _write_csv(path, ("index", "re_lambda", "im_lambda", "subspace_tag", "residual"), rows)


def cmd_spectrum(cfg, out_dir, seed):
    probe, bath = _build(cfg)
    liou = model.build_liouvillian(probe, bath)
    spec = spectral.numerical_spectrum(liou)
    _spectrum_csv(os.path.join(out_dir, "spectrum.csv"), spec)
    outputs = ["spectrum.csv"]

    reference = spectral.analytic_spectrum_degenerate(
        model.ProbeSpec(probe.d, probe.gap), bath
    )
    deviation = spectral.eigenvalue_match_deviation(
        spec.eigenvalues, reference.eigenvalues
    )
    comparison = {
        "epsilon": probe.epsilon,
        "max_eigenvalue_deviation_from_degenerate_reference": deviation,
        "lambda_min_nonzero": spec.lambda_min_nonzero,
        "lambda_max": spec.lambda_max,
        "ground_excited_coherence_rate": spectral.coherence_rate_comparison(
            model.ProbeSpec(probe.d, probe.gap), bath
        ),
    }
    _write_json(os.path.join(out_dir, "spectrum_comparison.json"), comparison)
    outputs.append("spectrum_comparison.json")

    print(f"max eigenvalue deviation vs degenerate reference: {deviation:.3e}")
    if probe.epsilon == 0.0 and deviation > 1e-8:
        print("FAIL: deviation exceeds 1e-8 at zero detuning", file=sys.stderr)
        return 1, outputs
    return 0, outputs


def _initial_state(name: str, probe, bath, seed: int) -> ProbeState:
    d = probe.d
    if name == "ground":
        return ProbeState.ground(d)
    if name == "excited_uniform":
        return ProbeState.uniform_excited(d)
    if name == "uniform_all":
        return ProbeState.uniform_all(d)
    if name.startswith("basis:"):
        return ProbeState.basis(d, int(name.split(":", 1)[1]))
    if name.startswith("haar:"):
        i = int(name.split(":", 1)[1])
        return ProbeState.from_pure(
            montecarlo.haar_pure_state(d, seed, i), f"haar(seed={seed} i={i})"
        )
    if name.startswith("mixed:"):  # mixed:<alpha>:<index>
        _, alpha_str, idx_str = name.split(":", 2)
        tau = model.gibbs_state(probe, bath)
        return _reference_state(probe, tau, float(alpha_str), seed, int(idx_str))
    raise ConfigError(f"unknown state {name!r}", "evolve/state")


def cmd_evolve(cfg, out_dir, seed):
    probe, bath = _build(cfg)
    block = cfg["evolve"]
    liou = model.build_liouvillian(probe, bath)
    spec = spectral.numerical_spectrum(liou)
    t_max = block["t_max"] or 10.0 / spec.lambda_min_nonzero
    state = _initial_state(block["state"], probe, bath, seed)
    traj = mpemba.evolve_trajectory(liou, state, t_max, block["n_points"], spec)
    _write_csv(
        os.path.join(out_dir, "trajectory.csv"),
        ("t", "frobenius", "trace", "label"),
        _trajectory_rows([traj]),
    )
    print(
        f"evolved {state.label}: final frobenius distance "
        f"{traj.frobenius_dist[-1]:.3e} at t={traj.times[-1]:.4g}"
    )
    return 0, ["trajectory.csv"]


def cmd_optimal(cfg, out_dir, seed):
    probe, bath = _build(cfg)
    liou = model.build_liouvillian(probe, bath)
    roof = roof_bound(probe, bath)
    try:
        rows, summary = verify_ground_optimality(
            liou, cfg["optimal"]["n_samples"], seed
        )
    except OptimalityViolation as exc:
        _write_json(
            os.path.join(out_dir, "violation.json"),
            {
                "state_label": exc.state.label,
                "value": exc.value,
                "roof": exc.roof,
                "state_matrix_real": np.real(exc.state.matrix).tolist(),
                "state_matrix_imag": np.imag(exc.state.matrix).tolist(),
            },
        )
        print(f"FAIL: {exc}", file=sys.stderr)
        return 1, ["violation.json"]
    _write_csv(
        os.path.join(out_dir, "optimal.csv"),
        ("state_label", "seed", "value", "roof", "gap"),
        (
            (label, str(seed), _fmt(value), _fmt(roof), _fmt(roof - value))
            for label, value in rows
        ),
    )
    print(
        f"roof {summary['roof']:.9g}, ground {summary['ground_value']:.9g}, "
        f"max sampled {summary['max_sampled']:.9g}"
    )
    return 0, ["optimal.csv"]


def _reference_state(probe, tau, alpha, seed, i) -> ProbeState:
    sigma_vec = montecarlo.haar_pure_state(probe.d, seed, i)
    sigma = np.outer(sigma_vec, sigma_vec.conj())
    return ProbeState(
        (1.0 - alpha) * tau + alpha * sigma, f"mixed(alpha={alpha} seed={seed} i={i})"
    )


def cmd_mpemba(cfg, out_dir, seed):
    probe, bath = _build(cfg)
    block = cfg["mpemba"]
    liou = model.build_liouvillian(probe, bath)
    spec = spectral.numerical_spectrum(liou)
    t_max = block["t_max"] or 10.0 / spec.lambda_min_nonzero
    grid = np.concatenate(([0.0], np.geomspace(1e-4 * t_max, t_max, block["n_points"])))
    evolver = mpemba.TrajectoryEvolver(liou, grid, spec)

    star = evolver.evolve(ProbeState.ground(probe.d))
    trajectories = [star]
    verdicts = []
    for i in range(block["n_samples"]):
        ref = _reference_state(probe, evolver.tau, block["alpha"], seed, i)
        traj = evolver.evolve(ref)
        trajectories.append(traj)
        verdicts.append((i, mpemba.detect_exceeding(star, traj)))

    _write_csv(
        os.path.join(out_dir, "trajectories.csv"),
        ("t", "frobenius", "trace", "label"),
        _trajectory_rows(trajectories),
    )
    _write_csv(
        os.path.join(out_dir, "exceedance.csv"),
        ("seed", "exceeds", "t_prime", "method"),
        (
            (
                str(i),
                str(rep.exceeds).lower(),
                _fmt(rep.t_prime) if rep.t_prime is not None else "",
                rep.method,
            )
            for i, rep in verdicts
        ),
    )
    n_exc = sum(1 for _, rep in verdicts if rep.exceeds)
    print(f"ground state exceeds {n_exc}/{len(verdicts)} reference samples")
    return 0, ["trajectories.csv", "exceedance.csv"]


def cmd_montecarlo(cfg, out_dir, seed):
    probe, bath = _build(cfg)
    block = cfg["montecarlo"]
    mc = montecarlo.MCConfig(
        n_samples=block["n_samples"],
        alpha=block["alpha"],
        seed=seed,
        parallel_width=block["parallel_width"],
    )
    report = montecarlo.run_exceedance_experiment(
        probe, bath, mc, t_max=block["t_max"], n_points=block["n_points"]
    )
    payload = {
        "schema_version": 1,
        "command": "montecarlo",
        "artifact_version": __version__,
        "seed": seed,
        "config": cfg,
        "report": report.to_dict(),
    }
    jsonschema.validate(payload, cfgmod.load_schema("mc_report.schema.json"))
    _write_json(os.path.join(out_dir, "mc_report.json"), payload)
    lo, hi = report.wilson_ci95
    print(
        f"frequency {report.frequency:.4f} (CI95 [{lo:.4f}, {hi:.4f}]), "
        f"delta_bound {report.delta_bound:.4g}, "
        f"inconclusive {report.inconclusive_count}"
    )
    return 0, ["mc_report.json"]


def cmd_lemmas(cfg, out_dir, seed):
    probe, bath = _build(cfg)
    block = cfg["lemmas"]
    n = block["n_instances"]
    outputs = []
    counterexamples = []

    rows1 = []
    rng = montecarlo.substream(seed, 1)
    idx = 0
    for d in block["dims"]:
        for _ in range(n):
            a_mat, c_vec, b = lemmas.random_lemma1_instance(rng, d)
            res = lemmas.lemma1_check(a_mat, c_vec, b)
            rows1.append((str(idx), "true", "true", _fmt(res.lhs), _fmt(res.rhs),
                          str(res.holds).lower()))
            if not res.holds:
                counterexamples.append({"lemma": 1, "instance": idx, "d": d,
                                        "lhs": res.lhs, "rhs": res.rhs})
            idx += 1
    _write_csv(
        os.path.join(out_dir, "lemma1.csv"),
        ("instance_id", "cond1", "cond2", "lhs", "rhs", "holds"),
        rows1,
    )
    outputs.append("lemma1.csv")
    pass1 = sum(1 for r in rows1 if r[5] == "true")

    rows2 = []
    rng = montecarlo.substream(seed, 2)
    idx = 0
    for d in block["dims"]:
        half = n // 2
        for k, inst in enumerate(
            lemmas.condition_satisfying_instances(rng, d, half, hermitian=True)
            + lemmas.condition_satisfying_instances(rng, d, n - half, hermitian=False)
        ):
            res = lemmas.lemma2_check(inst)
            rows2.append(
                (str(idx), "true", "true", _fmt(res.lhs), _fmt(res.rhs),
                 str(res.holds).lower())
            )
            if not res.holds:
                counterexamples.append({"lemma": 2, "instance": idx, "d": d,
                                        "lhs": res.lhs, "rhs": res.rhs})
            idx += 1

    # informational gallery: the bound claims nothing when conditions fail
    gallery = []
    rng_gal = montecarlo.substream(seed, 4)
    for d in block["dims"]:
        for _ in range(20):
            inst = lemmas.condition_violating_instance(rng_gal, d)
            res = lemmas.lemma2_check(inst)
            if not res.flags.both and not res.holds:
                gallery.append(
                    (str(len(gallery)), str(res.flags.cond1).lower(),
                     str(res.flags.cond2).lower(), _fmt(res.lhs), _fmt(res.rhs),
                     "false")
                )
    _write_csv(
        os.path.join(out_dir, "lemma2.csv"),
        ("instance_id", "cond1", "cond2", "lhs", "rhs", "holds"),
        rows2,
    )
    outputs.append("lemma2.csv")
    _write_csv(
        os.path.join(out_dir, "lemma2_violation_gallery.csv"),
        ("instance_id", "cond1", "cond2", "lhs", "rhs", "holds"),
        gallery,
    )
    outputs.append("lemma2_violation_gallery.csv")
    pass2 = sum(1 for r in rows2 if r[5] == "true")

    rng = montecarlo.substream(seed, 3)
    cond_fail = 0
    for _ in range(block["n_conditions"]):
        psi = rng.standard_normal(probe.d - 1) + 1j * rng.standard_normal(probe.d - 1)
        psi /= np.linalg.norm(psi)
        flags = lemmas.thermometry_conditions_check(probe, bath, psi)
        if not all(flags.values()):
            cond_fail += 1
            counterexamples.append(
                {"lemma": "thermometry-conditions", "flags": flags,
                 "psi_real": psi.real.tolist(), "psi_imag": psi.imag.tolist()}
            )

    print(f"lemma1: {pass1}/{len(rows1)} pass")
    print(f"lemma2 (conditions satisfied): {pass2}/{len(rows2)} pass; "
          f"gallery of unconditional failures: {len(gallery)}")
    print(f"thermometry conditions: {block['n_conditions'] - cond_fail}/"
          f"{block['n_conditions']} all-true")
    if counterexamples:
        _write_json(os.path.join(out_dir, "counterexamples.json"),
                    {"counterexamples": counterexamples})
        outputs.append("counterexamples.json")
        print("FAIL: condition-satisfying violations found", file=sys.stderr)
        return 1, outputs
    return 0, outputs


GNUPLOT_SCRIPT = """\
# gnuplot reproduction script for the emitted CSVs
set datafile separator ','
set key outside
set terminal pngcairo size 1200,500
set output 'figure3.png'
set multiplot layout 1,2
set logscale y
set xlabel 't'
set ylabel 'trace distance to thermal state'
plot 'figure3_panel_a.csv' skip 1 \\
       using 1:(strcol(4) eq 'ground' ? $3 : 1/0) \\
       with points pt 7 ps 0.3 title 'ground', \\
     '' skip 1 using 1:(strcol(4) ne 'ground' ? $3 : 1/0) \\
       with points pt 1 ps 0.2 title 'random references'
unset logscale y
set xlabel 'fitted convergence rate'
set ylabel 'finite-time distinguishability'
plot 'figure3_panel_b.csv' skip 1 \\
       using 2:(strcol(1) eq 'ground' ? $3 : 1/0) \\
       with points pt 7 ps 1.0 title 'ground', \\
     '' skip 1 using 2:(strcol(1) ne 'ground' ? $3 : 1/0) \\
       with points pt 1 ps 0.5 title 'haar samples'
unset multiplot
"""


def cmd_figure3(cfg, out_dir, seed):
    probe, bath = _build(cfg)
    block = cfg["figure3"]
    liou = model.build_liouvillian(probe, bath)
    spec = spectral.numerical_spectrum(liou)
    grid = mpemba.default_time_grid(spec.lambda_min_nonzero)
    evolver = mpemba.TrajectoryEvolver(liou, grid, spec)

    # Panel (a): ground vs randomized references, trace-distance trajectories.
    star = evolver.evolve(ProbeState.ground(probe.d))
    trajectories = [star]
    verdicts = []
    for i in range(block["n_random"]):
        ref = _reference_state(probe, evolver.tau, block["alpha"], seed, i)
        traj = evolver.evolve(ref)
        trajectories.append(traj)
        verdicts.append((i, mpemba.detect_exceeding(star, traj)))
    _write_csv(
        os.path.join(out_dir, "figure3_panel_a.csv"),
        ("t", "frobenius", "trace", "label"),
        _trajectory_rows(trajectories),
    )
    _write_csv(
        os.path.join(out_dir, "figure3_panel_a_exceedance.csv"),
        ("seed", "exceeds", "t_prime", "method"),
        (
            (str(i), str(r.exceeds).lower(),
             _fmt(r.t_prime) if r.t_prime is not None else "", r.method)
            for i, r in verdicts
        ),
    )

    # Panel (b): fitted convergence rate vs finite-time distinguishability.
    sensitivity = FiniteTimeSensitivity(probe, bath, block["dt"], block["dbeta"])
    window = tuple(block["fit_window"])
    rows = []
    ground_val = sensitivity.value(ProbeState.ground(probe.d))
    rows.append(("ground", _fmt(mpemba.fit_convergence_rate(star, window)),
                 _fmt(ground_val)))
    max_random = -np.inf
    for i in range(block["n_scatter"]):
        psi = montecarlo.haar_pure_state(probe.d, seed, 10_000 + i)
        state = ProbeState.from_pure(psi, f"haar(seed={seed} i={i})")
        traj = evolver.evolve(state)
        rate_fit = mpemba.fit_convergence_rate(traj, window)
        value = sensitivity.value(state)
        max_random = max(max_random, value)
        rows.append((state.label, _fmt(rate_fit), _fmt(value)))
    _write_csv(
        os.path.join(out_dir, "figure3_panel_b.csv"),
        ("label", "rate", "distinguishability"),
        rows,
    )
    with open(os.path.join(out_dir, "figure3.gp"), "w", newline="\n") as fh:
        fh.write(GNUPLOT_SCRIPT)

    n_exc = sum(1 for _, r in verdicts if r.exceeds)
    print(f"panel a: ground exceeds {n_exc}/{len(verdicts)} references")
    print(f"panel b: ground distinguishability {ground_val:.6g}, "
          f"max over samples {max_random:.6g}")
    return 0, [
        "figure3_panel_a.csv",
        "figure3_panel_a_exceedance.csv",
        "figure3_panel_b.csv",
        "figure3.gp",
    ]


HANDLERS = {
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "optimal": cmd_optimal,
    "mpemba": cmd_mpemba,
    "montecarlo": cmd_montecarlo,
    "lemmas": cmd_lemmas,
    "figure3": cmd_figure3,
}


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed {value} is not a 64-bit unsigned int")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmpe-lab",
        description="Star-topology Davies generator workbench",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=_u64, default=None, help="override config seed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = cfgmod.load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    seed = args.seed if args.seed is not None else cfg["seed"]
    cfg["seed"] = seed
    out_dir = args.out or cfg.get("output_dir") or "qmpe-results"
    os.makedirs(out_dir, exist_ok=True)
    started = cfgmod.utc_now()
    try:
        code, outputs = HANDLERS[args.command](cfg, out_dir, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    cfgmod.write_manifest(out_dir, args.command, cfg, seed, outputs, started)
    print(f"wrote {len(outputs)} result file(s) + manifest to {out_dir}")
    return code


if __name__ == "__main__":
    sys.exit(main())
