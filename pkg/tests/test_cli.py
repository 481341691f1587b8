import json
import os

import jsonschema

from qmpe_lab import cli
from qmpe_lab.config import load_schema


def write_config(tmp_path, extra=None, model=None):
    cfg = {
        "schema_version": 1,
        "seed": 7,
        "model": model or {"d": 3, "gap": 1.0, "beta": 1.0, "gamma": 1.0},
    }
    cfg.update(extra or {})
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_spectrum_roundtrip(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = str(tmp_path / "run")
    assert cli.main(["spectrum", "--config", cfg, "--out", out]) == 0
    assert os.path.exists(os.path.join(out, "spectrum.csv"))
    manifest = json.loads(read(os.path.join(out, "manifest.json")))
    for name in manifest["outputs"]:
        assert os.path.exists(os.path.join(out, name))
    assert "max eigenvalue deviation" in capsys.readouterr().out
    header = read(os.path.join(out, "spectrum.csv")).decode().splitlines()[0]
    assert header == "index,re_lambda,im_lambda,subspace_tag,residual"


def test_missing_required_key_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({
        "schema_version": 1,
        "model": {"d": 3, "gap": 1.0, "gamma": 1.0},
    }))
    assert cli.main(["spectrum", "--config", str(path)]) == 2
    assert "beta" in capsys.readouterr().err


def test_unknown_key_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({
        "schema_version": 1,
        "model": {"d": 3, "gap": 1.0, "beta": 1.0, "gamma": 1.0},
        "mystery": True,
    }))
    assert cli.main(["spectrum", "--config", str(path)]) == 2
    assert "mystery" in capsys.readouterr().err


def test_zero_instances_is_usage_error(tmp_path, capsys):
    cfg = write_config(tmp_path, extra={"lemmas": {"n_instances": 0}})
    assert cli.main(["lemmas", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "n_instances" in capsys.readouterr().err


def test_evolve_and_optimal(tmp_path):
    cfg = write_config(
        tmp_path,
        extra={"evolve": {"state": "basis:1", "n_points": 40}, "optimal": {"n_samples": 10}},
    )
    out1 = str(tmp_path / "evolve")
    assert cli.main(["evolve", "--config", cfg, "--out", out1]) == 0
    lines = read(os.path.join(out1, "trajectory.csv")).decode().splitlines()
    assert lines[0] == "t,frobenius,trace,label"
    assert len(lines) == 42  # header + t=0 + 40 grid points

    out2 = str(tmp_path / "optimal")
    assert cli.main(["optimal", "--config", cfg, "--out", out2]) == 0
    head = read(os.path.join(out2, "optimal.csv")).decode().splitlines()[0]
    assert head == "state_label,seed,value,roof,gap"


def test_montecarlo_report_validates_against_published_schema(tmp_path):
    cfg = write_config(tmp_path, extra={"montecarlo": {"n_samples": 6, "n_points": 60}})
    out = str(tmp_path / "mc")
    assert cli.main(["montecarlo", "--config", cfg, "--out", out]) == 0
    payload = json.loads(read(os.path.join(out, "mc_report.json")))
    jsonschema.validate(payload, load_schema("mc_report.schema.json"))
    assert payload["report"]["n"] == 6


def test_montecarlo_rerun_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path, extra={"montecarlo": {"n_samples": 5, "n_points": 50}})
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert cli.main(["montecarlo", "--config", cfg, "--out", out1]) == 0
    assert cli.main(["montecarlo", "--config", cfg, "--out", out2]) == 0
    assert read(os.path.join(out1, "mc_report.json")) == read(
        os.path.join(out2, "mc_report.json")
    )


def test_montecarlo_parallel_width_does_not_change_bytes(tmp_path):
    cfg1 = write_config(
        tmp_path, extra={"montecarlo": {"n_samples": 5, "n_points": 50,
                                        "parallel_width": 1}}
    )
    out1 = str(tmp_path / "w1")
    assert cli.main(["montecarlo", "--config", cfg1, "--out", out1]) == 0
    cfg4 = tmp_path / "config4.json"
    base = json.loads(read(cfg1))
    base["montecarlo"]["parallel_width"] = 4
    cfg4.write_text(json.dumps(base))
    out4 = str(tmp_path / "w4")
    assert cli.main(["montecarlo", "--config", str(cfg4), "--out", out4]) == 0
    a = json.loads(read(os.path.join(out1, "mc_report.json")))
    b = json.loads(read(os.path.join(out4, "mc_report.json")))
    assert a["report"] == b["report"]


def test_seed_flag_overrides_config(tmp_path):
    cfg = write_config(tmp_path, extra={"montecarlo": {"n_samples": 4, "n_points": 50}})
    out1, out2 = str(tmp_path / "s1"), str(tmp_path / "s2")
    assert cli.main(["montecarlo", "--config", cfg, "--out", out1, "--seed", "99"]) == 0
    assert cli.main(["montecarlo", "--config", cfg, "--out", out2]) == 0
    a = json.loads(read(os.path.join(out1, "mc_report.json")))
    b = json.loads(read(os.path.join(out2, "mc_report.json")))
    assert a["seed"] == 99 and b["seed"] == 7
    assert a["report"]["mean_f"] != b["report"]["mean_f"]


def test_mpemba_command(tmp_path):
    cfg = write_config(tmp_path, extra={"mpemba": {"n_samples": 4, "n_points": 60}})
    out = str(tmp_path / "mp")
    assert cli.main(["mpemba", "--config", cfg, "--out", out]) == 0
    lines = read(os.path.join(out, "exceedance.csv")).decode().splitlines()
    assert lines[0] == "seed,exceeds,t_prime,method"
    assert len(lines) == 5


def test_figure3_small_run(tmp_path):
    cfg = write_config(
        tmp_path,
        model={"d": 4, "gap": 1.0, "beta": 1.0, "gamma": 1.0, "epsilon": 0.05},
        extra={"figure3": {"n_random": 3, "n_scatter": 6}},
    )
    out = str(tmp_path / "fig")
    assert cli.main(["figure3", "--config", cfg, "--out", out]) == 0
    for name in ("figure3_panel_a.csv", "figure3_panel_a_exceedance.csv",
                 "figure3_panel_b.csv", "figure3.gp"):
        assert os.path.exists(os.path.join(out, name))
    panel_b = read(os.path.join(out, "figure3_panel_b.csv")).decode().splitlines()
    assert panel_b[0] == "label,rate,distinguishability"
    ground = [row for row in panel_b[1:] if row.startswith("ground,")]
    assert len(ground) == 1
    values = {row.split(",")[0]: float(row.split(",")[2]) for row in panel_b[1:]}
    assert values["ground"] == max(values.values())


def test_lemmas_command_passes(tmp_path):
    cfg = write_config(
        tmp_path,
        extra={"lemmas": {"n_instances": 40, "dims": [2, 4], "n_conditions": 10}},
    )
    out = str(tmp_path / "lem")
    assert cli.main(["lemmas", "--config", cfg, "--out", out]) == 0
    lines = read(os.path.join(out, "lemma2.csv")).decode().splitlines()
    assert lines[0] == "instance_id,cond1,cond2,lhs,rhs,holds"
    assert all(line.endswith(",true") for line in lines[1:])


def test_manifest_written_atomically_and_lists_outputs(tmp_path):
    cfg = write_config(tmp_path)
    out = str(tmp_path / "m")
    assert cli.main(["spectrum", "--config", cfg, "--out", out]) == 0
    manifest = json.loads(read(os.path.join(out, "manifest.json")))
    assert manifest["schema_version"] == 1
    assert manifest["command"] == "spectrum"
    assert manifest["seed"] == 7
    assert sorted(manifest["outputs"]) == manifest["outputs"]
    assert not [p for p in os.listdir(out) if p.endswith(".tmp")]


def test_unknown_evolve_state_is_config_error(tmp_path, capsys):
    cfg = write_config(tmp_path, extra={"evolve": {"state": "cat"}})
    assert cli.main(["evolve", "--config", cfg, "--out", str(tmp_path / "x")]) == 2
    assert "cat" in capsys.readouterr().err


def test_shipped_reproduction_config_is_valid():
    here = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    from qmpe_lab.config import load_config

    cfg = load_config(os.path.join(here, "configs", "figure3.json"))
    assert cfg["model"]["d"] == 10
    assert cfg["model"]["epsilon"] == 0.05
    assert cfg["figure3"]["alpha"] == 0.2
    assert cfg["figure3"]["dt"] == 0.1
    assert cfg["montecarlo"]["n_samples"] == 100


def test_evolve_mixed_state(tmp_path):
    cfg = write_config(
        tmp_path, extra={"evolve": {"state": "mixed:0.2:0", "n_points": 30}}
    )
    out = str(tmp_path / "mx")
    assert cli.main(["evolve", "--config", cfg, "--out", out]) == 0
    body = read(os.path.join(out, "trajectory.csv")).decode()
    assert "mixed(alpha=0.2 seed=7 i=0)" in body
