import json
import os

import numpy as np
import pytest

import covflow.pipeline as P
from covflow.cli import main as cli_main

BASE = """
[grid]
dim = 2
n_points = 32
half_width = 6.0
[flow]
a = 0.0
b = 1.0
eps_reg = 1e-3
dt = 4e-4
t_end = 0.1
store_every = 25
[potential]
kind = zero
[initial]
kind = gaussian
rate = 2.0
[weights]
alpha = 3.0
beta = 3.0
[output]
directory = {out}
formats = both
"""


def _cfg(tmp_path, kind="zero", extra=""):
    text = BASE.format(out=str(tmp_path / "out"))
    text = text.replace("kind = zero", f"kind = {kind}", 1) + extra
    return text


def test_parse_defaults_and_round_trip(tmp_path):
    cfg = P.parse_config(_cfg(tmp_path))
    assert cfg.dim == 2 and cfg.n_points == 32
    again = P.parse_config(P.serialize_config(cfg))
    assert again == cfg
    assert P.config_hash(again) == P.config_hash(cfg)


def test_parse_errors_are_actionable(tmp_path):
    with pytest.raises(P.ConfigError, match="unknown config section"):
        P.parse_config("[nope]\nx = 1\n")
    with pytest.raises(P.ConfigError, match="unknown key"):
        P.parse_config("[grid]\nresolution = 3\n")
    with pytest.raises(P.ConfigError, match="n_points"):
        P.parse_config("[grid]\nn_points = many\n")
    with pytest.raises(P.ConfigError):
        P.parse_config(_cfg(tmp_path, kind="maxwell"))
    with pytest.raises(P.ConfigError):
        P.parse_config(_cfg(tmp_path).replace("eps_reg = 1e-3", "eps_reg = -1"))


def test_missing_config_file_names_path(tmp_path):
    with pytest.raises(P.ConfigError, match="no/such"):
        P.load_config(str(tmp_path / "no" / "such.cfg"))


def test_pipeline_zero_config_passes(tmp_path):
    report = P.run_pipeline(P.parse_config(_cfg(tmp_path)))
    assert report.passed
    anchors = [p.anchor for p in report.pairs]
    assert "initial_weight_monotone" in anchors
    assert "final_weight_heat_bound" in anchors
    assert "mass_growth_bound" in anchors
    assert "mass_lower_bound" in anchors
    assert all(p.passed for p in report.pairs)
    assert report.eps0 is not None


def test_pipeline_equal_unit_parameters_with_truncation():
    # the stated alpha = beta = 1 case: rate-one weights need the truncated
    # continuation to stay meaningful in floating point
    text = """
[grid]
dim = 2
n_points = 36
half_width = 4.5
[flow]
a = 0.0
b = 1.0
eps_reg = 1e-3
dt = 2e-4
t_end = 0.05
store_every = 10
[potential]
kind = zero
[initial]
kind = gaussian
rate = 2.0
[weights]
alpha = 1.0
beta = 1.0
trunc_radius = 3.7
"""
    report = P.run_pipeline(P.parse_config(text))
    assert report.passed
    for p in report.pairs:
        assert p.ratio <= 1.0 + 1e-6, (p.anchor, p.ratio)
    assert report.convexity.min_second_difference >= -1e-3


def test_pipeline_failure_names_stage(tmp_path):
    # an inadmissible monitor weight (huge box times rate ~1/alpha^2) must
    # surface as a failure of the monitors stage, not a bare module error
    text = _cfg(tmp_path).replace("half_width = 6.0", "half_width = 6.0")
    text = text.replace("alpha = 3.0", "alpha = 0.02").replace("beta = 3.0", "beta = 0.02")
    with pytest.raises(P.PipelineFailure) as err:
        P.run_pipeline(P.parse_config(text))
    assert err.value.stage in ("monitors", "regularize")


def test_pipeline_forcing_pairs_with_complex_v2(tmp_path):
    extra = "[scalar]\nv2_kind = gaussian\nv2_re = 0.1\nv2_im = -0.05\nv2_rate = 2.0\n"
    report = P.run_pipeline(P.parse_config(_cfg(tmp_path, extra=extra)))
    anchors = [p.anchor for p in report.pairs]
    assert "forcing_mass_bound" in anchors and "forcing_weight_bound" in anchors
    assert report.passed


def test_report_json_schema(tmp_path):
    cfg = P.parse_config(_cfg(tmp_path))
    report = P.run_pipeline(cfg)
    payload = json.loads(P.report_to_json(report))
    assert set(payload) >= {"config_hash", "stages", "pairs", "defects", "passed"}
    for pair in payload["pairs"]:
        assert set(pair) == {"anchor", "lhs", "rhs", "ratio", "pass"}
    stage_names = [s["name"] for s in payload["stages"]]
    assert stage_names[:2] == ["gauge", "regularize"]
    assert "transform" in stage_names and "monitors" in stage_names


def test_outputs_deterministic(tmp_path):
    cfg = P.parse_config(_cfg(tmp_path))
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    for out in (out1, out2):
        report = P.run_pipeline(cfg)
        P.write_outputs(cfg, report, str(out))
    for name in ("report.json", "monitors.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_trajectory_export(tmp_path):
    import covflow.evolve as E
    import covflow.grid as G

    g = G.GridSpec(2, 6.0, 32)
    u0 = G.SampledComplexField(g, np.exp(-2 * G.radius_squared(g)))
    traj = E.evolve(u0, E.PotentialSystem(g), E.FlowParams(0.0, 1.0, 4e-4, 0.02, store_every=10))
    P.write_trajectory(str(tmp_path), traj)
    manifest = (tmp_path / "snapshot_manifest.csv").read_text().strip().splitlines()
    assert manifest[0] == "index,time,norm,boundary_mass,file"
    assert len(manifest) == len(traj.times) + 1
    first = np.load(tmp_path / "snapshot_00000.npy")
    assert np.array_equal(first, traj.values[0])


# ---------------------------------------------------------------------------
# command-line interface


def _write_cfg(tmp_path, name="run.cfg", kind="zero", extra=""):
    path = tmp_path / name
    path.write_text(_cfg(tmp_path, kind=kind, extra=extra))
    return str(path)


def test_cli_pipeline_smoke(tmp_path, capsys):
    cfg = _write_cfg(tmp_path)
    out = str(tmp_path / "cli_out")
    assert cli_main(["pipeline", "--config", cfg, "--out", out, "--quiet"]) == 0
    assert os.path.exists(os.path.join(out, "report.json"))
    assert os.path.exists(os.path.join(out, "monitors.csv"))


def test_cli_missing_config_exit_one(tmp_path):
    assert cli_main(["pipeline", "--config", str(tmp_path / "ghost.cfg"), "--quiet"]) == 1


def test_cli_unknown_subcommand_exit_one(capsys):
    with pytest.raises(SystemExit) as exc:
        cli_main(["transmogrify", "--config", "x"])
    assert exc.value.code == 1


def test_cli_unknown_flag_exit_one(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli_main(["pipeline", "--config", str(tmp_path), "--bogus"])
    assert exc.value.code == 1


def test_cli_convexity_negative_control(tmp_path):
    cfg = _write_cfg(tmp_path)
    out = str(tmp_path / "conv_out")
    assert cli_main(["convexity", "--config", cfg, "--out", out, "--quiet"]) == 0
    # impossible tolerance forces the failure path
    assert cli_main(["convexity", "--config", cfg, "--out", out, "--quiet", "--tol", "-1.0"]) == 2


def test_cli_gauge_and_hypotheses(tmp_path):
    cfg = _write_cfg(tmp_path, kind="constant_field")
    out = str(tmp_path / "g_out")
    assert cli_main(["gauge", "--config", cfg, "--out", out, "--quiet"]) == 0
    assert cli_main(["hypotheses", "--config", cfg, "--out", out, "--quiet"]) == 0
    gauge = json.loads((tmp_path / "g_out" / "gauge.json").read_text())
    assert gauge["transversality_defect"] <= 1e-10
    hyp = json.loads((tmp_path / "g_out" / "hypotheses.json").read_text())
    assert hyp["sup_xtB"] > 0


def test_cli_evolve_exports(tmp_path):
    cfg = _write_cfg(tmp_path)
    out = str(tmp_path / "evo_out")
    assert cli_main(["evolve", "--config", cfg, "--out", out, "--quiet"]) == 0
    assert os.path.exists(os.path.join(out, "snapshot_manifest.csv"))


def test_cli_appell(tmp_path):
    cfg = _write_cfg(tmp_path)
    out = str(tmp_path / "ap_out")
    assert cli_main(["appell", "--config", cfg, "--out", out, "--quiet"]) == 0
    payload = json.loads((tmp_path / "ap_out" / "appell.json").read_text())
    assert all(p["relative_gap"] <= 1e-6 for p in payload["identities"])


def test_cli_carleman_with_seeded_suite(tmp_path):
    cfg = _write_cfg(
        tmp_path,
        extra="[carleman]\nenabled = true\nmu = 0.5\nr_big = 8.0\ncutoff_m = 2.5\nn_times = 201\n",
    )
    out1 = str(tmp_path / "c1")
    out2 = str(tmp_path / "c2")
    for out in (out1, out2):
        code = cli_main(
            ["carleman", "--config", cfg, "--out", out, "--quiet", "--seed", "7", "--n-random", "2"]
        )
        assert code == 0
    b1 = open(os.path.join(out1, "carleman.csv"), "rb").read()
    b2 = open(os.path.join(out2, "carleman.csv"), "rb").read()
    assert b1 == b2  # same config and seed give byte-identical output
