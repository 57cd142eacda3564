import json

import pytest

from tunneltime.cli import (
    DEFAULTS,
    EXIT_OK,
    EXIT_PHYSICS,
    EXIT_USAGE,
    ConfigError,
    ScenarioConfig,
    main,
    run_scenario,
)

EXPECTED_FILES = {
    "fig1": ["free_pulse.csv", "tunnel_pulse.csv", "semiclassical_pulse.csv", "convolution_pulse.csv",
             "eta_free.csv", "eta_tunnel.csv"],
    "eta-scan": ["eta_numeric.csv", "eta_semiclassical.csv"],
    "sumrule": ["sumrule.csv"],
    "causality": ["tunnel_pulse.csv"],
    "weakdemo": ["pointer_state.csv"],
    "free-check": ["free_pulse.csv", "convolution_pulse.csv"],
}


def output_bytes(directory):
    return {path.name: path.read_bytes() for path in sorted(directory.iterdir())}


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    results = {}
    for scenario in DEFAULTS:
        out = tmp_path_factory.mktemp(scenario)
        assert main(["--scenario", scenario, "--out", str(out), "--quiet"]) == EXIT_OK
        results[scenario] = out
    return results


@pytest.mark.parametrize("scenario", sorted(EXPECTED_FILES))
def test_scenario_writes_tagged_files(runs, scenario):
    out = runs[scenario]
    config = ScenarioConfig.resolve(scenario)
    digest = config.digest()
    for name in EXPECTED_FILES[scenario] + ["summary.json", "manifest.json"]:
        assert (out / name).exists(), name
    for name in EXPECTED_FILES[scenario]:
        lines = (out / name).read_text().splitlines()
        assert lines[0] == f"# config_sha256={digest}"
        if scenario != "sumrule":
            assert lines[1].split(",")[1:] == ["re", "im", "abs"]
            assert lines[1].split(",")[0] in {"z_over_b", "tau_over_tauc", "tau"}
            assert len(lines) > 3
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config_sha256"] == digest
    assert manifest["parameters"] == config.parameters
    assert json.loads((out / "summary.json").read_text())["config_sha256"] == digest


def test_csv_values_carry_seventeen_digits(runs):
    row = (runs["fig1"] / "tunnel_pulse.csv").read_text().splitlines()[2 + 499]
    for text in row.split(","):
        float(text)
    assert float(row.split(",")[0]) == pytest.approx(-1.0 + 499 * 8.0 / 1600)


def test_fig1_default_parameters():
    p = DEFAULTS["fig1"]
    assert (p["eps0_tauc"], p["eps_p_tauc"], p["V_tauc"]) == (6000.0, 6007.5, 15.0)
    assert (p["dz_over_b"], p["z0_over_b"], p["t_over_tauc"]) == (0.55, 2.5, 100.0)


def test_fig1_summary(runs):
    summary = json.loads((runs["fig1"] / "summary.json").read_text())
    assert 0.8 < summary["advancement_over_b"] < 1.3
    assert summary["tau_V_over_tauc"]["im"] == pytest.approx(-19.98, abs=5e-3)
    assert summary["log_abs_T"] == pytest.approx(-299.21, abs=5e-3)


def test_sumrule_summary_passes(runs):
    summary = json.loads((runs["sumrule"] / "summary.json").read_text())
    assert summary["passed"] is True
    assert summary["max_residual"] < 1e-3
    assert set(summary["residuals"]) == {"kappa_b=5", "kappa_b=10", "kappa_b=20", "free"}


def test_weakdemo_summary(runs):
    summary = json.loads((runs["weakdemo"] / "summary.json").read_text())
    assert summary["weak_value"]["re"] == pytest.approx(5.0)
    assert "alpha_fit" in summary and "fit_residual" in summary


def test_causality_summary(runs):
    summary = json.loads((runs["causality"] / "summary.json").read_text())
    assert summary["leakage_ratio"] < 1e-4


@pytest.mark.parametrize("scenario", ["fig1", "sumrule", "weakdemo"])
def test_rerun_is_byte_identical(runs, tmp_path, scenario):
    assert main(["--scenario", scenario, "--out", str(tmp_path), "--quiet"]) == EXIT_OK
    assert output_bytes(tmp_path) == output_bytes(runs[scenario])


def test_set_override_changes_digest(tmp_path):
    assert main(["--scenario", "weakdemo", "--out", str(tmp_path), "--set", "alpha=7", "--quiet"]) == EXIT_OK
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["parameters"]["alpha"] == 7
    assert manifest["config_sha256"] != ScenarioConfig.resolve("weakdemo").digest()


def test_config_file_with_set_override(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"scenario": "weakdemo", "alpha": 3.0, "pointer_width": 30.0}))
    out = tmp_path / "out"
    assert main(["--config", str(config), "--set", "alpha=4", "--out", str(out), "--quiet"]) == EXIT_OK
    params = json.loads((out / "manifest.json").read_text())["parameters"]
    assert params["alpha"] == 4 and params["pointer_width"] == 30.0


@pytest.mark.parametrize(
    "argv",
    [
        ["--scenario", "weakdemo", "--set", "no_such_key=1"],
        ["--scenario", "weakdemo", "--set", "alpha"],
        ["--scenario", "fig1", "--set", "dz_over_b=-1"],
        ["--scenario", "fig1", "--set", "z_count=2.5"],
        ["--config", "/nonexistent/run.json"],
        [],
    ],
)
def test_invalid_configuration_exits_with_usage_status(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path), "--quiet"]) == EXIT_USAGE


def test_resolve_rejects_unknown_scenario():
    with pytest.raises(ConfigError):
        ScenarioConfig.resolve("fig2")


@pytest.mark.parametrize(
    "scenario, setting",
    [("eta-scan", "kappa_b=60"), ("fig1", "z0_over_b=0.2"), ("causality", "z_max=30")],
)
def test_physics_failure_exits_with_physics_status(tmp_path, capsys, scenario, setting):
    assert main(["--scenario", scenario, "--set", setting, "--out", str(tmp_path), "--quiet"]) == EXIT_PHYSICS
    assert scenario in capsys.readouterr().err


def test_run_scenario_returns_summary(tmp_path):
    summary = run_scenario(ScenarioConfig.resolve("weakdemo"), tmp_path)
    assert summary == json.loads((tmp_path / "summary.json").read_text())
