import json

import numpy as np
import pytest

from pulse_jcm import (
    ConfigValidationError,
    FieldStateSpec,
    StiffnessError,
    check_csv_schema,
    collapse_revival_experiment,
    fig4_subtraction,
    fig4_sweep,
    run_scenario,
    validate_config,
)
from pulse_jcm.cli import main as cli_main


def minimal_config(**overrides):
    raw = {
        "name": "t-run",
        "model": "jcm1",
        "pulse": {"shape": "gaussian", "tau": 1.0},
        "input": {"kind": "fock", "n": 1},
        "integrator": {"record_points": 101},
    }
    raw.update(overrides)
    return raw


class TestValidation:
    def test_minimal_config_resolves_defaults(self):
        cfg = validate_config(minimal_config())
        assert cfg.model == "jcm1"
        assert cfg.n_max_u == 1
        assert cfg.max_step == pytest.approx(1.0 / 50.0)
        assert cfg.pulse["t_end"] == pytest.approx(17.0)

    def test_unknown_model(self):
        with pytest.raises(ConfigValidationError) as err:
            validate_config(minimal_config(model="frob"))
        assert "model" in err.value.fields

    def test_unknown_keys_rejected_with_paths(self):
        raw = minimal_config()
        raw["pulse"]["wiggle"] = 1
        raw["integrator"]["steps"] = 5
        raw["bogus"] = True
        with pytest.raises(ConfigValidationError) as err:
            validate_config(raw)
        assert {"pulse.wiggle", "integrator.steps", "bogus"} <= set(err.value.fields)

    def test_oracle_model_needs_small_fock_input(self):
        raw = minimal_config(model="oracle", input={"kind": "coherent", "alpha": 1.0})
        with pytest.raises(ConfigValidationError):
            validate_config(raw)

    def test_negative_reflection_rejected(self):
        with pytest.raises(ConfigValidationError):
            validate_config(minimal_config(gamma_refl=-0.5))

    def test_truncation_defaults_track_input(self):
        cfg = validate_config(minimal_config(input={"kind": "coherent", "alpha": 2.0}))
        from scipy.stats import poisson

        assert poisson.sf(cfg.n_max_u, 4.0) < 1e-8

    def test_coherent_alpha_pair_form(self):
        cfg = validate_config(
            minimal_config(model="classical-drive", input={"kind": "coherent", "alpha": [1.0, 2.0]})
        )
        assert cfg.input["alpha"] == [1.0, 2.0]

    def test_config_hash_stable(self):
        a = validate_config(minimal_config()).config_hash()
        b = validate_config(minimal_config()).config_hash()
        assert a == b


class TestRunScenario:
    def test_deterministic_outputs(self, tmp_path):
        cfg = minimal_config()
        r1 = run_scenario(cfg, outdir=tmp_path / "a")
        r2 = run_scenario(cfg, outdir=tmp_path / "b")
        assert r1.csv_path.read_bytes() == r2.csv_path.read_bytes()
        assert (
            json.loads(r1.json_path.read_text())["config_hash"]
            == json.loads(r2.json_path.read_text())["config_hash"]
        )

    def test_csv_schema_and_precision(self, tmp_path):
        res = run_scenario(minimal_config(), outdir=tmp_path)
        cols = check_csv_schema(res.csv_path, required_columns=("t", "P_e", "n_u", "n_v", "trace"))
        # full double precision round trip
        assert cols["P_e"][-1] == res.trajectory["P_e"][-1]

    def test_summary_contents(self, tmp_path):
        res = run_scenario(minimal_config(), outdir=tmp_path)
        summary = json.loads(res.json_path.read_text())
        assert summary["config"]["model"] == "jcm1"
        assert summary["diagnostics"]["max_trace_deviation"] < 1e-8
        assert "config_hash" in summary and "code_version" in summary

    def test_pickup_reduced_state_emitted_for_three_component_models(self, tmp_path):
        raw = minimal_config(model="jcm2", input={"kind": "fock", "n": 1})
        res = run_scenario(raw, outdir=tmp_path)
        red = json.loads(res.json_path.read_text())["pickup_reduced_state"]
        assert red is not None
        diag = np.array(red["re"]).diagonal()
        assert diag.sum() == pytest.approx(1.0, abs=1e-8)

    def test_oracle_scenario(self, tmp_path):
        raw = {
            "name": "oracle-run",
            "model": "oracle",
            "pulse": {"shape": "gaussian", "tau": 0.2686},
            "input": {"kind": "fock", "n": 2},
            "oracle": {"bins": 700},
        }
        res = run_scenario(raw, outdir=tmp_path)
        summary = json.loads(res.json_path.read_text())
        assert summary["final"]["subtraction_fidelity"] > 0.95
        check_csv_schema(res.csv_path, required_columns=("t", "P_e"))


class TestCsvSchema:
    def test_missing_column(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("t,P_e\n0,0\n")
        with pytest.raises(ConfigValidationError) as err:
            check_csv_schema(path, required_columns=("t", "n_u"))
        assert "n_u" in err.value.fields

    def test_non_monotone_time(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("t,y\n0,0\n2,1\n1,2\n")
        with pytest.raises(ConfigValidationError):
            check_csv_schema(path)

    def test_non_finite_values(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("t,y\n0,nan\n")
        with pytest.raises(ConfigValidationError):
            check_csv_schema(path)


class TestSweep:
    def test_single_point_grid(self):
        res = fig4_sweep([0.2686], [0.0], bins=650)
        assert res.fidelity.shape == (1, 1)
        assert res.optima[0][0] == pytest.approx(0.2686)
        assert 0.98 <= res.fidelity[0, 0] <= 1.0

    def test_empty_grid_rejected(self):
        with pytest.raises(ConfigValidationError):
            fig4_sweep([], [0.0])

    def test_fidelities_bounded(self):
        res = fig4_sweep([0.22, 0.30], [0.0, 0.5], bins=650)
        assert np.all(res.fidelity >= 0.0) and np.all(res.fidelity <= 1.0)
        # reflection degrades the optimum
        assert res.optima[1][1] < res.optima[0][1]

    def test_no_coupling_gives_zero_fidelity(self):
        assert fig4_subtraction(0.2686, bins=650, gamma=0.0) < 1e-10


class TestCollapseRevival:
    def test_coherent_matches_classical_drive(self):
        res = collapse_revival_experiment(FieldStateSpec.fock(4), tau=1.0,
                                          record_points=301)
        assert res.coherent_vs_classical < 1e-5
        assert res.P_e_fock.max() > 0.1
        assert 0.0 <= res.revival_ceiling_fock <= 1.0


class TestCli:
    def test_validate_and_run(self, tmp_path, capsys):
        cfg_file = tmp_path / "c.yaml"
        cfg_file.write_text(
            "name: cli-run\nmodel: jcm1\npulse: {shape: gaussian, tau: 1.0}\n"
            "input: {kind: fock, n: 1}\nintegrator: {record_points: 51}\n"
        )
        assert cli_main(["validate", str(cfg_file)]) == 0
        assert cli_main(["run", str(cfg_file), "--outdir", str(tmp_path / "out")]) == 0
        assert (tmp_path / "out" / "cli-run.csv").exists()

    def test_invalid_config_exit_code(self, tmp_path):
        cfg_file = tmp_path / "bad.yaml"
        cfg_file.write_text("model: nonsense\n")
        assert cli_main(["validate", str(cfg_file)]) == 1

    def test_missing_file_exit_code(self, tmp_path):
        assert cli_main(["run", str(tmp_path / "nope.yaml")]) == 1

    def test_numerical_failure_exit_code(self, tmp_path, monkeypatch):
        import pulse_jcm.cli as cli_mod

        cfg_file = tmp_path / "c.yaml"
        cfg_file.write_text("model: jcm1\npulse: {shape: gaussian, tau: 1.0}\n")

        def boom(*args, **kwargs):
            raise StiffnessError("step size underflow at t=1.0", 1.0)

        monkeypatch.setattr(cli_mod, "run_scenario", boom)
        assert cli_main(["run", str(cfg_file)]) == 2
