import json
import os
import subprocess
import sys

import pytest

from recentering import cli
from recentering.experiments import ConfigError

HERE = os.path.dirname(__file__)
CONFIGS = os.path.join(HERE, os.pardir, "configs")

QM = """
experiment = "qm-equiv"
seed = 2
[parameters]
D = 40
dts = [0.0, 0.5]
n_labels = 3
label_scale = 0.5
hamiltonians = ["harmonic"]
"""


def _write(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_qm_run_writes_reports(tmp_path, capsys):
    cfg = _write(tmp_path, QM)
    out = tmp_path / "out"
    assert cli.main(["qm-equiv", "--config", cfg, "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["experiment"] == "qm-equiv" and summary["passed"] is True
    assert "wall_time" not in summary
    assert "wall_time" in json.loads((out / "timing.json").read_text())
    assert "PASS reduced_equals_propagator" in capsys.readouterr().out


def test_negative_Lambda_exits_2_naming_field(tmp_path, capsys):
    cfg = _write(tmp_path, QM.replace("[parameters]", "[parameters]\nLambda = -1.0"))
    assert cli.main(["qm-equiv", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "Lambda" in capsys.readouterr().err


def test_unknown_key_rejected(tmp_path, capsys):
    cfg = _write(tmp_path, QM.replace("[parameters]", "[parameters]\nlambada = 1.0"))
    assert cli.main(["qm-equiv", "--config", cfg]) == 2
    assert "parameters.lambada" in capsys.readouterr().err
    cfg = _write(tmp_path, "extra = 1\n" + QM, "d.toml")
    assert cli.main(["qm-equiv", "--config", cfg]) == 2


def test_subcommand_must_match_config(tmp_path):
    cfg = _write(tmp_path, QM)
    assert cli.main(["phi4", "--config", cfg]) == 2


def test_missing_and_malformed_config(tmp_path):
    assert cli.main(["qm-equiv", "--config", str(tmp_path / "nope.toml")]) == 2
    assert cli.main(["qm-equiv", "--config", _write(tmp_path, "experiment = [")]) == 2


def test_bad_jobs_and_seed(tmp_path):
    cfg = _write(tmp_path, QM)
    assert cli.main(["qm-equiv", "--config", cfg, "--jobs", "0"]) == 2
    assert cli.main(["qm-equiv", "--config", cfg, "--seed", "-1"]) == 2


def test_byte_identical_reruns(tmp_path):
    cfg = _write(tmp_path, QM)
    for d in ("a", "b"):
        assert cli.main(["qm-equiv", "--config", cfg, "--out", str(tmp_path / d)]) == 0
    for name in os.listdir(tmp_path / "a"):
        if name != "timing.json":
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_csv_summary_and_tables(tmp_path):
    cfg = _write(tmp_path, QM)
    out = tmp_path / "csv"
    assert cli.main(["qm-equiv", "--config", cfg, "--out", str(out), "--format", "csv"]) == 0
    lines = (out / "summary.csv").read_text().splitlines()
    assert lines[0] == "key,value" and "passed,True" in lines
    tables = [f for f in os.listdir(out) if f.endswith(".csv") and f != "summary.csv"]
    assert tables
    for t in tables:
        header = (out / t).read_text().splitlines()[0]
        assert header and "," in header


def test_failing_check_exits_1(tmp_path):
    text = open(os.path.join(CONFIGS, "incompatibility.toml")).read()
    cfg = _write(tmp_path, text.replace("N_list = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 15, 20, 25, 30, 35, 40, 45, 50]",
                                        "N_list = [1, 2, 5]").replace("threshold_N = 50", "threshold_N = 5"))
    assert cli.main(["free-field", "--config", cfg, "--out", str(tmp_path / "o")]) == 1


def test_jobs_do_not_change_results(tmp_path):
    cfg = _write(tmp_path, QM.replace('["harmonic"]', '["harmonic", "quartic"]'))
    a = cli.run_experiment(cli.load_config(cfg), jobs=1).summary()
    b = cli.run_experiment(cli.load_config(cfg), jobs=2).summary()
    assert a == b


def test_config_from_dict_validation():
    with pytest.raises(ConfigError):
        cli.ExperimentConfig.from_dict({"experiment": "nope"})
    with pytest.raises(ConfigError):
        cli.ExperimentConfig.from_dict({"experiment": "qm-equiv", "seed": 2 ** 64})
    with pytest.raises(ConfigError):
        cli.ExperimentConfig.from_dict({"experiment": "free-field", "parameters": {"task": "other"}})


def test_module_entry_point(tmp_path):
    cfg = _write(tmp_path, QM)
    r = subprocess.run([sys.executable, "-m", "recentering", "qm-equiv", "--config", cfg,
                        "--out", str(tmp_path / "m")], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr


TABLE_SCHEMAS = {
    "classical_equiv": {"equivalence": "profile,max_dev,constraint_drift,s_change"},
    "qm_equiv": {"equivalence": "hamiltonian,dt,max_dev"},
    "free_field": {"recovery": "M,deviation_retained,deviation_full,squeezed_deviation,max_D"},
    "incompatibility": {"diagnostics": "N,damped_overlap,time_kernel_modulus,recenter_deviation"},
    "phi4": {"kernel": "dt_index,j,k,re,im"},
    "ultralocal_functionals": {"admissibility": "sigma,admissibility_integral,total_mass,finite,expected_finite"},
    "superposition": {"superposition": "M,M_tilde,u,closed_form,mc_re,mc_im,mc_stderr,z,cd"},
    "model_field": {"model_field": "b,fitted_b,abs_error"},
}


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(TABLE_SCHEMAS))
def test_shipped_config_tables_and_json(name, tmp_path):
    bundle = cli.run_experiment(cli.load_config(os.path.join(CONFIGS, f"{name}.toml")))
    cli.emit_report(bundle, str(tmp_path), "json")
    for stem, header in TABLE_SCHEMAS[name].items():
        assert (tmp_path / f"{stem}.csv").read_text().splitlines()[0] == header
    text = (tmp_path / "summary.json").read_text()
    data = json.loads(text)
    assert data["checks"] == bundle.checks
    from recentering.reporting import dumps
    assert dumps(data) == text   # parse / re-encode round trip


def test_classical_identity_profile(tmp_path):
    cfg = _write(tmp_path, """
experiment = "classical-equiv"
[parameters]
t_end = 2.0
profiles = [{ c0 = 1.0 }]
""")
    b = cli.run_experiment(cli.load_config(cfg))
    assert b.passed and b.metrics["max_dev"] < 1e-9
