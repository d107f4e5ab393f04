import yaml
import pytest
from click.testing import CliRunner

from fedhenet.cli import main
from fedhenet.data import load_femb, load_plan


@pytest.fixture
def runner():
    return CliRunner()


def _write_config(path, fixtures_dir, **over):
    data = {
        "dataset": {
            "train": str(fixtures_dir / "blobs_train.femb"),
            "test": str(fixtures_dir / "blobs_test.femb"),
        },
        "clients": 2,
        "timeout": 30,
    }
    data.update(over)
    path.write_text(yaml.safe_dump(data))
    return path


def test_run_fedhenet(runner, tmp_path, fixtures_dir):
    cfg = _write_config(tmp_path / "cfg.yaml", fixtures_dir)
    result = runner.invoke(main, ["run", str(cfg), "-o", str(tmp_path / "out")])
    assert result.exit_code == 0, result.output
    assert "algorithm=fedhenet" in result.output
    assert (tmp_path / "out" / "report.txt").exists()
    assert (tmp_path / "out" / "curve.csv").exists()
    assert (tmp_path / "out" / "messages.log").exists()
    assert (tmp_path / "out" / "accuracy_vs_bytes.png").exists()


def test_run_fedavg(runner, tmp_path, fixtures_dir):
    cfg = _write_config(
        tmp_path / "cfg.yaml", fixtures_dir,
        algorithm="fedavg", baseline={"rounds": 2},
    )
    result = runner.invoke(main, ["run", str(cfg), "-o", str(tmp_path / "out")])
    assert result.exit_code == 0, result.output
    curve = (tmp_path / "out" / "curve.csv").read_text().strip().splitlines()
    assert len(curve) == 3  # header + one row per round


def test_keygen_then_he_run(runner, tmp_path, fixtures_dir):
    key_file = tmp_path / "keys.fhk"
    result = runner.invoke(
        main,
        ["keygen", "-o", str(key_file), "--profile", "desk", "--ring-degree", "512",
         "--dimension", "33"],
    )
    assert result.exit_code == 0, result.output
    assert key_file.exists() and "N=512" in result.output

    cfg = _write_config(
        tmp_path / "cfg.yaml", fixtures_dir,
        he={"enabled": True, "backend": "ckks", "key_file": str(key_file)},
    )
    result = runner.invoke(main, ["run", str(cfg), "-o", str(tmp_path / "out")])
    assert result.exit_code == 0, result.output
    report = (tmp_path / "out" / "report.txt").read_text()
    assert "he_enabled=True" in report
    assert "ciphertext_inflation_ratio=" in report
    assert "he_overhead_ms_per_client=" in report


def test_keygen_dimension_exceeds_slots(runner, tmp_path):
    result = runner.invoke(
        main,
        ["keygen", "-o", str(tmp_path / "k.fhk"), "--profile", "desk",
         "--ring-degree", "512", "--dimension", "1024"],
    )
    assert result.exit_code == 2
    assert "slots" in result.output


def test_report_subcommand(runner, tmp_path, fixtures_dir):
    cfg = _write_config(tmp_path / "cfg.yaml", fixtures_dir)
    out = tmp_path / "out"
    assert runner.invoke(main, ["run", str(cfg), "-o", str(out)]).exit_code == 0
    result = runner.invoke(main, ["report", str(out)])
    assert result.exit_code == 0, result.output
    assert "test_accuracy=" in result.output
    assert "messages_log_bytes=" in result.output


def test_report_on_empty_dir(runner, tmp_path):
    result = runner.invoke(main, ["report", str(tmp_path)])
    assert result.exit_code == 2


def test_partition_subcommand(runner, tmp_path, fixtures_dir):
    femb = fixtures_dir / "blobs_train.femb"
    out = tmp_path / "plan.tsv"
    result = runner.invoke(
        main,
        ["partition", str(femb), "--scheme", "dirichlet", "--clients", "4",
         "--alpha", "0.3", "--seed", "1", "-o", str(out)],
    )
    assert result.exit_code == 0, result.output
    ds = load_femb(femb)
    plan = load_plan(out, labels=ds.labels, n_classes=ds.n_classes)
    flat = sorted(i for a in plan.assignments for i in a)
    assert flat == list(range(ds.n_samples))


def test_bad_config_exit_2(runner, tmp_path):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("algorithm: fedsgd\n")
    result = runner.invoke(main, ["run", str(cfg)])
    assert result.exit_code == 2
    assert "error:" in result.output


def test_missing_config_exit_2(runner, tmp_path):
    result = runner.invoke(main, ["run", str(tmp_path / "nope.yaml")])
    assert result.exit_code == 2


def test_coordinator_rejects_loopback(runner, tmp_path, fixtures_dir):
    cfg = _write_config(tmp_path / "cfg.yaml", fixtures_dir)
    result = runner.invoke(main, ["coordinator", str(cfg)])
    assert result.exit_code == 2
    assert "mqtt://" in result.output


def test_client_rejects_loopback(runner, tmp_path, fixtures_dir):
    cfg = _write_config(tmp_path / "cfg.yaml", fixtures_dir)
    result = runner.invoke(main, ["client", str(cfg), "--id", "0"])
    assert result.exit_code == 2


def test_client_id_out_of_range(runner, tmp_path, fixtures_dir):
    cfg = _write_config(tmp_path / "cfg.yaml", fixtures_dir, transport="mqtt://broker:1883")
    result = runner.invoke(main, ["client", str(cfg), "--id", "5"])
    assert result.exit_code == 2


def test_mqtt_without_paho_exit_3(runner, tmp_path, fixtures_dir, monkeypatch):
    # force the lazy import inside connect() to fail even if paho is installed
    import builtins

    real_import = builtins.__import__

    def fake_import(name, *args, **kwargs):
        if name.startswith("paho"):
            raise ImportError("No module named 'paho'")
        return real_import(name, *args, **kwargs)

    monkeypatch.setattr(builtins, "__import__", fake_import)
    cfg = _write_config(
        tmp_path / "cfg.yaml", fixtures_dir, transport="mqtt://127.0.0.1:1883", timeout=2,
    )
    result = runner.invoke(main, ["coordinator", str(cfg)])
    assert result.exit_code == 3


def test_env_broker_override(runner, tmp_path, fixtures_dir, monkeypatch):
    monkeypatch.setenv("FEDHENET_BROKER_URL", "not-a-valid-url")
    cfg = _write_config(tmp_path / "cfg.yaml", fixtures_dir)
    result = runner.invoke(main, ["coordinator", str(cfg)])
    # the env override replaces loopback, and the bogus URL is rejected
    assert result.exit_code in (2, 3)
    assert result.exit_code != 0
