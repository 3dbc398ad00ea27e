import json

import pytest

from nemsim.cli import main

REFERENCE_SETUP = """\
device.preset = "large"
amp.vdc_V = 10
amp.fclk_hz = 100e3
stimulus.kind = dc
stimulus.amplitude_V = 10e-3
run.n_periods = 6
"""


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def read_json(path):
    return json.loads(path.read_text())


class TestDeviceReport:
    def test_large_passes_reference(self, tmp_path, capsys):
        code, out, err = run_cli(
            ["device-report", "--preset", "large", "--out-dir", str(tmp_path)], capsys)
        assert code == 0 and err == ""
        doc = read_json(tmp_path / "summary.json")
        assert doc["reference_pass"] is True
        assert abs(doc["max_gain"] - 39.0) < 1e-6

    def test_lv_low_gain(self, tmp_path, capsys):
        code, out, _ = run_cli(
            ["device-report", "--preset", "lv-low-gain", "--out-dir", str(tmp_path)], capsys)
        assert code == 0
        doc = read_json(tmp_path / "summary.json")
        assert abs(doc["max_gain"] - 20.0) < 1e-6
        assert doc["reference_pass"] is True

    def test_unknown_preset_is_config_error(self, tmp_path, capsys):
        code, _, err = run_cli(
            ["device-report", "--preset", "huge", "--out-dir", str(tmp_path)], capsys)
        assert code == 1
        assert json.loads(err)["error"]["kind"] == "config-error"
        assert list(tmp_path.iterdir()) == []

    def test_missing_device_section(self, tmp_path, capsys):
        code, _, err = run_cli(["device-report", "--out-dir", str(tmp_path)], capsys)
        assert code == 1 and "missing device section" in err


class TestAmplify:
    def test_reference_gain(self, tmp_path, capsys):
        cfg = tmp_path / "scenario.cfg"
        cfg.write_text(REFERENCE_SETUP)
        out_dir = tmp_path / "out"
        code, out, _ = run_cli(
            ["amplify", "--config", str(cfg), "--out-dir", str(out_dir)], capsys)
        assert code == 0
        doc = read_json(out_dir / "summary.json")
        assert abs(doc["gain_dc"] - 38.99) / 38.99 < 5e-3
        assert (out_dir / "waveforms.csv").read_text().startswith("t_s,phase,vA_V,vB_V")

    def test_islands_flag(self, tmp_path, capsys):
        cfg = tmp_path / "scenario.cfg"
        cfg.write_text(REFERENCE_SETUP)
        out_dir = tmp_path / "out"
        code, _, _ = run_cli(
            ["amplify", "--config", str(cfg), "--out-dir", str(out_dir), "--islands"],
            capsys)
        assert code == 0
        assert (out_dir / "islands.csv").read_text().startswith("t_s,island_id,q_C,v_V")

    def test_solver_error_leaves_no_files(self, tmp_path, capsys):
        cfg = tmp_path / "scenario.cfg"
        cfg.write_text('device.preset = "large"\namp.vdc_V = 12\n'
                       "stimulus.amplitude_V = 0.7\n")
        out_dir = tmp_path / "out"
        code, _, err = run_cli(
            ["amplify", "--config", str(cfg), "--out-dir", str(out_dir)], capsys)
        assert code == 2
        assert json.loads(err)["error"]["kind"] == "solver-error"
        assert not out_dir.exists()

    def test_parse_error_carries_line(self, tmp_path, capsys):
        cfg = tmp_path / "scenario.cfg"
        cfg.write_text('device.preset = "large"\namp.bogus = 1\n')
        code, _, err = run_cli(["amplify", "--config", str(cfg)], capsys)
        assert code == 1
        assert json.loads(err)["error"]["line"] == 2

    def test_config_and_preset_conflict(self, tmp_path, capsys):
        cfg = tmp_path / "scenario.cfg"
        cfg.write_text(REFERENCE_SETUP)
        code, _, _ = run_cli(
            ["amplify", "--config", str(cfg), "--preset", "large"], capsys)
        assert code == 1


class TestCvSweepCommand:
    def test_transitions(self, tmp_path, capsys):
        code, _, _ = run_cli(
            ["cv-sweep", "--preset", "large", "--out-dir", str(tmp_path),
             "--n-points", "1201"], capsys)
        assert code == 0
        doc = read_json(tmp_path / "summary.json")
        assert abs(doc["up_transition_V"] - 9.6) <= 0.011
        assert abs(doc["down_transition_V"] - 6.2) <= 0.011
        assert (tmp_path / "cv.csv").read_text().startswith("v_V,c_F,branch")


class TestTransientCommand:
    def test_step_pullin(self, tmp_path, capsys):
        code, _, _ = run_cli(
            ["transient", "--preset", "large", "--out-dir", str(tmp_path)], capsys)
        assert code == 0
        doc = read_json(tmp_path / "summary.json")
        assert doc["final_latched"] is True
        assert len(doc["contact_times_s"]) == 1
        assert (tmp_path / "transient.csv").read_text().startswith("t_s,x_m,v_mps,c_F,latched")


class TestGainSweepCommand:
    def test_small_sweep(self, tmp_path, capsys):
        code, _, _ = run_cli(
            ["gain-sweep", "--preset", "large", "--out-dir", str(tmp_path),
             "--n-points", "4"], capsys)
        assert code == 0
        doc = read_json(tmp_path / "summary.json")
        assert 0.06 <= doc["gain_drop_frac"] <= 0.09
        lines = (tmp_path / "gain_sweep.csv").read_text().strip().split("\n")
        assert lines[0] == "vin_V,vout_V,gain,x_m,released"
        assert len(lines) == 5

    def test_empty_amplitudes_config_error(self, tmp_path, capsys):
        code, _, err = run_cli(
            ["gain-sweep", "--preset", "large", "--out-dir", str(tmp_path),
             "--amplitudes", ""], capsys)
        assert code == 1
        assert json.loads(err)["error"]["kind"] == "config-error"
        assert list(tmp_path.iterdir()) == []

    def test_explicit_amplitudes(self, tmp_path, capsys):
        code, _, _ = run_cli(
            ["gain-sweep", "--preset", "large", "--out-dir", str(tmp_path),
             "--amplitudes", "1e-3,0.175"], capsys)
        assert code == 0
        doc = read_json(tmp_path / "summary.json")
        assert doc["n_amplitudes"] == 2


class TestPowerCommand:
    def test_reference_point(self, tmp_path, capsys):
        cfg = tmp_path / "scenario.cfg"
        cfg.write_text('device.preset = "large"\namp.topology = modified\namp.m = 10\n')
        code, _, _ = run_cli(
            ["power", "--config", str(cfg), "--out-dir", str(tmp_path)], capsys)
        assert code == 0
        doc = read_json(tmp_path / "summary.json")
        assert abs(doc["power_W"] - 6.3e-6) / 6.3e-6 < 2e-3  # C_on = 31.50 fF exactly


class TestDeterminism:
    @pytest.mark.parametrize("argv", [
        ["amplify"],
        ["cv-sweep", "--n-points", "301"],
        ["gain-sweep", "--n-points", "3"],
    ])
    def test_byte_identical_reruns(self, argv, tmp_path, capsys):
        outs = []
        for sub in ("one", "two"):
            out_dir = tmp_path / sub
            code, _, _ = run_cli(argv + ["--preset", "large", "--out-dir", str(out_dir)],
                                 capsys)
            assert code == 0
            outs.append({p.name: p.read_bytes() for p in sorted(out_dir.iterdir())})
        assert outs[0] == outs[1]


class TestIoError:
    def test_unwritable_out_dir(self, tmp_path, capsys):
        blocker = tmp_path / "blocker"
        blocker.write_text("a file, not a directory")
        out_dir = blocker / "sub"
        code, _, err = run_cli(
            ["power", "--preset", "large", "--out-dir", str(out_dir)], capsys)
        assert code == 3
        assert json.loads(err)["error"]["kind"] == "io-error"


class TestStdoutFormats:
    def test_csv_format(self, tmp_path, capsys):
        code, out, _ = run_cli(
            ["power", "--preset", "large", "--out-dir", str(tmp_path),
             "--format", "csv"], capsys)
        assert code == 0
        assert any(line.startswith("power_W,") for line in out.splitlines())

    def test_json_format(self, tmp_path, capsys):
        code, out, _ = run_cli(
            ["power", "--preset", "large", "--out-dir", str(tmp_path)], capsys)
        assert code == 0
        assert json.loads(out)["device"] == "large"
