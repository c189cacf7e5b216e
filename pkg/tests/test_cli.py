import json
import math

import numpy as np
import pytest

from homsim import cli


def run(args):
    return cli.main(args)


@pytest.fixture()
def dip_data_file(tmp_path):
    delays = np.round(np.arange(-150, 151) * 0.1, 10)
    w = 7.2 / (2 * math.sqrt(2 * math.log(2)))
    counts = 250.0 * (1 - 0.943 * np.exp(-(delays**2) / (2 * w**2)))
    p = tmp_path / "counts.csv"
    p.write_text("delay_ps,counts\n" + "\n".join(
        f"{d},{c}" for d, c in zip(delays, counts)))
    return p


class TestJsaCommand:
    def test_writes_grid_and_manifest(self, tmp_path):
        out = tmp_path / "grid.csv"
        assert run(["jsa", "--n", "9", "--span", "2", "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "nu_s,nu_i,re_q,im_q,abs2_q"
        assert len(lines) == 1 + 9 * 9
        man = json.loads((tmp_path / "grid.manifest.json").read_text())
        assert man["tool"] == "homsim"
        assert man["command"] == "jsa"
        assert man["grid"] == {"n_points": 9, "span_sigma0": 2.0}
        assert man["config"]["filter_shape"] == "gaussian"

    def test_n_controls_row_count(self, tmp_path):
        out = tmp_path / "g.csv"
        assert run(["jsa", "--n", "5", "--out", str(out)]) == 0
        assert len(out.read_text().strip().splitlines()) == 1 + 25

    def test_config_file_overridden_by_flag(self, tmp_path):
        cfgfile = tmp_path / "cfg.json"
        cfgfile.write_text(json.dumps({"pump_fwhm_nm": 0.4}))
        out = tmp_path / "g.csv"
        assert run(["jsa", "--config", str(cfgfile), "--pump-fwhm-nm", "0.8",
                    "--n", "5", "--out", str(out)]) == 0
        man = json.loads((tmp_path / "g.manifest.json").read_text())
        assert man["config"]["pump_fwhm_nm"] == 0.8

    def test_missing_config_exits_2(self, tmp_path):
        rc = run(["jsa", "--config", str(tmp_path / "nope.json"),
                  "--out", str(tmp_path / "g.csv")])
        assert rc == 2

    def test_unknown_config_field_exits_2(self, tmp_path):
        cfgfile = tmp_path / "cfg.json"
        cfgfile.write_text(json.dumps({"fiber_length": 300}))
        assert run(["jsa", "--config", str(cfgfile),
                    "--out", str(tmp_path / "g.csv")]) == 2

    def test_malformed_json_exits_2(self, tmp_path):
        cfgfile = tmp_path / "cfg.json"
        cfgfile.write_text("{not json")
        assert run(["jsa", "--config", str(cfgfile),
                    "--out", str(tmp_path / "g.csv")]) == 2


class TestDipCommand:
    def test_default_engine_curve(self, tmp_path, capsys):
        out = tmp_path / "curve.csv"
        assert run(["dip", "--delay-min", "-15", "--delay-max", "15",
                    "--delay-step", "0.5", "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "delay_ps,rate_normalized"
        assert len(lines) == 1 + 61
        metrics = json.loads(capsys.readouterr().out)
        assert metrics["visibility"] == pytest.approx(1.0, abs=1e-3)
        assert metrics["fwhm_ps"] == pytest.approx(6.4, abs=0.3)

    def test_manifest_records_engine_and_quadrature(self, tmp_path):
        out = tmp_path / "curve.csv"
        assert run(["dip", "--engine", "gaussian", "--delay-step", "1.0",
                    "--out", str(out)]) == 0
        man = json.loads((tmp_path / "curve.manifest.json").read_text())
        assert man["engine"] == "gaussian"
        assert "rel_tol" in man["quadrature"]
        assert man["supergaussian_calibration"] == "half-power-at-configured-fwhm"

    def test_threads_flag_does_not_change_output(self, tmp_path):
        out1 = tmp_path / "c1.csv"
        out4 = tmp_path / "c4.csv"
        common = ["dip", "--delay-min", "-8", "--delay-max", "8",
                  "--delay-step", "0.5"]
        assert run(common + ["--threads", "1", "--out", str(out1)]) == 0
        assert run(common + ["--threads", "4", "--out", str(out4)]) == 0
        assert out1.read_text() == out4.read_text()
        man = json.loads((tmp_path / "c4.manifest.json").read_text())
        assert man["threads"] == 4

    def test_filter_mismatch_degrades_visibility(self, tmp_path, capsys):
        out = tmp_path / "mis.csv"
        assert run(["dip", "--engine", "asymmetric", "--filter-mismatch", "0.2",
                    "--delay-step", "0.5", "--out", str(out)]) == 0
        metrics = json.loads(capsys.readouterr().out)
        assert metrics["visibility"] < 0.999

    def test_mismatch_requires_compatible_engine(self, tmp_path):
        assert run(["dip", "--engine", "gaussian", "--filter-mismatch", "0.2",
                    "--out", str(tmp_path / "x.csv")]) == 2

    def test_supergaussian_engine(self, tmp_path, capsys):
        out = tmp_path / "sg.csv"
        assert run(["dip", "--engine", "supergaussian",
                    "--filter-shape", "supergaussian4",
                    "--delay-step", "0.5", "--out", str(out)]) == 0
        metrics = json.loads(capsys.readouterr().out)
        assert metrics["fwhm_ps"] == pytest.approx(8.0, abs=0.5)

    def test_engine_config_mismatch_exits_2(self, tmp_path):
        # closed Gaussian engine with a quartic filter is a config error
        rc = run(["dip", "--engine", "gaussian", "--filter-shape",
                  "supergaussian4", "--out", str(tmp_path / "x.csv")])
        assert rc == 2


class TestFitCommand:
    def test_gaussian_dip_fit(self, tmp_path, dip_data_file, capsys):
        out = tmp_path / "fit.json"
        assert run(["fit", "--data", str(dip_data_file), "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["converged"]
        assert doc["params"]["visibility"] == pytest.approx(0.943, abs=1e-6)
        assert doc["params"]["fwhm_ps"] == pytest.approx(7.2, abs=1e-6)
        summary = json.loads(capsys.readouterr().out)
        assert summary["converged"] is True
        assert (tmp_path / "fit.manifest.json").exists()

    def test_missing_data_exits_1(self, tmp_path):
        assert run(["fit", "--data", str(tmp_path / "nope.csv"),
                    "--out", str(tmp_path / "f.json")]) == 1

    def test_corrupt_data_exits_2(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("\n".join(["0,1"] * 6 + ["6,oops"] + ["7,1", "8,1"]))
        assert run(["fit", "--data", str(bad),
                    "--out", str(tmp_path / "f.json")]) == 2

    def test_too_few_points_exits_2(self, tmp_path):
        small = tmp_path / "small.csv"
        small.write_text("\n".join(f"{i},1" for i in range(4)))
        assert run(["fit", "--data", str(small),
                    "--out", str(tmp_path / "f.json")]) == 2

    def test_model_mode(self, tmp_path, dip_data_file):
        out = tmp_path / "fit.json"
        assert run(["fit", "--data", str(dip_data_file), "--mode", "model",
                    "--engine", "gaussian", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["converged"]
        assert 0.9 < doc["params"]["scale"] < 1.0


class TestOverlapCommand:
    # without --out the manifest lands in the working directory, so run
    # these from a scratch dir
    @pytest.fixture(autouse=True)
    def _scratch_cwd(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)

    def test_solve_for_angle(self, capsys):
        assert run(["overlap", "--target", "0.943",
                    "--d-mm", "5", "--lambda-nm", "1550"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["theta_urad"] == pytest.approx(47.69, abs=0.05)
        assert doc["achieved_overlap"] == pytest.approx(0.943, abs=1e-9)

    def test_forward_evaluation(self, capsys):
        assert run(["overlap", "--theta-urad", "0",
                    "--d-mm", "5", "--lambda-nm", "1550"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["overlap"] == 1.0

    def test_requires_one_of_target_or_angle(self):
        assert run(["overlap", "--d-mm", "5", "--lambda-nm", "1550"]) == 2

    def test_out_of_range_target_exits_2(self):
        assert run(["overlap", "--target", "1.5"]) == 2

    def test_writes_json_output(self, tmp_path):
        out = tmp_path / "overlap.json"
        assert run(["overlap", "--target", "0.5", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert 0 < doc["theta_rad"] < 1e-3
        assert (tmp_path / "overlap.manifest.json").exists()


def test_threads_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("HOMSIM_THREADS", "3")
    out = tmp_path / "g.csv"
    assert run(["jsa", "--n", "5", "--out", str(out)]) == 0
    man = json.loads((tmp_path / "g.manifest.json").read_text())
    assert man["threads"] == 3


def test_bad_threads_env_exits_2(tmp_path, monkeypatch):
    monkeypatch.setenv("HOMSIM_THREADS", "many")
    assert run(["jsa", "--n", "5", "--out", str(tmp_path / "g.csv")]) == 2
