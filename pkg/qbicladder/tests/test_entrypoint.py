import io
import logging

import orjson
import pandas as pd
import pytest
import yaml

from qbicladder.entrypoint import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, build_parser, load_config, main
from qbicladder.resources.testing import CANONICAL_LABELS, CANONICAL_STATES


def read_table(text: str) -> pd.DataFrame:
    return pd.read_csv(io.StringIO(text), comment="#")


def comment_lines(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        if line.startswith("# "):
            key, value = line[2:].split(": ", 1)
            out[key] = value
    return out


class TestSolve:
    def test_csv(self, capsys):
        assert main(["solve"]) == EXIT_OK
        frame = read_table(capsys.readouterr().out)
        assert list(frame["label"]) == CANONICAL_LABELS
        row = frame.set_index("label").loc["Q4"]
        assert row["re_e"] == pytest.approx(CANONICAL_STATES["Q4"][0].real, abs=1e-8)
        assert row["im_e"] == pytest.approx(CANONICAL_STATES["Q4"][0].imag, abs=1e-8)
        assert row["sheet"] == "II"
        assert row["kind"] == "resonant"

    def test_json(self, capsys):
        assert main(["solve", "--format", "json"]) == EXIT_OK
        payload = orjson.loads(capsys.readouterr().out)
        assert [r["label"] for r in payload["rows"]] == CANONICAL_LABELS
        assert payload["rows"][0]["sheet"] == "I"
        assert payload["report"] == {}

    def test_out_file(self, tmp_path, capsys):
        path = tmp_path / "spectrum.csv"
        assert main(["solve", "--out", str(path)]) == EXIT_OK
        assert capsys.readouterr().out == ""
        assert len(read_table(path.read_text())) == 12

    def test_uncoupled(self, capsys):
        assert main(["solve", "--g", "0"]) == EXIT_OK
        text = capsys.readouterr().out
        assert comment_lines(text) == {"g": "0"}
        frame = read_table(text)
        assert frame["multiplicity"].sum() == 12
        assert "E_d" in set(frame["nearest"])

    def test_config_file(self, tmp_path, capsys):
        path = tmp_path / "run.yaml"
        path.write_text(yaml.dump({"tp": 0.345, "g": 0.1, "ed": 0.3, "format": "json"}))
        assert main(["solve", "--config", str(path)]) == EXIT_OK
        assert orjson.loads(capsys.readouterr().out)["rows"][0]["label"] == "P1"

        # flags take precedence over the file
        assert main(["solve", "--config", str(path), "--format", "csv"]) == EXIT_OK
        assert read_table(capsys.readouterr().out)["label"][0] == "P1"

    def test_missing_config(self, tmp_path):
        assert main(["solve", "--config", str(tmp_path / "missing.yaml")]) == EXIT_USAGE

    def test_bad_parameters(self):
        assert main(["solve", "--th", "-1"]) == EXIT_USAGE

    def test_no_command(self):
        with pytest.raises(SystemExit):
            main([])


class TestLoadConfig:
    def test_flags(self):
        args = build_parser().parse_args(["solve", "--tp", "0.5", "--tol", "1e-10"])
        config = load_config(args)
        assert config.params.tp_h == 0.5
        assert config.params.g == 0.1
        assert config.tolerances.refine == 1e-10
        assert config.output_format.value == "csv"


class TestWavefunction:
    def test_profile(self, capsys):
        assert main(["wavefunction", "--state", "Q2", "--xmax", "10"]) == EXIT_OK
        text = capsys.readouterr().out
        meta = comment_lines(text)
        assert meta["state"] == "Q2"
        assert meta["normalization"] == "dot_unity"
        frame = read_table(text)
        assert list(frame["x"]) == list(range(-10, 11))
        assert (frame["abs_psi_leg1"] > 0).all()

    def test_large_xmax(self):
        assert main(["wavefunction", "--state", "Q2", "--xmax", "200000"]) == EXIT_USAGE

    def test_unknown_state(self, caplog):
        with caplog.at_level(logging.ERROR):
            assert main(["wavefunction", "--state", "Z9"]) == EXIT_USAGE
        assert "valid labels" in caplog.text


class TestSweep:
    def test_single_track(self, capsys):
        argv = ["sweep", "--param", "ed", "--from", "0.29", "--to", "0.31", "--steps", "3", "--state", "Q4"]
        assert main(argv) == EXIT_OK
        frame = read_table(capsys.readouterr().out)
        assert list(frame["param_value"]) == pytest.approx([0.29, 0.30, 0.31])
        assert set(frame["label"]) == {"Q4"}
        assert set(frame["sheet"]) == {"II"}

    def test_failure_exit_code(self, capsys):
        argv = ["sweep", "--param", "g", "--from", "0", "--to", "0.1", "--steps", "3"]
        assert main(argv) == EXIT_FAILURE
        frame = read_table(capsys.readouterr().out)
        # points solved before the failure are still written
        assert len(frame) == 24

    def test_bad_steps(self):
        argv = ["sweep", "--param", "ed", "--from", "0.2", "--to", "0.3", "--steps", "1"]
        assert main(argv) == EXIT_USAGE


class TestScaling:
    def test_real_state(self):
        assert main(["scaling", "--state", "P1", "--points", "5"]) == EXIT_USAGE

    def test_bad_points(self):
        assert main(["scaling", "--state", "Q2", "--points", "3"]) == EXIT_USAGE


class TestEvolve:
    def test_uncoupled(self, capsys):
        argv = ["evolve", "--g", "0", "--length", "20", "--tmax", "10"]
        assert main(argv) == EXIT_OK
        text = capsys.readouterr().out
        frame = read_table(text)
        assert len(frame) == 11
        assert frame["survival"].to_numpy() == pytest.approx(1.0, abs=1e-12)
        assert comment_lines(text) == {}

    def test_horizon_warning(self, caplog, capsys):
        with caplog.at_level(logging.WARNING):
            assert main(["evolve", "--length", "10", "--tmax", "30"]) == EXIT_OK
        assert "reflection horizon" in caplog.text

    def test_dot_reference(self, capsys):
        argv = ["evolve", "--length", "200", "--tmax", "100"]
        assert main(argv) == EXIT_OK
        report = comment_lines(capsys.readouterr().out)
        assert report["reference_state"] == "S1"
        assert 0.75 <= float(report["ratio"]) <= 1.25

    def test_bad_initial(self):
        assert main(["evolve", "--length", "10", "--tmax", "5", "--initial", "bath"]) == EXIT_USAGE
