"""
Command-line tests: subcommands and exit codes.
"""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from src.cli.main import EXIT_DATA, EXIT_IO, EXIT_OK, EXIT_USAGE, run
from src.color import read_ppm, rgb_to_yuv420, write_image, write_ppm
from src.utils.metrics import RDCurve, write_rd_csv
from tests.conftest import smooth_rgb


@pytest.fixture
def ppm_file(tmp_path):
    path = tmp_path / "in.ppm"
    write_ppm(path, smooth_rgb(1, 128, 128))
    return path


class TestUsage:
    """Argument handling"""

    def test_missing_subcommand(self):
        assert run([]) == EXIT_USAGE

    def test_unknown_option(self):
        assert run(["analyze", "--frobnicate"]) == EXIT_USAGE

    def test_help(self, capsys):
        assert run(["--help"]) == EXIT_OK
        assert "encode" in capsys.readouterr().out

    def test_unknown_preset(self):
        assert run(["analyze", "--preset", "cheng-2020"]) == EXIT_USAGE


class TestAnalyze:
    """Complexity report"""

    def test_stdout_report(self, capsys):
        assert run(["analyze", "--preset", "ccs-y8-uv8", "--width", "128", "--height", "128"]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.splitlines()[0] == "layer,role,component,macs,params"
        assert "KMAC/px" in out.splitlines()[-1]

    def test_csv_file(self, tmp_path, capsys):
        path = tmp_path / "macs.csv"
        assert run(["analyze", "--preset", "nc-y8-uv8", "--width", "128", "--height", "128", "--out", str(path)]) == 0
        assert path.read_text().startswith("layer,role,component,macs,params")
        assert capsys.readouterr().out.startswith("total")

    def test_bad_size(self):
        assert run(["analyze", "--width", "100"]) == EXIT_DATA


class TestCodecCommands:
    """encode and decode"""

    def test_ppm_round_trip(self, ppm_file, tmp_path, capsys):
        stream = tmp_path / "img.ccs"
        out = tmp_path / "out.ppm"
        assert run(["encode", "--input", str(ppm_file), "--out", str(stream), "--preset", "ccs-y8-uv8"]) == EXIT_OK
        assert "bpp=" in capsys.readouterr().out
        assert stream.read_bytes()[:4] == b"CCS1"
        assert run(["decode", "--input", str(stream), "--out", str(out)]) == EXIT_OK
        decoded = read_ppm(out)
        assert (decoded.width, decoded.height) == (128, 128)

    def test_i420_input(self, tmp_path):
        raw = tmp_path / "in.yuv"
        write_image(raw, rgb_to_yuv420(smooth_rgb(2, 128, 128)))
        stream = tmp_path / "img.ccs"
        argv = ["encode", "--input", str(raw), "--format", "i420", "--width", "128", "--height", "128",
                "--out", str(stream), "--preset", "nc-y8-uv8", "--workers", "2"]
        assert run(argv) == EXIT_OK
        out = tmp_path / "out.yuv"
        assert run(["decode", "--input", str(stream), "--out", str(out), "--format", "i420"]) == EXIT_OK
        assert out.stat().st_size == 128 * 128 * 3 // 2

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.ccs"
        path.write_bytes(b"XXXX" + bytes(40))
        assert run(["decode", "--input", str(path), "--out", str(tmp_path / "o.ppm")]) == EXIT_DATA

    def test_missing_input(self, tmp_path):
        assert run(["decode", "--input", str(tmp_path / "none.ccs"), "--out", str(tmp_path / "o.ppm")]) == EXIT_IO

    def test_bad_ppm(self, tmp_path):
        path = tmp_path / "bad.ppm"
        path.write_bytes(b"P3\n2 2\n255\n")
        assert run(["encode", "--input", str(path), "--out", str(tmp_path / "o.ccs"), "--preset", "ccs-y8-uv8"]) == EXIT_DATA

    def test_preset_mismatch(self, ppm_file, tmp_path):
        stream = tmp_path / "img.ccs"
        assert run(["encode", "--input", str(ppm_file), "--out", str(stream), "--preset", "ccs-y8-uv8"]) == EXIT_OK
        argv = ["decode", "--input", str(stream), "--out", str(tmp_path / "o.ppm"), "--preset", "nc-y8-uv8"]
        assert run(argv) == EXIT_USAGE

    def test_config_file(self, ppm_file, tmp_path):
        config = tmp_path / "codec.yaml"
        config.write_text("table_mode: scale_table\nworkers: 2\n")
        stream = tmp_path / "img.ccs"
        argv = ["encode", "--input", str(ppm_file), "--out", str(stream), "--preset", "ccs-y8-uv8",
                "--config", str(config)]
        assert run(argv) == EXIT_OK
        argv = ["decode", "--input", str(stream), "--out", str(tmp_path / "o.ppm"), "--config", str(config)]
        assert run(argv) == EXIT_OK


class TestMetricCommands:
    """psnr and bdrate"""

    def test_psnr_identical(self, ppm_file, capsys):
        assert run(["psnr", str(ppm_file), str(ppm_file)]) == EXIT_OK
        assert float(capsys.readouterr().out) == 99.0

    def test_psnr_size_mismatch(self, ppm_file, tmp_path):
        other = tmp_path / "small.ppm"
        write_ppm(other, smooth_rgb(1, 64, 64))
        assert run(["psnr", str(ppm_file), str(other)]) == EXIT_DATA

    def test_bdrate(self, tmp_path, capsys):
        anchor = RDCurve.from_arrays([0.12, 0.25, 0.5, 0.9], [27.1, 29.8, 32.6, 35.2])
        write_rd_csv(tmp_path / "a.csv", anchor)
        write_rd_csv(tmp_path / "t.csv", anchor.scaled(1.1))
        assert run(["bdrate", str(tmp_path / "a.csv"), str(tmp_path / "t.csv")]) == EXIT_OK
        assert float(capsys.readouterr().out) == pytest.approx(10.0, abs=0.01)


class TestTraining:
    """train-micro"""

    def test_writes_checkpoint_and_history(self, tmp_path, capsys):
        config = tmp_path / "micro.yaml"
        config.write_text("n_y: 4\nn_uv: 4\nbatch: 2\ndataset_size: 4\n")
        out = tmp_path / "ckpt"
        assert run(["train-micro", "--out", str(out), "--config", str(config), "--steps", "3", "--nc"]) == EXIT_OK
        lines = (out / "loss.csv").read_text().splitlines()
        assert lines[0] == "step,D,R_Y,R_UV,L" and len(lines) == 4
        assert (out / "prior_uv.bin").exists()
        assert capsys.readouterr().out.startswith("steps=3")

    def test_invalid_lambda(self, tmp_path):
        assert run(["train-micro", "--out", str(tmp_path), "--lambda", "0.3"]) == EXIT_USAGE


@pytest.mark.slow
def test_selftest(capsys):
    assert run(["selftest"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("ok") == 3
