import json

import numpy as np
import pytest
from PIL import Image

from diffbg.cli import build_config, build_parser, main
from diffbg.errors import ShapeError
from diffbg.evaluation import format_report, parse_report, run_comparison, score_sequence
from diffbg.sequence_io import SequenceManifest, load_masks, load_sequence, save_masks, save_sequence


def run(*argv):
    return main([str(a) for a in argv])


def mean_record(text):
    return [r for r in parse_report(text) if r.get("frame") == "mean"]


class TestReport:
    def test_format_and_parse(self):
        truth = np.zeros((3, 4, 4), bool)
        truth[:, 1, 1] = True
        pred = truth.copy()
        pred[2] = False
        score = score_sequence(pred, truth)
        records = parse_report(format_report(score, method="x"))
        assert len(records) == 4
        assert records[0] == {"method": "x", "frame": "0", "iou": "1.000000", "precision": "1.000000",
                              "recall": "1.000000"}
        assert records[-1]["frame"] == "mean" and records[-1]["count"] == "3"
        assert float(records[-1]["iou"]) == pytest.approx(2 / 3, abs=1e-6)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            score_sequence(np.zeros((2, 3, 3)), np.zeros((3, 3, 3)))


class TestComparison:
    def test_all_methods_on_both_benchmarks(self):
        rows = run_comparison(0)
        pairs = {(r.benchmark, r.method) for r in rows}
        methods = {"bsdb", "frame_diff", "mean_threshold", "temporal_median", "eigen_background"}
        assert pairs == {(b, m) for b in ("static", "flicker") for m in methods}
        iou = {(r.benchmark, r.method): r.score.mean.iou for r in rows}
        assert iou[("flicker", "bsdb")] > iou[("flicker", "frame_diff")]
        assert iou[("static", "bsdb")] >= 0.8


class TestConfigFlags:
    def test_flags_override_file(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"m": 7, "mu": 3.0, "epsilon": 50}))
        args = build_parser().parse_args(["sbsdb", "--input", "x", "--output", "y", "--config", str(path),
                                          "--m", "9", "--grid-rows", "2", "--overlap_px", "10"])
        cfg = build_config(args)
        assert (cfg.m, cfg.mu, cfg.epsilon, cfg.grid_rows, cfg.overlap_px) == (9, 3.0, 50.0, 2, 10)

    def test_auto_epsilon_flag(self):
        args = build_parser().parse_args(["sbsdb", "--input", "x", "--output", "y", "--epsilon", "auto"])
        assert build_config(args).epsilon is None


class TestCommands:
    def test_gen_and_sbsdb_and_eval(self, tmp_path, capsys):
        seq = tmp_path / "seq"
        assert run("gen-synthetic", "--kind", "moving_square", "--output", seq, "--seed", 3) == 0
        assert run("sbsdb", "--input", seq, "--output", tmp_path / "m", "--backgrounds", tmp_path / "bg") == 0
        assert len(list((tmp_path / "bg").iterdir())) == 30
        report = tmp_path / "r.txt"
        assert run("eval", "--pred", tmp_path / "m", "--truth", seq, "--report", report) == 0
        assert float(mean_record(report.read_text())[0]["iou"]) >= 0.8

    def test_constant_video(self, tmp_path, capsys):
        save_sequence(tmp_path / "c", np.full((8, 16, 16), 40.0))
        save_masks(tmp_path / "c", np.zeros((8, 16, 16), bool))
        assert run("sbsdb", "--input", tmp_path / "c", "--output", tmp_path / "m") == 0
        assert not load_masks(tmp_path / "m").any()
        capsys.readouterr()
        assert run("eval", "--pred", tmp_path / "m", "--truth", tmp_path / "c") == 0
        assert mean_record(capsys.readouterr().out)[0]["iou"] == "1.000000"

    def test_self_comparison(self, tmp_path, capsys):
        m = np.random.default_rng(0).random((4, 8, 8)) < 0.3
        save_masks(tmp_path, m)
        assert run("eval", "--pred", tmp_path, "--truth", tmp_path) == 0
        rec = mean_record(capsys.readouterr().out)[0]
        assert rec["iou"] == rec["precision"] == rec["recall"] == "1.000000"

    def test_dbsdb_train_then_run(self, tmp_path, capsys):
        assert run("gen-synthetic", "--benchmark", "flicker", "--output", tmp_path / "fl") == 0
        model = tmp_path / "model.dbgm"
        assert run("dbsdb-train", "--input", tmp_path / "fl" / "train", "--model", model) == 0
        assert run("dbsdb-run", "--input", tmp_path / "fl" / "test", "--model", model, "--output", tmp_path / "m") == 0
        report = tmp_path / "r.txt"
        assert run("eval", "--pred", tmp_path / "m", "--truth", tmp_path / "fl" / "test", "--report", report) == 0
        assert float(mean_record(report.read_text())[0]["iou"]) >= 0.7

    def test_extract_bg(self, tmp_path, capsys):
        run("gen-synthetic", "--kind", "static_bg", "--output", tmp_path / "s", "--frames", 5)
        assert run("extract-bg", "--input", tmp_path / "s", "--output", tmp_path / "bg.png") == 0
        bg = np.asarray(Image.open(tmp_path / "bg.png"), dtype=float)
        frame = load_sequence(SequenceManifest(tmp_path / "s"))[0]
        assert np.abs(bg - frame).max() <= 1

    def test_baseline(self, tmp_path, capsys):
        run("gen-synthetic", "--kind", "moving_square", "--output", tmp_path / "s", "--frames", 8)
        assert run("baseline", "--input", tmp_path / "s", "--method", "temporal_median", "--speckle",
                   "--output", tmp_path / "m") == 0
        assert load_masks(tmp_path / "m").shape == (8, 64, 64)
        assert run("baseline", "--input", tmp_path / "s", "--train", tmp_path / "s",
                   "--baseline-method", "eigen_background", "--output", tmp_path / "e") == 0

    def test_benchmark_eval(self, tmp_path, capsys):
        report = tmp_path / "rep.txt"
        assert run("eval", "--benchmark", "--report", report) == 0
        table = capsys.readouterr().out
        assert "eigen_background" in table
        means = {(r["benchmark"], r["method"]): float(r["iou"]) for r in mean_record(report.read_text())}
        assert len(means) == 10

    def test_deterministic_outputs(self, tmp_path, capsys):
        for d in ("a", "b"):
            run("gen-synthetic", "--kind", "combined", "--noise-sigma", 2, "--output", tmp_path / d / "s", "--seed", 9)
            run("sbsdb", "--input", tmp_path / d / "s", "--output", tmp_path / d / "m")
        for sub in ("s", "m"):
            files = sorted(p.name for p in (tmp_path / "a" / sub).iterdir())
            for name in files:
                assert (tmp_path / "a" / sub / name).read_bytes() == (tmp_path / "b" / sub / name).read_bytes()


class TestExitCodes:
    def test_parameter(self, tmp_path, capsys):
        save_sequence(tmp_path, np.zeros((6, 4, 4)))
        assert run("sbsdb", "--input", tmp_path, "--output", tmp_path / "m", "--m", 1) == 2
        assert "m must be" in capsys.readouterr().err

    def test_shape(self, tmp_path, capsys):
        save_masks(tmp_path / "a", np.zeros((2, 4, 4), bool))
        save_masks(tmp_path / "b", np.zeros((3, 4, 4), bool))
        assert run("eval", "--pred", tmp_path / "a", "--truth", tmp_path / "b") == 3

    def test_io(self, tmp_path, capsys):
        assert run("sbsdb", "--input", tmp_path / "missing", "--output", tmp_path / "m") == 4

    def test_bad_model(self, tmp_path, capsys):
        save_sequence(tmp_path / "s", np.zeros((6, 4, 4, 3)))
        (tmp_path / "model").write_bytes(b"junk")
        assert run("dbsdb-run", "--input", tmp_path / "s", "--model", tmp_path / "model",
                   "--output", tmp_path / "m") == 4

    def test_numeric(self, monkeypatch, tmp_path, capsys):
        import diffbg.cli as cli
        from diffbg.errors import NumericError

        def boom(*a, **k):
            raise NumericError("eigensolver did not converge")

        monkeypatch.setattr(cli, "sbsdb_masks", boom)
        save_sequence(tmp_path, np.zeros((6, 4, 4)))
        assert run("sbsdb", "--input", tmp_path, "--output", tmp_path / "m") == 5

    def test_argparse_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["sbsdb"])
        assert exc.value.code == 2
