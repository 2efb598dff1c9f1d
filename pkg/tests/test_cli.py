import json

import numpy as np
import pytest

from boxloss import cli, report
from boxloss.sim import SimConfig, run_simulation

from test_losses import rand_pair_arrays


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def loss_record(capsys, *argv):
    code, out, err = run_cli(capsys, "loss", *argv)
    assert code == 0, err
    return json.loads(out)


class TestLossCommand:
    def test_perfect_pair_is_zero(self, capsys):
        rec = loss_record(
            capsys, "--kind", "eiou", "--pred", "10,10,10,10", "--target", "10,10,10,10"
        )
        assert rec["value"] == 0.0
        # edge ties use the overlap-shrinking branch, so the width/height
        # subgradient at a perfect match is -1/w, -1/h rather than 0
        assert rec["grad"][0:2] == [0.0, 0.0]
        assert rec["grad"][2] == pytest.approx(-0.1)
        assert rec["grad"][3] == pytest.approx(-0.1)

    def test_giou_equals_iou_on_containment(self, capsys):
        args = ["--pred", "10,10,2,2", "--target", "10,10,8,8"]
        giou = loss_record(capsys, "--kind", "giou", *args)
        iou = loss_record(capsys, "--kind", "iou", *args)
        assert giou["value"] == pytest.approx(iou["value"], abs=1e-12)

    def test_focal_eiou_gamma_zero_matches_eiou(self, capsys):
        rng = np.random.default_rng(61)
        pred, tgt = rand_pair_arrays(rng, 50)
        for p, t in zip(pred, tgt):
            ps = ",".join(repr(float(v)) for v in p)
            ts = ",".join(repr(float(v)) for v in t)
            focal = loss_record(
                capsys, "--kind", "focal-eiou", "--gamma", "0", "--pred", ps, "--target", ts
            )
            plain = loss_record(capsys, "--kind", "eiou", "--pred", ps, "--target", ts)
            assert focal["value"] == plain["value"]
            assert focal["grad"] == plain["grad"]

    def test_corners_flag(self, capsys):
        center = loss_record(capsys, "--kind", "iou", "--pred", "1,1,2,2", "--target", "2,1,2,2")
        corner = loss_record(
            capsys, "--kind", "iou", "--corners", "--pred", "0,0,2,2", "--target", "1,0,3,2"
        )
        assert corner["value"] == center["value"]

    def test_invalid_box_exit_2_names_field(self, capsys):
        code, _, err = run_cli(
            capsys, "loss", "--kind", "iou", "--pred", "0,0,-1,2", "--target", "0,0,1,1"
        )
        assert code == 2
        assert "w" in err
        code, _, err = run_cli(
            capsys, "loss", "--kind", "iou", "--pred", "0,0,1,2", "--target", "0,0,1,0"
        )
        assert code == 2
        assert "h" in err

    def test_unknown_kind_exit_2(self, capsys):
        code, _, err = run_cli(
            capsys, "loss", "--kind", "l2", "--pred", "0,0,1,1", "--target", "0,0,1,1"
        )
        assert code == 2
        assert "unknown loss" in err


class TestGradcheckCommand:
    def test_all_kinds_pass(self, capsys):
        code, out, _ = run_cli(capsys, "gradcheck", "--samples", "100", "--seed", "2")
        assert code == 0
        rec = json.loads(out)
        assert set(rec["results"]) == set(cli.GRADCHECK_KINDS)
        assert all(r["pass"] for r in rec["results"].values())

    def test_coarse_step_has_larger_error(self, capsys):
        _, fine, _ = run_cli(
            capsys, "gradcheck", "--kinds", "eiou", "--samples", "100", "--step", "1e-6"
        )
        _, coarse, _ = run_cli(
            capsys, "gradcheck", "--kinds", "eiou", "--samples", "100", "--step", "1e-2",
            "--threshold", "1e9",
        )
        fine_err = json.loads(fine)["results"]["eiou"]["max_rel_err"]
        coarse_err = json.loads(coarse)["results"]["eiou"]["max_rel_err"]
        assert coarse_err > fine_err

    def test_ciou_without_frozen_oracle_fails_threshold(self, capsys):
        code, out, _ = run_cli(
            capsys, "gradcheck", "--kinds", "ciou", "--samples", "100", "--no-frozen-oracles"
        )
        assert code == 1
        rec = json.loads(out)
        assert rec["results"]["ciou"]["pass"] is False

    def test_unknown_kind_exit_2(self, capsys):
        code, _, err = run_cli(capsys, "gradcheck", "--kinds", "l2")
        assert code == 2


class TestSimulateCommand:
    ARGS = ["simulate", "--setup", "2", "--iters", "15", "--points", "4", "--seed", "6"]

    def test_writes_expected_files(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, *self.ARGS, "--variants", "iou,eiou", "--out", str(tmp_path)
        )
        assert code == 0, err
        for v in ("iou", "eiou"):
            assert (tmp_path / v / "errors.csv").exists()
            assert (tmp_path / v / "iou_stats.csv").exists()
            assert len(report.read_errors_csv(tmp_path / v / "errors.csv")) == 15
        assert (tmp_path / "compare.svg").exists()
        manifest = report.read_manifest(tmp_path / "manifest.json")
        assert len(manifest["configs"]) == 2
        assert set(manifest["clamp_events"]) == {"iou", "eiou"}

    def test_manifest_echo_reproduces_csvs(self, capsys, tmp_path):
        run_cli(capsys, *self.ARGS, "--variants", "eiou", "--out", str(tmp_path))
        cfg = SimConfig.from_dict(report.read_manifest(tmp_path / "manifest.json")["configs"][0])
        res = run_simulation(cfg)
        report.write_errors_csv(tmp_path / "again.csv", res.errors)
        assert (tmp_path / "again.csv").read_bytes() == (
            tmp_path / "eiou" / "errors.csv"
        ).read_bytes()

    def test_same_seed_byte_identical(self, capsys, tmp_path):
        run_cli(capsys, *self.ARGS, "--variants", "giou", "--out", str(tmp_path / "a"))
        run_cli(capsys, *self.ARGS, "--variants", "giou", "--out", str(tmp_path / "b"))
        for name in ("errors.csv", "iou_stats.csv"):
            assert (tmp_path / "a" / "giou" / name).read_bytes() == (
                tmp_path / "b" / "giou" / name
            ).read_bytes()
        assert (tmp_path / "a" / "compare.svg").read_bytes() == (
            tmp_path / "b" / "compare.svg"
        ).read_bytes()

    def test_unknown_variant_exit_2(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, *self.ARGS, "--variants", "l2", "--out", str(tmp_path)
        )
        assert code == 2
        assert "unknown loss" in err

    def test_unwritable_out_exit_3(self, capsys, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        code, _, err = run_cli(
            capsys, *self.ARGS, "--variants", "iou", "--out", str(blocker / "sub")
        )
        assert code == 3
        assert "not writable" in err

    def test_out_env_var_default(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("BOXLOSS_OUT", str(tmp_path / "envout"))
        code, _, _ = run_cli(capsys, *self.ARGS, "--variants", "iou")
        assert code == 0
        assert (tmp_path / "envout" / "iou" / "errors.csv").exists()

    def test_config_file_with_cli_override(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "setup = 2\niters = 12\npoints = 4\nseed = 6\nvariants = iou  # one variant\n"
        )
        out = tmp_path / "out"
        code, _, _ = run_cli(
            capsys, "simulate", "--config", str(cfg), "--iters", "7", "--out", str(out)
        )
        assert code == 0
        # file supplied variants/points/seed; the explicit flag won
        assert len(report.read_errors_csv(out / "iou" / "errors.csv")) == 7
        manifest = report.read_manifest(out / "manifest.json")
        assert manifest["configs"][0]["point_count"] == 4


class TestStatsCommand:
    def test_recomputes_identical_stats(self, capsys, tmp_path):
        code, _, _ = run_cli(
            capsys,
            "simulate", "--setup", "2", "--iters", "10", "--points", "3", "--seed", "1",
            "--variants", "eiou", "--save-tensor", "--out", str(tmp_path),
        )
        assert code == 0
        code, _, _ = run_cli(
            capsys,
            "stats",
            "--input", str(tmp_path / "eiou" / "iou_tensor.npy"),
            "--out", str(tmp_path / "recomputed.csv"),
        )
        assert code == 0
        assert (tmp_path / "recomputed.csv").read_bytes() == (
            tmp_path / "eiou" / "iou_stats.csv"
        ).read_bytes()

    def test_rejects_scalar_input(self, capsys, tmp_path):
        np.save(tmp_path / "bad.npy", np.float64(1.0))
        code, _, err = run_cli(
            capsys, "stats", "--input", str(tmp_path / "bad.npy"), "--out", str(tmp_path / "o.csv")
        )
        assert code == 2
