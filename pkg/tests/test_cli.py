"""End-to-end CLI contracts: commands, exit codes, artifacts."""

import json

import pytest

from pairweight.cli import main

SMALL_GEN = [
    "gen-data",
    "--classes", "4",
    "--per-class", "16",
    "--latent-dim", "6",
    "--d1", "10",
    "--d2", "8",
    "--seed", "5",
]


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def small_data(tmp_path):
    path = tmp_path / "small.xmf"
    assert main(SMALL_GEN + ["--out", str(path)]) == 0
    return path


class TestGenData:
    def test_row_count_summary(self, tmp_path, capsys):
        out_path = tmp_path / "data.xmf"
        code, out, _ = run(capsys, *SMALL_GEN, "--out", str(out_path))
        assert code == 0
        summary = json.loads(out)
        assert summary["n"] == 64 and summary["d1"] == 10 and summary["d2"] == 8
        assert summary["splits"] == {"train": 52, "val": 6, "test": 6}
        assert out_path.exists()

    def test_same_flags_byte_identical(self, tmp_path, capsys):
        p1, p2 = tmp_path / "a.xmf", tmp_path / "b.xmf"
        run(capsys, *SMALL_GEN, "--out", str(p1))
        run(capsys, *SMALL_GEN, "--out", str(p2))
        assert p1.read_bytes() == p2.read_bytes()

    def test_single_class_exits_2(self, tmp_path, capsys):
        code, _, err = run(capsys, "gen-data", "--classes", "1", "--out", str(tmp_path / "x.xmf"))
        assert code == 2
        assert "num_classes" in err


class TestTrain:
    def test_writes_log_and_model(self, small_data, tmp_path, capsys):
        out_dir = tmp_path / "run"
        code, out, _ = run(
            capsys,
            "train", "--loss", "max_poly", "--data", str(small_data),
            "--epochs", "3", "--batch-size", "16", "--seed", "1",
            "--out-dir", str(out_dir),
        )
        assert code == 0
        log_lines = (out_dir / "train_log.jsonl").read_text().strip().splitlines()
        assert len(log_lines) == 3
        first = json.loads(log_lines[0])
        assert first["epoch"] == 1 and "mined_fraction" in first
        assert (out_dir / "model.xmd").exists()
        final = json.loads(out)
        assert "r1_i2t" in final

    def test_rerun_identical_artifacts(self, small_data, tmp_path, capsys):
        args = [
            "train", "--loss", "avg_poly", "--data", str(small_data),
            "--epochs", "2", "--batch-size", "16", "--seed", "3",
        ]
        d1, d2 = tmp_path / "r1", tmp_path / "r2"
        run(capsys, *args, "--out-dir", str(d1))
        run(capsys, *args, "--out-dir", str(d2))
        assert (d1 / "train_log.jsonl").read_bytes() == (d2 / "train_log.jsonl").read_bytes()
        assert (d1 / "model.xmd").read_bytes() == (d2 / "model.xmd").read_bytes()

    def test_triplet_equals_degenerate_max_poly(self, small_data, tmp_path, capsys):
        common = ["--data", str(small_data), "--epochs", "3", "--batch-size", "16", "--seed", "4"]
        dir_trip = tmp_path / "trip"
        dir_poly = tmp_path / "poly"
        code1, _, _ = run(
            capsys, "train", "--loss", "triplet", "--margin", "0.2", *common,
            "--out-dir", str(dir_trip),
        )
        code2, _, _ = run(
            capsys, "train", "--loss", "max_poly", "--a", "0.2,-1", "--b", "0,1",
            "--no-mining", *common, "--out-dir", str(dir_poly),
        )
        assert code1 == 0 and code2 == 0
        log_t = [json.loads(l) for l in (dir_trip / "train_log.jsonl").read_text().splitlines()]
        log_p = [json.loads(l) for l in (dir_poly / "train_log.jsonl").read_text().splitlines()]
        for rec_t, rec_p in zip(log_t, log_p):
            assert abs(rec_t["mean_loss"] - rec_p["mean_loss"]) <= 1e-9

    def test_invalid_coefficients_exit_2(self, small_data, tmp_path, capsys):
        code, _, err = run(
            capsys,
            "train", "--loss", "max_poly", "--a", "0,1", "--data", str(small_data),
            "--epochs", "1", "--batch-size", "16", "--out-dir", str(tmp_path / "x"),
        )
        assert code == 2
        assert "positive polynomial increasing" in err

    def test_config_file_with_flag_override(self, small_data, tmp_path, capsys):
        config = tmp_path / "config.json"
        config.write_text(
            json.dumps(
                {
                    "loss": "triplet",
                    "data": str(small_data),
                    "epochs": 5,
                    "batch_size": 16,
                    "seed": 2,
                    "out_dir": str(tmp_path / "from_config"),
                }
            )
        )
        code, _, _ = run(capsys, "train", "--config", str(config), "--epochs", "1")
        assert code == 0
        log = (tmp_path / "from_config" / "train_log.jsonl").read_text().splitlines()
        assert len(log) == 1  # flag overrode the config file's 5 epochs

    def test_unknown_config_field_exit_2(self, small_data, tmp_path, capsys):
        config = tmp_path / "bad.json"
        config.write_text(json.dumps({"data": str(small_data), "optimizer": "sgd"}))
        code, _, err = run(capsys, "train", "--config", str(config))
        assert code == 2 and "unknown fields" in err

    def test_missing_data_exit_2(self, tmp_path, capsys):
        code, _, err = run(
            capsys, "train", "--data", str(tmp_path / "nope.xmf"), "--epochs", "1"
        )
        assert code == 2 and "not found" in err

    @pytest.mark.filterwarnings("ignore:overflow encountered")
    def test_numerical_blowup_exit_3(self, tmp_path, capsys):
        # overflow-scale features push the norm to inf -> exit 3
        csv = tmp_path / "huge.csv"
        header = ",".join([f"v_{i}" for i in range(2)] + [f"t_{i}" for i in range(2)])
        rows = ["1e200,1e200,1e200,1e200", "-1e200,1e200,1e200,-1e200",
                "1e200,-1e200,-1e200,1e200", "-1e200,-1e200,-1e200,-1e200"]
        csv.write_text(header + "\n" + "\n".join(rows) + "\n")
        code, _, err = run(
            capsys,
            "train", "--loss", "triplet", "--data", str(csv), "--epochs", "1",
            "--batch-size", "4", "--out-dir", str(tmp_path / "boom"),
        )
        assert code == 3
        assert "numerical" in err.lower() or "non-finite" in err.lower()


class TestEval:
    def test_reports_requested_ks(self, small_data, tmp_path, capsys):
        out_dir = tmp_path / "run"
        run(
            capsys,
            "train", "--loss", "triplet", "--data", str(small_data), "--epochs", "2",
            "--batch-size", "16", "--seed", "1", "--out-dir", str(out_dir),
        )
        code, out, _ = run(
            capsys,
            "eval", "--model", str(out_dir / "model.xmd"), "--data", str(small_data),
            "--split", "test", "--ks", "1,2,3",
        )
        assert code == 0
        report = json.loads(out)
        assert set(report) == {"r1_i2t", "r2_i2t", "r3_i2t", "r1_t2i", "r2_t2i", "r3_t2i"}

    def test_untrained_model_near_chance(self, tmp_path, capsys):
        # 32-class default synthetic, test split of 204 rows: chance R@1 is
        # 100/204 ~ 0.49%; an untrained encoder stays within 5x of chance
        data = tmp_path / "big.xmf"
        run(capsys, "gen-data", "--seed", "0", "--out", str(data))
        out_dir = tmp_path / "untrained"
        run(
            capsys,
            "train", "--loss", "max_poly", "--data", str(data), "--epochs", "0",
            "--seed", "0", "--out-dir", str(out_dir),
        )
        code, out, _ = run(
            capsys,
            "eval", "--model", str(out_dir / "model.xmd"), "--data", str(data),
            "--split", "test", "--ks", "1",
        )
        assert code == 0
        report = json.loads(out)
        chance = 100.0 / 204
        assert report["r1_i2t"] <= 5 * chance
        assert report["r1_t2i"] <= 5 * chance

    def test_missing_model_exit_2(self, small_data, tmp_path, capsys):
        code, _, err = run(
            capsys, "eval", "--model", str(tmp_path / "none.xmd"), "--data", str(small_data)
        )
        assert code == 2 and "not found" in err


class TestGradCheckCommand:
    def test_passes_and_prints_components(self, capsys):
        code, out, _ = run(
            capsys, "grad-check", "--loss", "max_poly", "--trials", "5", "--seed", "3"
        )
        assert code == 0
        assert "similarity" in out and "loss" in out and "encoder" in out
        assert "FAIL" not in out

    def test_inject_bug_exits_1(self, capsys):
        code, out, _ = run(
            capsys, "grad-check", "--loss", "avg_poly", "--trials", "2", "--seed", "3",
            "--inject-bug",
        )
        assert code == 1
        assert "FAIL" in out


class TestSweep:
    def test_grid_shape_and_argmax(self, small_data, tmp_path, capsys):
        out_csv = tmp_path / "sweep.csv"
        code, out, _ = run(
            capsys,
            "sweep", "--data", str(small_data), "--epochs", "1", "--batch-size", "16",
            "--seed", "1", "--b1=-0.2,-0.3", "--b2", "1.5,1.7", "--out", str(out_csv),
        )
        assert code == 0
        lines = out_csv.read_text().strip().splitlines()
        assert lines[0] == "b1,b2,r1_i2t,r1_t2i,status"
        assert len(lines) == 5  # header + 2x2 grid
        best = json.loads(out)
        assert {"b1", "b2", "r1_i2t", "r1_t2i"} <= set(best)

    def test_single_cell_matches_train(self, small_data, tmp_path, capsys):
        out_csv = tmp_path / "one.csv"
        code, out, _ = run(
            capsys,
            "sweep", "--data", str(small_data), "--epochs", "2", "--batch-size", "16",
            "--seed", "7", "--b1=-0.3", "--b2", "1.2", "--out", str(out_csv),
        )
        assert code == 0
        best = json.loads(out)

        out_dir = tmp_path / "direct"
        run(
            capsys,
            "train", "--loss", "max_poly", "--b", "0.03,-0.3,1.2", "--data", str(small_data),
            "--epochs", "2", "--batch-size", "16", "--seed", "7", "--out-dir", str(out_dir),
        )
        _, out2, _ = run(
            capsys,
            "eval", "--model", str(out_dir / "model.xmd"), "--data", str(small_data),
            "--split", "val", "--ks", "1",
        )
        direct = json.loads(out2)
        assert best["r1_i2t"] == pytest.approx(direct["r1_i2t"], abs=1e-12)
        assert best["r1_t2i"] == pytest.approx(direct["r1_t2i"], abs=1e-12)

    def test_invalid_cell_marked_and_sweep_continues(self, small_data, tmp_path, capsys):
        out_csv = tmp_path / "mixed.csv"
        # b2=-2 makes the negative polynomial fall on the upper half
        code, out, _ = run(
            capsys,
            "sweep", "--data", str(small_data), "--epochs", "1", "--batch-size", "16",
            "--seed", "1", "--b1=-0.3", "--b2=-2.0,1.2", "--out", str(out_csv),
        )
        assert code == 0
        lines = out_csv.read_text().strip().splitlines()
        assert len(lines) == 3
        statuses = [line.split(",")[-1] for line in lines[1:]]
        assert statuses.count("invalid") == 1 and statuses.count("ok") == 1


class TestUsage:
    def test_unknown_command_exit_2(self, capsys):
        assert main(["frobnicate"]) == 2

    def test_no_command_exit_2(self, capsys):
        assert main([]) == 2
