import csv
import json
import shutil
import subprocess

import numpy as np
import pytest

from lidpart.cli import run_cli
from lidpart.lid import synth_manifold
from lidpart.tensorio import write_tensor

SPACE = {
    "layers": [
        {"name": f"layer{i}", "ops": ["op0", "op1", "op2", "op3"]} for i in range(3)
    ]
}

CONFIG = {
    "config_version": 1,
    "seed": 7,
    "space": "space.json",
    "provider": {
        "kind": "synthetic",
        "b": 128,
        "m": 12,
        "plan": {"op0": 2, "op1": 4, "op2": 6, "op3": 8},
    },
    "k": 10,
    "T": 2,
    "evo": {"population_size": 12, "epochs": 6},
    "benchmark": "bench.csv",
    "estimate": {"d": 2, "m": 20, "n": 400},
    "profiles": {"count": 3},
    "rank_eval": {"top_k": 10},
    "output_dir": "out",
}

BEST = (3, 1, 2)


def write_bench(path):
    rng = np.random.default_rng(11)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["encoding", "val_acc", "test_acc"])
        for a in range(4):
            for b in range(4):
                for c in range(4):
                    dist = sum(x != y for x, y in zip((a, b, c), BEST))
                    val = 95.0 - 6.0 * dist + (rng.uniform(0.0, 2.0) if dist else 0.0)
                    writer.writerow(
                        [f"{a}-{b}-{c}", repr(val), repr(min(100.0, val + 0.5))]
                    )


@pytest.fixture
def workspace(tmp_path):
    (tmp_path / "space.json").write_text(json.dumps(SPACE))
    (tmp_path / "run.json").write_text(json.dumps(CONFIG))
    write_bench(tmp_path / "bench.csv")
    return tmp_path


def invoke(workspace, command, *extra):
    return run_cli([command, "--config", str(workspace / "run.json"), *extra])


class TestLidEstimate:
    def test_synthetic_estimate(self, workspace, capsys):
        assert invoke(workspace, "lid-estimate") == 0
        payload = json.loads((workspace / "out" / "lid_estimate.json").read_text())
        assert payload["source"] == "synthetic"
        assert payload["d"] == 2
        assert payload["k"] == 10
        assert 1.4 <= payload["lid"] <= 2.6
        assert "lid-estimate:" in capsys.readouterr().out

    def test_tensor_estimate(self, workspace):
        batch = synth_manifold(3, 16, 300, seed=5).astype(np.float32)
        write_tensor(workspace / "batch.lidt", batch)
        assert invoke(
            workspace, "lid-estimate", "--tensor", str(workspace / "batch.lidt")
        ) == 0
        payload = json.loads((workspace / "out" / "lid_estimate.json").read_text())
        assert payload["source"] == "tensor"
        assert payload["rows"] == 300
        assert 2.0 <= payload["lid"] <= 4.2

    def test_missing_tensor_file_is_data_error(self, workspace):
        assert invoke(workspace, "lid-estimate", "--tensor", "no-such.lidt") == 2


class TestSplit:
    def test_writes_report_and_figure(self, workspace, capsys):
        assert invoke(workspace, "split") == 0
        report = json.loads((workspace / "out" / "partition.json").read_text())
        assert len(report["leaves"]) == 4
        assert sum(leaf["subnet_count"] for leaf in report["leaves"]) == 64
        png = workspace / "out" / "partition_gamma.png"
        assert png.stat().st_size > 0
        assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
        assert "leaves=4" in capsys.readouterr().out

    def test_set_override_changes_rounds(self, workspace):
        assert invoke(workspace, "split", "--set", "T=1") == 0
        report = json.loads((workspace / "out" / "partition.json").read_text())
        assert len(report["leaves"]) == 2

    def test_reruns_are_byte_identical_except_run_meta(self, workspace):
        assert invoke(workspace, "split", "--set", "output_dir=a") == 0
        assert invoke(workspace, "split", "--set", "output_dir=b") == 0
        for name in ("partition.json", "partition_gamma.png"):
            first = (workspace / "a" / name).read_bytes()
            second = (workspace / "b" / name).read_bytes()
            assert first == second, name

    def test_run_meta_carries_timestamps(self, workspace):
        assert invoke(workspace, "split") == 0
        meta = json.loads((workspace / "out" / "run_meta.json").read_text())
        assert meta["command"] == "split"
        assert meta["overrides"] == []
        assert meta["started"] <= meta["finished"]


class TestSeparability:
    def test_scores_every_layer(self, workspace):
        assert invoke(workspace, "separability") == 0
        with open(workspace / "out" / "separability.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["layer_name", "D"]
        assert [r[0] for r in rows[1:]] == ["layer0", "layer1", "layer2"]
        assert all(float(r[1]) > 0 for r in rows[1:])
        assert (workspace / "out" / "separability.png").stat().st_size > 0


class TestEvoSearch:
    def test_finds_planted_optimum(self, workspace):
        assert invoke(workspace, "evo-search") == 0
        result = json.loads((workspace / "out" / "search_result.json").read_text())
        assert result["best_encoding"] == "3-1-2"
        assert result["val_acc"] == 95.0
        assert result["test_acc"] == 95.5
        assert result["leaves"] == 4
        with open(workspace / "out" / "history.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 1 + CONFIG["evo"]["epochs"] + 1
        assert (workspace / "out" / "history.png").stat().st_size > 0

    def test_epoch_override(self, workspace):
        assert invoke(workspace, "evo-search", "--set", "evo.epochs=2") == 0
        with open(workspace / "out" / "history.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 4

    def test_benchmark_gap_is_data_error(self, workspace, capsys):
        lines = (workspace / "bench.csv").read_text().splitlines()
        (workspace / "bench.csv").write_text("\n".join(lines[:-1]) + "\n")
        assert invoke(workspace, "evo-search") == 2
        assert "CoverageGapError" in capsys.readouterr().err


class TestRankEval:
    def test_report_and_scatter(self, workspace):
        assert invoke(workspace, "rank-eval") == 0
        report = json.loads((workspace / "out" / "rank_correlation.json").read_text())
        assert set(report) == {"kendall", "spearman", "n"}
        assert report["n"] == 10
        assert -1.0 <= report["kendall"] <= 1.0
        assert -1.0 <= report["spearman"] <= 1.0
        assert (workspace / "out" / "rank_scatter.png").stat().st_size > 0


class TestEmitProfiles:
    def test_emits_requested_count(self, workspace):
        assert invoke(workspace, "emit-profiles") == 0
        with open(workspace / "out" / "profiles.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        names = [r[0] for r in rows[1:]]
        assert len(set(names)) == 3
        assert len(names) == 3 * 3  # three architectures x three layers
        assert (workspace / "out" / "profiles.png").stat().st_size > 0

    def test_count_above_space_size_is_config_error(self, workspace):
        assert invoke(workspace, "emit-profiles", "--set", "profiles.count=100") == 2


class TestUsageAndErrors:
    def test_no_arguments(self, workspace):
        assert run_cli([]) == 1

    def test_unknown_subcommand(self, workspace):
        assert run_cli(["frobnicate"]) == 1

    def test_missing_config_flag(self, workspace):
        assert run_cli(["split"]) == 1

    def test_help_exits_zero(self, workspace, capsys):
        assert run_cli(["--help"]) == 0
        assert "subcommand" in capsys.readouterr().out

    def test_subcommand_help_exits_zero(self, workspace, capsys):
        assert run_cli(["split", "--help"]) == 0

    def test_missing_config_file(self, workspace, capsys):
        assert run_cli(["split", "--config", str(workspace / "nope.json")]) == 2
        assert "ConfigError" in capsys.readouterr().err

    def test_invalid_json_config(self, workspace):
        bad = workspace / "bad.json"
        bad.write_text("{not json")
        assert run_cli(["split", "--config", str(bad)]) == 2

    def test_unknown_config_key(self, workspace):
        doc = dict(CONFIG)
        doc["surprise"] = 1
        bad = workspace / "bad.json"
        bad.write_text(json.dumps(doc))
        assert run_cli(["split", "--config", str(bad)]) == 2

    def test_bad_override_shape(self, workspace):
        assert invoke(workspace, "split", "--set", "noequals") == 2

    def test_missing_benchmark_reference(self, workspace):
        (workspace / "bench.csv").unlink()
        assert invoke(workspace, "evo-search") == 2


class TestInstalledScript:
    def test_console_entry_point(self, workspace):
        exe = shutil.which("lidpart")
        assert exe, "console script not installed"
        proc = subprocess.run(
            [exe, "split", "--config", str(workspace / "run.json")],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert "split:" in proc.stdout
        assert (workspace / "out" / "partition.json").is_file()
