"""End-to-end command-line behavior of the exporter."""
from __future__ import annotations

import json
import shutil
import subprocess

import pytest

from lidexport import make_toy_supernet, save_model
from lidexport.cli import main


@pytest.fixture()
def workspace(tmp_path):
    save_model(make_toy_supernet(2, 2, seed=0), tmp_path / "model.pt")
    layers = [
        {"name": f"layer{i}", "ops": ["op0", "op1"]} for i in range(2)
    ]
    (tmp_path / "space.json").write_text(json.dumps({"layers": layers}))
    return tmp_path


def invoke(workspace, out_name, *extra):
    return main(
        [
            "export",
            "--model", str(workspace / "model.pt"),
            "--space", str(workspace / "space.json"),
            "--batch", "32",
            "--seed", "7",
            "--out", str(workspace / out_name),
            *extra,
        ]
    )


class TestExportCommand:
    def test_success_writes_grid(self, workspace, capsys):
        assert invoke(workspace, "out") == 0
        assert "wrote 4 blobs" in capsys.readouterr().out
        out = workspace / "out"
        assert (out / "manifest.json").exists()
        assert sum(1 for p in out.glob("*.lidt")) == 4

    def test_rerun_byte_identical(self, workspace):
        assert invoke(workspace, "a") == 0
        assert invoke(workspace, "b") == 0
        for name in (
            "layer0_op0.lidt",
            "layer0_op1.lidt",
            "layer1_op0.lidt",
            "layer1_op1.lidt",
            "manifest.json",
        ):
            assert (workspace / "a" / name).read_bytes() == (
                workspace / "b" / name
            ).read_bytes()

    def test_missing_model_file_is_data_error(self, workspace, capsys):
        (workspace / "model.pt").unlink()
        assert invoke(workspace, "out") == 2
        assert "error:" in capsys.readouterr().err

    def test_space_mismatch_is_data_error(self, workspace, capsys):
        layers = [{"name": f"layer{i}", "ops": ["op0", "op1"]} for i in range(3)]
        (workspace / "space.json").write_text(json.dumps({"layers": layers}))
        assert invoke(workspace, "out") == 2
        assert "ValueError" in capsys.readouterr().err


class TestUsage:
    def test_missing_required_flag(self, workspace, capsys):
        code = main(["export", "--model", str(workspace / "model.pt")])
        assert code == 1
        assert "usage error" in capsys.readouterr().err

    def test_unknown_command(self, capsys):
        assert main(["shrink"]) == 1
        assert "usage error" in capsys.readouterr().err

    def test_no_arguments(self):
        assert main([]) == 1

    def test_help_exits_zero(self):
        assert main(["--help"]) == 0
        assert main(["export", "--help"]) == 0


class TestInstalledScript:
    def test_console_script_runs(self, workspace):
        exe = shutil.which("lidexport")
        assert exe is not None, "console script not on PATH"
        proc = subprocess.run(
            [
                exe,
                "export",
                "--model", str(workspace / "model.pt"),
                "--space", str(workspace / "space.json"),
                "--batch", "8",
                "--out", str(workspace / "out"),
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert (workspace / "out" / "manifest.json").exists()
