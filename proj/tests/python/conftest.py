import json
import os
import pathlib
import subprocess

import pytest

SOURCE = pathlib.Path(os.environ.get("MOLZ_SOURCE", pathlib.Path(__file__).resolve().parents[2]))
CLI = os.environ.get("MOLZ_CLI", str(SOURCE / "build" / "molz"))


@pytest.fixture
def run_cli(tmp_path):
    def run(command, config, *extra, out=None):
        if isinstance(config, dict):
            path = tmp_path / f"cfg{len(list(tmp_path.glob('cfg*')))}.json"
            path.write_text(json.dumps(config))
            config = path
        out = out or tmp_path / "out"
        proc = subprocess.run(
            [CLI, command, "--config", str(config), "--out", str(out), *extra],
            capture_output=True,
            text=True,
            timeout=600,
        )
        return proc, pathlib.Path(out)

    return run


@pytest.fixture
def configs():
    return SOURCE / "configs"
