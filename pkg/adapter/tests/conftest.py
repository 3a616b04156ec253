import subprocess
import sys
import time

import pytest

BRIDGE_CONFIG = """\
[workload]
horizon_slots = 20000
train_len = 14400
base_level = 21
peak_level = 27
seed = 7

[episode]
max_steps = 600

[rewards]
specs = rfn1

[schedule]
eval_episodes = 1
"""


@pytest.fixture(scope="session")
def bridge_config_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("bridge") / "bridge.ini"
    path.write_text(BRIDGE_CONFIG)
    return path


@pytest.fixture(scope="session")
def server_address(bridge_config_path):
    """A scalebench bridge in a subprocess, reached only over TCP."""
    proc = subprocess.Popen(
        [sys.executable, "-m", "scalebench.cli", "serve",
         "--config", str(bridge_config_path), "--bind", "127.0.0.1:0"],
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,
        text=True,
    )
    try:
        line = proc.stdout.readline().strip()
        deadline = time.time() + 10
        while "listening on" not in line and time.time() < deadline:
            line = proc.stdout.readline().strip()
        if "listening on" not in line:
            raise RuntimeError(f"server did not start: {line!r}")
        host, port = line.rsplit(" ", 1)[1].split(":")
        yield (host, int(port))
    finally:
        proc.terminate()
        proc.wait(timeout=10)
