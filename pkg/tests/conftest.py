import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

sys.path.insert(0, str(Path(__file__).parent))

from signaltrader.synthetic import planted_lead_signals, write_panel  # noqa: E402


def days(start, n):
    return np.datetime64(start) + np.arange(n) * np.timedelta64(1, "D")


def make_run(tmp_path, seed=0, n_days=900, n_boot=200, n_perm=0, n_random=200, threads=1, **extra):
    """Synthetic planted-lead panel plus a small run config; returns the config path."""
    signals = planted_lead_signals(seed, n_days)
    dates = signals["price"].dates
    write_panel(signals, tmp_path / "panel", dates[int(n_days * 0.75)], dates[-1])
    config = {
        "panel": "panel/manifest.yaml",
        "output_dir": "out",
        "seed": seed,
        "threads": threads,
        "irf": {"n_boot": n_boot, "n_perm": n_perm},
        "strategies": {"n_random": n_random},
    }
    for key, value in extra.items():
        config[key] = value
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(config, sort_keys=False))
    return path


@pytest.fixture
def run_config(tmp_path):
    return make_run(tmp_path)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
