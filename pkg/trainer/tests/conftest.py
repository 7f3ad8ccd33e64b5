"""Shared fixtures: desk-scale datasets generated through the r3d CLI.

The dataset tool is exercised strictly through its command line and file
formats; nothing here imports it. Datasets are built once per session.
"""

import json
import subprocess
import sys

import pytest

# one line per acceptance criterion, shown in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance gate")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


BASE_CONFIG = {
    "dims": {"width": 32, "depth": 32, "height": 8, "resolution_m": 1.0},
    "txs_per_set": 2,
    "xi_range": [0.03, 0.08],
    "norm_policy": "pinned",
    "city": {
        "block_pitch_vox": 12,
        "street_width_vox": 4,
        "building_height_range_vox": [3, 6],
        "fill_probability": 0.7,
    },
}

# Coefficient ranges for the transfer experiment: set B is a hard shift of
# set A (much darker maps, steeper distance decay).
PHI_BOUNDS_A = {"a": [-40.0, -30.0], "b": [-25.0, -15.0], "c": [-6.0, -1.0], "e": [0.6, 0.9]}
PHI_BOUNDS_B = {"a": [-70.0, -60.0], "b": [-35.0, -30.0], "c": [-10.0, -8.0], "e": [0.2, 0.4]}


def build_dataset(out_dir, **overrides):
    cfg = {**BASE_CONFIG, **overrides}
    cfg_path = out_dir.parent / (out_dir.name + "_config.json")
    cfg_path.write_text(json.dumps(cfg))
    subprocess.run(
        [sys.executable, "-m", "r3d.cli", "build",
         "--config", str(cfg_path), "--out", str(out_dir)],
        check=True, capture_output=True, text=True,
    )
    return out_dir


@pytest.fixture(scope="session")
def dataset_a(tmp_path_factory):
    """16 samples, 4 envs split 2/1/1: the general-purpose fixture."""
    return build_dataset(
        tmp_path_factory.mktemp("data") / "set_a",
        n_envs=4, tx_sets_per_env=2, n_target_models=2, seed=101,
        split_fractions=[0.5, 0.25, 0.25], phi_bounds=PHI_BOUNDS_A,
    )


@pytest.fixture(scope="session")
def dataset_b(tmp_path_factory):
    """8 samples with a shifted coefficient range, split 4 train / 4 val."""
    return build_dataset(
        tmp_path_factory.mktemp("data") / "set_b",
        n_envs=4, tx_sets_per_env=2, n_target_models=1, seed=202,
        split_fractions=[0.5, 0.5, 0.0], phi_bounds=PHI_BOUNDS_B,
    )


@pytest.fixture(scope="session")
def dataset_single(tmp_path_factory):
    """Exactly one sample, all of it in the train split."""
    return build_dataset(
        tmp_path_factory.mktemp("data") / "single",
        n_envs=1, tx_sets_per_env=1, n_target_models=1, seed=303,
        split_fractions=[1.0, 0.0, 0.0], phi_bounds=PHI_BOUNDS_A,
    )


@pytest.fixture(scope="session")
def dataset_ten(tmp_path_factory):
    """Ten samples, all in train: the learning-signal fixture."""
    return build_dataset(
        tmp_path_factory.mktemp("data") / "ten",
        n_envs=5, tx_sets_per_env=2, n_target_models=1, seed=404,
        split_fractions=[1.0, 0.0, 0.0], phi_bounds=PHI_BOUNDS_A,
    )
