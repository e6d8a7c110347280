from __future__ import annotations

import logging
from pathlib import Path

import pytest

from reapsnap.bench.workspace import BenchWorkspace
from reapsnap.core.config import Config, ExperimentConfig, StorageConfig
from reapsnap.engine.params import EngineParams
from reapsnap.snapshot.image import create_synthetic_image
from reapsnap.storage.model import StorageModel

REPO_ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = REPO_ROOT / "config"


@pytest.fixture
def storage() -> StorageModel:
    return StorageModel()


@pytest.fixture
def params() -> EngineParams:
    return EngineParams()


@pytest.fixture
def small_image(tmp_path):
    return create_synthetic_image(tmp_path / "img", num_pages=64, page_size=4096, content_seed=42)


def shipped_config(out_dir: Path, **experiments) -> Config:
    """Default geometry with the shipped presets and calibration table."""
    config = Config(
        storage=StorageConfig(calibration_file=CONFIG_DIR / "calibration.csv"),
        experiments=ExperimentConfig(
            presets_file=CONFIG_DIR / "presets.jsonc",
            out_dir=out_dir,
            **experiments,
        ),
        settings={"logging": {"file_enabled": False}},
    )
    return config


@pytest.fixture(scope="session")
def suite_workspace(tmp_path_factory) -> BenchWorkspace:
    """Full-size default image shared by the slow end-to-end tests."""
    out = tmp_path_factory.mktemp("suite")
    workspace = BenchWorkspace(shipped_config(out, repeats=1))
    workspace.create_image()
    return workspace


@pytest.fixture
def clean_root_logger():
    root = logging.getLogger()
    handlers = list(root.handlers)
    filters = list(root.filters)
    level = root.level
    root.handlers[:] = []
    root.filters[:] = []
    try:
        yield root
    finally:
        for handler in list(root.handlers):
            try:
                handler.close()
            except Exception:  # noqa: BLE001
                pass
        root.handlers[:] = handlers
        root.filters[:] = filters
        root.setLevel(level)
