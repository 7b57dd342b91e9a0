from __future__ import annotations

import json
import pathlib

import pytest

REPO_ROOT = pathlib.Path(__file__).resolve().parent.parent
SCENARIO_DIR = REPO_ROOT / "scenarios"


@pytest.fixture(scope="session")
def scenario_dir() -> pathlib.Path:
    return SCENARIO_DIR


@pytest.fixture(scope="session")
def scenario_doc():
    def load(name: str) -> dict:
        with open(SCENARIO_DIR / name, encoding="utf-8") as f:
            return json.load(f)
    return load
