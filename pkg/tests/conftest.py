"""Shared fixtures and paths."""

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
CASES = ROOT / "cases"

sys.path.insert(0, str(Path(__file__).resolve().parent))


@pytest.fixture(scope="session")
def micro_network():
    from bmlab.system import load_system
    return load_system(CASES / "micro.json")


@pytest.fixture(scope="session")
def two_zone_network():
    from bmlab.system import load_system
    return load_system(CASES / "two_zone.json")
