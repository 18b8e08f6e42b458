import os
import random
from pathlib import Path

import pytest

SEED = int(os.environ.get("SSCFA_SEED", "20260810"))
PROGRAMS = Path(__file__).resolve().parent.parent / "programs"


@pytest.fixture
def rng() -> random.Random:
    return random.Random(SEED)


@pytest.fixture
def programs_dir() -> Path:
    return PROGRAMS


def program_source(name: str) -> str:
    return (PROGRAMS / name).read_text(encoding="utf-8")
