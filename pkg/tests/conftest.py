"""Pytest configuration for test isolation.

Runs write artifacts below ``THINFILM_OUT_DIR`` when no explicit directory is
given, and sweeps read ``THINFILM_CONCURRENCY``. Both are pinned per test so
no test writes into the working tree or depends on the caller's environment.

The workspace ``packages/`` dir and the ``pmap`` source dir are put on
``sys.path`` so the suite also runs without an installed workspace.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import numpy as np
import pytest

_ROOT = Path(__file__).resolve().parents[1]
sys.path[:0] = [
    p
    for p in (str(_ROOT / "packages"), str(_ROOT / "libs" / "pmap" / "src"))
    if p not in sys.path
]


@pytest.fixture(autouse=True)
def _isolate_run_dirs(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Point the default output root at the test's temporary directory."""

    out_root = tmp_path / "runs"
    out_root.mkdir(parents=True, exist_ok=True)
    monkeypatch.setenv("THINFILM_OUT_DIR", os.fspath(out_root))
    monkeypatch.setenv("THINFILM_CONCURRENCY", "1")
    monkeypatch.delenv("THINFILM_LOG_LEVEL", raising=False)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
