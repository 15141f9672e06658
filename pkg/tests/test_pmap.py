from __future__ import annotations

import threading
import time

import pytest
from pmap import default_concurrency, p_map


def test_results_keep_input_order_under_concurrency():
    def slow_square(x: int) -> int:
        time.sleep(0.001 * (10 - x))
        return x * x

    assert p_map(range(10), slow_square, concurrency=4) == [x * x for x in range(10)]


def test_single_worker_runs_on_calling_thread():
    caller = threading.get_ident()
    seen = p_map([1, 2, 3], lambda _: threading.get_ident(), concurrency=1)
    assert seen == [caller] * 3


def test_first_failure_is_reraised():
    def boom(x: int) -> int:
        if x == 2:
            raise RuntimeError("bad item 2")
        return x

    with pytest.raises(RuntimeError, match="bad item 2"):
        p_map([1, 2, 3], boom, concurrency=2)


def test_collected_failures_are_ordered_by_input():
    def boom(x: int) -> int:
        if x % 2:
            raise ValueError(f"odd {x}")
        return x

    with pytest.raises(ExceptionGroup) as info:
        p_map(range(6), boom, concurrency=3, stop_on_error=False)
    assert [str(e) for e in info.value.exceptions] == ["odd 1", "odd 3", "odd 5"]


def test_rejects_non_positive_concurrency():
    with pytest.raises(ValueError, match="positive integer"):
        p_map([1], lambda x: x, concurrency=0)


def test_default_concurrency_reads_environment(monkeypatch: pytest.MonkeyPatch):
    monkeypatch.delenv("PMAP_TEST_WORKERS", raising=False)
    assert default_concurrency("PMAP_TEST_WORKERS", fallback=3) == 3
    monkeypatch.setenv("PMAP_TEST_WORKERS", "6")
    assert default_concurrency("PMAP_TEST_WORKERS") == 6
    monkeypatch.setenv("PMAP_TEST_WORKERS", "zero")
    with pytest.raises(ValueError, match="PMAP_TEST_WORKERS must be a positive integer"):
        default_concurrency("PMAP_TEST_WORKERS")
