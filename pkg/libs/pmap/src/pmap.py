"""Ordered, bounded-concurrency ``map`` over a thread pool.

``p_map(items, mapper, concurrency=k)`` runs ``mapper`` on every item with at
most ``k`` calls in flight and returns the results in input order, so callers
can treat a concurrent sweep as a deterministic ordered reduction.

Behavior
--------
- ``concurrency == 1`` runs inline on the calling thread. No pool is created,
  which keeps tracebacks short and makes serial debugging runs trivial.
- ``stop_on_error=True`` (default): the first failure is re-raised and work
  that has not started yet is cancelled.
- ``stop_on_error=False``: every item runs; failures are collected and raised
  together as an ``ExceptionGroup`` whose members are ordered by input index.

NumPy releases the GIL inside FFTs and large array kernels, so threads give
real overlap for independent solver runs without the pickling cost of
processes.
"""

from __future__ import annotations

import os
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from typing import TypeVar

InT = TypeVar("InT")
OutT = TypeVar("OutT")

_MISSING = object()


def default_concurrency(env_var: str, *, fallback: int = 4) -> int:
    """Read a positive worker count from ``env_var``; ``fallback`` otherwise."""

    raw = os.getenv(env_var, "").strip()
    if not raw:
        return fallback
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"{env_var} must be a positive integer, got {raw!r}") from exc
    if value < 1:
        raise ValueError(f"{env_var} must be a positive integer, got {raw!r}")
    return value


def _run_inline(
    items: Sequence[InT], mapper: Callable[[InT], OutT], stop_on_error: bool
) -> list[OutT]:
    out: list[OutT] = []
    errors: list[Exception] = []
    for item in items:
        try:
            out.append(mapper(item))
        except Exception as exc:  # noqa: BLE001
            if stop_on_error:
                raise
            errors.append(exc)
    if errors:
        raise ExceptionGroup("p_map: one or more mapper calls failed", errors)
    return out


def p_map(
    iterable: Iterable[InT],
    mapper: Callable[[InT], OutT],
    *,
    concurrency: int,
    stop_on_error: bool = True,
) -> list[OutT]:
    """Map ``iterable`` through ``mapper`` with at most ``concurrency`` calls in flight."""

    if not isinstance(concurrency, int) or concurrency < 1:
        raise ValueError("concurrency must be a positive integer")

    items = list(iterable)
    if concurrency == 1 or len(items) <= 1:
        return _run_inline(items, mapper, stop_on_error)

    results: list[object] = [_MISSING] * len(items)
    failures: dict[int, Exception] = {}
    pending = iter(enumerate(items))
    owner: dict[Future[OutT], int] = {}

    with ThreadPoolExecutor(max_workers=concurrency) as pool:

        def _top_up(active: set[Future[OutT]], slots: int) -> None:
            for _ in range(slots):
                nxt = next(pending, None)
                if nxt is None:
                    return
                idx, item = nxt
                fut = pool.submit(mapper, item)
                owner[fut] = idx
                active.add(fut)

        active: set[Future[OutT]] = set()
        _top_up(active, concurrency)
        while active:
            done, active = wait(active, return_when=FIRST_COMPLETED)
            for fut in done:
                idx = owner.pop(fut)
                exc = fut.exception()
                if exc is None:
                    results[idx] = fut.result()
                    continue
                if stop_on_error:
                    pool.shutdown(wait=False, cancel_futures=True)
                    raise exc
                failures[idx] = exc  # type: ignore[assignment]
            _top_up(active, len(done))

    if failures:
        ordered = [failures[i] for i in sorted(failures)]
        raise ExceptionGroup("p_map: one or more mapper calls failed", ordered)
    return results  # type: ignore[return-value]


__all__ = ["default_concurrency", "p_map"]
