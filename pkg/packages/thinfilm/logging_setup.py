"""Centralized logging configuration for the ``thinfilm`` package.

Two public helpers:

- ``configure_logging(...)``: attach a single ``StreamHandler`` to the package
  root logger (``"thinfilm"``). Called once by entrypoints (the ``tfilm`` CLI,
  or a notebook driving :func:`thinfilm.api.run`).
- ``get_logger(name)``: acquire a logger by name. Until configuration runs, the
  package root logger carries a ``NullHandler`` so library use stays silent.

Library modules never attach their own handlers; they call
``get_logger("thinfilm.<module>")`` and log ``stage:event key=value`` messages,
e.g. ``picard_solve:converged sweeps=7 T=0.015625``, so a run log can be
filtered with ``grep`` per solver stage.
"""

from __future__ import annotations

import logging
import os
import sys
import threading
from typing import IO

_PKG_LOGGER_NAME = "thinfilm"
_LEVEL_ENV = "THINFILM_LOG_LEVEL"
_DEFAULT_FORMAT = "%(asctime)s %(name)s %(levelname)s %(message)s"
_CONFIGURED = False
_CONFIG_LOCK = threading.Lock()


def _parse_level(level: int | str | None) -> int:
    """Resolve ``level`` to a numeric level; ``None`` consults ``THINFILM_LOG_LEVEL``.

    Unknown names raise ``ValueError`` instead of silently falling back, so a
    typo in ``.env`` surfaces at startup.
    """

    if isinstance(level, int):
        return level
    if isinstance(level, str):
        # numeric strings ("10") or names, case-insensitive ("debug")
        level = level.strip().upper()
        if level.isdigit():
            return int(level)
        numeric = getattr(logging, level, None)
        if isinstance(numeric, int):
            return numeric
        raise ValueError(f"unknown log level {level!r}")
    env_val = os.getenv(_LEVEL_ENV)
    if env_val:
        return _parse_level(env_val)
    return logging.INFO


def configure_logging(
    level: int | str | None = None,
    *,
    fmt: str | None = None,
    stream: IO[str] = sys.stderr,
) -> None:
    """Configure the package root logger exactly once.

    Later calls are no-ops, so the CLI and an embedding host can both call it.

    Parameters
    ----------
    level:
        Logging level as ``int`` or level name (``"INFO"``, ``"debug"``). If
        ``None``, uses ``THINFILM_LOG_LEVEL`` when set, otherwise ``INFO``.
    fmt:
        Optional format string; defaults to
        ``"%(asctime)s %(name)s %(levelname)s %(message)s"``.
    stream:
        Destination of the single ``StreamHandler`` (``sys.stderr`` by
        default, keeping stdout free for the CLI verdict line).

    Raises
    ------
    ValueError
        If ``level`` (or the environment variable) names no logging level.
    """

    global _CONFIGURED
    if _CONFIGURED:
        return
    # sweeps run in worker threads; two first calls must not add two handlers
    with _CONFIG_LOCK:
        if _CONFIGURED:
            return

        resolved = _parse_level(level)
        logger = logging.getLogger(_PKG_LOGGER_NAME)

        # a leftover NullHandler from get_logger would otherwise stay attached
        for h in list(logger.handlers):
            if isinstance(h, logging.NullHandler):
                logger.removeHandler(h)

        handler = logging.StreamHandler(stream)
        # NOTSET: the logger level is the only threshold
        handler.setLevel(logging.NOTSET)
        handler.setFormatter(logging.Formatter(fmt or _DEFAULT_FORMAT))

        logger.setLevel(resolved)
        logger.addHandler(handler)
        # Avoid double emission via the root logger.
        logger.propagate = False

        _CONFIGURED = True


def get_logger(name: str) -> logging.Logger:
    """Return the logger ``name``, keeping the package silent until configured.

    Numerical modules call this at import time
    (``_logger = get_logger("thinfilm.evolve")``). When no configuration has
    run, a ``NullHandler`` on the ``"thinfilm"`` root swallows their records,
    so importing the package from tests or notebooks prints nothing.
    """

    pkg_logger = logging.getLogger(_PKG_LOGGER_NAME)
    if not _CONFIGURED and not pkg_logger.handlers:
        pkg_logger.addHandler(logging.NullHandler())
    return logging.getLogger(name)
