"""Experiment reports and artifact emission.

An :class:`ExperimentReport` is a small table plus a PASS/FAIL verdict and a
summary mapping (fitted slopes, measured constants). :class:`ArtifactWriter`
serializes reports as CSV (tabular series) and JSON (summaries) under a run
directory.

Every payload embeds an :class:`~thinfilm.models.ArtifactMeta` block: CSV files
start with ``# key=value`` comment lines, JSON files carry a ``"meta"`` object.
Wall-clock time is confined to ``manifest.json``.

Atomicity: writes target ``<name>.tmp`` first and then ``os.replace`` into
place; concurrent writers to the same path are serialized by a per-path lock.
"""

from __future__ import annotations

import contextlib
import csv
import io
import json
import math
import os
import threading
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from datetime import UTC, datetime
from pathlib import Path
from types import MappingProxyType
from typing import Any

from .logging_setup import get_logger
from .models import ArtifactMeta, ManifestEntry, RunManifest

type Cell = float | int | str | bool

_logger = get_logger("thinfilm.reports")


@dataclass(frozen=True, slots=True)
class ExperimentReport:
    """Tabular result of one check or experiment."""

    name: str
    columns: tuple[str, ...]
    rows: tuple[tuple[Cell, ...], ...]
    passed: bool
    summary: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        rows = tuple(tuple(r) for r in self.rows)
        for r in rows:
            if len(r) != len(self.columns):
                raise ValueError(
                    f"{self.name}: row width {len(r)} != column count {len(self.columns)}"
                )
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "summary", MappingProxyType(dict(self.summary)))

    def column(self, name: str) -> list[Cell]:
        j = self.columns.index(name)
        return [r[j] for r in self.rows]

    def to_csv(self, meta: ArtifactMeta | None = None) -> str:
        buf = io.StringIO()
        if meta is not None:
            for key, value in meta.model_dump(mode="json").items():
                buf.write(f"# {key}={value}\n")
            buf.write(f"# report={self.name}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for r in self.rows:
            writer.writerow([format_cell(c) for c in r])
        return buf.getvalue()

    def to_json_payload(self, meta: ArtifactMeta | None = None) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "report": self.name,
            "pass": self.passed,
            **{k: _jsonable(v) for k, v in self.summary.items()},
        }
        if meta is not None:
            payload["meta"] = meta.model_dump(mode="json")
        return payload


def format_cell(value: Cell) -> str:
    """Deterministic text for one CSV cell (shortest round-trip float repr)."""

    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "item") and callable(value.item):
        return _jsonable(value.item())
    return value


def dumps_canonical(payload: Mapping[str, Any]) -> str:
    """Sorted-key JSON with a trailing newline; identical input gives identical bytes."""

    return json.dumps(_jsonable(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


# ----------------------------------------------------------------------------
# Atomic, per-path serialized writes
# ----------------------------------------------------------------------------

_PATH_LOCKS: dict[Path, threading.Lock] = {}
_REGISTRY_LOCK = threading.Lock()


def _lock_for(path: Path) -> threading.Lock:
    with _REGISTRY_LOCK:
        lock = _PATH_LOCKS.get(path)
        if lock is None:
            lock = _PATH_LOCKS[path] = threading.Lock()
        return lock


def atomic_write_bytes(path: Path, data: bytes) -> None:
    path = path.resolve()
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with _lock_for(path):
        try:
            tmp.write_bytes(data)
            os.replace(tmp, path)
        except Exception:
            with contextlib.suppress(FileNotFoundError):
                tmp.unlink()
            raise


class ArtifactWriter:
    """Writes the artifacts of one run below ``out_dir`` and records them."""

    def __init__(self, out_dir: Path, meta: ArtifactMeta) -> None:
        self.out_dir = Path(out_dir)
        self.meta = meta
        self._entries: list[ManifestEntry] = []
        self._lock = threading.Lock()

    def _record(self, name: str, kind: str) -> Path:
        with self._lock:
            if all(e.name != name for e in self._entries):
                self._entries.append(ManifestEntry(name=name, kind=kind))  # type: ignore[arg-type]
        return self.out_dir / name

    @property
    def artifacts(self) -> list[str]:
        return [e.name for e in self._entries]

    def write_csv(self, name: str, report: ExperimentReport) -> Path:
        path = self._record(name, "csv")
        atomic_write_bytes(path, report.to_csv(self.meta).encode("utf-8"))
        _logger.debug("artifact:csv path=%s rows=%d", os.fspath(path), len(report.rows))
        return path

    def write_json(self, name: str, payload: Mapping[str, Any]) -> Path:
        path = self._record(name, "json")
        body = dict(payload)
        body["meta"] = self.meta.model_dump(mode="json")
        atomic_write_bytes(path, dumps_canonical(body).encode("utf-8"))
        _logger.debug("artifact:json path=%s", os.fspath(path))
        return path

    def write_summary(self, name: str, report: ExperimentReport) -> Path:
        return self.write_json(name, report.to_json_payload())

    def write_binary(self, name: str, data: bytes) -> Path:
        path = self._record(name, "tfbin")
        atomic_write_bytes(path, data)
        return path

    def write_manifest(self, *, exit_code: int, passed: bool | None) -> Path:
        manifest = RunManifest(
            meta=self.meta,
            created_at=datetime.now(UTC).isoformat(timespec="seconds"),
            exit_code=exit_code,
            passed=passed,
            artifacts=list(self._entries),
        )
        path = self.out_dir / "manifest.json"
        atomic_write_bytes(
            path, (json.dumps(manifest.model_dump(mode="json"), indent=2) + "\n").encode()
        )
        return path


def merge_reports(name: str, reports: Sequence[ExperimentReport], *, key: str) -> ExperimentReport:
    """Stack reports sharing a column layout; their summaries are kept as a list under ``key``."""

    if not reports:
        raise ValueError("nothing to merge")
    columns = reports[0].columns
    rows: list[tuple[Cell, ...]] = []
    for rep in reports:
        if rep.columns != columns:
            raise ValueError(f"column mismatch merging {rep.name}")
        rows.extend(rep.rows)
    return ExperimentReport(
        name=name,
        columns=columns,
        rows=tuple(rows),
        passed=all(r.passed for r in reports),
        summary={key: [dict(r.summary) for r in reports]},
    )


__all__ = [
    "ArtifactWriter",
    "ExperimentReport",
    "atomic_write_bytes",
    "dumps_canonical",
    "format_cell",
    "merge_reports",
]
