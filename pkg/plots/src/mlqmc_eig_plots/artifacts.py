"""Loaders for the versioned CSV artifacts written by the mlqmc-eig CLI.

The loader is strict: the version comment line and every documented column
must be present, otherwise it fails loudly with :class:`SchemaError`.
Columns are keyed by name, so extra columns are tolerated (schemas may
append fields in later versions).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

VERSION_PREFIX = "# mlqmc-eig csv"

REQUIRED_COLUMNS = {
    "levels": ["ell", "h", "s", "N", "R", "mean", "variance", "cost_seconds"],
    "summary": ["quantity", "total", "bias_estimate", "stat_error", "cost_total"],
    "adapt_trace": ["step", "ell_doubled", "N_after", "var_sum", "bias_est"],
    "rates": ["quantity", "fit", "slope"],
}

TEXT_COLUMNS = {"quantity", "fit"}


class SchemaError(ValueError):
    """The file does not carry the expected versioned schema."""


def load_table(path, kind: str) -> dict[str, np.ndarray]:
    """Parse one versioned CSV into named columns."""
    if kind not in REQUIRED_COLUMNS:
        raise ValueError(f"unknown table kind {kind!r}")
    path = Path(path)
    with open(path, newline="") as fh:
        first = fh.readline().rstrip("\n")
        expected = f"{VERSION_PREFIX} {kind} v1"
        if first != expected:
            raise SchemaError(f"{path}: bad version line {first!r}, expected {expected!r}")
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: missing header row") from None
        missing = [c for c in REQUIRED_COLUMNS[kind] if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {missing}")
        rows = [row for row in reader if row]
    table: dict[str, np.ndarray] = {}
    for j, name in enumerate(header):
        values = [row[j] for row in rows]
        if name in TEXT_COLUMNS:
            table[name] = np.array(values, dtype=object)
        else:
            try:
                table[name] = np.array([float(v) for v in values])
            except ValueError as err:
                raise SchemaError(f"{path}: non-numeric value in {name}: {err}") from err
    return table


@dataclass
class RunArtifacts:
    """Everything a run directory exposes to the figure renderers."""

    path: Path
    levels: dict[str, np.ndarray] | None
    levels_functional: dict[str, np.ndarray] | None
    summary: dict[str, np.ndarray] | None
    adapt_trace: dict[str, np.ndarray] | None
    rates: dict[str, np.ndarray] | None
    manifest: dict | None

    @classmethod
    def load(cls, run_dir) -> "RunArtifacts":
        run_dir = Path(run_dir)
        if not run_dir.is_dir():
            raise FileNotFoundError(f"run directory {run_dir} does not exist")

        def maybe(name: str, kind: str):
            p = run_dir / name
            return load_table(p, kind) if p.exists() else None

        manifest = None
        mpath = run_dir / "manifest.json"
        if mpath.exists():
            manifest = json.loads(mpath.read_text())
        art = cls(
            path=run_dir,
            levels=maybe("levels.csv", "levels"),
            levels_functional=maybe("levels_functional.csv", "levels"),
            summary=maybe("summary.csv", "summary"),
            adapt_trace=maybe("adapt_trace.csv", "adapt_trace"),
            rates=maybe("rates.csv", "rates"),
            manifest=manifest,
        )
        if art.levels is None and art.summary is None:
            raise SchemaError(f"{run_dir}: no mlqmc-eig artifacts found")
        return art

    @property
    def eps(self) -> float | None:
        if self.manifest is None:
            return None
        return self.manifest.get("config", {}).get("run.eps")

    @property
    def mode(self) -> str | None:
        return None if self.manifest is None else self.manifest.get("mode")
