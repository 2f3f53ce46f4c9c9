"""Run records: one directory per run holding ``record.json`` and ``events.csv``.

The JSON header carries the growth parameters, seed, RNG algorithm and
provenance; the CSV carries one row per particle.  Floats are written with
17 significant digits, which round-trips every double exactly, so a record
can be replayed and compared bit-for-bit.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .errors import HLGrowthError
from .growth import RNG_ALGORITHM, ClusterState, GrowthParams, grow

FORMAT_VERSION = 1
EVENT_COLUMNS = ("k", "theta", "capacity", "slit_length", "cum_capacity")
_FMT = ["%d"] + ["%.17g"] * 4


class RecordError(HLGrowthError):
    """A run record is malformed or inconsistent."""


@dataclass
class RunRecord:
    params: GrowthParams
    seed: int
    thetas: np.ndarray
    capacities: np.ndarray
    slit_lengths: np.ndarray
    cumulative: np.ndarray
    metadata: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    @classmethod
    def from_state(cls, state: ClusterState, **extra) -> "RunRecord":
        meta = {
            "created": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
            "code_version": __version__,
            "rng_algorithm": RNG_ALGORITHM,
            "map_evaluations": int(state.map_evaluations),
        }
        meta.update(extra)
        return cls(state.params, int(state.seed), np.asarray(state.thetas),
                   np.asarray(state.capacities), np.asarray(state.slit_lengths),
                   np.asarray(state.cumulative), meta)

    def __len__(self) -> int:
        return int(self.thetas.size)

    def header(self) -> dict:
        return {
            "format_version": self.format_version,
            "params": self.params.to_dict(),
            "seed": self.seed,
            "n_events": len(self),
            "metadata": self.metadata,
        }


def _atomic_write(path: Path, write):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_record(record: RunRecord, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    table = np.column_stack([np.arange(1, len(record) + 1), record.thetas, record.capacities,
                             record.slit_lengths, record.cumulative])

    def events(fh):
        fh.write(",".join(EVENT_COLUMNS) + "\n")
        if len(record):
            np.savetxt(fh, table, fmt=_FMT, delimiter=",")

    _atomic_write(d / "events.csv", events)
    _atomic_write(d / "record.json",
                  lambda fh: fh.write(json.dumps(record.header(), indent=2, sort_keys=True) + "\n"))
    return d


def read_record(directory) -> RunRecord:
    d = Path(directory)
    try:
        header = json.loads((d / "record.json").read_text())
    except (OSError, ValueError) as exc:
        raise RecordError(f"cannot read {d / 'record.json'}: {exc}") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise RecordError(f"unsupported format version {header.get('format_version')!r}")
    with open(d / "events.csv") as fh:
        cols = fh.readline().strip().split(",")
        if tuple(cols) != EVENT_COLUMNS:
            raise RecordError(f"unexpected event columns {cols}")
        table = np.loadtxt(fh, delimiter=",", ndmin=2) if header["n_events"] else np.empty((0, 5))
    if table.shape[0] != header["n_events"]:
        raise RecordError(f"expected {header['n_events']} events, found {table.shape[0]}")
    return RunRecord(GrowthParams.from_dict(header["params"]), int(header["seed"]),
                     table[:, 1].copy(), table[:, 2].copy(), table[:, 3].copy(),
                     table[:, 4].copy(), header.get("metadata", {}), header["format_version"])


def save_state(state: ClusterState, directory, **extra) -> Path:
    return write_record(RunRecord.from_state(state, **extra), directory)


def record_to_state(record: RunRecord) -> ClusterState:
    return ClusterState(params=record.params, seed=record.seed, thetas=record.thetas.copy(),
                        capacities=record.capacities.copy(),
                        slit_lengths=record.slit_lengths.copy(),
                        cumulative=record.cumulative.copy())


@dataclass(frozen=True)
class ReplayResult:
    match: bool
    first_mismatch: Optional[int] = None   # 1-based particle index
    column: Optional[str] = None
    detail: str = ""


def compare_events(record: RunRecord, state: ClusterState) -> ReplayResult:
    if len(record) != len(state):
        k = min(len(record), len(state)) + 1
        return ReplayResult(False, k, "k", f"event count {len(record)} != {len(state)}")
    pairs = (("theta", record.thetas, state.thetas),
             ("capacity", record.capacities, state.capacities),
             ("slit_length", record.slit_lengths, state.slit_lengths),
             ("cum_capacity", record.cumulative, state.cumulative))
    first, col = None, None
    for name, a, b in pairs:
        bad = np.flatnonzero(a.view(np.uint64) != np.asarray(b).view(np.uint64))
        if bad.size and (first is None or bad[0] + 1 < first):
            first, col = int(bad[0]) + 1, name
    if first is None:
        return ReplayResult(True, detail=f"{len(record)} events match")
    return ReplayResult(False, first, col, f"first difference at particle {first} ({col})")


def replay(directory) -> ReplayResult:
    """Regrow from the recorded (params, seed) and compare bit-for-bit."""
    record = read_record(directory)
    algo = record.metadata.get("rng_algorithm", RNG_ALGORITHM)
    if algo != RNG_ALGORITHM:
        return ReplayResult(False, detail=f"record uses RNG {algo!r}, have {RNG_ALGORITHM!r}")
    return compare_events(record, grow(record.params, record.seed))
