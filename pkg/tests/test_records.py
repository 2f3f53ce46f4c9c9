import json

import numpy as np
import pytest

from hlgrowth.growth import GrowthParams, grow
from hlgrowth.records import (
    EVENT_COLUMNS,
    RecordError,
    RunRecord,
    compare_events,
    read_record,
    record_to_state,
    replay,
    save_state,
    write_record,
)


@pytest.fixture
def state():
    return grow(GrowthParams(1e-3, 1.0, "sigma", 0.2, particles=120), 7)


def test_round_trip_exact(state, tmp_path):
    save_state(state, tmp_path / "a")
    rec = read_record(tmp_path / "a")
    assert rec.params == state.params and rec.seed == 7
    for name in ("thetas", "capacities", "slit_lengths", "cumulative"):
        assert getattr(rec, name).tobytes() == getattr(state, name).tobytes()
    assert rec.metadata["map_evaluations"] == state.map_evaluations
    assert rec.metadata["rng_algorithm"] == "numpy.random.PCG64"


def test_write_read_write_byte_identical(state, tmp_path):
    save_state(state, tmp_path / "a")
    write_record(read_record(tmp_path / "a"), tmp_path / "b")
    for f in ("record.json", "events.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_csv_layout(state, tmp_path):
    save_state(state, tmp_path / "a")
    lines = (tmp_path / "a" / "events.csv").read_text().splitlines()
    assert tuple(lines[0].split(",")) == EVENT_COLUMNS
    assert len(lines) == 121 and lines[1].startswith("1,")


def test_empty_record(tmp_path):
    s = grow(GrowthParams(1e-3, 1.0, "starred", particles=0), 0)
    save_state(s, tmp_path / "e")
    assert len(read_record(tmp_path / "e")) == 0
    assert replay(tmp_path / "e").match


def test_replay_match_and_mutation(state, tmp_path):
    d = save_state(state, tmp_path / "a")
    assert replay(d).match
    rec = read_record(d)
    caps = rec.capacities.copy()
    caps[41] = np.nextafter(caps[41], 1.0)
    rec.capacities = caps
    write_record(rec, d)
    res = replay(d)
    assert not res.match and res.first_mismatch == 42 and res.column == "capacity"


def test_compare_detects_length_change(state):
    rec = RunRecord.from_state(grow(GrowthParams(1e-3, 1.0, "sigma", 0.2, particles=100), 7))
    res = compare_events(rec, state)
    assert not res.match and res.first_mismatch == 101


def test_record_to_state(state):
    s = record_to_state(RunRecord.from_state(state))
    assert s.evaluate(1.5 + 0.1j, 120) == state.evaluate(1.5 + 0.1j, 120)


def test_malformed_records(state, tmp_path):
    with pytest.raises(RecordError):
        read_record(tmp_path / "missing")
    d = save_state(state, tmp_path / "a")
    head = json.loads((d / "record.json").read_text())
    head["format_version"] = 99
    (d / "record.json").write_text(json.dumps(head))
    with pytest.raises(RecordError):
        read_record(d)
    d = save_state(state, tmp_path / "b")
    rows = (d / "events.csv").read_text().splitlines()
    (d / "events.csv").write_text("\n".join(rows[:-1]) + "\n")
    with pytest.raises(RecordError):
        read_record(d)
