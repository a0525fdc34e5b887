import hashlib
import json

import pytest

from zaremba import io
from zaremba.cli import run


def _run(tmp_path, command, cfg, name="out", svg=False):
    conf = tmp_path / f"{name}.json"
    conf.write_text(cfg if isinstance(cfg, str) else json.dumps(cfg))
    out = tmp_path / name
    argv = [command, "--config", str(conf), "--out", str(out)] + (["--svg"] if svg else [])
    return run(argv), out


SOLVE = {"domain": {"preset": "halfspace", "extent": 0.5, "depth": 1.0}, "grid": {"h": 0.125},
         "data": {"phi": 1.0}}


def test_capacity_and_manifest(tmp_path):
    code, out = _run(tmp_path, "capacity", {"s": 1, "cloud": {"type": "sphere", "n_atoms": 200}})
    assert code == 0
    header, rows = io.read_csv(out / "capacity.csv")
    assert header[:3] == ["set_id", "s", "value"]
    assert 0.95 < float(rows[0][2]) < 1.05
    man = json.loads((out / "manifest.json").read_text())
    assert man["status"] == "ok" and man["command"] == "capacity"
    for entry in man["outputs"]:
        data = (out / entry["file"]).read_bytes()
        assert hashlib.sha256(data).hexdigest() == entry["sha256"]


def test_rerun_is_byte_identical(tmp_path):
    _, a = _run(tmp_path, "solve", SOLVE, "a")
    _, b = _run(tmp_path, "solve", SOLVE, "b")
    for name in ("solution.csv", "summary.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_barrier_command(tmp_path):
    code, out = _run(tmp_path, "barrier", {"L": 0, "alpha": 0.25, "s": 1})
    assert code == 0
    header, rows = io.read_csv(out / "barrier.csv")
    row = dict(zip(header, rows[0]))
    assert float(row["a"]) == pytest.approx(1.0823922, abs=1e-6)


def test_solve_with_svg(tmp_path):
    code, out = _run(tmp_path, "solve", SOLVE, svg=True)
    assert code == 0
    assert (out / "solution.svg").read_text().lstrip().startswith("<?xml")


@pytest.mark.parametrize("text", ["", "{}", "[1, 2]", "{not json"])
def test_empty_or_malformed_config(tmp_path, text):
    code, out = _run(tmp_path, "capacity", text)
    assert code == 2
    assert json.loads((out / "error.json").read_text())["status"] == "invalid"


def test_field_level_errors(tmp_path):
    code, out = _run(tmp_path, "capacity", {"s": "x", "cloud": {"type": "blob"}})
    assert code == 2
    errors = json.loads((out / "error.json").read_text())["errors"]
    assert "s" in errors and "cloud.type" in errors


def test_command_mismatch(tmp_path):
    code, _ = _run(tmp_path, "solve", dict(SOLVE, command="capacity"))
    assert code == 2


def test_runtime_failure_exit_one(tmp_path):
    code, out = _run(tmp_path, "chain", {"domain": {"preset": "halfspace"}, "layer": {"R": 1}})
    assert code == 1
    rec = json.loads((out / "error.json").read_text())
    assert rec["status"] == "error" and rec["type"] == "ChainError"
