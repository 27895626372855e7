# Copyright 2026 The RQB Solver Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


import numpy as np
import pandas as pd

from data.diagnostics_csv import (
    COLUMNS,
    DiagnosticsWriter,
    diagnostics_frame,
    read_diagnostics_csv,
    write_diagnostics_csv,
    write_table,
)
from models import DiagnosticsRecord


def record(t: float) -> DiagnosticsRecord:
    return DiagnosticsRecord(
        t=t,
        mass=1.0 / 3.0,
        px=0.0,
        py=-1e-17,
        pz=2.5,
        energy=10.0 + t,
        H=-4.2,
        l2_f=np.exp(-t),
        nu_norm_f=0.1,
        min_F=0.0,
        max_F=0.75,
    )


def test_write_and_read(tmp_path):
    path = tmp_path / "diagnostics.csv"
    records = [record(0.0), record(0.1)]
    write_diagnostics_csv(path, records)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(COLUMNS)
    assert len(lines) == 3
    assert read_diagnostics_csv(path) == records


def test_writer_appends_without_second_header(tmp_path):
    path = tmp_path / "diagnostics.csv"
    DiagnosticsWriter(path).write(record(0.0))
    writer = DiagnosticsWriter(path, append=True)
    writer.write(record(0.5))
    lines = path.read_text(encoding="utf-8").splitlines()
    assert sum(line.startswith("t,") for line in lines) == 1
    assert [r.t for r in read_diagnostics_csv(path)] == [0.0, 0.5]

    # without append the file starts over
    DiagnosticsWriter(path)
    assert read_diagnostics_csv(path) == []


def test_diagnostics_frame(tmp_path):
    path = tmp_path / "diagnostics.csv"
    write_diagnostics_csv(path, [record(0.0), record(1.0)])
    frame = diagnostics_frame(path)
    assert list(frame.columns) == COLUMNS
    assert frame["mass"].iloc[0] == 1.0 / 3.0
    assert frame["l2_f"].iloc[1] == np.exp(-1.0)


def test_write_table(tmp_path):
    path = tmp_path / "oracle.csv"
    rows = [
        {"check": "pythagorean", "value": 1e-17, "passed": True},
        {"check": "cos_theta", "value": 0.1, "passed": False},
    ]
    write_table(path, rows, ["check", "value", "passed"])
    frame = pd.read_csv(path)
    assert list(frame["check"]) == ["pythagorean", "cos_theta"]
    assert list(frame["passed"]) == [True, False]
    assert frame["value"].iloc[1] == 0.1
