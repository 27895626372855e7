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

"""CSV files written by the command line: diagnostics rows and report tables."""

import csv
from pathlib import Path
from typing import Any, Iterable, Sequence, Union

import pandas as pd

from models import DiagnosticsRecord

COLUMNS = list(DiagnosticsRecord.model_fields)
FLOAT_FORMAT = "%.17g"

PathLike = Union[str, Path]


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return FLOAT_FORMAT % value
    return str(value)


class DiagnosticsWriter:
    """Appends records to a diagnostics CSV, writing the header only once."""

    def __init__(self, path: PathLike, append: bool = False):
        self.path = Path(path)
        if not append or not self.path.exists() or self.path.stat().st_size == 0:
            with open(self.path, "w", newline="", encoding="utf-8") as f:
                csv.writer(f, lineterminator="\n").writerow(COLUMNS)

    def write(self, record: DiagnosticsRecord) -> None:
        with open(self.path, "a", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, COLUMNS, delimiter=",", lineterminator="\n")
            writer.writerow({k: _format(v) for k, v in record.model_dump().items()})


def write_diagnostics_csv(
    path: PathLike, records: Iterable[DiagnosticsRecord], append: bool = False
) -> None:
    writer = DiagnosticsWriter(path, append=append)
    for record in records:
        writer.write(record)


def read_diagnostics_csv(path: PathLike) -> list[DiagnosticsRecord]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f, delimiter=",")
        return [DiagnosticsRecord.model_validate(row) for row in reader]


def diagnostics_frame(path: PathLike) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")


def write_table(path: PathLike, rows: Sequence[dict[str, Any]], columns: Sequence[str]) -> None:
    """A report table (oracle, spectrum, bench) with the same float format."""
    frame = pd.DataFrame(list(rows), columns=list(columns))
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
