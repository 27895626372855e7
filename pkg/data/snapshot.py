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

"""Binary snapshots of a distribution field.

Layout (little-endian, no padding): magic ``RQBK``, u32 version, i8 stats,
f64 a, f64 c, 3 x u32 grid dims, f64 pmax, u32 nx, f64 time, then nx * N
f64 values, x-major and p-lexicographic within a cell.
"""

from pathlib import Path
from typing import Union

import numpy as np

from boltzmann.errors import SnapshotFormatError
from boltzmann.grid import DistributionField, MomentumGrid
from boltzmann.solver import State
from models import EquilibriumParams, SnapshotHeader, StatisticsKind

MAGIC = b"RQBK"
VERSION = 1

HEADER_DTYPE = np.dtype(
    [
        ("magic", "S4"),
        ("version", "<u4"),
        ("stats", "i1"),
        ("a", "<f8"),
        ("c", "<f8"),
        ("dims", "<u4", (3,)),
        ("pmax", "<f8"),
        ("nx", "<u4"),
        ("time", "<f8"),
    ]
)
VALUE_DTYPE = np.dtype("<f8")


def encode_snapshot(header: SnapshotHeader, values: np.ndarray) -> bytes:
    values = np.ascontiguousarray(values, dtype=VALUE_DTYPE)
    expected = (header.nx, int(np.prod(header.dims)))
    if values.shape != expected:
        raise SnapshotFormatError(f"values have shape {values.shape}, header says {expected}")
    head = np.zeros((), dtype=HEADER_DTYPE)
    head["magic"] = MAGIC
    head["version"] = header.version
    head["stats"] = int(header.stats)
    head["a"] = header.a
    head["c"] = header.c
    head["dims"] = header.dims
    head["pmax"] = header.pmax
    head["nx"] = header.nx
    head["time"] = header.time
    return head.tobytes() + values.tobytes()


def decode_snapshot(data: bytes) -> tuple[SnapshotHeader, np.ndarray]:
    if len(data) < HEADER_DTYPE.itemsize:
        raise SnapshotFormatError("snapshot is shorter than its header")
    head = np.frombuffer(data, dtype=HEADER_DTYPE, count=1)[0]
    if bytes(head["magic"]) != MAGIC:
        raise SnapshotFormatError("not a snapshot file (bad magic)")
    if int(head["version"]) != VERSION:
        raise SnapshotFormatError(f"unsupported snapshot version {int(head['version'])}")
    try:
        header = SnapshotHeader(
            version=int(head["version"]),
            stats=StatisticsKind(int(head["stats"])),
            a=float(head["a"]),
            c=float(head["c"]),
            dims=tuple(int(d) for d in head["dims"]),
            pmax=float(head["pmax"]),
            nx=int(head["nx"]),
            time=float(head["time"]),
        )
    except ValueError as e:
        raise SnapshotFormatError(f"corrupt snapshot header: {e}") from e
    count = header.nx * int(np.prod(header.dims))
    body = data[HEADER_DTYPE.itemsize :]
    if len(body) != count * VALUE_DTYPE.itemsize:
        raise SnapshotFormatError(
            f"snapshot body has {len(body)} bytes, expected {count * VALUE_DTYPE.itemsize}"
        )
    values = np.frombuffer(body, dtype=VALUE_DTYPE).astype(float).reshape(header.nx, -1)
    return header, values


def write_snapshot(path: Union[str, Path], header: SnapshotHeader, values: np.ndarray) -> None:
    Path(path).write_bytes(encode_snapshot(header, values))


def read_snapshot(path: Union[str, Path]) -> tuple[SnapshotHeader, np.ndarray]:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise SnapshotFormatError(f"cannot read snapshot {path}: {e}") from e
    return decode_snapshot(data)


def state_header(state: State) -> SnapshotHeader:
    F = state.F
    if F.background is None:
        raise SnapshotFormatError("state has no reference equilibrium to record")
    n = F.grid.n
    return SnapshotHeader(
        version=VERSION,
        stats=F.stats,
        a=F.background.a,
        c=F.background.c,
        dims=(n, n, n),
        pmax=F.grid.pmax,
        nx=F.nx,
        time=state.t,
    )


def save_state(path: Union[str, Path], state: State) -> None:
    write_snapshot(path, state_header(state), state.F.values)


def load_state(path: Union[str, Path]) -> State:
    header, values = read_snapshot(path)
    n = header.dims[0]
    if header.dims != (n, n, n):
        raise SnapshotFormatError(f"grid dims {header.dims} are not cubic")
    grid = MomentumGrid(pmax=header.pmax, n=n)
    try:
        params = EquilibriumParams(a=header.a, c=header.c, stats=header.stats)
    except ValueError as e:
        raise SnapshotFormatError(f"snapshot equilibrium is invalid: {e}") from e
    field = DistributionField(values, header.stats, grid, background=params)
    return State(field, header.time)


def save_matrix(
    path: Union[str, Path], matrix: np.ndarray, params: EquilibriumParams, grid: MomentumGrid
) -> None:
    """A square operator on the grid in snapshot layout, one row per 'cell'."""
    header = SnapshotHeader(
        version=VERSION,
        stats=params.stats,
        a=params.a,
        c=params.c,
        dims=(grid.n, grid.n, grid.n),
        pmax=grid.pmax,
        nx=grid.size,
        time=0.0,
    )
    write_snapshot(path, header, matrix)
