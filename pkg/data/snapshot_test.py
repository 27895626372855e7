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
import pytest

from boltzmann.equilibrium import make_params
from boltzmann.errors import SnapshotFormatError
from boltzmann.grid import DistributionField, MomentumGrid
from boltzmann.solver import State
from data.snapshot import (
    HEADER_DTYPE,
    VERSION,
    decode_snapshot,
    encode_snapshot,
    load_state,
    read_snapshot,
    save_matrix,
    save_state,
    state_header,
)
from models import SnapshotHeader, StatisticsKind


@pytest.fixture
def state():
    grid = MomentumGrid(pmax=2.0, n=4)
    values = np.random.default_rng(7).uniform(0.0, 1.0, size=(3, grid.size))
    params = make_params(1.5, -0.25, StatisticsKind.FERMION)
    return State(DistributionField(values, StatisticsKind.FERMION, grid, background=params), 1.25)


def test_header_layout():
    assert HEADER_DTYPE.itemsize == 4 + 4 + 1 + 8 + 8 + 12 + 8 + 4 + 8


def test_encode_decode(state):
    header = state_header(state)
    assert header.dims == (4, 4, 4)
    assert header.version == VERSION
    data = encode_snapshot(header, state.F.values)
    assert data[:4] == b"RQBK"
    assert len(data) == HEADER_DTYPE.itemsize + 3 * 64 * 8

    decoded, values = decode_snapshot(data)
    assert decoded == header
    np.testing.assert_array_equal(values, state.F.values)


def test_encode_rejects_wrong_shape(state):
    with pytest.raises(SnapshotFormatError):
        encode_snapshot(state_header(state), state.F.values[:2])


@pytest.mark.parametrize(
    "offset, byte, message",
    [(0, ord("X"), "bad magic"), (4, 2, "unsupported snapshot version"), (8, 0, "corrupt")],
)
def test_decode_rejects_bad_header(state, offset, byte, message):
    data = bytearray(encode_snapshot(state_header(state), state.F.values))
    data[offset] = byte
    with pytest.raises(SnapshotFormatError) as info:
        decode_snapshot(bytes(data))
    assert message in str(info.value)


def test_decode_rejects_bad_size(state):
    data = encode_snapshot(state_header(state), state.F.values)
    with pytest.raises(SnapshotFormatError):
        decode_snapshot(data[:-8])
    with pytest.raises(SnapshotFormatError):
        decode_snapshot(data[:10])


def test_save_and_load_state(tmp_path, state):
    path = tmp_path / "final.rqbk"
    save_state(path, state)
    loaded = load_state(path)
    assert loaded.t == state.t
    assert loaded.F.grid == state.F.grid
    assert loaded.F.stats is StatisticsKind.FERMION
    assert loaded.F.background == state.F.background
    np.testing.assert_array_equal(loaded.F.values, state.F.values)

    with pytest.raises(SnapshotFormatError):
        load_state(tmp_path / "missing.rqbk")


def test_state_needs_background(state):
    state.F.background = None
    with pytest.raises(SnapshotFormatError):
        state_header(state)


def test_save_matrix(tmp_path):
    grid = MomentumGrid(pmax=2.0, n=4)
    matrix = np.arange(grid.size**2, dtype=float).reshape(grid.size, grid.size)
    params = make_params(1.0, 0.5, StatisticsKind.BOSON)
    path = tmp_path / "L.rqbk"
    save_matrix(path, matrix, params, grid)
    header, values = read_snapshot(path)
    assert header == SnapshotHeader(
        version=VERSION,
        stats=StatisticsKind.BOSON,
        a=1.0,
        c=0.5,
        dims=(4, 4, 4),
        pmax=2.0,
        nx=grid.size,
        time=0.0,
    )
    np.testing.assert_array_equal(values, matrix)
