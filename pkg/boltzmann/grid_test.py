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

import math

import numpy as np
import pytest

from boltzmann.errors import GridMismatchError, InvalidParamsError
from boltzmann.grid import (
    AngularQuadrature,
    DistributionField,
    DistributionSlice,
    MomentumGrid,
    clamp_to_bounds,
    trilinear_matrix,
)
from models import StatisticsKind


def test_momentum_grid_layout():
    grid = MomentumGrid(pmax=3.0, n=6)
    assert grid.size == 216
    assert grid.h == pytest.approx(1.0)
    assert grid.cell_volume == pytest.approx(1.0)
    np.testing.assert_allclose(grid.axis, [-2.5, -1.5, -0.5, 0.5, 1.5, 2.5])
    np.testing.assert_array_equal(grid.axis, -grid.axis[::-1])

    idx = grid.flat_index(1, 2, 3)
    np.testing.assert_allclose(grid.nodes[idx], [-1.5, -0.5, 0.5])
    # flat index reversal is p -> -p
    np.testing.assert_array_equal(grid.nodes[::-1], -grid.nodes)
    np.testing.assert_allclose(grid.p0, np.sqrt(1.0 + np.sum(grid.nodes**2, axis=1)))


@pytest.mark.parametrize("pmax, n", [(0.0, 6), (-1.0, 6), (3.0, 5), (3.0, 2)])
def test_momentum_grid_rejects(pmax, n):
    with pytest.raises(InvalidParamsError):
        MomentumGrid(pmax=pmax, n=n)


def test_grid_integration():
    grid = MomentumGrid(pmax=2.0, n=4)
    assert grid.integrate(np.ones(grid.size)) == pytest.approx(64.0)
    f = np.arange(grid.size, dtype=float)
    assert grid.inner(f, f) == pytest.approx(grid.norm(f) ** 2)


@pytest.mark.parametrize("ntheta, nphi", [(1, 2), (4, 4), (6, 8), (16, 16)])
def test_angular_quadrature(ntheta, nphi):
    quad = AngularQuadrature(ntheta=ntheta, nphi=nphi)
    assert quad.size == ntheta * nphi
    assert np.sum(quad.weights) == pytest.approx(4.0 * math.pi, rel=1e-12)
    np.testing.assert_allclose(np.linalg.norm(quad.directions, axis=1), 1.0)

    reflected = quad.reflected_index()
    np.testing.assert_array_equal(quad.directions[reflected], -quad.directions)
    np.testing.assert_array_equal(quad.weights[reflected], quad.weights)


def test_angular_quadrature_integrates_polynomials():
    quad = AngularQuadrature(ntheta=4, nphi=8)
    x, y, z = quad.directions.T
    assert np.sum(quad.weights * z**2) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-12)
    assert np.sum(quad.weights * x * y) == pytest.approx(0.0, abs=1e-12)
    assert np.sum(quad.weights * x**2) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-12)


@pytest.mark.parametrize("ntheta, nphi", [(0, 4), (4, 3), (4, 0)])
def test_angular_quadrature_rejects(ntheta, nphi):
    with pytest.raises(InvalidParamsError):
        AngularQuadrature(ntheta=ntheta, nphi=nphi)


def test_trilinear_at_nodes():
    grid = MomentumGrid(pmax=2.0, n=4)
    values = np.random.default_rng(1).uniform(size=grid.size)
    W = trilinear_matrix(grid, grid.nodes)
    np.testing.assert_array_equal(W @ values, values)


def test_trilinear_reproduces_linear_fields():
    grid = MomentumGrid(pmax=3.0, n=6)
    linear = 1.0 + 2.0 * grid.nodes[:, 0] - grid.nodes[:, 1] + 0.5 * grid.nodes[:, 2]
    inner = grid.pmax - 0.5 * grid.h
    points = np.random.default_rng(2).uniform(-inner, inner, size=(100, 3))
    expected = 1.0 + 2.0 * points[:, 0] - points[:, 1] + 0.5 * points[:, 2]
    np.testing.assert_allclose(trilinear_matrix(grid, points) @ linear, expected, atol=1e-12)


def test_trilinear_outside_domain():
    grid = MomentumGrid(pmax=2.0, n=4)
    W = trilinear_matrix(grid, [[2.5, 0.0, 0.0], [0.0, -3.0, 0.0], [0.0, 0.0, 0.0]])
    assert W.getrow(0).nnz == 0
    assert W.getrow(1).nnz == 0
    assert W.getrow(2).sum() == pytest.approx(1.0)


def test_trilinear_zero_beyond_outer_nodes():
    grid = MomentumGrid(pmax=2.0, n=4)
    values = np.ones(grid.size)
    # halfway between the outermost node (1.5) and the boundary
    W = trilinear_matrix(grid, [[1.75, 0.5, 0.5]])
    assert (W @ values)[0] == pytest.approx(0.75)


def test_distribution_slice():
    grid = MomentumGrid(pmax=2.0, n=4)
    F = DistributionSlice(np.full(grid.size, 0.5), "fermion", grid)
    assert F.stats is StatisticsKind.FERMION
    assert F.is_admissible()
    assert not F.with_values(np.full(grid.size, 1.5)).is_admissible()
    assert F.with_values(np.full(grid.size, 1.5)).grid == grid

    with pytest.raises(GridMismatchError):
        DistributionSlice(np.zeros(10), StatisticsKind.BOSON, grid)


def test_distribution_field():
    grid = MomentumGrid(pmax=2.0, n=4)
    field = DistributionField(np.zeros((8, grid.size)), StatisticsKind.BOSON, grid)
    assert field.nx == 8
    assert field.dx == pytest.approx(2.0 * math.pi / 8)
    assert field.cell(3).values.shape == (grid.size,)
    assert DistributionField(np.zeros(grid.size), StatisticsKind.BOSON, grid).dx == 1.0

    copy = field.copy()
    copy.values[0, 0] = 1.0
    assert field.values[0, 0] == 0.0

    with pytest.raises(GridMismatchError):
        DistributionField(np.zeros((2, 7)), StatisticsKind.BOSON, grid)


def test_clamp_to_bounds():
    values = np.array([-0.1, 0.5, 1.2])
    np.testing.assert_array_equal(
        clamp_to_bounds(values, StatisticsKind.FERMION), [0.0, 0.5, 1.0]
    )
    np.testing.assert_array_equal(clamp_to_bounds(values, StatisticsKind.BOSON), [0.0, 0.5, 1.2])
