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

from boltzmann.collision import (
    CollisionKernel,
    CollisionOperator,
    collision_geometry,
    conserve_moments,
    interpolate_offgrid,
)
from boltzmann.equilibrium import equilibrium_m, make_params
from boltzmann.errors import GridMismatchError
from boltzmann.grid import AngularQuadrature, DistributionSlice, MomentumGrid
from boltzmann.kinematics import energy
from boltzmann.projection import invariants
from models import StatisticsKind

FERMION = StatisticsKind.FERMION
BOSON = StatisticsKind.BOSON


@pytest.fixture(scope="module")
def grid():
    return MomentumGrid(pmax=4.5, n=6)


@pytest.fixture(scope="module")
def angular():
    return AngularQuadrature(ntheta=2, nphi=4)


@pytest.fixture(scope="module")
def operator(grid, angular):
    return CollisionOperator(CollisionKernel(grid, angular, threads=1, cache_mb=512))


def equilibrium_slice(grid, a=1.0, c=0.0, stats=FERMION):
    params = make_params(a, c, stats)
    return DistributionSlice(equilibrium_m(params, grid.nodes), stats, grid, background=params)


def random_slice(grid, stats, seed=0, background=None):
    values = np.random.default_rng(seed).uniform(0.0, 0.9, size=grid.size)
    return DistributionSlice(values, stats, grid, background=background)


def test_geometry_conserves_momentum_and_energy(grid, angular):
    p_out = grid.nodes[:5]
    p_prime, q_prime, weight = collision_geometry(p_out, grid.nodes, angular)
    assert p_prime.shape == (5, grid.size, angular.size, 3)
    assert weight.shape == (5, grid.size, angular.size)
    assert np.all(weight >= 0.0)

    total = p_out[:, None, None, :] + grid.nodes[None, :, None, :]
    np.testing.assert_allclose(p_prime + q_prime, total, atol=1e-12)
    before = energy(p_out)[:, None, None] + grid.p0[None, :, None]
    np.testing.assert_allclose(energy(p_prime) + energy(q_prime), before, rtol=1e-12)


def test_kernel_blocks_cover_outputs(grid, angular):
    kernel = CollisionKernel(grid, angular, cache_mb=0)
    rows = np.concatenate(kernel.block_rows)
    np.testing.assert_array_equal(rows, np.arange(grid.size))
    assert len(kernel.block_rows) > 1


@pytest.mark.parametrize("stats, c", [(FERMION, 0.0), (BOSON, 0.5)])
def test_q_vanishes_at_equilibrium(operator, grid, stats, c):
    F = equilibrium_slice(grid, 1.0, c, stats)
    Q = operator.evaluate_Q(F, F, F, F)
    G, R = operator.gain_loss(F)
    scale = np.max(G * (1.0 + stats.tau * F.values))
    assert np.max(np.abs(Q)) <= 1e-10 * scale
    np.testing.assert_allclose(G * (1.0 + stats.tau * F.values), R * F.values, rtol=1e-10)


def test_q_of_zero_is_zero(operator, grid):
    F = DistributionSlice(np.zeros(grid.size), FERMION, grid)
    np.testing.assert_array_equal(operator.evaluate_Q(F, F, F, F), 0.0)
    G, R = operator.gain_loss(F)
    np.testing.assert_array_equal(G, 0.0)
    np.testing.assert_array_equal(R, 0.0)


def test_pauli_blocking_at_saturation(operator, grid):
    F = DistributionSlice(np.ones(grid.size), FERMION, grid)
    G = operator.evaluate_G(F)
    np.testing.assert_array_equal(G, 0.0)
    assert np.all(operator.apply_Q(F) <= 0.0)


@pytest.mark.parametrize("stats", [FERMION, BOSON])
@pytest.mark.parametrize("with_background", [False, True])
def test_gain_loss_identity(operator, grid, stats, with_background):
    background = make_params(1.0, 0.5, stats) if with_background else None
    F = random_slice(grid, stats, seed=3, background=background)
    G, R = operator.gain_loss(F)
    assert np.all(G >= 0.0)
    assert np.all(R >= 0.0)

    Q = operator.evaluate_Q(F, F, F, F)
    gain = G * (1.0 + stats.tau * F.values)
    loss = R * F.values
    np.testing.assert_allclose(Q, gain - loss, atol=1e-10 * np.max(np.abs(gain) + np.abs(loss)))
    np.testing.assert_allclose(operator.apply_Q(F), gain - loss)


def test_pointwise_evaluation(operator, grid):
    F = random_slice(grid, FERMION, seed=8)
    Q = operator.evaluate_Q(F, F, F, F)
    assert operator.evaluate_Q(F, F, F, F, p=17) == Q[17]
    assert isinstance(operator.evaluate_G(F, p=17), float)
    assert operator.evaluate_R(F, p=17) == operator.gain_loss(F)[1][17]


def test_results_independent_of_threads(grid, angular):
    F = random_slice(grid, BOSON, seed=5)
    serial = CollisionOperator(CollisionKernel(grid, angular, threads=1, cache_mb=0))
    threaded = CollisionOperator(CollisionKernel(grid, angular, threads=3, cache_mb=512))
    np.testing.assert_array_equal(serial.apply_Q(F), threaded.apply_Q(F))
    # second call reuses the cached blocks
    np.testing.assert_array_equal(serial.apply_Q(F), threaded.apply_Q(F))


def test_invariants_residual_at_equilibrium(operator, grid):
    residual = operator.collision_invariants_residual(equilibrium_slice(grid))
    assert residual.scale > 0.0
    assert np.max(np.abs(residual.relative)) <= 1e-8
    assert residual.raw.shape == (5,)
    assert residual.momentum.shape == (3,)


def test_invariants_residual_of_perturbed_state(operator, grid):
    params = make_params(1.0, 0.0, FERMION)
    m = equilibrium_m(params, grid.nodes)
    bump = np.exp(-np.sum((grid.nodes - [0.5, 0.0, 0.0]) ** 2, axis=1))
    F = DistributionSlice(m * (1.0 + 0.1 * bump), FERMION, grid, background=params)
    residual = operator.collision_invariants_residual(F)
    assert np.all(np.isfinite(residual.raw))
    assert np.all(np.abs(residual.relative) < 1.0)


def bump_residual(n, ntheta, nphi):
    grid = MomentumGrid(pmax=3.0, n=n)
    operator = CollisionOperator(CollisionKernel(grid, AngularQuadrature(ntheta=ntheta, nphi=nphi)))
    params = make_params(1.0, 0.0, FERMION)
    m = equilibrium_m(params, grid.nodes)
    bump = np.exp(-0.25 * np.sum((grid.nodes - [0.5, 0.0, 0.0]) ** 2, axis=1))
    F = DistributionSlice(m * (1.0 + 0.1 * bump), FERMION, grid, background=params)
    return float(np.max(np.abs(operator.collision_invariants_residual(F).relative)))


def test_invariants_residual_shrinks_under_refinement():
    coarse = bump_residual(4, 2, 4)
    fine = bump_residual(6, 4, 8)
    assert 0.0 < fine < coarse


def test_mismatched_slices(operator, grid):
    F = random_slice(grid, FERMION)
    other = DistributionSlice(np.zeros(64), FERMION, MomentumGrid(pmax=2.0, n=4))
    with pytest.raises(GridMismatchError):
        operator.evaluate_Q(F, F, F, other)
    with pytest.raises(GridMismatchError):
        operator.evaluate_Q(F, F, F, random_slice(grid, BOSON))
    with pytest.raises(GridMismatchError):
        operator.gain_loss(other)


def test_operator_needs_grid_outputs(grid, angular):
    kernel = CollisionKernel(grid, angular, outputs=np.zeros((2, 3)))
    with pytest.raises(GridMismatchError):
        CollisionOperator(kernel)


def test_interpolate_offgrid(grid):
    linear = 10.0 + grid.nodes[:, 0] - 0.5 * grid.nodes[:, 2]
    F = DistributionSlice(linear, BOSON, grid)
    assert interpolate_offgrid(F, grid.nodes[40]) == linear[40]
    assert interpolate_offgrid(F, [10.0, 0.0, 0.0]) == 0.0

    points = np.random.default_rng(6).uniform(-3.75, 3.75, size=(20, 3))
    expected = 10.0 + points[:, 0] - 0.5 * points[:, 2]
    np.testing.assert_allclose(interpolate_offgrid(F, points), expected, atol=1e-12)


def test_interpolate_offgrid_clamps(grid):
    values = np.where(np.arange(grid.size) % 2 == 0, 1.0, 0.0)
    F = DistributionSlice(values, FERMION, grid)
    points = np.random.default_rng(9).uniform(-4.5, 4.5, size=(50, 3))
    out = interpolate_offgrid(F, points)
    assert np.all((out >= 0.0) & (out <= 1.0))


def test_interpolate_offgrid_with_background(grid):
    params = make_params(1.0, 0.0, FERMION)
    m = equilibrium_m(params, grid.nodes)
    values = m * (1.0 + 0.2 * np.cos(grid.nodes[:, 1]))
    F = DistributionSlice(values, FERMION, grid, background=params)
    np.testing.assert_allclose(interpolate_offgrid(F, grid.nodes), values, rtol=1e-12)

    far = np.array([[6.0, 0.0, 0.0], [0.0, -7.0, 1.0]])
    F_eq = DistributionSlice(m, FERMION, grid, background=params)
    np.testing.assert_allclose(interpolate_offgrid(F_eq, far), equilibrium_m(params, far))


def test_conserve_moments(grid):
    params = make_params(1.0, 0.0, FERMION)
    reference = equilibrium_m(params, grid.nodes)
    noise = np.random.default_rng(2).uniform(-0.01, 0.01, size=grid.size)
    values = reference * (1.0 + noise)
    corrected = conserve_moments(values, reference, grid, FERMION)
    psi = invariants(grid.nodes, grid.p0)
    want = grid.integrate(reference[:, None] * psi, axis=0)
    got = grid.integrate(corrected[:, None] * psi, axis=0)
    np.testing.assert_allclose(got, want, atol=1e-12 * grid.integrate(reference * grid.p0))

    empty = np.zeros(grid.size)
    np.testing.assert_array_equal(conserve_moments(empty, reference, grid, FERMION), empty)
