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

import logging
import math

import numpy as np
import pytest

from boltzmann.collision import CollisionKernel, CollisionOperator
from boltzmann.diagnostics import decay_rate_fit, difference_norm, moments
from boltzmann.equilibrium import equilibrium_m, make_params, sqrt_weight
from boltzmann.errors import DivergenceError, GridMismatchError
from boltzmann.grid import AngularQuadrature, DistributionField, DistributionSlice, MomentumGrid
from boltzmann.projection import MacroProjection
from boltzmann.solver import (
    Solver,
    State,
    below_baseline,
    collision_substep,
    exponential_weights,
    initial_field,
    transport_substep,
)
from models import SimulationConfig, StatisticsKind

FERMION = StatisticsKind.FERMION
BOSON = StatisticsKind.BOSON


def tiny_config(**kwargs) -> SimulationConfig:
    items = dict(
        stats="fermion",
        a=1.0,
        c=0.0,
        pmax=3.0,
        n=4,
        ntheta=2,
        nphi=4,
        spatial="none",
        dt=0.1,
        t_end=0.3,
        perturbation_kind="bump",
        perturbation_amplitude=0.05,
        conservation_fix=True,
    )
    items.update(kwargs)
    return SimulationConfig(**items)


@pytest.fixture(scope="module")
def grid():
    return MomentumGrid(pmax=3.0, n=4)


@pytest.fixture(scope="module")
def operator(grid):
    return CollisionOperator(CollisionKernel(grid, AngularQuadrature(ntheta=2, nphi=4)))


def test_exponential_weights():
    rate = np.array([0.0, 1e-14, 1.0, 50.0])
    decay, phi = exponential_weights(rate, 0.5)
    np.testing.assert_allclose(decay, np.exp(-0.5 * rate))
    assert phi[0] == 0.5
    assert phi[1] == 0.5
    assert phi[2] == pytest.approx(1.0 - math.exp(-0.5))
    assert phi[3] == pytest.approx(1.0 / 50.0)


@pytest.mark.parametrize("stats, c", [(FERMION, 0.0), (BOSON, 0.5)])
def test_collision_step_keeps_equilibrium(operator, grid, stats, c):
    params = make_params(1.0, c, stats)
    m = equilibrium_m(params, grid.nodes)
    F = DistributionSlice(m, stats, grid, background=params)
    new = collision_substep(F, 0.5, operator)
    np.testing.assert_allclose(new.values, m, rtol=1e-9)


def test_collision_step_stays_admissible(operator, grid):
    values = np.random.default_rng(4).uniform(0.0, 1.0, size=grid.size)
    F = DistributionSlice(values, FERMION, grid)
    for dt in (0.1, 10.0, 1e3):
        new = collision_substep(F, dt, operator)
        assert new.is_admissible()
        assert np.all(new.values <= 1.0)


def test_collision_step_conserves_moments(operator, grid):
    params = make_params(1.0, 0.0, FERMION)
    m = equilibrium_m(params, grid.nodes)
    bump = np.exp(-np.sum((grid.nodes - [0.75, 0.0, 0.0]) ** 2, axis=1))
    F = DistributionSlice(m * (1.0 + 0.1 * bump), FERMION, grid, background=params)
    new = collision_substep(F, 0.2, operator, conserve=True)
    mass0, momentum0, energy0 = moments(F)
    mass, momentum, energy = moments(new)
    assert mass == pytest.approx(mass0, rel=1e-10)
    assert energy == pytest.approx(energy0, rel=1e-10)
    np.testing.assert_allclose(momentum, momentum0, atol=1e-10 * energy0)


def test_transport_is_identity_without_space(grid):
    values = np.random.default_rng(1).uniform(0.0, 1.0, size=(1, grid.size))
    state = State(DistributionField(values, FERMION, grid), 0.2)
    moved = transport_substep(state, 0.3)
    np.testing.assert_array_equal(moved.F.values, values)
    assert moved.t == 0.2


def test_transport_preserves_uniform_field(grid):
    values = np.tile(np.linspace(0.1, 0.9, grid.size), (8, 1))
    state = State(DistributionField(values, FERMION, grid), 0.0)
    moved = transport_substep(state, 0.4)
    np.testing.assert_allclose(moved.F.values, values, atol=1e-12)


def test_transport_shifts_along_velocity(grid):
    values = np.random.default_rng(2).uniform(0.0, 1.0, size=(8, grid.size))
    field = DistributionField(values, FERMION, grid)
    j = int(np.argmax(grid.nodes[:, 0]))
    speed = grid.nodes[j, 0] / grid.p0[j]
    # one cell in exactly dx / speed
    moved = transport_substep(State(field, 0.0), field.dx / speed)
    np.testing.assert_allclose(moved.F.values[:, j], np.roll(values[:, j], 1), atol=1e-10)


def test_initial_field_kinds():
    params = make_params(1.0, 0.0, FERMION)
    unperturbed = initial_field(tiny_config(perturbation_kind="none"))
    assert unperturbed.nx == 1
    m = equilibrium_m(params, unperturbed.grid.nodes)
    np.testing.assert_allclose(unperturbed.values[0], m)

    bump = initial_field(tiny_config())
    assert np.all(bump.values >= m)
    assert np.any(bump.values > m)

    wave = initial_field(tiny_config(spatial="torus1d", nx=8, perturbation_kind="wave"))
    assert wave.values.shape == (8, 64)
    assert wave.dx == pytest.approx(2.0 * math.pi / 8)
    np.testing.assert_allclose(wave.values.mean(axis=0), m, atol=1e-12)

    noise = initial_field(tiny_config(perturbation_kind="noise", seed=3))
    np.testing.assert_array_equal(noise.values, noise.values[:, ::-1])
    assert np.all((noise.values >= 0.0) & (noise.values <= 1.0))


def test_run_with_conservation_fix():
    records = []
    solver = Solver(tiny_config())
    result = solver.run(on_record=records.append)
    assert len(result.diagnostics) == 4
    assert records == result.diagnostics
    assert result.final.t == pytest.approx(0.3)
    assert result.params.stats is FERMION

    first = result.diagnostics[0]
    for record in result.diagnostics[1:]:
        assert record.mass == pytest.approx(first.mass, rel=1e-10)
        assert record.energy == pytest.approx(first.energy, rel=1e-10)
        assert record.min_F >= 0.0
        assert record.max_F <= 1.0
        assert np.isfinite(record.H)


def test_run_keeps_snapshots():
    solver = Solver(tiny_config(output_every=2, t_end=0.4))
    result = solver.run(keep_snapshots=True)
    assert [round(r.t, 9) for r in result.diagnostics] == [0.0, 0.2, 0.4]
    assert len(result.snapshots) == 3
    assert result.final.t == pytest.approx(0.4)


def test_run_rejects_other_grids():
    solver = Solver(tiny_config())
    grid = MomentumGrid(pmax=2.0, n=4)
    state = State(DistributionField(np.zeros(grid.size), FERMION, grid), 0.0)
    with pytest.raises(GridMismatchError):
        solver.run(state)

    wide = State(DistributionField(np.zeros((8, 64)), FERMION, solver.grid), 0.0)
    with pytest.raises(GridMismatchError):
        solver.run(wide)


def test_run_reports_divergence():
    solver = Solver(tiny_config(conservation_fix=False))
    start = solver.initial_state()
    start.F.values[0, 5] = np.nan
    with pytest.raises(DivergenceError) as info:
        solver.run(start)
    assert info.value.last_good.t == 0.0


def test_transport_full_period_round_trip(grid):
    values = np.random.default_rng(3).uniform(0.0, 1.0, size=(8, grid.size))
    field = DistributionField(values, FERMION, grid)
    speed = np.abs(grid.nodes[:, 0]) / grid.p0
    for j in (int(np.argmax(grid.nodes[:, 0])), int(np.argmin(grid.nodes[:, 0]))):
        # a node with velocity v crosses the torus in L / |v|
        moved = transport_substep(State(field, 0.0), field.length / speed[j])
        np.testing.assert_allclose(moved.F.values[:, j], values[:, j], atol=1e-10)


def test_below_baseline():
    assert below_baseline(tiny_config())
    assert below_baseline(tiny_config(n=16, ntheta=4, nphi=8))
    assert not below_baseline(tiny_config(n=16, ntheta=8, nphi=8))


def test_solver_warns_without_fix_below_baseline(caplog):
    with caplog.at_level(logging.WARNING, logger="boltzmann.solver"):
        Solver(tiny_config())
    assert not [r for r in caplog.records if r.name == "boltzmann.solver"]

    with caplog.at_level(logging.WARNING, logger="boltzmann.solver"):
        Solver(tiny_config(conservation_fix=False))
    assert any("conservation_fix is off" in r.getMessage() for r in caplog.records)


@pytest.mark.parametrize("dt", [0.01, 0.1, 1.0])
def test_run_without_fix_stays_admissible(dt):
    solver = Solver(tiny_config(conservation_fix=False, dt=dt, t_end=4 * dt))
    result = solver.run(keep_snapshots=True)
    assert len(result.diagnostics) == 5
    for state in result.snapshots:
        assert state.F.cell(0).is_admissible()
        assert np.all((state.F.values >= 0.0) & (state.F.values <= 1.0))
    for record in result.diagnostics:
        assert record.min_F >= 0.0
        assert record.max_F <= 1.0
        assert np.isfinite(record.H)


def relative_drift(config: SimulationConfig) -> float:
    records = Solver(config).run().diagnostics
    first, last = records[0], records[-1]
    return max(
        abs(last.mass - first.mass) / first.mass,
        abs(last.energy - first.energy) / first.energy,
    )


def test_drift_without_fix_shrinks_under_refinement():
    items = dict(conservation_fix=False, perturbation_width=1.0, t_end=0.3)
    coarse = relative_drift(tiny_config(n=4, ntheta=2, nphi=4, **items))
    fine = relative_drift(tiny_config(n=6, ntheta=4, nphi=8, **items))
    assert fine < coarse


def relaxation_config(**kwargs) -> SimulationConfig:
    items = dict(n=6, pmax=4.5, dt=0.1, t_end=1.0)
    items.update(kwargs)
    return tiny_config(**items)


@pytest.fixture(scope="module")
def relaxation_solver():
    return Solver(relaxation_config())


@pytest.fixture(scope="module")
def relaxation(relaxation_solver):
    return relaxation_solver.run(keep_snapshots=True)


def test_relaxation_h_non_increasing(relaxation):
    H = np.array([r.H for r in relaxation.diagnostics])
    assert len(H) == 11
    assert np.all(np.diff(H) <= 1e-8)
    assert H[-1] < H[0]


def test_relaxation_decays_exponentially(relaxation):
    t = [r.t for r in relaxation.diagnostics]
    l2 = [r.l2_f for r in relaxation.diagnostics]
    assert l2[-1] < 1e-2 * l2[0]
    fit = decay_rate_fit(t, l2)
    assert fit.epsilon > 0.0
    assert fit.r_squared >= 0.98


def test_relaxation_is_stable_under_nearby_data(relaxation_solver, relaxation):
    start = relaxation.snapshots[0]
    params = relaxation.params
    grid = start.F.grid
    radius = np.linalg.norm(grid.nodes, axis=1)
    g = np.cos(radius) * np.exp(-0.125 * radius**2)
    # the nudge has no mass, momentum or energy
    h = g - MacroProjection(params, grid).project(g)
    nudged = start.F.values + 1e-3 * sqrt_weight(params, grid.nodes) * h
    other = relaxation_solver.run(State(start.F.copy(nudged), 0.0), keep_snapshots=True)
    assert other.params == params

    t = [s.t for s in relaxation.snapshots]
    distance = [
        difference_norm(a.F, b.F, params) for a, b in zip(relaxation.snapshots, other.snapshots)
    ]
    assert len(distance) == 11
    assert distance[0] > 0.0
    assert distance[-1] < 0.1 * distance[0]
    assert decay_rate_fit(t, distance).epsilon > 0.0
