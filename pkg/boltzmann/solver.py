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

"""Time integration of dF/dt + p_hat . grad_x F = Q(F).

The collision step freezes G and R at the start of the step and integrates
dF/dt = G (1 + tau F) - R F exactly, which keeps F >= 0 (and F <= 1 for
fermions) for every step size. On the torus the collision step is wrapped in
two half transport steps (Strang splitting).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import ndimage

from models import DiagnosticsRecord, EquilibriumParams, SimulationConfig, StatisticsKind

from .collision import CollisionKernel, CollisionOperator, conserve_moments
from .diagnostics import make_record
from .equilibrium import equilibrium_m, match_equilibrium_params, sqrt_weight
from .errors import DivergenceError, GridMismatchError
from .grid import DistributionField, DistributionSlice, clamp_to_bounds
from .linearized import LinearizedOperator

logger = logging.getLogger(__name__)

TORUS_LENGTH = 2.0 * math.pi
SMALL_RATE = 1e-12
# below this resolution the discrete conservation error outweighs the decay
# unless the moment correction is on
BASELINE_N = 16
BASELINE_ANGULAR = 8


@dataclass
class State:
    F: DistributionField
    t: float = 0.0

    def copy(self) -> "State":
        return State(self.F.copy(), self.t)


@dataclass
class RunResult:
    params: EquilibriumParams
    diagnostics: list[DiagnosticsRecord] = field(default_factory=list)
    snapshots: list[State] = field(default_factory=list)

    @property
    def final(self) -> State:
        return self.snapshots[-1]


def exponential_weights(rate: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """(exp(-rate dt), (1 - exp(-rate dt))/rate) with the limit dt at rate 0."""
    x = rate * dt
    decay = np.exp(-x)
    small = np.abs(x) < SMALL_RATE
    safe = np.where(small, 1.0, rate)
    phi = np.where(small, dt, -np.expm1(-x) / safe)
    return decay, phi


def collision_substep(
    F: DistributionSlice,
    dt: float,
    operator: CollisionOperator,
    conserve: bool = False,
) -> DistributionSlice:
    """One frozen-coefficient exponential step of dF/dt = Q(F)."""
    G, R = operator.gain_loss(F)
    rate = R - F.stats.tau * G
    decay, phi = exponential_weights(rate, dt)
    values = clamp_to_bounds(decay * F.values + G * phi, F.stats)
    if conserve:
        values = conserve_moments(values, F.values, F.grid, F.stats)
    return F.with_values(values)


def transport_substep(state: State, dt: float) -> State:
    """Semi-Lagrangian shift F(x, p) <- F(x - p_hat_1 dt, p), periodic in x."""
    F = state.F
    if F.nx == 1:
        return State(F.copy(), state.t)
    grid = F.grid
    shifts = grid.nodes[:, 0] / grid.p0 * dt / F.dx
    out = np.empty_like(F.values)
    for j, s in enumerate(shifts):
        out[:, j] = ndimage.shift(F.values[:, j], s, order=3, mode="grid-wrap")
    return State(F.copy(clamp_to_bounds(out, F.stats)), state.t)


def shell_profile(grid, center: float, width: float) -> np.ndarray:
    radius = np.linalg.norm(grid.nodes, axis=1)
    return np.exp(-((radius - center) ** 2) / (2.0 * width**2))


def initial_field(config: SimulationConfig) -> DistributionField:
    """Equilibrium of the config plus the configured perturbation, clamped."""
    grid = config.grid()
    params = config.equilibrium()
    m = equilibrium_m(params, grid.nodes)
    w = sqrt_weight(params, grid.nodes)
    nx = config.spatial_cells
    amp = config.perturbation_amplitude
    kind = config.perturbation_kind

    if kind == "none":
        shape = np.zeros((nx, grid.size))
    elif kind == "bump":
        shape = np.broadcast_to(
            shell_profile(grid, config.perturbation_center, config.perturbation_width),
            (nx, grid.size),
        )
    elif kind == "wave":
        x = (np.arange(nx) + 0.5) * TORUS_LENGTH / nx
        bump = shell_profile(grid, config.perturbation_center, config.perturbation_width)
        shape = np.cos(x)[:, None] * bump[None, :]
    else:
        rng = np.random.default_rng(config.seed)
        z = rng.standard_normal((nx, grid.size))
        # even in p: flat index reversal maps p to -p on the symmetric lattice
        shape = 0.5 * (z + z[:, ::-1])

    values = clamp_to_bounds(m + amp * w * shape, config.stats)
    return DistributionField(values, config.stats, grid, length=TORUS_LENGTH)


def below_baseline(config: SimulationConfig) -> bool:
    return config.n < BASELINE_N or min(config.ntheta, config.nphi) < BASELINE_ANGULAR


class Solver:
    """Owns the collision kernel of one configuration and advances states."""

    def __init__(self, config: SimulationConfig, threads: int = 1):
        self.config = config
        self.grid = config.grid()
        self.angular = config.angular()
        self.stats = StatisticsKind.parse(config.stats)
        if not config.conservation_fix and below_baseline(config):
            logger.warning(
                "conservation_fix is off at n=%d, ntheta=%d, nphi=%d; below n=%d and %d angular "
                "nodes mass and energy drift and H can increase",
                config.n,
                config.ntheta,
                config.nphi,
                BASELINE_N,
                BASELINE_ANGULAR,
            )
        logger.info("Initializing collision kernel..")
        self.kernel = CollisionKernel(
            self.grid, self.angular, threads, cache_mb=config.kernel_cache_mb
        )
        self.operator = CollisionOperator(self.kernel)
        self._nu: dict[EquilibriumParams, np.ndarray] = {}

    def reference_params(self, F: DistributionField) -> EquilibriumParams:
        """The equilibrium sharing the mass and energy of F (the config's when unperturbed)."""
        if self.config.perturbation_kind == "none":
            return self.config.equilibrium()
        return match_equilibrium_params(F, self.stats)

    def initial_state(self) -> State:
        F = initial_field(self.config)
        params = self.reference_params(F)
        F.background = params
        return State(F, 0.0)

    def collision_frequency(self, params: EquilibriumParams) -> np.ndarray:
        if params not in self._nu:
            linear = LinearizedOperator(params, self.grid, self.angular, kernel=self.kernel)
            self._nu[params] = linear.nu
        return self._nu[params]

    def collide(self, state: State, dt: float) -> State:
        F = state.F
        out = np.empty_like(F.values)
        for ix in range(F.nx):
            new = collision_substep(
                F.cell(ix), dt, self.operator, conserve=self.config.conservation_fix
            )
            out[ix] = new.values
        return State(F.copy(out), state.t)

    def step(self, state: State, dt: float) -> State:
        if state.F.nx == 1:
            new = self.collide(state, dt)
        else:
            new = transport_substep(state, 0.5 * dt)
            new = self.collide(new, dt)
            new = transport_substep(new, 0.5 * dt)
        new.t = state.t + dt
        return new

    def _check(self, state: State) -> None:
        if state.F.grid != self.grid:
            raise GridMismatchError("initial state lives on a different momentum grid")
        if state.F.nx != self.config.spatial_cells:
            raise GridMismatchError(
                f"initial state has {state.F.nx} cells, config needs {self.config.spatial_cells}"
            )

    def run(
        self,
        initial: Optional[State] = None,
        on_record: Optional[Callable[[DiagnosticsRecord], None]] = None,
        keep_snapshots: bool = False,
    ) -> RunResult:
        """Advance to t_end, recording diagnostics every ``output_every`` steps.

        Raises DivergenceError carrying the last finite state as soon as a
        step produces a non-finite value.
        """
        cfg = self.config
        state = initial.copy() if initial is not None else self.initial_state()
        self._check(state)
        params = state.F.background
        if params is None:
            params = self.reference_params(state.F)
            state.F.background = params
        nu = self.collision_frequency(params)
        result = RunResult(params=params)

        def record(s: State):
            rec = make_record(s.t, s.F, params, nu)
            result.diagnostics.append(rec)
            if on_record is not None:
                on_record(rec)
            if keep_snapshots:
                result.snapshots.append(s.copy())

        steps = max(0, math.ceil((cfg.t_end - state.t) / cfg.dt - 1e-9))
        logger.info("Running %d steps of dt=%g from t=%g", steps, cfg.dt, state.t)
        record(state)
        for k in range(1, steps + 1):
            new = self.step(state, cfg.dt)
            if not np.all(np.isfinite(new.F.values)):
                raise DivergenceError(
                    f"non-finite distribution at t={new.t:.6g} (step {k})", last_good=state
                )
            state = new
            if k % cfg.output_every == 0 or k == steps:
                record(state)
            logger.debug("step %d t=%.6g", k, state.t)
        if not keep_snapshots or not result.snapshots or result.snapshots[-1].t != state.t:
            result.snapshots.append(state)
        return result


def run(config: SimulationConfig, initial: Optional[State] = None, threads: int = 1) -> RunResult:
    return Solver(config, threads).run(initial)
