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

"""Moments, entropy, perturbation norms and decay-rate fits."""

from typing import NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy import special, stats

from models import DiagnosticsRecord, EquilibriumParams

from .equilibrium import equilibrium_m, sqrt_weight
from .errors import DomainError, GridMismatchError, InsufficientSamplesError
from .grid import DistributionField, DistributionSlice, MomentumGrid, clamp_to_bounds
from .projection import MacroProjection

BURN_IN = 0.1
MIN_SAMPLES = 10

Distribution = Union[DistributionSlice, DistributionField]


def _as_field(F: Distribution) -> DistributionField:
    if isinstance(F, DistributionField):
        return F
    return DistributionField(F.values[None, :], F.stats, F.grid, F.background)


def _integrate_xp(field: DistributionField, values: np.ndarray) -> np.ndarray:
    """dx h^3 sum over cells and nodes; values is (nx, N, ...)."""
    return field.dx * field.grid.cell_volume * np.sum(values, axis=(0, 1))


def moments(F: Distribution) -> tuple[float, np.ndarray, float]:
    """(mass, momentum, energy) summed over the grid (and the cells)."""
    field = _as_field(F)
    grid = field.grid
    v = field.values
    mass = float(_integrate_xp(field, v))
    momentum = _integrate_xp(field, v[:, :, None] * grid.nodes[None, :, :])
    energy = float(_integrate_xp(field, v * grid.p0[None, :]))
    return mass, momentum, energy


def h_functional(F: Distribution) -> float:
    """sum of F ln F - (1 + tau F) ln(1 + tau F) / tau with 0 ln 0 = 0."""
    field = _as_field(F)
    tau = field.stats.tau
    v = clamp_to_bounds(field.values, field.stats)
    occupied = 1.0 + tau * v
    density = special.xlogy(v, v) - special.xlogy(occupied, occupied) / tau
    return float(_integrate_xp(field, density))


def perturbation(F: Distribution, params: EquilibriumParams) -> np.ndarray:
    """f = (F - m)/sqrt(m + tau m^2), same shape as the values of F."""
    grid = F.grid
    m = equilibrium_m(params, grid.nodes)
    w = sqrt_weight(params, grid.nodes)
    return (np.asarray(F.values) - m) / w


def norms(
    f: np.ndarray, grid: MomentumGrid, nu: np.ndarray, dx: float = 1.0
) -> tuple[float, float]:
    """(||f||_{L2}, ||f||_nu) with the spatial sum weighted by dx."""
    f2 = np.atleast_2d(f) ** 2
    scale = dx * grid.cell_volume
    return float(np.sqrt(scale * f2.sum())), float(np.sqrt(scale * (f2 * nu).sum()))


def difference_norm(F: Distribution, F_bar: Distribution, params: EquilibriumParams) -> float:
    """||(F - F_bar)/w||_{L2}; the equilibrium part cancels."""
    if F.grid != F_bar.grid or np.shape(F.values) != np.shape(F_bar.values):
        raise GridMismatchError("distributions live on different grids")
    field = _as_field(F)
    w = sqrt_weight(params, F.grid.nodes)
    diff = (np.atleast_2d(F.values) - np.atleast_2d(F_bar.values)) / w
    return float(np.sqrt(_integrate_xp(field, diff**2)))


def macro_fields(
    field: DistributionField,
    params: EquilibriumParams,
    projection: Optional[MacroProjection] = None,
) -> np.ndarray:
    """(A, B1, B2, B3, C) of the perturbation in every cell, shape (nx, 5)."""
    projection = projection or MacroProjection(params, field.grid)
    return projection.coefficients(perturbation(field, params))


class DecayFit(NamedTuple):
    epsilon: float
    r_squared: float
    intercept: float
    samples: int


def decay_rate_fit(
    t: Sequence[float], l2: Sequence[float], burn_in: float = BURN_IN
) -> DecayFit:
    """Least-squares fit of ln(l2) = intercept - epsilon t after a burn-in.

    ``burn_in`` is the fraction of the series dropped from the front.
    """
    t_arr = np.asarray(t, dtype=float)
    y_arr = np.asarray(l2, dtype=float)
    start = int(np.floor(burn_in * len(t_arr)))
    t_arr, y_arr = t_arr[start:], y_arr[start:]
    if len(t_arr) < MIN_SAMPLES:
        raise InsufficientSamplesError(
            f"decay fit needs {MIN_SAMPLES} samples after burn-in, got {len(t_arr)}"
        )
    if np.any(~np.isfinite(y_arr)) or np.any(y_arr <= 0):
        raise DomainError("decay fit needs positive finite norms")
    fit = stats.linregress(t_arr, np.log(y_arr))
    return DecayFit(-float(fit.slope), float(fit.rvalue**2), float(fit.intercept), len(t_arr))


def make_record(
    t: float, F: Distribution, params: EquilibriumParams, nu: np.ndarray
) -> DiagnosticsRecord:
    field = _as_field(F)
    mass, momentum, energy = moments(field)
    l2, nu_norm = norms(perturbation(field, params), field.grid, nu, field.dx)
    return DiagnosticsRecord(
        t=t,
        mass=mass,
        px=float(momentum[0]),
        py=float(momentum[1]),
        pz=float(momentum[2]),
        energy=energy,
        H=h_functional(field),
        l2_f=l2,
        nu_norm_f=nu_norm,
        min_F=float(np.min(field.values)),
        max_F=float(np.max(field.values)),
    )
