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

"""Bose-Einstein / Fermi-Dirac equilibria and the Juttner reference."""

import logging
from typing import Union

import numpy as np
from pydantic import ValidationError
from scipy import optimize, special

from models import EquilibriumParams, StatisticsKind

from .errors import InvalidParamsError, NonConvergenceError, NonzeroMomentumError
from .kinematics import ArrayLike, energy

logger = logging.getLogger(__name__)

MATCH_RTOL = 1e-9
MOMENTUM_TOL = 1e-8


def make_params(a: float, c: float, stats: Union[StatisticsKind, str, int]) -> EquilibriumParams:
    try:
        return EquilibriumParams(a=a, c=c, stats=stats)
    except ValidationError as e:
        raise InvalidParamsError(e.errors()[0]["msg"]) from e


def exponent(params: EquilibriumParams, p: ArrayLike) -> np.ndarray:
    return params.a * energy(p) + params.c


def equilibrium_from_exponent(x: np.ndarray, stats: StatisticsKind) -> np.ndarray:
    if stats is StatisticsKind.FERMION:
        return special.expit(-x)
    with np.errstate(over="ignore"):
        return 1.0 / np.expm1(x)


def weight_from_exponent(x: np.ndarray, stats: StatisticsKind) -> np.ndarray:
    # sqrt(m + tau m^2) = 1/(2 cosh(x/2)) or 1/(2 sinh(x/2))
    with np.errstate(over="ignore"):
        if stats is StatisticsKind.FERMION:
            return 0.5 / np.cosh(0.5 * x)
        return 0.5 / np.sinh(0.5 * x)


def equilibrium_m(params: EquilibriumParams, p: ArrayLike) -> np.ndarray:
    """m(p) = 1/(exp(a p0 + c) - tau); underflows to 0 for large exponents."""
    return equilibrium_from_exponent(exponent(params, p), params.stats)


def juttner_J(a: float, p0: ArrayLike) -> np.ndarray:
    return np.exp(-a * np.asarray(p0, dtype=float))


def sqrt_weight(params: EquilibriumParams, p: ArrayLike) -> np.ndarray:
    return weight_from_exponent(exponent(params, p), params.stats)


def weight_identities(
    params: EquilibriumParams, p: ArrayLike
) -> tuple[np.ndarray, np.ndarray]:
    """(m/w, (1 + tau m)/w), equal to exp(-x/2) and exp(x/2)."""
    m = equilibrium_m(params, p)
    w = sqrt_weight(params, p)
    return m / w, (1.0 + params.tau * m) / w


def juttner_bounds(params: EquilibriumParams) -> tuple[float, float]:
    """(C1, C2) with C1 J(p0) <= m(p) <= C2 J(p0) for p0 >= 1."""
    a, c = params.a, params.c
    if params.stats is StatisticsKind.FERMION:
        return 1.0 / (1.0 + np.exp(c)), np.exp(-c)
    return np.exp(-c), 1.0 / (np.exp(c) - np.exp(-a))


def grid_moments(params: EquilibriumParams, grid) -> tuple[float, float]:
    """Discrete (mass, energy) of m on ``grid``."""
    m = equilibrium_m(params, grid.nodes)
    return grid.integrate(m), grid.integrate(m * grid.p0)


def _unpack(z: np.ndarray, stats: StatisticsKind) -> tuple[float, float]:
    a = float(np.exp(z[0]))
    if stats is StatisticsKind.BOSON:
        return a, float(np.exp(z[1])) - a
    return a, float(z[1])


def _pack(a: float, c: float, stats: StatisticsKind) -> np.ndarray:
    if stats is StatisticsKind.BOSON:
        return np.array([np.log(a), np.log(c + a)])
    return np.array([np.log(a), c])


def _moment_residual(z, stats, grid, mass0, energy0) -> np.ndarray:
    a, c = _unpack(z, stats)
    x = a * grid.p0 + c
    m = equilibrium_from_exponent(x, stats)
    mass = max(grid.integrate(m), 1e-300)
    en = max(grid.integrate(m * grid.p0), 1e-300)
    return np.array([np.log(mass / mass0), np.log(en / energy0)])


def _expand_bracket(fn, lo: float, hi: float, limit: int = 60) -> tuple[float, float]:
    flo, fhi = fn(lo), fn(hi)
    for _ in range(limit):
        if np.sign(flo) != np.sign(fhi):
            return lo, hi
        width = hi - lo
        lo, hi = lo - width, hi + width
        flo, fhi = fn(lo), fn(hi)
    raise NonConvergenceError("could not bracket the equilibrium moments")


def _nested_solve(stats, grid, mass0, energy0) -> np.ndarray:
    def inner(log_a: float) -> float:
        # second unknown matching the mass for this a
        def mass_gap(z1: float) -> float:
            return _moment_residual(np.array([log_a, z1]), stats, grid, mass0, energy0)[0]

        lo, hi = _expand_bracket(mass_gap, -1.0, 1.0)
        return optimize.brentq(mass_gap, lo, hi, xtol=1e-14, rtol=1e-14)

    def energy_gap(log_a: float) -> float:
        z = np.array([log_a, inner(log_a)])
        return _moment_residual(z, stats, grid, mass0, energy0)[1]

    lo, hi = _expand_bracket(energy_gap, -1.0, 1.0, limit=8)
    log_a = optimize.brentq(energy_gap, lo, hi, xtol=1e-14, rtol=1e-14)
    return np.array([log_a, inner(log_a)])


def match_equilibrium_params(F0, stats: Union[StatisticsKind, int]) -> EquilibriumParams:
    """Find (a, c) whose m has the discrete mass and energy of ``F0``.

    ``F0`` is any object with ``values`` (..., N) and ``grid``; leading axes
    are averaged, so the moments are per unit spatial volume.
    """
    stats = StatisticsKind.parse(stats)
    grid = F0.grid
    values = np.asarray(F0.values, dtype=float).reshape(-1, grid.size).mean(axis=0)
    mass0 = grid.integrate(values)
    energy0 = grid.integrate(values * grid.p0)
    if not (np.isfinite(mass0) and np.isfinite(energy0)) or mass0 <= 0 or energy0 <= 0:
        raise NonConvergenceError("initial data needs finite positive mass and energy")
    momentum = grid.integrate(values[:, None] * grid.nodes, axis=0)
    if np.linalg.norm(momentum) > MOMENTUM_TOL * energy0:
        raise NonzeroMomentumError(
            f"net momentum {np.linalg.norm(momentum):.3e} is not zero"
        )

    # nonrelativistic guess <p0> - 1 ~ 3/(2a)
    mean_kinetic = max(energy0 / mass0 - 1.0, 1e-3)
    a0 = 1.5 / mean_kinetic
    c0 = 1.0 if stats is StatisticsKind.BOSON else 0.0
    z0 = _pack(a0, c0, stats)
    args = (stats, grid, mass0, energy0)

    z = None
    sol = optimize.root(_moment_residual, z0, args=args, method="hybr", tol=1e-14)
    # hybr can report "not making good progress" once it sits at rounding level
    if np.all(np.isfinite(sol.fun)) and np.max(np.abs(sol.fun)) < 0.1 * MATCH_RTOL:
        z = sol.x
    else:
        logger.debug("root finder stalled (%s), falling back to brackets", sol.message)
        z = _nested_solve(*args)

    residual = np.max(np.abs(_moment_residual(z, *args)))
    if not np.isfinite(residual) or residual > MATCH_RTOL:
        raise NonConvergenceError(
            f"equilibrium moment matching stopped at relative residual {residual:.3e}"
        )
    a, c = _unpack(z, stats)
    logger.debug("matched equilibrium a=%.12g c=%.12g", a, c)
    return make_params(a, c, stats)
