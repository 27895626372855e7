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

"""Momentum lattice, angular quadrature and distribution containers."""

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from numpy.polynomial import legendre
from scipy import sparse

from models import EquilibriumParams, StatisticsKind

from .errors import GridMismatchError, InvalidParamsError
from .kinematics import energy

BOUNDS_TOL = 1e-12
SNAP_TOL = 1e-9


@dataclass(frozen=True)
class MomentumGrid:
    """Cell-centred lattice of n^3 nodes on [-pmax, pmax]^3.

    Nodes sit at -pmax + (i + 1/2) h with h = 2 pmax / n, so the lattice is
    symmetric under p -> -p and each node owns a cell of volume h^3. Flat
    indices are lexicographic with the x component slowest.
    """

    pmax: float
    n: int

    def __post_init__(self):
        if not self.pmax > 0:
            raise InvalidParamsError(f"pmax must be positive, got {self.pmax}")
        if self.n < 4 or self.n % 2:
            raise InvalidParamsError(f"n must be an even integer >= 4, got {self.n}")

    @property
    def h(self) -> float:
        return 2.0 * self.pmax / self.n

    @property
    def cell_volume(self) -> float:
        return self.h**3

    @property
    def size(self) -> int:
        return self.n**3

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.pmax + (np.arange(self.n) + 0.5) * self.h

    @cached_property
    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(self.axis, self.axis, self.axis, indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, 3)

    @cached_property
    def p0(self) -> np.ndarray:
        return energy(self.nodes)

    def flat_index(self, i, j, k):
        return (np.asarray(i) * self.n + np.asarray(j)) * self.n + np.asarray(k)

    def integrate(self, values: np.ndarray, axis: int = -1) -> np.ndarray:
        return self.cell_volume * np.sum(values, axis=axis)

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(self.cell_volume * np.dot(f, g))

    def norm(self, f: np.ndarray) -> float:
        return float(np.sqrt(self.inner(f, f)))


@dataclass(frozen=True)
class AngularQuadrature:
    """Gauss-Legendre in cos(theta) times the uniform rule in phi.

    The node set is closed under omega -> -omega node by node: the Legendre
    nodes are symmetrised and the second half of the phi nodes is the first
    half shifted by pi. Nodes are ordered theta-major.
    """

    ntheta: int
    nphi: int

    def __post_init__(self):
        if self.ntheta < 1:
            raise InvalidParamsError(f"ntheta must be >= 1, got {self.ntheta}")
        if self.nphi < 2 or self.nphi % 2:
            raise InvalidParamsError(f"nphi must be even and >= 2, got {self.nphi}")

    @property
    def size(self) -> int:
        return self.ntheta * self.nphi

    @cached_property
    def _theta_rule(self) -> tuple[np.ndarray, np.ndarray]:
        x, w = legendre.leggauss(self.ntheta)
        return 0.5 * (x - x[::-1]), 0.5 * (w + w[::-1])

    @cached_property
    def _phi_rule(self) -> tuple[np.ndarray, np.ndarray]:
        half = self.nphi // 2
        phi = 2.0 * np.pi * np.arange(half) / self.nphi
        cos_half, sin_half = np.cos(phi), np.sin(phi)
        return np.concatenate((cos_half, -cos_half)), np.concatenate((sin_half, -sin_half))

    @cached_property
    def cos_theta(self) -> np.ndarray:
        return np.repeat(self._theta_rule[0], self.nphi)

    @cached_property
    def sin_theta(self) -> np.ndarray:
        return np.sqrt(1.0 - self.cos_theta**2)

    @cached_property
    def cos_phi(self) -> np.ndarray:
        return np.tile(self._phi_rule[0], self.ntheta)

    @cached_property
    def sin_phi(self) -> np.ndarray:
        return np.tile(self._phi_rule[1], self.ntheta)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.repeat(self._theta_rule[1], self.nphi) * (2.0 * np.pi / self.nphi)

    @cached_property
    def directions(self) -> np.ndarray:
        """Unit vectors of the nodes about the z axis, shape (size, 3)."""
        return np.stack(
            (
                self.sin_theta * self.cos_phi,
                self.sin_theta * self.sin_phi,
                self.cos_theta,
            ),
            axis=-1,
        )

    def reflected_index(self) -> np.ndarray:
        """Index of the node -omega for every node omega."""
        i, j = np.divmod(np.arange(self.size), self.nphi)
        return (self.ntheta - 1 - i) * self.nphi + (j + self.nphi // 2) % self.nphi


def statistics_bounds(stats: StatisticsKind) -> tuple[float, float]:
    return (0.0, 1.0) if stats is StatisticsKind.FERMION else (0.0, np.inf)


def clamp_to_bounds(values: np.ndarray, stats: StatisticsKind) -> np.ndarray:
    lo, hi = statistics_bounds(stats)
    return np.clip(values, lo, hi)


@dataclass
class DistributionSlice:
    """F on the momentum grid at one spatial cell.

    With a ``background`` the off-grid extension splits F into the analytic
    equilibrium and a perturbation; ``clamp`` keeps off-grid values inside the
    statistics bounds.
    """

    values: np.ndarray
    stats: StatisticsKind
    grid: MomentumGrid
    background: Optional[EquilibriumParams] = None
    clamp: bool = True

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.size,):
            raise GridMismatchError(
                f"slice has shape {self.values.shape}, grid needs ({self.grid.size},)"
            )
        self.stats = StatisticsKind.parse(self.stats)

    def is_admissible(self) -> bool:
        lo, hi = statistics_bounds(self.stats)
        v = self.values
        return bool(
            np.all(np.isfinite(v))
            and np.all(v >= lo - BOUNDS_TOL)
            and np.all(v <= hi + BOUNDS_TOL)
        )

    def with_values(self, values: np.ndarray) -> "DistributionSlice":
        return DistributionSlice(values, self.stats, self.grid, self.background, self.clamp)


@dataclass
class DistributionField:
    """F(x, p) on nx spatial cells (nx = 1 for homogeneous runs) of a torus."""

    values: np.ndarray
    stats: StatisticsKind
    grid: MomentumGrid
    background: Optional[EquilibriumParams] = None
    length: float = field(default=2.0 * np.pi)

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.shape[1] != self.grid.size:
            raise GridMismatchError(
                f"field has {self.values.shape[1]} momentum nodes, grid has {self.grid.size}"
            )
        self.stats = StatisticsKind.parse(self.stats)

    @property
    def nx(self) -> int:
        return self.values.shape[0]

    @property
    def dx(self) -> float:
        # homogeneous fields carry unit volume
        return self.length / self.nx if self.nx > 1 else 1.0

    def cell(self, ix: int) -> DistributionSlice:
        return DistributionSlice(self.values[ix], self.stats, self.grid, self.background)

    def copy(self, values: Optional[np.ndarray] = None) -> "DistributionField":
        v = self.values.copy() if values is None else values
        return DistributionField(v, self.stats, self.grid, self.background, self.length)


def trilinear_matrix(grid: MomentumGrid, points: np.ndarray) -> sparse.csr_matrix:
    """Sparse (M, N) matrix of trilinear weights at ``points``.

    Neighbours beyond the outermost nodes count as zero and points outside
    [-pmax, pmax]^3 get an empty row.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    count = pts.shape[0]
    inside = np.all(np.abs(pts) <= grid.pmax, axis=1)
    u = (np.where(inside[:, None], pts, 0.0) + grid.pmax) / grid.h - 0.5
    nearest = np.round(u)
    u = np.where(np.abs(u - nearest) < SNAP_TOL, nearest, u)
    base = np.floor(u).astype(np.int64)
    t = u - base

    rows, cols, vals = [], [], []
    row_ids = np.arange(count)
    for corner in itertools.product((0, 1), repeat=3):
        offset = np.array(corner)
        idx = base + offset
        weight = np.prod(np.where(offset == 1, t, 1.0 - t), axis=1)
        valid = inside & np.all((idx >= 0) & (idx < grid.n), axis=1) & (weight != 0.0)
        rows.append(row_ids[valid])
        cols.append(grid.flat_index(idx[valid, 0], idx[valid, 1], idx[valid, 2]))
        vals.append(weight[valid])
    return sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(count, grid.size),
    )
