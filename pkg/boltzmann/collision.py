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

"""Quadrature of the quartic collision operator on the momentum grid.

For every output momentum p the dq integral runs over all grid nodes and the
d omega integral over the angular nodes rotated so that the polar axis is the
center-of-momentum direction of p; the cross section is then g sin(theta) at
the node. Post-collision values come from ``interpolate_offgrid``.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from functools import cached_property
from typing import Callable, NamedTuple, Optional, Sequence, TypeVar, Union

import numpy as np
from scipy import linalg, sparse

from models import EquilibriumParams, StatisticsKind

from .equilibrium import equilibrium_from_exponent, weight_from_exponent
from .errors import GridMismatchError
from .grid import (
    AngularQuadrature,
    DistributionSlice,
    MomentumGrid,
    clamp_to_bounds,
    trilinear_matrix,
)
from .kinematics import boost_correction, energy, moller_velocity, polar_frame
from .projection import MacroProjection, MacroSplit, invariants

logger = logging.getLogger(__name__)

# target number of (p, q, omega) triples per block; independent of threads
BLOCK_POINTS = 1 << 18
# rough cached footprint of one triple (both sides, interpolation rows)
BYTES_PER_POINT = 400

T = TypeVar("T")


def collision_geometry(
    p_out: np.ndarray, q: np.ndarray, angular: AngularQuadrature
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Post-collision momenta and dq d omega weights for all (p, q, omega).

    Returns p' and q' of shape (B, Nq, A, 3) and v sigma w_omega of shape
    (B, Nq, A) (the cell volume is applied by the caller).
    """
    p = p_out[:, None, :]
    qq = q[None, :, :]
    p0 = energy(p)
    q0 = energy(qq)
    d = p - qq
    d0 = (np.sum(p * p, axis=-1) - np.sum(qq * qq, axis=-1)) / (p0 + q0)
    g = np.sqrt(np.maximum(np.sum(d * d, axis=-1) - d0 * d0, 0.0))
    sqs = np.sqrt(g * g + 4.0)
    P = p + qq
    P0 = p0 + q0

    # polar axis: direction of p in the center-of-momentum frame
    coef = np.sum(p * P, axis=-1) / (sqs * (P0 + sqs)) - p0 / sqs
    k = p + coef[..., None] * P
    knorm = np.linalg.norm(k, axis=-1)
    ok = knorm > 1e-14 * (1.0 + np.linalg.norm(p, axis=-1))
    k = np.where(ok[..., None], k / np.where(ok, knorm, 1.0)[..., None], [0.0, 0.0, 1.0])
    e1, e2, k = polar_frame(k)

    st_cp = (angular.sin_theta * angular.cos_phi)[None, None, :, None]
    st_sp = (angular.sin_theta * angular.sin_phi)[None, None, :, None]
    ct = angular.cos_theta[None, None, :, None]
    omega = st_cp * e1[:, :, None, :] + st_sp * e2[:, :, None, :] + ct * k[:, :, None, :]

    Pb = P[:, :, None, :]
    u = omega + boost_correction(Pb, P0[:, :, None], sqs[:, :, None], omega)
    half = 0.5 * g[:, :, None, None] * u
    p_prime = 0.5 * Pb + half
    q_prime = 0.5 * Pb - half

    v = moller_velocity(p, qq)
    weight = (v * g)[:, :, None] * (angular.weights * angular.sin_theta)[None, None, :]
    return p_prime, q_prime, weight


class PointSet:
    """Off-grid momenta of one block with lazily built interpolation data."""

    def __init__(self, grid: MomentumGrid, points: np.ndarray):
        self.grid = grid
        self.points = points
        self._equilibrium: dict[EquilibriumParams, tuple[np.ndarray, np.ndarray]] = {}

    @cached_property
    def interp(self) -> sparse.csr_matrix:
        return trilinear_matrix(self.grid, self.points)

    @cached_property
    def p0(self) -> np.ndarray:
        return energy(self.points)

    @cached_property
    def psi(self) -> np.ndarray:
        return invariants(self.points, self.p0)

    def equilibrium(self, params: EquilibriumParams) -> tuple[np.ndarray, np.ndarray]:
        """(m, w) at the points."""
        if params not in self._equilibrium:
            x = params.a * self.p0 + params.c
            self._equilibrium[params] = (
                equilibrium_from_exponent(x, params.stats),
                weight_from_exponent(x, params.stats),
            )
        return self._equilibrium[params]

    def perturbation(self, split: MacroSplit, params: EquilibriumParams) -> np.ndarray:
        """Macro part exactly, micro part trilinear and zero outside the grid."""
        _, w = self.equilibrium(params)
        return w * (self.psi @ split.coefficients) + self.interp @ split.micro


class OffgridSource:
    """Prepared off-grid extension of one distribution or perturbation."""

    def __init__(
        self,
        values: np.ndarray,
        stats: StatisticsKind,
        params: Optional[EquilibriumParams] = None,
        split: Optional[MacroSplit] = None,
        clamp: bool = True,
        perturbation: bool = False,
    ):
        self.values = values
        self.stats = stats
        self.params = params
        self.split = split
        self.clamp = clamp
        self.is_perturbation = perturbation

    @classmethod
    def from_slice(cls, F: DistributionSlice, projection: Optional[MacroProjection]):
        if F.background is None or projection is None:
            return cls(F.values, F.stats, clamp=F.clamp)
        params = F.background
        f = (F.values - projection.m) / projection.weight
        return cls(F.values, F.stats, params, projection.split(f), clamp=F.clamp)

    @classmethod
    def from_perturbation(cls, f: np.ndarray, projection: MacroProjection):
        return cls(
            f,
            projection.params.stats,
            projection.params,
            projection.split(f),
            clamp=False,
            perturbation=True,
        )

    def at(self, points: PointSet) -> np.ndarray:
        if self.split is None:
            out = points.interp @ self.values
        else:
            ftilde = points.perturbation(self.split, self.params)
            if self.is_perturbation:
                return ftilde
            m, w = points.equilibrium(self.params)
            out = m + w * ftilde
        return clamp_to_bounds(out, self.stats) if self.clamp else out


class KernelBlock(NamedTuple):
    rows: np.ndarray
    shape: tuple[int, int, int]
    weight: np.ndarray  # (B, Nq, A) including the cell volume
    p_side: PointSet
    q_side: PointSet


class CollisionKernel:
    """Blocked collision geometry shared by the nonlinear and linear operators.

    Output momenta default to the grid nodes. Blocks have a fixed size that
    does not depend on ``threads`` and each output sum happens inside one
    block, so results are identical for every thread count.
    """

    def __init__(
        self,
        grid: MomentumGrid,
        angular: AngularQuadrature,
        threads: int = 1,
        cache_mb: float = 256.0,
        outputs: Optional[np.ndarray] = None,
    ):
        self.grid = grid
        self.angular = angular
        self.threads = max(1, int(threads))
        self.outputs = grid.nodes if outputs is None else np.asarray(outputs, float).reshape(-1, 3)
        self.on_grid = outputs is None

        per_row = grid.size * angular.size
        rows_per_block = max(1, BLOCK_POINTS // per_row)
        count = self.outputs.shape[0]
        self.block_rows = [
            np.arange(start, min(start + rows_per_block, count))
            for start in range(0, count, rows_per_block)
        ]
        footprint = count * per_row * BYTES_PER_POINT
        self._cache: Optional[list[Optional[KernelBlock]]] = None
        if footprint <= cache_mb * 2**20:
            self._cache = [None] * len(self.block_rows)
        self._projections: dict[EquilibriumParams, MacroProjection] = {}
        logger.debug(
            "collision kernel: %d outputs, %d blocks, cache %s",
            count,
            len(self.block_rows),
            "on" if self._cache is not None else "off",
        )

    def projection(self, params: EquilibriumParams) -> MacroProjection:
        if params not in self._projections:
            self._projections[params] = MacroProjection(params, self.grid)
        return self._projections[params]

    def _build(self, i: int) -> KernelBlock:
        rows = self.block_rows[i]
        p_prime, q_prime, weight = collision_geometry(
            self.outputs[rows], self.grid.nodes, self.angular
        )
        shape = weight.shape
        return KernelBlock(
            rows,
            shape,
            weight * self.grid.cell_volume,
            PointSet(self.grid, p_prime.reshape(-1, 3)),
            PointSet(self.grid, q_prime.reshape(-1, 3)),
        )

    def block(self, i: int) -> KernelBlock:
        if self._cache is None:
            return self._build(i)
        cached = self._cache[i]
        if cached is None:
            cached = self._build(i)
            self._cache[i] = cached
        return cached

    def map_blocks(self, fn: Callable[[KernelBlock], T]) -> list[T]:
        """fn over all blocks, results in block order."""
        indices = range(len(self.block_rows))
        if self.threads == 1:
            return [fn(self.block(i)) for i in indices]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(lambda i: fn(self.block(i)), indices))

    def reduce(self, fn: Callable[[KernelBlock], np.ndarray]) -> np.ndarray:
        """Concatenate per-block output arrays of shape (B,) or (k, B)."""
        parts = self.map_blocks(fn)
        return np.concatenate(parts, axis=-1)


def _check_compatible(slices: Sequence[DistributionSlice], grid: MomentumGrid):
    stats = slices[0].stats
    for F in slices:
        if F.grid != grid:
            raise GridMismatchError("distribution lives on a different momentum grid")
        if F.stats != stats:
            raise GridMismatchError("distributions mix boson and fermion statistics")


def _select(values: np.ndarray, p) -> Union[float, np.ndarray]:
    if p is None:
        return values
    out = values[..., p]
    return float(out) if np.ndim(out) == 0 else out


class InvariantResidual(NamedTuple):
    raw: np.ndarray  # mass, momentum (3), energy
    relative: np.ndarray
    scale: float

    @property
    def mass(self) -> float:
        return float(self.raw[0])

    @property
    def momentum(self) -> np.ndarray:
        return self.raw[1:4]

    @property
    def energy(self) -> float:
        return float(self.raw[4])


class CollisionOperator:
    """Q, G and R on the grid nodes."""

    def __init__(self, kernel: CollisionKernel):
        if not kernel.on_grid:
            raise GridMismatchError("the collision operator needs grid-node outputs")
        self.kernel = kernel
        self.grid = kernel.grid

    def _source(self, F: DistributionSlice) -> OffgridSource:
        projection = None if F.background is None else self.kernel.projection(F.background)
        return OffgridSource.from_slice(F, projection)

    def evaluate_Q(
        self,
        F1: DistributionSlice,
        F2: DistributionSlice,
        F3: DistributionSlice,
        F4: DistributionSlice,
        p=None,
    ):
        """Q(F1, F2, F3, F4) at node index ``p`` (all nodes when None)."""
        _check_compatible((F1, F2, F3, F4), self.grid)
        tau = F1.stats.tau
        s1, s2 = self._source(F1), self._source(F2)
        f3, f4 = F3.values, F4.values

        def block_q(b: KernelBlock) -> np.ndarray:
            nb, nq, na = b.shape
            a1 = s1.at(b.p_side).reshape(nb, nq, na)
            a2 = s2.at(b.q_side).reshape(nb, nq, na)
            x3 = f3[b.rows][:, None, None]
            x4 = f4[None, :, None]
            gain = a1 * a2 * (1.0 + tau * x3) * (1.0 + tau * x4)
            loss = (1.0 + tau * a1) * (1.0 + tau * a2) * x3 * x4
            return np.sum(b.weight * (gain - loss), axis=(1, 2))

        return _select(self.kernel.reduce(block_q), p)

    def gain_loss(self, F: DistributionSlice) -> tuple[np.ndarray, np.ndarray]:
        """(G, R) on all nodes with Q(F) = G (1 + tau F) - R F."""
        _check_compatible((F,), self.grid)
        tau = F.stats.tau
        source = self._source(F)
        fq = F.values[None, :, None]

        def block_gr(b: KernelBlock) -> np.ndarray:
            nb, nq, na = b.shape
            a1 = source.at(b.p_side).reshape(nb, nq, na)
            a2 = source.at(b.q_side).reshape(nb, nq, na)
            gain = np.sum(b.weight * a1 * a2 * (1.0 + tau * fq), axis=(1, 2))
            loss = np.sum(b.weight * (1.0 + tau * a1) * (1.0 + tau * a2) * fq, axis=(1, 2))
            return np.stack((gain, loss))

        G, R = self.kernel.reduce(block_gr)
        return G, R

    def evaluate_G(self, F: DistributionSlice, p=None):
        return _select(self.gain_loss(F)[0], p)

    def evaluate_R(self, F: DistributionSlice, p=None):
        return _select(self.gain_loss(F)[1], p)

    def apply_Q(self, F: DistributionSlice) -> np.ndarray:
        G, R = self.gain_loss(F)
        return G * (1.0 + F.stats.tau * F.values) - R * F.values

    def collision_invariants_residual(self, F: DistributionSlice) -> InvariantResidual:
        """Moments of Q(F) against (1, p, p0), raw and relative to the gross flux."""
        G, R = self.gain_loss(F)
        gain = G * (1.0 + F.stats.tau * F.values)
        loss = R * F.values
        psi = invariants(self.grid.nodes, self.grid.p0)
        raw = self.grid.integrate((gain - loss)[:, None] * psi, axis=0)
        scale = float(self.grid.integrate((np.abs(gain) + np.abs(loss)) * (1.0 + self.grid.p0)))
        relative = raw / scale if scale > 0 else np.zeros_like(raw)
        return InvariantResidual(raw, relative, scale)


def interpolate_offgrid(
    F: DistributionSlice, p_cont: np.ndarray, projection: Optional[MacroProjection] = None
) -> Union[float, np.ndarray]:
    """Value of F at arbitrary momenta.

    Without a background this is the trilinear interpolant (zero outside the
    grid) clamped to the statistics bounds.
    """
    pts = np.asarray(p_cont, dtype=float)
    if F.background is not None and projection is None:
        projection = MacroProjection(F.background, F.grid)
    source = OffgridSource.from_slice(F, projection)
    out = source.at(PointSet(F.grid, pts.reshape(-1, 3)))
    return float(out[0]) if pts.ndim == 1 else out.reshape(pts.shape[:-1])


def conserve_moments(
    values: np.ndarray, reference: np.ndarray, grid: MomentumGrid, stats: StatisticsKind
) -> np.ndarray:
    """Shift ``values`` so that its mass, momentum and energy equal ``reference``'s.

    The shift is sum_k c_k psi_k F (1 + tau F), which vanishes where F sits on
    a statistics bound.
    """
    psi = invariants(grid.nodes, grid.p0)
    density = np.maximum(values * (1.0 + stats.tau * values), 0.0)
    if not np.any(density > 0):
        return values
    defect = grid.integrate((reference - values)[:, None] * psi, axis=0)
    gram = grid.integrate(psi[:, :, None] * psi[:, None, :] * density[:, None, None], axis=0)
    coef = linalg.lstsq(gram, defect)[0]
    corrected = values + density * (psi @ coef)
    return clamp_to_bounds(corrected, stats)
