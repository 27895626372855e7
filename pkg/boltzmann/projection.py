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

"""Macro-micro split with respect to the weighted collision invariants."""

from typing import NamedTuple

import numpy as np

from models import EquilibriumParams, ProjectionCoefficients

from .equilibrium import equilibrium_m, sqrt_weight
from .grid import MomentumGrid
from .kinematics import energy


def invariants(p: np.ndarray, p0: np.ndarray = None) -> np.ndarray:
    """(1, p1, p2, p3, p0) stacked on the last axis."""
    p = np.asarray(p, dtype=float)
    if p0 is None:
        p0 = energy(p)
    return np.concatenate((np.ones(p.shape[:-1] + (1,)), p, p0[..., None]), axis=-1)


class MacroSplit(NamedTuple):
    coefficients: np.ndarray  # (A, B1, B2, B3, C)
    micro: np.ndarray  # (I - P) f on the grid


class MacroProjection:
    """Orthogonal projection onto span{(1, p, p0) w} with w = sqrt(m + tau m^2).

    Coefficients follow the Gram-Schmidt construction: B decouples by parity,
    A and C share the (1, p0) block through lambda_0.
    """

    def __init__(self, params: EquilibriumParams, grid: MomentumGrid):
        self.params = params
        self.grid = grid
        self.m = equilibrium_m(params, grid.nodes)
        self.weight = sqrt_weight(params, grid.nodes)
        self.psi = invariants(grid.nodes, grid.p0)

        w2 = self.weight**2
        self.lam = grid.integrate(w2)
        self.lam_i = grid.integrate(grid.nodes**2 * w2[:, None], axis=0)
        self.lam0 = grid.integrate(grid.p0 * w2)
        self.lam00 = grid.integrate(grid.p0**2 * w2)
        self.schur = self.lam00 - self.lam0**2 / self.lam

    @property
    def lambdas(self) -> tuple[float, float, float, float, float, float]:
        li = self.lam_i
        return (
            float(self.lam),
            float(li[0]),
            float(li[1]),
            float(li[2]),
            float(self.lam0),
            float(self.lam00),
        )

    def coefficients(self, f: np.ndarray) -> np.ndarray:
        """(A, B1, B2, B3, C) of f; leading axes of f are kept."""
        f = np.asarray(f, dtype=float)
        h3 = self.grid.cell_volume
        weighted = self.psi * self.weight[:, None]
        moments = h3 * (f @ weighted)
        s0, s4 = moments[..., 0], moments[..., 4]
        C = (s4 - self.lam0 / self.lam * s0) / self.schur
        A = s0 / self.lam - self.lam0 / self.lam * C
        B = moments[..., 1:4] / self.lam_i
        return np.concatenate((A[..., None], B, C[..., None]), axis=-1)

    def reconstruct(self, coefficients: np.ndarray) -> np.ndarray:
        return self.weight * (coefficients @ self.psi.T)

    def project(self, f: np.ndarray) -> np.ndarray:
        return self.reconstruct(self.coefficients(f))

    def split(self, f: np.ndarray) -> MacroSplit:
        coefficients = self.coefficients(f)
        return MacroSplit(coefficients, np.asarray(f, dtype=float) - self.reconstruct(coefficients))

    def coefficients_model(self, f: np.ndarray) -> ProjectionCoefficients:
        A, b1, b2, b3, C = (float(v) for v in self.coefficients(f))
        return ProjectionCoefficients(A=A, B=(b1, b2, b3), C=C, lambdas=self.lambdas)

    def _basis_scales(self, psi: np.ndarray) -> np.ndarray:
        shifted = psi.copy()
        shifted[..., 4] = psi[..., 4] - self.lam0 / self.lam
        norms = np.concatenate(([self.lam], self.lam_i, [self.schur]))
        return shifted / np.sqrt(norms)

    def basis(self) -> np.ndarray:
        """Orthonormal kernel basis on the grid, shape (N, 5)."""
        return self._basis_scales(self.psi) * self.weight[:, None]

    def basis_at(self, psi: np.ndarray, weight: np.ndarray) -> np.ndarray:
        """The same basis functions evaluated at off-grid points."""
        return self._basis_scales(psi) * weight[..., None]
