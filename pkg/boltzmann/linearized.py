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

"""Linearization around a global equilibrium.

With F = m + w f, w = sqrt(m + tau m^2), the collision operator divided by w
splits into -L f, six bilinear terms and four trilinear terms; L = nu + K1 - K2.
All integrals reuse the blocks of ``CollisionKernel`` so they share nodes and
weights with ``CollisionOperator``.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from scipy import linalg, sparse

from models import EquilibriumParams, ProjectionCoefficients

from .collision import CollisionKernel, KernelBlock, OffgridSource
from .equilibrium import equilibrium_m
from .errors import EigenSolverError
from .grid import AngularQuadrature, MomentumGrid

logger = logging.getLogger(__name__)

# relative to the largest singular value
NEAR_ZERO_RTOL = 1e-8


@dataclass
class LinearOperatorMatrix:
    """Dense L on the grid.

    ``matrix`` is the symmetric part of the quadrature matrix restricted to
    the complement of the kernel; ``raw_matrix`` is the quadrature itself.
    """

    matrix: np.ndarray
    raw_matrix: np.ndarray
    nu_diag: np.ndarray
    kernel_basis: np.ndarray
    raw_asymmetry: float
    conservation_defect: float

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.matrix @ f


class _BlockFields:
    """Equilibrium factors of one block broadcast to (B, Nq, A)."""

    def __init__(self, op: "LinearizedOperator", b: KernelBlock):
        tau = op.params.tau
        nb, nq, na = b.shape
        self.shape = b.shape
        mp, wp = b.p_side.equilibrium(op.params)
        mq, wq = b.q_side.equilibrium(op.params)
        self.m_pp = mp.reshape(nb, nq, na)
        self.w_pp = wp.reshape(nb, nq, na)
        self.a_pp = 1.0 + tau * self.m_pp
        self.m_qp = mq.reshape(nb, nq, na)
        self.w_qp = wq.reshape(nb, nq, na)
        self.a_qp = 1.0 + tau * self.m_qp
        self.m_p = op.m[b.rows][:, None, None]
        self.w_p = op.w[b.rows][:, None, None]
        self.a_p = 1.0 + tau * self.m_p
        self.m_q = op.m[None, :, None]
        self.w_q = op.w[None, :, None]
        self.a_q = 1.0 + tau * self.m_q


class LinearizedOperator:
    def __init__(
        self,
        params: EquilibriumParams,
        grid: MomentumGrid,
        angular: AngularQuadrature,
        threads: int = 1,
        cache_mb: float = 256.0,
        kernel: Optional[CollisionKernel] = None,
    ):
        self.params = params
        self.grid = grid
        self.angular = angular
        self.kernel = kernel or CollisionKernel(grid, angular, threads, cache_mb)
        self.projection = self.kernel.projection(params)
        self.m = self.projection.m
        self.w = self.projection.weight

    def _perturbation(self, f: np.ndarray) -> OffgridSource:
        return OffgridSource.from_perturbation(np.asarray(f, dtype=float), self.projection)

    @cached_property
    def nu(self) -> np.ndarray:
        """Collision frequency at the grid nodes."""
        return self.kernel.reduce(self._nu_block)

    def _nu_block(self, b: KernelBlock) -> np.ndarray:
        e = _BlockFields(self, b)
        integrand = b.weight * e.m_q * e.a_pp * e.a_qp
        return np.sum(integrand, axis=(1, 2)) / e.a_p[:, 0, 0]

    def collision_frequency_nu(self, p: np.ndarray) -> np.ndarray:
        """nu at arbitrary momenta (shape (..., 3)); the q integral uses the grid."""
        pts = np.asarray(p, dtype=float)
        kernel = CollisionKernel(
            self.grid, self.angular, self.kernel.threads, cache_mb=0.0, outputs=pts
        )
        tau = self.params.tau
        m_out = equilibrium_m(self.params, pts.reshape(-1, 3))

        def block_nu(b: KernelBlock) -> np.ndarray:
            nb, nq, na = b.shape
            mp, _ = b.p_side.equilibrium(self.params)
            mq, _ = b.q_side.equilibrium(self.params)
            a_pp = 1.0 + tau * mp.reshape(nb, nq, na)
            a_qp = 1.0 + tau * mq.reshape(nb, nq, na)
            integrand = b.weight * self.m[None, :, None] * a_pp * a_qp
            return np.sum(integrand, axis=(1, 2)) / (1.0 + tau * m_out[b.rows])

        return kernel.reduce(block_nu).reshape(pts.shape[:-1])

    def apply_K1(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)

        def block(b: KernelBlock) -> np.ndarray:
            e = _BlockFields(self, b)
            return np.sum(b.weight * e.w_pp * e.w_qp * f[None, :, None], axis=(1, 2))

        return self.kernel.reduce(block)

    def apply_K2(self, f: np.ndarray) -> np.ndarray:
        source = self._perturbation(f)

        def block(b: KernelBlock) -> np.ndarray:
            e = _BlockFields(self, b)
            f_pp = source.at(b.p_side).reshape(b.shape)
            return 2.0 * np.sum(b.weight * e.w_q * e.w_qp * f_pp, axis=(1, 2))

        return self.kernel.reduce(block)

    def apply_K2_two_term(self, f: np.ndarray) -> np.ndarray:
        """K2 as the sum of its p' and q' halves before symmetrization."""
        source = self._perturbation(f)

        def block(b: KernelBlock) -> np.ndarray:
            e = _BlockFields(self, b)
            f_pp = source.at(b.p_side).reshape(b.shape)
            f_qp = source.at(b.q_side).reshape(b.shape)
            first = (e.a_pp / e.w_pp) * e.a_qp * f_pp
            second = e.a_pp * (e.a_qp / e.w_qp) * f_qp
            total = np.sum(b.weight * e.m_q * (first + second), axis=(1, 2))
            return (e.m_p / e.w_p)[:, 0, 0] * total

        return self.kernel.reduce(block)

    def apply_L(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        return self.nu * f + self.apply_K1(f) - self.apply_K2(f)

    def project_P(self, f: np.ndarray) -> tuple[np.ndarray, ProjectionCoefficients]:
        f = np.asarray(f, dtype=float)
        return self.projection.project(f), self.projection.coefficients_model(f)

    def gamma_terms(self, f: np.ndarray, h: np.ndarray) -> np.ndarray:
        """Second-order terms, shape (6, N).

        f is attached to the first and h to the second momentum of the pairs
        (p,q), (p,p'), (q,p'), (p,q'), (q,q'), (p',q').
        """
        f, h = np.asarray(f, dtype=float), np.asarray(h, dtype=float)
        tau = self.params.tau
        f_src, h_src = self._perturbation(f), self._perturbation(h)

        def block(b: KernelBlock) -> np.ndarray:
            e = _BlockFields(self, b)
            W = b.weight
            fp = f[b.rows][:, None, None]
            fq = f[None, :, None]
            hq = h[None, :, None]
            f_pp = f_src.at(b.p_side).reshape(b.shape)
            h_pp = h_src.at(b.p_side).reshape(b.shape)
            h_qp = h_src.at(b.q_side).reshape(b.shape)
            u_fq = e.w_q * fq
            u_hq = e.w_q * hq
            u_fpp = e.w_pp * f_pp
            u_hpp = e.w_pp * h_pp
            u_hqp = e.w_qp * h_qp
            inv_wp = 1.0 / e.w_p[:, 0, 0]

            def total(x):
                return np.sum(W * x, axis=(1, 2))

            g1 = fp[:, 0, 0] * total((e.m_pp * e.m_qp - e.a_pp * e.a_qp) * u_hq)
            g2 = fp[:, 0, 0] * total(tau * (e.m_qp * e.a_q - e.m_q * e.a_qp) * u_hpp)
            g3 = inv_wp * total(tau * (e.m_qp * e.a_p - e.m_p * e.a_qp) * u_fq * u_hpp)
            g4 = fp[:, 0, 0] * total(tau * (e.m_pp * e.a_q - e.m_q * e.a_pp) * u_hqp)
            g5 = inv_wp * total(tau * (e.m_pp * e.a_p - e.m_p * e.a_pp) * u_fq * u_hqp)
            g6 = inv_wp * total((e.a_p * e.a_q - e.m_p * e.m_q) * u_fpp * u_hqp)
            return np.stack((g1, g2, g3, g4, g5, g6))

        return self.kernel.reduce(block)

    def t_terms(self, f: np.ndarray, h: np.ndarray, eta: np.ndarray) -> np.ndarray:
        """Third-order terms, shape (4, N)."""
        f, h, eta = (np.asarray(v, dtype=float) for v in (f, h, eta))
        tau = self.params.tau
        f_src, h_src, eta_src = (self._perturbation(v) for v in (f, h, eta))

        def block(b: KernelBlock) -> np.ndarray:
            e = _BlockFields(self, b)
            W = b.weight
            fp = f[b.rows]
            u_fq = e.w_q * f[None, :, None]
            u_hq = e.w_q * h[None, :, None]
            u_hpp = e.w_pp * h_src.at(b.p_side).reshape(b.shape)
            u_etapp = e.w_pp * eta_src.at(b.p_side).reshape(b.shape)
            u_etaqp = e.w_qp * eta_src.at(b.q_side).reshape(b.shape)
            inv_wp = 1.0 / e.w_p[:, 0, 0]

            def total(x):
                return np.sum(W * x, axis=(1, 2))

            t1 = -tau * fp * total(u_hq * u_etapp)
            t2 = -tau * fp * total(u_hq * u_etaqp)
            t3 = tau * fp * total(u_hpp * u_etaqp)
            t4 = tau * inv_wp * total(u_fq * u_hpp * u_etaqp)
            return np.stack((t1, t2, t3, t4))

        return self.kernel.reduce(block)

    def assemble_L(self) -> LinearOperatorMatrix:
        logger.info("Assembling linear operator on %d nodes..", self.grid.size)
        N = self.grid.size
        h3 = self.grid.cell_volume
        U = self.projection.basis()

        def block(b: KernelBlock) -> np.ndarray:
            e = _BlockFields(self, b)
            nb, nq, na = b.shape
            k1 = np.sum(b.weight * e.w_pp * e.w_qp, axis=2)

            # K2 rows: weights times the off-grid evaluation operator at p'
            c = (2.0 * b.weight * e.w_q * e.w_qp).reshape(-1)
            owner = np.repeat(np.arange(nb), nq * na)
            rowsum = sparse.csr_matrix((c, (owner, np.arange(c.size))), shape=(nb, c.size))
            interp = b.p_side.interp
            k2 = (rowsum @ interp).toarray()
            _, w_pts = b.p_side.equilibrium(self.params)
            macro = self.projection.basis_at(b.p_side.psi, w_pts) - interp @ U
            k2 += (rowsum @ macro) @ (U.T * h3)
            return k1 - k2

        rows = self.kernel.map_blocks(block)
        raw = np.concatenate(rows, axis=0)
        raw[np.diag_indices(N)] += self.nu

        scale = float(np.max(np.abs(raw)))
        raw_asymmetry = float(np.max(np.abs(raw - raw.T))) / scale
        conservation_defect = float(np.linalg.norm(U.T @ raw) / np.linalg.norm(raw))
        complement = np.eye(N) - h3 * (U @ U.T)
        matrix = complement @ (0.5 * (raw + raw.T)) @ complement
        matrix = 0.5 * (matrix + matrix.T)
        logger.info(
            "raw asymmetry %.3e, conservation defect %.3e", raw_asymmetry, conservation_defect
        )
        return LinearOperatorMatrix(
            matrix=matrix,
            raw_matrix=raw,
            nu_diag=self.nu.copy(),
            kernel_basis=U,
            raw_asymmetry=raw_asymmetry,
            conservation_defect=conservation_defect,
        )


def kernel_singular_values(L: LinearOperatorMatrix) -> np.ndarray:
    """Ascending singular values of the quadrature matrix itself.

    Nothing is projected out, so the count of near-zero values is a real
    check of the five collision invariants.
    """
    return np.sort(linalg.svdvals(L.raw_matrix))


def projected_singular_values(L: LinearOperatorMatrix) -> np.ndarray:
    """Ascending singular values of the symmetrized operator on the microscopic subspace."""
    return np.sort(linalg.svdvals(L.matrix))


def count_near_zero(values: np.ndarray, rtol: float = NEAR_ZERO_RTOL) -> int:
    """Singular values at or below ``rtol`` times the largest one."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0
    return int(np.sum(values <= rtol * float(np.max(values))))


def coercivity_delta(L: LinearOperatorMatrix) -> float:
    """Smallest <Lf, f>/|f|_nu^2 over f orthogonal to the kernel basis."""
    complement = linalg.null_space(L.kernel_basis.T)
    stiffness = complement.T @ L.matrix @ complement
    mass = complement.T @ (L.nu_diag[:, None] * complement)
    try:
        values = linalg.eigh(
            stiffness, mass, eigvals_only=True, subset_by_index=[0, 0]
        )
    except (linalg.LinAlgError, ValueError) as e:
        raise EigenSolverError(f"generalized eigenproblem failed: {e}") from e
    return float(values[0])
