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

"""On-shell four-momentum algebra in units c = m = 1.

Momenta are numpy arrays of shape (..., 3); every function broadcasts over the
leading axes. Four-vectors are (p0, p) with signature (-, +, +, +).
"""

from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .errors import CollinearGeometryError, DegenerateGeometryError

RADICAND_TOL = 1e-12
COLLINEAR_TOL = 1e-12
# |P| below which the boost correction of the CoM map is taken as its limit 0
SMALL_TOTAL_MOMENTUM = 1e-13
# switch between the z and x reference axes of polar_frame; irrational so
# lattice directions never sit on it
FRAME_SWITCH = 0.6180339887498949

ArrayLike = Union[np.ndarray, "FourMomentum", list, tuple]


@dataclass(frozen=True)
class FourMomentum:
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float).reshape(3))

    @property
    def p0(self) -> float:
        return float(energy(self.p))

    @property
    def four(self) -> np.ndarray:
        return np.concatenate(([self.p0], self.p))

    def __array__(self, dtype=None, copy=None):
        return self.p if dtype is None else self.p.astype(dtype)


@dataclass(frozen=True)
class CollisionGeometry:
    omega: np.ndarray
    theta: float
    phi: float

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "CollisionGeometry":
        omega = np.array(
            [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]
        )
        return cls(omega=omega, theta=theta, phi=phi)

    @classmethod
    def about_axis(cls, axis: ArrayLike, theta: float, phi: float) -> "CollisionGeometry":
        """Angles measured from ``axis`` instead of the z axis."""
        e1, e2, k = polar_frame(_vec(axis))
        omega = (
            np.sin(theta) * np.cos(phi) * e1
            + np.sin(theta) * np.sin(phi) * e2
            + np.cos(theta) * k
        )
        return cls(omega=omega, theta=theta, phi=phi)


class PrePostQuadruple(NamedTuple):
    p: np.ndarray
    q: np.ndarray
    p_prime: np.ndarray
    q_prime: np.ndarray


def _vec(x: ArrayLike) -> np.ndarray:
    return np.asarray(x, dtype=float)


def _dot(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...i->...", u, v)


def energy(p: ArrayLike) -> np.ndarray:
    p = _vec(p)
    return np.sqrt(1.0 + _dot(p, p))


def four_vector(p: ArrayLike) -> np.ndarray:
    p = _vec(p)
    return np.concatenate((energy(p)[..., None], p), axis=-1)


def minkowski4(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """-u0 v0 + u.v for general four-vectors of shape (..., 4)."""
    return -u[..., 0] * v[..., 0] + _dot(u[..., 1:], v[..., 1:])


def minkowski_product(p: ArrayLike, q: ArrayLike) -> np.ndarray:
    p, q = _vec(p), _vec(q)
    return -energy(p) * energy(q) + _dot(p, q)


def relative_g2(p: ArrayLike, q: ArrayLike) -> np.ndarray:
    """g^2 = |p - q|^2 - (p0 - q0)^2 without the cancellation of -2pq - 2."""
    p, q = _vec(p), _vec(q)
    d = p - q
    d0 = (_dot(p, p) - _dot(q, q)) / (energy(p) + energy(q))
    return _dot(d, d) - d0 * d0


def _checked_sqrt(radicand: np.ndarray, scale: np.ndarray) -> np.ndarray:
    if np.any(radicand < -RADICAND_TOL * np.maximum(scale, 1.0)):
        raise DegenerateGeometryError(
            f"negative radicand {np.min(radicand):.3e} beyond rounding noise"
        )
    return np.sqrt(np.maximum(radicand, 0.0))


def relative_g(p: ArrayLike, q: ArrayLike) -> np.ndarray:
    p, q = _vec(p), _vec(q)
    d = p - q
    return _checked_sqrt(relative_g2(p, q), _dot(d, d))


def relative_quantities(p: ArrayLike, q: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    """Returns (s, g) with s = g^2 + 4."""
    g = relative_g(p, q)
    return g * g + 4.0, g


def polar_frame(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Orthonormal (e1, e2, k) with k = axis; frame(-k) = (e1, -e2, -k)."""
    k = _vec(axis)
    use_z = np.abs(k[..., 2]) < FRAME_SWITCH
    ref = np.where(use_z[..., None], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0])
    e1 = ref - _dot(ref, k)[..., None] * k
    e1 = e1 / np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(k, e1)
    return e1, e2, k


def com_axis(p: ArrayLike, q: ArrayLike) -> np.ndarray:
    """Unit direction of p in the center-of-momentum frame of (p, q).

    Falls back to the z axis when g = 0.
    """
    p, q = np.broadcast_arrays(_vec(p), _vec(q))
    s, _ = relative_quantities(p, q)
    sqs = np.sqrt(s)
    P = p + q
    P0 = energy(p) + energy(q)
    coef = _dot(p, P) / (sqs * (P0 + sqs)) - energy(p) / sqs
    k = p + coef[..., None] * P
    norm = np.linalg.norm(k, axis=-1)
    ok = norm > 1e-14 * (1.0 + np.linalg.norm(p, axis=-1))
    safe = np.where(ok, norm, 1.0)
    return np.where(ok[..., None], k / safe[..., None], [0.0, 0.0, 1.0])


def boost_correction(P: np.ndarray, P0: np.ndarray, sqs: np.ndarray, omega: np.ndarray):
    """(gamma - 1) P (P.omega)/|P|^2, written as P (P.omega)/(sqrt(s)(P0 + sqrt(s)))."""
    coef = _dot(P, omega) / (sqs * (P0 + sqs))
    coef = np.where(np.linalg.norm(P, axis=-1) < SMALL_TOTAL_MOMENTUM, 0.0, coef)
    return coef[..., None] * P


def com_post_momenta(
    p: ArrayLike, q: ArrayLike, geom: Union[CollisionGeometry, ArrayLike]
) -> PrePostQuadruple:
    omega = geom.omega if isinstance(geom, CollisionGeometry) else _vec(geom)
    p, q = _vec(p), _vec(q)
    s, g = relative_quantities(p, q)
    sqs = np.sqrt(s)
    P = p + q
    P0 = energy(p) + energy(q)
    u = omega + boost_correction(P, P0, sqs, omega)
    half = 0.5 * g[..., None] * u
    return PrePostQuadruple(p, q, 0.5 * P + half, 0.5 * P - half)


def scattering_cos_theta(quad: PrePostQuadruple) -> np.ndarray:
    g2 = relative_g(quad.p, quad.q) ** 2
    if np.any(g2 == 0.0):
        raise DegenerateGeometryError("scattering angle undefined for g = 0")
    before = four_vector(quad.p) - four_vector(quad.q)
    after = four_vector(quad.p_prime) - four_vector(quad.q_prime)
    return minkowski4(before, after) / g2


def moller_velocity(p: ArrayLike, q: ArrayLike) -> np.ndarray:
    p, q = _vec(p), _vec(q)
    vp = p / energy(p)[..., None]
    vq = q / energy(q)[..., None]
    d = vp - vq
    c = np.cross(vp, vq)
    return _checked_sqrt(_dot(d, d) - _dot(c, c), np.ones(d.shape[:-1]))


def cross_section(g: ArrayLike, theta: ArrayLike) -> np.ndarray:
    return np.asarray(g, dtype=float) * np.sin(theta)


def lorentz_boost(p: ArrayLike, p_prime: ArrayLike) -> np.ndarray:
    """Lorentz matrix acting on contravariant (x0, x) with

    L (p + p') = (sqrt(sbar), 0, 0, 0) and L (p - p') = (0, 0, 0, -gbar).
    """
    p, pp = _vec(p).reshape(3), _vec(p_prime).reshape(3)
    p0, pp0 = float(energy(p)), float(energy(pp))
    gbar = float(relative_g(p, pp))
    if gbar == 0.0:
        raise DegenerateGeometryError("boost undefined for coincident momenta")
    sqs = np.sqrt(gbar * gbar + 4.0)
    P, D = p + pp, p - pp

    lam = np.zeros((4, 4))
    lam[0] = np.concatenate(([p0 + pp0], -P)) / sqs
    lam[3] = np.concatenate(([p0 - pp0], -D)) / gbar

    cross = np.cross(p, pp)
    ncross = float(np.linalg.norm(cross))
    if ncross >= COLLINEAR_TOL:
        mu = float(minkowski_product(p, pp))
        alpha = p0 + pp0 * mu
        beta = pp0 + p0 * mu
        lam[1, 0] = 2.0 * ncross / (gbar * sqs)
        lam[1, 1:] = 2.0 * (alpha * p + beta * pp) / (gbar * sqs * ncross)
        lam[2, 1:] = cross / ncross
        return lam

    # collinear: rotate the common line onto z, then boost along it
    nd = float(np.linalg.norm(D))
    if nd == 0.0:
        raise CollinearGeometryError("no direction to align the boost with")
    e1, e2, _ = polar_frame(D / nd)
    lam[1, 1:] = e1
    lam[2, 1:] = e2
    return lam
