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

"""Checks of the reduced kernel integral and the on-shell identities behind it.

After the delta functions are integrated out, the kernel integral B(p, p')
between two momenta becomes a two-dimensional (phi, y) integral whose
exponent is controlled by

    R = (p0 + p'0)/2,    r = |p x p'| / gbar.

Replacing the angular factor cos(theta/2) by one yields a closed form in
terms of two Bessel y-integrals. Everything here is verification code: the
solver never calls it.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy import integrate, linalg, special

from models import EquilibriumParams, IdentityCheck, StatisticsKind

from .equilibrium import equilibrium_m, make_params
from .errors import DegenerateGeometryError, DomainError
from .kinematics import (
    ArrayLike,
    CollisionGeometry,
    PrePostQuadruple,
    com_post_momenta,
    energy,
    four_vector,
    lorentz_boost,
    minkowski4,
    relative_g,
    scattering_cos_theta,
)

logger = logging.getLogger(__name__)

SERIES_LIMIT = 15.0
# trapezoid nodes in phi: the aliasing error of exp(z cos phi) is about
# exp(-N^2/(2z)), so N grows with the largest z = a r y on the y rule
PHI_NODES = 64
PHI_ALIAS_FACTOR = 80.0
Y_NODES = 256
# ln(1e16) plus headroom for the polynomial factors of the integrand
Y_DECAY_LENGTHS = 45.0
IDENTITY_TOL = 1e-10
ROUND_TRIP_TOL = 1e-12
BESSEL_TOL = 1e-8
I0_TOL = 1e-12
I0_POINTS = (0.0, 0.5, 1.0, 3.0, 7.5, 14.9, 15.0, 15.1, 20.0, 30.0, 60.0, 120.0, 300.0)
# gbar below this (relative to the momenta) makes the boost ill-conditioned
SMALL_GBAR = 1e-6

_MINKOWSKI = np.diag([-1.0, 1.0, 1.0, 1.0])


def _vec(x: ArrayLike) -> np.ndarray:
    return np.asarray(x, dtype=float).reshape(3)


@dataclass(frozen=True)
class ReducedGeometry:
    p: np.ndarray
    p_prime: np.ndarray
    gbar: float
    sbar: float
    R: float
    r: float
    radicand: float  # R^2 - r^2 = |p - p'|^2 sbar / (4 gbar^2)

    @classmethod
    def from_momenta(cls, p: ArrayLike, p_prime: ArrayLike) -> "ReducedGeometry":
        p, pp = _vec(p), _vec(p_prime)
        gbar = float(relative_g(p, pp))
        if gbar == 0.0:
            raise DegenerateGeometryError("reduced geometry needs p != p'")
        sbar = gbar * gbar + 4.0
        d = p - pp
        return cls(
            p=p,
            p_prime=pp,
            gbar=gbar,
            sbar=sbar,
            R=0.5 * float(energy(p) + energy(pp)),
            r=float(np.linalg.norm(np.cross(p, pp))) / gbar,
            radicand=float(np.dot(d, d)) * sbar / (4.0 * gbar * gbar),
        )

    @property
    def p0(self) -> float:
        return float(energy(self.p))

    @property
    def pp0(self) -> float:
        return float(energy(self.p_prime))


def _i0_series(y: float) -> float:
    quarter = 0.25 * y * y
    term, total, k = 1.0, 1.0, 0
    while term > 1e-17 * total:
        k += 1
        term *= quarter / (k * k)
        total += term
    return total


def _i0_hankel(y: float) -> float:
    """exp(-y) I0(y) from the asymptotic expansion, truncated at its smallest term."""
    term, total, k = 1.0, 1.0, 0
    while True:
        k += 1
        nxt = term * (2 * k - 1) ** 2 / (8.0 * y * k)
        if nxt >= term or nxt < 1e-17 * total:
            break
        term = nxt
        total += term
    return total / math.sqrt(2.0 * math.pi * y)


def bessel_I0(y: float) -> float:
    """(1/pi) int_0^pi exp(y cos phi) dphi.

    Power series up to ``SERIES_LIMIT``, Hankel asymptotic expansion above it
    truncated at its smallest term.
    """
    y = abs(float(y))
    if y <= SERIES_LIMIT:
        return _i0_series(y)
    return _i0_hankel(y) * math.exp(y)


def bessel_I0e(y: float) -> float:
    """exp(-|y|) I0(y), finite for every y."""
    y = abs(float(y))
    if y <= SERIES_LIMIT:
        return _i0_series(y) * math.exp(-y)
    return _i0_hankel(y)


def i0_defining_integral(y: float) -> float:
    """exp(-|y|) I0(y) from (1/pi) int_0^pi exp(y (cos phi - 1)) dphi by adaptive quadrature."""
    y = abs(float(y))
    value, _ = integrate.quad(
        lambda phi: math.exp(-2.0 * y * math.sin(0.5 * phi) ** 2),
        0.0,
        math.pi,
        limit=200,
        epsabs=0.0,
        epsrel=1e-13,
    )
    return value / math.pi


def _check_radii(R: float, r: float) -> float:
    if not R > r or r < 0:
        raise DomainError(f"closed forms need R > r >= 0, got R={R}, r={r}")
    return (R - r) * (R + r)


def closed_form_I(R: float, r: float) -> float:
    """int_0^inf y/sqrt(y^2+1) exp(-R sqrt(y^2+1)) I0(r y) dy."""
    X = _check_radii(R, r)
    root = math.sqrt(X)
    return math.exp(-root) / root


def closed_form_II(R: float, r: float) -> float:
    """int_0^inf y exp(-R sqrt(y^2+1)) I0(r y) dy."""
    X = _check_radii(R, r)
    root = math.sqrt(X)
    return R / X * (1.0 + 1.0 / root) * math.exp(-root)


def bessel_y_integrals(R: float, r: float) -> tuple[float, float]:
    """Both y-integrals by adaptive quadrature, for checking the closed forms.

    The integrands are rescaled by exp(sqrt(R^2 - r^2)), their peak value, and
    I0 enters through its exponentially scaled form ``bessel_I0e``.
    """
    X = _check_radii(R, r)
    root = math.sqrt(X)
    peak = r / root
    y_max = peak + Y_DECAY_LENGTHS / (R - r)

    def scaled(y: float) -> float:
        rho = math.sqrt(y * y + 1.0)
        return bessel_I0e(r * y) * math.exp(root - R * rho + r * y)

    opts = dict(limit=500, epsabs=0.0, epsrel=1e-13, points=[peak])
    first, _ = integrate.quad(lambda y: y / math.sqrt(y * y + 1.0) * scaled(y), 0.0, y_max, **opts)
    second, _ = integrate.quad(lambda y: y * scaled(y), 0.0, y_max, **opts)
    return first * math.exp(-root), second * math.exp(-root)


def _y_rule(geom: ReducedGeometry, a: float) -> tuple[np.ndarray, np.ndarray]:
    aR, ar = a * geom.R, a * geom.r
    peak = geom.r / math.sqrt(geom.radicand)
    y_max = peak + Y_DECAY_LENGTHS / (aR - ar)
    x, w = special.roots_legendre(Y_NODES)
    return 0.5 * y_max * (x + 1.0), 0.5 * y_max * w


def reduced_B(p: ArrayLike, p_prime: ArrayLike, a: float = 1.0) -> float:
    """The reduced kernel integral by (phi, y) quadrature.

    The kernel is s * 2 gbar cos(theta/2) with g^2 = gbar^2 + (sbar/2)(sqrt(y^2+1) - 1);
    the 1/gbar of the delta function cancels the gbar of the kernel.
    """
    geom = ReducedGeometry.from_momenta(p, p_prime)
    sbar, gbar = geom.sbar, geom.gbar
    y, wy = _y_rule(geom, a)
    rho = np.sqrt(y * y + 1.0)

    g2 = gbar * gbar + 0.5 * sbar * y * y / (rho + 1.0)
    # cos(theta/2) = sqrt(1 - gbar^2/g^2) without the cancellation at y -> 0
    cos_half = y * np.sqrt(0.5 * sbar / (rho + 1.0)) / np.sqrt(g2)
    s_kernel = 0.5 * sbar * (1.0 + rho)
    radial = 0.25 * math.sqrt(sbar) * y / rho * s_kernel * 2.0 * cos_half

    z_max = a * geom.r * float(y[-1])
    nphi = max(PHI_NODES, 2 * math.ceil(0.5 * math.sqrt(PHI_ALIAS_FACTOR * z_max)))
    phi = 2.0 * np.pi * np.arange(nphi) / nphi
    shift = math.sqrt(geom.radicand) * a
    exponent = (
        -a * geom.R * rho[:, None]
        + a * geom.r * y[:, None] * np.cos(phi)[None, :]
        + shift
    )
    phi_sum = np.exp(exponent).sum(axis=1) * (2.0 * np.pi / nphi)
    value = float(np.dot(wy, radial * phi_sum))
    return value * math.exp(-0.5 * a * (geom.pp0 - geom.p0) - shift)


class UpperBound(NamedTuple):
    bound: float  # closed-form bound with cos(theta/2) -> 1
    simplified: float  # constant * sqrt(sbar) (p0 + p'0)
    constant: float


def bound_constant(a: float) -> float:
    """pi (2/a + 1/a^2); 3 pi at a = 1."""
    return math.pi * (2.0 / a + 1.0 / (a * a))


def B_upper(p: ArrayLike, p_prime: ArrayLike, a: float = 1.0) -> UpperBound:
    geom = ReducedGeometry.from_momenta(p, p_prime)
    aR, ar = a * geom.R, a * geom.r
    bracket = closed_form_I(aR, ar) + closed_form_II(aR, ar)
    juttner = math.exp(-0.5 * a * (geom.pp0 - geom.p0))
    bound = 0.5 * math.pi * geom.sbar**1.5 * juttner * bracket
    constant = bound_constant(a)
    simplified = constant * math.sqrt(geom.sbar) * (geom.p0 + geom.pp0)
    return UpperBound(bound, simplified, constant)


def absorption_bound(p: ArrayLike, p_prime: ArrayLike, a: float = 1.0) -> tuple[float, float]:
    """(J((p'0-p0)/2) exp(-a sqrt(R^2-r^2)), exp(-a(p'0-p0)/2) exp(-a|p-p'|/2)).

    The first never exceeds the second, and the second never exceeds one.
    """
    geom = ReducedGeometry.from_momenta(p, p_prime)
    half_gap = 0.5 * (geom.pp0 - geom.p0)
    lhs = math.exp(-a * (half_gap + math.sqrt(geom.radicand)))
    distance = float(np.linalg.norm(geom.p - geom.p_prime))
    rhs = math.exp(-a * (half_gap + 0.5 * distance))
    return lhs, rhs


def change_of_variables_matrix() -> np.ndarray:
    """(q, q') -> (q + q', q - q') on pairs of four-vectors."""
    eye = np.eye(4)
    return np.block([[eye, eye], [eye, -eye]])


class _Report:
    def __init__(self, sample: int):
        self.sample = sample
        self.rows: list[IdentityCheck] = []

    def close(self, check: str, lhs: float, rhs: float, tol: float = IDENTITY_TOL, scale=1.0):
        value = abs(lhs - rhs) / max(1.0, abs(scale))
        self.value(check, value, tol)

    def value(self, check: str, value: float, tol: float = IDENTITY_TOL):
        self.rows.append(
            IdentityCheck(
                check=check,
                sample=self.sample,
                value=float(value),
                tolerance=tol,
                passed=bool(np.isfinite(value) and value <= tol),
            )
        )

    def skip(self, check: str, tol: float = IDENTITY_TOL):
        self.rows.append(
            IdentityCheck(
                check=check, sample=self.sample, value=0.0, tolerance=tol, passed=True, skipped=True
            )
        )


def on_shell_identity_suite(
    quad: PrePostQuadruple,
    sample: int = 0,
    params: Optional[EquilibriumParams] = None,
) -> list[IdentityCheck]:
    """Evaluate the on-shell identities of one collision.

    Checks whose divisions degenerate (g = 0 or gbar = 0) are reported as
    skipped instead of failed.
    """
    rep = _Report(sample)
    p, q, pp, qp = (_vec(x) for x in quad)
    P, Q, PP, QP = (four_vector(x) for x in (p, q, pp, qp))
    scale = float(max(P[0], Q[0], PP[0], QP[0]))

    rep.close("momentum_conservation", float(np.max(np.abs((p + q) - (pp + qp)))), 0.0, scale=scale)
    rep.close("energy_conservation", P[0] + Q[0], PP[0] + QP[0], scale=scale)

    g = float(relative_g(p, q))
    gbar = float(relative_g(p, pp))
    gtilde = float(relative_g(p, qp))
    sq = scale * scale
    rep.close("g_invariance", g, float(relative_g(pp, qp)), scale=scale)
    rep.close("gbar_symmetry", gbar, float(relative_g(q, qp)), scale=scale)
    rep.close("gtilde_symmetry", gtilde, float(relative_g(pp, q)), scale=scale)
    rep.close("pythagorean", g * g, gbar * gbar + gtilde * gtilde, scale=sq)
    gbar_four = -0.5 * float(minkowski4(P + QP, Q + PP - P - QP))
    gtilde_four = -0.5 * float(minkowski4(P + PP, Q + QP - P - PP))
    rep.close("gbar_four_vector", gbar * gbar, gbar_four, scale=sq)
    rep.close("gtilde_four_vector", gtilde * gtilde, gtilde_four, scale=sq)
    rep.value(
        "energy_difference_bound",
        max(0.0, abs(PP[0] - P[0]) - float(np.linalg.norm(pp - p))) / scale,
    )

    if g > 0.0:
        cos_theta = float(scattering_cos_theta(quad))
        rep.close("cos_theta", cos_theta, 1.0 - 2.0 * gbar * gbar / (g * g))
        rep.close("half_angle", math.sqrt(max(0.0, 0.5 * (1.0 - cos_theta))), gbar / g)
    else:
        rep.skip("cos_theta")
        rep.skip("half_angle")

    if gbar > SMALL_GBAR * scale:
        lam = lorentz_boost(p, pp)
        sqs = math.sqrt(gbar * gbar + 4.0)
        sum_error = float(np.max(np.abs(lam @ (P + PP) - [sqs, 0, 0, 0])))
        difference_error = float(np.max(np.abs(lam @ (P - PP) - [0, 0, 0, -gbar])))
        rep.close("boost_sum", sum_error, 0.0, 1e-9, scale)
        rep.close("boost_difference", difference_error, 0.0, 1e-9, scale)
        metric = float(np.max(np.abs(lam.T @ _MINKOWSKI @ lam - _MINKOWSKI)))
        rep.close("boost_metric", metric, 0.0, 1e-9, float(np.max(np.abs(lam))) ** 2)
    else:
        for check in ("boost_sum", "boost_difference", "boost_metric"):
            rep.skip(check, 1e-9)

    T = change_of_variables_matrix()
    jacobian = 1.0 / abs(float(linalg.det(T)))
    rep.close("change_of_variables_jacobian", jacobian, 1.0 / 16.0, ROUND_TRIP_TOL)
    pair = np.concatenate((Q, QP))
    back = linalg.solve(T, T @ pair)
    round_trip = float(np.max(np.abs(back - pair)))
    rep.close("change_of_variables_round_trip", round_trip, 0.0, ROUND_TRIP_TOL, scale)

    if params is not None:
        m = equilibrium_m(params, np.stack((p, q, pp, qp)))
        tau = params.tau
        before = m[0] * m[1] * (1 + tau * m[2]) * (1 + tau * m[3])
        after = m[2] * m[3] * (1 + tau * m[0]) * (1 + tau * m[1])
        rep.value("detailed_balance", abs(before - after) / max(before, after, 1e-300))
    return rep.rows


def random_quadruples(
    rng: np.random.Generator, count: int, pmax: float = 10.0
) -> list[PrePostQuadruple]:
    p = rng.uniform(-pmax, pmax, size=(count, 3)) / math.sqrt(3.0)
    q = rng.uniform(-pmax, pmax, size=(count, 3)) / math.sqrt(3.0)
    omega = rng.normal(size=(count, 3))
    omega /= np.linalg.norm(omega, axis=1, keepdims=True)
    return [
        com_post_momenta(p[i], q[i], CollisionGeometry(omega[i], 0.0, 0.0)) for i in range(count)
    ]


def random_pairs(rng: np.random.Generator, count: int, pmax: float = 10.0) -> np.ndarray:
    """(count, 2, 3) momentum pairs with |p|, |p'| <= pmax."""
    direction = rng.normal(size=(count, 2, 3))
    direction /= np.linalg.norm(direction, axis=-1, keepdims=True)
    radius = pmax * rng.uniform(0.0, 1.0, size=(count, 2, 1)) ** (1.0 / 3.0)
    return direction * radius


def bessel_checks(lattice: Optional[list[tuple[float, float]]] = None) -> list[IdentityCheck]:
    """Closed forms against quadrature over an (R, r) lattice."""
    if lattice is None:
        lattice = [
            (R, frac * R)
            for R in (1.1, 2.0, 5.0, 10.0, 20.0)
            for frac in (0.0, 0.25, 0.5, 0.75, 0.95)
        ]
    rows = []
    for i, (R, r) in enumerate(lattice):
        first, second = bessel_y_integrals(R, r)
        for name, exact, numeric in (
            ("bessel_I", closed_form_I(R, r), first),
            ("bessel_II", closed_form_II(R, r), second),
        ):
            value = abs(numeric - exact) / exact
            rows.append(
                IdentityCheck(
                    check=name,
                    sample=i,
                    value=value,
                    tolerance=BESSEL_TOL,
                    passed=value <= BESSEL_TOL,
                )
            )
    return rows


def bessel_I0_checks(points=I0_POINTS) -> list[IdentityCheck]:
    """bessel_I0 against its defining integral, relative error per point."""
    rows = []
    for i, y in enumerate(points):
        exact = i0_defining_integral(y)
        value = abs(bessel_I0(y) * math.exp(-abs(y)) / exact - 1.0)
        rows.append(
            IdentityCheck(
                check="bessel_I0", sample=i, value=value, tolerance=I0_TOL, passed=value <= I0_TOL
            )
        )
    return rows


def bound_checks(pairs: np.ndarray, a: float = 1.0) -> list[IdentityCheck]:
    """reduced_B <= B_upper <= simplified bound and the R, r estimates per pair."""
    rows = []

    def add(name, i, value, tol=0.0):
        rows.append(
            IdentityCheck(
                check=name, sample=i, value=value, tolerance=tol, passed=bool(value <= tol)
            )
        )

    for i, (p, pp) in enumerate(pairs):
        geom = ReducedGeometry.from_momenta(p, pp)
        upper = B_upper(p, pp, a)
        reduced = reduced_B(p, pp, a)
        add("reduced_below_bound", i, (reduced - upper.bound) / upper.bound, 1e-9)
        add("bound_below_simplified", i, (upper.bound - upper.simplified) / upper.simplified, 1e-12)
        X = geom.radicand
        estimate = max(0.25 * geom.gbar**2 + 1.0, 0.25 * float(np.dot(p - pp, p - pp)))
        add("radicand_estimate", i, (estimate - X) / X, 1e-12)
        identity_error = abs((geom.R**2 - geom.r**2) - X) / max(1.0, geom.R**2)
        add("radicand_identity", i, identity_error, IDENTITY_TOL)
        add("radicand_inverse", i, 0.25 * geom.sbar / X - 1.0, 1e-12)
        lhs, rhs = absorption_bound(p, pp, a)
        add("absorption", i, max(lhs - rhs, rhs - 1.0), 1e-15)
    return rows


def oracle_report(
    samples: int = 10_000,
    pairs: int = 500,
    seed: int = 0,
    a: float = 1.0,
    stats: StatisticsKind = StatisticsKind.FERMION,
) -> list[IdentityCheck]:
    """Full verification report: on-shell identities, Bessel closed forms, bounds."""
    rng = np.random.default_rng(seed)
    params = make_params(a, 0.0, stats)
    rows: list[IdentityCheck] = []
    for i, quad in enumerate(random_quadruples(rng, samples)):
        rows.extend(on_shell_identity_suite(quad, sample=i, params=params))
    rows.extend(bessel_I0_checks())
    rows.extend(bessel_checks())
    rows.extend(bound_checks(random_pairs(rng, pairs), a))
    failed = sum(not row.passed for row in rows)
    logger.info("oracle: %d checks, %d failed", len(rows), failed)
    return rows
