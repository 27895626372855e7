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

import math
from enum import IntEnum
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

BOSON_MARGIN = 1e-10


class StatisticsKind(IntEnum):
    """Quantum statistics; the value is tau in 1 + tau*F."""

    BOSON = 1
    FERMION = -1

    @property
    def tau(self) -> int:
        return int(self.value)

    @classmethod
    def parse(cls, v: "str | int | StatisticsKind") -> "StatisticsKind":
        if isinstance(v, StatisticsKind):
            return v
        if isinstance(v, str):
            key = v.strip().lower()
            if key in ("boson", "bose", "+1", "1"):
                return cls.BOSON
            if key in ("fermion", "fermi", "-1"):
                return cls.FERMION
            raise ValueError(f"unknown statistics '{v}' (expected boson or fermion)")
        return cls(int(v))


def check_equilibrium_domain(a: float, c: float, stats: StatisticsKind) -> None:
    if not (math.isfinite(a) and math.isfinite(c)):
        raise ValueError("equilibrium parameters must be finite")
    if a <= 0.0:
        raise ValueError(f"a must be positive, got {a}")
    if stats is StatisticsKind.BOSON and c + a < BOSON_MARGIN:
        raise ValueError(f"boson equilibria need c > -a, got a={a}, c={c}")


class EquilibriumParams(BaseModel):
    """Parameters (a, c, tau) of m(p) = 1/(exp(a p0 + c) - tau)."""

    model_config = ConfigDict(frozen=True)

    a: float
    c: float
    stats: StatisticsKind

    @field_validator("stats", mode="before")
    def validate_stats(cls, v):
        return StatisticsKind.parse(v)

    @model_validator(mode="after")
    def check_domain(self) -> "EquilibriumParams":
        check_equilibrium_domain(self.a, self.c, self.stats)
        return self

    @property
    def tau(self) -> int:
        return self.stats.tau


class ProjectionCoefficients(BaseModel):
    """Coefficients of Pf = (A + B.p + C p0) sqrt(m + tau m^2)."""

    A: float
    B: tuple[float, float, float]
    C: float
    # (lambda, lambda_1, lambda_2, lambda_3, lambda_0, lambda_00)
    lambdas: tuple[float, float, float, float, float, float]


class DiagnosticsRecord(BaseModel):
    t: float
    mass: float
    px: float
    py: float
    pz: float
    energy: float
    H: float
    l2_f: float
    nu_norm_f: float
    min_F: float
    max_F: float

    @property
    def momentum(self) -> tuple[float, float, float]:
        return (self.px, self.py, self.pz)


class IdentityCheck(BaseModel):
    """One row of the oracle report."""

    check: str
    sample: int
    value: float
    tolerance: float
    passed: bool
    skipped: bool = False


PerturbationKind = Literal["none", "bump", "wave", "noise"]
SpatialMode = Literal["none", "torus1d"]


class SimulationConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    stats: StatisticsKind
    a: float
    c: float
    pmax: float = Field(gt=0)
    n: int
    ntheta: int = Field(ge=1)
    nphi: int = Field(ge=2)
    spatial: SpatialMode
    nx: int = 16
    dt: float = Field(gt=0)
    t_end: float = Field(ge=0)
    output_every: int = Field(default=1, ge=1)
    conservation_fix: bool = False
    perturbation_kind: PerturbationKind = "none"
    perturbation_amplitude: float = Field(default=0.05, ge=0)
    perturbation_center: float = Field(default=1.0, ge=0)
    perturbation_width: float = Field(default=0.5, gt=0)
    seed: int = 0
    kernel_cache_mb: float = Field(default=256.0, ge=0)

    @field_validator("stats", mode="before")
    def validate_stats(cls, v):
        return StatisticsKind.parse(v)

    @field_validator("conservation_fix", mode="before")
    def validate_switch(cls, v):
        if isinstance(v, str):
            key = v.strip().lower()
            if key in ("on", "true", "yes", "1"):
                return True
            if key in ("off", "false", "no", "0"):
                return False
            raise ValueError(f"expected on or off, got '{v}'")
        return v

    @field_validator("n")
    def validate_n(cls, v: int) -> int:
        if v < 4 or v % 2:
            raise ValueError(f"n must be an even integer >= 4, got {v}")
        return v

    @field_validator("nphi")
    def validate_nphi(cls, v: int) -> int:
        if v % 2:
            raise ValueError(f"nphi must be even, got {v}")
        return v

    @model_validator(mode="after")
    def check_run(self) -> "SimulationConfig":
        check_equilibrium_domain(self.a, self.c, self.stats)
        if self.spatial == "torus1d":
            if self.nx < 8:
                raise ValueError(f"nx must be >= 8 on the torus, got {self.nx}")
            dx = 2.0 * math.pi / self.nx
            if self.dt > dx:
                raise ValueError(f"dt={self.dt} violates the CFL bound dt <= dx={dx}")
        elif self.perturbation_kind == "wave":
            raise ValueError("perturbation_kind 'wave' needs spatial = torus1d")
        return self

    @property
    def spatial_cells(self) -> int:
        return self.nx if self.spatial == "torus1d" else 1

    def equilibrium(self) -> EquilibriumParams:
        return EquilibriumParams(a=self.a, c=self.c, stats=self.stats)

    def grid(self):
        from boltzmann.grid import MomentumGrid

        return MomentumGrid(pmax=self.pmax, n=self.n)

    def angular(self):
        from boltzmann.grid import AngularQuadrature

        return AngularQuadrature(ntheta=self.ntheta, nphi=self.nphi)

    def normalized_items(self) -> list[tuple[str, str]]:
        items = []
        for key, value in self.model_dump().items():
            if key == "stats":
                text = StatisticsKind(value).name.lower()
            elif isinstance(value, bool):
                text = "on" if value else "off"
            elif isinstance(value, float):
                text = repr(value)
            else:
                text = str(value)
            items.append((key, text))
        return items


class SnapshotHeader(BaseModel):
    version: int
    stats: StatisticsKind
    a: float
    c: float
    dims: tuple[int, int, int]
    pmax: float
    nx: int
    time: float
