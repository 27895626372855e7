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

from .collision import (
    CollisionKernel,
    CollisionOperator,
    InvariantResidual,
    conserve_moments,
    interpolate_offgrid,
)
from .diagnostics import (
    DecayFit,
    decay_rate_fit,
    difference_norm,
    h_functional,
    macro_fields,
    make_record,
    moments,
    norms,
    perturbation,
)
from .equilibrium import (
    equilibrium_m,
    juttner_bounds,
    juttner_J,
    make_params,
    match_equilibrium_params,
    sqrt_weight,
)
from .errors import (
    EXIT_CONFIG,
    EXIT_DIVERGENCE,
    EXIT_INTERNAL,
    EXIT_OK,
    ConfigError,
    DivergenceError,
    SolverError,
)
from .grid import AngularQuadrature, DistributionField, DistributionSlice, MomentumGrid
from .linearized import (
    LinearizedOperator,
    LinearOperatorMatrix,
    coercivity_delta,
    count_near_zero,
    kernel_singular_values,
    projected_singular_values,
)
from .projection import MacroProjection
from .reduced_oracle import B_upper, on_shell_identity_suite, oracle_report, reduced_B
from .solver import RunResult, Solver, State, collision_substep, transport_substep

__all__ = [
    "AngularQuadrature",
    "B_upper",
    "CollisionKernel",
    "CollisionOperator",
    "ConfigError",
    "DecayFit",
    "DistributionField",
    "DistributionSlice",
    "DivergenceError",
    "EXIT_CONFIG",
    "EXIT_DIVERGENCE",
    "EXIT_INTERNAL",
    "EXIT_OK",
    "InvariantResidual",
    "LinearOperatorMatrix",
    "LinearizedOperator",
    "MacroProjection",
    "MomentumGrid",
    "RunResult",
    "Solver",
    "SolverError",
    "State",
    "coercivity_delta",
    "collision_substep",
    "count_near_zero",
    "conserve_moments",
    "decay_rate_fit",
    "difference_norm",
    "equilibrium_m",
    "h_functional",
    "interpolate_offgrid",
    "juttner_J",
    "juttner_bounds",
    "kernel_singular_values",
    "macro_fields",
    "make_params",
    "make_record",
    "match_equilibrium_params",
    "moments",
    "norms",
    "on_shell_identity_suite",
    "oracle_report",
    "perturbation",
    "projected_singular_values",
    "reduced_B",
    "sqrt_weight",
    "transport_substep",
]
