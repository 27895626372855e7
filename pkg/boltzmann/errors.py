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

from typing import Any, Optional

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_INTERNAL = 4


class SolverError(Exception):
    """Base error; exit_code is what the command line returns for it."""

    exit_code = EXIT_INTERNAL

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ConfigError(SolverError):
    exit_code = EXIT_CONFIG


class DivergenceError(SolverError):
    exit_code = EXIT_DIVERGENCE

    def __init__(self, detail: str, last_good: Optional[Any] = None):
        super().__init__(detail)
        self.last_good = last_good


class InvalidParamsError(SolverError, ValueError):
    pass


class DegenerateGeometryError(SolverError, ValueError):
    pass


class CollinearGeometryError(DegenerateGeometryError):
    pass


class GridMismatchError(SolverError, ValueError):
    pass


class NonConvergenceError(SolverError):
    pass


class NonzeroMomentumError(SolverError, ValueError):
    pass


class DomainError(SolverError, ValueError):
    pass


class InsufficientSamplesError(SolverError, ValueError):
    pass


class EigenSolverError(SolverError):
    pass


class SnapshotFormatError(SolverError):
    pass
