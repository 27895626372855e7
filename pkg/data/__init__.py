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

from .config_file import config_from_items, format_config, load_config, parse_config_text
from .diagnostics_csv import (
    DiagnosticsWriter,
    diagnostics_frame,
    read_diagnostics_csv,
    write_diagnostics_csv,
    write_table,
)
from .snapshot import load_state, read_snapshot, save_matrix, save_state, write_snapshot

__all__ = [
    "DiagnosticsWriter",
    "config_from_items",
    "diagnostics_frame",
    "format_config",
    "load_config",
    "load_state",
    "parse_config_text",
    "read_diagnostics_csv",
    "read_snapshot",
    "save_matrix",
    "save_state",
    "write_diagnostics_csv",
    "write_snapshot",
    "write_table",
]
