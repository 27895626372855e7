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
import argparse
import hashlib
import logging
import os
import sys
import time
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from boltzmann import (
    CollisionKernel,
    CollisionOperator,
    DivergenceError,
    LinearizedOperator,
    Solver,
    SolverError,
    coercivity_delta,
    count_near_zero,
    decay_rate_fit,
    kernel_singular_values,
    oracle_report,
    projected_singular_values,
)
from boltzmann.errors import EXIT_INTERNAL, EXIT_OK, ConfigError, InsufficientSamplesError
from boltzmann.grid import DistributionSlice
from boltzmann.solver import initial_field
from data import (
    DiagnosticsWriter,
    diagnostics_frame,
    format_config,
    load_config,
    load_state,
    save_matrix,
    save_state,
    write_table,
)
from models import SimulationConfig, StatisticsKind

DEBUG = bool(os.getenv("DEBUG", default=False))
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
VERSION = Path(__file__).with_name("version.txt").read_text(encoding="utf-8").strip()

logger = logging.getLogger("app")


def resolve_threads(threads: int) -> int:
    if threads <= 0:
        return os.cpu_count() or 1
    return threads


def require_config(args: argparse.Namespace) -> SimulationConfig:
    if args.config is None:
        raise ConfigError(f"--config is required for {args.command}")
    return load_config(args.config)


def output_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def run_dynamics(args: argparse.Namespace, spatial: str) -> int:
    config = require_config(args)
    if config.spatial != spatial:
        raise ConfigError(f"spatial: {args.command} needs spatial = {spatial}")
    out = output_dir(args)
    solver = Solver(config, threads=resolve_threads(args.threads))
    initial = load_state(args.resume) if args.resume else None
    writer = DiagnosticsWriter(out / "diagnostics.csv", append=initial is not None)
    try:
        result = solver.run(initial, on_record=writer.write)
    except DivergenceError as e:
        if e.last_good is not None:
            save_state(out / "last_good.rqbk", e.last_good)
        raise
    save_state(out / "final.rqbk", result.final)

    frame = diagnostics_frame(out / "diagnostics.csv")
    try:
        fit = decay_rate_fit(frame["t"], frame["l2_f"])
        logger.info("decay rate %.6g (r^2 = %.4f, %d samples)", *fit[:2], fit.samples)
    except (InsufficientSamplesError, ValueError) as e:
        logger.debug("no decay fit: %s", e)
    return EXIT_OK


def relax(args: argparse.Namespace) -> int:
    return run_dynamics(args, "none")


def perturb(args: argparse.Namespace) -> int:
    return run_dynamics(args, "torus1d")


def spectrum(args: argparse.Namespace) -> int:
    config = require_config(args)
    out = output_dir(args)
    params = config.equilibrium()
    grid = config.grid()
    linear = LinearizedOperator(
        params,
        grid,
        config.angular(),
        threads=resolve_threads(args.threads),
        cache_mb=config.kernel_cache_mb,
    )
    logger.info("Assembling linear operator..")
    L = linear.assemble_L()
    singular = kernel_singular_values(L)
    projected = projected_singular_values(L)
    delta = coercivity_delta(L)
    near_zero = count_near_zero(singular)

    write_table(
        out / "spectrum.csv",
        [
            {"index": i, "singular_value": float(s), "projected_singular_value": float(ps)}
            for i, (s, ps) in enumerate(zip(singular, projected))
        ],
        ["index", "singular_value", "projected_singular_value"],
    )
    save_matrix(out / "L.rqbk", L.matrix, params, grid)
    print(f"raw_asymmetry = {L.raw_asymmetry!r}")
    print(f"conservation_defect = {L.conservation_defect!r}")
    print(f"near_zero_singular_values = {near_zero}")
    print(f"delta_hat = {delta!r}")
    return EXIT_OK


def oracle(args: argparse.Namespace) -> int:
    a, stats = 1.0, StatisticsKind.FERMION
    if args.config is not None:
        config = load_config(args.config)
        a, stats = config.a, config.stats
    out = output_dir(args)
    rows = oracle_report(samples=args.samples, pairs=args.pairs, seed=args.seed, a=a, stats=stats)
    write_table(
        out / "oracle.csv",
        [row.model_dump() for row in rows],
        ["check", "sample", "value", "tolerance", "passed", "skipped"],
    )
    failed = [row for row in rows if not row.passed]
    print(f"checks = {len(rows)}")
    print(f"failed = {len(failed)}")
    for row in failed[:10]:
        print(f"  {row.check} sample {row.sample}: {row.value:.3e} > {row.tolerance:.0e}")
    return EXIT_OK if not failed else EXIT_INTERNAL


def bench(args: argparse.Namespace) -> int:
    config = require_config(args)
    out = output_dir(args)
    grid, angular = config.grid(), config.angular()
    field = initial_field(config)
    F = DistributionSlice(field.values[0], config.stats, grid, background=config.equilibrium())

    top = resolve_threads(args.threads)
    counts = sorted({1, top} | {t for t in (2, 4, 8, 16) if t < top})
    rows = []
    for threads in counts:
        kernel = CollisionKernel(grid, angular, threads, cache_mb=config.kernel_cache_mb)
        operator = CollisionOperator(kernel)
        Q = operator.apply_Q(F)  # warm-up fills the block cache
        start = time.perf_counter()
        for _ in range(args.repeat):
            Q = operator.apply_Q(F)
        seconds = time.perf_counter() - start
        rows.append(
            {
                "threads": threads,
                "seconds": seconds,
                "applications_per_second": args.repeat / seconds if seconds > 0 else float("inf"),
                "checksum": hashlib.sha256(np.ascontiguousarray(Q).tobytes()).hexdigest()[:16],
            }
        )
        logger.info("bench: %d threads, %.3f s", threads, seconds)
    write_table(
        out / "bench.csv", rows, ["threads", "seconds", "applications_per_second", "checksum"]
    )
    return EXIT_OK


def validate_config(args: argparse.Namespace) -> int:
    config = require_config(args)
    sys.stdout.write(format_config(config))
    return EXIT_OK


COMMANDS: dict[str, tuple[Callable[[argparse.Namespace], int], str]] = {
    "relax": (relax, "homogeneous relaxation run"),
    "perturb": (perturb, "transport-collision run on the torus"),
    "spectrum": (spectrum, "assemble the linearized operator and report its spectrum"),
    "oracle": (oracle, "identity suite of the reduced kernel integral"),
    "bench": (bench, "collision operator throughput per thread count"),
    "validate-config": (validate_config, "parse and echo a config file"),
}


def init_app(default_threads: int = 1) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rqb", description="Relativistic quantum Boltzmann solver."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (handler, help_text) in COMMANDS.items():
        cmd = sub.add_parser(name, help=help_text)
        cmd.set_defaults(handler=handler)
        cmd.add_argument("--config", default=None, help="flat key = value config file")
        cmd.add_argument("--out", default=".", help="output directory")
        cmd.add_argument(
            "--threads", type=int, default=default_threads, help="worker threads (0 = auto)"
        )
        cmd.add_argument("--resume", default=None, help="snapshot to restart from")
        if name == "oracle":
            cmd.add_argument("--samples", type=int, default=10_000)
            cmd.add_argument("--pairs", type=int, default=500)
            cmd.add_argument("--seed", type=int, default=0)
        if name == "bench":
            cmd.add_argument("--repeat", type=int, default=3)
    return parser


def main(argv: Optional[list[str]] = None, default_threads: int = 1) -> int:
    args = init_app(default_threads).parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if DEBUG else logging.INFO, format=LOG_FORMAT, stream=sys.stderr
    )
    try:
        return args.handler(args)
    except SolverError as e:
        print(f"error: {e.detail}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
