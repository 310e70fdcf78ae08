"""Command line entry point.

Exit codes: 0 success, 1 configuration error, 2 every trajectory failed,
3 oracle mismatch.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import load_config
from .errors import CapacityError, ConfigError, DomainError, ParameterError

log = logging.getLogger("spinsqueeze")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ALL_FAILED = 2
EXIT_ORACLE = 3


def _cmd_run(args, require_sweep: bool = False) -> int:
    from .batch import run_batch

    cfg = load_config(args.config)
    if require_sweep and cfg.sweep is None:
        raise ConfigError(f"{args.config}: sweep.parameter and sweep.values are required for 'sweep'")
    result = run_batch(cfg, workers=args.workers, output_dir=args.out)
    for name, err in result.failures.items():
        log.error("%s failed: %s", name, err)
    log.info(
        "%d trajectories written to %s (%d failed)",
        len(result.records),
        result.output_dir,
        len(result.failures),
    )
    return EXIT_ALL_FAILED if result.all_failed else EXIT_OK


def _cmd_oracle(args) -> int:
    from .noise import WienerPath
    from .oracle import MAX_ATOMS, equivalence_check

    cfg = load_config(args.config)
    if cfg.physical.n_atoms > MAX_ATOMS:
        raise ConfigError(f"physical.n_atoms: oracle-check needs N <= {MAX_ATOMS}, got {cfg.physical.n_atoms}")
    step = cfg.step
    n = step.n_steps
    if cfg.noise_files:
        noise = WienerPath.from_file(cfg.noise_files[0])
    else:
        noise = WienerPath.from_seed(cfg.seeds[0], n)
    failed = False
    for value, p in cfg.physical_variants():
        if p.n_atoms > MAX_ATOMS:
            raise ConfigError(f"sweep.values: oracle-check needs N <= {MAX_ATOMS}, got {p.n_atoms}")
        rep = equivalence_check(
            p, step.dt, noise.increments(step.dt, n), step.measurement_on, step.frame_shift_override
        )
        ok = rep.passed(cfg.oracle_tolerance)
        failed |= not ok
        tag = "" if value is None else f" {cfg.sweep.parameter}={value}"
        print(
            f"{'PASS' if ok else 'FAIL'} N={rep.n_atoms}{tag} steps={rep.steps} "
            f"max|diff|={rep.max_abs_diff:.3e} (tol {cfg.oracle_tolerance:.1e}) "
            f"symmetry={rep.symmetry_residual:.1e} min_eig={rep.min_eigenvalue:.2e}"
        )
    return EXIT_ORACLE if failed else EXIT_OK


def _cmd_gen_noise(args) -> int:
    from .noise import WienerPath

    if args.count < 1:
        raise ConfigError(f"--count: must be >= 1, got {args.count}")
    WienerPath.from_seed(args.seed, args.count).to_file(args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinsqueeze", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (
        ("run", "run every trajectory in a configuration"),
        ("sweep", "run a configuration that must contain a sweep"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config")
        p.add_argument("--workers", type=int, default=None, help="override run.workers")
        p.add_argument("--out", default=None, help="override output.dir")

    p = sub.add_parser("oracle-check", help="compare against the full density matrix (N <= 4)")
    p.add_argument("config")

    p = sub.add_parser("gen-noise", help="write a seeded noise file")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_run(args, require_sweep=True)
        if args.command == "oracle-check":
            return _cmd_oracle(args)
        return _cmd_gen_noise(args)
    except (ConfigError, ParameterError, DomainError, CapacityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
