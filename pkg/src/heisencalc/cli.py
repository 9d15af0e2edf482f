import argparse
import logging
import math
import sys
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from heisencalc import __version__, csvio
from heisencalc.config import config_hash, load_config
from heisencalc.errors import (
    CapExceededError,
    ConfigError,
    DomainError,
    GridError,
    HeisencalcError,
    TruncationError,
)
from heisencalc.families import Families, build_family
from heisencalc.heat import KernelCache, cached_kernel_eval, write_kernel_csv
from heisencalc.littlewood_paley import BesovParams, besov_norm, build_partition, norm_plan, sobolev_norm
from heisencalc.reports import render_summary, write_reports_csv
from heisencalc.spectral import profile_lp_norm
from heisencalc.verify import Suites, run_suites, spectral_grid

if TYPE_CHECKING:
    from typing import Any, Dict, List, Optional, Sequence, Tuple

    from heisencalc.config import RunConfig

logger = logging.getLogger(__name__)

LOG_FORMAT = "[heisencalc] %(levelname)s %(name)s: %(message)s"
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_TRUNCATION = 3
# bad input of any kind is reported like a configuration error
INPUT_ERRORS = (ConfigError, CapExceededError, DomainError, GridError)


def _common_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", help="Path to a `key = value` configuration file", default=None)
    parser.add_argument(
        "--cache-dir",
        help="Directory of cached kernel tables, the HEISENCALC_CACHE environment variable wins",
        default=None,
    )
    parser.add_argument("--out", help="Directory for CSV output", default=None)
    parser.add_argument("--tol", help="Tolerance of the command", default=None, type=float)
    parser.add_argument("--threads", help="Maximum number of worker threads", default=None, type=int)
    parser.add_argument("--seed", help="Seed for the random families", default=None, type=int)
    parser.add_argument("--quick", help="Reduced family sizes and grids", action="store_true")
    parser.add_argument(
        "-v", "--verbose", help="-v for progress, -vv for debug output", action="count", default=0
    )
    return parser


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="heisencalc", description="Spectral calculus on the Heisenberg group"
    )
    parser.add_argument("--version", action="version", version=f"heisencalc {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    kernel = commands.add_parser("kernel", parents=[common], help="Tabulate the heat kernel h_t")
    kernel.add_argument("--t", help="Time", default=1.0, type=float)
    kernel.add_argument("--r-max", help="Largest |z|", default=4.0, type=float)
    kernel.add_argument("--s-max", help="Largest |s|", default=8.0, type=float)
    kernel.add_argument("--nr", help="Number of |z| samples", default=65, type=int)
    kernel.add_argument("--ns", help="Number of s samples", default=129, type=int)

    norms = commands.add_parser("norms", parents=[common], help="Norms of a built-in function")
    norms.add_argument(
        "--family",
        help="Built-in family",
        required=True,
        choices=Families.names() + [name.replace("_", "-") for name in Families.names() if "_" in name],
    )
    norms.add_argument("--j", help="Frequency block of localized families", default=None, type=int)
    norms.add_argument(
        "--param",
        help="Family parameter as KEY=VALUE, may be repeated",
        action="append",
        default=[],
    )
    norms.add_argument("--s", help="Regularity", default=1.0, type=float)
    norms.add_argument("--p", help="Integrability exponent, `inf` allowed", default=2.0, type=float)
    norms.add_argument("--r", help="Besov summability exponent, `inf` allowed", default=2.0, type=float)
    norms.add_argument(
        "--dilate",
        help="Comma separated exponents k of the dilations u o delta_{2^k}",
        default="0",
    )

    verify = commands.add_parser("verify", parents=[common], help="Run verification suites")
    verify.add_argument(
        "--suite",
        help=f"Comma separated suites out of {', '.join(Suites.names())}, or `all`",
        default=None,
    )
    verify.add_argument("--j", help="Block range as a..b", default=None)

    cache = commands.add_parser("cache", parents=[common], help="Inspect the kernel cache")
    cache.add_argument("action", choices=["list", "clear"])
    return parser


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format=LOG_FORMAT)


def parse_block_range(text: str) -> "Tuple[int, int]":
    lo, sep, hi = text.partition("..")
    try:
        if not sep:
            return int(text), int(text)
        return int(lo), int(hi)
    except ValueError:
        raise ConfigError(f"block range must look like a..b, got {text!r}") from None


def parse_param(text: str) -> "Tuple[str, Any]":
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise ConfigError(f"family parameters are KEY=VALUE, got {text!r}")
    for kind in (int, float):
        try:
            return key.strip(), kind(raw)
        except ValueError:
            continue
    raise ConfigError(f"family parameter {key} must be numeric, got {raw!r}")


def parse_dilations(text: str) -> "List[int]":
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"dilations must be comma separated integers, got {text!r}") from None


def config_from_args(args: argparse.Namespace) -> "RunConfig":
    overrides: "Dict[str, Any]" = {
        "cache_dir": args.cache_dir,
        "out_dir": args.out,
        "threads": args.threads,
        "seed": args.seed,
        "quick": True if args.quick else None,
    }
    if args.command == "kernel":
        overrides["kernel_tol"] = args.tol
    else:
        overrides["tol"] = args.tol
    if args.command == "verify":
        overrides["suites"] = args.suite
        if args.j is not None:
            overrides["j_min"], overrides["j_max"] = parse_block_range(args.j)
    return load_config(args.config, overrides)


def header_fields(config: "RunConfig") -> "Dict[str, Any]":
    return {"version": __version__, "config": config_hash(config)}


def cmd_kernel(config: "RunConfig", args: argparse.Namespace) -> int:
    """
    Tabulate h_t on [0, r_max] x [0, s_max] from the t = 1 table on the
    rescaled sample set, which is what the cache holds.
    """
    t = args.t
    if not t > 0:
        raise DomainError(f"heat kernels need t > 0, got {t}")
    if min(args.nr, args.ns) < 2:
        raise ConfigError("kernel tables need at least 2 samples per axis")
    r = np.linspace(0.0, args.r_max, args.nr)
    s = np.linspace(0.0, args.s_max, args.ns)
    cache = KernelCache.at(config.cache_dir) if config.cache_dir else None
    unit = cached_kernel_eval(cache, r / math.sqrt(t), s / t, config.kernel_tol, config.d)
    scale = t ** -(config.d + 1)
    table = unit._replace(t=float(t), r=r, s=s, values=scale * unit.values, tail=scale * unit.tail)
    path = write_kernel_csv(
        Path(config.out_dir) / f"heatkernel-t{t:g}.csv", table, header_fields(config)
    )
    print(  # noqa: T001
        f"h_t at t={t:g}: {args.nr}x{args.ns} samples, peak {table.peak:.6g}, "
        f"tail bound {table.tail:.3g} (relative {table.tail / table.peak:.3g})"
    )
    print(path)  # noqa: T001
    return 0


def _family_params(args: argparse.Namespace) -> "Dict[str, Any]":
    params = dict(parse_param(text) for text in args.param)
    if args.j is not None:
        params["j"] = args.j
    if args.seed is not None and args.family.replace("-", "_") == "localized_ring":
        params.setdefault("seed", args.seed)
    return params


def cmd_norms(config: "RunConfig", args: argparse.Namespace) -> int:
    """
    Print the L^p, Besov B^s_{p,r} and Sobolev W^{s,p} norms of a built-in
    function and of its dilates as CSV.
    """
    grid = spectral_grid(config)
    part = build_partition(0, (config.j_min, config.j_max))
    params = BesovParams.create(args.s, args.p, args.r)
    family_params = _family_params(args)
    rows = []
    for k in parse_dilations(args.dilate):
        u = build_family(args.family, grid, dict(family_params, dilate=k))
        plan = norm_plan(u, args.p)
        rows.append(
            (
                k,
                profile_lp_norm(u, args.p, plan),
                besov_norm(u, params, part),
                sobolev_norm(u, args.s, args.p, plan),
            )
        )
    fields = dict(header_fields(config), family=args.family, s=args.s, p=args.p, r=args.r)
    sys.stdout.write(csvio.render("norms", fields, ("dilate", "lp", "besov", "sobolev"), rows))
    return 0


def cmd_verify(config: "RunConfig") -> int:
    reports = run_suites(config)
    path = Path(config.out_dir) / "reports.csv"
    write_reports_csv(path, reports, header_fields(config))
    sys.stdout.write(render_summary(reports))
    logger.info("Wrote %s", path)
    return 0 if all(r.passed for r in reports) else EXIT_FAILED


def cmd_cache(config: "RunConfig", action: str) -> int:
    if not config.cache_dir:
        raise ConfigError("no cache directory, pass --cache-dir or set HEISENCALC_CACHE")
    cache = KernelCache.at(config.cache_dir)
    if action == "list":
        for path in cache.entries():
            print(path)  # noqa: T001
    else:
        print(f"removed {cache.clear()} cached kernel tables")  # noqa: T001
    return 0


def main(argv: "Optional[Sequence[str]]" = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        config = config_from_args(args)
        if args.command == "kernel":
            return cmd_kernel(config, args)
        if args.command == "norms":
            return cmd_norms(config, args)
        if args.command == "verify":
            return cmd_verify(config)
        return cmd_cache(config, args.action)
    except INPUT_ERRORS as e:
        logger.error("%s", e)
        return EXIT_CONFIG
    except TruncationError as e:
        logger.error("%s", e)
        return EXIT_TRUNCATION if args.command == "kernel" else EXIT_FAILED
    except HeisencalcError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return EXIT_FAILED
