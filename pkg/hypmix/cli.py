"""command-line front end

hypmix <subcommand> [options] with the subcommands check, partition,
verify, cohomology, transfer, correlate and all. Results are written as
CSV; exit codes: 0 success, 1 a check failed, 2 usage or configuration
error, 3 numeric abort (rejection or signal budgets, I/O).
"""

import argparse
import csv
import logging
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from hypmix._general import (
    ConfigError,
    DomainError,
    HypmixError,
    UnsuitablePointError,
)
from hypmix.flow_sim import correlate, default_observables, time_grid
from hypmix.inducing import interval_J, inverse_branch
from hypmix.map_family import (
    MapFamily,
    check_assumptions,
    family_from_settings,
)
from hypmix.measure import (
    DensitySpec,
    invariance_mc,
    nu_invariance_chi2,
    rng_stream,
    sample_nu,
    strip_quadrature,
    transfer_residual,
)
from hypmix.parameters_settings import (
    FamilySettings,
    RunConfig,
    SimulateSettings,
    read_config,
)
from hypmix.roof import RoofConfig, cohomology_residual
from hypmix.skew import PlanePoint
from hypmix.verify import (
    admissible_sigma,
    distortion_check,
    ordineminore_check,
    ordini_check,
    tails_partial,
    uni_check,
)

__all__: List[str] = [
    "cohomology_records",
    "dispatch",
    "emit_csv",
    "main",
    "partition_records",
]

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_ABORT = 3

# rectangles of the invariance check of m under P
_RECTS = (
    ((0.3, 0.6), (0.5, 2.0)),
    ((1.5, 3.0), (0.2, 1.0)),
    ((0.6, 0.9), (1.0, 4.0)),
)
_STREAM_COHOMOLOGY = 7
_NORMALIZER_TOL = 1e-8


def emit_csv(
    records: Sequence[Dict[str, object]],
    path: Optional[Path],
    fieldnames: Optional[Sequence[str]] = None,
) -> None:
    """write homogeneous records as CSV with a header row and LF newlines

    Fractions are written as p/q, floats with a . decimal separator;
    path None writes to standard output.

    examples
    --------
    >>> emit_csv([{"s": 2, "c": Fraction(3, 5)}], None)
    s,c
    2,3/5
    """

    if fieldnames is None:
        fieldnames = list(records[0]) if records else []
    for record in records:
        if list(record) != list(fieldnames):
            raise DomainError(
                f"Input Error: records should have the keys {fieldnames}, "
                f"got {list(record)}."
            )
    if path is None:
        _write_rows(sys.stdout, records, fieldnames)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        _write_rows(handle, records, fieldnames)
    logger.info("wrote %d rows to %s", len(records), path)


def _write_rows(
    handle: TextIO,
    records: Sequence[Dict[str, object]],
    fieldnames: Sequence[str],
) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(fieldnames)
    for record in records:
        writer.writerow([record[key] for key in fieldnames])


def _count(raw: str) -> int:
    """integers, also written as 1e7."""

    try:
        value = float(raw)
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"not a count: {raw}") from err
    if not value.is_integer() or value < 0:
        raise argparse.ArgumentTypeError(f"not a count: {raw}")
    return int(value)


def _int_list(raw: str) -> Tuple[int, ...]:
    try:
        return tuple(int(part) for part in raw.split(","))
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"not a list: {raw}") from err


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI-style config file")
    common.add_argument(
        "--family", choices=["modular", "mobius"], help="the map family"
    )
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument(
        "--threads", type=int, help="worker processes (HYPMIX_THREADS)"
    )
    common.add_argument(
        "--out",
        type=Path,
        help="output CSV (for all: the output directory)",
    )
    noise = common.add_mutually_exclusive_group()
    noise.add_argument("-v", "--verbose", action="store_true")
    noise.add_argument("-q", "--quiet", action="store_true")

    parser = argparse.ArgumentParser(
        prog="hypmix",
        description="suspension flows over non-compact skew products and "
        "the decay of correlations of the modular geodesic flow",
    )
    sub = parser.add_subparsers(dest="command", metavar="subcommand")
    sub.required = True

    check = sub.add_parser(
        "check", parents=[common], help="grade assumptions (A) and (B)"
    )
    check.add_argument("--n-max", type=_count, help="range of the (B) checks")

    partition = sub.add_parser(
        "partition", parents=[common], help="table of the intervals J_s^q"
    )
    partition.add_argument("--s-max", type=_count, default=10)
    partition.add_argument("--q-max", type=_count, default=10)

    verify = sub.add_parser(
        "verify", parents=[common], help="UNI, tails and distortion"
    )
    verify.add_argument("--uni-n", type=_int_list)
    verify.add_argument("--uni-grid", type=_count)
    verify.add_argument("--tails-smax", type=_count)
    verify.add_argument("--tails-qmax", type=_count)
    verify.add_argument("--sigma", type=float)

    cohomology = sub.add_parser(
        "cohomology", parents=[common], help="Bowen cohomology residuals"
    )
    cohomology.add_argument("--n", type=_count, help="truncation order")
    cohomology.add_argument("--points", type=_count)

    transfer = sub.add_parser(
        "transfer", parents=[common], help="invariant density checks"
    )
    transfer.add_argument("--points", type=_count)
    transfer.add_argument("--truncation", type=_count)
    transfer.add_argument("--samples", type=_count)

    corr = sub.add_parser(
        "correlate", parents=[common], help="correlation decay estimate"
    )
    corr.add_argument("--budget", type=_count)
    corr.add_argument("--t-max", type=float)
    corr.add_argument("--t-step", type=float)
    corr.add_argument("--mode", choices=["ensemble", "birkhoff"])
    corr.add_argument("--streams", type=_count)

    sub.add_parser("all", parents=[common], help="every subcommand")
    return parser


def _option(args: argparse.Namespace, name: str, default: Any) -> Any:
    value = getattr(args, name, None)
    return default if value is None else value


def _load_config(args: argparse.Namespace) -> RunConfig:
    config = read_config(args.config) if args.config else RunConfig()
    if args.family is not None and args.family != config.family.name:
        kwargs = {
            key: getattr(config.family, key)
            for key in FamilySettings.__slots__
            if key not in ("name", "f0_coeffs")
        }
        coeffs = config.family.f0_coeffs if args.family == "mobius" else None
        config.family = FamilySettings(
            name=args.family, f0_coeffs=coeffs, **kwargs
        )
    if args.seed is not None:
        config = _with(config, seed=args.seed)
    if args.threads is not None:
        config = _with(config, threads=args.threads)
    return config


def _with(config: RunConfig, **changes: object) -> RunConfig:
    fields = {key: getattr(config, key) for key in RunConfig.__slots__}
    fields.update(changes)
    return RunConfig(**fields)  # type: ignore[arg-type]


def _out(args: argparse.Namespace, config: RunConfig, name: str) -> Path:
    if args.command == "all":
        return Path(_option(args, "out", config.output_dir)) / name
    return Path(_option(args, "out", config.output_dir / name))


def _run_check(args: argparse.Namespace, config: RunConfig) -> int:
    family = family_from_settings(config.family)
    n_max = int(_option(args, "n_max", config.verify.n_max))
    report = check_assumptions(family, n_max=n_max)
    records = report.records()
    for record in records:
        print(
            f"{record['assumption']:<8} {record['verdict']:<15} "
            f"{record['witness']!s:<24} {record['value']}"
        )
    emit_csv(records, _out(args, config, "check.csv"))
    return EXIT_OK if report.passed else EXIT_FAIL


def partition_records(
    family: MapFamily, s_max: int, q_max: int
) -> List[Dict[str, object]]:
    """rows (s, q, c, d, length, fhat_d1_at_d) for 2 <= s <= s_max,
    1 <= q <= q_max, exact on the rational path."""

    one = Fraction(1) if family.exact_rational else 1.0
    records = []
    for s in range(2, s_max + 1):
        for q in range(1, q_max + 1):
            interval = interval_J(family, s, q)
            d1 = inverse_branch(family, [(s, q)], one)[1]
            records.append(
                {
                    "s": s,
                    "q": q,
                    "c": interval.lo,
                    "d": interval.hi,
                    "length": interval.length,
                    "fhat_d1_at_d": 1 / d1,
                }
            )
    return records


def _run_partition(args: argparse.Namespace, config: RunConfig) -> int:
    family = family_from_settings(config.family)
    s_max = int(_option(args, "s_max", 10))
    q_max = int(_option(args, "q_max", 10))
    if s_max < 2 or q_max < 1:
        raise ConfigError(
            f"Input Error: (s_max, q_max) should be >= (2, 1), got "
            f"({s_max}, {q_max})."
        )
    emit_csv(
        partition_records(family, s_max, q_max),
        _out(args, config, "partitions.csv"),
        ["s", "q", "c", "d", "length", "fhat_d1_at_d"],
    )
    return EXIT_OK


_REPORT_FIELDS = ["check", "n", "grid_size", "value", "reference", "witness"]


def _emit_report(records: List[Dict[str, object]], path: Path) -> int:
    emit_csv(records, path, [*_REPORT_FIELDS, "pass"])
    failed = [record["check"] for record in records if not record["pass"]]
    if failed:
        logger.warning("failed checks: %s", ", ".join(map(str, failed)))
        return EXIT_FAIL
    return EXIT_OK


def _run_verify(args: argparse.Namespace, config: RunConfig) -> int:
    family = family_from_settings(config.family)
    settings = config.verify
    sigma = admissible_sigma(family, _option(args, "sigma", settings.sigma))
    uni_n = _option(args, "uni_n", settings.uni_n)
    uni_grid = int(_option(args, "uni_grid", settings.uni_grid))
    s_max = int(_option(args, "tails_smax", settings.tails_smax))
    q_max = int(_option(args, "tails_qmax", settings.tails_qmax))
    threads = config.threads
    records = [
        report.record()
        for report in uni_check(family, uni_n, uni_grid, threads)
    ]
    tails = tails_partial(
        family, sigma, s_max, q_max, settings.y_prime, threads
    )
    records.append(tails.record())
    records.append(ordineminore_check(family, 50, 50).record())
    records.append(
        ordini_check(
            family, settings.ordini_samples, settings.y_prime, config.seed
        ).record()
    )
    records.append(
        distortion_check(family, settings.distortion_pairs, config.seed)
        .record()
    )
    return _emit_report(records, _out(args, config, "report.csv"))


def cohomology_records(
    family: MapFamily,
    cfg: RoofConfig,
    spec: DensitySpec,
    points: int,
    seed: int,
) -> List[Dict[str, object]]:
    """residuals of the cohomology at points of nu; unsuitable points are
    skipped and replaced."""

    rng = rng_stream(seed, _STREAM_COHOMOLOGY)
    records: List[Dict[str, object]] = []
    skipped = 0
    while len(records) < points:
        x, y = sample_nu(spec, rng, points - len(records))
        for xi, yi in zip(x.tolist(), y.tolist()):
            try:
                result = cohomology_residual(family, cfg, PlanePoint(xi, yi))
            except UnsuitablePointError:
                skipped += 1
                continue
            records.append(
                {
                    "x": xi,
                    "y": yi,
                    "residual": result.residual,
                    "tail_bound": result.tail_bound,
                    "fiber_gap": result.fiber_gap,
                    "pass": result.passed,
                }
            )
        if skipped > 10 * points:
            raise ConfigError(
                f"Input Error: {skipped} unsuitable points for {points}."
            )
    return records


def _run_cohomology(args: argparse.Namespace, config: RunConfig) -> int:
    family = family_from_settings(config.family)
    settings = config.verify
    cfg = RoofConfig(
        settings.y_prime, int(_option(args, "n", settings.truncation_n))
    )
    spec = DensitySpec.from_settings(family, config.measure)
    points = int(_option(args, "points", settings.cohomology_points))
    records = cohomology_records(
        family, cfg, spec, points, config.measure_seed
    )
    emit_csv(records, _out(args, config, "cohomology.csv"))
    worst = max(records, key=lambda record: float(record["residual"]))
    print(
        f"max residual {worst['residual']:.3e}, "
        f"tail bound {worst['tail_bound']:.3e}, N = {cfg.truncation_n}"
    )
    passed = all(record["pass"] for record in records)
    return EXIT_OK if passed else EXIT_FAIL


def _run_transfer(args: argparse.Namespace, config: RunConfig) -> int:
    family = family_from_settings(config.family)
    settings = config.verify
    spec = DensitySpec.from_settings(family, config.measure)
    seed = config.measure_seed
    points = int(_option(args, "points", settings.transfer_points))
    truncation = int(
        _option(args, "truncation", settings.transfer_truncation)
    )
    samples = int(_option(args, "samples", settings.invariance_samples))
    lo, hi = spec.delta
    grid = np.linspace(lo, hi, points + 2)[1:-1]
    records = [
        transfer_residual(spec, float(x), truncation, truncation).record()
        for x in grid
    ]
    records.extend(
        invariance_mc(spec, rect, samples, seed).record() for rect in _RECTS
    )
    records.append(nu_invariance_chi2(spec, samples, seed).record())
    mass = strip_quadrature(spec, lo, hi)
    records.append(
        {
            "check": "nu_mass",
            "n": "",
            "grid_size": "",
            "value": mass,
            "reference": math.log(hi / lo),
            "witness": "",
            "pass": abs(mass - math.log(hi / lo)) < _NORMALIZER_TOL,
        }
    )
    return _emit_report(records, _out(args, config, "transfer.csv"))


def _run_correlate(args: argparse.Namespace, config: RunConfig) -> int:
    family = family_from_settings(config.family)
    spec = DensitySpec.from_settings(family, config.measure)
    base = config.simulate
    simulate = SimulateSettings(
        **{
            key: _option(args, key, getattr(base, key))
            for key in SimulateSettings.__slots__
        }
    )
    u, v = default_observables("sigma_r")
    cfg = RoofConfig(config.verify.y_prime, config.verify.truncation_n)
    for observable in (u, v):
        observable.validate(family, cfg)
    estimate = correlate(
        spec,
        u,
        v,
        time_grid(simulate.t_max, simulate.t_step),
        simulate.budget,
        seed=config.seed,
        mode=simulate.mode,
        streams=simulate.streams,
        threads=config.threads,
        cfg=cfg,
    )
    emit_csv(
        estimate.records(),
        _out(args, config, "corr.csv"),
        ["t", "c_hat", "stderr", "n_effective"],
    )
    summary = estimate.summary()
    print(
        ", ".join(f"{key}={value}" for key, value in summary.items()),
        file=sys.stderr,
    )
    return EXIT_OK


_RUNNERS: Dict[str, Callable[[argparse.Namespace, RunConfig], int]] = {
    "check": _run_check,
    "partition": _run_partition,
    "verify": _run_verify,
    "cohomology": _run_cohomology,
    "transfer": _run_transfer,
    "correlate": _run_correlate,
}


def _run_all(args: argparse.Namespace, config: RunConfig) -> int:
    code = EXIT_OK
    for name, runner in _RUNNERS.items():
        logger.info("hypmix all: %s", name)
        code = max(code, runner(args, config))
    return code


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


def dispatch(argv: Sequence[str]) -> int:
    """run one subcommand and map its outcome to the exit code

    examples
    --------
    >>> dispatch(["badcmd"])  # doctest: +SKIP
    2
    """

    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as err:
        return EXIT_OK if err.code in (0, None) else EXIT_USAGE
    _configure_logging(args)
    runner = _run_all if args.command == "all" else _RUNNERS[args.command]
    try:
        config = _load_config(args)
        return runner(args, config)
    except (ConfigError, DomainError) as err:
        print(f"hypmix {args.command}: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (HypmixError, OSError) as err:
        print(f"hypmix {args.command}: aborted: {err}", file=sys.stderr)
        return EXIT_ABORT


def main(argv: Optional[Sequence[str]] = None) -> int:
    return dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
