"""
Command-line driver
verify: seeded verification suites; zeta: Fried zeta evaluation grid (CSV);
glue: cutoff-independence of the glued section (JSON); config: preset banner
"""

import argparse
import io
import logging
import sys
from typing import List, Optional, Sequence

from .config import get_system_config, with_tolerance_overrides
from .errors import StructuralError, TorsionZetaError
from .fried_dynamics import SuspensionModel, fried_zeta_truncated
from .graded_core import random_gluing_complex
from .report import dumps_payload, emit, load_complex_document, write_zeta_csv
from .spectral_truncation import admissible_cutoffs, glue_across_cutoffs
from .verify_suites import SUITES, run_verification

logger = logging.getLogger(__name__)

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _int_list(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from exc


def _float_list(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from exc


def parse_sigma_grid(text: str) -> List[complex]:
    """'start:stop:step' on the real axis (stop included) or a comma-separated complex list"""
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError("need step > 0 and stop >= start")
            count = int(round((stop - start) / step)) + 1
            return [complex(start + k * step) for k in range(count)]
        return [complex(x.strip().replace(" ", "")) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad σ grid '{text}': {exc}") from exc


def _tolerance(text: str):
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected name=value, got '{text}'")
    try:
        return name.strip(), float(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"tolerance '{name}' needs a number") from exc


def _parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog="torsionzeta", description="Torsion sections and Fried zeta verification")
    parser.add_argument("--preset", default=None, help="standard, quick or thorough ($TORSIONZETA_PRESET)")
    parser.add_argument("--log-level", dest="log_level", default=None,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="run verification suites")
    verify.add_argument("--suite", default="all", choices=list(SUITES) + ["all"])
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--trials", type=int, default=None, help="trials per suite (preset default)")
    verify.add_argument("--tolerance", dest="tolerances", action="append", type=_tolerance, default=[],
                        metavar="NAME=VALUE")
    verify.add_argument("--timings", action="store_true", help="record wall times per check")
    verify.add_argument("--out", default=None)

    zeta = sub.add_parser("zeta", help="evaluate the Fried zeta function on a σ grid")
    zeta.add_argument("--matrix", required=True, help="a,b,c,d")
    zeta.add_argument("--theta", type=float, default=0.0)
    zeta.add_argument("--sigma", type=parse_sigma_grid, default=parse_sigma_grid("1.5:3.0:0.1"))
    zeta.add_argument("--K", type=int, default=None)
    zeta.add_argument("--out", default=None)

    glue = sub.add_parser("glue", help="glued section across cutoffs")
    source = glue.add_mutually_exclusive_group(required=True)
    source.add_argument("--dims", type=_int_list)
    source.add_argument("--input", default=None, help="ComplexDocument JSON")
    glue.add_argument("--harmonic", type=_int_list, default=None)
    glue.add_argument("--p", type=int, default=0, help="lowest degree for --dims")
    glue.add_argument("--cutoffs", type=_float_list, default=None)
    glue.add_argument("--seed", type=int, default=0)
    glue.add_argument("--out", default=None)

    sub.add_parser("config", help="print the active configuration")
    return parser.parse_args(argv)


def run_verify(args: argparse.Namespace, config) -> int:
    try:
        config = with_tolerance_overrides(config, dict(args.tolerances))
    except KeyError as exc:
        raise StructuralError(exc.args[0]) from exc
    report = run_verification(args.suite, args.seed, args.trials, config, args.timings)
    emit(dumps_payload(report.to_dict()), args.out, sys.stdout)
    return EXIT_PASS if report.passed else EXIT_FAIL


def run_zeta(args: argparse.Namespace, config) -> int:
    model = SuspensionModel.from_entries(args.matrix, args.theta)
    K = config.zeta.truncation if args.K is None else args.K
    if K < 1:
        raise StructuralError(f"K must be positive, got {K}")
    logger.info(f"🚀 Fried zeta for A={model.matrix}, θ={model.theta}, K={K}, {len(args.sigma)} σ value(s)")
    evaluations = [fried_zeta_truncated(model, sigma, K, config.zeta) for sigma in args.sigma]
    buffer = io.StringIO()
    write_zeta_csv(evaluations, buffer)
    emit(buffer.getvalue(), args.out, sys.stdout)
    return EXIT_PASS


def run_glue(args: argparse.Namespace, config) -> int:
    if args.input:
        c, reps = load_complex_document(args.input)
    else:
        harmonic = args.harmonic or [0] * len(args.dims)
        split = random_gluing_complex(args.seed, args.dims, harmonic, args.p)
        c, reps = split.complex, split.representatives
    cutoffs = args.cutoffs if args.cutoffs is not None else admissible_cutoffs(c.laplacian(), 3, config.numerics)
    if len(cutoffs) < 2:
        raise StructuralError("at least two cutoffs are needed")
    report = glue_across_cutoffs(c, cutoffs, reps, config.numerics)
    tolerance = config.tolerances.gluing
    passed = not report.rejections and len(report.values) >= 2 and report.spread <= tolerance
    payload = dict(report.to_dict(), dims=list(c.space.dims), degrees=[c.space.p, c.space.q],
                   tolerance=tolerance, passed=passed)
    emit(dumps_payload(payload), args.out, sys.stdout)
    return EXIT_PASS if passed else EXIT_FAIL


COMMANDS = {"verify": run_verify, "zeta": run_zeta, "glue": run_glue}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = _parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_PASS

    config = get_system_config(args.preset)
    level = args.log_level or config.suites.log_level
    logging.basicConfig(level=getattr(logging, level, logging.INFO), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "config":
        config.print_config()
        return EXIT_PASS
    try:
        return COMMANDS[args.command](args, config)
    except TorsionZetaError as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
