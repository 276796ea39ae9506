"""
Command line interface.

    pygfc run       --config demo.json       full experiment
    pygfc spectrum  --config demo.json       spectrum.json only
    pygfc sample    --config demo.json       unconditional batch
    pygfc condition --config demo.json --r 10
    pygfc verify    --seed 7                 acceptance suite
    pygfc report    --from out/demo          rebuild the report

Exit codes: 0 if every verdict passes, 1 if any fails,
2 for configuration errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .conditioning import summarize
from .experiment import (
    ConfigError, ExperimentConfig, aggregate_report, build_decomposition,
    condition_point, ensemble_file, load_config, run_experiment,
    spectrum_document, write_frame
)
from .experiment.runner import SPECTRUM_FILE
from .io import SAMPLE_DUMP
from .logger import logger, set_verbosity
from .sampling import sample_unconditional
from .spectral import DiagnosticsError, smoothness_diagnostics
from .utils import dump_json
from .verify import VerifyContext, default_suite

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2
VERIFY_SEED = 20240101

def _config(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config)
    return config.override(seed=args.seed, output_dir=args.out, njobs=args.njobs)

def _outdir(config: ExperimentConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out

def cmd_run(args: argparse.Namespace) -> int:
    result = run_experiment(_config(args))
    return EXIT_OK if result.passed else EXIT_FAILED

def cmd_spectrum(args: argparse.Namespace) -> int:
    config = _config(args)
    decomp = build_decomposition(config)
    doc = spectrum_document(decomp)
    try:
        doc["diagnostics"] = smoothness_diagnostics(decomp).as_dict()
    except DiagnosticsError as e:
        logger.warning(f"No smoothness diagnostics: {e}")
    path = _outdir(config)/SPECTRUM_FILE
    dump_json(doc, path)
    logger.info(f"Wrote {str(path)!r}.")
    return EXIT_OK

def cmd_sample(args: argparse.Namespace) -> int:
    config = _config(args)
    decomp = build_decomposition(config)
    n = args.n or config.samples_per_point
    frame = sample_unconditional(decomp, n, config.seed, njobs=config.njobs)
    path = write_frame(frame, _outdir(config)/"samples.csv")
    logger.info(f"Wrote {n} unconditional samples to {str(path)!r}.")
    return EXIT_OK

def cmd_condition(args: argparse.Namespace) -> int:
    config = _config(args)
    decomp = build_decomposition(config)
    # Same streams as the matching point of a full run
    index = config.r_values.index(args.r) if args.r in config.r_values else len(config.r_values)
    ens = condition_point(decomp, config, index, args.r)
    out = _outdir(config)
    write_frame(ens.frame[[c.value for c in SAMPLE_DUMP]], out/ensemble_file(args.r))
    row = summarize(ens, config.eps_values, config.sup_eps, config.ess_floor)
    dump_json(row, out/f"summary_r{args.r:g}.json")
    logger.info(
        f"r={args.r:g}: P={ens.p_event.value:.4e} (se {ens.p_event.se:.1e}) "
        f"by {ens.method}, outputs in {str(out)!r}."
    )
    return EXIT_OK

def cmd_verify(args: argparse.Namespace) -> int:
    ctx = VerifyContext(
        seed=VERIFY_SEED if args.seed is None else args.seed,
        n_conditional=args.n_conditional,
        n_unconditional=args.n_unconditional,
        njobs=args.njobs or 1,
    )
    suite = default_suite()
    report = suite.run(ctx)
    suite.write(report, args.out or "verify")
    logger.info(f"{len(report.rows) - report.n_failed}/{len(report.rows)} checks passed.")
    return EXIT_OK if report.passed else EXIT_FAILED

def cmd_report(args: argparse.Namespace) -> int:
    report = aggregate_report(args.source, args.out)
    return EXIT_OK if report.passed else EXIT_FAILED

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pygfc",
        description="Gaussian fields conditioned on a large L2 norm."
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="debug output")
    verbosity.add_argument("--quiet", action="store_true", help="warnings and errors only")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, config: bool = True) -> None:
        if config:
            p.add_argument("--config", required=True, help="JSON or TOML config, or a run manifest")
        p.add_argument("--seed", type=int, default=None, help="override the seed")
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument("--njobs", type=int, default=None, help="worker processes")

    p = sub.add_parser("run", help="full experiment")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("spectrum", help="decompose the kernel, write spectrum.json")
    common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("sample", help="unconditional coupled samples")
    common(p)
    p.add_argument("--n", type=int, default=None, help="sample count")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("condition", help="one conditional point")
    common(p)
    p.add_argument("--r", type=float, required=True, help="threshold on |phi|^2")
    p.set_defaults(func=cmd_condition)

    p = sub.add_parser("verify", help="acceptance suite")
    common(p, config=False)
    p.add_argument("--n-conditional", type=int, default=10_000)
    p.add_argument("--n-unconditional", type=int, default=100_000)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="rebuild the report of a finished run")
    p.add_argument("--from", dest="source", required=True, help="run directory")
    p.add_argument("--out", default=None, help="output directory")
    p.set_defaults(func=cmd_report)
    return parser

def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        set_verbosity(logging.DEBUG)
    elif args.quiet:
        set_verbosity(logging.WARNING)
    try:
        return args.func(args)
    except ConfigError as e:
        logger.error(str(e))
        return EXIT_CONFIG

if __name__ == "__main__":
    sys.exit(main())
