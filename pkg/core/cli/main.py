# core/cli/main.py
from __future__ import annotations

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from core.errors import ConfigurationError, DataFormatError, DomainError
from core.io.config_loader import FIT_MODELS
from core.model.types import SCHEMES
from core.utils.logger import configure_logging
from .commands import cmd_evaluate, cmd_fit, cmd_report, cmd_simulate

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USER = 2
EXIT_INTERNAL = 3

USER_ERRORS = (ConfigurationError, DomainError, DataFormatError, OSError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mamfit",
        description="Multiple allocation mixtures for overdispersed counts: simulate, fit, evaluate, report.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="debug logging")
    parser.add_argument("-q", "--quiet", action="count", default=0, help="warnings only")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate a dataset from a scenario config")
    sim.add_argument("config", help="config file or bundled scenario name")
    sim.add_argument("out", help="output TSV path")
    sim.add_argument("--seed", type=int)

    fit = sub.add_parser("fit", help="run the MCMC sampler on a dataset")
    fit.add_argument("data", help="dataset TSV")
    fit.add_argument("out_dir", help="directory for draws, allocations and summary")
    fit.add_argument("--config", help="config file or bundled scenario name")
    fit.add_argument("--model", choices=FIT_MODELS)
    fit.add_argument("--scheme", choices=SCHEMES)
    fit.add_argument("--k", type=int)
    fit.add_argument("--seed", type=int)
    fit.add_argument("--iters", type=int)
    fit.add_argument("--burnin", type=int)
    fit.add_argument("--thin", type=int)
    fit.add_argument("--chains", type=int)

    ev = sub.add_parser("evaluate", help="misclassification of a fit against the truth")
    ev.add_argument("allocations", help="allocations.tsv from a fit")
    ev.add_argument("truth", help="dataset TSV with a truth column, or one index per line")
    ev.add_argument("out", help="output JSON path")

    rep = sub.add_parser("report", help="plot-ready CSV from a fit directory")
    rep.add_argument("fit_dir")
    rep.add_argument("data")
    rep.add_argument("out")
    return parser


def _fit_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        "fit.model": args.model,
        "model.scheme": args.scheme,
        "model.k": args.k,
        "sampler.seed": args.seed,
        "sampler.n_iter": args.iters,
        "sampler.n_burnin": args.burnin,
        "sampler.thin": args.thin,
        "sampler.n_chains": args.chains,
    }


def run(args: argparse.Namespace) -> None:
    if args.command == "simulate":
        cmd_simulate(args.config, args.out, {"simulate.seed": args.seed})
    elif args.command == "fit":
        cmd_fit(args.config, args.data, args.out_dir, _fit_overrides(args))
    elif args.command == "evaluate":
        cmd_evaluate(args.allocations, args.truth, args.out)
    elif args.command == "report":
        cmd_report(args.fit_dir, args.data, args.out)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose - args.quiet)
    try:
        run(args)
    except USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except Exception as exc:
        logger.debug("Internal failure", exc_info=True)
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK
