"""Command-line entry point: ``hybrid-doa {rmse-sweep,power-profile,complexity,crlb}``."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import harness
from .numerics import NumericalError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

log = logging.getLogger("hybrid_doa")


def _rmse(values, args):
    spec = harness.spec_from_config(values, n_trials=args.trials, seed=args.seed)
    rows = harness.run_experiment(spec, threads=args.threads)
    return spec.describe(), harness.RMSE_COLUMNS, [r.values() for r in rows]


def _profile(values, args):
    spec = harness.spec_from_config(values, n_trials=args.trials, seed=args.seed)
    return spec.describe(), harness.PROFILE_COLUMNS, harness.power_profile_rows(spec, threads=args.threads)


def _complexity(values, args):
    meta = [
        f"subarray_size={values['subarray_size']}",
        "n_antennas_list=" + ",".join(map(str, values["n_antennas_list"])),
        "snapshots_list=" + ",".join(map(str, values["snapshots_list"])),
    ]
    rows = harness.complexity_rows(values["n_antennas_list"], values["subarray_size"], values["snapshots_list"])
    return meta, harness.COMPLEXITY_COLUMNS, rows


def _crlb(values, args):
    spec = harness.spec_from_config(values, n_trials=args.trials, seed=args.seed)
    return spec.describe(), harness.CRLB_COLUMNS, harness.crlb_rows(spec)


COMMANDS = {
    "rmse-sweep": (_rmse, "RMSE versus SNR / snapshots / left-part size"),
    "power-profile": (_profile, "trial-averaged Max-RP power per sector"),
    "complexity": (_complexity, "closed-form FLOP counts versus number of antennas"),
    "crlb": (_crlb, "numerical hybrid CRLB over the configured grid"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybrid-doa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, helptext) in COMMANDS.items():
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="key=value configuration file")
        p.add_argument("--seed", type=int, default=0, help="master RNG seed (default 0)")
        p.add_argument("--out", default="-", help="CSV output path, '-' for stdout")
        p.add_argument("--trials", type=int, default=500, help="Monte Carlo trials per grid point")
        p.add_argument("--threads", type=int, default=1, help="worker threads (output does not depend on it)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    if args.seed < 0 or args.trials < 1 or args.threads < 1:
        log.error("--seed must be >= 0, --trials and --threads >= 1")
        return EXIT_CONFIG
    handler, _ = COMMANDS[args.command]
    try:
        values = harness.load_config(args.config)
        meta, columns, rows = handler(values, args)
        text = harness.format_csv(args.command, meta, columns, rows)
    except harness.ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (NumericalError, np.linalg.LinAlgError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    if args.out == "-":
        sys.stdout.write(text)
    else:
        try:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            log.error("cannot write %s: %s", args.out, exc)
            return 1
        log.info("wrote %d rows to %s", len(rows), args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
