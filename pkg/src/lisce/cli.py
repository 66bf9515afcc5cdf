"""
Command-line entry point.

    lisce simulate --config reference.cfg --out results.csv
    lisce crlb --k1 1 --k2 1 --snr 0,2,4,6,8
    lisce gains results.csv
    lisce trace --config reference.cfg --snr 0 --trial 7 --out trace.csv

Exit codes: 0 success, 1 usage or configuration error, 2 runtime or data error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from contextlib import contextmanager

from . import __version__
from .config import load_config, with_overrides
from .crlb import crlb_for_frame
from .errors import ConfigError, IncompleteDataError, InvalidParameterError, LisceError
from .harness import convergence_trace, gains_table, run_experiment
from .results import (
    RunManifest,
    atomic_writer,
    read_records,
    render_gains,
    write_crlb,
    write_gains,
    write_records,
    write_trace,
)
from .signal import default_pilots, snr_to_noise_variance, mean_pilot_power

log = logging.getLogger("lisce")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(LisceError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with atomic_writer(path) as fh:
            yield fh


def _float_list(text):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("expected at least one value")
    return vals


def cmd_simulate(config_path, output_path=None, seed=None, workers=None):
    config = with_overrides(load_config(config_path), seed=seed, workers=workers)
    log.info(
        "simulating %d trials x %d SNR points (seed %d, %d worker(s))",
        config.trials, len(config.snr_db_list), config.master_seed, config.workers,
    )
    records = run_experiment(config)
    with _output(output_path) as fh:
        write_records(records, fh, RunManifest(config))
    return records


def cmd_crlb(k1, k2, snr_db_list, output_path=None):
    try:
        frame = default_pilots(k1, k2)
    except InvalidParameterError as exc:
        raise UsageError(str(exc)) from None
    rows = []
    for snr in snr_db_list:
        sigma_w2 = snr_to_noise_variance(snr, mean_pilot_power(frame))
        for comp, bound in crlb_for_frame(frame, sigma_w2).by_component().items():
            rows.append((snr, comp, sigma_w2, bound))
    with _output(output_path) as fh:
        write_crlb(rows, fh)
    return rows


def cmd_gains(results_csv, output_path=None, text_stream=None):
    try:
        with open(results_csv, newline="") as fh:
            records = read_records(fh)
    except OSError as exc:
        raise IncompleteDataError(f"cannot read {results_csv}: {exc.strerror or exc}") from None
    rows = gains_table(records)
    if output_path is not None:
        with _output(output_path) as fh:
            write_gains(rows, fh)
    stream = text_stream if text_stream is not None else sys.stdout
    if output_path != "-":
        stream.write(render_gains(rows))
    return rows


def cmd_trace(config_path, snr_db, trial_index, output_path=None, seed=None):
    config = with_overrides(load_config(config_path), seed=seed)
    if "DES" not in config.estimator_set:
        raise ConfigError("trace needs DES in 'estimators'")
    lam, delta, xs = convergence_trace(config, snr_db, trial_index)
    comments = RunManifest(config).lines() + [f"# snr_db: {snr_db:g}", f"# trial_index: {trial_index}"]
    with _output(output_path) as fh:
        write_trace(lam, delta, xs, fh, comments)
    return lam, delta, xs


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", dest="config", default=argparse.SUPPRESS, help="experiment config file")
    common.add_argument("--out", dest="out", default=argparse.SUPPRESS, help="output path ('-' for stdout)")
    common.add_argument("--seed", dest="seed", type=int, default=argparse.SUPPRESS, help="override the master seed")

    p = _Parser(prog="lisce", description="Channel estimation experiments for LIS-assisted links.", parents=[common])
    p.add_argument("--version", action="version", version=f"lisce {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    p.add_argument("-q", "--quiet", action="store_true", help="only warnings and errors")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo MSE vs SNR, written as CSV")
    s.add_argument("--workers", type=int, default=None, help="worker processes (results do not depend on it)")

    c = sub.add_parser("crlb", parents=[common], help="Cramer-Rao bounds per SNR")
    c.add_argument("--k1", type=int, default=1)
    c.add_argument("--k2", type=int, default=1)
    c.add_argument("--snr", type=_float_list, default=[0.0, 2.0, 4.0, 6.0, 8.0], help="comma-separated SNRs in dB")

    g = sub.add_parser("gains", parents=[common], help="DES-over-LS gains from a simulate CSV")
    g.add_argument("results", help="CSV written by 'simulate'")

    t = sub.add_parser("trace", parents=[common], help="multiplier and iterate traces of one trial")
    t.add_argument("--snr", type=float, required=True, help="SNR in dB")
    t.add_argument("--trial", type=int, required=True, help="trial index")
    return p


def _dispatch(args):
    config = getattr(args, "config", None)
    out = getattr(args, "out", None)
    seed = getattr(args, "seed", None)
    if args.command in ("simulate", "trace") and config is None:
        raise UsageError(f"{args.command} needs --config")
    if args.command == "simulate":
        cmd_simulate(config, out, seed=seed, workers=args.workers)
    elif args.command == "crlb":
        cmd_crlb(args.k1, args.k2, args.snr, out)
    elif args.command == "gains":
        cmd_gains(args.results, out)
    elif args.command == "trace":
        if args.trial < 0:
            raise UsageError("--trial must be >= 0")
        cmd_trace(config, args.snr, args.trial, out, seed=seed)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s", stream=sys.stderr, force=True)
    try:
        _dispatch(args)
    except (UsageError, ConfigError, InvalidParameterError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (IncompleteDataError, LisceError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
