"""CSV emission and parsing for experiment records, gains, bounds and traces."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .config import format_config
from .errors import IncompleteDataError
from .harness import ESTIMATORS, ExperimentConfig, GainRow, MseRecord
from .numerics import RNG_ALGORITHM

SIMULATE_COLUMNS = ("snr_db", "estimator", "component", "mse", "crlb", "trials", "nonconverged", "seed", "channel_violations")
GAINS_COLUMNS = ("snr_db", "component", "gain_pct", "mse_ls", "mse_des")
CRLB_COLUMNS = ("snr_db", "component", "sigma_w2", "crlb")
TRACE_COLUMNS = ("iteration", "lambda", "delta", "re_h", "im_h", "re_eta", "im_eta")

COMPONENT_LABELS = {"re_h": "Re(h)", "im_h": "Im(h)", "eta": "eta"}


def fmt_float(x: float) -> str:
    """17 significant digits: parsing the text back yields the same double."""
    return format(float(x), ".17g")


@dataclass
class RunManifest:
    config: ExperimentConfig
    tool_version: str = __version__
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    @property
    def master_seed(self) -> int:
        return self.config.master_seed

    def lines(self) -> list[str]:
        out = [
            f"# tool: lisce {self.tool_version}",
            f"# timestamp: {self.timestamp}",
            f"# master_seed: {self.master_seed}",
            f"# rng: {RNG_ALGORITHM}; numpy {np.__version__}",
        ]
        out += [f"# config: {k} = {v}" for k, v in format_config(self.config)]
        return out


@contextmanager
def atomic_writer(path):
    """Write to a sibling temp file and move it into place only on success."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".lisce-", suffix=".tmp", dir=d)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _write_rows(fh, header, rows, comments=()):
    for line in comments:
        fh.write(line + "\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)


def records_to_rows(records):
    for r in records:
        yield (
            fmt_float(r.snr_db), r.estimator, r.component, fmt_float(r.mse), fmt_float(r.crlb),
            r.trials, r.nonconverged, r.seed, r.channel_violations,
        )


def write_records(records, fh, manifest: RunManifest | None = None) -> None:
    _write_rows(fh, SIMULATE_COLUMNS, records_to_rows(records), manifest.lines() if manifest else ())


def records_csv_text(records, manifest: RunManifest | None = None) -> str:
    buf = io.StringIO()
    write_records(records, buf, manifest)
    return buf.getvalue()


def csv_body(text: str) -> str:
    """Everything except ``#`` comment lines; the part that must be reproducible."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))


def read_records(fh) -> list[MseRecord]:
    """Parse a simulate CSV (manifest comment lines are skipped)."""
    body = [line for line in fh if not line.startswith("#") and line.strip()]
    if not body:
        raise IncompleteDataError("results file has no header or rows")
    reader = csv.DictReader(body)
    missing = set(SIMULATE_COLUMNS[:6]) - set(reader.fieldnames or ())
    if missing:
        raise IncompleteDataError(f"results file lacks columns: {', '.join(sorted(missing))}")
    records = []
    for lineno, row in enumerate(reader, start=2):
        try:
            records.append(
                MseRecord(
                    snr_db=float(row["snr_db"]),
                    estimator=row["estimator"].strip().upper(),
                    component=row["component"].strip(),
                    mse=float(row["mse"]),
                    crlb=float(row["crlb"]),
                    trials=int(row["trials"]),
                    nonconverged=int(row.get("nonconverged") or 0),
                    seed=int(row.get("seed") or 0),
                    channel_violations=int(row.get("channel_violations") or 0),
                )
            )
        except (TypeError, ValueError) as exc:
            raise IncompleteDataError(f"malformed results row {lineno}: {exc}") from None
    if not records:
        raise IncompleteDataError("results file has no data rows")
    unknown = {r.estimator for r in records} - set(ESTIMATORS)
    if unknown:
        raise IncompleteDataError(f"unknown estimator(s) in results: {', '.join(sorted(unknown))}")
    return records


def write_gains(rows, fh) -> None:
    _write_rows(
        fh, GAINS_COLUMNS,
        ((fmt_float(g.snr_db), g.component, fmt_float(g.gain_pct), fmt_float(g.mse_ls), fmt_float(g.mse_des)) for g in rows),
    )


def render_gains(rows: list[GainRow]) -> str:
    """Aligned text table: one column per SNR, one row per component."""
    snrs = []
    for g in rows:
        if g.snr_db not in snrs:
            snrs.append(g.snr_db)
    comps = []
    for g in rows:
        if g.component not in comps:
            comps.append(g.component)
    cell = {(g.snr_db, g.component): g.gain_pct for g in rows}
    head = ["SNR(dB)"] + [f"{s:g}" for s in snrs]
    body = [[f"Gain {COMPONENT_LABELS.get(c, c)} (%)"] + [f"{cell[(s, c)]:.2f}" for s in snrs] for c in comps]
    widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]
    lines = ["  ".join(v.ljust(widths[0]) if i == 0 else v.rjust(widths[i]) for i, v in enumerate(r)) for r in [head] + body]
    rule = "-" * len(lines[0])
    return "\n".join([lines[0], rule] + lines[1:]) + "\n"


def write_crlb(rows, fh) -> None:
    _write_rows(fh, CRLB_COLUMNS, ((fmt_float(s), c, fmt_float(v), fmt_float(b)) for s, c, v, b in rows))


def write_trace(lambda_trace, delta_trace, x_trace, fh, comments=()) -> None:
    rows = (
        (k, fmt_float(lam), fmt_float(d), fmt_float(x[0].real), fmt_float(x[0].imag), fmt_float(x[1].real), fmt_float(x[1].imag))
        for k, (lam, d, x) in enumerate(zip(lambda_trace, delta_trace, x_trace))
    )
    _write_rows(fh, TRACE_COLUMNS, rows, comments)
