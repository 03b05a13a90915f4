"""Result bundles: a JSON summary, one CSV table per diagnostic, a certificates report."""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

SUMMARY_FILE = "summary.json"
CERTIFICATES_FILE = "certificates.json"


@dataclass
class SeriesTable:
    """Time column plus named value columns sharing that time grid."""

    times: list[int]
    columns: dict[str, list[float]]

    def __eq__(self, other):
        if not isinstance(other, SeriesTable):
            return NotImplemented
        return (
            list(self.times) == list(other.times)
            and list(self.columns) == list(other.columns)
            and all(_same(self.columns[k], other.columns[k]) for k in self.columns)
        )


def _same(a, b) -> bool:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return a.shape == b.shape and bool(np.all((a == b) | (np.isnan(a) & np.isnan(b))))


@dataclass
class ResultBundle:
    summary: dict[str, Any] = field(default_factory=dict)
    series: dict[str, SeriesTable] = field(default_factory=dict)
    certificates: dict[str, Any] = field(default_factory=dict)


def series_file_name(name: str) -> str:
    return "series_" + re.sub(r"[^A-Za-z0-9_.-]", "_", name) + ".csv"


def _fmt(x) -> str:
    return repr(float(x))


def write_results(bundle: ResultBundle, out_dir) -> list[Path]:
    """Write the bundle under ``out_dir`` and return the written paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create result directory {out}: {exc}") from exc
    manifest = []

    def _write(path: Path, text: str):
        try:
            path.write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        manifest.append(path)

    summary = dict(bundle.summary)
    summary["series_files"] = {name: series_file_name(name) for name in bundle.series}
    _write(out / SUMMARY_FILE, json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for name, table in bundle.series.items():
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", *table.columns])
        for r, t in enumerate(table.times):
            w.writerow([int(t), *(_fmt(col[r]) for col in table.columns.values())])
        _write(out / series_file_name(name), buf.getvalue())
    if bundle.certificates:
        _write(out / CERTIFICATES_FILE, json.dumps(bundle.certificates, indent=2, sort_keys=True) + "\n")
    return manifest


def read_results(out_dir) -> ResultBundle:
    out = Path(out_dir)
    summary = json.loads((out / SUMMARY_FILE).read_text())
    files = summary.pop("series_files", {})
    series = {}
    for name, fname in files.items():
        with open(out / fname, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        times = [int(r[0]) for r in body]
        cols = {h: [float(r[k + 1]) for r in body] for k, h in enumerate(header[1:])}
        series[name] = SeriesTable(times, cols)
    cert_path = out / CERTIFICATES_FILE
    certs = json.loads(cert_path.read_text()) if cert_path.exists() else {}
    return ResultBundle(summary, series, certs)


def bundle_from_traces(summary: dict[str, Any], traces) -> ResultBundle:
    """One table per diagnostic, one column per seed."""
    series: dict[str, SeriesTable] = {}
    traces = sorted(traces, key=lambda tr: tr.seed)
    for name in traces[0].series if traces else []:
        times, _ = traces[0].series[name]
        cols = {f"seed_{tr.seed}": tr.series[name][1].tolist() for tr in traces}
        series[name] = SeriesTable([int(t) for t in times], cols)
    return ResultBundle(summary, series, {})
