"""CSV schemas for spectra and fit results, with atomic writes.

A spectrum file is a block of ``# key = value`` header lines followed by a
``freq_hz,psd`` table. The header echoes the fully-resolved run
configuration, so a file can be fed back as a config.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path

import numpy as np

from .noise import Spectrum
from .specfit import FitResult

FIT_COLUMNS = [
    "source", "model", "center_hz", "splitting_hz", "splitting_err_hz", "width_broad_hz", "width_hole_hz",
    "amp_broad", "amp_hole", "offset", "residual_rms", "single_peak",
]


def atomic_write_text(path, text: str) -> None:
    """Write to a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def header_lines(entries: dict) -> str:
    return "".join(f"# {k} = {v}\n" for k, v in entries.items())


def parse_header(lines) -> dict[str, str]:
    out = {}
    for line in lines:
        if not line.startswith("#"):
            continue
        body = line[1:].strip()
        if "=" in body:
            k, v = body.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def spectrum_to_csv(s: Spectrum, header: dict | None = None) -> str:
    entries = dict(header or {})
    entries.update({"method": s.method, "channel": s.channel, "rbw_hz": repr(float(s.rbw_hz)),
                    "n_averages": s.n_averages})
    for k, v in s.meta.items():
        entries[f"meta.{k}"] = v if isinstance(v, str) else repr(v)
    buf = io.StringIO()
    buf.write(header_lines(entries))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["freq_hz", "psd"])
    for f, p in zip(s.freqs_hz, s.psd):
        writer.writerow([repr(float(f)), repr(float(p))])
    return buf.getvalue()


def write_spectrum(path, s: Spectrum, header: dict | None = None) -> None:
    atomic_write_text(path, spectrum_to_csv(s, header))


def read_spectrum(path) -> Spectrum:
    """Load a spectrum CSV; header lines are optional (external data)."""
    text = Path(path).read_text()
    lines = text.splitlines()
    head = parse_header(lines)
    body = [ln for ln in lines if ln.strip() and not ln.startswith("#")]
    rows = list(csv.reader(body))
    if not rows or [c.strip() for c in rows[0]][:2] != ["freq_hz", "psd"]:
        raise ValueError(f"{path}: expected a 'freq_hz,psd' header row")
    data = np.array([[float(r[0]), float(r[1])] for r in rows[1:]])
    if data.shape[0] < 3:
        raise ValueError(f"{path}: spectrum has fewer than 3 points")
    freqs, psd = data[:, 0], data[:, 1]
    rbw = float(head.get("rbw_hz", np.median(np.diff(freqs))))
    return Spectrum(freqs, psd, head.get("method", "external"), rbw, int(head.get("n_averages", 1)),
                    head.get("channel", "rotation"), None, {})


def fits_to_csv(results: list[tuple[str, FitResult]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FIT_COLUMNS)
    for source, r in results:
        row = [source]
        for col in FIT_COLUMNS[1:]:
            v = getattr(r, col)
            if isinstance(v, bool):
                row.append(int(v))
            elif isinstance(v, float):
                row.append(repr(v))
            elif v is None:
                row.append("")
            else:
                row.append(v)
        writer.writerow(row)
    return buf.getvalue()


def write_fits(path, results: list[tuple[str, FitResult]]) -> None:
    atomic_write_text(path, fits_to_csv(results))


def read_table(path) -> tuple[dict[str, str], list[dict[str, str]]]:
    """Generic reader: (header entries, rows as dicts)."""
    lines = Path(path).read_text().splitlines()
    head = parse_header(lines)
    body = [ln for ln in lines if ln.strip() and not ln.startswith("#")]
    return head, list(csv.DictReader(body))
