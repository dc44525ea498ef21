"""CSV, SVG and manifest writers for experiment outputs."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from pathlib import Path

NA = "NA"


def format_value(value) -> str:
    """Locale-independent text for a CSV cell: 12 significant digits."""
    if value is None:
        return NA
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if math.isnan(value):
        return NA
    if value == 0.0:
        return "0"
    return format(value, ".12g")


def csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue().encode("utf-8")


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return list(reader)


# -- SVG ----------------------------------------------------------------------

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2",
           "#7f7f7f", "#bcbd22", "#17becf")


def _fmt(v):
    return f"{v:.2f}"


def _tick_label(v):
    return format(v, ".4g")


def line_plot(series, title="", xlabel="", ylabel="", logx=False, width=640, height=420,
              markers=()):
    """Minimal SVG line chart.

    ``series`` is a list of ``(label, xs, ys)``; ``markers`` a list of
    ``(x, y)`` points drawn as circles.  Output depends only on the inputs.
    """
    left, right, top, bottom = 70, 150, 40, 55
    pw, ph = width - left - right, height - top - bottom

    def tx(x):
        return math.log10(x) if logx else x

    xs_all = [tx(x) for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys if y is not None and math.isfinite(y)]
    xs_all += [tx(x) for x, _ in markers]
    ys_all += [y for _, y in markers]
    x0, x1 = min(xs_all), max(xs_all)
    y0, y1 = min(ys_all), max(ys_all)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(x):
        return left + (tx(x) - x0) / (x1 - x0) * pw

    def py(y):
        return top + (1.0 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for k in range(5):
        xv = x0 + (x1 - x0) * k / 4
        label = 10 ** xv if logx else xv
        xp = left + pw * k / 4
        out.append(f'<line x1="{_fmt(xp)}" y1="{top + ph}" x2="{_fmt(xp)}" y2="{top + ph + 5}" '
                   f'stroke="black"/>')
        out.append(f'<text x="{_fmt(xp)}" y="{top + ph + 18}" text-anchor="middle">'
                   f'{_tick_label(label)}</text>')
        yv = y0 + (y1 - y0) * k / 4
        yp = top + ph * (1 - k / 4)
        out.append(f'<line x1="{left - 5}" y1="{_fmt(yp)}" x2="{left}" y2="{_fmt(yp)}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{_fmt(yp + 4)}" text-anchor="end">{_tick_label(yv)}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2:.1f})">{ylabel}</text>')
    for idx, (label, xs, ys) in enumerate(series):
        color = PALETTE[idx % len(PALETTE)]
        pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, ys)
                       if y is not None and math.isfinite(y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 14 + 16 * idx
        out.append(f'<line x1="{left + pw + 10}" y1="{ly - 4}" x2="{left + pw + 30}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 35}" y="{ly}">{label}</text>')
    for x, y in markers:
        out.append(f'<circle cx="{_fmt(px(x))}" cy="{_fmt(py(y))}" r="3.5" fill="none" stroke="black"/>')
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode("utf-8")


# -- atomic output set -----------------------------------------------------------


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def write_atomic(path: Path, data: bytes):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def commit_outputs(out_dir, files):
    """Write ``{name: bytes}`` into ``out_dir``; every file appears via rename."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for name, data in files.items():
        write_atomic(out_dir / name, data)
        records.append({"path": name, "sha256": sha256_hex(data)})
    return records


def manifest_bytes(manifest: dict) -> bytes:
    return (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode("utf-8")


def load_manifest(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
