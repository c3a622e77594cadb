"""CSV and SVG writers for experiment results.

CSV files are the normative artifacts; every SVG plot has a CSV twin
holding exactly the plotted values. Floats are written with ``repr`` so a
rerun with the same configuration reproduces the files byte for byte.
"""

import csv
import io
import math
from pathlib import Path

__all__ = [
    "METRIC_FIELDS",
    "format_value",
    "write_metrics_csv",
    "write_signals_csv",
    "write_table_csv",
    "write_svg_plot",
]

METRIC_FIELDS = ("method", "preset", "operator", "alpha1", "alpha2", "l2_error", "psnr",
                 "iterations", "wall_ms")

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")


def format_value(v):
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def _write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _csv_text(header, rows, comments=()):
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_metrics_csv(path, records):
    """One row per record; ``records`` are mappings with :data:`METRIC_FIELDS` keys."""
    rows = [[r.get(k) for k in METRIC_FIELDS] for r in records]
    return _write(path, _csv_text(METRIC_FIELDS, rows))


def write_signals_csv(path, grid, signals):
    """Column ``t`` followed by one column per named signal."""
    names = list(signals)
    rows = []
    for i, t in enumerate(grid):
        rows.append([float(t)] + [float(signals[k][i]) for k in names])
    return _write(path, _csv_text(["t"] + names, rows))


def write_table_csv(path, header, rows, comments=()):
    """Generic table with optional ``#`` comment lines above the header."""
    return _write(path, _csv_text(header, rows, comments))


def write_svg_plot(path, grid, signals, title="", width=640, height=360):
    """Line plot of named signals over a shared grid as a standalone SVG."""
    pad_l, pad_r, pad_t, pad_b = 56, 140, 30, 36
    xs = [float(t) for t in grid]
    ys = [float(v) for s in signals.values() for v in s]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if y1 == y0:
        y0, y1 = y0 - 1.0, y1 + 1.0
    span = y1 - y0
    y0, y1 = y0 - 0.05 * span, y1 + 0.05 * span
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b

    def px(t):
        return pad_l + (t - x0) / (x1 - x0) * pw

    def py(v):
        return pad_t + (y1 - v) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect x="{pad_l}" y="{pad_t}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>']
    if title:
        out.append(f'<text x="{pad_l}" y="{pad_t - 10}" font-size="13">{_escape(title)}</text>')
    for v in (y0, 0.5 * (y0 + y1), y1):
        out.append(f'<text x="{pad_l - 6}" y="{py(v) + 4:.2f}" text-anchor="end">{v:.3g}</text>')
    for t in (x0, 0.5 * (x0 + x1), x1):
        out.append(f'<text x="{px(t):.2f}" y="{height - pad_b + 16}" text-anchor="middle">{t:.3g}</text>')
    for k, (name, s) in enumerate(signals.items()):
        color = _PALETTE[k % len(_PALETTE)]
        pts = " ".join(f"{px(t):.2f},{py(float(v)):.2f}" for t, v in zip(xs, s))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = pad_t + 14 + 16 * k
        out.append(f'<line x1="{width - pad_r + 10}" y1="{ly - 4}" x2="{width - pad_r + 28}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{width - pad_r + 32}" y="{ly}">{_escape(name)}</text>')
    out.append("</svg>\n")
    return _write(path, "\n".join(out))


def _escape(s):
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
