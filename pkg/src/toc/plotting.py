"""Seed-averaged metric curves rendered as static SVG (no dependencies)."""

from __future__ import annotations

import glob as globmod
from collections import defaultdict

import numpy as np

from .metrics import CSV_COLUMNS, read_run_csv

PALETTE = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
    "#17becf", "#7f7f7f",
]


def aggregate(csv_paths, metric):
    """Group runs by variant; returns variant -> (steps, mean, std).

    All runs of one variant must share their logging grid.
    """
    if metric not in CSV_COLUMNS:
        raise ValueError(f"metric {metric!r} not in the run schema")
    if not csv_paths:
        raise ValueError("no csv files to aggregate")
    by_variant = defaultdict(list)
    for path in csv_paths:
        rows = read_run_csv(path)
        if not rows:
            continue
        variant = rows[0]["variant"]
        steps = np.array([r["step"] for r in rows])
        values = np.array([float(r[metric]) for r in rows])
        by_variant[variant].append((steps, values))
    out = {}
    for variant, runs in sorted(by_variant.items()):
        base = runs[0][0]
        for steps, _ in runs[1:]:
            if len(steps) != len(base) or not np.array_equal(steps, base):
                raise ValueError(
                    f"runs for variant {variant!r} have mismatched logging steps"
                )
        stacked = np.stack([v for _, v in runs])
        out[variant] = (base, stacked.mean(axis=0), stacked.std(axis=0))
    return out


def _svg_path(xs, ys):
    return " ".join(
        f"{'M' if i == 0 else 'L'}{x:.2f},{y:.2f}" for i, (x, y) in enumerate(zip(xs, ys))
    )


def render_svg(series, metric, out_path, width=640, height=420):
    """Mean line with a +-1 std band per variant."""
    if not series:
        raise ValueError("nothing to plot")
    margin_l, margin_r, margin_t, margin_b = 60, 20, 30, 45
    plot_w = width - margin_l - margin_r
    plot_h = height - margin_t - margin_b

    all_steps = np.concatenate([s for s, _, _ in series.values()])
    lows = np.concatenate([m - sd for _, m, sd in series.values()])
    highs = np.concatenate([m + sd for _, m, sd in series.values()])
    x0, x1 = float(all_steps.min()), float(all_steps.max())
    y0, y1 = float(lows.min()), float(highs.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def sx(x):
        return margin_l + (x - x0) / (x1 - x0) * plot_w

    def sy(y):
        return margin_t + (y1 - y) / (y1 - y0) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{margin_l}" y="{margin_t}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#444"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        xv = x0 + frac * (x1 - x0)
        yv = y0 + frac * (y1 - y0)
        parts.append(
            f'<text x="{sx(xv):.1f}" y="{height - 25}" text-anchor="middle">{xv:g}</text>'
        )
        parts.append(
            f'<text x="{margin_l - 6}" y="{sy(yv):.1f}" text-anchor="end" '
            f'dominant-baseline="middle">{yv:.3g}</text>'
        )
    parts.append(
        f'<text x="{margin_l + plot_w / 2}" y="{height - 8}" text-anchor="middle">step</text>'
    )
    parts.append(
        f'<text x="14" y="{margin_t + plot_h / 2}" text-anchor="middle" '
        f'transform="rotate(-90 14 {margin_t + plot_h / 2})">{metric}</text>'
    )

    for i, (variant, (steps, mean, std)) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        xs = [sx(s) for s in steps]
        band_x = xs + xs[::-1]
        band_y = [sy(v) for v in mean + std] + [sy(v) for v in (mean - std)[::-1]]
        points = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(band_x, band_y))
        parts.append(f'<polygon points="{points}" fill="{color}" opacity="0.18"/>')
        parts.append(
            f'<path d="{_svg_path(xs, [sy(v) for v in mean])}" fill="none" '
            f'stroke="{color}" stroke-width="1.8"/>'
        )
        ly = margin_t + 14 + 14 * i
        parts.append(
            f'<line x1="{width - 150}" y1="{ly - 4}" x2="{width - 128}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(f'<text x="{width - 122}" y="{ly}">{variant}</text>')
    parts.append("</svg>")
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))
    return out_path


def plot_metric(pattern, metric, out_path):
    paths = sorted(globmod.glob(pattern, recursive=True))
    if not paths:
        raise ValueError(f"glob {pattern!r} matched no files")
    series = aggregate(paths, metric)
    return render_svg(series, metric, out_path)
