"""Minimal deterministic SVG charts (lines, histogram bars, box plots).

Kept dependency-free on purpose: figures are a convenience output next to
the CSV/JSON artifacts, and the renderer writes the same bytes for the same
data on every platform.  Numbers are formatted with ``%.6g``.
"""

from __future__ import annotations

from typing import Sequence

__all__ = ["line_chart", "histogram_chart", "box_chart"]

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_W, _H = 640, 400
_ML, _MR, _MT, _MB = 58, 16, 34, 42


def _fmt(v: float) -> str:
    return f"{float(v):.6g}"


def _scale(lo: float, hi: float) -> tuple[float, float]:
    if hi <= lo:
        hi = lo + 1.0
    return lo, hi


def _xpix(v, lo, hi):
    return _ML + (v - lo) / (hi - lo) * (_W - _ML - _MR)

def _ypix(v, lo, hi):
    return _H - _MB - (v - lo) / (hi - lo) * (_H - _MT - _MB)


def _header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W // 2}" y="20" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14">{title}</text>',
    ]


def _axes(xlo, xhi, ylo, yhi, xlabel, ylabel) -> list[str]:
    parts = [
        f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" stroke="black"/>',
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" stroke="black"/>',
    ]
    for k in range(5):
        xv = xlo + (xhi - xlo) * k / 4
        yv = ylo + (yhi - ylo) * k / 4
        xp = _xpix(xv, xlo, xhi)
        yp = _ypix(yv, ylo, yhi)
        parts.append(
            f'<text x="{_fmt(xp)}" y="{_H - _MB + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{_fmt(xv)}</text>'
        )
        parts.append(
            f'<text x="{_ML - 6}" y="{_fmt(yp + 3)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{_fmt(yv)}</text>'
        )
    parts.append(
        f'<text x="{(_ML + _W - _MR) // 2}" y="{_H - 8}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="11">{xlabel}</text>'
    )
    parts.append(
        f'<text x="14" y="{(_MT + _H - _MB) // 2}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="11" '
        f'transform="rotate(-90 14 {(_MT + _H - _MB) // 2})">{ylabel}</text>'
    )
    return parts


def _write(path: str, parts: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts))
        fh.write("\n</svg>\n")


def line_chart(
    series: Sequence[tuple[Sequence[float], Sequence[float], str]],
    path: str,
    title: str = "",
    xlabel: str = "t",
    ylabel: str = "",
) -> None:
    """Step-style polylines; one (xs, ys, label) triple per series."""
    xlo = min(min(xs) for xs, _, _ in series)
    xhi = max(max(xs) for xs, _, _ in series)
    ylo = min(min(ys) for _, ys, _ in series)
    yhi = max(max(ys) for _, ys, _ in series)
    xlo, xhi = _scale(xlo, xhi)
    ylo, yhi = _scale(min(ylo, 0.0), yhi)
    parts = _header(title) + _axes(xlo, xhi, ylo, yhi, xlabel, ylabel)
    for k, (xs, ys, label) in enumerate(series):
        color = _COLORS[k % len(_COLORS)]
        pts = []
        prev_y = None
        for x, y in zip(xs, ys):
            xp, yp = _xpix(x, xlo, xhi), _ypix(y, ylo, yhi)
            if prev_y is not None:
                pts.append(f"{_fmt(xp)},{_fmt(prev_y)}")
            pts.append(f"{_fmt(xp)},{_fmt(yp)}")
            prev_y = yp
        parts.append(
            f'<polyline points="{" ".join(pts)}" fill="none" stroke="{color}" '
            f'stroke-width="1.2"/>'
        )
        parts.append(
            f'<text x="{_W - _MR - 6}" y="{_MT + 14 + 14 * k}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11" fill="{color}">{label}</text>'
        )
    _write(path, parts)


def histogram_chart(
    values: Sequence[float],
    counts: Sequence[int],
    path: str,
    title: str = "",
    xlabel: str = "",
    vlines: Sequence[tuple[float, str]] = (),
) -> None:
    """Bar chart of pre-binned counts with optional labeled vertical lines."""
    xlo = min(values) - 0.5
    xhi = max(max(values) + 0.5, max((v for v, _ in vlines), default=xlo) * 1.05)
    ylo, yhi = 0.0, max(max(counts), 1)
    xlo, xhi = _scale(xlo, xhi)
    ylo, yhi = _scale(ylo, yhi)
    parts = _header(title) + _axes(xlo, xhi, ylo, yhi, xlabel, "count")
    width = (_xpix(1.0, xlo, xhi) - _xpix(0.0, xlo, xhi)) * 0.9
    for v, c in zip(values, counts):
        if c == 0:
            continue
        x0 = _xpix(v - 0.45, xlo, xhi)
        y0 = _ypix(c, ylo, yhi)
        parts.append(
            f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(width)}" '
            f'height="{_fmt(_H - _MB - y0)}" fill="{_COLORS[0]}" fill-opacity="0.8"/>'
        )
    for k, (v, label) in enumerate(vlines):
        xp = _xpix(v, xlo, xhi)
        color = _COLORS[(k + 1) % len(_COLORS)]
        parts.append(
            f'<line x1="{_fmt(xp)}" y1="{_MT}" x2="{_fmt(xp)}" y2="{_H - _MB}" '
            f'stroke="{color}" stroke-dasharray="4,3"/>'
        )
        parts.append(
            f'<text x="{_fmt(xp + 3)}" y="{_MT + 12 + 12 * k}" font-family="sans-serif" '
            f'font-size="10" fill="{color}">{label}</text>'
        )
    _write(path, parts)


def box_chart(
    groups: Sequence[tuple[str, dict]],
    path: str,
    title: str = "",
    ylabel: str = "",
) -> None:
    """Box-and-whisker chart; each group is (label, quantile dict).

    Quantile dicts use the keys min, q1, median, q3 and max.
    """
    ylo = min(g["min"] for _, g in groups)
    yhi = max(g["max"] for _, g in groups)
    ylo, yhi = _scale(min(ylo, 0.0), yhi)
    parts = _header(title) + _axes(0.0, float(len(groups)), ylo, yhi, "", ylabel)
    for k, (label, q) in enumerate(groups):
        cx = _xpix(k + 0.5, 0.0, len(groups))
        half = (_xpix(0.8, 0.0, len(groups)) - _xpix(0.5, 0.0, len(groups)))
        color = _COLORS[k % len(_COLORS)]
        y_min, y_q1 = _ypix(q["min"], ylo, yhi), _ypix(q["q1"], ylo, yhi)
        y_med, y_q3 = _ypix(q["median"], ylo, yhi), _ypix(q["q3"], ylo, yhi)
        y_max = _ypix(q["max"], ylo, yhi)
        parts.append(f'<line x1="{_fmt(cx)}" y1="{_fmt(y_min)}" x2="{_fmt(cx)}" '
                     f'y2="{_fmt(y_q1)}" stroke="{color}"/>')
        parts.append(f'<line x1="{_fmt(cx)}" y1="{_fmt(y_q3)}" x2="{_fmt(cx)}" '
                     f'y2="{_fmt(y_max)}" stroke="{color}"/>')
        parts.append(
            f'<rect x="{_fmt(cx - half)}" y="{_fmt(y_q3)}" width="{_fmt(2 * half)}" '
            f'height="{_fmt(y_q1 - y_q3)}" fill="{color}" fill-opacity="0.25" '
            f'stroke="{color}"/>'
        )
        parts.append(f'<line x1="{_fmt(cx - half)}" y1="{_fmt(y_med)}" '
                     f'x2="{_fmt(cx + half)}" y2="{_fmt(y_med)}" stroke="{color}" '
                     f'stroke-width="2"/>')
        parts.append(
            f'<text x="{_fmt(cx)}" y="{_H - _MB + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{label}</text>'
        )
    _write(path, parts)
