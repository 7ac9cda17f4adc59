"""Tiny hand-rolled SVG charts.

Plots are emitted as plain XML strings with fixed two-decimal coordinate
formatting, so identical inputs always produce identical bytes.  Three chart
shapes cover the report: side-by-side two-arm histograms, actual-vs-predicted
test-window overlays, and horizontal PFI bars.  Histogram rects carry a
data-count attribute and their heights are exactly proportional to bin
counts, which is what the structural checks parse.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

BASE_COLOR = "#4878a8"
AUG_COLOR = "#d2782d"
ACTUAL_COLOR = "#444444"
PRED_COLOR = "#b03a3a"
NEG_COLOR = "#8a8a8a"

WIDTH = 640
HEIGHT = 400


def _f(v: float) -> str:
    return f"{v:.2f}"


def _g(v: float) -> str:
    """Compact value label formatting."""
    return f"{v:.4g}"


def _svg(width: int, height: int, body: list[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">')
    style = ('<style>text{font-family:sans-serif;font-size:11px;}'
             '.title{font-size:14px;}</style>')
    return "\n".join([head, style, *body, "</svg>"]) + "\n"


def _text(x: float, y: float, s: str, cls: str = "", anchor: str = "") -> str:
    attrs = f' class="{cls}"' if cls else ""
    if anchor:
        attrs += f' text-anchor="{anchor}"'
    return f'<text x="{_f(x)}" y="{_f(y)}"{attrs}>{escape(s)}</text>'


def two_arm_histogram(baseline_values, augmented_values, metric_name: str,
                      bins: int = 10) -> str:
    """Shared-edge histograms of one metric, both arms side by side per bin."""
    bv = np.asarray(baseline_values, dtype=np.float64)
    av = np.asarray(augmented_values, dtype=np.float64)
    lo = float(min(bv.min(), av.min()))
    hi = float(max(bv.max(), av.max()))
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    cb = np.histogram(bv, bins=edges)[0]
    ca = np.histogram(av, bins=edges)[0]
    peak = int(max(cb.max(), ca.max(), 1))

    x0, y0, pw, ph = 55.0, 45.0, WIDTH - 90.0, HEIGHT - 120.0
    cell = pw / bins
    bar = cell * 0.40
    body = [_text(WIDTH / 2, 24, f"{metric_name} distribution by arm",
                  cls="title", anchor="middle")]
    for name, counts, color, off in (
        ("baseline", cb, BASE_COLOR, cell * 0.06),
        ("augmented", ca, AUG_COLOR, cell * 0.52),
    ):
        rects = []
        for i, c in enumerate(counts):
            h = ph * float(c) / peak
            x = x0 + i * cell + off
            y = y0 + ph - h
            rects.append(
                f'<rect class="{name}" data-count="{int(c)}" x="{_f(x)}" '
                f'y="{_f(y)}" width="{_f(bar)}" height="{_f(h)}" '
                f'fill="{color}"/>')
        body.append(f'<g id="{name}">' + "".join(rects) + "</g>")
    axis_y = y0 + ph
    body.append(f'<line x1="{_f(x0)}" y1="{_f(axis_y)}" x2="{_f(x0 + pw)}" '
                f'y2="{_f(axis_y)}" stroke="#000"/>')
    body.append(f'<line x1="{_f(x0)}" y1="{_f(y0)}" x2="{_f(x0)}" '
                f'y2="{_f(axis_y)}" stroke="#000"/>')
    for i in range(0, bins + 1, 2):
        x = x0 + i * cell
        body.append(_text(x, axis_y + 16, _g(float(edges[i])),
                          anchor="middle"))
    body.append(_text(x0 - 8, y0 + 4, str(peak), anchor="end"))
    body.append(_text(x0 - 8, axis_y + 4, "0", anchor="end"))
    ly = HEIGHT - 30
    body.append(f'<rect x="{_f(x0)}" y="{_f(ly)}" width="12" height="12" '
                f'fill="{BASE_COLOR}"/>')
    body.append(_text(x0 + 18, ly + 10, "Baseline"))
    body.append(f'<rect x="{_f(x0 + 110)}" y="{_f(ly)}" width="12" '
                f'height="12" fill="{AUG_COLOR}"/>')
    body.append(_text(x0 + 128, ly + 10, "Augmented"))
    return _svg(WIDTH, HEIGHT, body)


def _polyline(xs, ys, color: str, cls: str) -> str:
    pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in zip(xs, ys))
    return (f'<polyline class="{cls}" points="{pts}" fill="none" '
            f'stroke="{color}" stroke-width="1.2"/>')


def overlay_chart(actual, predicted, arm: str) -> str:
    """Actual and predicted test-window series on one time axis."""
    ya = np.asarray(actual, dtype=np.float64)
    yp = np.asarray(predicted, dtype=np.float64)
    n = ya.size
    lo = float(min(ya.min(), yp.min()))
    hi = float(max(ya.max(), yp.max()))
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    x0, y0, pw, ph = 55.0, 45.0, WIDTH - 90.0, HEIGHT - 120.0
    xs = x0 + pw * np.arange(n) / max(n - 1, 1)

    def to_y(v):
        return y0 + ph * (hi - v) / (hi - lo)

    body = [_text(WIDTH / 2, 24, f"{arm} champion: actual vs predicted",
                  cls="title", anchor="middle"),
            _polyline(xs, to_y(ya), ACTUAL_COLOR, "actual"),
            _polyline(xs, to_y(yp), PRED_COLOR, "predicted")]
    axis_y = y0 + ph
    body.append(f'<line x1="{_f(x0)}" y1="{_f(axis_y)}" x2="{_f(x0 + pw)}" '
                f'y2="{_f(axis_y)}" stroke="#000"/>')
    body.append(f'<line x1="{_f(x0)}" y1="{_f(y0)}" x2="{_f(x0)}" '
                f'y2="{_f(axis_y)}" stroke="#000"/>')
    body.append(_text(x0 - 8, y0 + 4, _g(hi), anchor="end"))
    body.append(_text(x0 - 8, axis_y + 4, _g(lo), anchor="end"))
    body.append(_text(x0, axis_y + 16, "0"))
    body.append(_text(x0 + pw, axis_y + 16, str(n - 1), anchor="end"))
    ly = HEIGHT - 30
    body.append(f'<line x1="{_f(x0)}" y1="{_f(ly + 6)}" x2="{_f(x0 + 24)}" '
                f'y2="{_f(ly + 6)}" stroke="{ACTUAL_COLOR}" '
                f'stroke-width="1.2"/>')
    body.append(_text(x0 + 30, ly + 10, "actual"))
    body.append(f'<line x1="{_f(x0 + 110)}" y1="{_f(ly + 6)}" '
                f'x2="{_f(x0 + 134)}" y2="{_f(ly + 6)}" '
                f'stroke="{PRED_COLOR}" stroke-width="1.2"/>')
    body.append(_text(x0 + 140, ly + 10, "predicted"))
    return _svg(WIDTH, HEIGHT, body)


def pfi_chart(entries, arm: str, top_n: int = 20) -> str:
    """Horizontal bars of r2 drop per feature, already sorted descending."""
    shown = list(entries)[:top_n]
    row = 22.0
    x0, y0 = 230.0, 50.0
    pw = WIDTH - x0 - 90.0
    height = int(y0 + row * max(len(shown), 1) + 40)
    peak = max((abs(e.r2_drop) for e in shown), default=0.0)
    body = [_text(WIDTH / 2, 24, f"{arm} champion: permutation importance",
                  cls="title", anchor="middle")]
    for i, e in enumerate(shown):
        y = y0 + i * row
        w = pw * (abs(e.r2_drop) / peak) if peak > 0 else 0.0
        color = AUG_COLOR if e.r2_drop >= 0 else NEG_COLOR
        body.append(_text(x0 - 8, y + 12, e.feature, anchor="end"))
        body.append(f'<rect class="pfi" data-feature="{escape(e.feature)}" '
                    f'x="{_f(x0)}" y="{_f(y)}" width="{_f(w)}" '
                    f'height="14" fill="{color}"/>')
        body.append(_text(x0 + w + 6, y + 12, _g(e.r2_drop)))
    body.append(f'<line x1="{_f(x0)}" y1="{_f(y0 - 6)}" x2="{_f(x0)}" '
                f'y2="{_f(y0 + row * max(len(shown), 1))}" stroke="#000"/>')
    return _svg(WIDTH, height, body)
