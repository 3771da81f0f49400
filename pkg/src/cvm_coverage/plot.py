"""Self-contained SVG charts of experiment summaries (no plotting library)."""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

from .harness import SummaryRow

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 80, 150, 50, 60

KINDS = ("scatter", "error_bars")


class _Canvas:
    def __init__(self, title: str):
        self.parts = [
            '<?xml version="1.0" encoding="UTF-8"?>\n',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" '
            f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">\n',
            f"<title>{escape(title)}</title>\n",
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>\n',
        ]

    def add(self, s: str) -> None:
        self.parts.append(s + "\n")

    def line(self, x1, y1, x2, y2, stroke="black", extra="", cls=""):
        c = f' class="{cls}"' if cls else ""
        self.add(f'<line{c} x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" stroke="{stroke}" {extra}/>')

    def text(self, x, y, s, anchor="middle", extra=""):
        self.add(f'<text x="{x:.2f}" y="{y:.2f}" text-anchor="{anchor}" {extra}>{escape(s)}</text>')

    def circle(self, x, y, fill, cls=""):
        c = f' class="{cls}"' if cls else ""
        self.add(f'<circle{c} cx="{x:.2f}" cy="{y:.2f}" r="4" fill="{fill}"/>')

    def render(self) -> str:
        return "".join(self.parts) + "</svg>\n"


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        pad = abs(lo) * 0.1 or 0.01
        lo, hi = lo - pad, hi + pad
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.floor(lo / step) * step
    ticks = []
    t = start
    while t <= hi + step * 1e-9:
        ticks.append(round(t, 12))
        t += step
    if ticks[-1] < hi:
        ticks.append(round(t, 12))
    return ticks


def _frame(canvas: _Canvas, sizes: Sequence[int], lo: float, hi: float, ylabel: str, title: str):
    ticks = _nice_ticks(lo, hi)
    y0, y1 = ticks[0], ticks[-1]
    plot_w = WIDTH - LEFT - RIGHT
    plot_h = HEIGHT - TOP - BOTTOM

    def sx(i: int) -> float:
        return LEFT + plot_w * (i + 0.5) / len(sizes)

    def sy(v: float) -> float:
        return TOP + plot_h * (1 - (v - y0) / (y1 - y0))

    canvas.text(WIDTH / 2, 25, title, extra='font-size="14"')
    canvas.line(LEFT, TOP, LEFT, TOP + plot_h)
    canvas.line(LEFT, TOP + plot_h, LEFT + plot_w, TOP + plot_h)
    for t in ticks:
        canvas.line(LEFT - 5, sy(t), LEFT, sy(t))
        canvas.line(LEFT, sy(t), LEFT + plot_w, sy(t), stroke="#dddddd")
        canvas.text(LEFT - 8, sy(t) + 4, f"{t:g}", anchor="end")
    for i, n in enumerate(sizes):
        canvas.line(sx(i), TOP + plot_h, sx(i), TOP + plot_h + 5)
        canvas.text(sx(i), TOP + plot_h + 20, str(n))
    canvas.text(LEFT + plot_w / 2, HEIGHT - 15, "buffer size n")
    canvas.text(20, TOP + plot_h / 2, ylabel, extra=f'transform="rotate(-90 20 {TOP + plot_h / 2:.2f})"')
    return sx, sy


def _legend(canvas: _Canvas, entries: list[tuple[str, str]]) -> None:
    x = WIDTH - RIGHT + 15
    for k, (label, color) in enumerate(entries):
        y = TOP + 10 + 20 * k
        canvas.circle(x, y, color)
        canvas.text(x + 10, y + 4, label, anchor="start")


def render_svg(summary: Sequence[SummaryRow], kind: str = "error_bars") -> str:
    """Render a summary as an SVG document.

    ``scatter`` plots mean estimated and mean true coverage per buffer size.
    ``error_bars`` plots the mean difference (estimate minus truth) with
    vertical bars of plus/minus one sample standard deviation.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown plot kind {kind!r}")
    rows = [s for s in summary if s.mean_difference is not None]
    if not summary:
        raise ValueError("nothing to plot")
    sizes = [s.buffer_size for s in summary]
    index = {n: i for i, n in enumerate(sizes)}

    if kind == "scatter":
        values = [v for s in rows for v in (s.mean_estimate, s.true_coverage)]
        canvas = _Canvas("Estimated vs. true coverage by buffer size")
        sx, sy = _frame(canvas, sizes, min(values, default=0.0), max(values, default=1.0),
                        "coverage", "Estimated vs. true coverage")
        for s in rows:
            canvas.circle(sx(index[s.buffer_size]) - 4, sy(s.mean_estimate), "#1f77b4", cls="estimate")
            canvas.circle(sx(index[s.buffer_size]) + 4, sy(s.true_coverage), "#d62728", cls="truth")
        _legend(canvas, [("mean estimate", "#1f77b4"), ("true coverage", "#d62728")])
        return canvas.render()

    lows, highs = [0.0], [0.0]
    for s in rows:
        sd = s.sd_difference or 0.0
        lows.append(s.mean_difference - sd)
        highs.append(s.mean_difference + sd)
    canvas = _Canvas("Estimated minus true coverage; error bars are +/-1 sample standard deviation")
    sx, sy = _frame(canvas, sizes, min(lows), max(highs), "estimate - true coverage",
                    "Estimation error (bars: +/-1 sd)")
    plot_w = WIDTH - LEFT - RIGHT
    canvas.line(LEFT, sy(0.0), LEFT + plot_w, sy(0.0), stroke="#888888", extra='stroke-dasharray="4 3"')
    for s in rows:
        x = sx(index[s.buffer_size])
        sd = s.sd_difference or 0.0
        lo, hi = sy(s.mean_difference - sd), sy(s.mean_difference + sd)
        canvas.add('<g class="error-bar">')
        canvas.line(x, lo, x, hi, stroke="#1f77b4", extra='stroke-width="1.5"')
        canvas.line(x - 6, lo, x + 6, lo, stroke="#1f77b4")
        canvas.line(x - 6, hi, x + 6, hi, stroke="#1f77b4")
        canvas.circle(x, sy(s.mean_difference), "#1f77b4")
        canvas.add("</g>")
    return canvas.render()


def emit_plot(summary: Sequence[SummaryRow], kind: str, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_svg(summary, kind))
