"""Minimal SVG line and region plots."""

from html import escape

import numpy as np

WIDTH, HEIGHT = 640, 440
MARGIN = dict(left=70, right=20, top=40, bottom=55)
PALETTE = ("#1f4e79", "#b03a2e", "#2e7d32", "#7b3f99", "#c17d11", "#37474f")


def _ticks(lo, hi, n=5):
    if not np.isfinite(lo) or not np.isfinite(hi):
        return []
    if hi == lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    return [t for t in np.arange(start, hi + 0.5 * step, step) if lo - 1e-12 <= t <= hi + 1e-12]


def _fmt(v):
    return f"{v:.2f}"


class Figure:
    """Accumulates drawing commands in data coordinates and renders SVG text."""

    def __init__(self, xlim, ylim, xlabel="", ylabel="", title="", comment=""):
        self.xlim, self.ylim = _pad(*xlim), _pad(*ylim)
        self.xlabel, self.ylabel, self.title, self.comment = xlabel, ylabel, title, comment
        self.items = []
        self.legend = []

    def _sx(self, x):
        lo, hi = self.xlim
        return MARGIN["left"] + (x - lo) / (hi - lo) * (WIDTH - MARGIN["left"] - MARGIN["right"])

    def _sy(self, y):
        lo, hi = self.ylim
        return HEIGHT - MARGIN["bottom"] - (y - lo) / (hi - lo) * (
            HEIGHT - MARGIN["top"] - MARGIN["bottom"])

    def line(self, xs, ys, color=PALETTE[0], dashed=False, width=1.8, label=None):
        pts = [(x, y) for x, y in zip(xs, ys) if np.isfinite(x) and np.isfinite(y)]
        if len(pts) < 2:
            return
        path = " ".join(f"{_fmt(self._sx(x))},{_fmt(self._sy(y))}" for x, y in pts)
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        self.items.append(f'<polyline points="{path}" fill="none" stroke="{color}" '
                          f'stroke-width="{width}"{dash}/>')
        if label:
            self.legend.append((label, color, dashed))

    def marker(self, x, y, label=None, color="#000000", r=4):
        cx, cy = _fmt(self._sx(x)), _fmt(self._sy(y))
        self.items.append(f'<circle cx="{cx}" cy="{cy}" r="{r}" fill="{color}"/>')
        if label:
            self.items.append(f'<text x="{_fmt(self._sx(x) + 6)}" y="{_fmt(self._sy(y) - 6)}" '
                              f'font-size="12">{escape(label)}</text>')

    def rect(self, x0, y0, x1, y1, fill):
        sx0, sx1 = sorted((self._sx(x0), self._sx(x1)))
        sy0, sy1 = sorted((self._sy(y0), self._sy(y1)))
        self.items.append(f'<rect x="{_fmt(sx0)}" y="{_fmt(sy0)}" width="{_fmt(sx1 - sx0)}" '
                          f'height="{_fmt(sy1 - sy0)}" fill="{fill}" stroke="none"/>')

    def render(self):
        out = ['<?xml version="1.0" encoding="UTF-8"?>',
               f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
               f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">']
        if self.comment:
            out.append(f"<!-- {escape(self.comment.replace('--', '- -'))} -->")
        out.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>')
        out += self.items
        x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
        y0, y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]
        out.append(f'<polyline points="{x0},{y1} {x0},{y0} {x1},{y0}" fill="none" '
                   f'stroke="#000000" stroke-width="1"/>')
        for t in _ticks(*self.xlim):
            sx = _fmt(self._sx(t))
            out.append(f'<line x1="{sx}" y1="{y0}" x2="{sx}" y2="{y0 + 5}" stroke="#000000"/>')
            out.append(f'<text x="{sx}" y="{y0 + 19}" font-size="11" '
                       f'text-anchor="middle">{t:g}</text>')
        for t in _ticks(*self.ylim):
            sy = _fmt(self._sy(t))
            out.append(f'<line x1="{x0 - 5}" y1="{sy}" x2="{x0}" y2="{sy}" stroke="#000000"/>')
            out.append(f'<text x="{x0 - 8}" y="{sy}" font-size="11" text-anchor="end" '
                       f'dominant-baseline="middle">{t:g}</text>')
        out.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{HEIGHT - 12}" font-size="13" '
                   f'text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(f'<text x="16" y="{(y0 + y1) / 2:.1f}" font-size="13" text-anchor="middle" '
                   f'transform="rotate(-90 16 {(y0 + y1) / 2:.1f})">{escape(self.ylabel)}</text>')
        if self.title:
            out.append(f'<text x="{(x0 + x1) / 2:.1f}" y="24" font-size="14" '
                       f'text-anchor="middle">{escape(self.title)}</text>')
        for k, (label, color, dashed) in enumerate(self.legend):
            ly = MARGIN["top"] + 14 + 16 * k
            dash = ' stroke-dasharray="6,4"' if dashed else ""
            out.append(f'<line x1="{x1 - 150}" y1="{ly}" x2="{x1 - 125}" y2="{ly}" '
                       f'stroke="{color}" stroke-width="1.8"{dash}/>')
            out.append(f'<text x="{x1 - 120}" y="{ly + 4}" font-size="11">{escape(label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def _pad(lo, hi):
    lo, hi = float(lo), float(hi)
    if not np.isfinite(lo) or not np.isfinite(hi):
        return 0.0, 1.0
    if hi == lo:
        return lo - 0.5, hi + 0.5
    pad = 0.03 * (hi - lo)
    return lo - pad, hi + pad


def limits(*arrays):
    vals = np.concatenate([np.ravel(np.asarray(a, dtype=float)) for a in arrays if len(a)] or
                          [np.zeros(1)])
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        return 0.0, 1.0
    return float(vals.min()), float(vals.max())
