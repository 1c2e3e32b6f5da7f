"""Self-contained SVG line and phase plots.

Each figure is one file with a fixed 960x640 viewBox and plain polylines.
Non-finite samples break a line rather than being drawn.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import numpy as np

WIDTH, HEIGHT = 960, 640
_LEFT, _RIGHT, _TOP, _BOTTOM = 90, 30, 50, 70
_MAX_POINTS = 2000
_COLOURS = ("#1f4e79", "#b03a2e", "#1e8449", "#7d3c98", "#b9770e")


def _decimate(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    stride = max(1, math.ceil(x.size / _MAX_POINTS))
    if stride == 1:
        return x, y
    idx = np.arange(0, x.size, stride)
    if idx[-1] != x.size - 1:
        idx = np.append(idx, x.size - 1)
    return x[idx], y[idx]


def _runs(x: np.ndarray, y: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    ok = np.isfinite(x) & np.isfinite(y)
    out = []
    start = None
    for k, good in enumerate(np.append(ok, False)):
        if good and start is None:
            start = k
        elif not good and start is not None:
            out.append((x[start:k], y[start:k]))
            start = None
    return out


def _range(values: list[np.ndarray]) -> tuple[float, float]:
    finite = [v[np.isfinite(v)] for v in values]
    finite = [v for v in finite if v.size]
    if not finite:
        return 0.0, 1.0
    lo = min(float(v.min()) for v in finite)
    hi = max(float(v.max()) for v in finite)
    if hi - lo < 1e-12 * max(1.0, abs(hi)):
        pad = max(abs(hi) * 0.05, 1e-6)
        return lo - pad, hi + pad
    pad = 0.04 * (hi - lo)
    return lo - pad, hi + pad


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def render(series: Sequence[tuple[str, Sequence[float], Sequence[float]]], title: str,
           xlabel: str, ylabel: str) -> str:
    """One chart holding every ``(label, xs, ys)`` series."""
    data = [(lab, np.asarray(x, dtype=float), np.asarray(y, dtype=float)) for lab, x, y in series]
    data = [(lab, *_decimate(x, y)) for lab, x, y in data]
    x0, x1 = _range([x for _, x, _ in data])
    y0, y1 = _range([y for _, _, y in data])
    pw, ph = WIDTH - _LEFT - _RIGHT, HEIGHT - _TOP - _BOTTOM

    def sx(v):
        return _LEFT + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return _TOP + ph - (v - y0) / (y1 - y0) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
        f'width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="14">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="28" text-anchor="middle" font-size="18">{_esc(title)}</text>',
        f'<rect x="{_LEFT}" y="{_TOP}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    for k in range(5):
        fx = x0 + (x1 - x0) * k / 4
        fy = y0 + (y1 - y0) * k / 4
        parts.append(f'<text x="{sx(fx):.1f}" y="{_TOP + ph + 20}" text-anchor="middle">{fx:.4g}</text>')
        parts.append(f'<text x="{_LEFT - 8}" y="{sy(fy) + 5:.1f}" text-anchor="end">{fy:.4g}</text>')
    parts.append(f'<text x="{_LEFT + pw / 2:.1f}" y="{HEIGHT - 20}" text-anchor="middle">{_esc(xlabel)}</text>')
    parts.append(f'<text x="20" y="{_TOP + ph / 2:.1f}" text-anchor="middle" '
                 f'transform="rotate(-90 20 {_TOP + ph / 2:.1f})">{_esc(ylabel)}</text>')
    for n, (label, x, y) in enumerate(data):
        colour = _COLOURS[n % len(_COLOURS)]
        for xs, ys in _runs(x, y):
            pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(xs, ys))
            parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
        if len(data) > 1:
            ly = _TOP + 18 + 20 * n
            parts.append(f'<line x1="{WIDTH - _RIGHT - 120}" y1="{ly - 5}" x2="{WIDTH - _RIGHT - 95}" '
                         f'y2="{ly - 5}" stroke="{colour}" stroke-width="2"/>')
            parts.append(f'<text x="{WIDTH - _RIGHT - 88}" y="{ly}">{_esc(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def trajectory_plots(times: np.ndarray, primal: np.ndarray, observables: dict[str, np.ndarray],
                     out_dir: Path, title: str, window: tuple[float, float] | None = None) -> list[Path]:
    """Time series per coordinate, (i, g) against time and 2D phase projections."""
    mask = np.ones(times.size, dtype=bool)
    if window is not None:
        mask = (times >= window[0]) & (times <= window[1])
    t = times[mask]
    cols = {"omega": primal[mask, 0], "lambda": primal[mask, 1], "b": primal[mask, 2]}
    if primal.shape[1] == 4:
        cols["f"] = primal[mask, 3]
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    def emit(name: str, svg: str) -> None:
        path = out_dir / name
        path.write_text(svg, encoding="utf-8")
        written.append(path)

    for name, y in cols.items():
        emit(f"series_{name}.svg", render([(name, t, y)], f"{title}: {name}", "t (years)", name))
    if "i" in observables and "g" in observables:
        emit("series_i_g.svg", render([("i", t, observables["i"][mask]), ("g", t, observables["g"][mask])],
                                      f"{title}: inflation and growth", "t (years)", "rate"))
    phases = [("lambda", "b"), ("omega", "b")] + ([("b", "f")] if "f" in cols else [])
    for xa, ya in phases:
        emit(f"phase_{xa}_{ya}.svg", render([(f"{xa}-{ya}", cols[xa], cols[ya])],
                                            f"{title}: {ya} against {xa}", xa, ya))
    return written
