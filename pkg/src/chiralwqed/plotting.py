"""Self-contained, deterministic SVG rendering of result tables.

Kinds and the columns they require:

* ``bands``: kd, band_index, energy_re (one polyline per band, broken at gaps)
* ``cuts``: cut, kx, ky, band_index, energy_re (two panels, kx = 0 and ky = 0)
* ``scaling``: n_sites, gamma_min (log-log with fitted slope)
* ``distribution``: site, pol, probability (1D) or ix, iy, pol, probability (2D)
* ``spectrum``: energy_re, gamma (scatter)
"""
from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path

import numpy as np

from .tables import ResultTable

REQUIRED_COLUMNS = {
    "bands": ("kd", "band_index", "energy_re"),
    "cuts": ("cut", "kx", "ky", "band_index", "energy_re"),
    "scaling": ("n_sites", "gamma_min"),
    "distribution": ("pol", "probability"),
    "spectrum": ("energy_re", "gamma"),
}

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")
W, H = 480, 360
MARGIN = (60, 20, 30, 50)  # left, right, top, bottom


class PlotSchemaError(ValueError):
    pass


def _f(x: float) -> str:
    return f"{x:.2f}"


def _esc(text: str) -> str:
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _tick(x: float) -> str:
    return f"{x:.3g}"


class _Panel:
    """Affine map from data to one rectangular plotting region."""

    def __init__(self, x0, y0, w, h, xlim, ylim):
        self.x0, self.y0, self.w, self.h = x0, y0, w, h
        self.xlim = _pad(xlim)
        self.ylim = _pad(ylim)

    def px(self, x):
        a, b = self.xlim
        return self.x0 + (x - a) / (b - a) * self.w

    def py(self, y):
        a, b = self.ylim
        return self.y0 + self.h - (y - a) / (b - a) * self.h

    def frame(self, xlabel, ylabel, title="", xticks=None, yticks=None):
        out = [f'<rect x="{_f(self.x0)}" y="{_f(self.y0)}" width="{_f(self.w)}" '
               f'height="{_f(self.h)}" fill="none" stroke="black"/>']
        xt = xticks if xticks is not None else [(v, _tick(v)) for v in np.linspace(*self.xlim, 5)]
        yt = yticks if yticks is not None else [(v, _tick(v)) for v in np.linspace(*self.ylim, 5)]
        base = self.y0 + self.h
        for v, lab in xt:
            p = self.px(v)
            out.append(f'<line x1="{_f(p)}" y1="{_f(base)}" x2="{_f(p)}" y2="{_f(base + 4)}" stroke="black"/>')
            out.append(f'<text x="{_f(p)}" y="{_f(base + 16)}" font-size="10" '
                       f'text-anchor="middle">{_esc(lab)}</text>')
        for v, lab in yt:
            p = self.py(v)
            out.append(f'<line x1="{_f(self.x0 - 4)}" y1="{_f(p)}" x2="{_f(self.x0)}" y2="{_f(p)}" stroke="black"/>')
            out.append(f'<text x="{_f(self.x0 - 6)}" y="{_f(p + 3)}" font-size="10" '
                       f'text-anchor="end">{_esc(lab)}</text>')
        out.append(f'<text x="{_f(self.x0 + self.w / 2)}" y="{_f(base + 32)}" font-size="12" '
                   f'text-anchor="middle">{_esc(xlabel)}</text>')
        cx, cy = self.x0 - 44, self.y0 + self.h / 2
        out.append(f'<text x="{_f(cx)}" y="{_f(cy)}" font-size="12" text-anchor="middle" '
                   f'transform="rotate(-90 {_f(cx)} {_f(cy)})">{_esc(ylabel)}</text>')
        if title:
            out.append(f'<text x="{_f(self.x0 + self.w / 2)}" y="{_f(self.y0 - 8)}" font-size="12" '
                       f'text-anchor="middle">{_esc(title)}</text>')
        return out

    def polyline(self, xs, ys, color):
        pts = " ".join(f"{_f(self.px(x))},{_f(self.py(y))}" for x, y in zip(xs, ys))
        return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'


def _pad(lim):
    a, b = float(lim[0]), float(lim[1])
    if not (math.isfinite(a) and math.isfinite(b)):
        return (-1.0, 1.0)
    if a == b:
        d = max(abs(a) * 0.1, 1e-3)
        return (a - d, b + d)
    return (a, b)


def _limits(values):
    v = np.asarray([x for x in values if x is not None and math.isfinite(x)], float)
    return (float(v.min()), float(v.max())) if v.size else (-1.0, 1.0)


def _document(width, height, body) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">')
    return "\n".join([head, f'<rect width="{width}" height="{height}" fill="white"/>', *body, "</svg>"]) + "\n"


def _segments(xs, ys, breaks):
    """Split a sorted polyline wherever y is NaN or a break point lies between samples."""
    segs, cur = [], []
    prev = None
    for x, y in zip(xs, ys):
        if not math.isfinite(y):
            if cur:
                segs.append(cur)
            cur, prev = [], None
            continue
        if prev is not None and any(prev < b < x for b in breaks):
            segs.append(cur)
            cur = []
        cur.append((x, y))
        prev = x
    if cur:
        segs.append(cur)
    return segs


def _excluded_k(meta) -> list:
    out = []
    for item in meta.get("excluded", []) or []:
        k = item.get("k") if isinstance(item, dict) else item
        if isinstance(k, (int, float)):
            out.append(float(k))
    return out


def _band_lines(panel, xs, bands, idx, breaks):
    body = []
    series = defaultdict(list)
    for x, b, e in zip(xs, idx, bands):
        series[int(b)].append((float(x), float("nan") if e is None else float(e)))
    for b in sorted(series):
        pts = sorted(series[b])
        for seg in _segments([p[0] for p in pts], [p[1] for p in pts], breaks):
            body.append(panel.polyline([p[0] for p in seg], [p[1] for p in seg],
                                       PALETTE[b % len(PALETTE)]))
    return body


def _plot_bands(t: ResultTable) -> str:
    kd, idx, e = t.column("kd"), t.column("band_index"), t.column("energy_re")
    panel = _Panel(MARGIN[0], MARGIN[2], W - MARGIN[0] - MARGIN[1], H - MARGIN[2] - MARGIN[3],
                   (-math.pi, math.pi), _limits(e))
    ticks = [(-math.pi, "-pi"), (-math.pi / 2, "-pi/2"), (0.0, "0"), (math.pi / 2, "pi/2"), (math.pi, "pi")]
    body = panel.frame("k d", "energy shift (Gamma0)", t.metadata.get("subcommand", ""), xticks=ticks)
    body += _band_lines(panel, kd, e, idx, _excluded_k(t.metadata))
    return _document(W, H, body)


def _plot_cuts(t: ResultTable) -> str:
    rows = list(zip(t.column("cut"), t.column("kx"), t.column("ky"),
                    t.column("band_index"), t.column("energy_re")))
    ylim = _limits([r[4] for r in rows if r[0] in ("kx=0", "ky=0")])
    body = []
    pw = (2 * W - 2 * MARGIN[0] - 2 * MARGIN[1]) / 2.0
    for j, (cut, axis, label) in enumerate((("kx=0", 2, "ky d"), ("ky=0", 1, "kx d"))):
        sel = [r for r in rows if r[0] == cut]
        xs = [r[axis] for r in sel]
        panel = _Panel(MARGIN[0] + j * (pw + MARGIN[0]), MARGIN[2], pw - MARGIN[1],
                       H - MARGIN[2] - MARGIN[3], _limits(xs), ylim)
        body += panel.frame(label, "energy shift (Gamma0)", cut)
        body += _band_lines(panel, xs, [r[4] for r in sel], [r[3] for r in sel], [])
    return _document(2 * W, H, body)


def _plot_scaling(t: ResultTable) -> str:
    n = np.asarray(t.column("n_sites"), float)
    g = np.asarray(t.column("gamma_min"), float)
    ok = (n > 0) & (g > 0) & np.isfinite(g)
    lx, ly = np.log10(n[ok]), np.log10(g[ok])
    panel = _Panel(MARGIN[0], MARGIN[2], W - MARGIN[0] - MARGIN[1], H - MARGIN[2] - MARGIN[3],
                   _limits(lx), _limits(ly))
    xt = [(v, f"{10 ** v:.3g}") for v in np.linspace(*panel.xlim, 5)]
    yt = [(v, f"{10 ** v:.2e}") for v in np.linspace(*panel.ylim, 5)]
    body = panel.frame("N", "Gamma_min (Gamma0)", "darkest decay rate", xticks=xt, yticks=yt)
    for x, y in zip(lx, ly):
        body.append(f'<circle cx="{_f(panel.px(x))}" cy="{_f(panel.py(y))}" r="3" fill="{PALETTE[0]}"/>')
    fit = t.metadata.get("fit") or {}
    if isinstance(fit.get("exponent"), (int, float)) and lx.size:
        slope, icpt = float(fit["exponent"]), float(fit["intercept"])
        xs = np.array(panel.xlim)
        ys = (icpt + slope * xs * math.log(10)) / math.log(10)
        body.append(panel.polyline(xs, ys, PALETTE[3]).replace('stroke-width="1.5"',
                                                               'stroke-width="1" stroke-dasharray="4 3"'))
        r2 = fit.get("r_squared")
        label = f"slope = {slope:.3f}" + (f", r2 = {r2:.4f}" if isinstance(r2, (int, float)) else "")
        body.append(f'<text x="{_f(panel.x0 + panel.w - 6)}" y="{_f(panel.y0 + 16)}" font-size="12" '
                    f'text-anchor="end">{_esc(label)}</text>')
    elif fit.get("error"):
        body.append(f'<text x="{_f(panel.x0 + 6)}" y="{_f(panel.y0 + 16)}" font-size="11">'
                    f'{_esc("fit failed: " + str(fit["error"]))}</text>')
    return _document(W, H, body)


def _heat_color(v: float, vmax: float) -> str:
    s = 0.0 if vmax <= 0 else min(1.0, max(0.0, v / vmax))
    # white -> dark blue
    r = int(round(255 * (1 - 0.88 * s)))
    g = int(round(255 * (1 - 0.70 * s)))
    b = int(round(255 * (1 - 0.35 * s)))
    return f"#{r:02x}{g:02x}{b:02x}"


def _plot_distribution(t: ResultTable) -> str:
    pols = t.column("pol")
    prob = [float(p) for p in t.column("probability")]
    order = list(dict.fromkeys(pols))
    if t.has_columns("ix", "iy"):
        ix, iy = t.column("ix"), t.column("iy")
        n = int(max(max(ix), max(iy))) + 1
        vmax = max(prob) if prob else 0.0
        cell = min(240.0 / n, 24.0)
        side = cell * n
        body = []
        for j, pol in enumerate(order):
            x0 = 30 + j * (side + 30)
            body.append(f'<text x="{_f(x0 + side / 2)}" y="20" font-size="12" '
                        f'text-anchor="middle">{_esc(pol)}</text>')
            for a, b, p, v in zip(ix, iy, pols, prob):
                if p != pol:
                    continue
                body.append(f'<rect x="{_f(x0 + a * cell)}" y="{_f(30 + (n - 1 - b) * cell)}" '
                            f'width="{_f(cell)}" height="{_f(cell)}" fill="{_heat_color(v, vmax)}"/>')
            body.append(f'<rect x="{_f(x0)}" y="30" width="{_f(side)}" height="{_f(side)}" '
                        'fill="none" stroke="black"/>')
        body.append(f'<text x="30" y="{_f(side + 50)}" font-size="11">max probability '
                    f'{vmax:.3e}; ix to the right, iy upward</text>')
        return _document(int(60 + len(order) * (side + 30)), int(side + 70), body)
    if not t.has_columns("site"):
        raise PlotSchemaError("distribution plot needs columns site or ix, iy (plus pol, probability)")
    site = t.column("site")
    panel = _Panel(MARGIN[0], MARGIN[2], W - MARGIN[0] - MARGIN[1], H - MARGIN[2] - MARGIN[3],
                   _limits(site), _limits(prob + [0.0]))
    body = panel.frame("site", "probability", "photonic weight")
    for j, pol in enumerate(order):
        pts = sorted((s, v) for s, p, v in zip(site, pols, prob) if p == pol)
        body.append(panel.polyline([p[0] for p in pts], [p[1] for p in pts], PALETTE[j % len(PALETTE)]))
        body.append(f'<text x="{_f(panel.x0 + 8)}" y="{_f(panel.y0 + 14 + 14 * j)}" font-size="11" '
                    f'fill="{PALETTE[j % len(PALETTE)]}">{_esc(pol)}</text>')
    return _document(W, H, body)


def _plot_spectrum(t: ResultTable) -> str:
    e, g = t.column("energy_re"), t.column("gamma")
    panel = _Panel(MARGIN[0], MARGIN[2], W - MARGIN[0] - MARGIN[1], H - MARGIN[2] - MARGIN[3],
                   _limits(e), _limits(g))
    body = panel.frame("Re energy (Gamma0)", "decay rate (Gamma0)", "complex spectrum")
    for x, y in zip(e, g):
        body.append(f'<circle cx="{_f(panel.px(x))}" cy="{_f(panel.py(y))}" r="2.5" fill="{PALETTE[0]}"/>')
    return _document(W, H, body)


_RENDERERS = {
    "bands": _plot_bands,
    "cuts": _plot_cuts,
    "scaling": _plot_scaling,
    "distribution": _plot_distribution,
    "spectrum": _plot_spectrum,
}


def render_svg(table: ResultTable, kind: str) -> str:
    if kind not in _RENDERERS:
        raise PlotSchemaError(f"unknown plot kind {kind!r}; expected one of {sorted(_RENDERERS)}")
    need = REQUIRED_COLUMNS[kind]
    if not table.has_columns(*need):
        have = [n for n, _, _ in table.flat_columns]
        raise PlotSchemaError(f"plot kind {kind!r} needs columns {list(need)}, table has {have}")
    return _RENDERERS[kind](table)


def render_plot(table: ResultTable, kind: str, path) -> None:
    text = render_svg(table, kind)
    path = Path(path)
    if not path.parent.exists():
        raise FileNotFoundError(f"plot directory does not exist: {path.parent}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
