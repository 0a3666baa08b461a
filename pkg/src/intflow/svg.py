"""Minimal self-contained SVG writers: heatmap, heatmap + quiver, and line plot."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

_W, _H, _PAD = 480, 480, 40


def _fmt(v: float) -> str:
    return f"{v:.3f}".rstrip("0").rstrip(".")


def _diverging(t: float) -> str:
    # t in [-1, 1]: blue - white - red
    t = max(-1.0, min(1.0, t))
    if t >= 0:
        r, g, b = 255, int(255 * (1 - t)), int(255 * (1 - t))
    else:
        r, g, b = int(255 * (1 + t)), int(255 * (1 + t)), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def _sequential(t: float) -> str:
    t = max(0.0, min(1.0, t))
    r = int(255 * (1 - 0.8 * t))
    g = int(255 * (1 - 0.6 * t))
    b = int(255 * (1 - 0.2 * t))
    return f"#{r:02x}{g:02x}{b:02x}"


def _document(body: list[str], title: str) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W + 2 * _PAD}" height="{_H + 2 * _PAD}" '
        f'viewBox="0 0 {_W + 2 * _PAD} {_H + 2 * _PAD}">\n'
        f"<title>{escape(title)}</title>\n"
        f'<rect x="0" y="0" width="{_W + 2 * _PAD}" height="{_H + 2 * _PAD}" fill="white"/>\n'
        f'<text x="{_PAD}" y="{_PAD - 12}" font-family="sans-serif" font-size="14">{escape(title)}</text>\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"


def _heat_cells(values: np.ndarray, max_cells: int, diverging: bool) -> list[str]:
    v = np.asarray(values, dtype=float)
    # coarsen by block averaging so the file stays small
    step = max(1, int(np.ceil(max(v.shape) / max_cells)))
    nx, ny = v.shape[0] // step, v.shape[1] // step
    v = v[: nx * step, : ny * step].reshape(nx, step, ny, step).mean(axis=(1, 3))
    scale = float(np.max(np.abs(v))) if diverging else float(v.max() - v.min())
    lo = 0.0 if diverging else float(v.min())
    cw, ch = _W / nx, _H / ny
    out = []
    for a in range(nx):
        for b in range(ny):
            t = (v[a, b] - lo) / scale if scale > 0 else 0.0
            color = _diverging(t) if diverging else _sequential(t)
            # y axis points up
            out.append(
                f'<rect x="{_fmt(_PAD + a * cw)}" y="{_fmt(_PAD + (ny - 1 - b) * ch)}" '
                f'width="{_fmt(cw + 0.05)}" height="{_fmt(ch + 0.05)}" fill="{color}"/>'
            )
    return out


def heatmap(grid, title: str, diverging: bool = False, max_cells: int = 100) -> str:
    return _document(_heat_cells(grid.values, max_cells, diverging), title)


def quiver(grid, points, vectors, title: str, diverging: bool = True, max_cells: int = 100) -> str:
    """Heatmap of ``grid`` with arrows at ``points``; arrows are scaled so the longest spans 4% of the plot."""
    spec = grid.spec
    body = _heat_cells(grid.values, max_cells, diverging)
    pts = np.asarray(points, dtype=float)
    vec = np.asarray(vectors, dtype=float)
    longest = float(np.max(np.linalg.norm(vec, axis=1))) if len(vec) else 0.0
    k = 0.04 * _W / longest if longest > 0 else 0.0
    sx = _W / (spec.x_max - spec.x_min)
    sy = _H / (spec.y_max - spec.y_min)
    for (x, y), (u, w) in zip(pts.tolist(), vec.tolist()):
        px = _PAD + (x - spec.x_min) * sx
        py = _PAD + _H - (y - spec.y_min) * sy
        qx, qy = px + k * u, py - k * w
        body.append(
            f'<line x1="{_fmt(px)}" y1="{_fmt(py)}" x2="{_fmt(qx)}" y2="{_fmt(qy)}" '
            'stroke="black" stroke-width="0.7"/>'
        )
        body.append(f'<circle cx="{_fmt(qx)}" cy="{_fmt(qy)}" r="0.9" fill="black"/>')
    return _document(body, title)


def line_plot(x, series: dict, title: str, logx: bool = True, logy: bool = True) -> str:
    """Lines for each named series over a shared x axis; non-positive values are dropped on log axes."""
    x = np.asarray(x, dtype=float)
    tx = np.log10(x) if logx else x
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    ys = {}
    for name, y in series.items():
        y = np.asarray(y, dtype=float)
        ok = np.isfinite(y) & ((y > 0) if logy else True)
        ys[name] = (tx[ok], np.log10(y[ok]) if logy else y[ok])
    all_y = np.concatenate([v[1] for v in ys.values()]) if ys else np.zeros(1)
    if all_y.size == 0:
        all_y = np.zeros(1)
    x0, x1 = float(tx.min()), float(tx.max())
    y0, y1 = float(all_y.min()), float(all_y.max())
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def px(v):
        return _PAD + (v - x0) / (x1 - x0) * _W

    def py(v):
        return _PAD + _H - (v - y0) / (y1 - y0) * _H

    body = [
        f'<rect x="{_PAD}" y="{_PAD}" width="{_W}" height="{_H}" fill="none" stroke="#888"/>',
        f'<text x="{_PAD}" y="{_PAD + _H + 28}" font-family="sans-serif" font-size="11">'
        f'x: {"log10 " if logx else ""}[{_fmt(x0)}, {_fmt(x1)}]   y: {"log10 " if logy else ""}[{_fmt(y0)}, {_fmt(y1)}]</text>',
    ]
    for idx, (name, (sx, sy)) in enumerate(ys.items()):
        color = colors[idx % len(colors)]
        if len(sx):
            pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(sx, sy))
            body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        body.append(
            f'<text x="{_PAD + 10}" y="{_PAD + 18 + 16 * idx}" font-family="sans-serif" '
            f'font-size="12" fill="{color}">{escape(name)}</text>'
        )
    return _document(body, title)
