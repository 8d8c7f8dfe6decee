"""Minimal deterministic SVG rendering for report plots.

Hand-rolled on purpose: output bytes must be identical across runs, so no
timestamps, no library version strings, and fixed-precision coordinates.
"""

from __future__ import annotations

import math

PALETTE = (
    "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3",
    "#937860", "#da8bc3", "#8c8c8c", "#ccb974", "#64b5cd",
)
CELL = 46
MARGIN_LEFT = 170
MARGIN_TOP = 60


def _f(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".")


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _document(width: float, height: float, body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" '
        f'height="{_f(height)}" viewBox="0 0 {_f(width)} {_f(height)}" '
        'font-family="sans-serif" font-size="11">'
    )
    return "\n".join([head, *body, "</svg>"]) + "\n"


def _cell_color(value: float) -> str:
    """White-to-blue ramp for a value in [0, 1]."""
    v = min(max(value, 0.0), 1.0)
    r = round(255 - v * (255 - 58))
    g = round(255 - v * (255 - 106))
    b = round(255 - v * (255 - 166))
    return f"rgb({r},{g},{b})"


def render_heatmap(
    row_labels: list[str],
    col_labels: list[str],
    rows: list[list[float | None]],
    title: str,
) -> str:
    """Grid heatmap with row/column labels; None cells render gray."""
    width = MARGIN_LEFT + CELL * len(col_labels) + 20
    height = MARGIN_TOP + CELL * len(row_labels) + 20
    body = [f'<text x="{MARGIN_LEFT}" y="20" font-size="14">{_esc(title)}</text>']
    for c, label in enumerate(col_labels):
        x = MARGIN_LEFT + c * CELL + CELL / 2
        body.append(
            f'<text x="{_f(x)}" y="{MARGIN_TOP - 8}" text-anchor="end" '
            f'transform="rotate(-35 {_f(x)} {MARGIN_TOP - 8})">{_esc(label)}</text>'
        )
    for r, (label, row) in enumerate(zip(row_labels, rows)):
        y = MARGIN_TOP + r * CELL
        body.append(
            f'<text x="{MARGIN_LEFT - 6}" y="{_f(y + CELL / 2 + 4)}" '
            f'text-anchor="end">{_esc(label)}</text>'
        )
        for c, value in enumerate(row):
            x = MARGIN_LEFT + c * CELL
            if value is None:
                body.append(
                    f'<rect x="{_f(x)}" y="{_f(y)}" width="{CELL}" height="{CELL}" '
                    'fill="#dddddd" stroke="#ffffff"/>'
                )
                body.append(
                    f'<text x="{_f(x + CELL / 2)}" y="{_f(y + CELL / 2 + 4)}" '
                    'text-anchor="middle" fill="#666666">n/a</text>'
                )
            else:
                fill = _cell_color(value)
                text_fill = "#000000" if value < 0.6 else "#ffffff"
                body.append(
                    f'<rect x="{_f(x)}" y="{_f(y)}" width="{CELL}" height="{CELL}" '
                    f'fill="{fill}" stroke="#ffffff"/>'
                )
                body.append(
                    f'<text x="{_f(x + CELL / 2)}" y="{_f(y + CELL / 2 + 4)}" '
                    f'text-anchor="middle" fill="{text_fill}">{value:.2f}</text>'
                )
    return _document(width, height, body)


def render_curves(
    curves: dict[str, tuple[list[float], list[float]]],
    title: str,
    x_label: str,
) -> str:
    """Overlaid line plot of (grid, density) curves with a legend."""
    plot_w, plot_h = 560.0, 320.0
    left, top = 60.0, 40.0
    width = left + plot_w + 190
    height = top + plot_h + 60

    xs_all = [x for grid, _ in curves.values() for x in grid]
    ys_all = [y for _, dens in curves.values() for y in dens]
    if not xs_all:
        return _document(width, height, [f'<text x="{left}" y="{top}">no data</text>'])
    x_min, x_max = min(xs_all), max(xs_all)
    y_max = max(ys_all) if max(ys_all) > 0 else 1.0
    x_span = (x_max - x_min) or 1.0

    def sx(x: float) -> float:
        return left + (x - x_min) / x_span * plot_w

    def sy(y: float) -> float:
        return top + plot_h - y / y_max * plot_h

    body = [
        f'<text x="{_f(left)}" y="20" font-size="14">{_esc(title)}</text>',
        f'<rect x="{_f(left)}" y="{_f(top)}" width="{_f(plot_w)}" height="{_f(plot_h)}" '
        'fill="none" stroke="#333333"/>',
        f'<text x="{_f(left + plot_w / 2)}" y="{_f(top + plot_h + 34)}" '
        f'text-anchor="middle">{_esc(x_label)}</text>',
    ]
    for i in range(5):
        x = x_min + x_span * i / 4
        body.append(
            f'<text x="{_f(sx(x))}" y="{_f(top + plot_h + 16)}" '
            f'text-anchor="middle" font-size="9">{x:.3g}</text>'
        )
    for idx, (label, (grid, density)) in enumerate(curves.items()):
        color = PALETTE[idx % len(PALETTE)]
        points = " ".join(f"{_f(sx(x))},{_f(sy(y))}" for x, y in zip(grid, density))
        body.append(f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = top + 14 * idx
        body.append(
            f'<rect x="{_f(left + plot_w + 12)}" y="{_f(ly)}" width="10" height="10" fill="{color}"/>'
        )
        body.append(
            f'<text x="{_f(left + plot_w + 26)}" y="{_f(ly + 9)}" font-size="10">{_esc(label)}</text>'
        )
    return _document(width, height, body)


def render_dendrogram(layout: dict, title: str) -> str:
    """Dendrogram from a layout of leaf order and merge coordinates."""
    labels = layout["labels"]
    merges = layout["merges"]
    n = len(labels)
    leaf_gap = 70.0
    plot_h = 300.0
    left, top = 30.0, 40.0
    width = left * 2 + leaf_gap * max(n - 1, 1) + 140
    height = top + plot_h + 120

    max_h = max((m["height"] for m in merges), default=1.0) or 1.0

    def sx(units: float) -> float:
        return left + units * leaf_gap

    def sy(h: float) -> float:
        return top + plot_h - h / max_h * plot_h

    body = [f'<text x="{_f(left)}" y="20" font-size="14">{_esc(title)}</text>']
    for pos, label in enumerate(labels):
        x = sx(pos)
        body.append(
            f'<text x="{_f(x)}" y="{_f(top + plot_h + 14)}" text-anchor="end" '
            f'transform="rotate(-45 {_f(x)} {_f(top + plot_h + 14)})">{_esc(label)}</text>'
        )
    for m in merges:
        y = sy(m["height"])
        yl = sy(m["height_left"])
        yr = sy(m["height_right"])
        xl, xr = sx(m["x_left"]), sx(m["x_right"])
        body.append(
            f'<path d="M {_f(xl)} {_f(yl)} V {_f(y)} H {_f(xr)} V {_f(yr)}" '
            'fill="none" stroke="#333333" stroke-width="1.5"/>'
        )
        mid = (xl + xr) / 2
        body.append(
            f'<text x="{_f(mid)}" y="{_f(y - 4)}" text-anchor="middle" '
            f'font-size="9" fill="#555555">{m["height"]:.4g}</text>'
        )
    if not math.isfinite(max_h):
        body.append(f'<text x="{_f(left)}" y="{_f(top)}">invalid heights</text>')
    return _document(width, height, body)
