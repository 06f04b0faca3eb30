"""Small deterministic SVG bar charts for ranking displays.

Charts are built as plain text so identical inputs give identical bytes.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

_ROW = 22
_LABEL_W = 190
_BAR_W = 360
_PALETTE = ("#3b6ea8", "#d08a2c", "#5a9e5a", "#a8473b")


def _num(v):
    return f"{v:.2f}"


def _header(width, height, title):
    return [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
            f'<rect width="{width}" height="{height}" fill="white"/>',
            f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>']


def bar_chart(labels, values, title="", xlabel="") -> str:
    """Horizontal bars sorted largest first."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(-values, kind="stable")
    vmax = float(np.max(np.abs(values))) if values.size else 0.0
    vmax = vmax if vmax > 0 else 1.0
    top = 30
    height = top + _ROW * len(labels) + 40
    width = _LABEL_W + _BAR_W + 90
    out = _header(width, height, title)
    for k, i in enumerate(order):
        y = top + k * _ROW
        w = max(values[i], 0.0) / vmax * _BAR_W
        out.append(f'<text x="{_LABEL_W - 6}" y="{y + 15}" text-anchor="end">{escape(str(labels[i]))}</text>')
        out.append(f'<rect x="{_LABEL_W}" y="{y + 3}" width="{_num(w)}" height="{_ROW - 6}" fill="{_PALETTE[0]}"/>')
        out.append(f'<text x="{_num(_LABEL_W + w + 4)}" y="{y + 15}">{values[i]:.4g}</text>')
    if xlabel:
        out.append(f'<text x="{_LABEL_W + _BAR_W / 2:.1f}" y="{height - 10}" text-anchor="middle">'
                   f'{escape(xlabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def grouped_bar_chart(labels, series: dict, title="", errors: dict | None = None) -> str:
    """Horizontal grouped bars, one group per label, one bar per series.

    ``errors`` optionally maps a series name to ``(lo, hi)`` arrays drawn
    as whiskers.  Groups are ordered by the first series, largest first.
    """
    names = list(series)
    data = [np.asarray(series[n], dtype=float) for n in names]
    order = np.argsort(-data[0], kind="stable") if data else []
    hi_all = [d for d in data] + [np.asarray(e[1], dtype=float) for e in (errors or {}).values()]
    vmax = max((float(np.max(d)) for d in hi_all if d.size), default=1.0)
    vmax = vmax if vmax > 0 else 1.0
    bar_h = 12
    group_h = bar_h * len(names) + 8
    top = 30
    height = top + group_h * len(labels) + 30 + 18 * len(names)
    width = _LABEL_W + _BAR_W + 90
    out = _header(width, height, title)
    for k, i in enumerate(order):
        y0 = top + k * group_h
        out.append(f'<text x="{_LABEL_W - 6}" y="{y0 + group_h / 2 + 4:.1f}" text-anchor="end">'
                   f'{escape(str(labels[i]))}</text>')
        for s, name in enumerate(names):
            v = data[s][i]
            y = y0 + s * bar_h
            w = max(v, 0.0) / vmax * _BAR_W
            col = _PALETTE[s % len(_PALETTE)]
            out.append(f'<rect x="{_LABEL_W}" y="{y}" width="{_num(w)}" height="{bar_h - 2}" fill="{col}"/>')
            if errors and name in errors:
                lo = max(float(errors[name][0][i]), 0.0) / vmax * _BAR_W
                hi = max(float(errors[name][1][i]), 0.0) / vmax * _BAR_W
                yc = y + (bar_h - 2) / 2
                out.append(f'<line x1="{_num(_LABEL_W + lo)}" y1="{yc:.1f}" x2="{_num(_LABEL_W + hi)}" '
                           f'y2="{yc:.1f}" stroke="black" stroke-width="1"/>')
    ly = top + group_h * len(labels) + 16
    for s, name in enumerate(names):
        y = ly + 18 * s
        out.append(f'<rect x="{_LABEL_W}" y="{y - 10}" width="12" height="12" '
                   f'fill="{_PALETTE[s % len(_PALETTE)]}"/>')
        out.append(f'<text x="{_LABEL_W + 18}" y="{y}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def shap_svg(result, path, title="mean |SHAP|"):
    write_text(path, bar_chart(result.features, result.scores, title, "mean |phi| (target units)"))


def sobol_svg(indices, path, title="Sobol indices"):
    write_text(path, grouped_bar_chart(
        indices.features, {"S1": indices.s1, "ST": indices.st}, title,
        errors={"S1": (indices.s1_ci[:, 0], indices.s1_ci[:, 1]),
                "ST": (indices.st_ci[:, 0], indices.st_ci[:, 1])}))


def ranking_svg(result, path, title=None):
    write_text(path, bar_chart(result.features, result.scores, title or result.method))
