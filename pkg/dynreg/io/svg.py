"""dynreg/dynreg/io/svg.py.

Minimal static SVG line plots with a logarithmic y axis.
"""

import numpy as np

from dynreg.io.ioutils import abs_fname, check_and_makedirs

_COLORS = (
        "#1f77b4",
        "#d62728",
        "#2ca02c",
        "#9467bd",
        "#ff7f0e",
        "#8c564b",
)

_WIDTH = 640
_HEIGHT = 420
_MARGIN = (70, 20, 30, 50)  # left, right, top, bottom


def _num(v):
    return f"{v:.2f}"


def render(curves, title="", xlabel="frame", ylabel=""):
    """SVG text of one or more curves.

    Parameters
    -----------
    curves: list
      (label, x, y) per curve. Nonpositive y values are skipped.
    title: str
    xlabel: str
    ylabel: str

    Returns
    --------
    svg: str
    """
    if len(curves) == 0:
        raise ValueError("nothing to plot.")

    xs = np.concatenate([np.asarray(c[1], dtype=float) for c in curves])
    ys = np.concatenate([np.asarray(c[2], dtype=float) for c in curves])
    positive = ys[(ys > 0) & np.isfinite(ys)]
    if positive.size == 0:
        raise ValueError("log scale plot needs positive values.")

    x0, x1 = float(xs.min()), float(xs.max())
    if x1 == x0:
        x1 = x0 + 1.
    d0 = np.floor(np.log10(positive.min()))
    d1 = np.ceil(np.log10(positive.max()))
    if d1 == d0:
        d1 = d0 + 1.

    left, right, top, bottom = _MARGIN
    pw = _WIDTH - left - right
    ph = _HEIGHT - top - bottom

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + (d1 - np.log10(y)) / (d1 - d0) * ph

    out = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
            f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">',
            f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
            f'<text x="{_WIDTH / 2}" y="18" text-anchor="middle" '
            f'font-size="14">{title}</text>',
            f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" '
            'fill="none" stroke="black"/>',
    ]

    for d in range(int(d0), int(d1) + 1):
        y = _num(py(10.**d))
        out.append(
                f'<line x1="{left}" y1="{y}" x2="{left + pw}" y2="{y}" '
                'stroke="#dddddd"/>'
        )
        out.append(
                f'<text x="{left - 6}" y="{y}" text-anchor="end" '
                f'font-size="11">1e{d}</text>'
        )

    for x in np.linspace(x0, x1, 5):
        out.append(
                f'<text x="{_num(px(x))}" y="{top + ph + 16}" '
                f'text-anchor="middle" font-size="11">{x:g}</text>'
        )
    out.append(
            f'<text x="{left + pw / 2}" y="{_HEIGHT - 8}" '
            f'text-anchor="middle" font-size="12">{xlabel}</text>'
    )
    out.append(
            f'<text x="14" y="{top + ph / 2}" text-anchor="middle" '
            f'font-size="12" transform="rotate(-90 14 {top + ph / 2})">'
            f'{ylabel}</text>'
    )

    for i, (label, x, y) in enumerate(curves):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        keep = (y > 0) & np.isfinite(y)
        points = " ".join(
                f"{_num(px(a))},{_num(py(b))}"
                for a, b in zip(x[keep], y[keep])
        )
        color = _COLORS[i % len(_COLORS)]
        out.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                f'points="{points}"/>'
        )
        ly = top + 16 + 16 * i
        out.append(
                f'<line x1="{left + pw - 110}" y1="{ly}" '
                f'x2="{left + pw - 90}" y2="{ly}" stroke="{color}" '
                'stroke-width="2"/>'
        )
        out.append(
                f'<text x="{left + pw - 84}" y="{ly + 4}" '
                f'font-size="11">{label}</text>'
        )

    out.append("</svg>")

    return "\n".join(out) + "\n"


def export(fname, curves, **kwargs):
    """Writes `render(curves, **kwargs)` to fname."""
    fname = abs_fname(fname)
    check_and_makedirs(fname)
    with open(fname, "w") as f:
        f.write(render(curves, **kwargs))
