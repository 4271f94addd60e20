"""
Module containing utility functions to generate plain SVG line plots
"""
from typing import Dict, List, Sequence, Tuple

import numpy as np

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]


def _segments(x: np.ndarray, y: np.ndarray) -> List[np.ndarray]:
    """
    Splits a curve into runs of finite points.
    """
    finite = np.isfinite(x) & np.isfinite(y)
    segments = []
    start = None
    for index, ok in enumerate(finite):
        if ok and start is None:
            start = index
        elif not ok and start is not None:
            segments.append(np.arange(start, index))
            start = None
    if start is not None:
        segments.append(np.arange(start, finite.size))
    return segments


def _bounds(values: List[np.ndarray]) -> Tuple[float, float]:
    """
    Finite range of the given arrays, widened when degenerate.
    """
    finite = [v[np.isfinite(v)] for v in values]
    finite = [v for v in finite if v.size]
    if not finite:
        return 0.0, 1.0
    low = min(float(np.min(v)) for v in finite)
    high = max(float(np.max(v)) for v in finite)
    if high - low < 1e-12 * max(1.0, abs(high)):
        low, high = low - 0.5, high + 0.5
    return low, high


def create_polyline(
    x: np.ndarray,
    y: np.ndarray,
    x_range: Tuple[float, float],
    y_range: Tuple[float, float],
    box: Tuple[float, float, float, float],
    color: str,
) -> str:
    """
    Creates the polyline elements of one curve. Non-finite samples break
    the line.

    Parameters
    ------------------------
    x: np.ndarray
        Abscissae.
    y: np.ndarray
        Ordinates.
    x_range: Tuple[float, float]
        Data range mapped to the box width.
    y_range: Tuple[float, float]
        Data range mapped to the box height.
    box: Tuple[float, float, float, float]
        Left, top, width and height of the plotting area in pixels.
    color: str
        Stroke color.

    Returns
    ------------------------
    str
        One polyline element per finite run.
    """

    left, top, width, height = box
    px = left + (x - x_range[0]) / (x_range[1] - x_range[0]) * width
    py = top + height - (y - y_range[0]) / (y_range[1] - y_range[0]) * height

    code = ""
    for segment in _segments(x, y):
        points = " ".join(f"{px[i]:.2f},{py[i]:.2f}" for i in segment)
        code += f'<polyline fill="none" stroke="{color}" '
        code += f'stroke-width="1.5" points="{points}"/>\n'
    return code


def create_line_plot(
    curves: Dict[str, Tuple[Sequence[float], Sequence[float]]],
    title: str,
    x_label: str = "t",
    y_label: str = "",
    size: Tuple[int, int] = (640, 400),
) -> str:
    """
    Return SVG code for a line plot of one or more curves.

    Parameters
    ------------------------
    curves: Dict[str, Tuple[Sequence[float], Sequence[float]]]
        Label to (x, y) samples.
    title: str
        Plot title.
    x_label: str
        Label of the horizontal axis.
    y_label: str
        Label of the vertical axis.
    size: Tuple[int, int]
        Width and height in pixels.

    Returns
    ------------------------
    str
        Complete SVG document.
    """

    width, height = size
    box = (60.0, 30.0, width - 80.0, height - 70.0)
    arrays = {
        label: (
            np.asarray(x, dtype=float),
            np.asarray(y, dtype=float),
        )
        for label, (x, y) in curves.items()
    }
    x_range = _bounds([x for x, _ in arrays.values()])
    y_range = _bounds([y for _, y in arrays.values()])

    code = '<svg xmlns="http://www.w3.org/2000/svg" '
    code += f'width="{width}" height="{height}">\n'
    code += f'<rect x="{box[0]}" y="{box[1]}" width="{box[2]}" '
    code += f'height="{box[3]}" fill="none" stroke="black"/>\n'
    code += f'<text x="{width / 2:.1f}" y="20" text-anchor="middle">'
    code += f"{title}</text>\n"
    code += f'<text x="{width / 2:.1f}" y="{height - 10}" '
    code += f'text-anchor="middle">{x_label}</text>\n'
    code += f'<text x="15" y="{height / 2:.1f}" '
    code += f'transform="rotate(-90 15 {height / 2:.1f})" '
    code += f'text-anchor="middle">{y_label}</text>\n'

    for value, anchor, x_pos, y_pos in (
        (x_range[0], "start", box[0], box[1] + box[3] + 15),
        (x_range[1], "end", box[0] + box[2], box[1] + box[3] + 15),
        (y_range[0], "end", box[0] - 4, box[1] + box[3]),
        (y_range[1], "end", box[0] - 4, box[1] + 10),
    ):
        code += f'<text x="{x_pos:.1f}" y="{y_pos:.1f}" '
        code += f'text-anchor="{anchor}" font-size="10">{value:.4g}</text>\n'

    for index, (label, (x, y)) in enumerate(arrays.items()):
        color = PALETTE[index % len(PALETTE)]
        code += create_polyline(x, y, x_range, y_range, box, color)
        code += f'<text x="{box[0] + box[2] - 4:.1f}" '
        code += f'y="{box[1] + 14 * (index + 1):.1f}" text-anchor="end" '
        code += f'fill="{color}" font-size="11">{label}</text>\n'

    code += "</svg>"
    return code
