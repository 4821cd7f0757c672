"""Static SVG convergence plots of trace CSVs.

Draws ``ln ||theta_t - theta*||`` against the iteration count, one series
per (solver, scenario parameter) pair. Traces sharing a series (repeat
seeds) are combined by the per-iteration median of the log error. Series
metadata is read from the ``manifest.json`` next to each trace.
"""

import json
import math
import os
from xml.sax.saxutils import escape

import numpy as np

from .exceptions import SchemaMismatch
from .experiment import SOLVERS, read_trace

COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f"]
DASHES = ["", "6,3", "2,3", "8,3,2,3"]

WIDTH, HEIGHT = 720, 460
LEFT, RIGHT, TOP, BOTTOM = 70, 170, 40, 55


def _manifest_for(path):
    man = os.path.join(os.path.dirname(os.path.abspath(path)), "manifest.json")
    if not os.path.exists(man):
        return {}
    with open(man) as fh:
        return json.load(fh)


def _solver_from_name(path):
    stem = os.path.basename(path)
    if stem.startswith("trace_"):
        return stem[len("trace_"):].split("_seed")[0]
    return stem


def _series_key(path, manifest):
    """``(scenario, parameter name, parameter value, solver)`` for one trace."""
    scenario = manifest.get("scenario")
    solver = manifest.get("solver", _solver_from_name(path))
    if scenario == "LinearPareto":
        name = "sigma"
    else:
        name = "epsilon"
    return scenario, name, manifest.get(name), solver


def _solver_rank(solver):
    return SOLVERS.index(solver) if solver in SOLVERS else len(SOLVERS)


def collect_series(trace_paths):
    """Group trace files into plot series.

    Returns a list of ``(label, log_errors, is_constant)`` in legend order:
    by scenario parameter, then by solver.

    Raises
    ------
    SchemaMismatch
        On an empty list, a malformed trace or traces from different scenarios.
    """
    trace_paths = list(trace_paths)
    if not trace_paths:
        raise SchemaMismatch("no trace files to plot")
    groups = {}
    scenarios = set()
    for path in trace_paths:
        key = _series_key(path, _manifest_for(path))
        scenarios.add(key[0])
        errors = read_trace(path)["param_error"]
        groups.setdefault(key, []).append(errors)
    if len(scenarios) > 1:
        known = sorted(str(s) for s in scenarios)
        raise SchemaMismatch(f"traces mix scenarios: {', '.join(known)}")

    def order(key):
        value = key[2]
        return (value is None, value if value is not None else 0.0, _solver_rank(key[3]), key[3])

    series = []
    for key in sorted(groups, key=order):
        runs = groups[key]
        length = min(len(r) for r in runs)
        if length == 0:
            raise SchemaMismatch(f"empty trace for solver {key[3]}")
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.log(np.array([r[:length] for r in runs]))
        curve = np.median(logs, axis=0)
        label = key[3] if key[2] is None else f"{key[3]} {key[1]}={key[2]:g}"
        series.append((label, curve, length == 1))
    return series


def _nice_ticks(lo, hi, count=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.floor(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


def render_svg(series, title="", x_label="iteration", y_label="ln ||theta - theta*||"):
    """SVG document text for already collected series."""
    finite = [v for _, c, _ in series for v in c if math.isfinite(v)]
    if not finite:
        finite = [0.0]
    n_iter = max(len(c) for _, c, _ in series) - 1
    x_max = max(n_iter, 1)
    y_ticks = _nice_ticks(min(finite), max(finite))
    y_lo, y_hi = y_ticks[0], y_ticks[-1]
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    x_ticks = _nice_ticks(0, x_max)
    x_ticks = [t for t in x_ticks if t <= x_max]

    pw = WIDTH - LEFT - RIGHT
    ph = HEIGHT - TOP - BOTTOM

    def px(x):
        return LEFT + x / x_max * pw

    def py(y):
        return TOP + (y_hi - y) / (y_hi - y_lo) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in x_ticks:
        x = px(t)
        out.append(f'<line x1="{x:.2f}" y1="{TOP + ph}" x2="{x:.2f}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{TOP + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in y_ticks:
        y = py(t)
        out.append(f'<line x1="{LEFT - 5}" y1="{y:.2f}" x2="{LEFT}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<line x1="{LEFT}" y1="{y:.2f}" x2="{LEFT + pw}" y2="{y:.2f}" stroke="#dddddd"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y + 4:.2f}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(x_label)}</text>')
    out.append(
        f'<text x="18" y="{TOP + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {TOP + ph / 2:.1f})">{escape(y_label)}</text>'
    )
    if title:
        out.append(f'<text x="{LEFT + pw / 2:.1f}" y="24" text-anchor="middle" font-size="14">{escape(title)}</text>')

    for i, (label, curve, constant) in enumerate(series):
        color = COLORS[i % len(COLORS)]
        dash = DASHES[(i // len(COLORS)) % len(DASHES)]
        style = f' stroke-dasharray="{dash}"' if dash else ""
        if constant:
            pts = [(0, curve[0]), (x_max, curve[0])]
        else:
            pts = list(enumerate(curve))
        segs, pen = [], False
        for x, y in pts:
            if not math.isfinite(y):
                pen = False
                continue
            segs.append(f"{'L' if pen else 'M'}{px(x):.2f},{py(y):.2f}")
            pen = True
        if segs:
            out.append(f'<path d="{" ".join(segs)}" fill="none" stroke="{color}" stroke-width="1.8"{style}/>')
        ly = TOP + 12 + 18 * i
        lx = LEFT + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" stroke-width="1.8"{style}/>')
        out.append(f'<text x="{lx + 30}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(trace_paths, out_path, title=""):
    """Write a convergence plot of ``trace_paths`` to ``out_path``; returns the series labels."""
    series = collect_series(trace_paths)
    text = render_svg(series, title=title)
    with open(out_path, "w") as fh:
        fh.write(text)
    return [label for label, _, _ in series]
