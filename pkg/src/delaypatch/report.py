"""Result persistence (CSV + JSON sidecar) and SVG trajectory plots."""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .harness import PolicyCurve, TrajectoryResult

CSV_HEADER = ["policy", "time", "mean_infected", "std_infected"]

COLORS = {
    "delayed": "#d62728",
    "reactive": "#1f77b4",
    "degree": "#2ca02c",
    "eigen": "#9467bd",
}
FALLBACK_COLORS = ["#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f", "#17becf"]


def write_results(res: TrajectoryResult, path) -> tuple[Path, Path]:
    """Write the mean/std curves to ``path`` and the full record next to it as JSON."""
    path = Path(path)
    sidecar = path.with_suffix(".json")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(CSV_HEADER)
            for name, curve in res.curves.items():
                for t, m, s in zip(res.grid, curve.mean, curve.std):
                    out.writerow([name, repr(float(t)), repr(float(m)), repr(float(s))])
        record = {
            "metadata": res.metadata,
            "policies": {
                name: {
                    "final_counts": curve.finals.astype(int).tolist(),
                    "immunized": curve.immunized.astype(int).tolist(),
                    "patched_infected": curve.patched_infected.astype(int).tolist(),
                    "tags": curve.tags,
                }
                for name, curve in res.curves.items()
            },
        }
        with open(sidecar, "w") as fh:
            json.dump(record, fh, indent=2, sort_keys=True)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path, sidecar


def read_results(path) -> TrajectoryResult:
    """Load curves written by :func:`write_results` (per-trial data not restored)."""
    rows = defaultdict(list)
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows[rec["policy"]].append(
                (float(rec["time"]), float(rec["mean_infected"]), float(rec["std_infected"])))
    if not rows:
        raise ValueError(f"{path}: no result rows")
    curves = {}
    grid = None
    for name, data in rows.items():
        arr = np.array(data)
        grid = arr[:, 0]
        empty = np.zeros(0)
        curves[name] = PolicyCurve(mean=arr[:, 1], std=arr[:, 2], counts=np.zeros((0, len(arr))),
                                   immunized=empty, patched_infected=empty)
    meta = {}
    sidecar = Path(path).with_suffix(".json")
    if sidecar.exists():
        meta = json.loads(sidecar.read_text()).get("metadata", {})
    return TrajectoryResult(grid=grid, curves=curves, metadata=meta)


def _ticks(lo: float, hi: float, count: int = 5) -> np.ndarray:
    if hi <= lo:
        return np.array([lo])
    raw = (hi - lo) / count
    mag = 10 ** np.floor(np.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=raw)
    return np.arange(np.ceil(lo / step) * step, hi + step * 1e-9, step)


def emit_plot(res: TrajectoryResult, path, width: int = 640, height: int = 420,
              title: str | None = None) -> Path:
    """Line chart of mean infected count against time, one polyline per policy."""
    if not res.curves:
        raise ValueError("nothing to plot: result has no policies")
    left, right, top, bottom = 70, 130, 30, 50
    pw, ph = width - left - right, height - top - bottom
    t = np.asarray(res.grid, dtype=float)
    ymax = max(float(np.max(c.mean)) for c in res.curves.values())
    ymax = ymax if ymax > 0 else 1.0
    tmin, tmax = float(t[0]), float(t[-1])
    tspan = tmax - tmin if tmax > tmin else 1.0

    def px(x):
        return left + (x - tmin) / tspan * pw

    def py(y):
        return top + ph - y / ymax * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for xt in _ticks(tmin, tmax):
        x = px(xt)
        parts.append(f'<line x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" y2="{top + ph + 5}" stroke="black"/>')
        parts.append(f'<text x="{x:.2f}" y="{top + ph + 18}" text-anchor="middle">{xt:g}</text>')
    for yt in _ticks(0.0, ymax):
        y = py(yt)
        parts.append(f'<line x1="{left - 5}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="black"/>')
        parts.append(f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end">{yt:g}</text>')
    parts.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle">time</text>')
    parts.append(f'<text x="15" y="{top + ph / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 15 {top + ph / 2})">mean infected nodes</text>')
    if title:
        parts.append(f'<text x="{left + pw / 2}" y="18" text-anchor="middle">{escape(title)}</text>')

    spare = iter(FALLBACK_COLORS * 4)
    for k, (name, curve) in enumerate(res.curves.items()):
        color = COLORS.get(name) or next(spare)
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(t, curve.mean))
        parts.append(f'<polyline data-policy="{escape(name)}" fill="none" stroke="{color}" '
                     f'stroke-width="2" points="{pts}"/>')
        ly = top + 10 + 20 * k
        parts.append(f'<line x1="{left + pw + 15}" y1="{ly}" x2="{left + pw + 40}" y2="{ly}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{left + pw + 45}" y="{ly + 4}">{escape(name)}</text>')
    parts.append("</svg>")

    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(parts) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write plot to {path}: {exc}") from exc
    return path
