"""Result-file writers and readers: JSON, CSV trajectories, SVG plot data.

Every structured output carries the same provenance header (schema version,
the full run configuration, problem parameters and derived constants), so a
result file alone reproduces its run.  Trajectory CSVs carry the header as a
single '#'-prefixed JSON line before the column row.  Plots are emitted as
SVG path data, not rendered images.
"""

from __future__ import annotations

import json
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np

from .errors import MalformedInputError
from .params import ProblemParams, derive_constants
from .shooter import Trajectory

SCHEMA_VERSION = "1"

__all__ = [
    "SCHEMA_VERSION",
    "provenance_header",
    "write_json",
    "trajectory_to_csv",
    "trajectory_from_csv",
    "svg_path",
    "svg_document",
    "write_csv_table",
]


def _plain(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        return {k: _plain(v) for k, v in asdict(obj).items()}
    if isinstance(obj, np.ndarray):
        return [float(x) for x in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def provenance_header(params: ProblemParams, config: dict | None = None) -> dict:
    """Shared header block: schema version, config echo, params, constants."""
    return {
        "schema_version": SCHEMA_VERSION,
        "config": _plain(config or {}),
        "params": {"n": params.n, "delta": params.delta, "p": params.p, "lambda": params.lam},
        "constants": _plain(derive_constants(params)),
    }


def write_json(path: Path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_plain(payload), indent=2, sort_keys=True) + "\n")
    return path


def trajectory_to_csv(path: Path, t: Trajectory, header_extra: dict | None = None) -> Path:
    """CSV with columns r, w, wp, E and a '#'-prefixed JSON provenance line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    head = provenance_header(t.params)
    head["alpha"] = t.alpha
    if header_extra:
        head.update(_plain(header_extra))
    lines = ["# " + json.dumps(head, sort_keys=True), "r,w,wp,E"]
    for r, w, wp, e in zip(t.grid, t.w, t.wp, t.energy):
        lines.append(f"{float(r)!r},{float(w)!r},{float(wp)!r},{float(e)!r}")
    path.write_text("\n".join(lines) + "\n")
    return path


def trajectory_from_csv(path: Path) -> Trajectory:
    path = Path(path)
    try:
        text = path.read_text().strip().splitlines()
        if not text or not text[0].startswith("#"):
            raise MalformedInputError(f"{path}: missing JSON header line")
        head = json.loads(text[0][1:].strip())
        pp = head["params"]
        params = ProblemParams(n=int(pp["n"]), delta=float(pp["delta"]),
                               p=float(pp["p"]), lam=float(pp["lambda"]))
        rows = [line.split(",") for line in text[2:] if line]
        data = np.array([[float(x) for x in row] for row in rows])
        if data.shape[1] != 4:
            raise MalformedInputError(f"{path}: expected 4 columns r,w,wp,E")
        return Trajectory(grid=data[:, 0], w=data[:, 1], wp=data[:, 2],
                          energy=data[:, 3], alpha=float(head.get("alpha", data[0, 1])),
                          params=params)
    except MalformedInputError:
        raise
    except Exception as exc:
        raise MalformedInputError(f"{path}: could not parse trajectory file: {exc}") from exc


def write_csv_table(path: Path, columns: list[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(
            repr(float(x)) if isinstance(x, (float, np.floating)) else str(x) for x in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def svg_path(xs, ys, width: float = 640.0, height: float = 360.0, margin: float = 20.0) -> str:
    """SVG path data string for a polyline through (xs, ys), y axis flipped."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    xspan = x1 - x0 or 1.0
    yspan = y1 - y0 or 1.0
    px = margin + (xs - x0) / xspan * (width - 2 * margin)
    py = height - margin - (ys - y0) / yspan * (height - 2 * margin)
    pieces = [f"M {px[0]:.3f} {py[0]:.3f}"]
    pieces.extend(f"L {x:.3f} {y:.3f}" for x, y in zip(px[1:], py[1:]))
    return " ".join(pieces)


def svg_document(paths: list[str], width: float = 640.0, height: float = 360.0) -> str:
    body = "\n".join(
        f'  <path d="{d}" fill="none" stroke="black" stroke-width="1"/>' for d in paths)
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
            f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">\n'
            f"{body}\n</svg>\n")
