"""Text formats for boxes, trajectories, figure tables and search results.

Floats are written with ``repr``, the shortest decimal string that parses
back to the same double, so every format round-trips bit-exactly.
"""
from __future__ import annotations

import csv
import io
import json
from typing import Iterable, TextIO

import numpy as np

from .boxes import Box, InvalidBoxError, PlaneCoords
from .dynamics import Trajectory
from .analysis import Fig3Data
from .region import RegionGrid
from .search import SearchResult


def fmt(v: float) -> str:
    return repr(float(v))


def box_to_json(b: Box) -> str:
    return json.dumps({"p": [float(v) for v in b.flat()]})


def box_to_csv(b: Box) -> str:
    return ",".join(fmt(v) for v in b.flat())


def box_from_text(text: str) -> Box:
    """Parse either the JSON object ``{"p": [...]}`` or a CSV line of 16 floats."""
    text = text.strip()
    if not text:
        raise InvalidBoxError("empty box description")
    if text.startswith("{"):
        try:
            values = json.loads(text)["p"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise InvalidBoxError(f"malformed box JSON: {exc}") from None
    else:
        try:
            values = [float(v) for v in text.replace("\n", ",").split(",") if v.strip()]
        except ValueError as exc:
            raise InvalidBoxError(f"malformed box CSV: {exc}") from None
    return Box.from_flat(values)


def _write_rows(out: TextIO, header: Iterable[str], rows: Iterable[Iterable]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _to_string(fn, *args) -> str:
    buf = io.StringIO()
    fn(buf, *args)
    return buf.getvalue()


def write_trajectory(out: TextIO, traj: Trajectory) -> None:
    if isinstance(traj.points[0], PlaneCoords):
        header = ("step", "xi", "gamma", "chsh")
        rows = ((k, p.xi, p.gamma, c) for k, (p, c) in enumerate(zip(traj.points, traj.chsh)))
    else:
        header = ("step", "eps", "chsh")
        rows = ((k, float(p), c) for k, (p, c) in enumerate(zip(traj.points, traj.chsh)))
    _write_rows(out, header, rows)


def trajectory_csv(traj: Trajectory) -> str:
    return _to_string(write_trajectory, traj)


def read_csv(text: str) -> tuple[list[str], list[list[str]]]:
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


def write_fig3(out: TextIO, data: Fig3Data) -> None:
    _write_rows(out, ("eps", "chsh_i", "chsh_f"), (map(float, r) for r in data.curve))


def write_staircase(out: TextIO, data: Fig3Data) -> None:
    _write_rows(out, ("step", "eps", "chsh"),
                ((int(r[0]), float(r[1]), float(r[2])) for r in data.staircase))


def write_region(out: TextIO, grid: RegionGrid) -> None:
    rows = (
        (c.coords.xi, c.coords.gamma, c.chsh0, c.cls, int(c.one_step_distilled),
         "" if c.n_to_collapse is None else c.n_to_collapse)
        for c in grid.cells()
    )
    _write_rows(out, ("xi", "gamma", "chsh0", "class", "one_step", "n_to_collapse"), rows)


def write_curve(out: TextIO, points) -> None:
    _write_rows(out, ("xi", "gamma"), ((float(x), float(g)) for x, g in points))


def search_result_to_json(res: SearchResult) -> str:
    return json.dumps(res.to_dict())
