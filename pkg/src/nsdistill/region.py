"""Which boxes of the PR / anti-PR / Pc plane collapse communication complexity.

A box collapses directly when its CHSH value exceeds ``B_CC``, and by
distillation when some iterate of the two-copy protocol does. Everything here
works on arrays of plane coordinates at once.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .boxes import B_CC, DomainError, EXACT_TOL, LOCAL_TOL, PlaneCoords
from .dynamics import DEFAULT_MAX_ITER

INVALID = "invalid"
LOCAL = "local"
COLLAPSES_DIRECTLY = "collapses_directly"
COLLAPSES_BY_DISTILLATION = "collapses_by_distillation"
NON_COLLAPSING = "non_collapsing"
CLASSES = (INVALID, LOCAL, COLLAPSES_DIRECTLY, COLLAPSES_BY_DISTILLATION, NON_COLLAPSING)

DEFAULT_RESOLUTION = 401


def _t2(xi, gamma):
    return (
        xi * xi + 1.5 * xi * gamma + 0.5 * (1.0 - xi - gamma),
        xi * xi + 2.0 * gamma * gamma + 2.5 * xi * gamma - 1.5 * (xi + gamma) + 0.5,
    )


def _chsh(xi, gamma):
    return 8.0 * xi + 6.0 * gamma - 4.0


def _valid(xi, gamma):
    # box entries are (xi+gamma)/2, (1-xi-gamma)/2, xi/2 and (1-xi)/2
    entries = np.stack([xi + gamma, 1.0 - xi - gamma, xi, 1.0 - xi]) / 2.0
    return entries.min(axis=0) >= -EXACT_TOL


def _correlators(xi, gamma):
    e = 2.0 * (xi + gamma) - 1.0
    return e, 1.0 - 2.0 * xi


def _local(xi, gamma):
    e, e11 = _correlators(xi, gamma)
    # 8 CHSH facets with E00 = E01 = E10 = e
    worst = np.maximum(np.abs(3.0 * e - e11), np.abs(e + e11))
    return worst <= 2.0 + LOCAL_TOL


def is_quantum_plane(xi, gamma):
    """Correlator criterion for unbiased boxes: every arcsine CHSH form is at most pi."""
    return quantum_excess(xi, gamma) <= 1e-12


def quantum_excess(xi, gamma):
    e, e11 = _correlators(np.asarray(xi, float), np.asarray(gamma, float))
    s_e = np.arcsin(np.clip(e, -1.0, 1.0))
    s_11 = np.arcsin(np.clip(e11, -1.0, 1.0))
    total = 3.0 * s_e + s_11
    forms = np.stack([np.abs(total - 2.0 * s_e), np.abs(total - 2.0 * s_11)])
    return forms.max(axis=0) - np.pi


def collapse_steps(xi, gamma, max_iter: int = DEFAULT_MAX_ITER) -> np.ndarray:
    """First iteration at which CHSH exceeds ``B_CC`` (0 if already above), -1 if never."""
    xi = np.array(xi, dtype=float)
    gamma = np.array(gamma, dtype=float)
    steps = np.where(_chsh(xi, gamma) > B_CC, 0, -1)
    active = steps < 0
    for k in range(1, max_iter + 1):
        if not active.any():
            break
        xi[active], gamma[active] = _t2(xi[active], gamma[active])
        hit = active & (_chsh(xi, gamma) > B_CC)
        steps[hit] = k
        active &= ~hit
    return steps


@dataclass(frozen=True)
class RegionCell:
    coords: PlaneCoords
    chsh0: float
    cls: str
    one_step_distilled: bool
    n_to_collapse: int | None


@dataclass
class RegionGrid:
    """Rasterized classification; arrays are indexed ``[i_xi, i_gamma]``."""

    xi: np.ndarray
    gamma: np.ndarray
    chsh0: np.ndarray
    cls: np.ndarray
    one_step: np.ndarray
    n_to_collapse: np.ndarray  # -1 where the cell never collapses

    def cell(self, i: int, j: int) -> RegionCell:
        n = int(self.n_to_collapse[i, j])
        return RegionCell(
            PlaneCoords(float(self.xi[i, j]), float(self.gamma[i, j])),
            float(self.chsh0[i, j]),
            str(self.cls[i, j]),
            bool(self.one_step[i, j]),
            None if n < 0 else n,
        )

    def cells(self):
        for i in range(self.xi.shape[0]):
            for j in range(self.xi.shape[1]):
                yield self.cell(i, j)

    def index_of(self, xi: float, gamma: float) -> tuple[int, int]:
        """Grid index nearest to ``(xi, gamma)``."""
        i = int(np.argmin(np.abs(self.xi[:, 0] - xi)))
        j = int(np.argmin(np.abs(self.gamma[0, :] - gamma)))
        return i, j


def classify_points(xi, gamma, max_iter: int = DEFAULT_MAX_ITER) -> dict:
    """Classification arrays for arbitrary points of the plane."""
    xi = np.asarray(xi, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    valid = _valid(xi, gamma)
    chsh0 = _chsh(xi, gamma)
    xi1, gamma1 = _t2(xi, gamma)
    one_step = valid & (_chsh(xi1, gamma1) > chsh0)
    fixed = np.hypot(xi1 - xi, gamma1 - gamma) < EXACT_TOL
    steps = np.full(xi.shape, -1)
    steps[valid] = collapse_steps(xi[valid], gamma[valid], max_iter)

    cls = np.full(xi.shape, NON_COLLAPSING, dtype=object)
    # fixed points are labeled by their dynamics rather than as local
    cls[valid & _local(xi, gamma) & ~fixed] = LOCAL
    cls[steps >= 1] = COLLAPSES_BY_DISTILLATION
    cls[steps == 0] = COLLAPSES_DIRECTLY
    cls[~valid] = INVALID
    return {"chsh0": chsh0, "cls": cls, "one_step": one_step, "n_to_collapse": steps}


def region_classify(resolution: int = DEFAULT_RESOLUTION, max_iter: int = DEFAULT_MAX_ITER) -> RegionGrid:
    """Classify a ``resolution x resolution`` grid over xi in [0, 1], gamma in [-1, 1]."""
    if resolution < 2:
        raise DomainError("resolution must be at least 2")
    xi, gamma = np.meshgrid(np.linspace(0.0, 1.0, resolution),
                            np.linspace(-1.0, 1.0, resolution), indexing="ij")
    res = classify_points(xi, gamma, max_iter)
    return RegionGrid(xi, gamma, res["chsh0"], res["cls"], res["one_step"], res["n_to_collapse"])


def monotonicity_violations(grid: RegionGrid, probes: int = 10, stride: int = 1,
                            max_iter: int = DEFAULT_MAX_ITER) -> list[tuple[PlaneCoords, PlaneCoords]]:
    """Pairs (collapsing cell, non-collapsing point) on the segment toward PR.

    Only probe points whose initial CHSH is at least the cell's are checked.
    Nothing guarantees the list is empty: boxes near anti-PR collapse via
    anti-PR * anti-PR -> (PR + Pc) / 2 while points between them and PR may not.
    """
    collapse = np.isin(grid.cls, (COLLAPSES_DIRECTLY, COLLAPSES_BY_DISTILLATION))
    t = np.linspace(0.0, 1.0, probes + 1)[1:]
    found = []
    for i, j in np.argwhere(collapse)[::stride]:
        xi, gamma = grid.xi[i, j], grid.gamma[i, j]
        pxi, pgamma = xi + t * (1.0 - xi), gamma - t * gamma
        res = classify_points(pxi, pgamma, max_iter)
        bad = ~np.isin(res["cls"], (COLLAPSES_DIRECTLY, COLLAPSES_BY_DISTILLATION))
        bad &= res["chsh0"] >= grid.chsh0[i, j]
        for k in np.flatnonzero(bad):
            found.append((PlaneCoords(float(xi), float(gamma)), PlaneCoords(float(pxi[k]), float(pgamma[k]))))
    return found


def _collapses(xi, gamma, max_iter):
    return collapse_steps(xi, gamma, max_iter) >= 0


def constant_chsh_segment(chsh_level: float) -> tuple[float, float]:
    """Range of xi for valid boxes with CHSH equal to ``chsh_level``."""
    lo = max(0.0, (chsh_level - 2.0) / 2.0)
    hi = min(1.0, (chsh_level + 4.0) / 2.0, (chsh_level + 10.0) / 8.0)
    return lo, hi


def region_width_probe(chsh_level: float, samples: int = 4001, max_iter: int = DEFAULT_MAX_ITER) -> float:
    """Length of the collapsing part of the line of constant initial CHSH.

    The line is sampled uniformly and every change of classification between
    neighbours is refined by bisection.
    """
    if not 2.0 < chsh_level < 4.0:
        raise DomainError(f"CHSH level must lie strictly between 2 and 4, got {chsh_level}")
    lo, hi = constant_chsh_segment(chsh_level)

    def gamma_of(x):
        return (chsh_level + 4.0 - 8.0 * x) / 6.0

    xs = np.linspace(lo, hi, samples)
    hits = _collapses(xs, gamma_of(xs), max_iter)
    length = 0.0
    for k in range(samples - 1):
        a, b = xs[k], xs[k + 1]
        if hits[k] and hits[k + 1]:
            length += b - a
        elif hits[k] != hits[k + 1]:
            inside, outside = (a, b) if hits[k] else (b, a)
            for _ in range(60):
                mid = 0.5 * (inside + outside)
                if _collapses(np.array([mid]), gamma_of(np.array([mid])), max_iter)[0]:
                    inside = mid
                else:
                    outside = mid
            length += abs(inside - (a if hits[k] else b))
    # arc length along direction (1, -4/3)
    return length * 5.0 / 3.0


def _roots_along_gamma(fn, xi: float, n_scan: int = 2001) -> list[float]:
    lo, hi = -xi, 1.0 - xi
    gs = np.linspace(lo, hi, n_scan)
    vals = fn(np.full_like(gs, xi), gs)
    roots = []
    for k in range(n_scan - 1):
        if vals[k] == 0.0:
            roots.append(float(gs[k]))
        elif vals[k] * vals[k + 1] < 0.0:
            roots.append(brentq(lambda g: float(fn(np.array(xi), np.array(g))), gs[k], gs[k + 1], xtol=1e-14))
    if vals[-1] == 0.0:
        roots.append(float(gs[-1]))
    return roots


def quantum_boundary(xi_samples: int = 201) -> list[tuple[float, float]]:
    """Points ``(xi, gamma)`` where the arcsine criterion is tight.

    Only sign changes of the criterion along gamma are detected; boundary
    points that merely touch it at the edge of the validity region appear
    when a scan node hits them exactly.
    """
    if xi_samples < 2:
        raise DomainError("need at least 2 samples")
    pts = []
    for xi in np.linspace(0.0, 1.0, xi_samples):
        pts.extend((float(xi), g) for g in _roots_along_gamma(quantum_excess, float(xi)))
    return pts


def one_step_gain(xi, gamma):
    """CHSH after one protocol round minus the initial CHSH."""
    xi1, gamma1 = _t2(xi, gamma)
    return _chsh(xi1, gamma1) - _chsh(xi, gamma)


def one_step_boundary(xi_samples: int = 201) -> list[tuple[float, float]]:
    """Curve separating boxes whose CHSH increases after one round."""
    if xi_samples < 2:
        raise DomainError("need at least 2 samples")
    pts = []
    for xi in np.linspace(0.0, 1.0, xi_samples):
        pts.extend((float(xi), g) for g in _roots_along_gamma(one_step_gain, float(xi)))
    return pts


@dataclass
class Fig4Data:
    grid: RegionGrid
    quantum: list[tuple[float, float]]
    one_step: list[tuple[float, float]]


def fig4_data(resolution: int = DEFAULT_RESOLUTION, max_iter: int = DEFAULT_MAX_ITER,
              curve_samples: int = 201) -> Fig4Data:
    return Fig4Data(region_classify(resolution, max_iter),
                    quantum_boundary(curve_samples), one_step_boundary(curve_samples))
