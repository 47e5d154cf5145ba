"""Verification of the protocol against its closed form, and figure data.

Also re-exports the exhaustive search and the region classifier so the
whole analysis surface is importable from one place.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boxes import DomainError, EXACT_TOL, chsh, make_correlated
from .dynamics import map_t
from .region import (  # noqa: F401
    Fig4Data,
    RegionCell,
    RegionGrid,
    classify_points,
    fig4_data,
    one_step_boundary,
    quantum_boundary,
    region_classify,
    region_width_probe,
)
from .search import SearchResult, best_response_search, optimal_two_copy_search  # noqa: F401
from .wiring import compose, paper_protocol


class VerificationError(AssertionError):
    pass


@dataclass
class IdentityReport:
    eps: np.ndarray
    deviations: np.ndarray
    tol: float

    @property
    def max_deviation(self) -> float:
        return float(self.deviations.max())

    @property
    def worst_eps(self) -> float:
        return float(self.eps[int(np.argmax(self.deviations))])

    @property
    def ok(self) -> bool:
        return self.max_deviation <= self.tol


def verify_protocol_identity(grid_n: int = 101, tol: float = EXACT_TOL, strict: bool = True) -> IdentityReport:
    """Compare box-level distillation of correlated boxes with the closed-form map.

    For each ``eps`` on a uniform grid of [0, 1], composes two copies under the
    distillation protocol and measures the largest entrywise distance to
    ``make_correlated(map_t(eps))``. With ``strict`` a deviation above ``tol``
    raises :class:`VerificationError`.
    """
    if grid_n < 2:
        raise DomainError("grid_n must be at least 2")
    w = paper_protocol()
    grid = np.linspace(0.0, 1.0, grid_n)
    devs = np.empty(grid_n)
    for k, eps in enumerate(grid):
        box = make_correlated(float(eps))
        devs[k] = compose(box, box, w).max_deviation(make_correlated(map_t(float(eps))))
    report = IdentityReport(grid, devs, tol)
    if strict and not report.ok:
        raise VerificationError(
            f"protocol identity fails at eps={report.worst_eps!r}: deviation {report.max_deviation:.3e}"
        )
    return report


@dataclass
class Fig3Data:
    curve: np.ndarray      # columns eps, chsh_i, chsh_f
    staircase: np.ndarray  # columns step, eps, chsh


def fig3_data(grid_n: int = 101, start_chsh: float = 2.2, tol: float = 1e-9, max_steps: int = 200) -> Fig3Data:
    """Final versus initial CHSH on correlated boxes, from box-level composition.

    The staircase iterates the protocol from ``start_chsh`` until successive
    parameters differ by less than ``tol``.
    """
    if grid_n < 2:
        raise DomainError("grid_n must be at least 2")
    if not 2.0 <= start_chsh <= 4.0:
        raise DomainError("start CHSH must lie in [2, 4] for correlated boxes")
    w = paper_protocol()
    rows = []
    for eps in np.linspace(0.0, 1.0, grid_n):
        box = make_correlated(float(eps))
        rows.append((eps, chsh(box), chsh(compose(box, box, w))))
    eps = start_chsh / 2.0 - 1.0
    stairs = [(0, eps, 2.0 * (eps + 1.0))]
    for k in range(1, max_steps + 1):
        nxt = map_t(eps)
        stairs.append((k, nxt, 2.0 * (nxt + 1.0)))
        done = abs(nxt - eps) < tol
        eps = nxt
        if done:
            break
    return Fig3Data(np.array(rows), np.array(stairs))
