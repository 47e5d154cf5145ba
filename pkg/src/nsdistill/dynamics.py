"""Distillation maps, trajectories and linear stability of their fixed points."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .boxes import DomainError, PlaneCoords, plane_chsh, plane_is_valid

State = Union[float, PlaneCoords]

MAX_ITERATIONS = "max-iterations"
THRESHOLD_CROSSED = "threshold-crossed"
CONVERGED = "converged"

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 200


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"eps must lie in [0, 1], got {eps}")
    return eps


def map_t(eps: float) -> float:
    """One round of the two-copy protocol on correlated boxes: ``eps (3 - eps) / 2``."""
    eps = _check_eps(eps)
    return eps * (3.0 - eps) / 2.0


def map_t_derivative(eps: float) -> float:
    return 1.5 - eps


def chsh_after(eps: float) -> float:
    """CHSH of the distilled box, ``3 eps - eps**2 + 2``."""
    eps = _check_eps(eps)
    return 3.0 * eps - eps * eps + 2.0


def correlated_chsh(eps: float) -> float:
    return 2.0 * (eps + 1.0)


def map_t2(c: PlaneCoords | tuple[float, float]) -> PlaneCoords:
    """One round of the protocol on the PR / anti-PR / Pc plane."""
    xi, gamma = (c.xi, c.gamma) if isinstance(c, PlaneCoords) else map(float, c)
    if not plane_is_valid(xi, gamma):
        raise DomainError(f"({xi}, {gamma}) does not give a valid box")
    xi_n = xi * xi + 1.5 * xi * gamma + 0.5 * (1.0 - xi - gamma)
    gamma_n = xi * xi + 2.0 * gamma * gamma + 2.5 * xi * gamma - 1.5 * (xi + gamma) + 0.5
    return PlaneCoords(xi_n, gamma_n)


def jacobian_t2(c: PlaneCoords | tuple[float, float]) -> np.ndarray:
    """Closed-form Jacobian ``d(xi', gamma') / d(xi, gamma)``."""
    xi, gamma = (c.xi, c.gamma) if isinstance(c, PlaneCoords) else map(float, c)
    return np.array([
        [2.0 * xi + 1.5 * gamma - 0.5, 1.5 * xi - 0.5],
        [2.0 * xi + 2.5 * gamma - 1.5, 4.0 * gamma + 2.5 * xi - 1.5],
    ])


def _unchecked_t2(v: np.ndarray) -> np.ndarray:
    xi, gamma = v
    return np.array([
        xi * xi + 1.5 * xi * gamma + 0.5 * (1.0 - xi - gamma),
        xi * xi + 2.0 * gamma * gamma + 2.5 * xi * gamma - 1.5 * (xi + gamma) + 0.5,
    ])


def finite_difference_jacobian(c, step: float = 1e-6) -> np.ndarray:
    """Central differences of ``map_t2``; evaluated off the validity region if needed."""
    v = np.array([c.xi, c.gamma]) if isinstance(c, PlaneCoords) else np.asarray(c, float)
    jac = np.empty((2, 2))
    for k in range(2):
        dv = np.zeros(2)
        dv[k] = step
        jac[:, k] = (_unchecked_t2(v + dv) - _unchecked_t2(v - dv)) / (2.0 * step)
    return jac


def state_chsh(state: State) -> float:
    if isinstance(state, PlaneCoords):
        return plane_chsh(state.xi, state.gamma)
    return correlated_chsh(state)


def _distance(s: State, t: State) -> float:
    if isinstance(s, PlaneCoords):
        return float(np.hypot(s.xi - t.xi, s.gamma - t.gamma))
    return abs(s - t)


@dataclass
class Trajectory:
    points: list
    chsh: list[float]
    terminated_by: str

    @property
    def steps(self) -> int:
        return len(self.points) - 1

    @property
    def final(self) -> State:
        return self.points[-1]


def iterate(
    fn: Callable[[State], State],
    start: State | tuple[float, float],
    *,
    max_n: int | None = None,
    chsh_threshold: float | None = None,
    tol: float | None = None,
    max_iter: int = DEFAULT_MAX_ITER,
) -> Trajectory:
    """Apply ``fn`` repeatedly from ``start``.

    Stops after ``max_n`` steps, as soon as the CHSH value strictly exceeds
    ``chsh_threshold``, or when successive states are closer than ``tol``.
    ``max_iter`` caps the run in every mode. ``points[0]`` is the start.
    """
    if isinstance(start, tuple):
        start = PlaneCoords(*start)
    elif not isinstance(start, PlaneCoords):
        start = float(start)
    cap = max_iter if max_n is None else min(max_n, max_iter)
    points = [start]
    values = [state_chsh(start)]
    if chsh_threshold is not None and values[0] > chsh_threshold:
        return Trajectory(points, values, THRESHOLD_CROSSED)
    for _ in range(cap):
        nxt = fn(points[-1])
        points.append(nxt)
        values.append(state_chsh(nxt))
        if chsh_threshold is not None and values[-1] > chsh_threshold:
            return Trajectory(points, values, THRESHOLD_CROSSED)
        if tol is not None and _distance(points[-2], nxt) < tol:
            return Trajectory(points, values, CONVERGED)
    return Trajectory(points, values, MAX_ITERATIONS)


ATTRACTIVE = "attractive"
REPULSIVE = "repulsive"
SADDLE = "saddle"
MARGINAL = "marginal"


@dataclass
class FixedPointReport:
    location: State
    eigenvalues: list[float]
    classification: str
    fd_eigenvalues: list[float] = field(default_factory=list)


def classify(eigenvalues) -> str:
    moduli = np.abs(np.asarray(eigenvalues))
    if np.any(np.isclose(moduli, 1.0, rtol=0.0, atol=1e-12)):
        return MARGINAL
    if np.all(moduli < 1.0):
        return ATTRACTIVE
    if np.all(moduli > 1.0):
        return REPULSIVE
    return SADDLE


def fixed_points_1d() -> list[FixedPointReport]:
    reports = []
    for eps in (0.0, 1.0):
        lam = map_t_derivative(eps)
        reports.append(FixedPointReport(eps, [lam], classify([lam])))
    return reports


FIXED_POINTS_2D = (PlaneCoords(1.0, 0.0), PlaneCoords(0.0, 1.0), PlaneCoords(0.5, 0.0))


def _sorted_eigs(jac: np.ndarray) -> list[float]:
    eig = np.linalg.eigvals(jac)
    if np.max(np.abs(eig.imag)) > 1e-12:
        raise ArithmeticError("complex eigenvalues at a fixed point")
    return sorted(float(v) for v in eig.real)


def fixed_points_2d(step: float = 1e-6, agreement: float = 1e-6) -> list[FixedPointReport]:
    """Stability of PR, Pc and the fully mixed box under ``map_t2``.

    Closed-form eigenvalues are cross-checked against finite differences;
    a disagreement above ``agreement`` raises ``ArithmeticError``.
    """
    reports = []
    for c in FIXED_POINTS_2D:
        eigs = _sorted_eigs(jacobian_t2(c))
        fd = _sorted_eigs(finite_difference_jacobian(c, step))
        if max(abs(u - v) for u, v in zip(eigs, fd)) > agreement:
            raise ArithmeticError(f"finite-difference eigenvalues disagree at {c}")
        reports.append(FixedPointReport(c, eigs, classify(eigs), fd))
    return reports
