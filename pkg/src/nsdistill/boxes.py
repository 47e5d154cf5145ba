"""Bipartite two-input/two-output non-signaling boxes.

A box is stored as a ``(2, 2, 2, 2)`` float array ``p[x, y, a, b] = P(ab|xy)``.
Flattening it row-major gives the canonical 16-entry order used for
serialization.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

EXACT_TOL = 1e-12
FIT_TOL = 1e-9
LOCAL_TOL = 1e-9

B_CC = 4.0 * np.sqrt(2.0 / 3.0)
B_Q = 2.0 * np.sqrt(2.0)

# CHSH sign pattern s[x, y]
CHSH_SIGNS = np.array([[1.0, 1.0], [1.0, -1.0]])


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class InvalidBoxError(DomainError):
    """Table is not a probability distribution for every input pair."""


class SignalingError(InvalidBoxError):
    """Box marginals depend on the remote party's input."""


class OffPlaneError(DomainError):
    """Box is not in the affine span of PR, anti-PR and Pc."""

    def __init__(self, residual: float):
        super().__init__(f"box is off the PR/anti-PR/Pc plane (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True, eq=False)
class Box:
    """Conditional distribution ``P(ab|xy)`` indexed as ``p[x, y, a, b]``.

    The table is copied and made read-only. Construction only checks shape
    and finiteness; use :func:`is_valid` and :func:`is_nonsignaling` for the
    physical constraints.
    """

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=np.float64).reshape(2, 2, 2, 2)
        if not np.all(np.isfinite(p)):
            raise InvalidBoxError("box table contains non-finite entries")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_flat(cls, values: Sequence[float]) -> "Box":
        values = np.asarray(values, dtype=np.float64)
        if values.size != 16:
            raise InvalidBoxError(f"expected 16 entries, got {values.size}")
        return cls(values)

    def flat(self) -> np.ndarray:
        return self.p.reshape(16).copy()

    def allclose(self, other: "Box", atol: float = EXACT_TOL) -> bool:
        return bool(np.max(np.abs(self.p - other.p)) <= atol)

    def max_deviation(self, other: "Box") -> float:
        return float(np.max(np.abs(self.p - other.p)))

    def __repr__(self):
        return f"Box({self.flat().tolist()!r})"


@dataclass(frozen=True)
class PlaneCoords:
    """Weights of PR (``xi``) and Pc (``gamma``); anti-PR gets the rest."""

    xi: float
    gamma: float

    def as_array(self) -> np.ndarray:
        return np.array([self.xi, self.gamma])


def _xor_box(rule) -> Box:
    p = np.zeros((2, 2, 2, 2))
    for x, y, a, b in product((0, 1), repeat=4):
        if (a ^ b) == rule(x, y):
            p[x, y, a, b] = 0.5
    return Box(p)


def make_pr() -> Box:
    return _xor_box(lambda x, y: x & y)


def make_pc() -> Box:
    return _xor_box(lambda x, y: 0)


def make_antipr() -> Box:
    return _xor_box(lambda x, y: (x & y) ^ 1)


def make_pa() -> Box:
    return _xor_box(lambda x, y: 1)


def make_one() -> Box:
    return Box(np.full((2, 2, 2, 2), 0.25))


def make_deterministic(a0: int, a1: int, b0: int, b1: int) -> Box:
    """Local deterministic box with ``a = a_x`` and ``b = b_y``."""
    alice, bob = (a0, a1), (b0, b1)
    p = np.zeros((2, 2, 2, 2))
    for x, y in product((0, 1), repeat=2):
        p[x, y, alice[x], bob[y]] = 1.0
    return Box(p)


def make_pr_variant(r: int, s: int, t: int) -> Box:
    """Non-local vertex ``a ^ b = x*y ^ r*x ^ s*y ^ t``."""
    return _xor_box(lambda x, y: (x & y) ^ (r & x) ^ (s & y) ^ t)


LOCAL_VERTICES = tuple(make_deterministic(*bits) for bits in product((0, 1), repeat=4))
NONLOCAL_VERTICES = tuple(make_pr_variant(*bits) for bits in product((0, 1), repeat=3))


def make_correlated(eps: float) -> Box:
    """``eps * PR + (1 - eps) * Pc``."""
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"eps must lie in [0, 1], got {eps}")
    return mix([make_pr(), make_pc()], [eps, 1.0 - eps])


def make_plane(c: PlaneCoords | Sequence[float]) -> Box:
    """Affine combination ``xi PR + gamma Pc + (1 - xi - gamma) antiPR``.

    Raises :class:`InvalidBoxError` if the result has a negative entry.
    """
    xi, gamma = _coords(c)
    return mix([make_pr(), make_pc(), make_antipr()], [xi, gamma, 1.0 - xi - gamma])


def _coords(c) -> tuple[float, float]:
    if isinstance(c, PlaneCoords):
        return float(c.xi), float(c.gamma)
    xi, gamma = c
    return float(xi), float(gamma)


def mix(boxes: Sequence[Box], weights: Sequence[float]) -> Box:
    """Entrywise affine combination of boxes.

    Weights may be negative but must sum to one. The result is rejected if
    any entry falls below ``-1e-12``; smaller negative noise is clamped to 0.
    """
    if len(boxes) != len(weights) or not boxes:
        raise DomainError("need one weight per box")
    w = np.asarray(weights, dtype=np.float64)
    if abs(w.sum() - 1.0) > EXACT_TOL:
        raise DomainError(f"weights must sum to 1, got {w.sum()!r}")
    p = np.tensordot(w, np.stack([b.p for b in boxes]), axes=1)
    if p.min() < -EXACT_TOL:
        raise InvalidBoxError(f"mixture has negative entry {p.min():.3e}")
    return Box(np.where(p < 0.0, 0.0, p))


def correlators(b: Box) -> np.ndarray:
    """``E[x, y] = P(a = b | xy) - P(a != b | xy)`` as a 2x2 array."""
    p = b.p
    return p[:, :, 0, 0] + p[:, :, 1, 1] - p[:, :, 0, 1] - p[:, :, 1, 0]


def chsh(b: Box) -> float:
    """``E00 + E01 + E10 - E11``."""
    return float(np.sum(CHSH_SIGNS * correlators(b)))


def chsh_all8(b: Box) -> list[float]:
    """All eight CHSH expressions.

    Entry ``k`` for ``k < 4`` puts the minus sign on input pair ``k``
    (in (x, y) order 00, 01, 10, 11); entries ``4..7`` are their negatives.
    ``chsh(b) == chsh_all8(b)[3]``.
    """
    e = correlators(b).reshape(4)
    plus = [float(e.sum() - 2.0 * e[k]) for k in range(4)]
    return plus + [-v for v in plus]


def alice_marginals(b: Box) -> np.ndarray:
    """``P_A(a | x, y)`` indexed ``[x, y, a]``."""
    return b.p.sum(axis=3)


def bob_marginals(b: Box) -> np.ndarray:
    """``P_B(b | x, y)`` indexed ``[x, y, b]``."""
    return b.p.sum(axis=2)


def is_valid(b: Box, tol: float = EXACT_TOL) -> bool:
    """Non-negative and normalized for every input pair."""
    p = b.p
    return bool(p.min() >= -tol and np.all(np.abs(p.sum(axis=(2, 3)) - 1.0) <= tol))


def is_nonsignaling(b: Box, tol: float = EXACT_TOL) -> bool:
    pa = alice_marginals(b)
    pb = bob_marginals(b)
    return bool(
        np.all(np.abs(pa[:, 0, :] - pa[:, 1, :]) <= tol)
        and np.all(np.abs(pb[0, :, :] - pb[1, :, :]) <= tol)
    )


def is_local(b: Box) -> bool:
    """Membership in the local polytope via positivity plus the 8 CHSH facets."""
    return is_valid(b) and is_nonsignaling(b) and max(chsh_all8(b)) <= 2.0 + LOCAL_TOL


def require_nonsignaling(b: Box) -> None:
    if not is_valid(b):
        raise InvalidBoxError("box is not a valid probability table")
    if not is_nonsignaling(b):
        raise SignalingError("box is signaling")


def depolarize(b: Box) -> Box:
    """Average over the 8 local relabelings driven by shared bits (alpha, beta, gamma).

    Inputs are shifted ``x -> x ^ alpha``, ``y -> y ^ beta`` and outputs
    ``a -> a ^ beta x ^ alpha beta ^ gamma``, ``b -> b ^ alpha y ^ gamma``.
    The result is isotropic and keeps the CHSH value.
    """
    require_nonsignaling(b)
    out = np.zeros((2, 2, 2, 2))
    for alpha, beta, gam in product((0, 1), repeat=3):
        for x, y, a, bb in product((0, 1), repeat=4):
            a_old = a ^ (beta & x) ^ (alpha & beta) ^ gam
            b_old = bb ^ (alpha & y) ^ gam
            out[x, y, a, bb] += b.p[x ^ alpha, y ^ beta, a_old, b_old]
    return Box(out / 8.0)


_PLANE_BASIS = None


def _plane_basis() -> tuple[np.ndarray, np.ndarray]:
    global _PLANE_BASIS
    if _PLANE_BASIS is None:
        anti = make_antipr().flat()
        design = np.column_stack([make_pr().flat() - anti, make_pc().flat() - anti])
        _PLANE_BASIS = (design, anti)
    return _PLANE_BASIS


def to_plane_coords(b: Box) -> PlaneCoords:
    """Inverse of :func:`make_plane` by least squares.

    Raises :class:`OffPlaneError` when the fitted box differs from ``b`` by
    more than ``1e-9`` in any entry.
    """
    design, anti = _plane_basis()
    target = b.flat() - anti
    sol, *_ = np.linalg.lstsq(design, target, rcond=None)
    residual = float(np.max(np.abs(design @ sol - target)))
    if residual > FIT_TOL:
        raise OffPlaneError(residual)
    return PlaneCoords(float(sol[0]), float(sol[1]))


def plane_chsh(xi: float, gamma: float) -> float:
    """Closed-form CHSH of ``make_plane((xi, gamma))``."""
    return 8.0 * xi + 6.0 * gamma - 4.0


def plane_is_valid(xi: float, gamma: float, tol: float = EXACT_TOL) -> bool:
    """Whether ``make_plane((xi, gamma))`` has no entry below ``-tol``."""
    return -tol <= xi <= 1.0 + tol and -tol <= xi + gamma <= 1.0 + tol


def random_local_box(rng: np.random.Generator) -> Box:
    w = rng.dirichlet(np.full(len(LOCAL_VERTICES), 0.5))
    return mix(LOCAL_VERTICES, w / w.sum())


def random_nonsignaling_box(rng: np.random.Generator) -> Box:
    vertices = LOCAL_VERTICES + NONLOCAL_VERTICES
    w = rng.dirichlet(np.full(len(vertices), 0.5))
    return mix(vertices, w / w.sum())
