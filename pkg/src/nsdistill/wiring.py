"""Deterministic two-copy wirings and exact box composition.

A party's strategy picks which box to use first, an input to that box
``f(x)``, an input to the other box ``g(x, o1)`` and a final output
``h(x, o1, o2)``, where ``o1``/``o2`` are the outputs of the first-/second-used
box. Strategy ids pack the truth tables into 15 bits::

    bit 14        order (0: box 1 first, 1: box 2 first)
    bits 12..13   f truth table, bit x
    bits 8..11    g truth table, bit (x << 1) | o1
    bits 0..7     h truth table, bit (x << 2) | (o1 << 1) | o2

Probabilistic wirings are not enumerated. The CHSH value of the composed box
is bilinear in Alice's and Bob's strategy distributions, so its maximum over
mixed strategies is attained at a deterministic pair.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterator

import numpy as np

from .boxes import Box, DomainError, require_nonsignaling

N_STRATEGIES = 1 << 15
BOX1_FIRST, BOX2_FIRST = 0, 1


@dataclass(frozen=True)
class PartyWiring:
    order: int
    f: int
    g: int
    h: int

    def __post_init__(self):
        if self.order not in (0, 1) or not 0 <= self.f < 4 or not 0 <= self.g < 16 or not 0 <= self.h < 256:
            raise DomainError(f"truth table out of range: {self}")

    def first_input(self, x: int) -> int:
        return (self.f >> x) & 1

    def second_input(self, x: int, o1: int) -> int:
        return (self.g >> ((x << 1) | o1)) & 1

    def output(self, x: int, o1: int, o2: int) -> int:
        return (self.h >> ((x << 2) | (o1 << 1) | o2)) & 1

    @property
    def id(self) -> int:
        return encode(self)


@dataclass(frozen=True)
class ProtocolWiring:
    alice: PartyWiring
    bob: PartyWiring

    @property
    def crossed(self) -> bool:
        return self.alice.order != self.bob.order


def encode(w: PartyWiring) -> int:
    return (w.order << 14) | (w.f << 12) | (w.g << 8) | w.h


def decode(sid: int) -> PartyWiring:
    if not 0 <= sid < N_STRATEGIES:
        raise DomainError(f"strategy id must be in [0, {N_STRATEGIES}), got {sid}")
    return PartyWiring(sid >> 14, (sid >> 12) & 3, (sid >> 8) & 15, sid & 255)


def enumerate_party_wirings() -> Iterator[PartyWiring]:
    for sid in range(N_STRATEGIES):
        yield decode(sid)


def party_from_functions(order: int, f, g, h) -> PartyWiring:
    """Build a strategy from Python callables on bits."""
    ft = sum(f(x) << x for x in (0, 1))
    gt = sum(g(x, o) << ((x << 1) | o) for x, o in product((0, 1), repeat=2))
    ht = sum(h(x, o1, o2) << ((x << 2) | (o1 << 1) | o2) for x, o1, o2 in product((0, 1), repeat=3))
    return PartyWiring(order, ft, gt, ht)


def paper_party() -> PartyWiring:
    """``x1 = x``, ``x2 = x * a1``, output ``a1 ^ a2``, box 1 first."""
    return party_from_functions(
        BOX1_FIRST,
        lambda x: x,
        lambda x, a1: x & a1,
        lambda x, a1, a2: a1 ^ a2,
    )


def paper_protocol() -> ProtocolWiring:
    """The two-copy distillation protocol, played identically by both parties."""
    w = paper_party()
    return ProtocolWiring(w, w)


def party_tensor(w: PartyWiring) -> np.ndarray:
    """Response tensor ``T[x, o_box1, o_box2, in_box1, in_box2, out]`` in {0, 1}.

    Outputs and inputs are indexed by box (not by usage order), so the same
    contraction serves every combination of orders.
    """
    t = np.zeros((2,) * 6)
    for x, o1, o2 in product((0, 1), repeat=3):
        i1 = w.first_input(x)
        i2 = w.second_input(x, o1)
        out = w.output(x, o1, o2)
        if w.order == BOX1_FIRST:
            t[x, o1, o2, i1, i2, out] = 1.0
        else:
            # o1 came from box 2, o2 from box 1
            t[x, o2, o1, i2, i1, out] = 1.0
    return t


def _product_compose(p1: Box, p2: Box, w: ProtocolWiring) -> np.ndarray:
    ta = party_tensor(w.alice)
    tb = party_tensor(w.bob)
    # P(ab|xy) = sum over hidden outcomes of p1(a1 b1|x1 y1) p2(a2 b2|x2 y2)
    return np.einsum(
        "xklmna,yrspqb,mpkr,nqls->xyab", ta, tb, p1.p, p2.p, optimize=True
    )


def causal_chain(p1: Box, p2: Box, w: ProtocolWiring, start: str = "alice") -> np.ndarray:
    """Evaluate a wiring by sampling boxes one after another.

    ``start`` selects which party's first-used box is drawn from its
    marginal first. For crossed orders the other box is then evaluated
    jointly, and the starting box's remaining output is drawn from its
    conditional. For non-signaling boxes all routes agree.
    """
    if start not in ("alice", "bob"):
        raise DomainError("start must be 'alice' or 'bob'")
    boxes = (p1.p, p2.p)
    wa, wb = w.alice, w.bob
    out = np.zeros((2, 2, 2, 2))
    for x, y in product((0, 1), repeat=2):
        if wa.order == wb.order:
            first, second = boxes[wa.order], boxes[1 - wa.order]
            for o1a, o1b in product((0, 1), repeat=2):
                q1 = first[wa.first_input(x), wb.first_input(y), o1a, o1b]
                if q1 == 0.0:
                    continue
                xa2, yb2 = wa.second_input(x, o1a), wb.second_input(y, o1b)
                for o2a, o2b in product((0, 1), repeat=2):
                    q = q1 * second[xa2, yb2, o2a, o2b]
                    out[x, y, wa.output(x, o1a, o2a), wb.output(y, o1b, o2b)] += q
            continue
        if start == "alice":
            out[x, y] += _crossed_from_alice(boxes, wa, wb, x, y)
        else:
            # mirror the problem: swap the parties' roles and transpose boxes
            mirrored = tuple(np.transpose(bx, (1, 0, 3, 2)) for bx in boxes)
            out[x, y] += _crossed_from_alice(mirrored, wb, wa, y, x).T
    return out


def _crossed_from_alice(boxes, wa: PartyWiring, wb: PartyWiring, x: int, y: int) -> np.ndarray:
    """Returns ``P(a, b | x, y)`` for one input pair when orders differ."""
    res = np.zeros((2, 2))
    bi = boxes[wa.order]          # Alice's first box, Bob's second
    bj = boxes[1 - wa.order]      # Bob's first box, Alice's second
    xa1 = wa.first_input(x)
    yb1 = wb.first_input(y)
    # Alice's marginal on box i does not depend on Bob's (not yet chosen) input
    marg = bi[xa1, 0].sum(axis=1)
    for o1a in (0, 1):
        if marg[o1a] == 0.0:
            continue
        xa2 = wa.second_input(x, o1a)
        for o2a, o1b in product((0, 1), repeat=2):
            qj = bj[xa2, yb1, o2a, o1b]
            if qj == 0.0:
                continue
            yb2 = wb.second_input(y, o1b)
            for o2b in (0, 1):
                cond = bi[xa1, yb2, o1a, o2b] / marg[o1a]
                q = marg[o1a] * qj * cond
                res[wa.output(x, o1a, o2a), wb.output(y, o1b, o2b)] += q
    return res


def compose(p1: Box, p2: Box, w: ProtocolWiring) -> Box:
    """Exact box produced by playing ``w`` on independent copies ``p1``, ``p2``.

    Both inputs must be valid non-signaling boxes. Same-order wirings use the
    product formula; crossed orders use :func:`causal_chain`.
    """
    require_nonsignaling(p1)
    require_nonsignaling(p2)
    if w.crossed:
        return Box(causal_chain(p1, p2, w, start="alice"))
    return Box(_product_compose(p1, p2, w))


def product_compose(p1: Box, p2: Box, w: ProtocolWiring) -> Box:
    """Product-formula evaluation for any order combination.

    Agrees with :func:`causal_chain` on non-signaling inputs; no validity
    checks are performed.
    """
    return Box(_product_compose(p1, p2, w))


def simulate(p1: Box, p2: Box, w: ProtocolWiring, n: int, rng: np.random.Generator) -> np.ndarray:
    """Monte Carlo estimate of the composed table for same-order wirings.

    Draws ``n`` rounds for each input pair. Returns empirical frequencies
    indexed ``[x, y, a, b]``.
    """
    if w.crossed:
        raise DomainError("sampling is only implemented for same-order wirings")
    boxes = (p1.p, p2.p)
    first, second = boxes[w.alice.order], boxes[1 - w.alice.order]
    wa, wb = w.alice, w.bob
    counts = np.zeros((2, 2, 2, 2))
    for x, y in product((0, 1), repeat=2):
        k1 = rng.choice(4, size=n, p=first[wa.first_input(x), wb.first_input(y)].reshape(4))
        o1a, o1b = k1 >> 1, k1 & 1
        for oa, ob in product((0, 1), repeat=2):
            mask = (o1a == oa) & (o1b == ob)
            m = int(mask.sum())
            if not m:
                continue
            probs = second[wa.second_input(x, oa), wb.second_input(y, ob)].reshape(4)
            k2 = rng.choice(4, size=m, p=probs / probs.sum())
            for o2a, o2b in product((0, 1), repeat=2):
                c = int(np.sum(k2 == (o2a << 1 | o2b)))
                counts[x, y, wa.output(x, oa, o2a), wb.output(y, ob, o2b)] += c
    return counts / n
