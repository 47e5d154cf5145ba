"""Exhaustive search over deterministic two-copy wiring pairs.

For a fixed pair of boxes the CHSH value of the composed box is a bilinear
form ``u_A . M . v_B`` where ``u_A`` (resp. ``v_B``) is a 32-entry signed
indicator of Alice's (Bob's) strategy and ``M`` holds the products of the two
boxes' probabilities. The whole ``32768 x 32768`` table of CHSH values is then
a sequence of dense matrix products, swept block by block over Alice ids.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .boxes import CHSH_SIGNS, Box, chsh, require_nonsignaling
from .wiring import N_STRATEGIES, ProtocolWiring, compose, decode, encode, paper_party

logger = logging.getLogger(__name__)

TIE_TOL = 1e-9
BLOCK = 128
DEFAULT_MAX_PAIRS = 100_000
THREADS_ENV = "NSDISTILL_THREADS"


@dataclass
class SearchResult:
    best_chsh: float
    best_pairs: list[tuple[int, int]]
    evaluated: int
    include_crossed: bool
    n_best: int = 0
    sampled: bool = False
    extras: dict = field(default_factory=dict)

    @property
    def restricted_to_same_order(self) -> bool:
        return not self.include_crossed

    def to_dict(self) -> dict:
        return {
            "best_chsh": self.best_chsh,
            "best_pairs": [list(p) for p in self.best_pairs],
            "evaluated": self.evaluated,
            "include_crossed": self.include_crossed,
            "n_best": self.n_best,
            "sampled": self.sampled,
        }


def strategy_vectors(ids: np.ndarray | None = None) -> np.ndarray:
    """Signed indicator vectors for strategy ids, shape ``(n, 32)``.

    Column index is ``(x, o_box1, o_box2, in_box1, in_box2)`` row-major; the
    entry is ``(-1)**h`` where the strategy routes input ``x`` and box
    outputs to those box inputs, else 0.
    """
    ids = np.arange(N_STRATEGIES) if ids is None else np.asarray(ids)
    order = (ids >> 14) & 1
    ft = (ids >> 12) & 3
    gt = (ids >> 8) & 15
    ht = ids & 255
    out = np.zeros((ids.size, 2, 2, 2, 2, 2))
    rows = np.arange(ids.size)
    for x in (0, 1):
        i_first = (ft >> x) & 1
        for o1 in (0, 1):
            i_second = (gt >> ((x << 1) | o1)) & 1
            for o2 in (0, 1):
                sign = 1.0 - 2.0 * ((ht >> ((x << 2) | (o1 << 1) | o2)) & 1)
                # o1/i_first belong to box 1 when order == 0, else to box 2
                ob1 = np.where(order == 0, o1, o2)
                ob2 = np.where(order == 0, o2, o1)
                ib1 = np.where(order == 0, i_first, i_second)
                ib2 = np.where(order == 0, i_second, i_first)
                out[rows, x, ob1, ob2, ib1, ib2] = sign
    return out.reshape(ids.size, 32)


def chsh_matrix(p1: Box, p2: Box) -> np.ndarray:
    """``M`` with ``chsh(compose(p1, p2, (A, B))) = u_A @ M @ v_B``."""
    m = np.einsum("xy,mpkr,nqls->xklmnyrspq", CHSH_SIGNS, p1.p, p2.p)
    return m.reshape(32, 32)


def best_response_value(w: np.ndarray, include_crossed: bool = True, alice_order: int = 0) -> float:
    """Best Bob value against a fixed Alice row ``w = u_A @ M``.

    Maximizes each of Bob's truth tables independently in causal order; used
    as an oracle for the brute-force sweep.
    """
    t = np.abs(w.reshape(2, 2, 2, 2, 2))  # [y, b1, b2, y1, y2]
    # box 1 first: sum_y max_y1 sum_b1 max_y2 sum_b2
    v0 = t.sum(axis=2).max(axis=3).sum(axis=1).max(axis=1).sum()
    # box 2 first: sum_y max_y2 sum_b2 max_y1 sum_b1
    v1 = t.sum(axis=1).max(axis=2).sum(axis=1).max(axis=1).sum()
    if include_crossed:
        return float(max(v0, v1))
    return float(v0 if alice_order == 0 else v1)


def best_response_search(b: Box, include_crossed: bool = True) -> float:
    """Exact optimum via best responses; independent of the pair sweep."""
    require_nonsignaling(b)
    w = strategy_vectors() @ chsh_matrix(b, b)
    orders = np.arange(N_STRATEGIES) >> 14
    return max(best_response_value(w[i], include_crossed, int(orders[i])) for i in range(N_STRATEGIES))


def _fingerprint(b: Box, include_crossed: bool, alice_ids: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(b.p.tobytes())
    h.update(bytes([include_crossed]))
    h.update(alice_ids.astype(np.int64).tobytes())
    return h.hexdigest()


def xor_strategy_ids() -> np.ndarray:
    """Strategies whose second-box input ignores the first output and whose
    final output is ``o1 ^ o2`` up to an input-dependent flip (128 ids)."""
    ids = np.arange(N_STRATEGIES)
    gt = (ids >> 8) & 15
    ht = ids & 255
    g_ok = ((gt & 1) == ((gt >> 1) & 1)) & (((gt >> 2) & 1) == ((gt >> 3) & 1))
    h_ok = np.isin(ht & 15, (0x6, 0x9)) & np.isin(ht >> 4, (0x6, 0x9))
    return ids[g_ok & h_ok]


class _Sweep:
    def __init__(self, b: Box, alice_ids: np.ndarray, include_crossed: bool,
                 bob_ids: np.ndarray | None = None):
        self.m = chsh_matrix(b, b)
        self.bob_ids = np.arange(N_STRATEGIES) if bob_ids is None else bob_ids
        self.v = strategy_vectors(self.bob_ids)
        self.include_crossed = include_crossed
        # blocks never mix Alice orders so the same-order column set is fixed per block
        self.blocks = []
        for order in (0, 1):
            ids = alice_ids[(alice_ids >> 14) == order]
            for start in range(0, ids.size, BLOCK):
                self.blocks.append(ids[start:start + BLOCK])
        self.cols = {}
        for o in (0, 1):
            keep = np.ones(self.bob_ids.size, bool) if include_crossed else (self.bob_ids >> 14) == o
            self.cols[o] = (self.bob_ids[keep], self.v[keep].T.copy())

    def values(self, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        ids = self.blocks[k]
        cols, vt = self.cols[int(ids[0] >> 14)]
        w = strategy_vectors(ids) @ self.m
        return ids, cols, w @ vt

    def block_max(self, k: int) -> float:
        return float(self.values(k)[2].max())

    def evaluated(self) -> int:
        return sum(b.size * self.cols[int(b[0] >> 14)][0].size for b in self.blocks)


def optimal_two_copy_search(
    b: Box,
    include_crossed: bool = True,
    *,
    threads: int | None = None,
    sample: int | None = None,
    seed: int = 0,
    max_pairs: int = DEFAULT_MAX_PAIRS,
    checkpoint: str | os.PathLike | None = None,
    progress: Callable[[float], None] | None = None,
    restrict: str | None = None,
) -> SearchResult:
    """Maximize ``chsh(compose(b, b, (A, B)))`` over all deterministic pairs.

    With ``include_crossed=False`` only pairs whose parties use the boxes in
    the same order are considered. ``sample`` restricts Alice to a seeded
    random subset of that size (plus the distillation strategy) against every Bob
    strategy. Ties within ``1e-9`` of the maximum are counted in ``n_best``
    and the first ``max_pairs`` of them, in increasing ``(alice, bob)``
    order, are listed.

    The sweep runs in two passes (block maxima, then tie collection) and can
    resume from ``checkpoint``. Results do not depend on ``threads``.
    ``restrict="xor"`` limits both parties to :func:`xor_strategy_ids`.
    """
    require_nonsignaling(b)
    if restrict not in (None, "xor"):
        raise ValueError(f"unknown restriction {restrict!r}")
    universe = xor_strategy_ids() if restrict == "xor" else np.arange(N_STRATEGIES)
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1"))
    if sample is None:
        alice_ids = universe
    else:
        rng = np.random.default_rng(seed)
        picked = rng.choice(universe, size=min(sample, universe.size), replace=False)
        alice_ids = np.unique(np.append(picked, encode(paper_party())) if restrict is None else picked)
    sweep = _Sweep(b, alice_ids, include_crossed, universe)
    n_blocks = len(sweep.blocks)

    state = {"fingerprint": _fingerprint(b, include_crossed, alice_ids) + (restrict or ""),
             "block_max": [], "next": 0, "n_best": 0, "pairs": []}
    ckpt = Path(checkpoint) if checkpoint is not None else None
    if ckpt is not None and ckpt.exists():
        saved = json.loads(ckpt.read_text())
        if saved.get("fingerprint") == state["fingerprint"]:
            state = saved
            logger.info("resuming search from %s", ckpt)
        else:
            logger.warning("checkpoint %s belongs to a different search; starting over", ckpt)

    def save():
        if ckpt is not None:
            tmp = ckpt.with_suffix(ckpt.suffix + ".tmp")
            tmp.write_text(json.dumps(state))
            tmp.replace(ckpt)

    chunk = max(1, threads) * 8
    total_work = 2 * n_blocks
    last_pct = -1

    def report(done):
        nonlocal last_pct
        pct = int(100 * done / total_work)
        if progress is not None and pct != last_pct:
            last_pct = pct
            progress(pct / 100.0)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        # pass 1: block maxima
        while len(state["block_max"]) < n_blocks:
            ks = range(len(state["block_max"]), min(n_blocks, len(state["block_max"]) + chunk))
            state["block_max"].extend(pool.map(sweep.block_max, ks))
            save()
            report(len(state["block_max"]))
        best = max(state["block_max"])
        hot = [k for k in range(n_blocks) if state["block_max"][k] >= best - TIE_TOL]

        # pass 2: collect ties from blocks that can hold them
        def collect(k):
            ids, cols, vals = sweep.values(k)
            r, c = np.nonzero(vals >= best - TIE_TOL)
            return [(int(ids[i]), int(cols[j])) for i, j in zip(r, c)]

        while state["next"] < len(hot):
            ks = hot[state["next"]:state["next"] + chunk]
            for found in pool.map(collect, ks):
                state["n_best"] += len(found)
                room = max_pairs - len(state["pairs"])
                state["pairs"].extend([list(p) for p in found[:room]])
            state["next"] += len(ks)
            save()
            report(n_blocks + n_blocks * state["next"] / len(hot))
    report(total_work)

    pairs = [tuple(p) for p in state["pairs"]]
    first = ProtocolWiring(decode(pairs[0][0]), decode(pairs[0][1]))
    # exact recomputation keeps the reported value independent of BLAS blocking
    best_exact = chsh(compose(b, b, first))
    return SearchResult(
        best_chsh=best_exact,
        best_pairs=pairs,
        evaluated=sweep.evaluated(),
        include_crossed=include_crossed,
        n_best=int(state["n_best"]),
        sampled=sample is not None,
        extras={"restrict": restrict} if restrict else {},
    )


def pair_chsh(b: Box, alice_id: int, bob_id: int) -> float:
    return chsh(compose(b, b, ProtocolWiring(decode(alice_id), decode(bob_id))))
