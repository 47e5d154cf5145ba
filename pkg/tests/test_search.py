import json

import numpy as np
import pytest

from nsdistill.boxes import chsh, make_correlated, make_pc, make_pr, random_nonsignaling_box
from nsdistill.search import (
    N_STRATEGIES,
    best_response_value,
    chsh_matrix,
    optimal_two_copy_search,
    pair_chsh,
    strategy_vectors,
    xor_strategy_ids,
)
from nsdistill.wiring import ProtocolWiring, compose, decode, encode, paper_protocol

PAPER_ID = encode(paper_protocol().alice)


def test_bilinear_form_matches_compose(rng):
    b1, b2 = random_nonsignaling_box(rng), random_nonsignaling_box(rng)
    m = chsh_matrix(b1, b2)
    ids = rng.integers(0, N_STRATEGIES, size=(300, 2))
    vecs = strategy_vectors(ids.ravel()).reshape(300, 2, 32)
    for (a, b), (u, v) in zip(ids, vecs):
        w = ProtocolWiring(decode(int(a)), decode(int(b)))
        assert u @ m @ v == pytest.approx(chsh(compose(b1, b2, w)), abs=1e-12)


def test_strategy_vector_support():
    u = strategy_vectors()
    # each strategy touches one (in1, in2) cell per (x, o_box1, o_box2)
    assert np.all(np.abs(u).reshape(N_STRATEGIES, 8, 4).sum(axis=2) == 1)
    # when g ignores the first output the two orders describe the same strategy
    assert len({row.tobytes() for row in u}) == N_STRATEGIES - 4 * 4 * 256


def test_best_response_matches_row_max(rng):
    b = random_nonsignaling_box(rng)
    m = chsh_matrix(b, b)
    v = strategy_vectors()
    for a in rng.integers(0, N_STRATEGIES, size=5):
        row = strategy_vectors([a]) @ m
        vals = (row @ v.T).ravel()
        assert best_response_value(row[0]) == pytest.approx(vals.max(), abs=1e-12)
        same = vals[(np.arange(N_STRATEGIES) >> 14) == (a >> 14)]
        assert best_response_value(row[0], False, int(a >> 14)) == pytest.approx(same.max(), abs=1e-12)


def test_sampled_search_includes_paper_protocol():
    res = optimal_two_copy_search(make_correlated(0.5), sample=64, seed=1)
    assert res.sampled
    assert res.best_chsh >= 3.25 - 1e-9
    assert res.evaluated == 65 * N_STRATEGIES
    assert (PAPER_ID, PAPER_ID) in res.best_pairs or res.best_chsh > 3.25 + 1e-9


def test_pr_and_pc_sampled():
    assert optimal_two_copy_search(make_pr(), sample=16).best_chsh == pytest.approx(4.0, abs=1e-12)
    res = optimal_two_copy_search(make_pc(), sample=16, max_pairs=10)
    assert res.best_chsh == pytest.approx(2.0, abs=1e-12)
    assert len(res.best_pairs) == 10 and res.n_best > 10


def test_ties_sorted_and_exact():
    b = make_correlated(0.6)
    res = optimal_two_copy_search(b, sample=200, seed=3)
    assert res.best_pairs == sorted(res.best_pairs)
    for a, bb in res.best_pairs[:5]:
        assert pair_chsh(b, a, bb) == pytest.approx(res.best_chsh, abs=1e-9)


def test_same_order_restriction():
    res = optimal_two_copy_search(make_correlated(0.5), include_crossed=False, sample=32)
    assert res.restricted_to_same_order
    assert all((a >> 14) == (b >> 14) for a, b in res.best_pairs)
    assert res.evaluated == sum(16384 for _ in range(33))


def test_thread_determinism():
    b = make_correlated(0.35)
    one = optimal_two_copy_search(b, sample=300, seed=5, threads=1)
    four = optimal_two_copy_search(b, sample=300, seed=5, threads=4)
    assert one.to_dict() == four.to_dict()


def test_checkpoint_resume(tmp_path):
    b = make_correlated(0.45)
    ckpt = tmp_path / "search.json"
    ref = optimal_two_copy_search(b, sample=400, seed=2)

    class Stop(Exception):
        pass

    def interrupt(frac):
        if frac > 0.3:
            raise Stop

    with pytest.raises(Stop):
        optimal_two_copy_search(b, sample=400, seed=2, checkpoint=ckpt, progress=interrupt)
    saved = json.loads(ckpt.read_text())
    assert 0 < len(saved["block_max"])
    resumed = optimal_two_copy_search(b, sample=400, seed=2, checkpoint=ckpt)
    assert resumed.to_dict() == ref.to_dict()


def test_xor_subset():
    ids = xor_strategy_ids()
    assert ids.size == 128
    for sid in ids[:10]:
        w = decode(int(sid))
        for x in (0, 1):
            assert w.second_input(x, 0) == w.second_input(x, 1)
            assert w.output(x, 0, 0) ^ w.output(x, 1, 1) == 0
            assert w.output(x, 0, 1) != w.output(x, 0, 0)


@pytest.mark.parametrize("eps", [0.1, 0.3, 0.5])
def test_xor_restricted_optimum(eps):
    # product of two correlator tables: E11 -> (1 - 2 eps)^2
    res = optimal_two_copy_search(make_correlated(eps), restrict="xor")
    assert res.best_chsh == pytest.approx(max(2 + 4 * eps - 4 * eps**2, 2 + 2 * eps), abs=1e-12)
    assert res.evaluated == 128 * 128


@pytest.mark.parametrize("eps", [0.1, 0.5])
def test_exhaustive_matches_best_response(eps):
    from nsdistill.search import best_response_search
    b = make_correlated(eps)
    res = optimal_two_copy_search(b)
    assert res.evaluated == N_STRATEGIES**2
    assert res.best_chsh == pytest.approx(best_response_search(b), abs=1e-12)
    assert res.best_chsh == pytest.approx(best_response_search(b, include_crossed=False), abs=1e-12)


def test_xor_wiring_beats_paper_protocol_at_small_eps():
    # x1 = x2 = x ^ 1, a = a1 ^ a2 for Alice; y1 = y2 = y, b = b1 ^ b2 ^ y for Bob
    alice, bob = decode((1 << 12) | (3 << 8) | 0x66), decode((2 << 12) | (12 << 8) | 0x96)
    for eps in (0.1, 0.2, 0.3):
        b = make_correlated(eps)
        xor = chsh(compose(b, b, ProtocolWiring(alice, bob)))
        proto = chsh(compose(b, b, paper_protocol()))
        assert xor == pytest.approx(2 + 4 * eps - 4 * eps**2, abs=1e-12)
        assert proto == pytest.approx(3 * eps - eps**2 + 2, abs=1e-12)
        assert xor > proto
    b = make_correlated(0.5)
    assert chsh(compose(b, b, ProtocolWiring(alice, bob))) < chsh(compose(b, b, paper_protocol()))
