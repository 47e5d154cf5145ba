from itertools import product

import numpy as np
import pytest

from nsdistill.boxes import Box


@pytest.fixture
def rng():
    return np.random.default_rng(20090401)


def table_correlators(b: Box):
    """Correlators by looping over table entries; independent of the library path."""
    e = {}
    for x, y in product((0, 1), repeat=2):
        same = sum(b.p[x, y, a, a] for a in (0, 1))
        diff = sum(b.p[x, y, a, 1 - a] for a in (0, 1))
        e[x, y] = same - diff
    return e


def table_chsh(b: Box) -> float:
    e = table_correlators(b)
    return e[0, 0] + e[0, 1] + e[1, 0] - e[1, 1]


def xor_table(rule):
    p = np.zeros((2, 2, 2, 2))
    for x, y, a, b in product((0, 1), repeat=4):
        if a ^ b == rule(x, y):
            p[x, y, a, b] = 0.5
    return p
