from fractions import Fraction

import sympy

from helpers import dense_rank, rng
from varitri import linalg


def random_columns(r, ncols, size, density=0.4):
    cols = []
    for _ in range(ncols):
        col = {k: Fraction(r.randint(-3, 3), r.choice([1, 2])) for k in range(size) if r.random() < density}
        cols.append({k: v for k, v in col.items() if v})
    return cols


def test_rank_matches_sympy():
    r = rng(20)
    for _ in range(100):
        cols = random_columns(r, r.randint(1, 7), r.randint(1, 7))
        # duplicate a combination sometimes to force dependence
        if len(cols) > 1 and r.random() < 0.5:
            a, b = cols[0], cols[1]
            cols.append({k: a.get(k, 0) * 2 - b.get(k, 0) for k in set(a) | set(b)})
        size = 1 + max((k for c in cols for k in c), default=0)
        assert linalg.rank(cols) == dense_rank(cols, size)


def test_kernel_vectors_are_relations():
    r = rng(21)
    for _ in range(100):
        cols = random_columns(r, r.randint(1, 8), r.randint(1, 5))
        ker = linalg.kernel(cols)
        size = 1 + max((k for c in cols for k in c), default=0)
        assert len(ker) == len(cols) - dense_rank(cols, size)
        for vec in ker:
            total = {}
            for j, c in vec.items():
                for k, v in cols[j].items():
                    total[k] = total.get(k, 0) + c * v
            assert all(v == 0 for v in total.values())


def test_primitive():
    assert linalg.primitive({0: Fraction(1, 2), 3: Fraction(-3, 4)}) == {0: 2, 3: -3}
    assert linalg.primitive({2: -4, 5: 6}) == {2: 2, 5: -3}
    assert linalg.primitive({1: 0}) == {}


def test_echelon_contains():
    e = linalg.Echelon()
    e.insert({0: 1, 1: 1})
    e.insert({1: 1, 2: 1})
    assert e.contains({0: 1, 2: -1})
    assert not e.contains({2: 1})
