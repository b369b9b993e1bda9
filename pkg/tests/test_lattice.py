import itertools
import random
from fractions import Fraction

import pytest

from padiclab.errors import BudgetExceeded
from padiclab.lattice import canonical_sign, congruence_lattice, enumerate_box, lll_reduce, shortest_vectors, sup_norm


def _det(m):
    m = [[Fraction(x) for x in row] for row in m]
    d, n = Fraction(1), len(m)
    for i in range(n):
        piv = next((r for r in range(i, n) if m[r][i]), None)
        if piv is None:
            return 0
        if piv != i:
            m[i], m[piv] = m[piv], m[i]
            d = -d
        d *= m[i][i]
        for r in range(i + 1, n):
            f = m[r][i] / m[i][i]
            m[r] = [a - f * b for a, b in zip(m[r], m[i])]
    return d


def _in_lattice(v, basis):
    # solve v = x B over Q and check integrality
    n = len(basis)
    aug = [[Fraction(basis[r][c]) for r in range(n)] + [Fraction(v[c])] for c in range(n)]
    for i in range(n):
        piv = next(r for r in range(i, n) if aug[r][i])
        aug[i], aug[piv] = aug[piv], aug[i]
        aug[i] = [x / aug[i][i] for x in aug[i]]
        for r in range(n):
            if r != i and aug[r][i]:
                f = aug[r][i]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[i])]
    return all(row[-1].denominator == 1 for row in aug)


def test_lll_keeps_the_lattice():
    rng = random.Random(1)
    for _ in range(20):
        b = [[rng.randint(-50, 50) for _ in range(3)] for _ in range(3)]
        if _det(b) == 0:
            continue
        r = lll_reduce(b)
        assert abs(_det(r)) == abs(_det(b))
        assert all(_in_lattice(v, b) for v in r)
        assert all(_in_lattice(v, r) for v in b)


def test_enumerate_box_matches_brute_force():
    rng = random.Random(2)
    for _ in range(10):
        b = [[rng.randint(-7, 7) for _ in range(2)] for _ in range(2)]
        if _det(b) == 0:
            continue
        R = 12
        want = set()
        for x in itertools.product(range(-40, 41), repeat=2):
            v = tuple(x[0] * b[0][k] + x[1] * b[1][k] for k in range(2))
            if any(v) and sup_norm(v) <= R:
                want.add(canonical_sign(v))
        assert set(enumerate_box(b, R)) == want


def test_enumerate_box_budget():
    with pytest.raises(BudgetExceeded):
        enumerate_box([[1, 0, 0], [0, 1, 0], [0, 0, 1]], 20, budget=10)


def test_congruence_lattice_is_exact():
    p, k = 3, 4
    forms = [[1, 7, 22]]
    basis = congruence_lattice(forms, p, k)
    assert abs(_det(basis)) == p**k
    for v in basis:
        assert sum(a * b for a, b in zip(forms[0], v)) % p**k == 0
    for v in itertools.product(range(-3, 4), repeat=3):
        ok = sum(a * b for a, b in zip(forms[0], v)) % p**k == 0
        assert ok == _in_lattice(v, basis)


def test_congruence_lattice_per_form_levels():
    basis = congruence_lattice([[1, 0, 5], [0, 1, 3]], 2, [3, 1])
    assert abs(_det(basis)) == 2**4


def test_shortest_vectors_with_filter():
    basis = congruence_lattice([[1, 11]], 5, 2)
    h, vecs = shortest_vectors(basis)
    brute = min(sup_norm(v) for v in itertools.product(range(-30, 31), repeat=2) if any(v) and (v[0] + 11 * v[1]) % 25 == 0)
    assert h == brute
    h2, vecs2 = shortest_vectors(basis, accept=lambda v: v[1] % 5 != 0)
    assert all(v[1] % 5 for v in vecs2) and h2 >= h
    assert shortest_vectors(basis, accept=lambda v: False, max_radius=5) == (None, [])
