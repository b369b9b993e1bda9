"""Exact integer lattices: LLL reduction, sup-norm enumeration and p-adic
congruence lattices.

Everything here works over Python ints and Fractions, so results are exact.
Dimensions are small (at most a handful of coordinates), which keeps the
rational Gram-Schmidt affordable.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .errors import BudgetExceeded

Vector = tuple[int, ...]


def _dot(u: Sequence[int], v: Sequence[int]) -> int:
    return sum(a * b for a, b in zip(u, v))


def sup_norm(v: Sequence[int]) -> int:
    return max(abs(c) for c in v)


def canonical_sign(v: Sequence[int]) -> Vector:
    """Return +v or -v, whichever has a positive first nonzero entry."""
    for c in v:
        if c:
            return tuple(v) if c > 0 else tuple(-x for x in v)
    return tuple(v)


def _gram_schmidt(basis: list[list[int]]):
    d = len(basis)
    mu = [[Fraction(0)] * d for _ in range(d)]
    bstar: list[list[Fraction]] = []
    r: list[Fraction] = []
    for i in range(d):
        v = [Fraction(c) for c in basis[i]]
        for j in range(i):
            mu[i][j] = sum((Fraction(a) * b for a, b in zip(basis[i], bstar[j])), Fraction(0)) / r[j]
            v = [a - mu[i][j] * b for a, b in zip(v, bstar[j])]
        bstar.append(v)
        r.append(sum((c * c for c in v), Fraction(0)))
    return mu, r


def lll_reduce(basis: Iterable[Sequence[int]], delta: Fraction = Fraction(99, 100)) -> list[list[int]]:
    """LLL-reduce a basis of linearly independent integer rows (exact)."""
    b = [list(row) for row in basis]
    d = len(b)
    if d <= 1:
        return b
    mu, r = _gram_schmidt(b)
    k = 1
    while k < d:
        for j in range(k - 1, -1, -1):
            q = round(mu[k][j])
            if q:
                b[k] = [x - q * y for x, y in zip(b[k], b[j])]
                for i in range(j + 1):
                    mu[k][i] -= q * (mu[j][i] if i < j else 1)
        if r[k] >= (delta - mu[k][k - 1] ** 2) * r[k - 1]:
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            mu, r = _gram_schmidt(b)
            k = max(k - 1, 1)
    return b


def enumerate_box(basis: Sequence[Sequence[int]], radius: int, budget: int | None = None) -> list[Vector]:
    """All nonzero lattice vectors with sup-norm <= radius, one per sign pair.

    Fincke-Pohst over the Euclidean ball of radius sqrt(d)*radius, which
    contains the sup-norm box; survivors are filtered exactly.  `budget`
    caps the number of enumeration nodes.
    """
    b = [list(row) for row in basis]
    d = len(b)
    dim = len(b[0])
    mu, r = _gram_schmidt(b)
    bound = Fraction(dim * radius * radius)
    found: set[Vector] = set()
    x = [0] * d
    nodes = 0

    def rec(level: int, rem: Fraction) -> None:
        nonlocal nodes
        c = -sum((mu[j][level] * x[j] for j in range(level + 1, d)), Fraction(0))
        s2 = rem / r[level]
        s = math.sqrt(float(s2)) if s2 > 0 else 0.0
        lo = math.floor(float(c) - s) - 1
        hi = math.ceil(float(c) + s) + 1
        for xi in range(lo, hi + 1):
            diff = xi - c
            used = r[level] * diff * diff
            if used > rem:
                continue
            nodes += 1
            if budget is not None and nodes > budget:
                raise BudgetExceeded(f"enumeration exceeded {budget} nodes")
            x[level] = xi
            if level == 0:
                if any(x):
                    v = [sum(x[i] * b[i][k] for i in range(d)) for k in range(dim)]
                    if sup_norm(v) <= radius:
                        found.add(canonical_sign(v))
            else:
                rec(level - 1, rem - used)
        x[level] = 0

    rec(d - 1, bound)
    return sorted(found)


def shortest_vectors(
    basis: Sequence[Sequence[int]],
    accept: Callable[[Vector], bool] | None = None,
    budget: int | None = None,
    max_radius: int | None = None,
) -> tuple[int | None, list[Vector]]:
    """Minimum sup-norm over accepted nonzero lattice vectors, and all vectors
    attaining it (canonical signs, sorted).

    With `max_radius`, the search stops there and returns (None, []) when no
    accepted vector is that short.  Without it, `accept` must hold for at
    least one lattice vector.
    """
    red = lll_reduce(basis)
    ok = accept or (lambda v: True)
    cands = [sup_norm(v) for v in red if ok(canonical_sign(v))]
    radius = min(cands) if cands else max(sup_norm(v) for v in red)
    while True:
        capped = max_radius is not None and radius >= max_radius
        if capped:
            radius = max_radius
        vecs = [v for v in enumerate_box(red, radius, budget) if ok(v)]
        if vecs:
            m = min(sup_norm(v) for v in vecs)
            return m, [v for v in vecs if sup_norm(v) == m]
        if capped:
            return None, []
        radius *= 2


def congruence_lattice(
    forms: Sequence[Sequence[int]], p: int, k: int | Sequence[int], dim: int | None = None
) -> list[list[int]]:
    """Basis of {x in Z^d : f.x = 0 mod p^k for every form f}.

    `k` is a single exponent or one per form.  Each form is imposed in turn
    by valuation-pivot elimination, so the index grows by exactly the
    p-power the form cuts out.
    """
    d = dim if dim is not None else len(forms[0])
    basis = [[int(i == j) for j in range(d)] for i in range(d)]
    ks = [k] * len(forms) if isinstance(k, int) else list(k)
    for f, kf in zip(forms, ks):
        if kf <= 0:
            continue
        basis = _impose(basis, f, p, kf)
    return basis


def _impose(basis: list[list[int]], f: Sequence[int], p: int, k: int) -> list[list[int]]:
    mod = p**k
    vals = [_dot(f, b) % mod for b in basis]
    nz = [i for i, v in enumerate(vals) if v]
    if not nz:
        return basis
    piv = min(nz, key=lambda i: _val(vals[i], p))
    s = _val(vals[piv], p)
    unit = vals[piv] // p**s
    inv = pow(unit, -1, p ** (k - s))
    new = []
    for i, b in enumerate(basis):
        if i == piv:
            continue
        t = (vals[i] // p**s) * inv % p ** (k - s)
        new.append([x - t * y for x, y in zip(b, basis[piv])])
    new.append([p ** (k - s) * y for y in basis[piv]])
    return new


def _val(x: int, p: int) -> int:
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v
