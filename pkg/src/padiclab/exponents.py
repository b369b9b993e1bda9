"""Best approximations and Diophantine exponents over Z and Z[1/p].

A profile is the exact Pareto frontier of (height, error) over every
approximant up to a height bound.  It is built level by level from the
congruence lattices

    L_K = { q in Z^d : |q_0 + q.y|_p <= p^-K },

whose minimal sup-norm vectors are exactly the frontier points, so no box
search is needed and the frontier is complete by construction.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import (
    INF,
    PAdicScalar,
    Prime,
    as_scalar,
    format_exp,
    norm_p,
    valuation,
)
from .errors import DomainError, InvalidInput, PrecisionExhausted
from .lattice import canonical_sign, congruence_lattice, shortest_vectors, sup_norm

KINDS = ("Z", "Zp")


@dataclass(frozen=True)
class ApproxRecord:
    witness: tuple[int, ...]
    error: Fraction
    height_inf: int
    height_mixed: Fraction

    @property
    def is_exact_zero(self) -> bool:
        return self.error == 0


@dataclass(frozen=True)
class ApproxProfile:
    kind: str
    p: int
    records: tuple[ApproxRecord, ...]
    search_bound: Fraction
    exact_input: bool = True
    precision_exhausted: bool = False

    def best_exponent_so_far(self) -> list[float]:
        """Running maximum of the per-record exponent along the frontier."""
        out, cur = [], -INF
        for r in self.records:
            cur = max(cur, record_exponent(r, self.kind, self.p))
            out.append(cur)
        return out


@dataclass(frozen=True)
class ExponentEstimate:
    value: float
    witnesses: tuple[ApproxRecord, ...] = ()
    lower_bound_certified: bool = False

    @property
    def is_infinite(self) -> bool:
        return self.value == INF


# -- linear forms over Q_p ---------------------------------------------------------


@dataclass(frozen=True)
class LinearForms:
    """Rows of p-adic linear forms in the unknowns q~; `q_index` marks the
    coordinates that make up q (the part measured by ||q||_p)."""

    p: int
    rows: tuple[tuple[PAdicScalar, ...], ...]
    q_index: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.rows[0])

    @property
    def exact(self) -> bool:
        return all(c.is_exact for row in self.rows for c in row)

    def precision(self) -> float:
        return min((c.precision for row in self.rows for c in row if not c.is_exact), default=INF)

    def _row_shift(self, row) -> int:
        return max(0, -min(c.valuation_lower_bound() for c in row))

    def lattice(self, k: int) -> list[list[int]]:
        if k > self.precision():
            raise PrecisionExhausted(f"level {k} exceeds working precision {self.precision()}")
        forms, ks = [], []
        for row in self.rows:
            m = self._row_shift(row)
            kk = k + m
            forms.append([c.shift(m).residue_mod(kk) if kk > 0 else 0 for c in row])
            ks.append(kk)
        return congruence_lattice(forms, self.p, ks, dim=self.dim)

    def values(self, q: Sequence[int]) -> list[PAdicScalar]:
        return [sum((c * int(x) for c, x in zip(row, q)), PAdicScalar(self.p, Fraction(0))) for row in self.rows]

    def val(self, q: Sequence[int]):
        """min over rows of the valuation of the row value at q."""
        return min(v.valuation() for v in self.values(q))

    def error(self, q: Sequence[int]) -> Fraction:
        return max(v.abs() for v in self.values(q))

    def q_norm(self, q: Sequence[int]) -> Fraction:
        return norm_p([q[i] for i in self.q_index], self.p) if self.q_index else Fraction(0)

    def integral(self) -> bool:
        return all(c.valuation_lower_bound() >= 0 for row in self.rows for c in row)


def _vector_forms(y: Sequence, p: int) -> LinearForms:
    y = tuple(as_scalar(c, p) for c in y)
    if not y:
        raise InvalidInput("empty y")
    one = PAdicScalar.exact(1, p)
    return LinearForms(p, ((one,) + y,), tuple(range(1, len(y) + 1)))


def _matrix_forms(A: Sequence[Sequence], p: int) -> LinearForms:
    A = [tuple(as_scalar(c, p) for c in row) for row in A]
    m = len(A)
    if m == 0 or len(A[0]) == 0 or any(len(r) != len(A[0]) for r in A):
        raise InvalidInput("matrix must be a nonempty rectangle")
    n = len(A[0])
    zero, one = PAdicScalar.exact(0, p), PAdicScalar.exact(1, p)
    rows = []
    for i, arow in enumerate(A):
        rows.append(tuple(one if k == i else zero for k in range(m)) + arow)
    return LinearForms(p, tuple(rows), tuple(range(m, m + n)))


# -- elementary operations ---------------------------------------------------------


def approx_error(y: Sequence, q: Sequence, p: int | None = None) -> Fraction:
    """|q_0 + q.y|_p for a Z[1/p]-vector q~ = (q_0, q)."""
    if p is None:
        p = next(c.p for c in y if isinstance(c, PAdicScalar))
    y = tuple(as_scalar(c, p) for c in y)
    if len(q) != len(y) + 1:
        raise InvalidInput("q~ must have dimension n+1")
    total = as_scalar(q[0], p)
    for c, x in zip(y, q[1:]):
        total = total + c * Fraction(x)
    return total.abs()


def dirichlet_solve(y: Sequence, Q, p: int | None = None) -> ApproxRecord:
    """Pigeonhole solution with ||q~||^(n+1) <= Q and error <= p/Q.

    Residues q_0 + q.y mod p^l are hashed over the box [0, H)^(n+1); the first
    collision gives the witness.  Requires ||y||_p <= 1.
    """
    if p is None:
        p = next(c.p for c in y if isinstance(c, PAdicScalar))
    y = tuple(as_scalar(c, p) for c in y)
    Q = Fraction(Q)
    if Q <= 1:
        raise InvalidInput("Q must exceed 1")
    if any(c.valuation_lower_bound() < 0 for c in y):
        raise InvalidInput("dirichlet_solve needs ||y||_p <= 1")
    d = len(y) + 1
    ell = 0
    while Fraction(p) ** (ell + 1) <= Q:
        ell += 1
    H = 1
    while H**d < Q:
        H += 1
    box = H if H**d > p**ell else H + 1
    mod = p**ell
    res = [c.residue_mod(ell) for c in y]
    seen: dict[int, tuple[int, ...]] = {}
    witness = None
    for v in itertools.product(range(box), repeat=d):
        r = (v[0] + sum(a * b for a, b in zip(res, v[1:]))) % mod
        if r in seen:
            u = seen[r]
            witness = tuple(a - b for a, b in zip(v, u))
            break
        seen[r] = v
    assert witness is not None, "pigeonhole must collide"
    witness = canonical_sign(witness)
    err = approx_error(y, witness, p)
    h = sup_norm(witness)
    if not (Fraction(h) ** d <= Q and err <= Fraction(p) / Q):
        raise AssertionError("Dirichlet witness failed its own bounds")
    return ApproxRecord(witness, err, h, norm_p(witness[1:], p) * h)


# -- profiles ----------------------------------------------------------------------


def form_profile(forms: LinearForms, kind: str, bound) -> ApproxProfile:
    if kind not in KINDS:
        raise InvalidInput(f"kind must be one of {KINDS}")
    bound = Fraction(bound)
    if bound < 1:
        raise InvalidInput("bound must be >= 1")
    p = forms.p
    if kind == "Zp":
        if not forms.integral():
            raise InvalidInput("Z[1/p] profiles need p-integral data (||y||_p <= 1)")

        def accept(v):
            return any(v[i] % p for i in forms.q_index)
    else:
        accept = None

    records: list[ApproxRecord] = []
    k = 0
    search_bound = bound
    exhausted = False
    while True:
        try:
            basis = forms.lattice(k)
        except PrecisionExhausted:
            exhausted = True
            search_bound = Fraction(records[-1].height_inf if records else 0)
            break
        h, vecs = shortest_vectors(basis, accept, max_radius=math.floor(bound))
        if h is None:
            break
        try:
            vals = [(forms.val(v), v) for v in vecs]
        except PrecisionExhausted:
            exhausted = True
            search_bound = Fraction(h - 1)
            break
        best = max(v for v, _ in vals)
        w = min(v for val, v in vals if val == best)
        err = Fraction(0) if best == INF else Fraction(p) ** (-best)
        hm = forms.q_norm(w) * h
        records.append(ApproxRecord(w, err, h, hm))
        if best == INF:
            break
        k = best + 1
    return ApproxProfile(kind, p, tuple(records), search_bound, forms.exact, exhausted)


def best_profile(y: Sequence, kind: str, bound, p: int | None = None) -> ApproxProfile:
    """Exhaustive frontier of best approximations to y.

    kind 'Z': integer q~ with ||q~||_inf <= bound, error |q_0 + q.y|_p.
    kind 'Zp': p-primitive integer representatives of Z[1/p]-vectors (the
    content-invariant normal form), ranked by ||q||_p ||q~||_inf <= bound.
    """
    if p is None:
        p = next(c.p for c in y if isinstance(c, PAdicScalar))
    return form_profile(_vector_forms(y, p), kind, bound)


def matrix_profile(A: Sequence[Sequence], kind: str, bound, p: int | None = None) -> ApproxProfile:
    """Frontier of ||A q + q_0||_p against the kind's height, with
    q~ = (q_0, q) in Z^m x Z^n (or its Z[1/p] normal form)."""
    if p is None:
        p = next(c.p for row in A for c in row if isinstance(c, PAdicScalar))
    return form_profile(_matrix_forms(A, p), kind, bound)


def record_exponent(r: ApproxRecord, kind: str, p: int) -> float:
    """Exponent realised by one record; -inf when undefined (height 1)."""
    if r.error == 0:
        return INF
    log_inv_err = -math.log(r.error.numerator) + math.log(r.error.denominator)
    if kind == "Z":
        if r.height_inf <= 1:
            return -INF
        return log_inv_err / math.log(r.height_inf)
    if r.height_mixed <= 1:
        return -INF
    hm = math.log(r.height_mixed.numerator) - math.log(r.height_mixed.denominator)
    return (log_inv_err - math.log(r.height_inf)) / hm


def estimate_exponent(profile: ApproxProfile, skip_fraction: float = 0.1) -> ExponentEstimate:
    """Largest per-record exponent on the frontier after discarding the
    lowest-height decile of records (at least one record)."""
    if not profile.records:
        raise InvalidInput("empty profile")
    certified = profile.exact_input
    zeros = [r for r in profile.records if r.error == 0]
    if zeros:
        return ExponentEstimate(INF, tuple(zeros), certified)
    recs = profile.records
    if len(recs) > 1:
        recs = recs[max(1, math.ceil(skip_fraction * len(recs))) :]
    scored = [(record_exponent(r, profile.kind, profile.p), r) for r in recs]
    scored = [s for s in scored if s[0] > -INF]
    if not scored:
        return ExponentEstimate(0.0, (), certified)
    top = max(e for e, _ in scored)
    return ExponentEstimate(top, tuple(r for e, r in scored if e == top), certified)


# -- Liouville ground truth --------------------------------------------------------


@dataclass(frozen=True)
class LiouvilleCertificate:
    y: tuple[Fraction, ...]
    exponents: tuple[int, ...]
    witnesses: tuple[ApproxRecord, ...]
    z_exponents: tuple[float, ...]
    zp_exponents: tuple[float, ...]


def liouville_vector(p: int, v, depth: int, n: int = 1, digit_budget: int = 20000) -> LiouvilleCertificate:
    """y = (sum_{k<=depth} p^ceil(v^k), 0, ..., 0) with its partial-sum witnesses.

    Each witness (-S_k, 1, 0, ...) has error p^-a_{k+1} at height S_k, so the
    ratios a_{k+1}/log_p S_k certify lower bounds for the exponent.
    """
    p = Prime(p)
    v = Fraction(v)
    if v <= n + 1:
        raise DomainError("v must exceed n+1")
    if depth < 3:
        raise DomainError("depth must be >= 3")
    a = [math.ceil(v**k) for k in range(1, depth + 1)]
    if a[-1] > digit_budget:
        raise InvalidInput(f"p^{a[-1]} exceeds the digit budget {digit_budget}")
    y1 = sum(p**e for e in a)
    y = (Fraction(y1),) + (Fraction(0),) * (n - 1)
    wits, zs, zps = [], [], []
    s = 0
    for k in range(depth - 1):
        s += p ** a[k]
        q = (-s, 1) + (0,) * (n - 1)
        err = approx_error(y, q, p)
        assert err == Fraction(p) ** (-a[k + 1])
        rec = ApproxRecord(q, err, s, Fraction(s))
        wits.append(rec)
        zs.append(record_exponent(rec, "Z", p))
        zps.append(record_exponent(rec, "Zp", p))
    return LiouvilleCertificate(y, tuple(a), tuple(wits), tuple(zs), tuple(zps))


# -- export ------------------------------------------------------------------------


def format_error(err: Fraction, p: int) -> str:
    if err == 0:
        return "0"
    return f"{p}^{format_exp(Fraction(valuation(err, p)))}"


def profile_to_csv(profile: ApproxProfile) -> str:
    width = max((len(r.witness) for r in profile.records), default=0)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "height_inf", "height_mixed", "error"] + [f"w{i}" for i in range(width)])
    for r in profile.records:
        w.writerow([profile.kind, r.height_inf, str(r.height_mixed), format_error(r.error, profile.p)] + list(r.witness))
    return buf.getvalue()
