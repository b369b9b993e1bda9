"""Plücker coordinates on the exterior powers of Z[1/p]^(n+1).

Subsets I of {0, ..., n} are sorted tuples, listed in itertools.combinations
order.  The sign attached to e_k ^ e_J is (-1)^#{x in J : x < k}, the parity
of the shuffle that sorts k into J.  With that convention

    (g_t u_y w)^p = pi(w) + p^-t e_0 ^ sum_i y_i c(w)_i      (y_0 = 1)

holds on the nose, which the covolume oracle confirms coordinate by
coordinate.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .core import (
    INF,
    ExactMag,
    PAdicScalar,
    as_pinv_vector,
    as_scalar,
    format_scalar,
    norm_inf,
    norm_p,
    parse_scalar,
)
from .dynamics import flow_apply
from .errors import DomainError, InvalidInput, RankDeficient, SingularMatrix
from .exponents import ApproxProfile, ApproxRecord, LinearForms, form_profile, record_exponent

Subset = tuple[int, ...]


def subsets(n: int, j: int, lo: int = 0) -> list[Subset]:
    """j-subsets of {lo, ..., n} in lexicographic order."""
    return list(itertools.combinations(range(lo, n + 1), j))


def shuffle_sign(k: int, J: Sequence[int]) -> int:
    return -1 if sum(1 for x in J if x < k) % 2 else 1


def _insert(k: int, J: Sequence[int]) -> Subset:
    return tuple(sorted((*J, k)))


@dataclass(frozen=True)
class WedgeVector:
    p: int
    n: int
    j: int
    coords: Mapping[Subset, Fraction]

    def __post_init__(self):
        if not 0 <= self.j <= self.n + 1:
            raise InvalidInput("rank must lie in [0, n+1]")
        full = {I: Fraction(0) for I in subsets(self.n, self.j)}
        for I, v in dict(self.coords).items():
            I = tuple(I)
            if I not in full:
                raise InvalidInput(f"{I} is not a {self.j}-subset of 0..{self.n}")
            full[I] = Fraction(v)
        as_pinv_vector(full.values(), self.p)
        object.__setattr__(self, "coords", full)

    def __getitem__(self, I) -> Fraction:
        return self.coords.get(tuple(I), Fraction(0))

    def values(self) -> list[Fraction]:
        return list(self.coords.values())

    def is_zero(self) -> bool:
        return not any(self.coords.values())

    def norm_p(self) -> Fraction:
        return norm_p(self.values(), self.p)

    def norm_inf(self) -> Fraction:
        return norm_inf(self.values())

    def content(self) -> Fraction:
        return self.norm_p() * self.norm_inf()

    def __eq__(self, other):
        if not isinstance(other, WedgeVector):
            return NotImplemented
        return (self.p, self.n, self.j, self.coords) == (other.p, other.n, other.j, other.coords)

    def __hash__(self):
        return hash((self.p, self.n, self.j, tuple(self.coords.items())))


def _det(m: list[list]):
    """Leibniz determinant; works for Fractions and PAdicScalars (j <= 4 in practice)."""
    k = len(m)
    if k == 0:
        return 1
    total = None
    for perm in itertools.permutations(range(k)):
        inv = sum(1 for a in range(k) for b in range(a + 1, k) if perm[a] > perm[b])
        term = m[0][perm[0]]
        for r in range(1, k):
            term = term * m[r][perm[r]]
        if inv % 2:
            term = -term
        total = term if total is None else total + term
    return total


def _minors(rows: Sequence[Sequence], n: int) -> dict[Subset, object]:
    j = len(rows)
    return {I: _det([[row[c] for c in I] for row in rows]) for I in subsets(n, j)}


def wedge_of_basis(vectors: Sequence[Sequence], p: int) -> WedgeVector:
    """Plücker vector of the span of `vectors`: all j x j column minors."""
    vecs = [as_pinv_vector(v, p) for v in vectors]
    if not vecs:
        raise InvalidInput("need at least one vector")
    n = len(vecs[0]) - 1
    if any(len(v) != n + 1 for v in vecs):
        raise InvalidInput("vectors differ in length")
    w = WedgeVector(p, n, len(vecs), _minors(vecs, n))
    if w.is_zero():
        raise RankDeficient("basis vectors are linearly dependent")
    return w


def c_vector(w: WedgeVector) -> list[dict[Subset, Fraction]]:
    """c(w)_i = sum over (j-1)-subsets J of {1..n} of sign(i,J) w_{J+i} e_J."""
    if w.j < 1:
        raise InvalidInput("c(w) needs rank >= 1")
    out = []
    for i in range(w.n + 1):
        ci = {}
        for J in subsets(w.n, w.j - 1, lo=1):
            ci[J] = Fraction(0) if i in J else shuffle_sign(i, J) * w[_insert(i, J)]
        out.append(ci)
    return out


def pi_proj(w: WedgeVector) -> WedgeVector:
    """Keep the coordinates w_I with 0 not in I."""
    return WedgeVector(w.p, w.n, w.j, {I: v for I, v in w.coords.items() if 0 not in I})


def pi_bullet(w: WedgeVector, s: int) -> WedgeVector:
    """Keep the coordinates w_I with I inside {s+1, ..., n}."""
    return WedgeVector(w.p, w.n, w.j, {I: v for I, v in w.coords.items() if min(I, default=s + 1) > s})


def _ytilde_c(w: WedgeVector, y: Sequence[PAdicScalar]) -> dict[Subset, PAdicScalar]:
    yt = (PAdicScalar.exact(1, w.p),) + tuple(y)
    cw = c_vector(w)
    out = {}
    for J in subsets(w.n, w.j - 1, lo=1):
        acc = PAdicScalar.exact(0, w.p)
        for i in range(w.n + 1):
            if cw[i][J]:
                acc = acc + yt[i] * cw[i][J]
        out[J] = acc
    return out


@dataclass(frozen=True)
class FlowedWedge:
    """g_t u_y w: p-adic coordinates, and real coordinates times p^inf_scale."""

    p: int
    n: int
    j: int
    p_coords: Mapping[Subset, PAdicScalar]
    inf_coords: Mapping[Subset, Fraction]
    inf_scale: Fraction

    def content(self) -> ExactMag:
        return ExactMag(self.p, norm_p(list(self.p_coords.values()), self.p) * norm_inf(list(self.inf_coords.values())), self.inf_scale)


def wedge_flow(w: WedgeVector, y: Sequence, t) -> FlowedWedge:
    """Coordinates of g_t u_y w for integer t."""
    y = tuple(as_scalar(c, w.p) for c in y)
    if len(y) != w.n:
        raise InvalidInput("y must have n coordinates")
    t = Fraction(t)
    if t.denominator != 1:
        raise DomainError("the p-adic factor p^-t needs integer t")
    yc = _ytilde_c(w, y)
    pc = {}
    for I, v in w.coords.items():
        if 0 in I:
            pc[I] = yc[I[1:]].shift(-int(t))
        else:
            pc[I] = PAdicScalar.exact(v, w.p)
    return FlowedWedge(w.p, w.n, w.j, pc, dict(w.coords), -t * w.j / (w.n + 1))


def cov_formula(w: WedgeVector, y: Sequence, t) -> ExactMag:
    """max(p^t ||sum y_i c(w)_i||_p, ||pi(w)||_p) p^(-tj/(n+1)) ||w||_inf, for rational t."""
    if w.is_zero():
        raise InvalidInput("w must be nonzero")
    y = tuple(as_scalar(c, w.p) for c in y)
    t = Fraction(t)
    yc = _ytilde_c(w, y)
    first = ExactMag(w.p, norm_p(list(yc.values()), w.p) if yc else Fraction(0), t)
    second = ExactMag(w.p, pi_proj(w).norm_p())
    return max(first, second) * ExactMag(w.p, w.norm_inf(), -t * w.j / (w.n + 1))


@dataclass(frozen=True)
class Submodule:
    p: int
    basis: tuple[tuple[Fraction, ...], ...]

    @classmethod
    def of(cls, basis: Sequence[Sequence], p: int) -> "Submodule":
        b = tuple(as_pinv_vector(v, p) for v in basis)
        sm = cls(p, b)
        sm.plucker  # validates independence
        return sm

    @property
    def plucker(self) -> WedgeVector:
        return wedge_of_basis(self.basis, self.p)


def cov_oracle(delta: Submodule, y: Sequence, t) -> ExactMag:
    """Flow each basis vector, take minors at both places, then the content."""
    p = delta.p
    y = tuple(as_scalar(c, p) for c in y)
    flowed = [flow_apply(y, t, b, p) for b in delta.basis]
    n = len(delta.basis[0]) - 1
    pm = _minors([f.p_part for f in flowed], n)
    im = _minors([f.inf_part for f in flowed], n)
    if not any(im.values()):
        raise RankDeficient("basis vectors are linearly dependent")
    scale = sum((f.inf_scale for f in flowed), Fraction(0))
    return ExactMag(p, norm_p(list(pm.values()), p) * norm_inf(list(im.values())), scale)


def is_decomposable(w: WedgeVector) -> bool:
    """Quadratic Plücker relations: for every (j-1)-subset I and (j+1)-subset L,
    sum_k (-1)^k w_{I+l_k} w_{L-l_k} = 0."""
    if w.j <= 1 or w.j >= w.n:
        return True
    for I in subsets(w.n, w.j - 1):
        for L in subsets(w.n, w.j + 1):
            total = Fraction(0)
            for k, l in enumerate(L):
                if l in I:
                    continue
                total += (-1) ** k * shuffle_sign(l, I) * w[_insert(l, I)] * w[L[:k] + L[k + 1 :]]
            if total:
                return False
    return True


# -- subspace parametrisations -----------------------------------------------------


@dataclass(frozen=True)
class SubspaceParam:
    """An s-dimensional affine subspace of Q_p^n through R_A = (I_{s+1} A)."""

    p: int
    n: int
    s: int
    A: tuple[tuple[PAdicScalar, ...], ...]

    def __post_init__(self):
        if not 0 <= self.s < self.n:
            raise InvalidInput("need 0 <= s < n")
        A = tuple(tuple(as_scalar(c, self.p) for c in row) for row in self.A)
        if len(A) != self.s + 1 or any(len(r) != self.n - self.s for r in A):
            raise InvalidInput(f"A must be {self.s + 1} x {self.n - self.s}")
        object.__setattr__(self, "A", A)

    def R(self) -> list[list[PAdicScalar]]:
        one, zero = PAdicScalar.exact(1, self.p), PAdicScalar.exact(0, self.p)
        return [[one if k == i else zero for k in range(self.s + 1)] + list(self.A[i]) for i in range(self.s + 1)]

    def point(self, x: Sequence) -> tuple[PAdicScalar, ...]:
        """y = x~ A appended to x, for x in Q_p^s: the point (x, x~ A) of L."""
        x = tuple(as_scalar(c, self.p) for c in x)
        xt = (PAdicScalar.exact(1, self.p),) + x
        tail = []
        for k in range(self.n - self.s):
            acc = PAdicScalar.exact(0, self.p)
            for i in range(self.s + 1):
                acc = acc + xt[i] * self.A[i][k]
            tail.append(acc)
        return x + tuple(tail)

    def to_json(self) -> str:
        return json.dumps(
            {"p": self.p, "n": self.n, "s": self.s, "A": [[format_scalar(c) for c in row] for row in self.A]},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str | dict) -> "SubspaceParam":
        d = json.loads(text) if isinstance(text, str) else text
        try:
            p, n, s = int(d["p"]), int(d["n"]), int(d["s"])
            A = [[parse_scalar(str(c), p) for c in row] for row in d["A"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"bad subspace parametrisation: {exc}") from exc
        return cls(p, n, s, tuple(map(tuple, A)))


def row_transform(L: SubspaceParam, B: Sequence[Sequence]) -> SubspaceParam:
    """The parametrisation with A' = B A for rational invertible B."""
    B = [[Fraction(x) for x in row] for row in B]
    k = L.s + 1
    if len(B) != k or any(len(r) != k for r in B):
        raise InvalidInput(f"B must be {k} x {k}")
    if _det(B) == 0:
        raise SingularMatrix("B is singular")
    A2 = []
    for i in range(k):
        row = []
        for c in range(L.n - L.s):
            acc = PAdicScalar.exact(0, L.p)
            for m in range(k):
                if B[i][m]:
                    acc = acc + L.A[m][c] * B[i][m]
            row.append(acc)
        A2.append(tuple(row))
    return SubspaceParam(L.p, L.n, L.s, tuple(A2))


def _integral_rows(L: SubspaceParam) -> SubspaceParam:
    """Scale each row of A by a power of p so that A is p-integral.  A
    diagonal B changes no higher exponent, and integrality makes the
    restriction to unit pi_bullet coordinates lossless."""
    rows = []
    for row in L.A:
        m = max(0, -min(c.valuation_lower_bound() for c in row))
        rows.append(tuple(c.shift(m) for c in row))
    return SubspaceParam(L.p, L.n, L.s, tuple(rows))


def higher_forms(L: SubspaceParam, j: int) -> tuple[LinearForms, list[Subset]]:
    """Linear forms <(e_i + a_i) ^ e_J, w> on the Plücker coordinates, with
    the pi_bullet coordinates marked as the height part."""
    idx = subsets(L.n, j)
    pos = {I: k for k, I in enumerate(idx)}
    R = L.R()
    zero = PAdicScalar.exact(0, L.p)
    rows = []
    for i in range(L.s + 1):
        for J in subsets(L.n, j - 1, lo=1):
            row = [zero] * len(idx)
            for k in range(L.n + 1):
                if k in J or R[i][k].value == 0 and R[i][k].is_exact:
                    continue
                I = _insert(k, J)
                row[pos[I]] = row[pos[I]] + R[i][k] * shuffle_sign(k, J)
            rows.append(tuple(row))
    qi = tuple(pos[I] for I in idx if min(I) > L.s)
    return LinearForms(L.p, tuple(rows), qi), idx


@dataclass(frozen=True)
class WjpWitness:
    w: WedgeVector
    x: Fraction
    H: Fraction
    exponent: float
    decomposable: bool


@dataclass(frozen=True)
class WjpEstimate:
    j: int
    value: float
    value_decomposable: float
    witnesses: tuple[WjpWitness, ...]
    profile: ApproxProfile


def _j_exponent(rec: ApproxRecord, j: int, p: int) -> float:
    u = record_exponent(rec, "Zp", p)
    if u in (INF, -INF):
        return u
    return j * u + j - 1


def wjp_estimate(L: SubspaceParam, j: int, bound, skip_fraction: float = 0.1) -> WjpEstimate:
    """Finite-scale w^p_j(A): frontier of (x, H) = (||R_A c(w)||_p ||w||, ||pi_bullet(w)||_p ||w||)
    over p-primitive integer arrays w with H <= bound, read through
    v = j log(1/x)/log H + j - 1."""
    if not 1 <= j <= L.n - L.s:
        raise DomainError(f"j must lie in [1, {L.n - L.s}]")
    Li = _integral_rows(L)
    forms, idx = higher_forms(Li, j)
    prof = form_profile(forms, "Zp", bound)
    recs = prof.records
    zeros = [r for r in recs if r.error == 0]
    if not zeros and len(recs) > 1:
        recs = recs[max(1, math.ceil(skip_fraction * len(recs))) :]
    wits = []
    for r in (zeros or recs):
        w = WedgeVector(L.p, L.n, j, dict(zip(idx, r.witness)))
        e = INF if r.error == 0 else _j_exponent(r, j, L.p)
        if e == -INF:
            continue
        wits.append(WjpWitness(w, r.error * r.height_inf, r.height_mixed, e, is_decomposable(w)))
    if not wits:
        return WjpEstimate(j, 0.0, -INF, (), prof)
    top = max(w.exponent for w in wits)
    dec = [w.exponent for w in wits if w.decomposable]
    best = tuple(w for w in wits if w.exponent == top)
    return WjpEstimate(j, top, max(dec) if dec else -INF, best, prof)


def subspace_exponent(L: SubspaceParam, bound) -> float:
    """max(n, w^p_j(A) for j = 1..n-s)."""
    vals = [wjp_estimate(L, j, bound).value for j in range(1, L.n - L.s + 1)]
    return max([float(L.n)] + vals)


def pidot_constant(L: SubspaceParam) -> Fraction:
    """K with ||w||_p ||w|| <= K (1 + ||pi_bullet(w)||_p ||w||) whenever
    ||R_A c(w)||_p ||w|| <= 1, from s+1 steps of the ultrametric descent."""
    a = max((c.abs() for row in L.A for c in row), default=Fraction(0))
    return max(Fraction(1), a) ** (L.s + 1)


def r_c_norm(L: SubspaceParam, w: WedgeVector) -> Fraction:
    """||R_A c(w)||_p evaluated straight from the pairing formula."""
    R = L.R()
    best = Fraction(0)
    for i in range(L.s + 1):
        for J in subsets(L.n, w.j - 1, lo=1):
            acc = PAdicScalar.exact(0, L.p)
            for k in range(L.n + 1):
                if k not in J:
                    acc = acc + R[i][k] * (shuffle_sign(k, J) * w[_insert(k, J)])
            best = max(best, acc.abs())
    return best


def witnesses_to_csv(est: WjpEstimate) -> str:
    if not est.witnesses:
        idx = []
    else:
        w0 = est.witnesses[0].w
        idx = subsets(w0.n, w0.j)
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["j", "x", "H", "exponent", "decomposable"] + ["w_" + "".join(map(str, I)) for I in idx])
    for wt in est.witnesses:
        out.writerow([est.j, str(wt.x), str(wt.H), _fmt(wt.exponent), str(wt.decomposable).lower()] + [str(wt.w[I]) for I in idx])
    return buf.getvalue()


def _fmt(x: float) -> str:
    return "inf" if x == INF else f"{x:.12f}"
