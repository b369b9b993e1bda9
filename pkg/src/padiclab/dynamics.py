"""The diagonal flow g_t u_y on the diagonal Z[1/p]-lattice and its minimum.

For q~ = (q_0, q) the flowed vector has p-adic part
(p^-t (q_0 + q.y), q_1, ..., q_n) and real part p^(-t/(n+1)) q~, so its
content is

    max(p^t |q_0 + q.y|_p, ||q||_p) * p^(-t/(n+1)) * ||q~||_inf.

On p-primitive integer vectors whose q-part has a unit coordinate the first
factor is p^max(0, t - K) whenever |q_0 + q.y|_p <= p^-K, so the minimum over
the lattice is a minimum over the congruence lattices L_K of the same kind
used for profiles.  Each L_K minimum is exact, so delta comes with a
completeness certificate for free.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import (
    INF,
    ExactMag,
    PAdicScalar,
    PlaceVector,
    as_scalar,
    format_mag,
    norm_inf,
    norm_p,
    normalize_p_primitive,
)
from .errors import BudgetExceeded, DomainError, InvalidInput, PrecisionExhausted
from .exponents import _vector_forms, best_profile
from .lattice import shortest_vectors


@dataclass(frozen=True)
class FlowParams:
    p: int
    n: int
    t: Fraction = Fraction(0)

    @property
    def a(self) -> Fraction:
        return Fraction(self.n, self.n + 1)

    @property
    def b(self) -> Fraction:
        return Fraction(1, self.n + 1)


@dataclass(frozen=True)
class CorrParams:
    v: Fraction
    c: Fraction
    a: Fraction
    b: Fraction

    def v_of_c(self) -> Fraction:
        return (self.a + self.c) / (self.b - self.c)


def corr_params(n: int, v) -> CorrParams:
    """c = (v - n)/((n+1)(v+1)) for a = n/(n+1), b = 1/(n+1)."""
    v = Fraction(v)
    if v <= n:
        raise DomainError(f"v must exceed n = {n}")
    c = (v - n) / ((n + 1) * (v + 1))
    cp = CorrParams(v, c, Fraction(n, n + 1), Fraction(1, n + 1))
    assert cp.v_of_c() == v
    return cp


def corr_params_generic(a, b, v) -> CorrParams:
    a, b, v = Fraction(a), Fraction(b), Fraction(v)
    if a <= 0 or b <= 0:
        raise DomainError("a and b must be positive")
    if v <= a / b:
        raise DomainError("v must exceed a/b")
    c = (b * v - a) / (v + 1)
    cp = CorrParams(v, c, a, b)
    assert cp.v_of_c() == v
    return cp


def corr_v_of_d(n: int, d) -> Fraction:
    d = Fraction(d)
    if d < 0 or d >= Fraction(1, n + 1):
        raise DomainError("need 0 <= d < 1/(n+1)")
    return (n * (1 + d) + d) / (1 - (n + 1) * d)


# -- the flow ----------------------------------------------------------------------


def _check_dims(y, q):
    if len(q) != len(y) + 1:
        raise InvalidInput("q~ must have dimension n+1")


def flow_apply(y: Sequence, t, q: Sequence, p: int | None = None) -> PlaceVector:
    """g_t u_y applied to the diagonal image of q~ (integer t)."""
    if p is None:
        p = next(c.p for c in y if isinstance(c, PAdicScalar))
    y = tuple(as_scalar(c, p) for c in y)
    _check_dims(y, q)
    t = Fraction(t)
    if t.denominator != 1:
        raise DomainError("the p-adic factor p^-t needs integer t")
    n = len(y)
    z = as_scalar(q[0], p)
    for c, x in zip(y, q[1:]):
        z = z + c * Fraction(x)
    first = z.shift(-int(t))
    return PlaceVector(p, (first,) + tuple(Fraction(x) for x in q[1:]), tuple(Fraction(x) for x in q), -t / (n + 1))


def flowed_content(y: Sequence, t, q: Sequence, p: int) -> ExactMag:
    """content(g_t u_y q~) for rational t, without forming p^-t in Q_p."""
    y = tuple(as_scalar(c, p) for c in y)
    _check_dims(y, q)
    t = Fraction(t)
    n = len(y)
    z = as_scalar(q[0], p)
    for c, x in zip(y, q[1:]):
        z = z + c * Fraction(x)
    first = ExactMag(p, z.abs(), t)
    second = ExactMag(p, norm_p(q[1:], p))
    return max(first, second) * ExactMag(p, norm_inf(q), -t / (n + 1))


# -- the lattice minimum -----------------------------------------------------------


@dataclass(frozen=True)
class DeltaResult:
    delta: ExactMag
    argmin: tuple[int, ...]
    search_bound_used: ExactMag
    complete: bool
    t: Fraction = Fraction(0)

    @property
    def log_p_delta(self) -> float:
        return self.delta.log_p()


def _integral_or_fail(y, p):
    if any(c.valuation_lower_bound() < 0 for c in y):
        raise InvalidInput("delta needs ||y||_p <= 1")


def dani_delta(y: Sequence, t, budget: int | None = None, p: int | None = None) -> DeltaResult:
    """min over nonzero q~ in Z[1/p]^(n+1) of content(g_t u_y q~).

    `budget` caps enumeration nodes per lattice level; when it runs out the
    best value so far is returned with complete=False.
    """
    if p is None:
        p = next(c.p for c in y if isinstance(c, PAdicScalar))
    y = tuple(as_scalar(c, p) for c in y)
    _integral_or_fail(y, p)
    t = Fraction(t)
    if t < 0:
        raise DomainError("t must be nonnegative")
    n = len(y)
    forms = _vector_forms(y, p)
    top = math.ceil(t)
    if top > forms.precision():
        raise PrecisionExhausted(f"t = {t} needs {top} digits, have {forms.precision()}")
    scale = -t / (n + 1)

    # e_0 is always available: content p^t * p^(-t/(n+1))
    e0 = (1,) + (0,) * n
    best = ExactMag(p, 1, t + scale)
    best_w = e0
    complete = True

    def accept(v):
        return any(v[i] % p for i in range(1, n + 1))

    for k in range(0, top + 1):
        lift = max(Fraction(0), t - k)
        # only vectors of height < best / p^lift can improve
        cap_mag = best / ExactMag(p, 1, lift + scale)
        cap = math.floor(float(cap_mag) * (1 + 1e-12)) + 1
        if cap < 1:
            continue
        try:
            h, vecs = shortest_vectors(forms.lattice(k), accept, budget, max_radius=cap)
        except BudgetExceeded:
            complete = False
            continue
        if h is None:
            continue
        for w in vecs:
            val = flowed_content(y, t, w, p)
            # e_0 is the seed and keeps ties; otherwise the smallest witness wins
            if val < best or (val == best and best_w != e0 and w < best_w):
                best, best_w = val, w
    theta_bound = best * ExactMag(p, 1, t / (n + 1))
    return DeltaResult(best, best_w, theta_bound, complete, t)


def _vals(arr: np.ndarray, p: int, cap: int) -> np.ndarray:
    """Elementwise p-adic valuation, with 0 mapped to `cap`."""
    out = np.where(arr == 0, cap, 0).astype(np.int64)
    a = arr.copy()
    live = a != 0
    for _ in range(cap):
        live = live & (a % p == 0)
        if not live.any():
            break
        out[live] += 1
        a[live] //= p
    return np.minimum(out, cap)


def brute_force_delta(y: Sequence, t: int, radius: int, p: int | None = None) -> tuple[ExactMag, tuple[int, ...]]:
    """Independent oracle: the minimum content over every integer q~ with
    ||q~||_inf <= radius.

    The q-part is scanned as a full numpy grid.  For fixed q, the best q_0 in
    [-radius, radius] is one of the two integers of least absolute value in
    each class -q.y mod p^k (k = 0..T), so those candidates are exhaustive.
    Keys are exact int64: content times p^(t/(n+1) + C) for a fixed C.
    Returns (delta, one minimising witness).
    """
    if p is None:
        p = next(c.p for c in y if isinstance(c, PAdicScalar))
    y = tuple(as_scalar(c, p) for c in y)
    _integral_or_fail(y, p)
    if int(t) != t or t < 0:
        raise DomainError("oracle needs integer t >= 0")
    t = int(t)
    n = len(y)
    C = 0
    while p**C <= radius:
        C += 1
    T = t + C + 1
    if T > forms_precision(y):
        raise PrecisionExhausted("oracle needs more digits than available")
    if (radius + 1) * p ** (t + C) >= 2**62 or (radius + 1) * p**T >= 2**62:
        raise InvalidInput("oracle box too large for exact int64 keys")
    mod = p**T
    res = [c.residue_mod(T) for c in y]
    axis = np.arange(-radius, radius + 1, dtype=np.int64)
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    Q = np.stack([g.ravel() for g in grids])  # shape (n, M)
    nonzero = np.any(Q != 0, axis=0)
    Q = Q[:, nonzero]
    hq = np.max(np.abs(Q), axis=0)
    vq = np.min(np.stack([_vals(row, p, T) for row in Q]), axis=0)
    s = np.zeros(Q.shape[1], dtype=np.int64)
    for r, row in zip(res, Q):
        s = (s + (r * row) % mod) % mod
    pw = np.array([p**i for i in range(t + C + 1)], dtype=np.int64)

    # q = 0: only q_0 != 0, best is q_0 = +-1 with content p^t p^(-t/(n+1))
    best_key = int(pw[t + C])
    best_w = (1,) + (0,) * n
    for k in range(T + 1):
        step = p**k
        base = (-s) % step
        for cand in (base, base - step):
            ok = np.abs(cand) <= radius
            if not ok.any():
                continue
            z = (cand + s) % mod
            vz = _vals(z, p, T)
            e = np.maximum(t - vz, -vq) + C
            h = np.maximum(np.abs(cand), hq)
            key = np.where(ok, h * pw[np.clip(e, 0, None)], np.iinfo(np.int64).max)
            i = int(np.argmin(key))
            if key[i] < best_key:
                best_key = int(key[i])
                best_w = _canon(normalize_p_primitive((int(cand[i]),) + tuple(int(x) for x in Q[:, i]), p))
    delta = ExactMag(p, Fraction(best_key), Fraction(-C) - Fraction(t, n + 1))
    return delta, best_w


def forms_precision(y) -> float:
    return min((c.precision for c in y if not c.is_exact), default=INF)


def _v(x: int, p: int) -> int:
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def _canon(w):
    for c in w:
        if c:
            return tuple(w) if c > 0 else tuple(-x for x in w)
    return tuple(w)


# -- trajectories ------------------------------------------------------------------


@dataclass(frozen=True)
class Trajectory:
    p: int
    n: int
    points: tuple[DeltaResult, ...]

    def events(self, d) -> list[DeltaResult]:
        """Times with delta <= p^(-d t)."""
        d = Fraction(d)
        return [r for r in self.points if r.delta <= ExactMag(self.p, 1, -d * r.t)]

    def last_violation(self, d):
        """sup of the times t' with delta(t') > p^(-d t'), or None."""
        d = Fraction(d)
        bad = [r.t for r in self.points if r.delta > ExactMag(self.p, 1, -d * r.t)]
        return max(bad) if bad else None

    @property
    def complete(self) -> bool:
        return all(r.complete for r in self.points)


def delta_trajectory(y: Sequence, t_list: Sequence, budget: int | None = None, p: int | None = None) -> Trajectory:
    if p is None:
        p = next(c.p for c in y if isinstance(c, PAdicScalar))
    pts = tuple(dani_delta(y, t, budget, p) for t in t_list)
    return Trajectory(p, len(y), pts)


def event_to_witness(y: Sequence, r: DeltaResult, d, p: int) -> dict:
    """Turn a delta-event at time t into an approximation witness.

    With x = |z|_p ||q~||_inf and H = ||q||_p ||q~||_inf, content <= p^-dt
    gives x <= p^(-t(n/(n+1) + d)) and H <= p^(t(1/(n+1) - d)), which forces
    x <= H^-v_d.  The check is done exactly.
    """
    y = tuple(as_scalar(c, p) for c in y)
    n = len(y)
    x, H = pair_of(y, r.argmin, p)
    vd = corr_v_of_d(n, d)
    ok = below_power(x, H, vd)
    expo = _pair_exponent(x, H)
    return {"t": r.t, "witness": r.argmin, "x": x, "H": H, "exponent": expo, "v_d": vd, "ok": ok}


def pair_of(y, q, p) -> tuple[Fraction, Fraction]:
    """The point (|q_0 + q.y|_p ||q~||, ||q||_p ||q~||) of the set E."""
    z = as_scalar(q[0], p)
    for c, w in zip(y, q[1:]):
        z = z + c * Fraction(w)
    h = norm_inf(q)
    return z.abs() * h, norm_p(q[1:], p) * h


def below_power(x: Fraction, H: Fraction, v: Fraction) -> bool:
    """Exact test of x <= H^-v for rationals x >= 0, H > 0, v."""
    if x == 0:
        return True
    v = Fraction(v)
    num, den = v.numerator, v.denominator
    # x^den * H^num <= 1
    return x**den * H**num <= 1


def _pair_exponent(x: Fraction, H: Fraction) -> float:
    if x == 0:
        return INF
    if H <= 1:
        return INF if x <= 1 else -INF
    return -math.log(x) / math.log(H)


# -- correspondence ----------------------------------------------------------------


@dataclass
class CorrespondenceReport:
    y: tuple
    v: Fraction
    c: Fraction
    side1: list = field(default_factory=list)
    side2: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def verify_correspondence(y: Sequence, v, t_max: int, height_bound, p: int | None = None, budget: int | None = None) -> CorrespondenceReport:
    """Check both directions of the approximation/flow equivalence at
    bounded scale.

    Side 1: frontier points (x, H) of E with x <= H^-v.  Each induces the time
    t with p^(-bt) H = p^(-ct); at that time the same vector has content
    <= p^-ct, which is re-checked exactly as x <= H^-v together with
    H^... identities in log form.
    Side 2: integer times t <= t_max with delta(t) <= p^-ct.  Each argmin is
    mapped back to E and must satisfy x <= H^-v.
    """
    if p is None:
        p = next(c.p for c in y if isinstance(c, PAdicScalar))
    y = tuple(as_scalar(c, p) for c in y)
    n = len(y)
    cp = corr_params(n, v)
    rep = CorrespondenceReport(y, cp.v, cp.c)
    prof = best_profile(y, "Zp", height_bound, p)
    for r in prof.records:
        x, H = pair_of(y, r.witness, p)
        if not below_power(x, H, cp.v) or H <= 1:
            continue
        t_ind = math.log(H) / math.log(p) / float(cp.b - cp.c)
        # at t_ind: p^(-b t) H = p^(-c t) exactly, and p^(a t) x <= p^(-c t)
        # is equivalent to x <= H^(-(a+c)/(b-c)) = H^-v
        lhs = float(cp.a) * t_ind + (math.log(x) / math.log(p) if x else -INF)
        holds = x == 0 or lhs <= -float(cp.c) * t_ind + 1e-9
        rep.side1.append({"witness": r.witness, "x": x, "H": H, "t": t_ind, "side2_holds": holds})
        if not holds:
            rep.failures.append(f"side 1 witness {r.witness} does not give a flow event")
    for t in range(1, t_max + 1):
        res = dani_delta(y, t, budget, p)
        if res.delta <= ExactMag(p, 1, -cp.c * t):
            x, H = pair_of(y, res.argmin, p)
            holds = below_power(x, H, cp.v)
            rep.side2.append({"t": t, "delta": res.delta, "witness": res.argmin, "x": x, "H": H, "side1_holds": holds})
            if not holds:
                rep.failures.append(f"flow event at t={t} does not give an approximation")
    return rep


# -- export ------------------------------------------------------------------------


def trajectory_to_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "delta", "log_p_delta", "witness", "complete"])
    for r in traj.points:
        w.writerow([str(r.t), format_mag(r.delta), f"{r.log_p_delta:.12f}", " ".join(map(str, r.argmin)), str(r.complete).lower()])
    return buf.getvalue()
