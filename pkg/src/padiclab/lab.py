"""Monte-Carlo experiments on Haar-random points of Z_p^d.

Every trial draws from its own generator, seeded by sha256(seed, label, index),
so a run is reproducible from (seed, trials) alone and independent of how
the trials are spread over worker processes.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .core import INF, ExactMag, PAdicScalar, as_scalar, sample_padic
from .dynamics import dani_delta
from .errors import DegenerateOnSample, InvalidInput
from .exponents import best_profile, estimate_exponent
from .exterior import SubspaceParam, subspace_exponent

Monomial = tuple[int, ...]


def trial_rng(seed: int, label: str, index: int) -> random.Random:
    h = hashlib.sha256(f"{seed}:{label}:{index}".encode()).digest()
    return random.Random(int.from_bytes(h[:8], "big"))


@dataclass(frozen=True)
class PolyMap:
    """Polynomial map Z_p^d -> Q_p^n with exact rational coefficients; each
    component maps exponent tuples to coefficients."""

    d: int
    components: tuple[Mapping[Monomial, Fraction], ...]

    def __post_init__(self):
        comps = []
        for c in self.components:
            clean = {}
            for mono, coef in dict(c).items():
                mono = tuple(int(e) for e in mono)
                if len(mono) != self.d or min(mono, default=0) < 0:
                    raise InvalidInput(f"bad monomial {mono} for domain dimension {self.d}")
                if Fraction(coef):
                    clean[mono] = Fraction(coef)
            comps.append(clean)
        if not comps:
            raise InvalidInput("a map needs at least one component")
        object.__setattr__(self, "components", tuple(comps))

    @property
    def n(self) -> int:
        return len(self.components)

    @classmethod
    def veronese(cls, n: int) -> "PolyMap":
        return cls(1, tuple({(k,): Fraction(1)} for k in range(1, n + 1)))

    @classmethod
    def constant(cls, values: Sequence, d: int = 1) -> "PolyMap":
        return cls(d, tuple({(0,) * d: Fraction(v)} for v in values))

    @classmethod
    def of_subspace(cls, L: SubspaceParam) -> "PolyMap":
        """x -> (x, x~ A) for a subspace with exact rational A."""
        if any(not c.is_exact for row in L.A for c in row):
            raise InvalidInput("the map needs exact coefficients")
        if L.s < 1:
            raise InvalidInput("a point is not parametrised by a map")
        d = L.s
        comps = [{tuple(int(i == k) for i in range(d)): Fraction(1)} for k in range(d)]
        for col in range(L.n - L.s):
            comp = {(0,) * d: L.A[0][col].value}
            for k in range(d):
                comp[tuple(int(i == k) for i in range(d))] = L.A[k + 1][col].value
            comps.append(comp)
        return cls(d, tuple(comps))

    def __call__(self, x: Sequence) -> tuple[PAdicScalar, ...]:
        if len(x) != self.d:
            raise InvalidInput(f"expected {self.d} coordinates")
        p = next((c.p for c in x if isinstance(c, PAdicScalar)), None)
        if p is None:
            raise InvalidInput("points must be PAdicScalars")
        x = [as_scalar(c, p) for c in x]
        out = []
        for comp in self.components:
            acc = PAdicScalar.exact(0, p)
            for mono, coef in comp.items():
                term = PAdicScalar.exact(coef, p)
                for xi, e in zip(x, mono):
                    for _ in range(e):
                        term = term * xi
                acc = acc + term
            out.append(acc)
        return tuple(out)


def sample_point(p: int, d: int, precision: int, rng: random.Random) -> tuple[PAdicScalar, ...]:
    return tuple(sample_padic(p, precision, rng) for _ in range(d))


def _map_workers(fn, args: list, workers: int | None) -> list:
    if workers is None or workers <= 1 or len(args) < 2:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, args, chunksize=max(1, len(args) // (4 * workers))))


# -- (C, alpha)-good fits ---------------------------------------------------------


@dataclass(frozen=True)
class GoodFit:
    C_hat: Fraction
    alpha_hat: Fraction
    epsilons: tuple[Fraction, ...]
    ratios: tuple[Fraction, ...]
    samples: int
    vacuous: bool = False

    def satisfied(self) -> bool:
        """Envelope property: ratio <= C eps^alpha at every evidence point."""
        C, a = float(self.C_hat), float(self.alpha_hat)
        return all(float(r) <= C * float(e) ** a * (1 + 1e-9) for e, r in zip(self.epsilons, self.ratios))

    def to_dict(self) -> dict:
        return {
            "C": str(self.C_hat),
            "alpha": str(self.alpha_hat),
            "epsilon": [str(e) for e in self.epsilons],
            "ratio": [str(r) for r in self.ratios],
            "samples": self.samples,
            "vacuous": self.vacuous,
        }


def _envelope(points: list[tuple[float, float]], alpha_max: float) -> tuple[float, float]:
    """Line log C + alpha u lying above every (u, v), alpha in (0, alpha_max],
    minimising the total vertical gap.  The optimum sits at a slope through
    two evidence points or at the end of the alpha range."""
    cands = {alpha_max}
    for i, (u1, v1) in enumerate(points):
        for u2, v2 in points[i + 1 :]:
            if u1 != u2:
                s = (v2 - v1) / (u2 - u1)
                if 0 < s <= alpha_max:
                    cands.add(s)
    best = None
    for a in sorted(cands):
        logc = max(v - a * u for u, v in points)
        gap = sum(logc + a * u - v for u, v in points)
        if best is None or gap < best[0] - 1e-12:
            best = (gap, a, logc)
    return best[1], best[2]


def good_fit(
    f: PolyMap,
    ball: tuple = (0, 0),
    samples: int = 1000,
    eps_grid: Sequence | None = None,
    seed: int = 0,
    p: int = 2,
    precision: int = 64,
    alpha_max: float = 4.0,
) -> GoodFit:
    """Fit (C, alpha) with mu{x in B : |f(x)|_p <= eps sup_B |f|} <= C eps^alpha mu(B).

    `ball` is (center, r) for the ball center + p^r Z_p; sup_B |f| is the
    sample maximum.  Grid points are p-powers where the two inequalities
    < and <= differ by one grid step; the non-strict form is used.
    """
    if f.n != 1 or f.d != 1:
        raise InvalidInput("good_fit takes a scalar polynomial in one variable")
    center, r = ball
    center = as_scalar(center, p)
    if samples < 1:
        raise InvalidInput("samples must be positive")
    if eps_grid is None:
        eps_grid = [Fraction(p) ** (-k) for k in range(0, 9)]
    eps = sorted({Fraction(e) for e in eps_grid}, reverse=True)
    if not eps or eps[-1] <= 0 or eps[0] > 1:
        raise InvalidInput("epsilons must lie in (0, 1]")
    vals = []
    for i in range(samples):
        u = sample_padic(p, precision, trial_rng(seed, "good", i))
        (fx,) = f((center + u.shift(int(r)),))
        # values below the working precision count as zero
        vals.append(fx.abs() if fx.is_exact or fx.valuation_lower_bound() < fx.precision else Fraction(0))
    sup = max(vals)
    if sup == 0:
        raise DegenerateOnSample("f vanishes on every sample")
    ratios = tuple(Fraction(sum(1 for v in vals if v <= e * sup), samples) for e in eps)
    pts = [(math.log(e), math.log(q)) for e, q in zip(eps, ratios) if q > 0]
    if len(pts) <= 1 and all(q == 0 for e, q in zip(eps, ratios) if e < 1):
        return GoodFit(Fraction(1), Fraction(alpha_max).limit_denominator(1000), tuple(eps), ratios, samples, True)
    a, logc = _envelope(pts, alpha_max)
    alpha = Fraction(a).limit_denominator(1000)
    if alpha > a:
        alpha = Fraction(math.floor(a * 1000), 1000) or Fraction(1, 1000)
    C = max(float(q) / float(e) ** float(alpha) for e, q in zip(eps, ratios))
    C_hat = Fraction(C).limit_denominator(10**6)
    if float(C_hat) < C:
        C_hat = Fraction(math.ceil(C * 10**9), 10**9)
    return GoodFit(C_hat, alpha, tuple(eps), ratios, samples)


# -- quantitative nondivergence ---------------------------------------------------


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if n == 0:
        return (0.0, 1.0)
    ph = k / n
    den = 1 + z * z / n
    mid = (ph + z * z / (2 * n)) / den
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    lo = 0.0 if k == 0 else max(0.0, mid - half)
    hi = 1.0 if k == n else min(1.0, mid + half)
    return (lo, hi)


def loglog_slope(eps: Sequence[float], frac: Sequence[float]) -> float | None:
    pts = [(math.log(e), math.log(f)) for e, f in zip(eps, frac) if f > 0]
    if len(pts) < 2:
        return None
    mx = statistics.fmean(u for u, _ in pts)
    my = statistics.fmean(v for _, v in pts)
    sxx = sum((u - mx) ** 2 for u, _ in pts)
    if sxx == 0:
        return None
    return sum((u - mx) * (v - my) for u, v in pts) / sxx


@dataclass(frozen=True)
class QndReport:
    p: int
    t: int
    epsilons: tuple[Fraction, ...]
    fractions: tuple[float, ...]
    ci_low: tuple[float, ...]
    ci_high: tuple[float, ...]
    counts: tuple[int, ...]
    used: int
    excluded: int
    slope: float | None
    seed: int
    federer: Fraction = Fraction(1)

    def monotone(self) -> bool:
        """Fractions nondecreasing in epsilon."""
        order = sorted(range(len(self.epsilons)), key=lambda i: self.epsilons[i])
        fr = [self.fractions[i] for i in order]
        return all(a <= b for a, b in zip(fr, fr[1:]))

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "t": self.t,
            "seed": self.seed,
            "epsilon": [str(e) for e in self.epsilons],
            "fraction": list(self.fractions),
            "ci_low": list(self.ci_low),
            "ci_high": list(self.ci_high),
            "count": list(self.counts),
            "used": self.used,
            "excluded_incomplete": self.excluded,
            "slope": self.slope,
            "federer_constant": {"value": str(self.federer), "status": "measured-not-derived"},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def federer_constant(p: int, d: int, levels: int = 3, samples: int = 4000, seed: int = 0) -> Fraction:
    """Largest measured mu(B(x, 3r)) / mu(B(x, r)) over balls of radius r = p^-k
    in Z_p^d, k = 0..levels-1, with Haar measure estimated by sampling."""
    rng = trial_rng(seed, "federer", 0)
    pts = [[sample_padic(p, levels + 2, rng).residue for _ in range(d)] for _ in range(samples)]
    worst = Fraction(1)
    for k in range(levels):
        center = [rng.randrange(p ** (levels + 2)) for _ in range(d)]
        # |u - x|_p <= 3 p^-k  iff  u = x mod p^(k - floor(log_p 3))
        k3 = max(0, k - (1 if p <= 3 else 0))
        inner = sum(1 for u in pts if all((a - b) % p**k == 0 for a, b in zip(u, center)))
        outer = sum(1 for u in pts if all((a - b) % p**k3 == 0 for a, b in zip(u, center)))
        if inner:
            worst = max(worst, Fraction(outer, inner))
    return worst


def _qnd_trial(args):
    f, p, t, precision, budget, seed, i = args
    x = sample_point(p, f.d, precision, trial_rng(seed, "qnd", i))
    res = dani_delta(f(x), t, budget=budget, p=p)
    return res.delta if res.complete else None


def qnd_empirical(
    f: PolyMap,
    t: int,
    eps_grid: Sequence | None = None,
    trials: int = 1000,
    budget: int | None = None,
    seed: int = 0,
    p: int = 3,
    precision: int | None = None,
    workers: int | None = None,
) -> QndReport:
    """Fraction of Haar-random x with delta(g_t u_f(x) D^(n+1)) < eps."""
    if trials < 1:
        raise InvalidInput("trials must be positive")
    if eps_grid is None:
        eps_grid = [Fraction(p) ** (-k) for k in range(1, 7)]
    eps = tuple(sorted({Fraction(e) for e in eps_grid}))
    if precision is None:
        precision = int(math.ceil(t)) + 40
    args = [(f, p, t, precision, budget, seed, i) for i in range(trials)]
    deltas = [d for d in _map_workers(_qnd_trial, args, workers)]
    good = [d for d in deltas if d is not None]
    counts, fr, lo, hi = [], [], [], []
    for e in eps:
        em = _mag(e, p)
        k = sum(1 for d in good if d < em)
        counts.append(k)
        fr.append(k / len(good) if good else 0.0)
        a, b = wilson_interval(k, len(good))
        lo.append(a)
        hi.append(b)
    slope = loglog_slope([float(e) for e in eps], fr)
    fed = federer_constant(p, f.d, seed=seed)
    return QndReport(p, t, eps, tuple(fr), tuple(lo), tuple(hi), tuple(counts), len(good), len(deltas) - len(good), slope, seed, fed)


def _mag(e: Fraction, p: int) -> ExactMag:
    return ExactMag(p, e)


# -- pushforward exponents --------------------------------------------------------


@dataclass(frozen=True)
class PushforwardSummary:
    kind: str
    estimates: tuple[float, ...]
    median: float
    p5: float
    subspace_value: float | None = None
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "estimates": [_num(e) for e in self.estimates],
            "median": _num(self.median),
            "p5": _num(self.p5),
            "subspace_exponent": None if self.subspace_value is None else _num(self.subspace_value),
        }


def _num(x: float):
    return "inf" if x == INF else x


def percentile(vals: Sequence[float], q: float) -> float:
    """Nearest-rank percentile (q in [0, 100])."""
    s = sorted(vals)
    if not s:
        raise InvalidInput("no values")
    k = max(1, math.ceil(q / 100 * len(s)))
    return s[k - 1]


def _push_trial(args):
    f, p, kind, bound, precision, seed, i = args
    x = sample_point(p, f.d, precision, trial_rng(seed, "push", i))
    return estimate_exponent(best_profile(f(x), kind, bound, p)).value


def pushforward_exponent_mc(
    f: PolyMap,
    trials: int,
    profile_bound,
    seed: int = 0,
    p: int = 2,
    kind: str = "Zp",
    precision: int = 400,
    subspace: SubspaceParam | None = None,
    subspace_bound=None,
    workers: int | None = None,
) -> PushforwardSummary:
    """Distribution of exponent estimates at f(x) for Haar-random x."""
    if trials < 1:
        raise InvalidInput("trials must be positive")
    args = [(f, p, kind, profile_bound, precision, seed, i) for i in range(trials)]
    est = tuple(_map_workers(_push_trial, args, workers))
    sub = None
    if subspace is not None:
        sub = subspace_exponent(subspace, subspace_bound or profile_bound)
    return PushforwardSummary(kind, est, statistics.median(est), percentile(est, 5), sub, seed)
