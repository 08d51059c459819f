"""Critical offspring distributions of index 1 + alpha.

Every shipped law has mean offspring exactly 1 and probability generating
function of the form f(s) = s + (1-s)^(1+alpha) * L(1-s) with L slowly
varying at 0 (for the Zipf family this holds asymptotically only).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.special import gammaln
from scipy.special import zeta as _zeta  # zeta(x, q) is the Hurwitz zeta

DEFAULT_SEED = 90210608


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream keyed by (seed, stream_id).

    Identical (seed, stream_id) always reproduces the identical draw
    sequence.  Substreams for parallel workers are derived with
    ``substream`` so that results do not depend on the worker count.
    """

    seed: int = DEFAULT_SEED
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence((self.seed, self.stream_id))
        return np.random.Generator(np.random.PCG64(ss))

    def substream(self, i: int) -> "RngStream":
        return RngStream(self.seed, (self.stream_id << 24) ^ (i + 1))

    def provenance(self) -> dict:
        return {"seed": self.seed, "stream_id": self.stream_id}


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, int):
        return RngStream(rng).generator()
    raise TypeError(f"cannot interpret {rng!r} as a random stream")


# ---------------------------------------------------------------------------
# Law definition


@dataclass(frozen=True)
class OffspringLaw:
    """A validated critical offspring distribution of index 1 + alpha.

    The head of the pmf (p_0 .. p_K) is tabulated for alias sampling; the
    probability mass beyond K is carried analytically by ``tail`` so that
    heavy tails are never truncated.
    """

    family: str                      # "binary" | "geometric" | "stable" | "zipf"
    alpha: float
    params: dict = field(default_factory=dict)
    head_probs: np.ndarray = field(default=None, repr=False)
    tail_mass: float = 0.0           # P(xi > K), carried analytically

    @property
    def head_cutoff(self) -> int:
        return len(self.head_probs) - 1

    # -- exact analytics ----------------------------------------------------

    def pmf(self, k: int) -> float:
        """P(xi = k), exact for every k (closed form beyond the head)."""
        if k < 0:
            return 0.0
        if k <= self.head_cutoff:
            return float(self.head_probs[k])
        if self.family in ("binary", "geometric"):
            return 0.0 if self.family == "binary" else 2.0 ** -(k + 1)
        if self.family == "stable":
            return float(self.tail(k - 1) - self.tail(k))
        if self.family == "zipf":
            return float(self.params["theta"] * k ** -(2.0 + self.alpha))
        raise AssertionError(self.family)

    def pmf_vector(self, k_max: int) -> np.ndarray:
        """p_0 .. p_{k_max} as an array."""
        K = self.head_cutoff
        out = np.zeros(k_max + 1)
        out[: min(K, k_max) + 1] = self.head_probs[: k_max + 1]
        if k_max > K:
            ks = np.arange(K + 1, k_max + 1)
            if self.family == "geometric":
                out[K + 1 :] = 2.0 ** -(ks + 1.0)
            elif self.family == "stable":
                out[K + 1 :] = self.tail(ks - 1) - self.tail(ks)
            elif self.family == "zipf":
                out[K + 1 :] = self.params["theta"] * ks ** -(2.0 + self.alpha)
        return out

    def tail(self, k) -> np.ndarray | float:
        """P(xi > k), vectorized, exact for integer k >= 0."""
        k = np.asarray(k, dtype=float)
        if self.family == "binary":
            return np.where(k < 0, 1.0, np.where(k < 2, 0.5, 0.0))
        if self.family == "geometric":
            return 2.0 ** -(k + 1.0)
        if self.family == "stable":
            a, c = self.alpha, self.params["c"]
            if a == 1.0:  # three-point law {0, 1, 2} with p_0 = p_2 = c
                return np.where(k < 0, 1.0, np.where(k < 1, 1.0 - c, np.where(k < 2, c, 0.0)))
            # P(xi > k) = c * |binom(alpha, k)|, via the Gamma representation
            out = np.where(
                k < 1,
                1.0 - c * (k >= 0),
                c * a * np.exp(gammaln(np.maximum(k, 1) - a) - gammaln(np.maximum(k, 1) + 1))
                / math.gamma(1.0 - a),
            )
            return out
        if self.family == "zipf":
            theta = self.params["theta"]
            p0, p1 = self.head_probs[0], self.head_probs[1]
            out = theta * _zeta(2.0 + self.alpha, np.maximum(k, 1) + 1.0)
            return np.where(k < 1, 1.0 - p0 * (k >= 0), out)
        raise AssertionError(self.family)

    def pgf(self, s: float) -> float:
        """f(s) = E s^xi on [0, 1]."""
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"pgf argument must lie in [0,1], got {s}")
        if self.family == "binary":
            return 0.5 * (1.0 + s * s)
        if self.family == "geometric":
            return 1.0 / (2.0 - s)
        if self.family == "stable":
            return s + self.params["c"] * (1.0 - s) ** (1.0 + self.alpha)
        if self.family == "zipf":
            p0, p1 = self.head_probs[0], self.head_probs[1]
            theta = self.params["theta"]
            return float(p0 + p1 * s + theta * (_polylog(2.0 + self.alpha, s) - s))
        raise AssertionError(self.family)

    def pgf_derivative(self, s: float) -> float:
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"pgf argument must lie in [0,1], got {s}")
        if self.family == "binary":
            return s
        if self.family == "geometric":
            return 1.0 / (2.0 - s) ** 2
        if self.family == "stable":
            return 1.0 - self.params["c"] * (1.0 + self.alpha) * (1.0 - s) ** self.alpha
        if self.family == "zipf":
            p1 = self.head_probs[1]
            theta = self.params["theta"]
            if s == 0.0:
                return float(p1)
            return float(p1 + theta * (_polylog(1.0 + self.alpha, s) - s) / s)
        raise AssertionError(self.family)

    def survival_map(self, q: float) -> float:
        """One survival-probability step: q -> 1 - f(1 - q).

        Evaluated as q - q^(1+alpha) L(q), which stays accurate in relative
        terms as q -> 0, where the direct form 1 - f(1-q) would cancel.
        """
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"q must lie in [0,1], got {q}")
        if q == 0.0:
            return 0.0
        if self.family == "geometric":
            return q / (1.0 + q)
        return q - q ** (1.0 + self.alpha) * self.slowly_varying_L(q)

    def slowly_varying_L(self, x: float) -> float:
        """L(x) = (f(1-x) - (1-x)) / x^(1+alpha), for x in (0, 1]."""
        if not 0.0 < x <= 1.0:
            raise ValueError(f"L is defined on (0,1], got {x}")
        if self.family == "stable":
            return float(self.params["c"])
        if self.family == "binary":
            return 0.5
        if self.family == "geometric":
            return 1.0 / (1.0 + x)
        if x < 1e-4:
            # f(1-x) - (1-x) is O(x^(1+alpha)); evade cancellation
            import mpmath

            with mpmath.workdps(40):
                p0, p1 = self.head_probs[0], self.head_probs[1]
                theta = self.params["theta"]
                s = mpmath.mpf(1) - mpmath.mpf(x)
                f = p0 + p1 * s + theta * (mpmath.polylog(2.0 + self.alpha, s) - s)
                return float((f - s) / mpmath.mpf(x) ** (1.0 + self.alpha))
        return (self.pgf(1.0 - x) - (1.0 - x)) / x ** (1.0 + self.alpha)

    def truncated_variance(self, R: int) -> float:
        """B_R = E{xi(xi-1); xi <= R}."""
        if R < 1:
            raise ValueError("R must be >= 1")
        ks = np.arange(2, R + 1)
        if len(ks) == 0:
            return 0.0
        return float(np.sum(ks * (ks - 1.0) * self.pmf_vector(R)[2:]))

    def variance_factor(self) -> float:
        """B_infinity = E xi(xi-1) = f''(1); infinite for heavy-tailed laws."""
        if self.family == "binary":
            return 1.0
        if self.family == "geometric":
            return 2.0
        if self.family == "stable" and self.alpha == 1.0:
            return 2.0 * self.params["c"]
        return math.inf

    def mean_offspring(self) -> float:
        """Numerically accumulated mean: head sum + analytic tail remainder."""
        ks = np.arange(len(self.head_probs))
        head = float(np.sum(ks * self.head_probs))
        K = self.head_cutoff
        if self.family == "binary":
            rem = 0.0
        elif self.family == "geometric":
            rem = (K + 2.0) * 2.0 ** -(K + 1.0)
        elif self.family == "stable":
            # E{xi; xi > K} = (K+1) P(xi>K) + sum_{k>K} P(xi>k)
            a, c = self.alpha, self.params["c"]
            if a == 1.0:
                rem = 0.0
            else:
                s = c * math.exp(gammaln(K + 1.0 - a) - gammaln(K + 1.0) - gammaln(1.0 - a))
                rem = (K + 1.0) * float(self.tail(K)) + s
        elif self.family == "zipf":
            theta = self.params["theta"]
            rem = theta * float(_zeta(1.0 + self.alpha, K + 1.0))
        return head + rem

    # -- sampling -----------------------------------------------------------

    @cached_property
    def _alias(self):
        probs = np.append(self.head_probs, self.tail_mass)
        return _build_alias(probs)

    def sample(self, rng) -> int:
        return int(self.sample_array(1, rng)[0])

    def sample_array(self, n: int, rng) -> np.ndarray:
        """n iid offspring draws (exact law: alias head + analytic tail)."""
        gen = as_generator(rng)
        if self.family == "binary":
            return 2 * (gen.random(n) < 0.5).astype(np.int64)
        if self.family == "geometric":
            return gen.geometric(0.5, size=n).astype(np.int64) - 1
        accept, alias = self._alias
        K1 = len(accept)
        idx = gen.integers(0, K1, size=n)
        u = gen.random(n)
        out = np.where(u < accept[idx], idx, alias[idx]).astype(np.int64)
        tail_sentinel = K1 - 1
        t = np.flatnonzero(out == tail_sentinel)
        if len(t):
            out[t] = self._sample_tail(len(t), gen)
        return out

    def _sample_tail(self, n: int, gen: np.random.Generator) -> np.ndarray:
        """Inverse-CDF draws from {K+1, K+2, ...} via the analytic tail."""
        K = self.head_cutoff
        u = gen.random(n) * self.tail_mass
        # smallest k > K with tail(k) < u, by doubling then bisection
        lo = np.full(n, K, dtype=np.int64)          # tail(lo) >= u
        hi = np.full(n, 2 * K + 2, dtype=np.int64)
        for _ in range(120):
            bad = self.tail(hi) >= u
            if not np.any(bad):
                break
            hi[bad] *= 2
        while np.any(hi - lo > 1):
            mid = (lo + hi) // 2
            ge = self.tail(mid) >= u
            lo = np.where(ge, mid, lo)
            hi = np.where(ge, hi, mid)
        return hi

    def offspring_sum(self, z: np.ndarray, rng) -> np.ndarray:
        """Next generation sizes: sum of z[i] iid offspring draws, per entry.

        Exact in law; binary and geometric use closed-form convolutions
        (binomial / negative binomial), heavy-tailed families draw per
        individual through the alias table.
        """
        gen = as_generator(rng)
        z = np.asarray(z, dtype=np.int64)
        if self.family == "binary":
            return 2 * gen.binomial(z, 0.5)
        if self.family == "geometric":
            out = np.zeros_like(z)
            pos = z > 0
            if np.any(pos):
                out[pos] = gen.negative_binomial(z[pos], 0.5)
            return out
        out = np.zeros_like(z)
        pos = np.flatnonzero(z)
        if len(pos) == 0:
            return out
        counts = z[pos]
        draws = self.sample_array(int(counts.sum()), gen)
        bounds = np.concatenate([[0], np.cumsum(counts)[:-1]])
        out[pos] = np.add.reduceat(draws, bounds)
        return out

    # -- serialization ------------------------------------------------------

    def spec(self) -> dict:
        p = {k: v for k, v in self.params.items() if k in ("c", "tail_weight")}
        return {"family": self.family, "alpha": self.alpha, "params": p}


def _polylog(s: float, x: float) -> float:
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return float(_zeta(s, 1.0))
    import mpmath

    return float(mpmath.polylog(s, x))


def _build_alias(probs: np.ndarray):
    """Vose alias table; returns (acceptance, alias) arrays."""
    n = len(probs)
    scaled = probs * n / probs.sum()
    accept = np.zeros(n)
    alias = np.zeros(n, dtype=np.int64)
    small = [i for i, q in enumerate(scaled) if q < 1.0]
    large = [i for i, q in enumerate(scaled) if q >= 1.0]
    scaled = scaled.copy()
    while small and large:
        s, l = small.pop(), large.pop()
        accept[s] = scaled[s]
        alias[s] = l
        scaled[l] -= 1.0 - scaled[s]
        (small if scaled[l] < 1.0 else large).append(l)
    for i in small + large:
        accept[i] = 1.0
    return accept, alias


# ---------------------------------------------------------------------------
# Families

_HEAD_TARGET = 1e-9  # residual head mass for alpha=1 families


def binary_law() -> OffspringLaw:
    """p_0 = p_2 = 1/2; f(s) = (1+s^2)/2, alpha = 1, L = 1/2."""
    return OffspringLaw("binary", 1.0, {}, np.array([0.5, 0.0, 0.5]), 0.0)


def geometric_law() -> OffspringLaw:
    """p_k = 2^-(k+1); f(s) = 1/(2-s), alpha = 1, L(x) = 1/(1+x)."""
    K = 40  # 2^-41 < 1e-9 residual mass
    head = 2.0 ** -(np.arange(K + 1) + 1.0)
    return OffspringLaw("geometric", 1.0, {}, head, 2.0 ** -(K + 1.0))


def stable_law(alpha: float, c: float, head_cutoff: int = 4096) -> OffspringLaw:
    """f(s) = s + c (1-s)^(1+alpha); pmf from the binomial series.

    Requires 0 < c <= 1/(1+alpha) so every coefficient is nonnegative
    (c = 1/(1+alpha), meaning p_1 = 0, is allowed).
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0,1], got {alpha}")
    if not 0.0 < c <= 1.0 / (1.0 + alpha):
        raise ValueError(f"need 0 < c <= 1/(1+alpha) = {1/(1+alpha):.6g}, got {c}")
    K = head_cutoff
    head = np.zeros(K + 1)
    head[0] = c
    head[1] = 1.0 - c * (1.0 + alpha)
    if K >= 2:
        # |binom(1+alpha, k)| by the multiplicative recurrence, no Gamma
        # cancellation: p_{k+1} = p_k (k - 1 - alpha) / (k + 1)
        head[2] = c * (1.0 + alpha) * alpha / 2.0
        for k in range(2, K):
            head[k + 1] = head[k] * (k - 1.0 - alpha) / (k + 1.0)
    law = OffspringLaw("stable", alpha, {"c": c}, head, 0.0)
    tm = float(law.tail(K))
    object.__setattr__(law, "tail_mass", tm)
    return law


def zipf_law(alpha: float, tail_weight: float = 0.5, head_cutoff: int = 4096) -> OffspringLaw:
    """p_k = theta k^-(2+alpha) for k >= 2, with (p_0, p_1) set so that the
    law is exactly critical and sums to one.

    ``tail_weight`` is the probability-weighted mean carried by the k >= 2
    part; criticality then forces p_1 = 1 - tail_weight and p_0 follows from
    normalization.  Condition (index 1+alpha) holds asymptotically only.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0,1], got {alpha}")
    if not 0.0 < tail_weight < 1.0:
        raise ValueError("tail_weight must lie in (0,1)")
    s1 = float(_zeta(1.0 + alpha, 2.0))   # sum k>=2 of k * k^-(2+alpha)
    s0 = float(_zeta(2.0 + alpha, 2.0))   # sum k>=2 of k^-(2+alpha)
    theta = tail_weight / s1
    p1 = 1.0 - tail_weight
    p0 = theta * (s1 - s0)
    K = head_cutoff
    head = np.zeros(K + 1)
    head[0], head[1] = p0, p1
    ks = np.arange(2, K + 1, dtype=float)
    head[2:] = theta * ks ** -(2.0 + alpha)
    tm = theta * float(_zeta(2.0 + alpha, K + 1.0))
    return OffspringLaw("zipf", alpha, {"theta": theta, "tail_weight": tail_weight}, head, tm)


_FACTORIES = {
    "binary": lambda alpha=1.0, **kw: binary_law(),
    "geometric": lambda alpha=1.0, **kw: geometric_law(),
    "stable": lambda alpha, c, **kw: stable_law(alpha, c),
    "zipf": lambda alpha, tail_weight=0.5, **kw: zipf_law(alpha, tail_weight),
}


def law_from_spec(spec) -> OffspringLaw:
    """Build a law from {family, alpha, params}, a JSON string, or a path."""
    if isinstance(spec, (str, Path)):
        text = str(spec)
        if text.lstrip().startswith("{"):
            spec = json.loads(text)
        else:
            spec = json.loads(Path(spec).read_text())
    family = spec.get("family")
    if family not in _FACTORIES:
        raise ValueError(f"unknown family {family!r}; expected one of {sorted(_FACTORIES)}")
    params = dict(spec.get("params", {}))
    alpha = spec.get("alpha", params.pop("alpha", 1.0))
    return _FACTORIES[family](alpha=alpha, **params)


# ---------------------------------------------------------------------------
# Validation


@dataclass
class LawCheck:
    name: str
    passed: bool
    residual: float
    note: str = ""


@dataclass
class LawReport:
    law_spec: dict
    checks: list
    flags: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def validate(law: OffspringLaw) -> LawReport:
    """Diagnostic report: normalization, criticality, tail-index consistency.

    Reports residuals, never raises.
    """
    checks = []
    flags = []

    total = float(np.sum(law.head_probs)) + law.tail_mass
    checks.append(LawCheck("normalization", abs(total - 1.0) < 1e-12, abs(total - 1.0)))

    mean = law.mean_offspring()
    checks.append(LawCheck("criticality_mean", abs(mean - 1.0) < 1e-10, abs(mean - 1.0)))

    # series / closed-form consistency of the pgf on a grid; the truncated
    # series can fall short of f(s) by at most the residual tail mass
    grid = np.linspace(0.0, 1.0, 21)
    kmax = max(law.head_cutoff, 2000)
    p = law.pmf_vector(kmax)
    slack = float(law.tail(kmax))
    resid = 0.0
    for s in grid:
        series = float(np.polynomial.polynomial.polyval(s, p))
        gap = law.pgf(s) - series
        resid = max(resid, max(gap - slack, -gap, 0.0))
    checks.append(LawCheck("pgf_series_consistency", resid < 1e-10, resid,
                           note=f"series truncated at {kmax}"))

    # derivative asymptotics: (1 - f'(1-x)) / ((1+alpha) x^alpha L(x)) -> 1
    xs = np.geomspace(1e-6, 1e-1, 11)
    ratios = [
        (1.0 - law.pgf_derivative(1.0 - x))
        / ((1.0 + law.alpha) * x ** law.alpha * law.slowly_varying_L(x))
        for x in xs
    ]
    dev = abs(ratios[0] - 1.0)
    loose = law.family == "zipf"
    checks.append(LawCheck("derivative_asymptotics", dev < (0.2 if loose else 1e-6), dev,
                           note="ratio at smallest grid point"))

    # L positive on (0,1]
    Lmin = min(law.slowly_varying_L(x) for x in np.linspace(1e-9, 1.0, 50))
    checks.append(LawCheck("L_positive", Lmin > 0.0, Lmin))

    if law.family == "zipf":
        flags.append("index-condition holds asymptotically only")

    return LawReport(law.spec(), checks, flags)
