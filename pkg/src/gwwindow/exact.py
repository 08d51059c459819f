"""Deterministic computation of the explicit recursions and constants.

Everything here is a pure function of the offspring law: extinction
iterates and survival probabilities, the derivative products d_n, the
restricted first moments a_j, the total-progeny distribution (functional
equation and independent convolution oracle), the bivariate extinct-window
series, small-case window-tail enumeration, and the Gamma-function tail
constants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .laws import OffspringLaw

__all__ = [
    "IterateTable",
    "TruncatedSeries",
    "extinction_iterates",
    "survival_probability",
    "derivative_products",
    "restricted_means",
    "total_progeny_pmf",
    "dwass_pmf",
    "dwass_probability",
    "extinct_progeny_series",
    "window_tail_enum",
    "survival_root",
    "tail_constants",
    "binary_total_progeny_tail",
]


# ---------------------------------------------------------------------------
# Truncated nonnegative power series


@dataclass
class TruncatedSeries:
    """Coefficients of a probability generating function up to a cutoff.

    ``residual_mass`` is the probability carried by degrees beyond the cap;
    it is tracked, never silently dropped.
    """

    coeffs: np.ndarray
    degree_cap: int
    residual_mass: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.min() < -1e-14:
            raise ValueError(f"negative series coefficient {c.min()}")
        self.coeffs = np.maximum(c, 0.0)
        if self.residual_mass < 0:
            self.residual_mass = 0.0

    def probability(self, n: int) -> float:
        return float(self.coeffs[n]) if n <= self.degree_cap else 0.0

    def tail_probability(self, n: int) -> float:
        """P(value >= n), exact up to the tracked residual mass."""
        return float(self.coeffs[n:].sum()) + self.residual_mass


def _mul(a: np.ndarray, b: np.ndarray, cap: int) -> np.ndarray:
    """Product of two coefficient arrays, truncated to degree < cap."""
    if min(len(a), len(b)) <= 48:
        out = np.convolve(a, b)[:cap]
    else:
        out = fftconvolve(a, b)[:cap]
    return np.maximum(out, 0.0)


def _compose(coeffs: np.ndarray, h: np.ndarray, cap: int) -> np.ndarray:
    """sum_k coeffs[k] * h^k truncated to degree < cap; requires h[0] == 0.

    Horner from the top; terms with k >= cap cannot contribute.
    """
    c = np.trim_zeros(np.asarray(coeffs[:cap], dtype=float), "b")
    if len(c) == 0:
        return np.zeros(min(cap, 1))
    out = np.array([c[-1]])
    for k in range(len(c) - 2, -1, -1):
        out = _mul(out, h, cap)
        if len(out) == 0:
            out = np.zeros(1)
        out[0] += c[k]
    return out


def _series_inv(a: np.ndarray, cap: int) -> np.ndarray:
    """Reciprocal power series of a (a[0] != 0) by Newton doubling."""
    g = np.array([1.0 / a[0]])
    prec = 1
    while prec < cap:
        prec = min(2 * prec, cap)
        ag = fftconvolve(a[:prec], g)[:prec]
        two = -ag
        two[0] += 2.0
        g = fftconvolve(g, two)[:prec]
    return g


# ---------------------------------------------------------------------------
# Extinction iterates and derived sequences


@dataclass
class IterateTable:
    """f_k(0), Q(k) = 1 - f_k(0), d_k, and a_k for k = 0..n.

    Index 0 entries are the conventions f_0(0) = 0, Q(0) = 1, a_0 = 0;
    d_values[0] is unused (d is defined from k = 1, with d_1 = 1).
    """

    f0_values: np.ndarray
    Q_values: np.ndarray
    d_values: np.ndarray
    a_values: np.ndarray


def extinction_iterates(law: OffspringLaw, n: int) -> IterateTable:
    """Iterate f_k(0) = f(f_{k-1}(0)) to depth n, with d and a alongside.

    The iteration runs on Q(k) = 1 - f_k(0) through the cancellation-free
    survival map, keeping Q accurate in relative terms even when it is
    tiny.  d_{k+1} = d_k * f'(f_k(0)) with d_1 = 1 (empty product);
    a_k = f_k(0) + f'(f_{k-1}(0)) * a_{k-1} with a_1 = f(0).
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    Q = np.empty(n + 1)
    d = np.empty(n + 1)
    a = np.empty(n + 1)
    Q[0], a[0] = 1.0, 0.0
    d[0] = math.nan
    dpgf = law.pgf_derivative
    prev = 1.0
    dk = 1.0
    ak = 0.0
    for k in range(1, n + 1):
        cur = law.survival_map(prev)
        d[k] = dk
        dk *= dpgf(1.0 - cur)
        fp = dpgf(1.0 - prev)
        ak = (1.0 - cur) + fp * ak if k > 1 else 1.0 - cur
        Q[k] = cur
        a[k] = ak
        prev = cur
    return IterateTable(1.0 - Q, Q, d, a)


def survival_probability(law: OffspringLaw, n: int) -> float:
    """Q(n) = P(Z_n > 0) from one ancestor."""
    q = 1.0
    for _ in range(n):
        q = law.survival_map(q)
    return q


def derivative_products(law: OffspringLaw, n: int) -> np.ndarray:
    """d_1..d_n (index 0 of the result is d_1 = 1)."""
    return extinction_iterates(law, n).d_values[1:]


def restricted_means(law: OffspringLaw, j: int) -> np.ndarray:
    """a_1..a_j, the expectations E{S_0(k); Z_k = 0}."""
    return extinction_iterates(law, j).a_values[1:]


# ---------------------------------------------------------------------------
# Total progeny


def total_progeny_pmf(law: OffspringLaw, n_max: int) -> TruncatedSeries:
    """Distribution of the total progeny S_0(infinity) up to degree n_max.

    Solves h(s) = s f(h(s)) for the truncated power series h by Newton
    iteration with precision doubling; every coefficient of degree
    <= n_max is exact to floating precision.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    cap = n_max + 1
    p = law.pmf_vector(n_max)
    dp = p * np.arange(len(p))       # coefficients of f'
    dp = dp[1:] if len(dp) > 1 else np.zeros(1)

    h = np.zeros(2)
    h[1] = p[0]
    prec = 2
    for it in range(200):
        prec = min(2 * prec, cap)
        hh = np.zeros(prec)
        hh[: len(h)] = h[:prec]
        fh = _compose(p, hh, prec)
        F = hh.copy()
        F[1:] -= fh[: prec - 1]       # h - s f(h)
        fph = _compose(dp, hh, prec)
        denom = -np.concatenate([[0.0], fph[: prec - 1]])
        denom[0] += 1.0               # 1 - s f'(h)
        step = fftconvolve(F, _series_inv(denom, prec))[:prec]
        h = np.maximum(hh - step, 0.0)
        if prec == cap and np.max(np.abs(step)) < 1e-15:
            break
    else:
        raise RuntimeError("total-progeny series iteration failed to converge")
    resid = 1.0 - float(h.sum())
    return TruncatedSeries(h, n_max, max(resid, 0.0))


def dwass_pmf(law: OffspringLaw, n_max: int) -> np.ndarray:
    """Independent oracle: P(S_0(inf) = n) = (1/n) P(xi_1+..+xi_n = n-1).

    Returns the array for n = 0..n_max by iterated exact convolution.
    """
    p = law.pmf_vector(n_max)
    out = np.zeros(n_max + 1)
    conv = np.array([1.0])
    for n in range(1, n_max + 1):
        conv = _mul(conv, p, n_max)
        if n - 1 < len(conv):
            out[n] = conv[n - 1] / n
    return out


def dwass_probability(law: OffspringLaw, n: int) -> float:
    """Single total-progeny probability via binary-powered convolution."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > 2 * 10**4:
        raise ValueError("convolution budget exceeded (n too large)")
    p = law.pmf_vector(n - 1) if n > 1 else law.pmf_vector(0)
    acc = None
    base = p
    e = n
    while e:
        if e & 1:
            acc = base if acc is None else _mul(acc, base, n)
        e >>= 1
        if e:
            base = _mul(base, base, n)
    return float(acc[n - 1]) / n if n - 1 < len(acc) else 0.0


def binary_total_progeny_tail(n: int) -> float:
    """P(S_0(inf) >= n) for the binary law, from the closed form
    P(S = 2m+1) = C(2m, m) 2^-(2m+1) / (m+1), summed by stable recurrence."""
    if n <= 1:
        return 1.0
    M = (n - 1 + 1) // 2            # smallest m with 2m+1 >= n
    if M == 0:
        return 1.0
    m = np.arange(M - 1, dtype=float)
    ratios = (2.0 * m + 1.0) / (2.0 * (m + 2.0))
    probs = 0.5 * np.concatenate([[1.0], np.cumprod(ratios)])
    return float(1.0 - probs.sum())


# ---------------------------------------------------------------------------
# Bivariate series of (total progeny, extinct by generation j)


def extinct_progeny_series(law: OffspringLaw, j: int, degree_cap: int) -> TruncatedSeries:
    """Coefficients of E{s^{S_0(j)}; Z_j = 0} via g_j = s f(g_{j-1}), g_0 = 0.

    At degree n <= j the coefficients agree with the total-progeny law
    (total progeny n forces extinction by generation n), and the value at
    s = 1 equals f_j(0).
    """
    if j < 1:
        raise ValueError("j must be >= 1")
    cap = degree_cap + 1
    p = law.pmf_vector(degree_cap)
    g = np.zeros(1)
    for _ in range(j):
        gg = np.zeros(cap)
        gg[: min(len(g), cap)] = g[:cap]
        fg = _compose(p, gg, cap)
        g = np.concatenate([[0.0], fg[: cap - 1]])  # multiply by s
    total = float(g.sum())
    fj0 = 1.0 - survival_probability(law, j)
    return TruncatedSeries(g, degree_cap, max(fj0 - total, 0.0))


# ---------------------------------------------------------------------------
# Brute-force window-tail oracle


def window_tail_enum(law: OffspringLaw, j: int, n: int, budget: int = 200000,
                     prune: float = 1e-15) -> tuple[float, float]:
    """Exact interval [lo, hi] for P(M(j) >= n) by state-space enumeration.

    States are the last min(j, steps) generation sizes with exact
    transition probabilities from z-fold pmf convolution; branches are
    pruned once the event is decided (window sum >= n, or extinction).
    Probability mass left unexplored widens the interval, never biases it.
    """
    if j < 1 or n < 1:
        raise ValueError("j and n must be >= 1")
    if n == 1:
        return 1.0, 1.0

    # transition kernels: row z -> distribution of sum of z offspring,
    # trunc at n (any transition to >= n is an immediate success)
    p = law.pmf_vector(n)
    kernels = {1: p.copy()}

    def kernel(z: int) -> np.ndarray:
        if z not in kernels:
            half = kernel(z // 2)
            k = _mul(half, kernel(z - z // 2), n + 1)
            kernels[z] = k
        return kernels[z]

    lo = 0.0
    lost = 0.0
    states = {(1,): 1.0}
    expansions = 0
    while states:
        nxt: dict = {}
        for window, prob in states.items():
            expansions += 1
            if expansions > budget:
                lost += prob
                continue
            z = window[-1]
            ker = kernel(z)
            head = sum(window[-(j - 1):]) if j > 1 else 0
            # success outright when the new window sum reaches n
            thresh = max(n - head, 0)
            succ = 1.0 - float(ker[:thresh].sum())
            lo += prob * succ
            for zp in range(thresh):
                q = float(ker[zp]) if zp < len(ker) else 0.0
                if zp == 0 or q * prob < prune:
                    if zp != 0:
                        lost += q * prob
                    continue
                nw = (window + (zp,))[-(max(j - 1, 1)):] if j > 1 else (zp,)
                nxt[nw] = nxt.get(nw, 0.0) + q * prob
        states = nxt
    return lo, min(lo + lost, 1.0)


# ---------------------------------------------------------------------------
# Asymptotic roots and constants


def survival_root(law: OffspringLaw, n: int) -> float:
    """Solve alpha q^alpha L(q) = 1/n for q by bisection on (0, 1).

    The left side equals alpha (f(1-q) - (1-q)) / q, strictly increasing
    in q, so the root is unique.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    a = law.alpha
    target = 1.0 / n

    def g(q: float) -> float:
        return a * (law.pgf(1.0 - q) - (1.0 - q)) / q

    lo, hi = 1e-300, 1.0
    if g(hi) < target:
        return 1.0
    for _ in range(200):
        mid = math.sqrt(lo * hi) if hi / max(lo, 1e-290) > 4 else 0.5 * (lo + hi)
        if g(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * hi:
            break
    return 0.5 * (lo + hi)


def tail_constants(alpha: float, y: float) -> dict:
    """The Gamma-function constants of the tail laws.

    term2_constant = (alpha*y)^(1/(1+alpha)) / Gamma(alpha/(1+alpha));
    cor22_constant is the same expression at y = 1.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0,1]")
    if y <= 0.0:
        raise ValueError("y must be positive")
    g = math.gamma(alpha / (1.0 + alpha))
    return {
        "term2_constant": (alpha * y) ** (1.0 / (1.0 + alpha)) / g,
        "cor22_constant": alpha ** (1.0 / (1.0 + alpha)) / g,
    }
