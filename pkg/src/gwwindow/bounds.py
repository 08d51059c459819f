"""Explicit tail inequalities for the running maximum of the population
size, checked against Monte Carlo estimates of their left sides.

All bounds concern P(max of Z_0..Z_m >= k).  The reported verdict is
empirical: "holds" when the Monte Carlo upper interval stays below the
right side plus three standard errors, otherwise "violated_beyond_3SE";
a grid point whose parameters fall outside a bound's validity region is
"skipped" with a reason.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .laws import OffspringLaw
from .simulate import EstimatorResult, estimate_window_tail

__all__ = [
    "BoundReport",
    "vah1_rhs",
    "doob_rhs",
    "default_y0",
    "truncated_variance_bound_gap",
    "check_bound",
    "check_grid",
    "running_max_scaling",
    "DEFAULT_GRID",
]

DEFAULT_GRID = tuple((m, k) for m in (1, 4, 16) for k in (4, 8, 16))


@dataclass
class BoundReport:
    bound_name: str
    parameters: dict
    rhs_value: float
    mc_lhs: EstimatorResult | None
    verdict: str
    note: str = ""


def vah1_rhs(law: OffspringLaw, m: int, k: int, y0: float, R: int) -> float:
    """Right side of the exponential-moment tail estimate:

        (y0 + 1/R) [ (1 + 1/(1/y0 + (e^2 + e^(y0 R)) m B_R / 2))^k - 1 ]^-1
        + m P(xi > R)

    evaluated in the log domain so that large y0*R cannot overflow.
    """
    if m < 0 or k < 1 or y0 <= 0 or R < 2:
        raise ValueError("need m >= 0, k >= 1, y0 > 0, R >= 2")
    bterm = m * law.truncated_variance(R) / 2.0
    if bterm == 0.0:
        q = y0
    else:
        # log of (e^2 + e^(y0 R)) * m B_R / 2, stable for huge y0*R
        log_a = np.logaddexp(2.0, y0 * R) + math.log(bterm)
        if log_a > 700.0:
            q = math.exp(-log_a)        # 1/y0 is negligible against e^log_a
        else:
            q = 1.0 / (1.0 / y0 + math.exp(log_a))
    tail = m * float(law.tail(R))
    exponent = k * math.log1p(q)
    if exponent > 700.0:                    # the geometric factor vanishes
        return tail
    growth = math.expm1(exponent)
    if growth == 0.0:
        return math.inf
    return (y0 + 1.0 / R) / growth + tail


def doob_rhs(law: OffspringLaw, m: int, k: int) -> float:
    """Second-moment maximal-inequality bound (m B_inf + 1) / k^2.

    Only meaningful for offspring laws with finite variance.
    """
    if m < 0 or k < 1:
        raise ValueError("need m >= 0 and k >= 1")
    b = law.variance_factor()
    if not math.isfinite(b):
        raise ValueError("offspring variance is infinite; bound not applicable")
    return (m * b + 1.0) / k**2


def default_y0(law: OffspringLaw, m: int, k: int) -> float | None:
    """The tuned exponent level (2/k) log(k/(m B_k)) - (3/k) loglog(k/(m B_k)).

    Defined (and positive) only when k/(m B_k) exceeds e; returns None
    outside that regime.
    """
    bk = law.truncated_variance(k)
    if bk <= 0 or m <= 0:
        return None
    ratio = k / (m * bk)
    if ratio <= math.e:
        return None
    y0 = (2.0 / k) * math.log(ratio) - (3.0 / k) * math.log(math.log(ratio))
    return y0 if y0 > 0 else None


def truncated_variance_bound_gap(law: OffspringLaw, R: int) -> float:
    """Slack in B_R <= 2 sum_{1<=j<=R} j P(xi > j); nonnegative when the
    inequality holds (zero means equality)."""
    if R < 2:
        raise ValueError("R must be >= 2")
    j = np.arange(1, R + 1)
    rhs = 2.0 * float((j * law.tail(j)).sum())
    return rhs - law.truncated_variance(R)


def check_bound(bound_name: str, law: OffspringLaw, m: int, k: int,
                n_samples: int = 10**5, rng=None, R: int | None = None,
                y0: float | None = None) -> BoundReport:
    """Monte Carlo check of one inequality at one parameter point.

    The left side P(max of Z_0..Z_m >= k) is estimated over finite
    horizons, so it is always decided (no censoring).
    """
    params = {"m": m, "k": k}
    if bound_name == "doob":
        try:
            rhs = doob_rhs(law, m, k)
        except ValueError as err:
            return BoundReport(bound_name, params, math.nan, None,
                               "skipped", str(err))
    elif bound_name == "vah1":
        if R is None:
            R = max(k // 2, 2)
        if y0 is None:
            y0 = default_y0(law, m, k)
        if y0 is None:
            return BoundReport(bound_name, {**params, "R": R}, math.nan, None,
                               "skipped", "k/(m B_k) <= e: y0 undefined")
        params.update(R=R, y0=y0)
        rhs = vah1_rhs(law, m, k, y0, R)
    else:
        raise ValueError(f"unknown bound {bound_name!r}")
    lhs = estimate_window_tail(law, 1, k, n_samples, rng=rng, horizon=m)
    ok = lhs.censor_hi <= rhs + 3.0 * lhs.std_error
    return BoundReport(bound_name, params, rhs, lhs,
                       "holds" if ok else "violated_beyond_3SE")


def check_grid(law: OffspringLaw, rng, grid=DEFAULT_GRID,
               n_samples: int = 10**5) -> list[BoundReport]:
    """Both inequalities over the shipped (m, k) grid."""
    reports = []
    for i, (m, k) in enumerate(grid):
        from .laws import RngStream
        stream = rng if isinstance(rng, RngStream) else RngStream(seed=int(rng))
        reports.append(check_bound("doob", law, m, k, n_samples,
                                   stream.substream(2 * i)))
        reports.append(check_bound("vah1", law, m, k, n_samples,
                                   stream.substream(2 * i + 1)))
    return reports


def running_max_scaling(law: OffspringLaw, rng, ks=(64, 256, 1024),
                        n_samples: int = 10**5) -> list[dict]:
    """Boundedness diagnostic: P(max of Z_0..Z_m >= k) k^2/(m B_k) over a
    doubling grid with m = k/16; the ratio staying O(1) reflects the
    truncated-variance tail estimate (constants are not pinned down, so
    this is a scaling check, not a bound)."""
    from .laws import RngStream
    stream = rng if isinstance(rng, RngStream) else RngStream(seed=int(rng))
    out = []
    for i, k in enumerate(ks):
        m = max(k // 16, 1)
        lhs = estimate_window_tail(law, 1, k, n_samples,
                                   rng=stream.substream(i), horizon=m)
        bk = law.truncated_variance(k)
        ratio = lhs.estimate * k**2 / (m * bk) if bk > 0 else math.nan
        out.append({"k": k, "m": m, "p_hat": lhs.estimate,
                    "std_error": lhs.std_error, "ratio": ratio})
    return out
