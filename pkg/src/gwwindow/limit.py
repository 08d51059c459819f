"""Scaling-limit functionals: the peak unit-window mass V*(T), the
expected-peak curve phi, and the tail decomposition psi.

Two routes are provided.  The generic route approximates the limit process
by a survival-conditioned branching path, rescaled in time by 1/n_scale and
in value by the survival probability Q(n_scale).  For index alpha = 1 an
exact continuous-state cross-check is available: transitions are
compound-Poisson with exponential jumps, and conditioning-to-survive is a
Doob transform with kernel weight 1 - exp(-y/(1-t)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .laws import OffspringLaw, RngStream, as_generator
from .exact import extinction_iterates, survival_probability, tail_constants
from .simulate import (EstimatorResult, conditioned_paths, conditioned_trajectory,
                       extend_paths, _as_stream)

__all__ = [
    "LimitPathGrid",
    "WindowFunctional",
    "PsiResult",
    "gw_limit_path",
    "vstar_of_path",
    "estimate_peak_mean",
    "peak_mean_profile",
    "estimate_phi",
    "estimate_psi",
    "csbp_alpha1_transition",
    "csbp_alpha1_paths",
    "csbp_alpha1_vstar",
]


@dataclass
class LimitPathGrid:
    """One limit-process path sampled on a uniform time grid."""

    times: np.ndarray
    values: np.ndarray
    source: str

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if len(self.times) != len(self.values):
            raise ValueError("times and values must have equal length")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")
        if self.values.min() < 0:
            raise ValueError("values must be nonnegative")


@dataclass
class WindowFunctional:
    """Realized peak sliding unit-window integral of one path."""

    T: float
    vstar: float

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("horizon T must be >= 1")
        if self.vstar < 0:
            raise ValueError("vstar must be >= 0")


@dataclass
class PsiResult:
    """Tail-decomposition estimate: term1 + term2 - term3 with a separate
    bound on the error from cutting the infinite horizon at T_cutoff."""

    estimate: float
    std_error: float
    term1: float
    term2: float
    term3: float
    cutoff_bias: float
    n_paths: int
    seed: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Sliding unit-window integral


def _window_peaks(values: np.ndarray, dt: float) -> np.ndarray:
    """Per-row peak of the unit-window trapezoid integral.

    ``values`` has shape (paths, steps+1) on a grid of spacing dt covering
    [0, T]; windows slide over start times s in [0, T-1] on the grid.
    """
    steps_per_unit = round(1.0 / dt)
    if abs(steps_per_unit * dt - 1.0) > 1e-9:
        raise ValueError("grid spacing must divide the unit window")
    v = np.asarray(values, dtype=float)
    if v.shape[1] - 1 < steps_per_unit:
        raise ValueError("path shorter than one unit window")
    w = 0.5 * (v[:, :-1] + v[:, 1:]) * dt          # trapezoid cell masses
    c = np.concatenate([np.zeros((len(v), 1)), np.cumsum(w, axis=1)], axis=1)
    sums = c[:, steps_per_unit:] - c[:, : c.shape[1] - steps_per_unit]
    return sums.max(axis=1)


def vstar_of_path(path: LimitPathGrid) -> WindowFunctional:
    """Peak unit-window integral of a single path."""
    dt = float(path.times[1] - path.times[0])
    peak = float(_window_peaks(path.values[None, :], dt)[0])
    return WindowFunctional(T=float(path.times[-1]), vstar=peak)


# ---------------------------------------------------------------------------
# Branching-path approximation


def gw_limit_path(law: OffspringLaw, T: float, n_scale: int,
                  rng=None) -> LimitPathGrid:
    """One conditioned, rescaled branching path approximating the limit
    process on [0, T].

    The path survives to generation n_scale (the conditioning time, limit
    time 1) and runs freely afterwards; values are scaled by the survival
    probability at n_scale, times by 1/n_scale.
    """
    if T < 1 or n_scale < 100:
        raise ValueError("need T >= 1 and n_scale >= 100")
    gen = as_generator(rng)
    total = round(T * n_scale)
    traj = conditioned_trajectory(law, n_scale, gen)
    sizes = traj.sizes
    if total > n_scale:
        sizes = extend_paths(law, sizes[None, :], total - n_scale, gen)[0]
    q = survival_probability(law, n_scale)
    times = np.arange(total + 1) / n_scale
    return LimitPathGrid(times, q * sizes, source=f"gw_approx({n_scale})")


_CHUNK_PATHS = 1024     # rows extended and reduced together; caps peak memory


def _gw_ensemble_chunks(law, T, n_scale, n_paths, stream, workers):
    """Scaled conditioned-path matrices, yielded in row chunks.

    The conditioning horizon is n_scale; rows are extended freely to
    T*n_scale and scaled by the survival probability.  Chunking keeps the
    footprint bounded for long horizons."""
    total = round(T * n_scale)
    base = conditioned_paths(law, n_scale, n_paths, stream.substream(1),
                             workers=workers)
    q = survival_probability(law, n_scale)
    gen = stream.substream(2).generator()
    for i in range(0, n_paths, _CHUNK_PATHS):
        chunk = base[i: i + _CHUNK_PATHS]
        if total > n_scale:
            chunk = extend_paths(law, chunk, total - n_scale, gen)
        yield q * chunk


def _mean_result(vals, stream):
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(len(vals)))
    return EstimatorResult(mean, se, len(vals), mean, mean,
                           seed=stream.provenance())


def estimate_peak_mean(law: OffspringLaw, T: float, n_scale: int = 1000,
                       n_paths: int = 2000, rng=None,
                       workers: int = 1) -> EstimatorResult:
    """Monte Carlo mean of the peak unit-window integral V*(T)."""
    if T < 1:
        raise ValueError("T must be >= 1")
    stream = _as_stream(rng)
    vals = np.concatenate([
        _window_peaks(c, 1.0 / n_scale)
        for c in _gw_ensemble_chunks(law, T, n_scale, n_paths, stream, workers)])
    return _mean_result(vals, stream)


def peak_mean_profile(law: OffspringLaw, T_list, n_scale: int = 1000,
                      n_paths: int = 2000, rng=None,
                      workers: int = 1) -> dict[float, EstimatorResult]:
    """Peak means for several horizons from one coupled path ensemble.

    Every horizon reuses the same paths (prefixes of the longest), so the
    profile is pathwise nondecreasing in T and the horizon-to-horizon noise
    is strongly positively correlated -- ideal for slope estimates.
    """
    T_list = sorted(T_list)
    if T_list[0] < 1:
        raise ValueError("all horizons must be >= 1")
    stream = _as_stream(rng)
    vals = {T: [] for T in T_list}
    for chunk in _gw_ensemble_chunks(law, T_list[-1], n_scale, n_paths,
                                     stream, workers):
        for T in T_list:
            vals[T].append(_window_peaks(chunk[:, : round(T * n_scale) + 1],
                                         1.0 / n_scale))
    return {T: _mean_result(np.concatenate(v), stream)
            for T, v in vals.items()}


def estimate_phi(law: OffspringLaw, eta: float, n_scale: int = 1000,
                 n_paths: int = 2000, rng=None,
                 workers: int = 1) -> EstimatorResult:
    """Expected-peak curve: alpha/(2*alpha+1) plus the peak mean at
    horizon 1/eta.

    The constant term is the limit fraction of window mass carried by
    populations already extinct at the window start."""
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    a = law.alpha / (2.0 * law.alpha + 1.0)
    r = estimate_peak_mean(law, 1.0 / eta, n_scale, n_paths, rng, workers)
    return EstimatorResult(a + r.estimate, r.std_error, r.n_samples,
                           a + r.censor_lo, a + r.censor_hi, seed=r.seed)


def _cutoff_constant(law: OffspringLaw, T: float) -> float:
    """Empirical constant c in Q(T n)/Q(n) <= c T^(-1/alpha), from the
    exact survival iterates over a grid of n."""
    grid = [100, 200, 400, 800, 1600]
    n_max = round(T * grid[-1])
    Q = extinction_iterates(law, n_max).Q_values
    return max(Q[round(T * n)] / Q[n] * T ** (1.0 / law.alpha) for n in grid)


def estimate_psi(law: OffspringLaw, y: float, T_cutoff: float = 16.0,
                 n_scale: int = 1000, n_paths: int = 2000, rng=None,
                 workers: int = 1) -> PsiResult:
    """Tail decomposition at level y: P(peak >= 1/y) plus the closed-form
    Gamma constant minus P(total integrated mass >= 1/y).

    Both probabilities are cut at horizon T_cutoff; the reported
    ``cutoff_bias`` bounds the resulting error via the survival-probability
    decay rate measured from the exact iterates.
    """
    if y <= 0:
        raise ValueError("y must be positive")
    if T_cutoff < 4:
        raise ValueError("T_cutoff must be >= 4")
    stream = _as_stream(rng)
    dt = 1.0 / n_scale
    peaks_parts, totals_parts = [], []
    for ens in _gw_ensemble_chunks(law, T_cutoff, n_scale, n_paths,
                                   stream, workers):
        peaks_parts.append(_window_peaks(ens, dt))
        totals_parts.append(np.trapezoid(ens, dx=dt, axis=1))
    peaks = np.concatenate(peaks_parts)
    totals = np.concatenate(totals_parts)
    thresh = 1.0 / y
    ind1 = peaks >= thresh
    ind3 = totals >= thresh
    term1 = float(ind1.mean())
    term3 = float(ind3.mean())
    term2 = tail_constants(law.alpha, y)["term2_constant"]
    diff = ind1.astype(float) - ind3.astype(float)
    se = float(diff.std(ddof=1) / math.sqrt(n_paths))
    bias = _cutoff_constant(law, T_cutoff) * T_cutoff ** (-1.0 / law.alpha)
    return PsiResult(term1 + term2 - term3, se, term1, term2, term3,
                     bias, n_paths, seed=stream.provenance())


# ---------------------------------------------------------------------------
# Exact continuous-state route, index alpha = 1 only


def csbp_alpha1_transition(x, t: float, rng=None):
    """One exact transition of the alpha=1 continuous-state process.

    From state x over duration t the new state is a sum of N ~ Poisson(x/t)
    exponential jumps of mean t; in particular P(new state = 0) = e^(-x/t).
    Accepts scalar or array x.
    """
    if t <= 0:
        raise ValueError("duration t must be positive")
    gen = as_generator(rng)
    scalar = np.isscalar(x) or np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.min() < 0:
        raise ValueError("state must be nonnegative")
    n = gen.poisson(x / t)
    out = gen.gamma(np.maximum(n, 1), t) * (n > 0)
    return float(out[0]) if scalar else out


def _conditioned_step(x: np.ndarray, s: float, dt: float, gen) -> np.ndarray:
    """Advance the survival-conditioned process from time s to s + dt.

    Proposal: the plain transition; acceptance weight: the probability
    1 - exp(-y/(1-s-dt)) that the proposed state still survives to time 1
    (Doob transform in the arrival state).
    """
    rem = 1.0 - s - dt
    out = np.empty_like(x)
    todo = np.arange(len(x))
    while len(todo):
        y = csbp_alpha1_transition(x[todo], dt, gen)
        accept = gen.random(len(todo)) < -np.expm1(-y / max(rem, 1e-12))
        out[todo[accept]] = y[accept]
        todo = todo[~accept]
    return out


def _entrance_step(npaths: int, dt: float, gen) -> np.ndarray:
    """First grid state of the survival-conditioned process started at 0.

    The time-dt marginal has density proportional to
    (1/dt) e^(-y/dt) (1 - e^(-y/(1-dt))): rejection from the exponential
    envelope with the survival factor as acceptance weight.
    """
    out = np.empty(npaths)
    todo = np.arange(npaths)
    while len(todo):
        y = gen.exponential(dt, size=len(todo))
        accept = gen.random(len(todo)) < -np.expm1(-y / (1.0 - dt))
        out[todo[accept]] = y[accept]
        todo = todo[~accept]
    return out


def csbp_alpha1_paths(T: float, dt: float, n_paths: int, rng=None) -> np.ndarray:
    """Paths of the alpha=1 limit process, shape (n_paths, steps+1).

    On [0, 1] the process is conditioned to survive (entrance from 0, then
    Doob-transformed transitions); on [1, T] it runs unconditioned with
    exact compound-Poisson transitions.
    """
    if T < 1 or not 0 < dt <= 0.01:
        raise ValueError("need T >= 1 and 0 < dt <= 0.01")
    steps_per_unit = round(1.0 / dt)
    if abs(steps_per_unit * dt - 1.0) > 1e-9:
        raise ValueError("dt must divide 1")
    gen = as_generator(rng)
    total = round(T * steps_per_unit)
    out = np.zeros((n_paths, total + 1))
    out[:, 1] = _entrance_step(n_paths, dt, gen)
    for i in range(2, steps_per_unit + 1):
        out[:, i] = _conditioned_step(out[:, i - 1], (i - 1) * dt, dt, gen)
    x = out[:, steps_per_unit].copy()
    idx = np.arange(n_paths)
    for i in range(steps_per_unit + 1, total + 1):
        x = csbp_alpha1_transition(x, dt, gen)
        alive = x > 0
        if alive.sum() < 0.5 * len(x):
            x, idx = x[alive], idx[alive]
            if len(x) == 0:
                break
        out[idx, i] = x
    return out


def csbp_alpha1_vstar(T: float, dt: float = 0.01, n_paths: int = 2000,
                      rng=None) -> EstimatorResult:
    """Peak-mean estimate from the exact alpha=1 continuous-state route."""
    stream = _as_stream(rng)
    paths = csbp_alpha1_paths(T, dt, n_paths, stream.generator())
    vals = _window_peaks(paths, dt)
    return _mean_result(vals, stream)
