"""Monte Carlo engine: trajectories, moving-window maxima, tail estimates,
and survival-conditioned sampling.

Generation advance is exact in law (one closed-form or per-individual draw
per column); batched kernels keep many independent populations as columns
of an array and compact away extinct columns once they dominate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .laws import OffspringLaw, RngStream, as_generator

__all__ = [
    "Trajectory",
    "EstimatorResult",
    "simulate_generations",
    "window_sums",
    "window_max",
    "estimate_mean_window_max",
    "estimate_window_tail",
    "conditioned_trajectory",
    "conditioned_final_sizes",
    "conditioned_paths",
    "extend_paths",
]

DEFAULT_GEN_CAP = 2000


# ---------------------------------------------------------------------------
# Core types


@dataclass
class Trajectory:
    """Generation sizes of one population path.

    ``sizes[k]`` is the number of individuals in generation k.  If the path
    went extinct inside the simulated horizon, ``extinct_at`` is the first
    generation with zero individuals; ``censored`` marks a path stopped by
    the total-progeny budget while still alive.
    """

    sizes: np.ndarray
    extinct_at: int | None = None
    censored: bool = False

    def __post_init__(self):
        self.sizes = np.asarray(self.sizes, dtype=np.int64)


@dataclass
class EstimatorResult:
    """A Monte Carlo point estimate with its uncertainty accounting.

    ``censor_lo``/``censor_hi`` bracket the estimand when some sample paths
    were stopped before the outcome was decided; with no censoring they
    coincide with the estimate.
    """

    estimate: float
    std_error: float
    n_samples: int
    censor_lo: float
    censor_hi: float
    seed: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.std_error < 0:
            raise ValueError("std_error must be >= 0")
        if not (self.censor_lo <= self.estimate + 1e-12
                and self.estimate <= self.censor_hi + 1e-12):
            raise ValueError("estimate outside censoring bounds")


def _as_stream(rng) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    if rng is None:
        return RngStream()
    if isinstance(rng, (int, np.integer)):
        return RngStream(seed=int(rng))
    raise TypeError("batched estimators need an RngStream (or int seed) "
                    "so that work can be split into substreams")


def _sizes_of(traj) -> np.ndarray:
    return traj.sizes if isinstance(traj, Trajectory) else np.asarray(traj)


# ---------------------------------------------------------------------------
# Single-path simulation


def simulate_generations(law: OffspringLaw, m: int, rng=None, z0: int = 1,
                         total_cap: int | None = None) -> Trajectory:
    """Simulate Z_0 = z0, Z_1, ..., Z_m; each individual reproduces
    independently by the offspring law.

    ``total_cap`` is a budget on the total progeny: once the running sum of
    generation sizes exceeds it the path is cut short and flagged censored.
    """
    if m < 0 or z0 < 1:
        raise ValueError("need m >= 0 and z0 >= 1")
    gen = as_generator(rng)
    sizes = np.empty(m + 1, dtype=np.int64)
    sizes[0] = z0
    total = z0
    z = np.array([z0], dtype=np.int64)
    for k in range(1, m + 1):
        z = law.offspring_sum(z, gen)
        sizes[k] = z[0]
        total += int(z[0])
        if z[0] == 0:
            sizes[k:] = 0
            return Trajectory(sizes, extinct_at=k)
        if total_cap is not None and total > total_cap:
            return Trajectory(sizes[: k + 1], censored=True)
    return Trajectory(sizes)


def window_sums(traj, j: int) -> np.ndarray:
    """All sums of j consecutive generation sizes, by prefix sums."""
    sizes = _sizes_of(traj)
    if not 1 <= j <= len(sizes):
        raise ValueError("need 1 <= j <= number of generations")
    c = np.concatenate([[0], np.cumsum(sizes)])
    return c[j:] - c[:-j]


def window_max(traj, j: int) -> int:
    """Largest sum of j consecutive generation sizes."""
    return int(window_sums(traj, j).max())


# ---------------------------------------------------------------------------
# Batched kernels

_COMPACT_FRACTION = 0.5     # compact columns once under half remain relevant


def _batch_sizes(n_samples: int, batch: int):
    """Split a sample budget into batch index / batch size pairs."""
    out = []
    done = 0
    i = 0
    while done < n_samples:
        b = min(batch, n_samples - done)
        out.append((i, b))
        done += b
        i += 1
    return out


def _mean_window_max_batch(law, m, j, b, gen) -> tuple[float, float]:
    """Sum and sum of squares of the window maximum over b paths."""
    if j == m:
        # single window: the maximum is the plain total over m generations
        z = np.ones(b, dtype=np.int64)
        total = np.zeros(b, dtype=np.float64)
        final = 0.0
        final_sq = 0.0
        for _ in range(m):
            total += z
            z = law.offspring_sum(z, gen)
            dead = z == 0
            if dead.all() or dead.sum() > _COMPACT_FRACTION * len(z):
                final += float(total[dead].sum())
                final_sq += float((total[dead] ** 2).sum())
                keep = ~dead
                z, total = z[keep], total[keep]
                if len(z) == 0:
                    break
        final += float(total.sum())
        final_sq += float((total**2).sum())
        return final, final_sq

    buf = np.zeros((j, b), dtype=np.int64)
    cur = np.zeros(b, dtype=np.int64)
    wmax = np.zeros(b, dtype=np.int64)
    z = np.ones(b, dtype=np.int64)
    final = 0.0
    final_sq = 0.0
    for t in range(m):
        if t > 0:
            z = law.offspring_sum(z, gen)
        if t >= j:
            cur -= buf[t % j]
        cur += z
        buf[t % j] = z
        if t >= j - 1:
            np.maximum(wmax, cur, out=wmax)
        # drop extinct columns: their remaining window maxima are already
        # determined (equal to the total when no full window has formed yet)
        dead = z == 0
        if dead.sum() > _COMPACT_FRACTION * len(z):
            done = wmax[dead] if t >= j - 1 else cur[dead]
            final += float(done.sum())
            final_sq += float((done.astype(np.float64) ** 2).sum())
            keep = ~dead
            z, cur, wmax, buf = z[keep], cur[keep], wmax[keep], buf[:, keep]
            if len(z) == 0:
                return final, final_sq
    final += float(wmax.sum())
    final_sq += float((wmax.astype(np.float64) ** 2).sum())
    return final, final_sq


def estimate_mean_window_max(law: OffspringLaw, m: int, j: int,
                             n_samples: int, rng=None, workers: int = 1,
                             batch: int = 1 << 14) -> EstimatorResult:
    """Sample-mean estimate of the expected maximal moving-window progeny
    over a fixed horizon of m generations with window length j.

    Unbiased: every path is simulated for the full horizon, no censoring.
    """
    if not 1 <= j <= m:
        raise ValueError("need 1 <= j <= m")
    stream = _as_stream(rng)
    batch = min(batch, max(1, (1 << 23) // max(j, 1)))

    def work(task):
        i, b = task
        gen = stream.substream(i).generator()
        return np.array(_mean_window_max_batch(law, m, j, b, gen))

    s, sq = _map_reduce(work, _batch_sizes(n_samples, batch), workers)
    mean = s / n_samples
    var = max(sq / n_samples - mean**2, 0.0)
    se = math.sqrt(var / n_samples)
    return EstimatorResult(mean, se, n_samples, mean, mean,
                           seed=stream.provenance())


def _window_tail_batch(law, j, n, b, gen, gen_cap, horizon):
    """(successes, failures, censored) counts for P(window max >= n)."""
    z = np.ones(b, dtype=np.int64)
    cur = np.zeros(b, dtype=np.int64)
    use_buf = j is not None
    buf = np.zeros((j, b), dtype=np.int64) if use_buf else None
    succ = 0
    fail = 0
    last = gen_cap if horizon is None else horizon
    for t in range(last + 1):
        if t > 0:
            z = law.offspring_sum(z, gen)
        if use_buf:
            if t >= j:
                cur -= buf[t % j]
            buf[t % j] = z
        cur += z
        # a running window that already reaches n decides the path: the
        # full-length window containing these generations is at least as big
        hit = cur >= n
        dead = ~hit & (z == 0)
        ndone = int(hit.sum()) + int(dead.sum())
        succ += int(hit.sum())
        fail += int(dead.sum())
        if ndone:
            keep = ~(hit | dead)
            z, cur = z[keep], cur[keep]
            if use_buf:
                buf = buf[:, keep]
            if len(z) == 0:
                return succ, fail, 0
    if horizon is not None:
        # finite horizon: every surviving path is a decided failure
        return succ, fail + len(z), 0
    return succ, fail, len(z)


def estimate_window_tail(law: OffspringLaw, j: int | None, n: int,
                         n_samples: int, rng=None,
                         gen_cap: int = DEFAULT_GEN_CAP,
                         horizon: int | None = None, workers: int = 1,
                         batch: int = 1 << 16) -> EstimatorResult:
    """Estimate P(some window of j consecutive generations totals >= n).

    ``j=None`` means the un-windowed total progeny.  With ``horizon`` set
    the maximum is taken over generations 0..horizon only (always decided);
    otherwise paths still alive at ``gen_cap`` are censored and the result
    interval adds both the censored fraction and the survival probability
    at the cap (mass that could still succeed later).
    """
    if j is not None and j < 1:
        raise ValueError("j must be >= 1 (or None for the plain total)")
    if n < 1:
        raise ValueError("n must be >= 1")
    stream = _as_stream(rng)
    if n == 1:
        return EstimatorResult(1.0, 0.0, n_samples, 1.0, 1.0,
                               seed=stream.provenance())
    if j is not None:
        batch = min(batch, max(1, (1 << 23) // j))

    def work(task):
        i, b = task
        gen = stream.substream(i).generator()
        return np.array(_window_tail_batch(law, j, n, b, gen, gen_cap, horizon))

    succ, fail, cens = _map_reduce(work, _batch_sizes(n_samples, batch), workers)
    lo = succ / n_samples
    if horizon is None:
        from .exact import survival_probability
        hi = min(lo + cens / n_samples + survival_probability(law, gen_cap), 1.0)
    else:
        hi = lo
    se = math.sqrt(max(lo * (1.0 - lo), 0.0) / n_samples)
    return EstimatorResult(lo, se, int(n_samples), lo, hi,
                           seed=stream.provenance())


def _map_reduce(work, tasks, workers):
    """Associative sum of per-task result vectors; worker-count invariant."""
    if workers > 1 and len(tasks) > 1:
        from joblib import Parallel, delayed
        parts = Parallel(n_jobs=workers)(delayed(work)(t) for t in tasks)
    else:
        parts = [work(t) for t in tasks]
    return np.sum(parts, axis=0)


# ---------------------------------------------------------------------------
# Survival-conditioned sampling (plain rejection: exact conditional law)


def conditioned_trajectory(law: OffspringLaw, n: int, rng=None,
                           retry_cap: int = 10**6) -> Trajectory:
    """One path conditioned to be alive in generation n, by rejection.

    Expected number of attempts is 1/P(Z_n > 0).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    gen = as_generator(rng)
    for _ in range(retry_cap):
        traj = simulate_generations(law, n, gen)
        if traj.sizes[n] > 0:
            return traj
    raise RuntimeError(f"no survivor at generation {n} in {retry_cap} attempts")


def _conditioned_batch(law, n, b, gen, keep_history):
    """Survivor columns of a b-column batch run to generation n.

    Returns final sizes of survivors, or their full (n+1)-row history.
    """
    z = np.ones(b, dtype=np.int64)
    idx = np.arange(b)
    hist = np.zeros((n + 1, b), dtype=np.int64) if keep_history else None
    if keep_history:
        hist[0] = 1
    for t in range(1, n + 1):
        z = law.offspring_sum(z, gen)
        dead = z == 0
        if dead.sum() > _COMPACT_FRACTION * len(z):
            keep = ~dead
            z, idx = z[keep], idx[keep]
            if len(z) == 0:
                break
        if keep_history:
            hist[t, idx] = z
    alive = z > 0
    if keep_history:
        return hist[:, idx[alive]]
    return z[alive]


def conditioned_final_sizes(law: OffspringLaw, n: int, n_survivors: int,
                            rng=None, workers: int = 1,
                            batch: int = 1 << 13) -> np.ndarray:
    """Generation-n sizes of n_survivors independent paths with Z_n > 0.

    Rejection over batches; each batch uses its own substream, so the
    output is reproducible for a fixed (seed, batch) regardless of workers.
    """
    return _collect_survivors(law, n, n_survivors, _as_stream(rng), workers,
                              batch, keep_history=False)


def conditioned_paths(law: OffspringLaw, n: int, n_paths: int, rng=None,
                      workers: int = 1, batch: int = 1 << 13) -> np.ndarray:
    """Full histories, shape (n_paths, n+1), of paths with Z_n > 0."""
    return _collect_survivors(law, n, n_paths, _as_stream(rng), workers,
                              batch, keep_history=True).T


def _collect_survivors(law, n, want, stream, workers, batch, keep_history):
    if n < 1 or want < 1:
        raise ValueError("need n >= 1 and a positive survivor count")
    # expected survivors per batch ~ batch * Q(n); bound the batch count
    from .exact import survival_probability
    q = survival_probability(law, n)
    max_batches = max(int(8 * want / max(batch * q, 1e-12)) + 8, 16)
    def work(bi):
        gen = stream.substream(bi).generator()
        return _conditioned_batch(law, n, batch, gen, keep_history)

    got = []
    have = 0
    i = 0
    round_size = max(workers, 1)
    while have < want:
        if i >= max_batches:
            raise RuntimeError("survivor collection exceeded its batch budget")
        tasks = list(range(i, min(i + round_size, max_batches)))
        i = tasks[-1] + 1
        if workers > 1 and len(tasks) > 1:
            from joblib import Parallel, delayed
            parts = Parallel(n_jobs=workers)(delayed(work)(t) for t in tasks)
        else:
            parts = [work(t) for t in tasks]
        for p in parts:
            got.append(p)
            have += p.shape[-1] if keep_history else len(p)
    out = np.concatenate(got, axis=-1)
    return out[..., :want] if keep_history else out[:want]


def extend_paths(law: OffspringLaw, paths: np.ndarray, extra: int,
                 rng=None) -> np.ndarray:
    """Append extra generations to each row of a (paths, gens) matrix.

    Continuation is unconditioned: each row evolves freely from its last
    column.
    """
    if extra < 0:
        raise ValueError("extra must be >= 0")
    paths = np.asarray(paths, dtype=np.int64)
    gen = as_generator(rng)
    npaths, width = paths.shape
    out = np.zeros((npaths, width + extra), dtype=np.int64)
    out[:, :width] = paths
    z = paths[:, -1].copy()
    idx = np.arange(npaths)
    for t in range(extra):
        z = law.offspring_sum(z, gen)
        dead = z == 0
        if dead.sum() > _COMPACT_FRACTION * len(z):
            keep = ~dead
            z, idx = z[keep], idx[keep]
            if len(z) == 0:
                break
        out[idx, width + t] = z
    return out
