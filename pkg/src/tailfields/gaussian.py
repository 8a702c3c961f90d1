"""Gaussian building blocks: exact fractional Brownian motion, additive
fBm fields, variogram-driven Gaussian samplers, and Brown-Resnick fields.

fBm is sampled exactly (Cholesky factor of the stationary increment
covariance), not through spectral approximations, because the extremal
quantities downstream are sensitive to the exact Gaussian law.
"""

from __future__ import annotations

import functools

import numpy as np

from .lattice import FieldSample, Window, as_point
from .models import AdditiveFBM, VariogramSpec
from .rng import RngStream


class AccuracyError(RuntimeError):
    """Truncated series failed to meet the requested accuracy."""


@functools.lru_cache(maxsize=128)
def fgn_cholesky(hurst: float, n: int) -> np.ndarray:
    """Lower Cholesky factor of the covariance of n fGn increments."""
    if not 0 < hurst < 1:
        raise ValueError("Hurst parameter must lie in (0,1)")
    if n < 1:
        raise ValueError("need at least one increment")
    k = np.arange(n, dtype=float)
    h2 = 2 * hurst
    rho = 0.5 * ((k + 1) ** h2 - 2 * k**h2 + np.abs(k - 1) ** h2)
    i = np.arange(n)
    cov = rho[np.abs(i[:, None] - i[None, :])]
    L = np.linalg.cholesky(cov)
    L.flags.writeable = False
    return L


def fbm_paths_batch(hurst: float, n: int, count: int, gen) -> np.ndarray:
    """Exact fBm at integer times 0..n; returns a (count, n+1) array."""
    L = fgn_cholesky(hurst, n)
    inc = gen.standard_normal((count, n)) @ L.T
    out = np.zeros((count, n + 1))
    np.cumsum(inc, axis=1, out=out[:, 1:])
    return out


def sample_fbm_path(hurst: float, n: int, rng: RngStream) -> np.ndarray:
    return fbm_paths_batch(hurst, n, 1, rng.generator())[0]


def fbm_grid_batch(hurst: float, lo: int, hi: int, count: int, gen) -> np.ndarray:
    """Exact fBm on the integer grid lo..hi, anchored so fBm(0) = 0.

    The grid is extended to contain 0 internally; the returned array has
    one column per grid point of [lo, hi].
    """
    lo2, hi2 = min(lo, 0), max(hi, 0)
    n = hi2 - lo2
    if n == 0:
        return np.zeros((count, 1))
    L = fgn_cholesky(hurst, n)
    inc = gen.standard_normal((count, n)) @ L.T
    s = np.zeros((count, n + 1))
    np.cumsum(inc, axis=1, out=s[:, 1:])
    s -= s[:, [-lo2]]  # anchor at position 0
    return s[:, lo - lo2 : hi - lo2 + 1]


def additive_fbm_batch(
    hurst: tuple[float, ...], window: Window, count: int, gen
) -> np.ndarray:
    """Batch of additive-fBm fields W(t) = sum_l fBm_(H_l)(t_l) on a window."""
    if len(hurst) != window.dim:
        raise ValueError("one Hurst parameter per axis required")
    out = np.zeros((count, *window.shape))
    for axis, h in enumerate(hurst):
        path = fbm_grid_batch(h, window.lo[axis], window.hi[axis], count, gen)
        shape = [count] + [1] * window.dim
        shape[1 + axis] = window.shape[axis]
        out += path.reshape(shape)
    return out


def sample_additive_fbm(
    hurst: tuple[float, ...], window: Window, rng: RngStream
) -> FieldSample:
    vals = additive_fbm_batch(tuple(hurst), window, 1, rng.generator())[0]
    spec = AdditiveFBM(hurst=tuple(hurst))
    return FieldSample(
        window=window,
        values=vals,
        norm="abs",
        model_tag=f"AdditiveFBM:{spec.hurst}",
        seed=rng.seed,
        stream_id=rng.stream_id,
    )


class GaussianFieldSampler:
    """Batch sampler for W on a fixed finite point set of Z^k.

    The joint law is pinned down by the variogram and pointwise variance:
    Cov(W(s), W(t)) = (sigma2(s) + sigma2(t) - gamma(s - t)) / 2.  For
    additive fBm the draw factorizes along axes; otherwise a dense
    Cholesky factor of the covariance is prepared once.
    """

    def __init__(self, variogram: VariogramSpec, points):
        self.points = [as_point(p) for p in points]
        self.variogram = variogram
        npts = len(self.points)
        if npts == 0:
            raise ValueError("need at least one point")
        self.sigma2 = np.array([self._sigma2(p) for p in self.points])
        if isinstance(variogram, AdditiveFBM):
            self._axis_ranges = []
            self._axis_cols = []
            for axis in range(variogram.dim):
                coords = [p[axis] for p in self.points]
                lo, hi = min(coords + [0]), max(coords + [0])
                self._axis_ranges.append((lo, hi))
                self._axis_cols.append(np.array([c - lo for c in coords]))
            self._chol = None
        else:
            g, s2 = variogram.gamma, variogram.sigma2
            cov = np.empty((npts, npts))
            for i, p in enumerate(self.points):
                for j, q in enumerate(self.points):
                    diff = tuple(a - b for a, b in zip(p, q))
                    cov[i, j] = 0.5 * (s2(p) + s2(q) - g(diff))
            cov[np.diag_indices(npts)] += 1e-12  # numerical jitter
            self._chol = np.linalg.cholesky(cov)

    def _sigma2(self, p) -> float:
        if isinstance(self.variogram, AdditiveFBM):
            return self.variogram.sigma2(p)
        return float(self.variogram.sigma2(p))

    def cov_with_origin(self) -> np.ndarray:
        """Cov(W(p), W(0)) per point."""
        if isinstance(self.variogram, AdditiveFBM):
            g, s2_0 = self.variogram.gamma, 0.0
        else:
            g = self.variogram.gamma
            s2_0 = float(self.variogram.sigma2((0,) * len(self.points[0])))
        return np.array(
            [0.5 * (s2 + s2_0 - g(p)) for s2, p in zip(self.sigma2, self.points)]
        )

    def draw(self, count: int, gen) -> np.ndarray:
        """(count, n_points) Gaussian draw."""
        if self._chol is not None:
            z = gen.standard_normal((count, len(self.points)))
            return z @ self._chol.T
        out = np.zeros((count, len(self.points)))
        vg: AdditiveFBM = self.variogram
        for axis in range(vg.dim):
            lo, hi = self._axis_ranges[axis]
            path = fbm_grid_batch(vg.hurst[axis], lo, hi, count, gen)
            out += path[:, self._axis_cols[axis]]
        return out


def brown_resnick_batch(
    variogram: VariogramSpec,
    window: Window,
    count: int,
    gen,
    accuracy: float = 1e-3,
    max_points: int = 10**5,
) -> np.ndarray:
    """Batch of Brown-Resnick fields on a window.

    Poisson points are realized as U_i = 1/Gamma_i with Gamma_i cumulative
    standard exponentials.  The infinite max is truncated adaptively: a
    replicate stops once U_(i+1) * Q drops below the pointwise minimum of
    its running max, where Q is the empirical (1 - accuracy) quantile of
    max_t exp(W(t) - sigma2(t)/2) from a pilot round, so the probability
    that a dropped term would have mattered is bounded by roughly
    ``accuracy`` per replicate.
    """
    pts = list(window.points())
    npts = len(pts)
    sampler = GaussianFieldSampler(variogram, pts)
    s2 = sampler.sigma2

    n_pilot = 256
    pilot = np.exp(sampler.draw(n_pilot, gen) - 0.5 * s2).max(axis=1)
    if accuracy > 1.0 / n_pilot:
        q_thresh = float(np.quantile(pilot, 1.0 - accuracy))
    else:
        q_thresh = float(pilot.max()) * 2.0
    q_thresh = max(q_thresh, 1e-300)

    block = 16  # Poisson points handled per sweep; only delays stopping
    running = np.zeros((count, npts))
    gamma_sum = np.zeros(count)
    active = np.ones(count, dtype=bool)
    run_min = np.zeros(count)

    terms = 0
    while active.any():
        terms += block
        if terms > max_points:
            raise AccuracyError(
                f"{int(active.sum())} replicates still active after "
                f"{max_points} Poisson points (accuracy={accuracy})"
            )
        idx = np.nonzero(active)[0]
        na = len(idx)
        gs = gamma_sum[idx, None] + np.cumsum(
            gen.standard_exponential((na, block)), axis=1
        )
        gamma_sum[idx] = gs[:, -1]
        u = 1.0 / gs
        w = sampler.draw(na * block, gen).reshape(na, block, npts)
        cand = (u[:, :, None] * np.exp(w - 0.5 * s2)).max(axis=1)
        upd = np.maximum(running[idx], cand)
        running[idx] = upd
        rm = upd.min(axis=1)
        run_min[idx] = rm
        # stop once even an extreme Gaussian peak cannot alter the max anywhere
        active[idx[u[:, -1] * q_thresh < rm]] = False
    return running.reshape(count, *window.shape)


def sample_brown_resnick(
    variogram: VariogramSpec,
    window: Window,
    rng: RngStream,
    accuracy: float = 1e-3,
) -> FieldSample:
    vals = brown_resnick_batch(variogram, window, 1, rng.generator(), accuracy)[0]
    return FieldSample(
        window=window,
        values=vals,
        norm="abs",
        model_tag="BrownResnick",
        seed=rng.seed,
        stream_id=rng.stream_id,
    )


def br_tail_field_batch(
    variogram: VariogramSpec, points, count: int, gen
) -> np.ndarray:
    """Exact draws of the Brown-Resnick tail field on a finite point set.

    Uses the representation Y(t) = P * V~(t) / V~(0) with P standard
    Pareto(1) independent of W and V~(t) = exp(W~(t) - sigma2(t)/2),
    where W~ is W mean-shifted by Cov(W(.), W(0)) (the size bias induced
    by conditioning on a large value at the origin).  Reproduces the
    closed-form finite-dimensional distributions of the tail field.
    """
    pts = [as_point(p) for p in points]
    dim = len(pts[0])
    origin = (0,) * dim
    if origin not in pts:
        raise ValueError("point set must contain the origin")
    sampler = GaussianFieldSampler(variogram, pts)
    tilt = sampler.cov_with_origin()
    w = sampler.draw(count, gen) + tilt[None, :]
    logv = w - 0.5 * sampler.sigma2[None, :]
    logv -= logv[:, [pts.index(origin)]]
    p = 1.0 / (1.0 - gen.random(count))
    return p[:, None] * np.exp(logv)
