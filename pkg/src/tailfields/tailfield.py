"""Empirical tail and spectral fields, their transforms, and identity checks.

The tail field is estimated by conditioning simulated fields on a high
exceedance at the origin: with x the empirical q-quantile of |X(0)|, a
retained replicate stores the rescaled lags x^-1 X(t).  Estimators are
chunked with one substream per fixed-size chunk, so results do not
depend on worker count and retained replicates can be regenerated
bit-identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .gaussian import GaussianFieldSampler
from .lattice import Window, as_point
from .models import ModelSpec, VariogramSpec, tail_index
from .rng import RngStream, chunk_sizes
from .simulate import field_batch
from .testfuncs import FieldFunction


class TooFewExceedancesError(RuntimeError):
    pass


@dataclass(frozen=True)
class TailFieldSample:
    """One conditioned draw of the rescaled field on a lag window.

    ``values[lag]`` approximates Y(lag); ``root_norm = |values at 0|`` is
    at least 1 because the draw is conditioned on an exceedance and
    rescaled by the threshold.
    """

    lags: Window
    values: np.ndarray
    root_norm: float
    alpha: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        if self.root_norm < 1.0:
            raise ValueError("root norm below 1: not an exceedance draw")

    def norm_at(self, t) -> float:
        return abs(float(self.values[self.lags.index(t)]))


@dataclass(frozen=True)
class SpectralFieldSample:
    """Tail-field draw normalized by its root norm; lag-0 norm is exactly 1."""

    lags: Window
    values: np.ndarray
    alpha: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def norm_at(self, t) -> float:
        return abs(float(self.values[self.lags.index(t)]))

    def norms(self) -> np.ndarray:
        return np.abs(self.values)


def estimate_tail_field(
    spec: ModelSpec,
    lags: Window,
    n_replicates: int,
    rng: RngStream,
    alpha: float | None = None,
    q: float = 0.999,
    min_retained: int = 50,
    chunk: int = 4096,
) -> list[TailFieldSample]:
    """Empirical tail-field draws of a model on a lag window.

    Simulates ``n_replicates`` fields, sets the threshold x to the
    empirical q-quantile of |X(0)|, and returns one sample per replicate
    with |X(0)| > x.  A per-chunk buffer keeps the plausible exceedance
    rows from a single pass; a chunk is regenerated only in the rare case
    its buffer turns out too shallow.
    """
    origin = (0,) * lags.dim
    if not lags.contains(origin):
        raise ValueError("lag window must contain the origin")
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0,1)")
    if alpha is None:
        alpha = tail_index(spec)

    oidx = lags.index(origin)
    keep_frac = min(1.0, 3.0 * (1.0 - q))
    sizes = chunk_sizes(n_replicates, chunk)

    all_roots = []
    buffers = []  # (chunk_id, start, kept_row_ids, kept_values, keep_floor)
    for c, count in enumerate(sizes):
        gen = rng.substream(c).generator()
        x = field_batch(spec, lags, count, gen)
        roots = np.abs(x[(slice(None), *oidx)])
        all_roots.append(roots)
        n_keep = max(1, int(math.ceil(keep_frac * count)))
        if n_keep >= count:
            kept = np.arange(count)
            floor = -np.inf
        else:
            kept = np.argpartition(roots, count - n_keep)[count - n_keep :]
            kept.sort()
            floor = float(
                roots[np.argpartition(roots, count - n_keep - 1)[count - n_keep - 1]]
            )
        buffers.append((c, kept, x[kept].copy(), floor))

    roots = np.concatenate(all_roots)
    x_thresh = float(np.quantile(roots, q))
    if x_thresh <= 0:
        raise TooFewExceedancesError("threshold is not positive")

    samples: list[TailFieldSample] = []
    for (c, kept, kept_vals, floor), count, chunk_roots in zip(
        buffers, sizes, all_roots
    ):
        retained = np.nonzero(chunk_roots > x_thresh)[0]
        if len(retained) == 0:
            continue
        if floor >= x_thresh:
            # buffer may miss rows; regenerate this chunk deterministically
            gen = rng.substream(c).generator()
            vals = field_batch(spec, lags, count, gen)[retained]
        else:
            pos = np.searchsorted(kept, retained)
            vals = kept_vals[pos]
        for row, ridx in zip(vals, retained):
            samples.append(
                TailFieldSample(
                    lags=lags,
                    values=row / x_thresh,
                    root_norm=float(chunk_roots[ridx] / x_thresh),
                    alpha=alpha,
                )
            )
    if len(samples) < min_retained:
        raise TooFewExceedancesError(
            f"only {len(samples)} exceedances retained; increase n_replicates "
            f"(need at least {min_retained})"
        )
    return samples


def spectral_from_tail(s: TailFieldSample) -> SpectralFieldSample:
    """Normalize a tail-field draw by its root norm; lag-0 norm becomes 1."""
    if s.root_norm <= 0:
        raise ValueError("root norm must be positive")
    return SpectralFieldSample(
        lags=s.lags, values=s.values / s.root_norm, alpha=s.alpha
    )


def estimate_spectral_field(*args, **kwargs) -> list[SpectralFieldSample]:
    return [spectral_from_tail(s) for s in estimate_tail_field(*args, **kwargs)]


def alpha_norm(s: SpectralFieldSample) -> float:
    """Sum over lags of the field norm raised to alpha."""
    return float(np.sum(np.abs(s.values) ** s.alpha))


# -- Brown-Resnick tail-field distributions ----------------------------------

def br_tail_marginal_cdf(gamma_t: float, y: float) -> float:
    """Closed-form marginal CDF of the Brown-Resnick tail field at one lag.

    ``gamma_t`` is the variogram at the lag.  The gamma_t = 0 case is the
    continuity limit, a standard Pareto(1) root.
    """
    if gamma_t < 0:
        raise ValueError("variogram value must be nonnegative")
    if y <= 0:
        return 0.0
    if gamma_t == 0.0:
        return max(0.0, 1.0 - 1.0 / y)
    sg = math.sqrt(gamma_t)
    ly = math.log(y)
    return float(
        ndtr((2 * ly + gamma_t) / (2 * sg)) - ndtr((2 * ly - gamma_t) / (2 * sg)) / y
    )


@dataclass(frozen=True)
class MCEstimate:
    value: float
    se: float
    n: int
    flagged: bool = False


def br_tail_fdd_mc(
    points,
    y,
    variogram: VariogramSpec,
    n_mc: int,
    rng: RngStream,
    chunk: int = 65536,
) -> MCEstimate:
    """Monte-Carlo joint CDF P(Y(t_1) <= y_1, ..., Y(t_n) <= y_n).

    Evaluates the difference of the two exponent expectations with common
    random numbers, which makes the per-replicate difference nonnegative.
    """
    pts = [as_point(p) for p in points]
    yv = np.asarray(y, dtype=float)
    if yv.ndim == 0:
        yv = np.full(len(pts), float(yv))
    if len(yv) != len(pts) or np.any(yv <= 0):
        raise ValueError("need one positive level per point")
    dim = len(pts[0])
    origin = (0,) * dim
    sampler = GaussianFieldSampler(variogram, [origin] + pts)
    s2 = sampler.sigma2

    tot = 0.0
    tot2 = 0.0
    done = 0
    for c, count in enumerate(chunk_sizes(n_mc, chunk)):
        gen = rng.substream(c).generator()
        w = sampler.draw(count, gen)
        v = np.exp(w - 0.5 * s2)
        m_pts = (v[:, 1:] / yv[None, :]).max(axis=1)
        diff = np.maximum(m_pts, v[:, 0]) - m_pts
        tot += diff.sum()
        tot2 += (diff**2).sum()
        done += count
    mean = tot / done
    var = max(0.0, tot2 / done - mean**2)
    se = math.sqrt(var / done)
    return MCEstimate(value=float(mean), se=float(se), n=done, flagged=mean < -3 * se)


# -- the re-rooting transform and identity checks -----------------------------

def rs_transform(s: SpectralFieldSample, rng: RngStream) -> SpectralFieldSample:
    """Re-root a spectral sample at a lag drawn from its alpha-power weights.

    The shift I satisfies P(I = i | field) ~ |field(i)|^alpha; the output
    is field(. + I) / |field(I)| on the same lag window, with lags shifted
    outside the window filled by zero (valid when the window already
    carries essentially all of the field's mass).
    """
    w = np.abs(s.values) ** s.alpha
    tot = w.sum()
    if not tot > 0:
        raise ValueError("all-zero spectral sample")
    gen = rng.generator()
    flat = gen.choice(w.size, p=(w / tot).ravel())
    idx = np.unravel_index(flat, s.values.shape)
    scale = abs(float(s.values[idx]))
    shift = tuple(int(a) + lo for a, lo in zip(idx, s.lags.lo))  # lattice point I

    out = np.zeros_like(s.values)
    src = []
    dst = []
    for i, size in zip(shift, s.values.shape):
        lo_dst = max(0, -i)
        hi_dst = min(size, size - i)
        dst.append(slice(lo_dst, hi_dst))
        src.append(slice(lo_dst + i, hi_dst + i))
    out[tuple(dst)] = s.values[tuple(src)] / scale
    return SpectralFieldSample(lags=s.lags, values=out, alpha=s.alpha)


@dataclass(frozen=True)
class IdentityCheck:
    lhs: float
    rhs: float
    se: float
    n: int

    @property
    def discrepancy(self) -> float:
        return self.lhs - self.rhs


def verify_change_of_time(
    samples: list[SpectralFieldSample],
    s,
    g: FieldFunction,
    alpha: float,
    zero_tol: float = 0.05,
) -> IdentityCheck:
    """Estimate both sides of the shift identity for the spectral field.

    Left side: E[g(field(. - s)) 1(|field(-s)| > zero_tol)]; right side:
    E[g(field(.) / |field(s)|) |field(s)|^alpha].  ``zero_tol`` stands in
    for the exact event {field(-s) != 0}, which is never observed at a
    finite threshold; it must be below the smallest nonzero limit value.
    The standard error is that of the paired per-sample difference.
    """
    s = as_point(s)
    if not samples:
        raise ValueError("no samples")
    lags = samples[0].lags
    minus_s = tuple(-x for x in s)
    for lag in g.lags:
        shifted = tuple(l - d for l, d in zip(lag, s))
        if not lags.contains(shifted):
            raise ValueError(
                f"lag window too small to evaluate g shifted by {s} at {lag}"
            )
    if not lags.contains(minus_s) or not lags.contains(s):
        raise ValueError("lag window must contain both s and -s")

    diffs = np.empty(len(samples))
    lhs_vals = np.empty(len(samples))
    rhs_vals = np.empty(len(samples))
    for k, sample in enumerate(samples):
        lhs = 0.0
        if sample.norm_at(minus_s) > zero_tol:
            lhs = g(lambda l: sample.norm_at(tuple(a - b for a, b in zip(l, s))))
        ns = sample.norm_at(s)
        rhs = 0.0
        if ns > 0:
            rhs = g(lambda l: sample.norm_at(l) / ns) * ns**alpha
        lhs_vals[k] = lhs
        rhs_vals[k] = rhs
        diffs[k] = lhs - rhs
    n = len(samples)
    se = float(diffs.std(ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
    return IdentityCheck(
        lhs=float(lhs_vals.mean()), rhs=float(rhs_vals.mean()), se=se, n=n
    )


# -- columnar text round trip --------------------------------------------------

def samples_to_rows(samples) -> tuple[list[str], list[list[float]]]:
    """Header and rows for a batch of tail or spectral samples.

    Columns are lag-major in the window's row-major point order; tail
    samples get a leading root_norm column.
    """
    if not samples:
        raise ValueError("no samples")
    lags = samples[0].lags
    names = ["lag_" + "_".join(str(x) for x in p) for p in lags.points()]
    with_root = isinstance(samples[0], TailFieldSample)
    header = (["root_norm"] if with_root else []) + names
    rows = []
    for s in samples:
        row = [s.root_norm] if with_root else []
        rows.append(row + [float(v) for v in s.values.ravel()])
    return header, rows
