"""Seedable samplers for the concrete heavy-tailed field models.

Each public sampler is a pure function of (spec, window, RngStream): the
same arguments always reproduce the same field.  Batch cores return a
``(count, *window.shape)`` array drawn from a single generator; the
chunked estimators assign one stream per fixed-size chunk, which keeps
results independent of worker count.
"""

from __future__ import annotations

import math

import numpy as np

from .lattice import FieldSample, Window, as_point
from .models import (
    BrownResnick,
    CounterexampleField,
    GeneralMaxMovingAverage,
    IIDFrechet,
    MaxMovingAverage,
    Mixture,
    ModelSpec,
    marginal_exceed_prob,
    model_dim,
    model_tag,
)
from .rng import RngStream


class TooFewEventsError(RuntimeError):
    """Raised when a conditional estimator collects too few exceedances."""


def _frechet(gen: np.random.Generator, alpha: float, shape) -> np.ndarray:
    # inverse transform: Z = (-ln U)^(-1/alpha)
    u = gen.random(shape)
    return (-np.log(u)) ** (-1.0 / alpha)


def frechet_batch(alpha: float, window: Window, count: int, gen) -> np.ndarray:
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return _frechet(gen, alpha, (count, *window.shape))


def _stencil_items(spec) -> list[tuple[tuple[int, ...], float]]:
    if isinstance(spec, MaxMovingAverage):
        return list(spec.weights.items())
    return list(spec.stencil)


def mma_batch(spec, window: Window, count: int, gen) -> np.ndarray:
    """Batch of max-moving-average fields; noise drawn on the dilated window."""
    items = _stencil_items(spec)
    radius = max(max(abs(x) for x in o) for o, _ in items)
    big = window.dilate(radius)
    z = _frechet(gen, 1.0, (count, *big.shape))
    core = tuple(
        slice(radius, radius + s) for s in window.shape
    )
    x = z[(slice(None), *core)].copy()
    for o, w in items:
        if w == 0.0:
            continue
        sl = tuple(
            slice(radius + off, radius + off + s) for off, s in zip(o, window.shape)
        )
        np.maximum(x, w * z[(slice(None), *sl)], out=x)
    return x


# -- the exchangeable Pareto pair and its parity field -----------------------

_MAX_RANK = 170  # largest m with m! representable as a float

_FACTORIALS = np.array([float(math.factorial(m)) for m in range(1, _MAX_RANK + 1)])


def factorial_rank(z: np.ndarray) -> np.ndarray:
    """Index m >= 1 with a_m <= z < a_(m+1) for the boundaries a_m = m!.

    Any float is below 171!, so the boundary table never overflows; block
    arithmetic elsewhere works on the z/a_m ratio scale.
    """
    return np.searchsorted(_FACTORIALS, z, side="right")


def _pareto_in_block(gen, alpha: float, m: np.ndarray) -> np.ndarray:
    """Pareto(alpha) conditioned to [a_m, a_(m+1)), returned as Z / a_m."""
    v = gen.random(m.shape)
    ratio_tail = (m + 1.0) ** (-alpha)  # (a_(m+1)/a_m)^-alpha
    return (1.0 - v * (1.0 - ratio_tail)) ** (-1.0 / alpha)


def counterexample_pairs(alpha: float, count: int, gen) -> np.ndarray:
    """Draw ``count`` exchangeable pairs (Z1, Z2); returns a (count, 2) array.

    The latent variable Z is standard Pareto(alpha).  On odd factorial
    blocks [a_(2n-1), a_(2n)) the pair is the diagonal (Z, Z); on even
    blocks the coordinates are redrawn independently from the block's
    conditional Pareto law.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    z = (1.0 - gen.random(count)) ** (-1.0 / alpha)
    m = factorial_rank(z)
    out = np.empty((count, 2))
    odd = (m % 2) == 1
    out[odd, 0] = out[odd, 1] = z[odd]
    n_even = int((~odd).sum())
    if n_even:
        me = m[~odd].astype(float)
        a_m = _FACTORIALS[m[~odd] - 1]
        z1 = _pareto_in_block(gen, alpha, me) * a_m
        z2 = _pareto_in_block(gen, alpha, me) * a_m
        out[~odd, 0] = z1
        out[~odd, 1] = z2
    return out


def sample_counterexample_pair(alpha: float, rng: RngStream) -> tuple[float, float]:
    pair = counterexample_pairs(alpha, 1, rng.generator())[0]
    return float(pair[0]), float(pair[1])


def counterexample_batch(alpha: float, window: Window, count: int, gen) -> np.ndarray:
    if window.dim != 2:
        raise ValueError("the parity field lives on Z^2")
    lo, hi = window.lo, window.hi
    n_diag = (hi[0] + hi[1]) - (lo[0] + lo[1]) + 1
    pairs = counterexample_pairs(alpha, count * n_diag, gen).reshape(count, n_diag, 2)
    t1 = np.arange(lo[0], hi[0] + 1)[:, None]
    t2 = np.arange(lo[1], hi[1] + 1)[None, :]
    diag = (t1 + t2) - (lo[0] + lo[1])  # per-site anti-diagonal index
    coord = np.abs(t1 % 2) * np.ones_like(t2)  # 1 where t1 odd
    # Z1 on odd t1, Z2 on even t1
    z1 = pairs[:, diag, 0]
    z2 = pairs[:, diag, 1]
    return np.where(coord[None, :, :] == 1, z1, z2)


# -- generic dispatch ---------------------------------------------------------

def field_batch(spec: ModelSpec, window: Window, count: int, gen) -> np.ndarray:
    """Batch of ``count`` fields for any model, drawn from one generator."""
    dim = model_dim(spec)
    if dim is not None and dim != window.dim:
        raise ValueError(f"model needs dimension {dim}, window has {window.dim}")
    if isinstance(spec, IIDFrechet):
        return frechet_batch(spec.alpha, window, count, gen)
    if isinstance(spec, (MaxMovingAverage, GeneralMaxMovingAverage)):
        return mma_batch(spec, window, count, gen)
    if isinstance(spec, CounterexampleField):
        return counterexample_batch(spec.alpha, window, count, gen)
    if isinstance(spec, BrownResnick):
        from .gaussian import brown_resnick_batch

        return brown_resnick_batch(spec.variogram, window, count, gen, spec.accuracy)
    if isinstance(spec, Mixture):
        weights = np.array([w for w, _ in spec.components])
        picks = gen.choice(len(weights), size=count, p=weights)
        out = np.empty((count, *window.shape))
        # component draws consume the generator in component order
        for ci, (_, comp) in enumerate(spec.components):
            idx = np.nonzero(picks == ci)[0]
            if len(idx):
                out[idx] = field_batch(comp, window, len(idx), gen)
        return out
    raise TypeError(f"unknown model {spec!r}")


def _wrap(spec, window, values, rng) -> FieldSample:
    return FieldSample(
        window=window,
        values=values,
        norm="abs",
        model_tag=model_tag(spec),
        seed=rng.seed,
        stream_id=rng.stream_id,
    )


def sample_field(spec: ModelSpec, window: Window, rng: RngStream) -> FieldSample:
    """One realization of any model on a window."""
    vals = field_batch(spec, window, 1, rng.generator())[0]
    return _wrap(spec, window, vals, rng)


def sample_frechet_field(alpha: float, window: Window, rng: RngStream) -> FieldSample:
    spec = IIDFrechet(alpha=alpha)
    return sample_field(spec, window, rng)


def sample_mma_field(spec, window: Window, rng: RngStream) -> FieldSample:
    if not isinstance(spec, (MaxMovingAverage, GeneralMaxMovingAverage)):
        raise TypeError("expected a max-moving-average spec")
    return sample_field(spec, window, rng)


def sample_counterexample_field(
    alpha: float, window: Window, rng: RngStream
) -> FieldSample:
    return sample_field(CounterexampleField(alpha=alpha), window, rng)


# -- exact conditional sampling given an exceedance at one site ---------------

def supports_conditioning(spec: ModelSpec) -> bool:
    if isinstance(spec, (IIDFrechet, MaxMovingAverage, GeneralMaxMovingAverage)):
        return True
    if isinstance(spec, Mixture):
        return all(supports_conditioning(m) for _, m in spec.components)
    return False


def _frechet_above(gen, c: float, shape) -> np.ndarray:
    # Frechet(1) conditioned on Z > c: invert F on (F(c), 1)
    f_c = math.exp(-1.0 / c)
    u = f_c + gen.random(shape) * (1.0 - f_c)
    return -1.0 / np.log(u)


def _frechet_below(gen, c: float, shape) -> np.ndarray:
    # Frechet(1) conditioned on Z <= c
    f_c = math.exp(-1.0 / c)
    u = gen.random(shape) * f_c
    return -1.0 / np.log(u)


def _conditional_mma_batch(spec, window, point, u, count, gen) -> np.ndarray:
    """MMA fields conditioned on X(point) > u, sampled exactly.

    X(point) exceeds iff one of the weighted noise sites behind it
    exceeds; the occurring subset of those independent events is drawn
    from its exact conditional law, then noise is filled in accordingly.
    """
    items = [((0,) * window.dim, 1.0)] + [
        (o, w) for o, w in _stencil_items(spec) if w > 0.0
    ]
    radius = max(max(abs(x) for x in o) for o, _ in items)
    big = window.dilate(radius)
    sites = [tuple(p + o_l for p, o_l in zip(point, o)) for o, _ in items]
    probs = np.array([-math.expm1(-w / u) for _, w in items])  # P(w Z > u)

    # conditional law of the event-indicator vector given at least one event
    n_ev = len(items)
    subsets = np.arange(1, 1 << n_ev)
    bits = (subsets[:, None] >> np.arange(n_ev)[None, :]) & 1
    logw = bits * np.log(probs)[None, :] + (1 - bits) * np.log1p(-probs)[None, :]
    w_subset = np.exp(logw.sum(axis=1))
    w_subset /= w_subset.sum()
    picks = gen.choice(len(subsets), size=count, p=w_subset)
    occur = bits[picks].astype(bool)  # (count, n_ev)

    z = _frechet(gen, 1.0, (count, *big.shape))
    for j, ((_, w), s) in enumerate(zip(items, sites)):
        c = u / w
        idx = big.index(s)
        col_hi = _frechet_above(gen, c, count)
        col_lo = _frechet_below(gen, c, count)
        z[(slice(None), *idx)] = np.where(occur[:, j], col_hi, col_lo)

    x = z[
        (slice(None), *[slice(radius, radius + s) for s in window.shape])
    ].copy()
    for o, w in _stencil_items(spec):
        if w == 0.0:
            continue
        sl = tuple(
            slice(radius + off, radius + off + s) for off, s in zip(o, window.shape)
        )
        np.maximum(x, w * z[(slice(None), *sl)], out=x)
    return x


def conditional_field_batch(
    spec: ModelSpec, window: Window, point, u: float, count: int, gen
) -> np.ndarray:
    """Batch of fields conditioned on |X(point)| > u (exact, no rejection)."""
    point = as_point(point)
    if not window.contains(point):
        raise ValueError("conditioning point must lie in the window")
    if isinstance(spec, IIDFrechet):
        x = frechet_batch(spec.alpha, window, count, gen)
        idx = window.index(point)
        c = u ** spec.alpha  # reduce to Frechet(1) via Z^alpha
        x[(slice(None), *idx)] = _frechet_above(gen, c, count) ** (1.0 / spec.alpha)
        return x
    if isinstance(spec, (MaxMovingAverage, GeneralMaxMovingAverage)):
        return _conditional_mma_batch(spec, window, point, u, count, gen)
    if isinstance(spec, Mixture):
        if not supports_conditioning(spec):
            raise TooFewEventsError(
                "conditional sampling unsupported for a mixture component"
            )
        w_cond = np.array(
            [w * marginal_exceed_prob(m, u) for w, m in spec.components]
        )
        w_cond /= w_cond.sum()
        picks = gen.choice(len(w_cond), size=count, p=w_cond)
        out = np.empty((count, *window.shape))
        for ci, (_, comp) in enumerate(spec.components):
            idx = np.nonzero(picks == ci)[0]
            if len(idx):
                out[idx] = conditional_field_batch(
                    comp, window, point, u, len(idx), gen
                )
        return out
    raise TooFewEventsError(
        f"exact conditional sampling not available for {type(spec).__name__}; "
        "direct simulation would collect too few exceedances"
    )
