"""Exact step distributions, G-curves and attract/repel intensities.

Everything here is immutable and pure.  G-curves are kept as exact
piecewise-linear objects so that extrema against the exponential baseline
``1 - exp(-t)`` can be found in closed form, segment by segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "InsufficientDataError",
    "StepDistribution",
    "GCurve",
    "Intensity",
    "IntensityReport",
    "ecdf_from_samples",
    "g_from_ecdf",
    "intensity_report",
    "exponential_cdf",
    "ks_bound",
    "lemma0_smooth_bound",
    "lemma0_periodic_envelope",
    "g_p_bound",
    "KS_CRITICAL_99",
]

#: Asymptotic Kolmogorov-Smirnov critical value at the 99% level.
KS_CRITICAL_99 = 1.63

# intensities below this are floating noise
_ZERO_TOL = 1e-12
_SMALL_P = 1e-12


class InsufficientDataError(ValueError):
    """Raised when a statistic is requested from too few observations."""


def exponential_cdf(t):
    """The unbiased baseline ``1 - exp(-t)``."""
    return -np.expm1(-np.asarray(t, dtype=float))


def ks_bound(n: int, critical: float = KS_CRITICAL_99) -> float:
    """Kolmogorov-Smirnov sampling bound ``critical / sqrt(n)``."""
    if n < 1:
        raise InsufficientDataError("insufficient data")
    return critical / math.sqrt(n)


@dataclass(frozen=True, eq=False)
class StepDistribution:
    """Right-continuous distribution function on ``[0, inf)`` with finitely many jumps.

    ``values`` are the jump locations (strictly increasing) and ``cumulative``
    the value of F at each of them.  ``total_mass`` is the mass carried by
    finite values; it equals ``cumulative[-1]``.
    """

    values: np.ndarray
    cumulative: np.ndarray
    total_mass: float

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        c = np.array(self.cumulative, dtype=float)
        if v.ndim != 1 or v.shape != c.shape or v.size == 0:
            raise ValueError("values and cumulative must be equal-length 1-d arrays")
        if not np.all(np.isfinite(v)) or v[0] < 0:
            raise ValueError("jump values must be finite and nonnegative")
        if np.any(np.diff(v) <= 0):
            raise ValueError("jump values must be strictly increasing")
        if np.any(np.diff(c) < 0) or c[0] < 0 or c[-1] > 1 + 1e-12:
            raise ValueError("cumulative probabilities must be nondecreasing in [0, 1]")
        if abs(c[-1] - self.total_mass) > 1e-12:
            raise ValueError("final cumulative probability must equal total_mass")
        v.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "cumulative", c)
        object.__setattr__(self, "total_mass", float(self.total_mass))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.values, t, side="right")
        padded = np.concatenate(([0.0], self.cumulative))
        out = padded[idx]
        return float(out) if out.ndim == 0 else out

    @property
    def probabilities(self) -> np.ndarray:
        return np.diff(self.cumulative, prepend=0.0)

    def mean(self) -> float:
        """``integral_0^inf (1 - F(s)) ds``; infinite when mass escapes to infinity."""
        if self.total_mass < 1 - 1e-12:
            return math.inf
        return float(np.dot(self.values, self.probabilities))

    def sup_distance(self, cdf=exponential_cdf, limit: float = 1.0) -> float:
        """Sup-norm distance to a continuous nondecreasing ``cdf`` with ``cdf(0) = 0``.

        F is constant on each ``[v_i, v_{i+1})`` so the supremum sits at the
        interval ends; ``limit`` is ``cdf(inf)``.
        """
        v, c = self.values, self.cumulative
        h = np.asarray(cdf(v), dtype=float)
        before = np.concatenate(([0.0], c[:-1]))
        d = max(np.max(np.abs(c - h)), np.max(np.abs(before - h)))
        return float(max(d, abs(limit - self.total_mass)))

    @classmethod
    def mixture(cls, parts: Sequence["StepDistribution"], weights: Sequence[float]) -> "StepDistribution":
        """Weighted mixture; weights are normalized to sum to one."""
        w = np.asarray(weights, dtype=float)
        if len(parts) == 0 or w.size != len(parts) or np.any(w < 0) or w.sum() <= 0:
            raise InsufficientDataError("insufficient data")
        w = w / w.sum()
        vals = np.concatenate([p.values for p in parts])
        probs = np.concatenate([p.probabilities * wi for p, wi in zip(parts, w)])
        uniq, inv = np.unique(vals, return_inverse=True)
        mass = np.bincount(inv, weights=probs, minlength=uniq.size)
        masses = np.array([p.total_mass for p in parts])
        # full parts give an exactly full mixture, so G keeps a zero tail slope
        total = 1.0 if np.all(masses == 1.0) else float(np.dot(masses, w))
        cum = np.cumsum(mass)
        cum[-1] = total
        return cls(uniq, np.minimum(cum, total), total)


def ecdf_from_samples(samples, weights=None) -> StepDistribution:
    """Empirical distribution function of nonnegative samples.

    With ``weights`` omitted every sample carries mass ``1/len(samples)``.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise InsufficientDataError("insufficient data")
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise ValueError("samples must be finite and nonnegative")
    if weights is None:
        uniq, counts = np.unique(x, return_counts=True)
        cum = np.cumsum(counts) / x.size
    else:
        w = np.asarray(weights, dtype=float).ravel()
        if w.shape != x.shape or np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be nonnegative, one per sample")
        uniq, inv = np.unique(x, return_inverse=True)
        cum = np.cumsum(np.bincount(inv, weights=w)) / w.sum()
    cum[-1] = 1.0
    return StepDistribution(uniq, cum, 1.0)


@dataclass(frozen=True, eq=False)
class GCurve:
    """Concave nondecreasing piecewise-linear curve starting at the origin.

    ``t[i]``, ``g[i]`` are breakpoints and ``slope[i]`` the slope to the right
    of ``t[i]``; the last slope extends to infinity.
    """

    t: np.ndarray
    g: np.ndarray
    slope: np.ndarray

    def __post_init__(self):
        t = np.array(self.t, dtype=float)
        g = np.array(self.g, dtype=float)
        s = np.array(self.slope, dtype=float)
        if not (t.ndim == g.ndim == s.ndim == 1 and t.size == g.size == s.size >= 1):
            raise ValueError("breakpoint arrays must be equal-length 1-d arrays")
        if t[0] != 0 or g[0] != 0:
            raise ValueError("G-curves start at the origin")
        if np.any(np.diff(t) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(s < -1e-12) or np.any(s > 1 + 1e-12) or np.any(np.diff(s) > 1e-12):
            raise ValueError("slopes must lie in [0, 1] and be nonincreasing")
        for a in (t, g, s):
            a.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "slope", s)

    @classmethod
    def from_points(cls, t, g, tail_slope: float = 0.0) -> "GCurve":
        """Curve through the given breakpoints, continued with ``tail_slope``."""
        t = np.asarray(t, dtype=float)
        g = np.asarray(g, dtype=float)
        slopes = np.append(np.diff(g) / np.diff(t), tail_slope)
        return cls(t, g, slopes)

    @property
    def asymptote(self) -> float:
        """``G(inf)``; the mean of the source distribution."""
        if self.slope[-1] > 0:
            return math.inf
        return float(self.g[-1])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("G is defined on [0, inf)")
        i = np.searchsorted(self.t, t, side="right") - 1
        out = self.g[i] + self.slope[i] * (t - self.t[i])
        return float(out) if out.ndim == 0 else out

    def sup_distance(self, other: "GCurve") -> float:
        """Exact sup-norm distance to another piecewise-linear curve."""
        pts = np.union1d(self.t, other.t)
        d = float(np.max(np.abs(self(pts) - other(pts))))
        if abs(self.slope[-1] - other.slope[-1]) > 1e-15:
            return math.inf
        return d


def g_from_ecdf(F: StepDistribution) -> GCurve:
    """Exact ``G(t) = integral_0^t (1 - F(s)) ds`` as a piecewise-linear curve."""
    v, c = F.values, F.cumulative
    if v[0] == 0:
        t = v
        slope = 1.0 - c
    else:
        t = np.concatenate(([0.0], v))
        slope = 1.0 - np.concatenate(([0.0], c))
    slope = np.clip(slope, 0.0, 1.0)
    g = np.concatenate(([0.0], np.cumsum(slope[:-1] * np.diff(t))))
    return GCurve(t, g, slope)


@dataclass(frozen=True)
class Intensity:
    intensity: float
    distance: Optional[float]


@dataclass(frozen=True)
class IntensityReport:
    repelling: Intensity
    attracting: Intensity
    baseline: str = "exponential"


def _best(ts: np.ndarray, vals: np.ndarray) -> Intensity:
    if ts.size == 0:
        return Intensity(0.0, None)
    order = np.argsort(ts, kind="stable")
    ts, vals = ts[order], vals[order]
    top = vals.max()
    if top <= _ZERO_TOL:
        return Intensity(0.0, None)
    # near-ties (rounding noise) resolve to the smallest distance
    k = int(np.argmax(vals >= top - _ZERO_TOL))
    return Intensity(float(vals[k]), float(ts[k]))


def intensity_report(G: GCurve) -> IntensityReport:
    """Suprema over ``t > 0`` of ``G - (1 - e^-t)`` (repelling) and its negative.

    On a segment of slope ``s`` the difference ``D(t) = G(t) - 1 + e^-t`` is
    convex, so its maximum lies at a breakpoint and its minimum either at a
    breakpoint or at ``t* = -ln s``.  Beyond the last breakpoint a zero slope
    makes D decrease to ``asymptote - 1``; that limit is reported at distance
    ``inf`` when it wins.
    """
    t, g, s = G.t, G.g, G.slope
    d = g - exponential_cdf(t)
    pos = t > 0

    rep_t, rep_v = t[pos], d[pos]
    if s[-1] > 0:
        rep_t = np.append(rep_t, math.inf)
        rep_v = np.append(rep_v, math.inf)

    att_t, att_v = [t[pos]], [-d[pos]]
    ends = np.append(t[1:], math.inf)
    inner = (s > 0) & (s < 1)
    with np.errstate(divide="ignore"):
        crit = np.where(inner, -np.log(np.where(inner, s, 1.0)), -1.0)
    ok = inner & (crit > t) & (crit < ends)
    if np.any(ok):
        ct = crit[ok]
        att_t.append(ct)
        att_v.append(-(g[ok] + s[ok] * (ct - t[ok]) - exponential_cdf(ct)))
    if s[-1] == 0:
        att_t.append(np.array([math.inf]))
        att_v.append(np.array([1.0 - g[-1]]))
    att = _best(np.concatenate(att_t), np.concatenate(att_v))
    return IntensityReport(_best(rep_t, rep_v), att)


def _check_p(p: float, allow_one: bool) -> None:
    if not (p > 0 and (p <= 1 if allow_one else p < 1)):
        bound = "(0, 1]" if allow_one else "(0, 1)"
        raise ValueError(f"p must lie in {bound}, got {p!r}")


def lemma0_smooth_bound(p: float, t: float) -> float:
    """``(1 - e_p^-t) / ln e_p`` with ``e_p = (1 - p)^(-1/p)``."""
    _check_p(p, allow_one=False)
    if t < 0:
        raise ValueError("t must be nonnegative")
    if p < _SMALL_P:
        return float(-math.expm1(-t))
    log_ep = -math.log1p(-p) / p
    return float(-math.expm1(-t * log_ep) / log_ep)


def lemma0_periodic_envelope(p: float, t: float) -> float:
    """``integral_0^t (1-p)^floor(s/p) ds``: the G-curve of a geometric mixture of unit steps."""
    _check_p(p, allow_one=True)
    if t < 0:
        raise ValueError("t must be nonnegative")
    m = math.floor(t / p)
    tail = (1.0 - p) ** m
    return float((1.0 - tail) + (t - m * p) * tail)


def g_p_bound(p: float, t: float) -> float:
    """``min(1, lemma0_smooth_bound(p, t) + p t)``."""
    return min(1.0, lemma0_smooth_bound(p, t) + p * t)
