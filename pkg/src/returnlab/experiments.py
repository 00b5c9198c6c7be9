"""Composite desk-scale experiments on generated samples.

Each experiment scans the sample at one or more block lengths, reduces the
per-block statistics in lexicographic block order and returns an immutable
summary.  Per-block work may run on a thread pool; the reduction order does
not depend on it, so results are identical for any thread count.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (
    GCurve,
    InsufficientDataError,
    IntensityReport,
    StepDistribution,
    exponential_cdf,
    g_from_ecdf,
    intensity_report,
    ks_bound,
)
from .generators import Example1, Example2, Example3, SymbolSequence
from .scan import (
    DEFAULT_MIN_COUNT,
    BlockStats,
    BlockTable,
    UndersampledError,
    entropy_plugin,
    hitting_ecdf,
    return_ecdf,
    scan_blocks,
)

__all__ = [
    "BlockSurvey",
    "DecayRow",
    "DecayCurve",
    "LimitLawProbe",
    "KacRow",
    "block_survey",
    "theorem1_decay",
    "limit_law_probe",
    "kac_suite",
    "example1_check",
    "example1_exact_block_entropy",
    "example2_attracting_check",
    "remark4_check",
    "mirrored_check",
    "max_entropy_n",
    "example2_passed",
    "skyscraper_check",
    "ornstein_weiss_scale",
    "DESK_EXAMPLE1",
    "DESK_EXAMPLE2",
    "DESK_REMARK4",
    "DESK_MIRRORED",
]

DEFAULT_T_GRID = tuple(np.round(np.arange(0.25, 5.01, 0.25), 2))

# Desk-scale instances used by the acceptance suite and the ``examples`` command.
DESK_EXAMPLE1 = Example1(N=6, delta=1.5, n=3, r=4)
DESK_EXAMPLE2 = Example2(alphabet_size=2, forbidden=((0, 0), (1, 1)), m=40_000, n=4)
DESK_REMARK4 = Example3(block_lengths=(400,), repetitions=(2,), base_period=40_000)
DESK_MIRRORED = Example3(block_lengths=(1000,), repetitions=(2,), mirrored=True, base_period=100_000)


def _map(fn: Callable, items: Sequence, threads: int = 1) -> list:
    if threads == 1 or len(items) < 2:
        return [fn(x) for x in items]
    workers = threads if threads > 0 else (os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _n_values(n_range) -> list[int]:
    if isinstance(n_range, range):
        return list(n_range)
    vals = list(n_range)
    if len(vals) == 2 and vals[0] <= vals[1]:
        return list(range(int(vals[0]), int(vals[1]) + 1))
    return [int(v) for v in vals]


# -- per-block survey ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BlockSurvey:
    """Return-time statistics of every analyzed block at one length."""

    n: int
    table: BlockTable
    index: np.ndarray
    measures: np.ndarray
    ks: np.ndarray
    means: np.ndarray
    repelling: np.ndarray
    repelling_at: np.ndarray
    attracting: np.ndarray
    attracting_at: np.ndarray

    @property
    def analyzed_mass(self) -> float:
        return float(self.measures.sum())

    @property
    def block_count(self) -> int:
        return int(self.index.size)

    def mass_where(self, mask: np.ndarray) -> float:
        return float(self.measures[mask].sum())

    def fraction_where(self, mask: np.ndarray) -> float:
        """Share of the analyzed mass on which ``mask`` holds."""
        total = self.analyzed_mass
        return self.mass_where(mask) / total if total > 0 else math.nan


def _block_row(stats: BlockStats):
    F = return_ecdf(stats)
    rep = intensity_report(g_from_ecdf(F))
    return (
        F.sup_distance(),
        F.mean(),
        rep.repelling.intensity,
        rep.repelling.distance if rep.repelling.distance is not None else math.nan,
        rep.attracting.intensity,
        rep.attracting.distance if rep.attracting.distance is not None else math.nan,
    )


def block_survey(seq: SymbolSequence, n: int, min_count: int = DEFAULT_MIN_COUNT, threads: int = 1) -> BlockSurvey:
    table = scan_blocks(seq, n, min_count)
    index = table.analyzed_index
    rows = _map(_block_row, [table.block(int(i)) for i in index], threads)
    cols = np.array(rows, dtype=float).reshape(-1, 6).T
    return BlockSurvey(n, table, index, table.measures[index], *cols)


# -- Theorem-1 decay ----------------------------------------------------------


@dataclass(frozen=True)
class DecayRow:
    n: int
    repelling_mass: Optional[float]
    attracting_mass: Optional[float]
    analyzed_mass: Optional[float]
    block_count: int
    error: Optional[str] = None


@dataclass(frozen=True)
class DecayCurve:
    epsilon: float
    rows: tuple

    def row(self, n: int) -> DecayRow:
        return next(r for r in self.rows if r.n == n)


def theorem1_decay(seq, n_range, epsilon: float, min_count: int = DEFAULT_MIN_COUNT, threads: int = 1) -> DecayCurve:
    """Measure of blocks repelling (attracting) with intensity at least ``epsilon``, per length."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    rows = []
    for n in _n_values(n_range):
        try:
            s = block_survey(seq, n, min_count, threads)
        except InsufficientDataError as exc:
            rows.append(DecayRow(n, None, None, None, 0, str(exc)))
            continue
        rows.append(
            DecayRow(
                n,
                s.mass_where(s.repelling >= epsilon),
                s.mass_where(s.attracting >= epsilon),
                s.analyzed_mass,
                s.block_count,
            )
        )
    return DecayCurve(float(epsilon), tuple(rows))


# -- hitting-time dominance ----------------------------------------------------


@dataclass(frozen=True)
class ProbeRow:
    n: int
    violation_fraction: Optional[float]
    analyzed_mass: Optional[float]
    error: Optional[str] = None


@dataclass(frozen=True)
class LimitLawProbe:
    epsilon: float
    t_grid: tuple
    rows: tuple

    def row(self, n: int) -> ProbeRow:
        return next(r for r in self.rows if r.n == n)


def limit_law_probe(
    seq, n_range, epsilon: float, t_grid=DEFAULT_T_GRID, min_count: int = DEFAULT_MIN_COUNT, threads: int = 1
) -> LimitLawProbe:
    """Mass-weighted share of blocks whose hitting law exceeds ``1 - e^-t + epsilon`` on the grid."""
    grid = np.asarray(t_grid, dtype=float)
    base = exponential_cdf(grid)

    def violates(stats):
        return bool(np.any(hitting_ecdf(seq, stats)(grid) > base + epsilon))

    rows = []
    for n in _n_values(n_range):
        try:
            table = scan_blocks(seq, n, min_count)
            idx = table.analyzed_index
            if idx.size == 0:
                raise UndersampledError(f"undersampled: no block of length {n} reaches {min_count} occurrences")
            flags = np.array(_map(violates, [table.block(int(i)) for i in idx], threads))
        except InsufficientDataError as exc:
            rows.append(ProbeRow(n, None, None, str(exc)))
            continue
        w = table.measures[idx]
        rows.append(ProbeRow(n, float(w[flags].sum() / w.sum()), float(w.sum())))
    return LimitLawProbe(float(epsilon), tuple(float(t) for t in grid), tuple(rows))


# -- Kac ----------------------------------------------------------------------


@dataclass(frozen=True)
class KacRow:
    n: int
    mean_normalized_return: float
    analyzed_mass: float
    passed: bool


def kac_suite(seq, n_range, min_count: int = DEFAULT_MIN_COUNT, tolerance: float = 0.05, threads: int = 1) -> tuple:
    """Mass-weighted mean normalized return per length; passes inside ``1 +- tolerance``.

    Raises :class:`UndersampledError` when a length has no analyzable block.
    """
    rows = []
    for n in _n_values(n_range):
        table = scan_blocks(seq, n, min_count)
        idx = table.analyzed_index
        if idx.size == 0:
            raise UndersampledError(f"undersampled: no block of length {n} reaches {min_count} occurrences")
        means = np.array(_map(lambda st: return_ecdf(st).mean(), [table.block(int(i)) for i in idx], threads))
        w = table.measures[idx]
        mean = float(np.dot(w, means) / w.sum())
        rows.append(KacRow(n, mean, float(w.sum()), abs(mean - 1.0) <= tolerance))
    return tuple(rows)


# -- skyscraper and Ornstein-Weiss --------------------------------------------


@dataclass(frozen=True)
class SkyscraperRow:
    block: tuple
    measure: float
    tolerance: float
    max_excess: float
    max_deficit: float

    @property
    def passed(self) -> bool:
        return self.max_excess <= self.tolerance and self.max_deficit <= self.tolerance


def skyscraper_check(seq, n: int, min_count: int = DEFAULT_MIN_COUNT) -> tuple:
    """Compare the hitting law with ``[G - measure, G]`` at every breakpoint of either curve.

    ``max_excess`` is the largest ``tildeF - G`` and ``max_deficit`` the
    largest ``G - measure - tildeF``; the tolerance is twice the KS bound
    for the number of observed gaps.
    """
    table = scan_blocks(seq, n, min_count)
    out = []
    for stats in table.analyzed():
        G = g_from_ecdf(return_ecdf(stats))
        H = hitting_ecdf(seq, stats)
        pts = np.union1d(G.t, H.values)
        g, h = G(pts), H(pts)
        # the left limits of the hitting law matter too
        h_left = np.concatenate(([0.0], H.cumulative[:-1]))
        g_left = G(H.values)
        excess = max(float(np.max(h - g)), 0.0)
        deficit = max(float(np.max(g - stats.empirical_measure - h)), float(np.max(g_left - stats.empirical_measure - h_left)), 0.0)
        out.append(SkyscraperRow(stats.block, stats.empirical_measure, 2 * ks_bound(stats.count - 1), excess, deficit))
    return tuple(out)


@dataclass(frozen=True)
class ScaleRow:
    n: int
    median_gap: float
    exponent: float


def ornstein_weiss_scale(seq, n_range, min_count: int = DEFAULT_MIN_COUNT) -> tuple:
    """``log2(median gap) / n`` with gaps pooled over every occurrence of every n-block."""
    rows = []
    for n in _n_values(n_range):
        table = scan_blocks(seq, n, min_count)
        pos = table.positions
        d = np.diff(pos)
        same = np.ones(pos.size - 1, dtype=bool)
        same[table.offsets[1:-1] - 1] = False
        gaps = d[same]
        if gaps.size == 0:
            raise UndersampledError(f"undersampled: no repeated block of length {n}")
        med = float(np.median(gaps))
        rows.append(ScaleRow(n, med, math.log2(med) / n))
    return tuple(rows)


# -- Example 1 ----------------------------------------------------------------


def example1_exact_block_entropy(spec: Example1, k: int) -> float:
    """``H(P^k)`` in bits of the construction's stationary law, by exhaustive enumeration.

    The law is a uniform phase over one marker cycle and independent uniform
    permutations inside every ``C_i`` block the window touches.
    """
    spec.validate()
    W, n, r = spec.words_per_block, spec.n, spec.r
    N0 = spec.base_size
    block_len = n * W
    perms = list(itertools.permutations(range(W)))
    digits = np.indices((N0,) * (n - 1)).reshape(n - 1, -1).T
    cycle = spec.cycle_length
    touched = -(-(block_len - 1 + k) // block_len)
    if len(perms) ** touched * cycle > 5_000_000:
        raise ValueError("construction too large for exhaustive enumeration")
    contents = {}
    for i in range(r):
        rows = np.empty((len(perms), W, n), dtype=np.int64)
        rows[:, :, : n - 1] = digits[np.array(perms)]
        rows[:, :, n - 1] = N0 + i
        contents[i] = rows.reshape(len(perms), -1)
    law: dict = {}
    for phase in range(cycle):
        first = phase // block_len
        span = -(-(phase % block_len + k) // block_len)
        start = phase % block_len
        for combo in itertools.product(range(len(perms)), repeat=span):
            text = np.concatenate([contents[(first + j) % r][c] for j, c in enumerate(combo)])
            word = text[start : start + k].tobytes()
            law[word] = law.get(word, 0.0) + 1.0 / (cycle * len(perms) ** span)
    p = np.array(sorted(law.values()))
    return float(-np.sum(p * np.log2(p)))


@dataclass(frozen=True)
class Example1Report:
    n: int
    union_mass: float
    expected_union_mass: float
    gaps_within_bounds: bool
    normalized_gap_range: tuple
    epsilon: float
    repelling_mass: float
    entropy_n: int
    plugin_rate: float
    exact_rate: float
    asymptotic_rate: float

    @property
    def passed(self) -> bool:
        return (
            abs(self.union_mass - self.expected_union_mass) <= 0.02
            and self.gaps_within_bounds
            and abs(self.repelling_mass - self.union_mass) <= 0.02
            and abs(self.plugin_rate - self.exact_rate) <= 0.05
        )


def example1_check(seq, spec: Example1, epsilon: float = 0.3, entropy_n: int = 6, min_count: int = DEFAULT_MIN_COUNT, threads: int = 1) -> Example1Report:
    """Marked-block mass, gap window and repelling mass at the designed length."""
    n, r = spec.n, spec.r
    survey = block_survey(seq, n, min_count, threads)
    table = survey.table
    marked = np.array([table.word(int(i))[-1] >= spec.base_size for i in range(len(table))])
    union_mass = float(table.measures[marked].sum())
    lo, hi = math.inf, -math.inf
    for i in np.flatnonzero(marked):
        st = table.block(int(i))
        g = st.gaps * st.empirical_measure
        if g.size:
            lo, hi = min(lo, float(g.min())), max(hi, float(g.max()))
    inside = bool(lo >= 1 - 1 / r and hi <= 1 + 1 / r)
    est = entropy_plugin(seq, entropy_n)
    W = spec.words_per_block
    return Example1Report(
        n=n,
        union_mass=union_mass,
        expected_union_mass=1 / n,
        gaps_within_bounds=inside,
        normalized_gap_range=(lo, hi),
        epsilon=epsilon,
        repelling_mass=survey.mass_where(survey.repelling >= epsilon),
        entropy_n=entropy_n,
        plugin_rate=est.plugin_rate,
        exact_rate=example1_exact_block_entropy(spec, entropy_n) / entropy_n,
        asymptotic_rate=math.log2(math.factorial(W)) / (n * W),
    )


# -- Example 2 ----------------------------------------------------------------


def _weighted_median(values: np.ndarray, weights: np.ndarray) -> float:
    if values.size == 0:
        return math.nan
    order = np.argsort(values, kind="stable")
    cw = np.cumsum(weights[order])
    return float(values[order][np.searchsorted(cw, 0.5 * cw[-1])])


@dataclass(frozen=True)
class AttractRow:
    n: int
    analyzed_mass: float
    attracting_mass: float
    median_attracting: float
    repelling_mass: float
    block_count: int


def example2_passed(rows, threshold: float = 0.3, epsilon: float = 0.05) -> bool:
    """Median attracting intensity at least ``threshold`` and repelling mass at most ``epsilon`` at every length."""
    return bool(rows) and all(r.median_attracting >= threshold and r.repelling_mass <= epsilon for r in rows)


def example2_attracting_check(
    seq, length_window, min_count: int = DEFAULT_MIN_COUNT, threshold: float = 0.3, epsilon: float = 0.05, threads: int = 1
) -> tuple:
    """Per length: mass attracting with intensity >= ``threshold``, mass-weighted median
    attracting intensity, and mass repelling with intensity >= ``epsilon``.

    Lengths with no analyzable block are skipped.
    """
    rows = []
    for n in _n_values(length_window):
        try:
            s = block_survey(seq, n, min_count, threads)
        except InsufficientDataError:
            continue
        if s.block_count == 0:
            continue
        rows.append(
            AttractRow(
                n,
                s.analyzed_mass,
                s.mass_where(s.attracting >= threshold),
                _weighted_median(s.attracting, s.measures),
                s.mass_where(s.repelling >= epsilon),
                s.block_count,
            )
        )
    return tuple(rows)


# -- Remark 4 -----------------------------------------------------------------

PAIRED_G = GCurve.from_points([0.0, 2.0], [0.0, 1.0])


@dataclass(frozen=True, eq=False)
class Remark4Report:
    n: int
    aggregate: GCurve
    sup_distance: float
    intensities: IntensityReport
    repelling_target: float = math.exp(-2)
    attracting_target: float = (1 - math.log(2)) / 2

    @property
    def passed(self) -> bool:
        rep, att = self.intensities.repelling, self.intensities.attracting
        return (
            self.sup_distance <= 0.05
            and abs(rep.intensity - self.repelling_target) <= 0.02
            and rep.distance is not None
            and abs(rep.distance - 2.0) <= 0.1
            and abs(att.intensity - self.attracting_target) <= 0.02
            and att.distance is not None
            and abs(att.distance - math.log(2)) <= 0.1
        )


def aggregate_return_law(seq, n: int, min_count: int = DEFAULT_MIN_COUNT) -> StepDistribution:
    """Mass-weighted mixture of the return laws of all analyzed blocks."""
    table = scan_blocks(seq, n, min_count)
    idx = table.analyzed_index
    if idx.size == 0:
        raise UndersampledError(f"undersampled: no block of length {n} reaches {min_count} occurrences")
    parts = [return_ecdf(table.block(int(i))) for i in idx]
    return StepDistribution.mixture(parts, table.measures[idx])


def remark4_check(seq, n: int, min_count: int = DEFAULT_MIN_COUNT) -> Remark4Report:
    """Aggregate G against ``min(1, t/2)`` and its intensities."""
    G = g_from_ecdf(aggregate_return_law(seq, n, min_count))
    return Remark4Report(n, G, G.sup_distance(PAIRED_G), intensity_report(G))


# -- mirrored Example 3 -------------------------------------------------------


def max_entropy_n(sample_length: int, alphabet_size: int) -> int:
    """Largest block length the plug-in entropy guard accepts."""
    return int((math.log2(sample_length) - 4) // math.log2(max(alphabet_size, 2)))


@dataclass(frozen=True)
class MirroredReport:
    n: int
    unbiased_fraction: float
    max_repelling: float
    max_attracting: float
    entropy_n: int
    plugin_rate: float
    tolerance: float = 0.06
    entropy_ceiling: float = 0.1

    @property
    def unbiased(self) -> bool:
        return self.unbiased_fraction >= 0.95

    @property
    def low_entropy(self) -> bool:
        return self.plugin_rate <= self.entropy_ceiling

    @property
    def passed(self) -> bool:
        return self.unbiased and self.low_entropy


def mirrored_check(seq, n: int = 10, entropy_n: Optional[int] = None, min_count: int = DEFAULT_MIN_COUNT, threads: int = 1) -> MirroredReport:
    """Share of analyzed mass with both intensities at most 0.06, and the plug-in entropy rate.

    The entropy is taken at the largest length the guard allows unless
    ``entropy_n`` is given.
    """
    s = block_survey(seq, n, min_count, threads)
    k = entropy_n or max_entropy_n(len(seq), seq.alphabet_size)
    ok = (s.repelling <= 0.06) & (s.attracting <= 0.06)
    return MirroredReport(
        n,
        s.fraction_where(ok),
        float(s.repelling.max(initial=0.0)),
        float(s.attracting.max(initial=0.0)),
        k,
        entropy_plugin(seq, k).plugin_rate,
    )
