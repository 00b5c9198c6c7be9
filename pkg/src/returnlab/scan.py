"""Occurrence indexing of n-blocks and the empirical return/hitting statistics built on it."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .core import InsufficientDataError, StepDistribution, ecdf_from_samples
from .generators import SymbolSequence

__all__ = [
    "UndersampledError",
    "BlockStats",
    "BlockTable",
    "EntropyEstimate",
    "scan_blocks",
    "return_ecdf",
    "kth_return_ecdf",
    "hitting_ecdf",
    "entropy_plugin",
    "DEFAULT_MIN_COUNT",
]

DEFAULT_MIN_COUNT = 200


class UndersampledError(InsufficientDataError):
    pass


def block_codes(symbols: np.ndarray, n: int, alphabet_size: int) -> np.ndarray:
    """Integer code of every length-``n`` window; code order is lexicographic order."""
    x = np.asarray(symbols)
    windows = x.size - n + 1
    codes = np.zeros(windows, dtype=np.int64)
    for j in range(n):
        codes *= alphabet_size
        codes += x[j : j + windows]
    return codes


def _fits_int64(n: int, alphabet_size: int) -> bool:
    return n * math.log2(max(alphabet_size, 2)) <= 62


def _window_keys(seq: SymbolSequence, n: int) -> np.ndarray:
    if _fits_int64(n, seq.alphabet_size):
        return block_codes(seq.symbols, n, seq.alphabet_size)
    # long words: compare raw big-endian bytes, which is lexicographic as well
    x = seq.symbols.astype(">u2") if seq.alphabet_size > 256 else seq.symbols
    win = np.lib.stride_tricks.sliding_window_view(x, n)
    return np.ascontiguousarray(win).view(np.dtype((np.void, win.shape[1] * x.itemsize))).ravel()


@dataclass(frozen=True, eq=False)
class BlockStats:
    """One n-block with its (possibly overlapping) occurrence positions."""

    block: tuple
    positions: np.ndarray
    empirical_measure: float
    min_count: int = DEFAULT_MIN_COUNT

    @property
    def count(self) -> int:
        return int(self.positions.size)

    @property
    def gaps(self) -> np.ndarray:
        """Consecutive position differences; the censored tail gap is not included."""
        return np.diff(self.positions)

    @property
    def insufficient(self) -> bool:
        return self.count < self.min_count


class BlockTable:
    """All n-blocks of a sample in lexicographic order.

    Positions live in one array sorted by (block, position); individual
    :class:`BlockStats` are views created on demand.
    """

    def __init__(self, n, sample_length, alphabet_size, keys, counts, offsets, positions, min_count):
        self.n = n
        self.sample_length = sample_length
        self.alphabet_size = alphabet_size
        self.keys = keys
        self.counts = counts
        self.offsets = offsets
        self.positions = positions
        self.min_count = min_count
        self.window_count = sample_length - n + 1
        self.measures = counts / self.window_count

    def __len__(self) -> int:
        return int(self.counts.size)

    def word(self, i: int) -> tuple:
        key = self.keys[i]
        if isinstance(key, (bytes, np.void)):
            raw = np.frombuffer(bytes(key), dtype=">u2" if self.alphabet_size > 256 else np.uint8)
            return tuple(int(a) for a in raw)
        digits = []
        key = int(key)
        for _ in range(self.n):
            key, d = divmod(key, self.alphabet_size)
            digits.append(d)
        return tuple(reversed(digits))

    def block(self, i: int) -> BlockStats:
        pos = self.positions[self.offsets[i] : self.offsets[i + 1]]
        return BlockStats(self.word(i), pos, float(self.measures[i]), self.min_count)

    def __iter__(self) -> Iterator[BlockStats]:
        for i in range(len(self)):
            yield self.block(i)

    @property
    def analyzed_index(self) -> np.ndarray:
        return np.flatnonzero(self.counts >= self.min_count)

    def analyzed(self) -> Iterator[BlockStats]:
        """Blocks with at least ``min_count`` occurrences."""
        for i in self.analyzed_index:
            yield self.block(int(i))

    @property
    def analyzed_mass(self) -> float:
        return float(self.measures[self.analyzed_index].sum())

    def find(self, word) -> Optional[BlockStats]:
        """Statistics of ``word``, or None if it never occurs."""
        word = tuple(int(a) for a in word)
        if len(word) != self.n or not len(self) or any(a < 0 or a >= self.alphabet_size for a in word):
            return None
        if self.keys.dtype.kind == "V":
            i = next((j for j in range(len(self)) if self.word(j) == word), None)
        else:
            code = 0
            for a in word:
                code = code * self.alphabet_size + a
            j = int(np.searchsorted(self.keys, code))
            i = j if j < len(self) and int(self.keys[j]) == code else None
        return None if i is None else self.block(i)


def scan_blocks(seq: SymbolSequence, n: int, min_count: int = DEFAULT_MIN_COUNT) -> BlockTable:
    """Index every length-``n`` window of ``seq``, overlaps included."""
    L = len(seq)
    if n < 1:
        raise ValueError("block length must be positive")
    if min_count < 2:
        raise ValueError("min_count must be at least 2")
    if n > L / 10:
        raise UndersampledError(f"undersampled: block length {n} exceeds a tenth of the sample length {L}")
    keys = _window_keys(seq, n)
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    starts = np.flatnonzero(np.concatenate(([True], sorted_keys[1:] != sorted_keys[:-1])))
    offsets = np.append(starts, sorted_keys.size)
    counts = np.diff(offsets)
    return BlockTable(n, L, seq.alphabet_size, sorted_keys[starts], counts, offsets, order, min_count)


def _require(stats: BlockStats, needed: int) -> None:
    if stats.count < needed:
        raise InsufficientDataError(f"insufficient occurrences: count={stats.count}, need {needed}")


def return_ecdf(stats: BlockStats) -> StepDistribution:
    """Empirical distribution of the normalized first return ``measure * gap``."""
    _require(stats, stats.min_count)
    gaps, freq = np.unique(stats.gaps, return_counts=True)
    return StepDistribution(gaps * stats.empirical_measure, np.cumsum(freq) / freq.sum(), 1.0)


def kth_return_ecdf(stats: BlockStats, k: int) -> StepDistribution:
    """Empirical distribution of the normalized k-th return time."""
    if k < 1:
        raise ValueError("k must be positive")
    _require(stats, stats.min_count + k)
    if k == 1:
        return return_ecdf(stats)
    pos = stats.positions
    return ecdf_from_samples((pos[k:] - pos[:-k]) * stats.empirical_measure)


def hitting_ecdf(seq: SymbolSequence, stats: BlockStats) -> StepDistribution:
    """Empirical distribution of the normalized waiting time for the next visit.

    Every start ``i`` in ``[0, L - n - max_gap)`` that precedes the last
    occurrence contributes ``min{p - i : p occurrence, p >= i + 1}``.
    Starts between two occurrences produce consecutive waits, so the
    distribution is assembled from ranges rather than by enumeration.
    """
    _require(stats, stats.min_count)
    pos = stats.positions.astype(np.int64)
    n = len(stats.block)
    gaps = np.diff(pos)
    cutoff = min(len(seq) - n - int(gaps.max()), int(pos[-1]))
    if cutoff <= 0:
        raise InsufficientDataError("insufficient data: no uncensored start index")
    # start-index segments [a, b) all waiting for occurrence at p
    a = np.concatenate(([0], pos[:-1]))
    p = pos
    b = np.minimum(p, cutoff)
    keep = b > a
    a, b, p = a[keep], b[keep], p[keep]
    lo = p - b + 1
    hi = p - a
    top = int(hi.max())
    diff = np.bincount(lo, minlength=top + 2) - np.bincount(hi + 1, minlength=top + 2)
    freq = np.cumsum(diff)[: top + 1]
    waits = np.flatnonzero(freq)
    counts = freq[waits]
    return StepDistribution(waits * stats.empirical_measure, np.cumsum(counts) / counts.sum(), 1.0)


@dataclass(frozen=True)
class EntropyEstimate:
    n: int
    plugin_rate: float
    differential_rate: float
    sample_length: int


def _block_entropy(seq: SymbolSequence, n: int) -> float:
    if n == 0:
        return 0.0
    _, counts = np.unique(block_codes(seq.symbols, n, seq.alphabet_size), return_counts=True)
    p = counts / counts.sum()
    return float(-np.sum(p * np.log2(p)))


def entropy_plugin(seq: SymbolSequence, n: int) -> EntropyEstimate:
    """Plug-in Shannon entropy of the empirical n-block law, in bits (no bias correction)."""
    L = len(seq)
    if n < 1:
        raise ValueError("block length must be positive")
    if n * math.log2(max(seq.alphabet_size, 1)) > math.log2(L) - 4:
        raise UndersampledError(f"undersampled entropy: n={n} too large for L={L}")
    h_n = _block_entropy(seq, n)
    h_prev = _block_entropy(seq, n - 1)
    cap = math.log2(max(seq.alphabet_size, 1))
    return EntropyEstimate(
        n=n,
        plugin_rate=min(max(h_n / n, 0.0), cap),
        differential_rate=min(max(h_n - h_prev, 0.0), cap),
        sample_length=L,
    )
