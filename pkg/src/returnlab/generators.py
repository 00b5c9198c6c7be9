"""Seeded samplers for the process catalog.

Every sampler is a pure function of ``(spec, length, seed)``.  Independent
random streams are derived from the pair ``(seed, component)`` through
:class:`numpy.random.SeedSequence`, with these component indices:

====  =====================================================
0     phase offset (stationary start)
1     main symbol stream / coin flips / base word
2     component lengths (Example 2)
10+i  SFT component ``i`` of Example 2
====  =====================================================

so that regenerating one part of a construction never perturbs another.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import ClassVar, Optional, Union

import numpy as np

__all__ = [
    "SpecError",
    "ConstructionTooLarge",
    "SamplingInfeasible",
    "Bernoulli",
    "Markov",
    "Periodic",
    "Sturmian",
    "Example1",
    "Example2",
    "Example3",
    "ProcessSpec",
    "Provenance",
    "SymbolSequence",
    "process_from_dict",
    "generate",
    "generate_example1",
    "generate_example2",
    "generate_example3",
    "stutter",
    "component_rng",
]

_MASK64 = (1 << 64) - 1
_ENUMERATION_CAP = 100_000
_CHUNK = 1 << 20


class SpecError(ValueError):
    """Invalid process parameters; ``field`` names the offending parameter."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ConstructionTooLarge(ValueError):
    pass


class SamplingInfeasible(RuntimeError):
    pass


def component_rng(seed: int, component: int) -> np.random.Generator:
    """Independent generator for stream ``component`` of a run seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) & _MASK64, component])))


# -- process specifications ---------------------------------------------------


@dataclass(frozen=True)
class Bernoulli:
    probabilities: tuple

    kind: ClassVar[str] = "bernoulli"

    def __post_init__(self):
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))

    @property
    def alphabet_size(self) -> int:
        return len(self.probabilities)

    def validate(self) -> None:
        _check_probability_vector(self.probabilities, "probabilities")


@dataclass(frozen=True)
class Markov:
    matrix: tuple
    initial: Optional[tuple] = None

    kind: ClassVar[str] = "markov"

    def __post_init__(self):
        object.__setattr__(self, "matrix", tuple(tuple(float(x) for x in row) for row in self.matrix))
        if self.initial is not None:
            object.__setattr__(self, "initial", tuple(float(x) for x in self.initial))

    @property
    def alphabet_size(self) -> int:
        return len(self.matrix)

    def validate(self) -> None:
        k = len(self.matrix)
        if k == 0 or any(len(row) != k for row in self.matrix):
            raise SpecError("matrix", "must be a nonempty square matrix")
        for i, row in enumerate(self.matrix):
            _check_probability_vector(row, f"matrix[{i}]")
        if self.initial is not None:
            if len(self.initial) != k:
                raise SpecError("initial", "length must match the matrix")
            _check_probability_vector(self.initial, "initial")

    def stationary(self) -> np.ndarray:
        """Stationary distribution (left Perron vector)."""
        P = np.asarray(self.matrix)
        k = P.shape[0]
        A = np.vstack([P.T - np.eye(k), np.ones(k)])
        b = np.zeros(k + 1)
        b[-1] = 1.0
        pi = np.linalg.lstsq(A, b, rcond=None)[0]
        pi = np.clip(pi, 0, None)
        return pi / pi.sum()


@dataclass(frozen=True)
class Periodic:
    word: tuple

    kind: ClassVar[str] = "periodic"

    def __post_init__(self):
        object.__setattr__(self, "word", tuple(int(x) for x in self.word))

    @property
    def alphabet_size(self) -> int:
        return max(self.word) + 1

    def validate(self) -> None:
        if not self.word or min(self.word) < 0:
            raise SpecError("word", "must be a nonempty word of nonnegative symbols")


@dataclass(frozen=True)
class Sturmian:
    alpha: float = (math.sqrt(5) - 1) / 2

    kind: ClassVar[str] = "sturmian"
    alphabet_size: ClassVar[int] = 2

    def validate(self) -> None:
        if not (0 < self.alpha < 1):
            raise SpecError("alpha", "slope must lie in (0, 1)")


@dataclass(frozen=True)
class Example1:
    """Marked-block tower: ``r`` marker symbols cycling over permutation blocks."""

    N: int
    delta: float
    n: int
    r: int

    kind: ClassVar[str] = "example1"

    @property
    def alphabet_size(self) -> int:
        return self.N

    @property
    def base_size(self) -> int:
        return math.floor(self.N * 2.0 ** (-self.delta))

    @property
    def words_per_block(self) -> int:
        return self.base_size ** (self.n - 1)

    @property
    def cycle_length(self) -> int:
        return self.n * self.r * self.words_per_block

    def marker(self, i: int) -> int:
        """Symbol of marker ``i`` (1-based)."""
        return self.base_size + i - 1

    def validate(self) -> None:
        if self.n < 2:
            raise SpecError("n", "marked block length must be at least 2")
        if self.r < 2:
            raise SpecError("r", "at least two markers are required")
        if self.delta < 0:
            raise SpecError("delta", "entropy gap must be nonnegative")
        if self.base_size < 2:
            raise SpecError("N", "floor(N * 2^-delta) must be at least 2")
        if self.base_size + self.r > self.N:
            raise SpecError("r", "base symbols plus markers exceed the alphabet")


@dataclass(frozen=True)
class Example2:
    """One level of the nested-SFT construction: cycling components avoiding ``forbidden[i]``."""

    alphabet_size: int
    forbidden: tuple
    m: int
    n: int

    kind: ClassVar[str] = "example2"

    def __post_init__(self):
        object.__setattr__(self, "forbidden", tuple(tuple(int(a) for a in w) for w in self.forbidden))

    @property
    def r(self) -> int:
        return len(self.forbidden)

    @property
    def word_length(self) -> int:
        return len(self.forbidden[0])

    def validate(self) -> None:
        if self.alphabet_size < 2:
            raise SpecError("alphabet_size", "need at least two symbols")
        if self.r < 2:
            raise SpecError("forbidden", "at least two forbidden words are required")
        l = len(self.forbidden[0])
        if l < 2 or any(len(w) != l for w in self.forbidden):
            raise SpecError("forbidden", "words must share one length l >= 2")
        if len(set(self.forbidden)) != self.r:
            raise SpecError("forbidden", "words must be pairwise distinct")
        if any(a < 0 or a >= self.alphabet_size for w in self.forbidden for a in w):
            raise SpecError("forbidden", "symbols outside the alphabet")
        if self.n < 1:
            raise SpecError("n", "inner scale must be positive")
        if self.m < self.n * self.n:
            raise SpecError("m", "component length must be at least n^2")


@dataclass(frozen=True)
class Example3:
    """Stuttering construction; ``base_period`` replaces the coin by a periodic (odometer) base."""

    block_lengths: tuple
    repetitions: tuple
    mirrored: bool = False
    base_period: Optional[int] = None

    kind: ClassVar[str] = "example3"
    alphabet_size: ClassVar[int] = 2

    def __post_init__(self):
        object.__setattr__(self, "block_lengths", tuple(int(p) for p in self.block_lengths))
        object.__setattr__(self, "repetitions", tuple(int(q) for q in self.repetitions))

    @property
    def levels(self) -> int:
        return len(self.block_lengths)

    @property
    def period(self) -> int:
        """Period of the top-level block structure of the output."""
        if self.base_period is not None:
            return self.base_period * math.prod(self.repetitions)
        return self.block_lengths[-1] * self.repetitions[-1]

    def validate(self) -> None:
        k = self.levels
        if not 1 <= k <= 20:
            raise SpecError("block_lengths", "between 1 and 20 levels are supported")
        if len(self.repetitions) != k:
            raise SpecError("repetitions", "one repetition count per level")
        if self.block_lengths[0] < 1:
            raise SpecError("block_lengths", "p_1 must be positive")
        if any(q < 2 for q in self.repetitions):
            raise SpecError("repetitions", "repetition counts must be at least 2")
        if self.mirrored and any(q != 2 for q in self.repetitions):
            raise SpecError("repetitions", "the mirrored variant repeats each block exactly twice")
        for j in range(1, k):
            unit = self.block_lengths[j - 1] * self.repetitions[j - 1]
            if self.block_lengths[j] % unit:
                raise SpecError("block_lengths", f"p_{j + 1} must be a multiple of p_{j} * q_{j} = {unit}")
        if self.block_lengths[-1] * self.repetitions[-1] > 1 << 62:
            raise ConstructionTooLarge("block-length bookkeeping overflow")
        if self.base_period is not None:
            if self.base_period < 1 or self.base_period % self.block_lengths[0]:
                raise SpecError("base_period", "must be a positive multiple of p_1")
            if self.period > 1 << 62:
                raise ConstructionTooLarge("block-length bookkeeping overflow")


ProcessSpec = Union[Bernoulli, Markov, Periodic, Sturmian, Example1, Example2, Example3]
_KINDS = {c.kind: c for c in (Bernoulli, Markov, Periodic, Sturmian, Example1, Example2, Example3)}


def process_to_dict(spec: ProcessSpec) -> dict:
    """JSON-shaped form of a spec (lists, not tuples), so it survives serialization unchanged."""
    d = json.loads(json.dumps(asdict(spec), default=_jsonable))
    d["kind"] = spec.kind
    return d


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.integer, np.floating)):
        return x.item()
    raise TypeError(type(x).__name__)


def process_from_dict(data: dict) -> ProcessSpec:
    """Build a validated spec from its ``{"kind": ..., **fields}`` form."""
    data = dict(data)
    kind = data.pop("kind", None)
    if kind not in _KINDS:
        raise SpecError("kind", f"unknown process kind {kind!r}; expected one of {sorted(_KINDS)}")
    if kind == "example3" and "levels" in data:
        levels = data.pop("levels")
        if levels != len(data.get("block_lengths", ())):
            raise SpecError("levels", "must equal the number of block lengths")
    try:
        spec = _KINDS[kind](**data)
    except TypeError as exc:
        raise SpecError(kind, str(exc)) from None
    spec.validate()
    return spec


def _check_probability_vector(p, name: str) -> None:
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise SpecError(name, "must be a nonempty vector")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise SpecError(name, "entries must be finite and nonnegative")
    if abs(arr.sum() - 1.0) > 1e-12:
        raise SpecError(name, f"must sum to 1 (sums to {arr.sum()!r})")


# -- sequences ----------------------------------------------------------------


@dataclass(frozen=True)
class Provenance:
    spec: dict
    seed: int
    length: int


@dataclass(frozen=True, eq=False)
class SymbolSequence:
    alphabet_size: int
    symbols: np.ndarray
    provenance: Optional[Provenance] = field(default=None)

    def __post_init__(self):
        s = np.asarray(self.symbols)
        dtype = np.uint8 if self.alphabet_size <= 256 else np.int32
        if s.ndim != 1:
            raise ValueError("symbols must be one-dimensional")
        if s.size and (s.min() < 0 or s.max() >= self.alphabet_size):
            raise ValueError("symbol outside the alphabet")
        s = s.astype(dtype, copy=True)
        s.setflags(write=False)
        object.__setattr__(self, "symbols", s)

    def __len__(self) -> int:
        return int(self.symbols.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymbolSequence):
            return NotImplemented
        return (
            self.alphabet_size == other.alphabet_size
            and self.provenance == other.provenance
            and np.array_equal(self.symbols, other.symbols)
        )

    def relabel(self, permutation) -> "SymbolSequence":
        """Apply a symbol permutation (``new = permutation[old]``)."""
        perm = np.asarray(permutation)
        return SymbolSequence(self.alphabet_size, perm[self.symbols], self.provenance)


def _wrap(spec: ProcessSpec, symbols: np.ndarray, length: int, seed: int) -> SymbolSequence:
    return SymbolSequence(spec.alphabet_size, symbols[:length], Provenance(process_to_dict(spec), int(seed), int(length)))


# -- random-map iteration -----------------------------------------------------


def _iterate_maps(next_state: np.ndarray, x0: int) -> tuple[np.ndarray, int]:
    """States visited before each step of ``x_{t+1} = next_state[t, x_t]``.

    Prefix compositions are formed by doubling, so the work is vectorized
    over the whole chunk instead of looping symbol by symbol.
    """
    P = next_state.copy()
    d = 1
    while d < len(P):
        P[d:] = np.take_along_axis(P[d:], P[:-d], axis=1)
        d *= 2
    after = P[:, x0]
    before = np.empty_like(after)
    before[0] = x0
    before[1:] = after[:-1]
    return before, int(after[-1])


def _choose(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Index of the first cumulative weight exceeding ``u`` along the last axis."""
    return (u[..., None] >= cum).sum(axis=-1)


def _safe_cumsum(weights: np.ndarray) -> np.ndarray:
    w = weights / weights.sum(axis=-1, keepdims=True)
    cum = np.cumsum(w, axis=-1)
    # zero-weight trailing entries must never be chosen
    last = weights.shape[-1] - 1 - np.argmax((weights > 0)[..., ::-1], axis=-1)
    idx = np.arange(weights.shape[-1])
    cum = np.where(idx >= last[..., None], 1.0, cum)
    return cum


# -- samplers -----------------------------------------------------------------


def _bernoulli(spec: Bernoulli, length: int, seed: int) -> np.ndarray:
    rng = component_rng(seed, 1)
    cum = _safe_cumsum(np.asarray(spec.probabilities))
    out = np.empty(length, dtype=np.uint8 if spec.alphabet_size <= 256 else np.int32)
    for start in range(0, length, _CHUNK):
        u = rng.random(min(_CHUNK, length - start))
        out[start : start + u.size] = np.searchsorted(cum, u, side="right")
    return out


def _markov(spec: Markov, length: int, seed: int) -> np.ndarray:
    P = np.asarray(spec.matrix)
    cum = _safe_cumsum(P)
    k = P.shape[0]
    init = np.asarray(spec.initial) if spec.initial is not None else spec.stationary()
    x = int(np.searchsorted(_safe_cumsum(init), component_rng(seed, 0).random(), side="right"))
    rng = component_rng(seed, 1)
    out = np.empty(length, dtype=np.uint8 if k <= 256 else np.int32)
    out[0] = x
    for start in range(1, length, _CHUNK):
        u = rng.random(min(_CHUNK, length - start))
        nxt = _choose(cum[None, :, :], u[:, None])
        states, x = _iterate_maps(nxt, x)
        out[start : start + u.size] = nxt[np.arange(u.size), states]
    return out


def _periodic(spec: Periodic, length: int) -> np.ndarray:
    word = np.asarray(spec.word)
    return np.tile(word, -(-length // word.size))[:length]


def _sturmian(spec: Sturmian, length: int, seed: int) -> np.ndarray:
    rho = component_rng(seed, 0).random()
    i = np.arange(length + 1, dtype=np.float64)
    f = np.floor(i * spec.alpha + rho)
    return np.diff(f).astype(np.uint8)


def generate_example1(spec: Example1, length: int, seed: int) -> SymbolSequence:
    """Cyclic ``C_1 C_2 ... C_r`` concatenation of random permutation blocks.

    Each ``C_i`` block concatenates every word of ``B_i`` (``n-1`` base symbols
    followed by marker ``i``) exactly once, in uniformly random order.
    """
    spec.validate()
    _check_length(length)
    N0, n, r = spec.base_size, spec.n, spec.r
    W = spec.words_per_block
    if W > _ENUMERATION_CAP:
        raise ConstructionTooLarge("construction too large")
    digits = np.indices((N0,) * (n - 1)).reshape(n - 1, -1).T.astype(np.uint8)
    block_len = n * W
    offset = int(component_rng(seed, 0).integers(spec.cycle_length))
    n_blocks = -(-(length + offset) // block_len)
    rng = component_rng(seed, 1)
    perms = rng.permuted(np.tile(np.arange(W), (n_blocks, 1)), axis=1)
    markers = (N0 + np.arange(n_blocks) % r).astype(np.uint8)
    body = np.empty((n_blocks, W, n), dtype=np.uint8)
    body[:, :, : n - 1] = digits[perms]
    body[:, :, n - 1] = markers[:, None]
    return _wrap(spec, body.reshape(-1)[offset:], length, seed)


def _avoidance_automaton(word: tuple, k: int) -> np.ndarray:
    """KMP transitions ``delta[s, a]`` on matched-prefix lengths; ``len(word)`` is dead."""
    l = len(word)
    fail = [0] * (l + 1)
    for i in range(1, l):
        j = fail[i]
        while j and word[i] != word[j]:
            j = fail[j]
        fail[i + 1] = j + 1 if word[i] == word[j] else 0
    delta = np.zeros((l, k), dtype=np.int64)
    for s in range(l):
        for a in range(k):
            j = s
            while j and word[j] != a:
                j = fail[j]
            delta[s, a] = j + 1 if word[j] == a else 0
    return delta


def _avoidance_tables(word: tuple, k: int, max_len: int) -> tuple[np.ndarray, np.ndarray]:
    """Transition cdfs for uniform sampling of words avoiding ``word``.

    ``cum[j, s]`` is the cdf over the next symbol from automaton state ``s``
    when ``j`` symbols remain after it.  Completion counts are renormalized
    at every length, which leaves their ratios intact.
    """
    delta = _avoidance_automaton(word, k)
    l = len(word)
    counts = np.ones(l + 1)
    counts[l] = 0.0
    cum = np.empty((max_len, l, k))
    alive = np.ones(max_len + 1, dtype=bool)
    for j in range(max_len):
        w = counts[delta]
        total = w.sum(axis=1)
        alive[j] = total[0] > 0
        safe = np.where(total[:, None] > 0, w, 1.0)
        cum[j] = _safe_cumsum(safe)
        if j and np.allclose(cum[j], cum[j - 1], rtol=0, atol=1e-15):
            # converged to the Perron direction; later rows are identical
            cum[j:] = cum[j]
            break
        counts = np.append(total / max(total.max(), 1e-300), 0.0)
    if not alive.all() or counts[0] <= 0:
        raise SamplingInfeasible("SFT sampling infeasible for parameters")
    return cum, delta


def generate_example2(spec: Example2, length: int, seed: int) -> SymbolSequence:
    """Concatenation ``B_1 B_2 ... B_r B_1 ...`` of SFT components.

    Component ``B_i`` has length ``m`` or ``m + 1`` (fair choice) and is drawn
    uniformly among the words of that length avoiding ``forbidden[i]``.
    """
    spec.validate()
    _check_length(length)
    k, r, m = spec.alphabet_size, spec.r, spec.m
    offset = int(component_rng(seed, 0).integers(r * m))
    total = length + offset
    n_comp = -(-total // m) + r
    comp_len = m + component_rng(seed, 2).integers(0, 2, size=n_comp)
    comp_idx = np.arange(n_comp) % r
    starts = np.concatenate(([0], np.cumsum(comp_len)))
    n_comp = int(np.searchsorted(starts, total, side="left"))
    out = np.empty(int(starts[n_comp]), dtype=np.uint8)
    for i in range(r):
        cum, delta = _avoidance_tables(spec.forbidden[i], k, m + 1)
        rng = component_rng(seed, 10 + i)
        for c in np.flatnonzero(comp_idx[:n_comp] == i):
            L = int(comp_len[c])
            remaining = np.arange(L - 1, -1, -1)
            u = rng.random(L)
            choice = _choose(cum[remaining], u[:, None])
            # unreachable states may point at the dead state; clamp them
            nxt = np.minimum(delta[np.arange(delta.shape[0])[None, :], choice], delta.shape[0] - 1)
            states, _ = _iterate_maps(nxt, 0)
            out[starts[c] : starts[c] + L] = choice[np.arange(L), states]
    return _wrap(spec, out[offset:], length, seed)


def stutter(symbols: np.ndarray, block_length: int, repetitions: int, mirrored: bool = False) -> np.ndarray:
    """Replace each consecutive block ``A`` by ``A`` repeated, or by ``A`` then its complement.

    A trailing partial block is dropped.  The mirrored form needs a binary
    alphabet and exactly two repetitions.
    """
    s = np.asarray(symbols)
    usable = s.size // block_length * block_length
    blocks = s[:usable].reshape(-1, block_length)
    if mirrored:
        if repetitions != 2:
            raise ValueError("mirrored stuttering repeats exactly twice")
        out = np.stack([blocks, 1 - blocks], axis=1)
    else:
        out = np.repeat(blocks[:, None, :], repetitions, axis=1)
    return out.reshape(-1).astype(s.dtype)


def generate_example3(spec: Example3, length: int, seed: int) -> SymbolSequence:
    """Iterated stuttering of a fair-coin (or periodic odometer) stream."""
    spec.validate()
    _check_length(length)
    offset = int(component_rng(seed, 0).integers(spec.period))
    need = length + offset
    for p, q in zip(reversed(spec.block_lengths), reversed(spec.repetitions)):
        need = -(-need // (p * q)) * p
    rng = component_rng(seed, 1)
    if spec.base_period is None:
        x = rng.integers(0, 2, size=need, dtype=np.uint8)
    else:
        base = rng.integers(0, 2, size=spec.base_period, dtype=np.uint8)
        x = np.tile(base, -(-need // spec.base_period))[:need]
    for p, q in zip(spec.block_lengths, spec.repetitions):
        x = stutter(x, p, q, spec.mirrored)
    return _wrap(spec, x[offset:], length, seed)


def _check_length(length: int) -> None:
    if int(length) < 1:
        raise SpecError("length", "must be at least 1")


def generate(spec: ProcessSpec, length: int, seed: int) -> SymbolSequence:
    """Sample ``length`` symbols of the process described by ``spec``."""
    spec.validate()
    _check_length(length)
    if isinstance(spec, Example1):
        return generate_example1(spec, length, seed)
    if isinstance(spec, Example2):
        return generate_example2(spec, length, seed)
    if isinstance(spec, Example3):
        return generate_example3(spec, length, seed)
    if isinstance(spec, Bernoulli):
        sym = _bernoulli(spec, length, seed)
    elif isinstance(spec, Markov):
        sym = _markov(spec, length, seed)
    elif isinstance(spec, Periodic):
        sym = _periodic(spec, length)
    elif isinstance(spec, Sturmian):
        sym = _sturmian(spec, length, seed)
    else:
        raise SpecError("kind", f"unsupported process {type(spec).__name__}")
    return _wrap(spec, sym, length, seed)
