"""Backward and forward recurrence searches over quantized sample paths.

A path stores the observed past with the most recent outcome first:
storage position ``t - 1`` holds the outcome ``t`` steps back.  The
backward search quantizes the path at a level ``k``, takes the most
recent ``ell`` cells as the pattern, and walks into the past collecting
the offsets at which the pattern recurs.  The forward search is the
mirror image: the pattern is the oldest ``ell`` cells and the walk moves
toward the recent end.  Offsets count whole-window shifts, so an offset
``t`` means the window ``ell + t, ..., 1 + t`` steps back matched.

Two engines produce identical output: a literal scanning loop and a
vectorized candidate-filtering search used for long paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, InsufficientDataError, UnsupportedQueryError
from .quantize import OutcomeSpace

__all__ = [
    "SamplePath",
    "RecurrenceRecord",
    "backward_recurrences",
    "forward_recurrences",
    "avg_inter_recurrence",
    "growth_rate_diagnostic",
    "GrowthPoint",
    "default_growth_entries",
    "kac_diagnostic",
    "KacRow",
    "IncrementalPatternIndex",
]

ENGINES = ("scan", "filter")


@dataclass(frozen=True)
class SamplePath:
    """A finite stretch of past outcomes, most recent first.

    ``values[0]`` is the latest outcome (one step back), ``values[t-1]``
    the outcome ``t`` steps back.  Use :meth:`from_chronological` when
    the data arrives oldest-first.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.ndim != 1:
            raise InputError("a sample path must be one-dimensional")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_chronological(cls, seq) -> "SamplePath":
        return cls(np.asarray(seq)[::-1])

    @property
    def n(self) -> int:
        return int(self.values.size)

    def chronological(self) -> np.ndarray:
        return self.values[::-1].copy()

    def value_at_lag(self, t: int):
        """Outcome ``t`` steps back (lag 1 is the most recent)."""
        if not 1 <= t <= self.n:
            raise InputError(f"lag {t} outside [1, {self.n}]")
        return self.values[t - 1]


@dataclass(frozen=True)
class RecurrenceRecord:
    """Result of one recurrence search.

    ``taus`` are the match offsets in increasing order; ``lam`` is the
    total search depth ``ell + taus[-1]`` when the requested count was
    reached and ``None`` otherwise.
    """

    taus: tuple[int, ...]
    ell: int
    requested_j: int
    truncated: bool
    lam: int | None

    def __post_init__(self):
        if any(t <= 0 for t in self.taus):
            raise InputError("recurrence offsets must be positive")
        if any(b <= a for a, b in zip(self.taus, self.taus[1:])):
            raise InputError("recurrence offsets must be strictly increasing")
        if not self.truncated:
            if len(self.taus) != self.requested_j:
                raise InputError("complete record must hold exactly J offsets")
            if self.lam != self.ell + self.taus[-1]:
                raise InputError("search depth must equal ell + last offset")

    @property
    def achieved_j(self) -> int:
        return len(self.taus)


def _validate_query(n: int, ell: int, j: int, engine: str) -> None:
    if not (isinstance(ell, (int, np.integer)) and ell >= 1):
        raise InputError(f"context length must be a positive int, got {ell!r}")
    if not (isinstance(j, (int, np.integer)) and j >= 1):
        raise InputError(f"recurrence count must be a positive int, got {j!r}")
    if ell > n:
        raise InputError(f"context length {ell} exceeds path length {n}")
    if engine not in ENGINES:
        raise InputError(f"unknown engine {engine!r}; choose from {ENGINES}")


def _search_scan(codes: np.ndarray, ell: int, j: int) -> list[int]:
    n = codes.size
    found: list[int] = []
    for t in range(1, n - ell + 1):
        if all(codes[t + i] == codes[i] for i in range(ell)):
            found.append(t)
            if len(found) == j:
                break
    return found


def _search_filter(codes: np.ndarray, ell: int, j: int) -> list[int]:
    n = codes.size
    last = n - ell
    if last < 1:
        return []
    cand = 1 + np.flatnonzero(codes[1 : last + 1] == codes[0])
    for i in range(1, ell):
        if cand.size == 0:
            break
        cand = cand[codes[cand + i] == codes[i]]
    return cand[:j].tolist()


def _record_from_taus(taus: list[int], ell: int, j: int) -> RecurrenceRecord:
    truncated = len(taus) < j
    lam = None if truncated else ell + taus[-1]
    return RecurrenceRecord(tuple(taus), int(ell), int(j), truncated, lam)


def backward_recurrences(
    path: SamplePath,
    k: int,
    ell: int,
    j: int,
    space: OutcomeSpace,
    engine: str = "filter",
) -> RecurrenceRecord:
    """Offsets of the first ``j`` past recurrences of the current pattern.

    The pattern is the quantized block of the ``ell`` most recent
    outcomes.  An offset ``t`` reports that the block ``ell + t .. 1 + t``
    steps back quantizes to the same cells.  The search never reads
    beyond the stored path; if fewer than ``j`` matches fit, the record
    comes back truncated.
    """
    _validate_query(path.n, ell, j, engine)
    codes = space.encode(path.values, k)
    search = _search_scan if engine == "scan" else _search_filter
    return _record_from_taus(search(codes, ell, j), ell, j)


def forward_recurrences(
    path: SamplePath,
    k: int,
    ell: int,
    j: int,
    space: OutcomeSpace,
    engine: str = "filter",
) -> RecurrenceRecord:
    """Mirror image of :func:`backward_recurrences`.

    Here the pattern is the oldest ``ell`` quantized outcomes of the path
    and the scan moves toward increasing time; an offset ``t`` means the
    window shifted ``t`` steps toward the present matched the pattern.
    """
    _validate_query(path.n, ell, j, engine)
    codes = space.encode(path.values, k)[::-1]
    search = _search_scan if engine == "scan" else _search_filter
    return _record_from_taus(search(codes, ell, j), ell, j)


def avg_inter_recurrence(record: RecurrenceRecord) -> float:
    """Average spacing ``taus[-1] / J`` of a complete record."""
    if record.truncated:
        raise InputError("average spacing is undefined for a truncated record")
    return record.taus[-1] / record.requested_j


# ---------------------------------------------------------------------------
# Diagnostics


@dataclass(frozen=True)
class GrowthPoint:
    """One point of the recurrence growth curve at pattern length ``k``."""

    k: int
    ell: int
    j: int
    tau_j: int | None
    lam: int | None
    avg_gap: float | None
    rate: float | None  # (1/k) * log2(tau_j / j), bits per symbol
    truncated: bool


def default_growth_entries(
    n: int, cells_per_level, ks, j_cap: int = 1024, budget: float = 0.05
) -> list[tuple[int, int, int]]:
    """Pick ``(k, ell, j)`` rows for a growth sweep on a length-``n`` path.

    ``cells_per_level`` is either an int (finite alphabet size) or a
    callable ``k -> cell count``.  Averaged over realized patterns, the
    expected depth of a ``j``-recurrence search is ``j`` times the number
    of patterns with positive mass, so ``j`` shrinks with the worst-case
    pattern count ``cells**k`` to keep the typical search inside a
    ``budget`` fraction of the path.
    """
    count = cells_per_level if callable(cells_per_level) else (lambda k: cells_per_level)
    entries = []
    for k in ks:
        k = int(k)
        j = int(budget * n / count(k) ** k)
        entries.append((k, k, max(4, min(j_cap, j))))
    return entries


def growth_rate_diagnostic(
    path: SamplePath,
    entries,
    space: OutcomeSpace,
    engine: str = "filter",
) -> list[GrowthPoint]:
    """Growth curve of recurrence depth across pattern lengths.

    For each ``(k, ell, j)`` entry the normalized rate
    ``(1/k) * log2(taus[-1] / j)`` estimates the information content per
    symbol of the current pattern.  Truncated entries keep their place in
    the output with the numeric fields set to ``None`` — they are flagged,
    never fabricated.
    """
    points = []
    for k, ell, j in entries:
        rec = backward_recurrences(path, k, ell, j, space, engine=engine)
        if rec.truncated:
            points.append(GrowthPoint(k, ell, j, None, None, None, None, True))
            continue
        gap = avg_inter_recurrence(rec)
        points.append(
            GrowthPoint(
                k, ell, j, rec.taus[-1], rec.lam, gap, math.log2(gap) / k, False
            )
        )
    return points


@dataclass(frozen=True)
class KacRow:
    """Empirical vs. oracle mean first-recurrence time for one pattern."""

    pattern: tuple[int, ...]  # chronological order, oldest first
    oracle_prob: float
    oracle_mean: float
    hits: int
    unresolved: int
    empirical_mean: float
    rel_deviation: float


def _first_recurrence_taus(storage: np.ndarray, k: int) -> np.ndarray:
    """First backward recurrence offset per row (0 marks none found)."""
    n_rows, path_length = storage.shape
    block = storage[:, :k]
    tau = np.zeros(n_rows, dtype=np.int64)
    active = np.arange(n_rows)
    for t in range(1, path_length - k + 1):
        if active.size == 0:
            break
        hit = (storage[active, t : t + k] == block[active]).all(axis=1)
        tau[active[hit]] = t
        active = active[~hit]
    return tau


# Trials per RNG block; fixed so memory settings cannot alter results.
_KAC_TRIAL_BLOCK = 1024


def kac_diagnostic(
    source,
    k: int,
    n_trials: int,
    path_length: int,
    seed: int,
    patterns=None,
    min_hits: int = 1,
    max_chunk_entries: int = 1 << 23,
) -> list[KacRow]:
    """Check that mean first-recurrence times match reciprocal pattern mass.

    Draws ``n_trials`` independent stationary paths from ``source``,
    measures the first backward recurrence of the realized length-``k``
    pattern in each, and groups trials by pattern.  For every pattern the
    empirical mean is compared against ``1 / P(pattern)`` computed from
    the source's exact block probabilities.

    Trial seeds are spawned per fixed-size block of ``_KAC_TRIAL_BLOCK``
    trials, so the result depends only on ``(seed, n_trials,
    path_length)``.  ``max_chunk_entries`` merely caps how many outcomes
    are materialized at once (memory), by processing whole blocks in
    groups; it never changes the numbers.

    ``patterns`` optionally restricts the report to specific blocks
    (chronological symbol tuples); requesting a zero-probability block
    raises :class:`UnsupportedQueryError`.  Trials whose recurrence does
    not occur within ``path_length`` are counted as unresolved and left
    out of the mean.
    """
    if path_length <= k:
        raise InputError("path_length must exceed the pattern length")
    n_trials, path_length = int(n_trials), int(path_length)
    n_blocks = -(-n_trials // _KAC_TRIAL_BLOCK)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = ss.spawn(n_blocks)
    blocks = [
        (child, min(_KAC_TRIAL_BLOCK, n_trials - i * _KAC_TRIAL_BLOCK))
        for i, child in enumerate(children)
    ]
    blocks_per_group = max(1, int(max_chunk_entries) // (path_length * _KAC_TRIAL_BLOCK))

    # pattern (chronological) -> [sum of taus, resolved count, unresolved count]
    stats: dict[tuple[int, ...], list[int]] = {}
    for g in range(0, n_blocks, blocks_per_group):
        group = blocks[g : g + blocks_per_group]
        batch = np.concatenate(
            [np.asarray(source.generate_batch(rows_b, path_length, child)) for child, rows_b in group]
        )
        storage = batch[:, ::-1]  # most recent outcome first, per row
        tau = _first_recurrence_taus(storage, k)
        chron = storage[:, :k][:, ::-1]
        uniq, inverse = np.unique(chron, axis=0, return_inverse=True)
        for i, pat in enumerate(uniq):
            pat_t = tuple(int(s) for s in pat)
            sel = tau[inverse == i]
            resolved = sel[sel > 0]
            agg = stats.setdefault(pat_t, [0, 0, 0])
            agg[0] += int(resolved.sum())
            agg[1] += int(resolved.size)
            agg[2] += int(sel.size - resolved.size)

    wanted = None if patterns is None else {tuple(int(s) for s in p) for p in patterns}
    if wanted is not None:
        for pat_t in wanted - stats.keys():
            if float(source.block_probability(pat_t)) <= 0.0:
                raise UnsupportedQueryError(f"pattern {pat_t} has zero probability")
    rows = []
    for pat_t in sorted(stats):
        if wanted is not None and pat_t not in wanted:
            continue
        tau_sum, hits, unresolved = stats[pat_t]
        if hits < min_hits:
            continue
        prob = float(source.block_probability(pat_t))
        if prob <= 0.0:
            raise UnsupportedQueryError(f"pattern {pat_t} has zero probability")
        emp = tau_sum / hits
        oracle = 1.0 / prob
        rows.append(
            KacRow(
                pattern=pat_t,
                oracle_prob=prob,
                oracle_mean=oracle,
                hits=hits,
                unresolved=unresolved,
                empirical_mean=emp,
                rel_deviation=abs(emp - oracle) / oracle,
            )
        )
    return rows


class IncrementalPatternIndex:
    """Occurrence index over a growing chronological stream.

    Maintains, per quantized ``ell``-gram, the start positions of its
    occurrences together with the outcome that immediately followed each
    occurrence.  Appending an outcome is O(ell); querying the ``j`` most
    recent occurrences of the current context is O(j).  Produces exactly
    the offsets a from-scratch backward search would.
    """

    def __init__(self, space: OutcomeSpace, k: int, ell: int):
        if ell < 1:
            raise InputError("context length must be >= 1")
        self.space = space
        self.k = int(k)
        self.ell = int(ell)
        self._values: list = []
        self._codes: list[int] = []
        self._table: dict[tuple, tuple[list, list]] = {}

    def __len__(self) -> int:
        return len(self._values)

    def append(self, x) -> None:
        code = int(self.space.quantize(x, self.k))
        self._values.append(x)
        self._codes.append(code)
        start = len(self._codes) - 1 - self.ell
        if start >= 0:
            key = tuple(self._codes[start : start + self.ell])
            positions, samples = self._table.setdefault(key, ([], []))
            positions.append(start)
            samples.append(x)

    def reconfigure(self, k: int, ell: int) -> None:
        """Re-key the index for a new level or context length."""
        if k == self.k and ell == self.ell:
            return
        if ell < 1:
            raise InputError("context length must be >= 1")
        self.k, self.ell = int(k), int(ell)
        if self._values:
            self._codes = [int(c) for c in self.space.encode(np.asarray(self._values), self.k)]
        self._table = {}
        for start in range(len(self._codes) - self.ell):
            key = tuple(self._codes[start : start + self.ell])
            positions, samples = self._table.setdefault(key, ([], []))
            positions.append(start)
            samples.append(self._values[start + self.ell])

    def query(self, j: int):
        """Offsets and following outcomes of the last ``j`` occurrences.

        Returns ``(taus, samples, truncated)`` where offsets follow the
        backward-search convention relative to the current stream end; or
        ``None`` when the stream is still shorter than the context.
        """
        t = len(self._codes)
        if t < self.ell:
            return None
        key = tuple(self._codes[t - self.ell :])
        entry = self._table.get(key)
        if entry is None:
            return (), (), True
        positions, samples = entry
        sel_p = positions[-j:]
        sel_s = samples[-j:]
        taus = tuple(t - self.ell - p for p in reversed(sel_p))
        return taus, tuple(reversed(sel_s)), len(sel_p) < j
