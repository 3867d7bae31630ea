"""Pattern-recurrence estimators of the next-outcome conditional law.

The fixed-resolution estimator quantizes the path at level ``k``, finds
the ``J`` most recent past occurrences of the current length-``ell``
context, and returns the empirical law of the outcome that immediately
followed each occurrence: a pmf over symbols for finite alphabets, an
equal-weight empirical measure on raw values otherwise.

The truncated estimator drives the same search with data-size schedules
``k(n), ell(k), J(k)`` chosen so the needed search depth fits inside the
path with high probability; when it does not, a configured default
measure is returned and flagged.  All estimates are represented by
:class:`ConditionalDistribution`, the common return type of every
estimator in this package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InputError, InsufficientDataError
from .quantize import Alphabet, IntervalFieldHierarchy, OutcomeSpace
from .recurrence import (
    RecurrenceRecord,
    SamplePath,
    _record_from_taus,
    backward_recurrences,
)

__all__ = [
    "ConditionalDistribution",
    "integrate",
    "FiniteAlphabetSchedule",
    "RealValuedSchedule",
    "estimate_fixed_k",
    "estimate_truncated",
    "estimate_with_side_info",
    "truncated_parameters",
]


@dataclass(frozen=True)
class ConditionalDistribution:
    """A next-outcome law: either a pmf over symbols or sample atoms.

    Exactly one of ``pmf`` (finite mode) and ``samples`` (empirical mode,
    equal weight per atom) is set.  ``default_used`` marks laws that came
    from a schedule's fallback rather than from data.
    """

    pmf: np.ndarray | None = None
    samples: np.ndarray | None = None
    default_used: bool = False

    def __post_init__(self):
        if (self.pmf is None) == (self.samples is None):
            raise InputError("set exactly one of pmf and samples")
        if self.pmf is not None:
            p = np.asarray(self.pmf, dtype=float).copy()
            if p.ndim != 1 or p.size == 0:
                raise InputError("pmf must be a non-empty vector")
            if (p < 0).any() or abs(p.sum() - 1.0) > 1e-12:
                raise InputError("pmf must be nonnegative and sum to 1")
            p.setflags(write=False)
            object.__setattr__(self, "pmf", p)
        else:
            s = np.asarray(self.samples, dtype=float).copy()
            if s.ndim != 1 or s.size == 0:
                raise InputError("samples must be a non-empty vector")
            if not np.isfinite(s).all():
                raise InputError("samples must be finite")
            s.setflags(write=False)
            object.__setattr__(self, "samples", s)

    # -- constructors -------------------------------------------------

    @classmethod
    def finite(cls, pmf, default_used: bool = False) -> "ConditionalDistribution":
        return cls(pmf=np.asarray(pmf, dtype=float), default_used=default_used)

    @classmethod
    def empirical(cls, samples, default_used: bool = False) -> "ConditionalDistribution":
        return cls(samples=np.asarray(samples, dtype=float), default_used=default_used)

    @classmethod
    def uniform(cls, m: int, default_used: bool = False) -> "ConditionalDistribution":
        return cls.finite(np.full(int(m), 1.0 / int(m)), default_used=default_used)

    @classmethod
    def dirac(cls, x: float, default_used: bool = False) -> "ConditionalDistribution":
        return cls.empirical([float(x)], default_used=default_used)

    @classmethod
    def uniform_grid(
        cls, lo: float, hi: float, points: int = 33, default_used: bool = False
    ) -> "ConditionalDistribution":
        """Even-weight atoms spread over ``[lo, hi]``.

        Discrete stand-in for a uniform law on a bounded interval, so the
        default stays integrable by the same two rules as every estimate.
        """
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi and points >= 1):
            raise InputError("uniform_grid needs finite lo < hi and points >= 1")
        step = (hi - lo) / points
        mids = lo + step * (np.arange(points) + 0.5)
        return cls.empirical(mids, default_used=default_used)

    # -- queries ------------------------------------------------------

    @property
    def is_finite(self) -> bool:
        return self.pmf is not None

    def mean(self, symbol_values=None) -> float:
        return integrate(lambda x: x, self, symbol_values)

    def as_pmf(self, m: int | None = None) -> np.ndarray:
        if self.pmf is None:
            raise InputError("empirical law has no symbol pmf")
        if m is not None and self.pmf.size != m:
            raise InputError("pmf has the wrong alphabet size")
        return self.pmf


def integrate(h, dist: ConditionalDistribution, symbol_values=None) -> float:
    """Expectation of ``h`` under an estimated law.

    Finite mode sums ``h`` over symbols weighted by the pmf; empirical
    mode averages ``h`` over the sample atoms.  ``h`` may be a callable
    or an indexable table.  In finite mode, ``symbol_values`` optionally
    substitutes a numeric value per symbol index before applying ``h``.
    """
    fn = h if callable(h) else (lambda x: h[x])
    if dist.is_finite:
        if symbol_values is None:
            points = range(dist.pmf.size)
        else:
            points = np.asarray(symbol_values, dtype=float)
            if len(points) != dist.pmf.size:
                raise InputError("symbol_values must align with the pmf")
        return float(sum(p * fn(x) for p, x in zip(dist.pmf, points)))
    return float(np.mean([fn(x) for x in dist.samples]))


# ---------------------------------------------------------------------------
# Schedules


def _floor_pos(x: float) -> int:
    """Round down with a tiny slack so exact powers survive float error."""
    return max(1, int(math.floor(x + 1e-9)))


@dataclass(frozen=True)
class FiniteAlphabetSchedule:
    """Data-size schedule for finite alphabets.

    With alphabet size ``m`` and exponent split ``epsilon``, the context
    level is ``k(n) = floor((1 - epsilon) * log_m n)`` and the sample
    count at level ``k`` is ``J(k) = floor(budget_fraction * m ** (k *
    epsilon / (1 - epsilon)))``, which keeps the worst-case search depth
    ``J(k(n)) * m**k(n)`` within ``budget_fraction * n``.  When an upper
    bound ``known_rate`` on the source's entropy rate is supplied, the
    log base switches to ``2**known_rate`` so the context can grow faster
    while typical patterns stay findable.

    At ``budget_fraction = 1`` the depth budget is exactly saturated the
    moment a new level is entered, so contexts only slightly rarer than
    average fail their search there and fall back to the default law.
    Online runs, which integrate over every entry point, benefit from a
    fraction below 1; the asymptotics are unaffected.
    """

    alphabet_size: int
    epsilon: float = 0.5
    known_rate: float | None = None
    default_measure: ConditionalDistribution | None = None
    budget_fraction: float = 1.0

    def __post_init__(self):
        if self.alphabet_size < 2:
            raise ConfigError("alphabet_size", "must be at least 2")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError("epsilon", "must lie strictly between 0 and 1")
        if self.known_rate is not None and self.known_rate <= 0.0:
            raise ConfigError("known_rate", "must be positive when given")
        if not 0.0 < self.budget_fraction <= 1.0:
            raise ConfigError("budget_fraction", "must lie in (0, 1]")
        if self.default_measure is None:
            object.__setattr__(
                self, "default_measure", ConditionalDistribution.uniform(self.alphabet_size)
            )

    @property
    def _base(self) -> float:
        return self.alphabet_size if self.known_rate is None else 2.0**self.known_rate

    def k_of_n(self, n: int) -> int:
        if n < 2:
            return 1
        return _floor_pos((1.0 - self.epsilon) * math.log(n, self._base))

    def ell_of_k(self, k: int) -> int:
        return int(k)

    def j_of_k(self, k: int) -> int:
        raw = self._base ** (k * self.epsilon / (1.0 - self.epsilon))
        return _floor_pos(self.budget_fraction * raw)

    def eps_of_k(self, k: int) -> float:
        return 1.0 / k

    def default(self) -> ConditionalDistribution:
        d = self.default_measure
        return ConditionalDistribution(pmf=d.pmf, samples=d.samples, default_used=True)

    def validate(self, n_grid) -> None:
        """Check the search-depth budget ``J(k(n)) * base**k(n) <= n``.

        The budget is asymptotic; it is enforced here for every grid
        point large enough that the level formula clears 1.
        """
        threshold = self._base ** (1.0 / (1.0 - self.epsilon))
        for n in n_grid:
            if n < 2 or n < threshold:
                continue
            k = self.k_of_n(n)
            if self.j_of_k(k) * self._base**k > n * (1.0 + 1e-9):
                raise ConfigError(
                    "schedule", f"search budget exceeds the path at n={n} (k={k})"
                )


@dataclass(frozen=True)
class RealValuedSchedule:
    """Data-size schedule for real-valued paths over the interval cells.

    The level ``k(n)`` is the deepest level whose worst-case search
    budget ``ell_k + J(k) * cells(k)**ell_k / eps_k`` fits within ``n``,
    with ``ell_k = k``, slack ``eps_k = 1/k`` and sample counts growing
    geometrically as ``J(k) = floor(j0 * j_growth**(k-1))``.
    """

    hierarchy: IntervalFieldHierarchy = field(default_factory=IntervalFieldHierarchy)
    j0: int = 50
    j_growth: float = 3.0
    default_measure: ConditionalDistribution | None = None

    def __post_init__(self):
        if self.j0 < 1:
            raise ConfigError("j0", "must be at least 1")
        if self.j_growth < 1.0:
            raise ConfigError("j_growth", "must be at least 1 so J never shrinks")
        if self.default_measure is None:
            object.__setattr__(self, "default_measure", ConditionalDistribution.dirac(0.0))

    def ell_of_k(self, k: int) -> int:
        return int(k)

    def j_of_k(self, k: int) -> int:
        return _floor_pos(self.j0 * self.j_growth ** (k - 1))

    def eps_of_k(self, k: int) -> float:
        return 1.0 / k

    def budget(self, k: int) -> float:
        ell = self.ell_of_k(k)
        cells = self.hierarchy.atom_count(k)
        return ell + self.j_of_k(k) * float(cells) ** ell / self.eps_of_k(k)

    def k_of_n(self, n: int) -> int:
        k = 1
        while k < self.hierarchy.max_level and self.budget(k + 1) <= n:
            k += 1
        return k

    def default(self) -> ConditionalDistribution:
        d = self.default_measure
        return ConditionalDistribution(pmf=d.pmf, samples=d.samples, default_used=True)

    def validate(self, n_grid) -> None:
        for n in n_grid:
            k = self.k_of_n(n)
            if k > 1 and self.budget(k) > n * (1.0 + 1e-9):
                raise ConfigError(
                    "schedule", f"search budget exceeds the path at n={n} (k={k})"
                )


Schedule = FiniteAlphabetSchedule | RealValuedSchedule


def truncated_parameters(schedule: Schedule, n: int) -> tuple[int, int, int]:
    """The ``(k, ell, J)`` triple a schedule assigns to a length-``n`` past."""
    k = schedule.k_of_n(n)
    return k, schedule.ell_of_k(k), schedule.j_of_k(k)


# ---------------------------------------------------------------------------
# Estimators


def _distribution_from_samples(
    samples: np.ndarray, j: int, space: OutcomeSpace
) -> ConditionalDistribution:
    if isinstance(space, Alphabet):
        counts = np.bincount(samples.astype(np.int64), minlength=space.size)
        return ConditionalDistribution.finite(counts / j)
    return ConditionalDistribution.empirical(samples)


def estimate_fixed_k(
    path: SamplePath,
    k: int,
    ell: int,
    j: int,
    space: OutcomeSpace,
    engine: str = "filter",
) -> tuple[ConditionalDistribution, RecurrenceRecord]:
    """Next-outcome law from the ``j`` most recent context recurrences.

    Searches backward for occurrences of the quantized length-``ell``
    context and averages point masses at the outcome one step after each
    occurrence.  Raises :class:`InsufficientDataError` when the path ends
    before ``j`` recurrences are found; the exception carries the record
    so callers can see how far the search got.
    """
    record = backward_recurrences(path, k, ell, j, space, engine=engine)
    if record.truncated:
        err = InsufficientDataError(j, record.achieved_j)
        err.record = record
        raise err
    samples = path.values[np.asarray(record.taus, dtype=np.int64) - 1]
    return _distribution_from_samples(samples, j, space), record


def estimate_truncated(
    path: SamplePath,
    schedule: Schedule,
    space: OutcomeSpace,
    engine: str = "filter",
) -> ConditionalDistribution:
    """Schedule-driven estimate that falls back to the default measure.

    Looks up ``(k, ell, J)`` for the path length, runs the fixed-level
    estimator, and returns the schedule's default law (flagged via
    ``default_used``) whenever the context does not fit or the search
    truncates.
    """
    k, ell, j = truncated_parameters(schedule, path.n)
    if ell > path.n:
        return schedule.default()
    try:
        dist, _ = estimate_fixed_k(path, k, ell, j, space, engine=engine)
    except InsufficientDataError:
        return schedule.default()
    return dist


def estimate_with_side_info(
    x_path: SamplePath,
    y_path: SamplePath,
    y_now,
    k: int,
    ell: int,
    j: int,
    x_space: OutcomeSpace,
    y_space: OutcomeSpace,
    engine: str = "filter",
) -> tuple[ConditionalDistribution, RecurrenceRecord]:
    """Pattern estimate conditioned on a jointly matched side channel.

    A past offset matches when three things hold at level ``k``: the
    length-``ell`` main-channel context recurs, the side-channel context
    recurs, and the side value observed at the sampled position falls in
    the same cell as the current side value ``y_now``.  The estimate then
    averages the main-channel outcomes at the matched offsets.
    """
    if x_path.n != y_path.n:
        raise InputError("main and side paths must have equal length")
    n = x_path.n
    if ell > n:
        raise InputError(f"context length {ell} exceeds path length {n}")
    if ell < 1 or j < 1:
        raise InputError("context length and sample count must be positive")
    xq = x_space.encode(x_path.values, k)
    yq = y_space.encode(y_path.values, k)
    y0 = y_space.quantize(y_now, k)

    taus: list[int] = []
    if engine == "scan":
        for t in range(1, n - ell + 1):
            if yq[t - 1] != y0:
                continue
            if all(xq[t + i] == xq[i] and yq[t + i] == yq[i] for i in range(ell)):
                taus.append(t)
                if len(taus) == j:
                    break
    elif engine == "filter":
        last = n - ell
        if last >= 1:
            cand = 1 + np.flatnonzero(yq[:last] == y0)
            for i in range(ell):
                if cand.size == 0:
                    break
                keep = (xq[cand + i] == xq[i]) & (yq[cand + i] == yq[i])
                cand = cand[keep]
            taus = cand[:j].tolist()
    else:
        raise InputError(f"unknown engine {engine!r}")

    record = _record_from_taus(taus, ell, j)
    if record.truncated:
        err = InsufficientDataError(j, record.achieved_j)
        err.record = record
        raise err
    samples = x_path.values[np.asarray(record.taus, dtype=np.int64) - 1]
    return _distribution_from_samples(samples, j, x_space), record
