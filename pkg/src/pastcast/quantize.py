"""Outcome spaces: finite alphabets and a nested dyadic interval hierarchy.

Real-valued series are reduced to finite symbol streams by quantizing each
outcome at a resolution level ``k``.  Level ``k`` tiles ``[-k, k)`` with
half-open intervals of width ``2**-k`` and adds two unbounded tail cells,
so the cell count is ``2*k*2**k + 2``.  Levels are nested: every cell at
level ``k`` is a union of cells at level ``k + 1``, which is what lets
pattern matches at a fine level imply matches at every coarser level.

Finite alphabets bypass all of this: quantization is the identity on
symbol indices at every level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

__all__ = [
    "Alphabet",
    "IntervalFieldHierarchy",
    "OutcomeSpace",
    "quantize",
    "quantize_block",
]


@dataclass(frozen=True)
class Alphabet:
    """A finite, ordered set of outcome symbols.

    Symbols are addressed by index; paths over a finite alphabet store
    indices directly.  ``values`` optionally attaches a numeric value to
    each symbol (used for regression losses and integration).
    """

    symbols: tuple
    values: tuple | None = None

    def __post_init__(self):
        if len(self.symbols) < 2:
            raise InputError("an alphabet needs at least two symbols")
        if len(set(self.symbols)) != len(self.symbols):
            raise InputError("alphabet symbols must be distinct")
        if self.values is not None and len(self.values) != len(self.symbols):
            raise InputError("values must align one-to-one with symbols")

    @classmethod
    def of_size(cls, m: int, values: tuple | None = None) -> "Alphabet":
        return cls(tuple(range(int(m))), values)

    @property
    def size(self) -> int:
        return len(self.symbols)

    def atom_count(self, k: int) -> int:
        return self.size

    def quantize(self, x, k: int) -> int:
        """Identity on symbol indices; ``k`` is ignored by construction."""
        i = int(x)
        if i != x or not 0 <= i < self.size:
            raise InputError(f"{x!r} is not a symbol index in [0, {self.size})")
        return i

    def encode(self, xs, k: int) -> np.ndarray:
        arr = np.asarray(xs)
        codes = arr.astype(np.int64)
        if not np.array_equal(codes, arr) or (
            codes.size and (codes.min() < 0 or codes.max() >= self.size)
        ):
            raise InputError("path values must be symbol indices for this alphabet")
        return codes

    def label(self, k: int, code: int) -> str:
        return str(self.symbols[code])

    def numeric_value(self, code: int) -> float:
        if self.values is not None:
            return float(self.values[code])
        sym = self.symbols[code]
        if isinstance(sym, (int, float)):
            return float(sym)
        raise InputError(f"symbol {sym!r} has no numeric value")


@dataclass(frozen=True)
class IntervalFieldHierarchy:
    """Nested dyadic interval cells on the real line.

    Cell ids at level ``k``: 0 is the left tail ``(-inf, -k)``, ids
    ``1 .. 2*k*2**k`` are the finite half-open cells left to right, and
    ``2*k*2**k + 1`` is the right tail ``[k, inf)``.
    """

    max_level: int = 32

    def __post_init__(self):
        if not 1 <= self.max_level <= 48:
            raise InputError("max_level must be in [1, 48]")

    def _check_level(self, k: int) -> int:
        if not isinstance(k, (int, np.integer)) or not 1 <= k <= self.max_level:
            raise InputError(f"level must be an int in [1, {self.max_level}], got {k!r}")
        return int(k)

    def atom_count(self, k: int) -> int:
        k = self._check_level(k)
        return 2 * k * 2**k + 2

    def quantize(self, x, k: int) -> int:
        """Return the id of the level-``k`` cell containing ``x``."""
        k = self._check_level(k)
        xf = float(x)
        if not math.isfinite(xf):
            raise InputError(f"cannot quantize non-finite value {x!r}")
        interior = 2 * k * 2**k
        if xf < -k:
            return 0
        if xf >= k:
            return interior + 1
        idx = math.floor((xf + k) * 2.0**k)
        return 1 + min(max(idx, 0), interior - 1)

    def encode(self, xs, k: int) -> np.ndarray:
        """Vectorized :meth:`quantize` over an array of outcomes."""
        k = self._check_level(k)
        arr = np.asarray(xs, dtype=np.float64)
        if arr.size and not np.isfinite(arr).all():
            raise InputError("cannot quantize non-finite values")
        interior = 2 * k * 2**k
        idx = np.floor((arr + k) * 2.0**k).astype(np.int64)
        idx = np.clip(idx, 0, interior - 1) + 1
        return np.where(arr < -k, 0, np.where(arr >= k, interior + 1, idx))

    def interval(self, k: int, code: int) -> tuple[float, float]:
        """Bounds ``(lo, hi)`` of a cell; the cell is ``[lo, hi)``."""
        k = self._check_level(k)
        interior = 2 * k * 2**k
        if not 0 <= code <= interior + 1:
            raise InputError(f"cell id {code} out of range at level {k}")
        if code == 0:
            return (-math.inf, float(-k))
        if code == interior + 1:
            return (float(k), math.inf)
        width = 2.0**-k
        lo = -k + (code - 1) * width
        return (lo, lo + width)

    def label(self, k: int, code: int) -> str:
        lo, hi = self.interval(k, code)
        fmt = lambda v: "-inf" if v == -math.inf else "inf" if v == math.inf else repr(v)
        return f"[{fmt(lo)},{fmt(hi)})"


OutcomeSpace = Alphabet | IntervalFieldHierarchy


def quantize(space: OutcomeSpace, x, k: int) -> int:
    """Cell id of a single outcome at level ``k`` of ``space``."""
    return space.quantize(x, k)


def quantize_block(space: OutcomeSpace, segment, k: int) -> tuple[int, ...]:
    """Cell ids of a contiguous segment of outcomes, preserving order."""
    seg = np.asarray(segment)
    if seg.ndim != 1 or seg.size == 0:
        raise InputError("segment must be a non-empty 1-d sequence")
    return tuple(int(c) for c in space.encode(seg, k))
