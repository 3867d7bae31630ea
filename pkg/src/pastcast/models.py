"""Sequential probability models over finite alphabets.

A sequential model assigns a strictly positive pmf to the next symbol
given everything consumed so far; chaining the per-step predictions
yields a probability law on whole sequences.  Log losses accumulate in
bits.

Two concrete model families live here:

* :class:`KTMixtureModel` — a Bayes mixture of add-1/2 Markov predictors
  of orders ``0..max_order`` with prior weights proportional to
  ``2**-order``.  Besides the usual chronological ``update``, it supports
  ``prepend``: extending the consumed window at the *old* end in O(1)
  bookkeeping per step, which the averaging estimator exploits to sweep
  all window lengths of a path in one pass.
* :class:`LZ78Model` — an incremental-parsing tree whose node statistics
  drive smoothed next-symbol predictions.

:func:`compound_model` adapts an arbitrary family of conditional
estimators into this interface so its sequence law can be analyzed with
the same tools.
"""

from __future__ import annotations

import math
from collections import deque
from itertools import islice

import numpy as np

from .errors import InputError

__all__ = [
    "SequentialModel",
    "KTMixtureModel",
    "LZ78Model",
    "compound_model",
    "CompoundModel",
]

_LN2 = math.log(2.0)


class SequentialModel:
    """Predict-then-consume interface with bit-valued running log loss."""

    def __init__(self, alphabet_size: int):
        if alphabet_size < 2:
            raise InputError("alphabet_size must be at least 2")
        self.alphabet_size = int(alphabet_size)
        self._loss_bits = 0.0
        self._consumed = 0
        self._cached: np.ndarray | None = None

    # -- subclass hooks -------------------------------------------------

    def _predict(self) -> np.ndarray:
        raise NotImplementedError

    def _advance(self, x: int) -> None:
        raise NotImplementedError

    def fresh(self) -> "SequentialModel":
        raise NotImplementedError

    # -- public surface -------------------------------------------------

    @property
    def consumed(self) -> int:
        return self._consumed

    @property
    def cumulative_log_loss(self) -> float:
        """Total code length so far, in bits."""
        return self._loss_bits

    def predict(self) -> np.ndarray:
        if self._cached is None:
            p = np.asarray(self._predict(), dtype=float)
            if p.shape != (self.alphabet_size,) or (p <= 0).any():
                raise InputError("model prediction must be strictly positive")
            if abs(p.sum() - 1.0) > 1e-12:
                p = p / p.sum()
            self._cached = p
        return self._cached

    def update(self, x) -> None:
        x = int(x)
        if not 0 <= x < self.alphabet_size:
            raise InputError(f"symbol {x} outside alphabet of size {self.alphabet_size}")
        self._loss_bits += -math.log2(self.predict()[x])
        self._advance(x)
        self._consumed += 1
        self._cached = None

    def process(self, seq) -> None:
        for x in seq:
            self.update(x)


class KTMixtureModel(SequentialModel):
    """Mixture of add-1/2 Markov predictors of orders ``0..max_order``.

    Each order-``m`` component predicts uniformly until ``m`` symbols are
    available and from then on applies the add-1/2 rule within the
    length-``m`` context.  The mixture predicts with posterior weights
    proportional to ``2**-m`` times each component's likelihood of the
    window consumed so far.
    """

    def __init__(self, alphabet_size: int, max_order: int = 0):
        super().__init__(alphabet_size)
        if max_order < 0:
            raise InputError("max_order must be nonnegative")
        self.max_order = int(max_order)
        self._window: deque[int] = deque()
        self._counts: list[dict[tuple, np.ndarray]] = [
            {} for _ in range(self.max_order + 1)
        ]
        # Natural-log likelihood of the window under each component,
        # split off from the derivable uniform-phase part.
        self._ll_counts = np.zeros(self.max_order + 1)
        prior = 2.0 ** -np.arange(self.max_order + 1)
        self._log_prior = np.log(prior / prior.sum())

    def fresh(self) -> "KTMixtureModel":
        return KTMixtureModel(self.alphabet_size, self.max_order)

    # -- count bookkeeping ----------------------------------------------

    def _add_observation(self, order: int, ctx: tuple, sym: int) -> None:
        table = self._counts[order]
        arr = table.get(ctx)
        if arr is None:
            arr = np.zeros(self.alphabet_size, dtype=np.int64)
            table[ctx] = arr
        c, tot = arr[sym], arr.sum()
        self._ll_counts[order] += math.log(
            (c + 0.5) / (tot + self.alphabet_size / 2.0)
        )
        arr[sym] += 1

    def _advance(self, x: int) -> None:
        t = len(self._window)
        back = list(islice(reversed(self._window), min(self.max_order, t)))[::-1]
        for m in range(self.max_order + 1):
            if t >= m:
                ctx = tuple(back[len(back) - m :]) if m else ()
                self._add_observation(m, ctx, x)
        self._window.append(x)

    def prepend(self, x) -> None:
        """Grow the consumed window at its old end.

        After ``prepend(a)`` the model's state is exactly what consuming
        ``a`` followed by the previous window chronologically would have
        produced: per component only one context observation appears (the
        first symbol old enough to gain a full-length context), so the
        step costs O(max_order) dictionary updates.
        """
        x = int(x)
        if not 0 <= x < self.alphabet_size:
            raise InputError(f"symbol {x} outside alphabet of size {self.alphabet_size}")
        t = len(self._window)
        front = list(islice(self._window, min(self.max_order, t)))
        self._add_observation(0, (), x)
        for m in range(1, self.max_order + 1):
            if t >= m:
                ctx = (x, *front[: m - 1])
                self._add_observation(m, ctx, front[m - 1])
        self._window.appendleft(x)
        self._consumed += 1
        self._cached = None

    # -- prediction -------------------------------------------------------

    def _component_log_likelihoods(self) -> np.ndarray:
        t = len(self._window)
        uniform_steps = np.minimum(np.arange(self.max_order + 1), t)
        return self._ll_counts - uniform_steps * math.log(self.alphabet_size)

    def window_log2_marginal(self) -> float:
        """log2 of the mixture's probability of the consumed window."""
        ll = self._log_prior + self._component_log_likelihoods()
        top = ll.max()
        return (top + math.log(np.exp(ll - top).sum())) / _LN2

    def _predict(self) -> np.ndarray:
        t = len(self._window)
        back = list(islice(reversed(self._window), min(self.max_order, t)))[::-1]
        ll = self._log_prior + self._component_log_likelihoods()
        ll -= ll.max()
        weights = np.exp(ll)
        weights /= weights.sum()
        half_a = self.alphabet_size / 2.0
        p = np.zeros(self.alphabet_size)
        for m in range(self.max_order + 1):
            depth = min(m, t)
            ctx = tuple(back[len(back) - depth :]) if depth else ()
            arr = self._counts[m].get(ctx)
            if arr is None:
                comp = np.full(self.alphabet_size, 1.0 / self.alphabet_size)
            else:
                comp = (arr + 0.5) / (arr.sum() + half_a)
            p += weights[m] * comp
        return p


class _Node:
    __slots__ = ("count", "children")

    def __init__(self):
        self.count = 1
        self.children: dict[int, "_Node"] = {}


class LZ78Model(SequentialModel):
    """Incremental-parsing tree model with add-1/2 child smoothing.

    The stream is parsed into phrases, each the shortest prefix not yet
    in the tree.  While a phrase walks the tree, the next symbol is
    predicted from the current node's child statistics:
    ``(child count + 1/2) / (children total + alphabet/2)``.  When a
    phrase ends, every node on its walk is credited and the walk restarts
    at the root, so each node's count stays one more than its children's
    total (the one being the phrase that ended there).
    """

    def __init__(self, alphabet_size: int):
        super().__init__(alphabet_size)
        self._root = _Node()
        self._node = self._root
        self._walk = [self._root]

    def fresh(self) -> "LZ78Model":
        return LZ78Model(self.alphabet_size)

    @property
    def at_phrase_boundary(self) -> bool:
        return self._node is self._root and len(self._walk) == 1

    def _predict(self) -> np.ndarray:
        half_a = self.alphabet_size / 2.0
        counts = np.zeros(self.alphabet_size)
        for sym, child in self._node.children.items():
            counts[sym] = child.count
        return (counts + 0.5) / (counts.sum() + half_a)

    def _advance(self, x: int) -> None:
        child = self._node.children.get(x)
        if child is not None:
            self._node = child
            self._walk.append(child)
            return
        self._node.children[x] = _Node()
        for node in self._walk:
            node.count += 1
        self._node = self._root
        self._walk = [self._root]

    def check_counts(self) -> bool:
        """Verify count = 1 + children total on every node (between phrases)."""
        stack = [self._root]
        while stack:
            node = stack.pop()
            if node.count != 1 + sum(c.count for c in node.children.values()):
                return False
            stack.extend(node.children.values())
        return True


class CompoundModel(SequentialModel):
    """Sequential model induced by a family of conditional estimators.

    ``estimate_fn`` receives the chronological history as a tuple and
    must return a strictly positive pmf for the next symbol; the chain
    rule over these predictions defines the model's sequence law.
    """

    def __init__(self, estimate_fn, alphabet_size: int):
        super().__init__(alphabet_size)
        self._fn = estimate_fn
        self._history: list[int] = []

    def fresh(self) -> "CompoundModel":
        return CompoundModel(self._fn, self.alphabet_size)

    def _predict(self) -> np.ndarray:
        return np.asarray(self._fn(tuple(self._history)), dtype=float)

    def _advance(self, x: int) -> None:
        self._history.append(x)


def compound_model(estimate_fn, alphabet_size: int) -> CompoundModel:
    """Wrap per-step conditional estimates into a sequential model."""
    return CompoundModel(estimate_fn, alphabet_size)
