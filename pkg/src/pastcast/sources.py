"""Synthetic stationary sources with exact oracles.

Every source here can generate stationary paths from a seed and answer
oracle queries in closed form where one exists: the conditional law of
the next outcome given a (sufficient) past, stationary block
probabilities, entropy rate, the best achievable error rate of a
symbol predictor, and the innovation variance of a numeric version of
the process.  Estimator experiments are judged against these answers.

Symbols are integer indices; attach ``values`` to give them numeric
meaning (e.g. a two-state chain taking values -1.0 and +1.0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, UnsupportedQueryError
from .quantize import Alphabet

__all__ = [
    "EntropyRateResult",
    "IIDSource",
    "MarkovSource",
    "PeriodicSource",
    "HMMSource",
    "RyabcoSource",
    "PRESETS",
    "get_preset",
    "build_source",
]


@dataclass(frozen=True)
class EntropyRateResult:
    """Entropy rate in bits per symbol; ``stderr`` is set when estimated."""

    bits: float
    exact: bool
    stderr: float | None = None


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _entropy_bits(pmf: np.ndarray) -> float:
    p = np.asarray(pmf, dtype=float)
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def _validate_pmf(pmf, m: int | None = None) -> np.ndarray:
    p = np.asarray(pmf, dtype=float)
    if p.ndim != 1 or (m is not None and p.size != m):
        raise InputError("probability vector has the wrong shape")
    if (p < 0).any() or abs(p.sum() - 1.0) > 1e-9:
        raise InputError("probability vector must be nonnegative and sum to 1")
    return p


class _SourceBase:
    """Shared conveniences; concrete sources fill in the oracle methods."""

    kind: str = ""
    alphabet_size: int = 0
    values: tuple | None = None

    def alphabet(self) -> Alphabet:
        return Alphabet.of_size(self.alphabet_size, self.values)

    def numeric_values(self) -> np.ndarray:
        if self.values is None:
            raise InputError(f"{self.kind} source has no numeric values attached")
        return np.asarray(self.values, dtype=float)

    def numeric_path(self, path: np.ndarray) -> np.ndarray:
        return self.numeric_values()[np.asarray(path, dtype=np.int64)]

    def generate(self, n: int, seed) -> np.ndarray:
        raise NotImplementedError

    def generate_batch(self, trials: int, n: int, seed) -> np.ndarray:
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        return np.stack([self.generate(n, np.random.default_rng(s)) for s in ss.spawn(trials)])

    def conditional(self, past) -> np.ndarray:
        raise NotImplementedError

    def block_probability(self, block) -> float:
        raise NotImplementedError

    def block_log2_probability(self, block) -> float:
        """log2 of the stationary block mass; -inf for impossible blocks.

        Overridden where long blocks would underflow a plain product.
        """
        p = self.block_probability(block)
        return math.log2(p) if p > 0.0 else -math.inf

    def entropy_rate(self) -> EntropyRateResult:
        raise NotImplementedError

    def bayes_error_rate(self) -> float:
        raise UnsupportedQueryError(f"no exact error-rate oracle for {self.kind}")

    def innovation_variance(self) -> float:
        raise UnsupportedQueryError(f"no innovation oracle for {self.kind}")


class IIDSource(_SourceBase):
    """Independent draws from a fixed pmf."""

    kind = "iid"

    def __init__(self, pmf, values=None):
        self.pmf = _validate_pmf(pmf)
        self.alphabet_size = self.pmf.size
        if self.alphabet_size < 2:
            raise InputError("a source needs at least two symbols")
        self.values = None if values is None else tuple(float(v) for v in values)
        if self.values is not None and len(self.values) != self.alphabet_size:
            raise InputError("values must align with the pmf")

    def generate(self, n: int, seed) -> np.ndarray:
        return _rng(seed).choice(self.alphabet_size, size=int(n), p=self.pmf).astype(np.int64)

    def generate_batch(self, trials: int, n: int, seed) -> np.ndarray:
        return (
            _rng(seed)
            .choice(self.alphabet_size, size=(int(trials), int(n)), p=self.pmf)
            .astype(np.int64)
        )

    def conditional(self, past) -> np.ndarray:
        return self.pmf.copy()

    def block_probability(self, block) -> float:
        return float(np.prod(self.pmf[np.asarray(block, dtype=np.int64)]))

    def block_log2_probability(self, block) -> float:
        probs = self.pmf[np.asarray(block, dtype=np.int64)]
        if (probs <= 0.0).any():
            return -math.inf
        return float(np.log2(probs).sum())

    def entropy_rate(self) -> EntropyRateResult:
        return EntropyRateResult(_entropy_bits(self.pmf), exact=True)

    def bayes_error_rate(self) -> float:
        return float(1.0 - self.pmf.max())

    def innovation_variance(self) -> float:
        v = self.numeric_values()
        mean = float(self.pmf @ v)
        return float(self.pmf @ (v - mean) ** 2)


def _stationary_distribution(transition: np.ndarray) -> np.ndarray:
    """Stationary law of a row-stochastic matrix via the unit eigenvector."""
    w, vecs = np.linalg.eig(transition.T)
    i = int(np.argmin(np.abs(w - 1.0)))
    pi = np.real(vecs[:, i])
    pi = np.abs(pi)
    return pi / pi.sum()


class MarkovSource(_SourceBase):
    """Finite Markov chain of a given order, started from its stationary law.

    ``transition`` has one row per length-``order`` context (contexts are
    enumerated big-endian, oldest symbol most significant) and one column
    per next symbol.
    """

    kind = "markov"

    def __init__(self, transition, order: int = 1, values=None):
        T = np.asarray(transition, dtype=float)
        if T.ndim != 2:
            raise InputError("transition must be a matrix")
        m = T.shape[1]
        if m < 2 or T.shape[0] != m**order:
            raise InputError(
                f"transition must have {m}**order rows for alphabet size {m}"
            )
        for row in T:
            _validate_pmf(row, m)
        self.transition = T
        self.order = int(order)
        self.alphabet_size = m
        self.values = None if values is None else tuple(float(v) for v in values)
        if self.values is not None and len(self.values) != m:
            raise InputError("values must align with the alphabet")
        self._ctx_pi = _stationary_distribution(self._lifted_chain())
        self._cum = np.cumsum(T, axis=1)

    def _lifted_chain(self) -> np.ndarray:
        m, K = self.alphabet_size, self.order
        S = m**K
        lift = np.zeros((S, S))
        for ctx in range(S):
            for s in range(m):
                lift[ctx, (ctx * m + s) % S] += self.transition[ctx, s]
        return lift

    def _ctx_index(self, symbols) -> int:
        idx = 0
        for s in symbols:
            idx = idx * self.alphabet_size + int(s)
        return idx

    def _decode_ctx(self, idx: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.order):
            out.append(idx % self.alphabet_size)
            idx //= self.alphabet_size
        return tuple(reversed(out))

    @property
    def _symmetric_binary(self) -> bool:
        T = self.transition
        return (
            self.order == 1
            and self.alphabet_size == 2
            and abs(T[0, 0] - T[1, 1]) < 1e-15
        )

    def generate(self, n: int, seed) -> np.ndarray:
        return self.generate_batch(1, n, seed)[0]

    def generate_batch(self, trials: int, n: int, seed) -> np.ndarray:
        rng = _rng(seed)
        trials, n = int(trials), int(n)
        m, K = self.alphabet_size, self.order
        out = np.empty((trials, n), dtype=np.int64)
        ctx = rng.choice(m**K, size=trials, p=self._ctx_pi)
        first = np.array([self._decode_ctx(c) for c in range(m**K)], dtype=np.int64)
        head = first[ctx][:, : min(K, n)]
        out[:, : min(K, n)] = head
        if n <= K:
            return out
        if self._symmetric_binary:
            flips = rng.random((trials, n - 1)) < self.transition[0, 1]
            out[:, 1:] = (out[:, :1] + np.cumsum(flips, axis=1)) % 2
            return out
        cum = self._cum
        for t in range(K, n):
            u = rng.random(trials)
            rows = cum[ctx]
            sym = (u[:, None] > rows).sum(axis=1)
            out[:, t] = sym
            ctx = (ctx * m + sym) % (m**K)
        return out

    def conditional(self, past) -> np.ndarray:
        past = np.asarray(past, dtype=np.int64)
        K = self.order
        if past.size >= K:
            return self.transition[self._ctx_index(past[-K:])].copy()
        # Exact marginalization over the unseen part of the context.
        j = past.size
        m = self.alphabet_size
        num = np.zeros(m)
        den = 0.0
        for ctx in range(m**K):
            sym = self._decode_ctx(ctx)
            if j == 0 or sym[K - j :] == tuple(int(s) for s in past):
                num += self._ctx_pi[ctx] * self.transition[ctx]
                den += self._ctx_pi[ctx]
        return num / den

    def block_probability(self, block) -> float:
        block = tuple(int(s) for s in block)
        K, m = self.order, self.alphabet_size
        if len(block) >= K:
            p = self._ctx_pi[self._ctx_index(block[:K])]
            ctx = self._ctx_index(block[:K])
            for s in block[K:]:
                p *= self.transition[ctx, s]
                ctx = (ctx * m + s) % (m**K)
            return float(p)
        j = len(block)
        total = 0.0
        for ctx in range(m**K):
            if self._decode_ctx(ctx)[:j] == block:
                total += self._ctx_pi[ctx]
        return float(total)

    def block_log2_probability(self, block) -> float:
        block = tuple(int(s) for s in block)
        K, m = self.order, self.alphabet_size
        if len(block) < K:
            p = self.block_probability(block)
            return math.log2(p) if p > 0.0 else -math.inf
        ctx = self._ctx_index(block[:K])
        if self._ctx_pi[ctx] <= 0.0:
            return -math.inf
        total = math.log2(self._ctx_pi[ctx])
        for s in block[K:]:
            step = self.transition[ctx, s]
            if step <= 0.0:
                return -math.inf
            total += math.log2(step)
            ctx = (ctx * m + s) % (m**K)
        return total

    def entropy_rate(self) -> EntropyRateResult:
        h = sum(
            self._ctx_pi[c] * _entropy_bits(self.transition[c])
            for c in range(len(self._ctx_pi))
        )
        return EntropyRateResult(float(h), exact=True)

    def bayes_error_rate(self) -> float:
        return float(1.0 - self._ctx_pi @ self.transition.max(axis=1))

    def innovation_variance(self) -> float:
        v = self.numeric_values()
        cond_mean = self.transition @ v
        second = self.transition @ v**2
        return float(self._ctx_pi @ second - self._ctx_pi @ cond_mean**2)


class PeriodicSource(_SourceBase):
    """Deterministic cycle observed at a uniformly random phase."""

    kind = "periodic"

    def __init__(self, cycle, values=None):
        self.cycle = tuple(int(s) for s in cycle)
        if not self.cycle or min(self.cycle) < 0:
            raise InputError("cycle must be a non-empty tuple of symbol indices")
        self.alphabet_size = max(max(self.cycle) + 1, 2)
        self.values = None if values is None else tuple(float(v) for v in values)
        self._arr = np.asarray(self.cycle, dtype=np.int64)

    def generate(self, n: int, seed) -> np.ndarray:
        phase = int(_rng(seed).integers(len(self.cycle)))
        return self._arr[(phase + np.arange(int(n))) % len(self.cycle)]

    def generate_batch(self, trials: int, n: int, seed) -> np.ndarray:
        phases = _rng(seed).integers(len(self.cycle), size=int(trials))
        idx = (phases[:, None] + np.arange(int(n))[None, :]) % len(self.cycle)
        return self._arr[idx]

    def _consistent_phases(self, past) -> list[int]:
        """Phases (index of the next emission) matching a past suffix."""
        past = np.asarray(past, dtype=np.int64)
        L = len(self.cycle)
        depth = min(past.size, L)
        out = []
        for phi in range(L):
            if all(self.cycle[(phi - 1 - i) % L] == past[-1 - i] for i in range(depth)):
                out.append(phi)
        return out

    def conditional(self, past) -> np.ndarray:
        phases = self._consistent_phases(past)
        pmf = np.zeros(self.alphabet_size)
        for phi in phases:
            pmf[self.cycle[phi]] += 1.0
        return pmf / len(phases)

    def block_probability(self, block) -> float:
        block = tuple(int(s) for s in block)
        L = len(self.cycle)
        hits = sum(
            all(self.cycle[(phi + i) % L] == block[i] for i in range(len(block)))
            for phi in range(L)
        )
        return hits / L

    def entropy_rate(self) -> EntropyRateResult:
        return EntropyRateResult(0.0, exact=True)

    def bayes_error_rate(self) -> float:
        L = len(self.cycle)
        err = 0.0
        for phi in range(L):
            past = [self.cycle[(phi - L + i) % L] for i in range(L)]
            err += 1.0 - self.conditional(past).max()
        return err / L

    def innovation_variance(self) -> float:
        v = self.numeric_values()
        L = len(self.cycle)
        total = 0.0
        for phi in range(L):
            past = [self.cycle[(phi - L + i) % L] for i in range(L)]
            pmf = self.conditional(past)
            mean = pmf @ v
            total += pmf @ (v - mean) ** 2
        return float(total / L)


class HMMSource(_SourceBase):
    """Hidden Markov chain with per-state emission rows.

    ``conditional`` runs the exact forward filter over the supplied past;
    :meth:`conditional_given_state` is the oracle when the hidden state is
    revealed as side information.
    """

    kind = "hmm"

    def __init__(self, state_transition, emission, values=None):
        A = np.asarray(state_transition, dtype=float)
        E = np.asarray(emission, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InputError("state_transition must be square")
        if E.ndim != 2 or E.shape[0] != A.shape[0]:
            raise InputError("emission needs one row per hidden state")
        for row in A:
            _validate_pmf(row)
        for row in E:
            _validate_pmf(row)
        self.A, self.E = A, E
        self.n_states = A.shape[0]
        self.alphabet_size = E.shape[1]
        self.values = None if values is None else tuple(float(v) for v in values)
        self.state_pi = _stationary_distribution(A)

    def generate_with_states(self, n: int, seed) -> tuple[np.ndarray, np.ndarray]:
        rng = _rng(seed)
        n = int(n)
        states = np.empty(n, dtype=np.int64)
        xs = np.empty(n, dtype=np.int64)
        cumA = np.cumsum(self.A, axis=1)
        cumE = np.cumsum(self.E, axis=1)
        s = int(rng.choice(self.n_states, p=self.state_pi))
        for t in range(n):
            states[t] = s
            xs[t] = int(np.searchsorted(cumE[s], rng.random(), side="right"))
            s = int(np.searchsorted(cumA[s], rng.random(), side="right"))
        return xs, states

    def generate(self, n: int, seed) -> np.ndarray:
        return self.generate_with_states(n, seed)[0]

    def conditional(self, past) -> np.ndarray:
        """Next-symbol law given exactly the supplied past (forward filter)."""
        alpha = self.state_pi.copy()
        for x in np.asarray(past, dtype=np.int64):
            alpha = alpha * self.E[:, x]
            total = alpha.sum()
            if total <= 0:
                raise UnsupportedQueryError("past has zero probability under this model")
            alpha = (alpha / total) @ self.A
        return alpha @ self.E

    def conditional_given_state(self, state: int) -> np.ndarray:
        """Law of the symbol emitted at a known hidden state."""
        return self.E[int(state)].copy()

    def block_probability(self, block) -> float:
        alpha = self.state_pi.copy()
        for x in np.asarray(block, dtype=np.int64):
            alpha = (alpha * self.E[:, x]) @ self.A
        # The trailing advance through A preserves the block's total mass.
        return float(alpha.sum())

    def block_log2_probability(self, block) -> float:
        alpha = self.state_pi.copy()
        total = 0.0
        for x in np.asarray(block, dtype=np.int64):
            alpha = alpha * self.E[:, x]
            mass = alpha.sum()
            if mass <= 0.0:
                return -math.inf
            total += math.log2(mass)
            alpha = (alpha / mass) @ self.A
        return total

    def entropy_rate(self, n: int = 200_000, seed: int = 7) -> EntropyRateResult:
        """Monte-Carlo estimate via filtered per-symbol code lengths."""
        xs = self.generate(n, seed)
        alpha = self.state_pi.copy()
        bits = np.empty(n)
        for t, x in enumerate(xs):
            pred = alpha @ self.E
            bits[t] = -math.log2(pred[x])
            alpha = alpha * self.E[:, x]
            alpha = (alpha / alpha.sum()) @ self.A
        chunk = np.array([c.mean() for c in np.array_split(bits, 50)])
        return EntropyRateResult(
            float(bits.mean()), exact=False, stderr=float(chunk.std(ddof=1) / math.sqrt(50))
        )

    def side_info_bayes_error_rate(self) -> float:
        """Best error rate of a symbol predictor that sees the hidden state."""
        return float(1.0 - self.state_pi @ self.E.max(axis=1))


class RyabcoSource(_SourceBase):
    """Three-letter renewal chain whose memory resets on the letter ``a``.

    From hidden state ``i`` the next letter is ``a`` with probability 1/2
    (resetting the state to 0); otherwise the state advances to ``i + 1``
    and the letter is ``b`` with probability ``delta_i / 2`` or ``c`` with
    the remaining ``(1 - delta_i) / 2``.  The mixing values ``delta_i``
    cycle through ``delta_cycle``.  Stationary state law: 2**-(i+1).

    The conditional law given a past is exact once the past reaches back
    to the latest ``a``; a past with no ``a`` at all is refused.
    """

    kind = "ryabco"
    A, B, C = 0, 1, 2

    def __init__(self, delta_cycle=(1.0 / 3.0, 2.0 / 3.0), values=None):
        self.delta_cycle = tuple(float(d) for d in delta_cycle)
        if not self.delta_cycle or any(not 0.0 <= d <= 1.0 for d in self.delta_cycle):
            raise InputError("delta_cycle entries must lie in [0, 1]")
        self.alphabet_size = 3
        self.values = None if values is None else tuple(float(v) for v in values)

    def delta(self, i: int) -> float:
        return self.delta_cycle[i % len(self.delta_cycle)]

    def state_pmf(self, i: int) -> np.ndarray:
        d = self.delta(i)
        return np.array([0.5, 0.5 * d, 0.5 * (1.0 - d)])

    def _initial_state(self, rng) -> int:
        return int(rng.geometric(0.5) - 1)

    def generate_with_states(self, n: int, seed) -> tuple[np.ndarray, np.ndarray]:
        rng = _rng(seed)
        n = int(n)
        xs = np.empty(n, dtype=np.int64)
        states = np.empty(n, dtype=np.int64)
        i = self._initial_state(rng)
        u = rng.random(n)
        for t in range(n):
            states[t] = i
            if u[t] < 0.5:
                xs[t] = self.A
                i = 0
            else:
                threshold = 0.5 + 0.5 * self.delta(i)
                xs[t] = self.B if u[t] < threshold else self.C
                i += 1
        return xs, states

    def generate(self, n: int, seed) -> np.ndarray:
        return self.generate_with_states(n, seed)[0]

    def state_from_past(self, past) -> int:
        past = np.asarray(past, dtype=np.int64)
        hits = np.flatnonzero(past == self.A)
        if hits.size == 0:
            raise UnsupportedQueryError(
                "conditional law needs the past to reach back to the last 'a'"
            )
        return int(past.size - 1 - hits[-1])

    def conditional(self, past) -> np.ndarray:
        return self.state_pmf(self.state_from_past(past))

    def block_probability(self, block) -> float:
        block = tuple(int(s) for s in block)
        p = len(self.delta_cycle)

        def given_state(i0: int) -> float:
            prob, i = 1.0, i0
            for s in block:
                pmf = self.state_pmf(i)
                prob *= pmf[s]
                i = 0 if s == self.A else i + 1
            return prob

        # The state only matters modulo the cycle length, so the geometric
        # mixture over initial states collapses to one term per residue.
        total = 0.0
        for rho in range(p):
            weight = 2.0 ** -(rho + 1) / (1.0 - 2.0**-p)
            total += weight * given_state(rho)
        return total

    def block_log2_probability(self, block) -> float:
        block = tuple(int(s) for s in block)
        p = len(self.delta_cycle)

        def log2_given_state(i0: int) -> float:
            total, i = 0.0, i0
            for s in block:
                step = self.state_pmf(i)[s]
                if step <= 0.0:
                    return -math.inf
                total += math.log2(step)
                i = 0 if s == self.A else i + 1
            return total

        terms = []
        for rho in range(p):
            lw = -(rho + 1) - math.log2(1.0 - 2.0**-p)
            lt = log2_given_state(rho)
            if lt > -math.inf:
                terms.append(lw + lt)
        if not terms:
            return -math.inf
        top = max(terms)
        return top + math.log2(sum(2.0 ** (t - top) for t in terms))

    def entropy_rate(self) -> EntropyRateResult:
        p = len(self.delta_cycle)
        h = 0.0
        for rho in range(p):
            weight = 2.0 ** -(rho + 1) / (1.0 - 2.0**-p)
            h += weight * _entropy_bits(self.state_pmf(rho))
        return EntropyRateResult(float(h), exact=True)

    def bayes_error_rate(self) -> float:
        p = len(self.delta_cycle)
        return float(
            sum(
                2.0 ** -(rho + 1) / (1.0 - 2.0**-p) * (1.0 - self.state_pmf(rho).max())
                for rho in range(p)
            )
        )


PRESETS = {
    "iid_fair": lambda: IIDSource((0.5, 0.5)),
    "iid_p25": lambda: IIDSource((0.75, 0.25)),
    "markov_stay90": lambda: MarkovSource([[0.9, 0.1], [0.1, 0.9]]),
    "periodic01": lambda: PeriodicSource((0, 1)),
    "ryabco_alt": lambda: RyabcoSource((1.0 / 3.0, 2.0 / 3.0)),
}


def get_preset(name: str, values=None):
    try:
        source = PRESETS[name]()
    except KeyError:
        raise InputError(
            f"unknown source preset {name!r}; available: {sorted(PRESETS)}"
        ) from None
    if values is not None:
        source.values = tuple(float(v) for v in values)
        if len(source.values) != source.alphabet_size:
            raise InputError("values must align with the source alphabet")
    return source


def build_source(spec):
    """Build a source from a preset name or an inline description dict."""
    if isinstance(spec, str):
        return get_preset(spec)
    if not isinstance(spec, dict):
        raise InputError("source spec must be a preset name or a dict")
    spec = dict(spec)
    values = spec.pop("values", None)
    if "preset" in spec:
        return get_preset(spec["preset"], values)
    kind = spec.pop("kind", None)
    builders = {
        "iid": lambda: IIDSource(spec["pmf"], values),
        "markov": lambda: MarkovSource(
            spec["transition"], spec.get("order", 1), values
        ),
        "periodic": lambda: PeriodicSource(spec["cycle"], values),
        "hmm": lambda: HMMSource(spec["state_transition"], spec["emission"], values),
        "ryabco": lambda: RyabcoSource(
            spec.get("delta_cycle", (1.0 / 3.0, 2.0 / 3.0)), values
        ),
    }
    if kind not in builders:
        raise InputError(f"unknown source kind {kind!r}")
    try:
        return builders[kind]()
    except KeyError as missing:
        raise InputError(f"source spec is missing field {missing}") from None
