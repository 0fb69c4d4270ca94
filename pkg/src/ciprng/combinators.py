"""Chaotic-iteration combinators that post-process one or two input generators.

Boolean states are plain ints: cell ``i`` is bit ``i``. The ``*_round`` and
``*_next`` functions are scalar references; the stream classes (:class:`OldCI`,
:class:`NewCI`, :class:`XorCI`, :class:`MixedXorCI`, :class:`MultipleXorCI`)
produce the same outputs in bulk.

Every stream yields 32-bit words. Old CI rounds emit 4-bit states; eight
consecutive rounds are packed into one word, round ``j`` at bits ``4j..4j+3``,
so the little-endian byte image holds the first round in the low nibble of the
first byte.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from math import comb
from typing import Callable, Hashable, Protocol, Sequence, TypeVar

import numpy as np
from numba import njit

WORD_BITS = 32
WORD_MASK = (1 << WORD_BITS) - 1
OLD_CI_CELLS = 4

#: cumulative binomial thresholds T_k = sum_{i<=k} C(32, i); T_32 = 2**32.
DECIMATION_THRESHOLDS: tuple[int, ...] = tuple(
    sum(comb(WORD_BITS, i) for i in range(k + 1)) for k in range(WORD_BITS + 1)
)
_THRESHOLDS = np.array(DECIMATION_THRESHOLDS, dtype=np.uint64)

# a round that needs more strategy draws than this is assumed to be stuck
MAX_DRAWS_PER_ROUND = 1 << 24


class Source(Protocol):
    """Anything that emits unsigned integers in ``[0, output_range)``."""

    output_range: int

    def next(self) -> int: ...

    def generate(self, count: int) -> np.ndarray: ...


class StrategyStall(RuntimeError):
    """The strategy generator cannot reach the required number of distinct cells."""


class PeriodNotFound(RuntimeError):
    pass


@dataclass(frozen=True)
class PeriodInfo:
    period: int
    preperiod: int


class CyclicSource:
    """Replays a fixed list of values forever; a toy strategy generator."""

    def __init__(self, values: Sequence[int], output_range: int = 1 << WORD_BITS):
        if len(values) == 0:
            raise ValueError("values must be non-empty")
        self.values = np.array([int(v) for v in values], dtype=np.uint64)
        self.output_range = output_range
        self._pos = 0

    @property
    def width(self) -> int:
        return (self.output_range - 1).bit_length()

    def next(self) -> int:
        return int(self.generate(1)[0])

    def generate(self, count: int) -> np.ndarray:
        idx = (self._pos + np.arange(count)) % self.values.size
        self._pos = (self._pos + count) % self.values.size
        return self.values[idx]


# ---------------------------------------------------------------------------
# scalar operations
# ---------------------------------------------------------------------------


def negation(n_cells: int) -> Callable[[int], int]:
    """Vectorial Boolean negation on ``n_cells`` cells."""
    mask = (1 << n_cells) - 1
    return lambda x: ~x & mask


def chaotic_iterate(f: Callable[[int], int], x: int, s: int, n_cells: int) -> int:
    """Update only cell ``s`` of ``x`` to ``f(x)``'s value there."""
    if not 0 <= s < n_cells:
        raise IndexError(f"cell {s} outside [0, {n_cells})")
    bit = 1 << s
    return (x & ~bit) | (f(x) & bit)


def g1(y: int) -> int:
    """Number of cells to flip for a 32-bit input: the Binomial(32, 1/2) quantile of y / 2**32."""
    return bisect.bisect_right(DECIMATION_THRESHOLDS, y)


def to_word(value: int, output_range: int) -> int:
    """Rescale an output in ``[0, output_range)`` onto ``[0, 2**32)``."""
    if output_range == 1 << WORD_BITS:
        return value
    return (value << WORD_BITS) // output_range


def old_ci_round(x: int, prng1: Source, prng2: Source) -> tuple[int, int]:
    """One round on a 4-cell state: (a mod 2) + 13 cells drawn as b mod 4, each negated."""
    m = prng1.next() % 2 + 13
    for _ in range(m):
        x ^= 1 << (prng2.next() % OLD_CI_CELLS)
    return x, x


def new_ci_round(x: int, prng1: Source, prng2: Source) -> tuple[int, int]:
    """One round on a 32-cell state: negate exactly g1(a) distinct cells chosen as b mod 32.

    Draws hitting a cell already negated in this round are discarded.
    """
    m = g1(to_word(prng1.next(), prng1.output_range))
    flipped = 0
    draws = 0
    while m:
        bit = 1 << (prng2.next() % WORD_BITS)
        draws += 1
        if not flipped & bit:
            x ^= bit
            flipped |= bit
            m -= 1
        elif draws > MAX_DRAWS_PER_ROUND:
            raise StrategyStall("strategy never reaches the required distinct cells")
    return x, x


def xor_ci_next(x: int, s: int) -> int:
    return x ^ s


def mixed_xor_next(x: int, prng1: Source, prng2: Source) -> int:
    return x ^ (prng1.next() & WORD_MASK) ^ (prng2.next() & WORD_MASK)


def multiple_xor_next(x: int, strategy_words: Sequence[int]) -> int:
    """Absorb ``m = len(strategy_words)`` strategy terms in one output step."""
    if len(strategy_words) < 1:
        raise ValueError("functional power must be at least 1")
    for s in strategy_words:
        x ^= s
    return x


S = TypeVar("S", bound=Hashable)


def find_period(stepper: Callable[[S], S], initial: S, max_steps: int) -> PeriodInfo:
    """Brent cycle detection on the orbit of ``initial``.

    ``max_steps`` bounds the number of ``stepper`` calls spent searching for the
    cycle; :class:`PeriodNotFound` is raised when it runs out.
    """
    power = period = 1
    tortoise = initial
    hare = stepper(initial)
    steps = 1
    while tortoise != hare:
        if steps >= max_steps:
            raise PeriodNotFound(f"no cycle within {max_steps} steps")
        if power == period:
            tortoise = hare
            power *= 2
            period = 0
        hare = stepper(hare)
        period += 1
        steps += 1

    tortoise = hare = initial
    for _ in range(period):
        hare = stepper(hare)
    preperiod = 0
    while tortoise != hare:
        tortoise = stepper(tortoise)
        hare = stepper(hare)
        preperiod += 1
    return PeriodInfo(period=period, preperiod=preperiod)


# ---------------------------------------------------------------------------
# bulk streams
# ---------------------------------------------------------------------------

_CHUNK = 1 << 20


def _words(source: Source, count: int) -> np.ndarray:
    return source.generate(count) & np.uint64(WORD_MASK)


def _to_words(values: np.ndarray, output_range: int) -> np.ndarray:
    if output_range == 1 << WORD_BITS:
        return values
    if output_range < 1 << WORD_BITS:
        return (values << np.uint64(WORD_BITS)) // np.uint64(output_range)
    return np.array([to_word(int(v), output_range) for v in values], dtype=np.uint64)


class _Feed:
    """Buffered view of a source; unread values survive between kernel calls."""

    def __init__(self, source: Source, transform: Callable[[np.ndarray], np.ndarray] | None = None):
        self.source = source
        self.transform = transform
        self.buf = np.empty(0, dtype=np.uint64)
        self.pos = 0

    @property
    def empty(self) -> bool:
        return self.pos >= self.buf.size

    def refill(self, count: int) -> None:
        values = self.source.generate(count)
        if self.transform is not None:
            values = self.transform(values)
        self.buf = np.concatenate([self.buf[self.pos:], values])
        self.pos = 0


@njit(cache=True)
def _old_ci_kernel(st, a_buf, a_pos, b_buf, b_pos, out, out_pos):
    x = st[0]
    rem = st[1]
    busy = st[2]
    two = np.uint64(2)
    four = np.uint64(4)
    while out_pos < out.size:
        if busy == 0:
            if a_pos >= a_buf.size:
                break
            rem = np.int64(a_buf[a_pos] % two) + 13
            a_pos += 1
            busy = 1
        while rem > 0 and b_pos < b_buf.size:
            x ^= np.int64(1) << np.int64(b_buf[b_pos] % four)
            b_pos += 1
            rem -= 1
        if rem > 0:
            break
        out[out_pos] = x
        out_pos += 1
        busy = 0
    st[0] = x
    st[1] = rem
    st[2] = busy
    return a_pos, b_pos, out_pos


@njit(cache=True)
def _g1_kernel(y, thresholds):
    lo = 0
    hi = thresholds.size
    while lo < hi:
        mid = (lo + hi) // 2
        if thresholds[mid] <= y:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True)
def _new_ci_kernel(st, a_buf, a_pos, b_buf, b_pos, out, out_pos, thresholds, max_draws):
    x = st[0]
    rem = st[1]
    busy = st[2]
    flags = st[3]
    draws = st[4]
    n = np.uint64(32)
    stalled = False
    while out_pos < out.size:
        if busy == 0:
            if a_pos >= a_buf.size:
                break
            rem = _g1_kernel(a_buf[a_pos], thresholds)
            a_pos += 1
            busy = 1
            flags = 0
            draws = 0
        while rem > 0 and b_pos < b_buf.size:
            bit = np.int64(1) << np.int64(b_buf[b_pos] % n)
            b_pos += 1
            draws += 1
            if flags & bit == 0:
                x ^= bit
                flags |= bit
                rem -= 1
            elif draws > max_draws:
                stalled = True
                break
        if stalled or rem > 0:
            break
        out[out_pos] = x
        out_pos += 1
        busy = 0
    st[0] = x
    st[1] = rem
    st[2] = busy
    st[3] = flags
    st[4] = draws
    if stalled:
        return a_pos, b_pos, -1
    return a_pos, b_pos, out_pos


class _RoundStream:
    """Shared driver for the two round-based combinators."""

    width = WORD_BITS
    output_range = 1 << WORD_BITS
    draws_per_round = 16

    def __init__(self, prng1: Source, prng2: Source, x0: int = 0):
        self.prng1 = prng1
        self.prng2 = prng2
        self._a = _Feed(prng1, self._transform_a())
        self._b = _Feed(prng2)
        self._st = np.zeros(5, dtype=np.int64)
        self._st[0] = x0

    def _transform_a(self):
        return None

    @property
    def x(self) -> int:
        """Current Boolean state."""
        return int(self._st[0])

    def _kernel(self, out, out_pos):
        raise NotImplementedError

    def rounds(self, count: int) -> np.ndarray:
        """States after each of the next ``count`` rounds."""
        out = np.empty(count, dtype=np.int64)
        done = 0
        while done < count:
            if self._a.empty and self._st[2] == 0:
                self._a.refill(min(count - done, _CHUNK))
            if self._b.empty:
                self._b.refill(min(max((count - done) * self.draws_per_round, 1024), 1 << 22))
            done = self._kernel(out, done)
            if done < 0:
                raise StrategyStall("strategy never reaches the required distinct cells")
        return out

    def next(self) -> int:
        return int(self.generate(1)[0])


class OldCI(_RoundStream):
    """Old CI generator: 4-cell state, 13 or 14 negations per round."""

    draws_per_round = 14

    def __init__(self, prng1: Source, prng2: Source, x0: int = 0):
        if not 0 <= x0 < 1 << OLD_CI_CELLS:
            raise ValueError("Old CI state has 4 cells")
        super().__init__(prng1, prng2, x0)

    def _kernel(self, out, out_pos):
        a_pos, b_pos, done = _old_ci_kernel(
            self._st, self._a.buf, self._a.pos, self._b.buf, self._b.pos, out, out_pos
        )
        self._a.pos, self._b.pos = a_pos, b_pos
        return done

    def generate(self, count: int) -> np.ndarray:
        words = np.zeros(count, dtype=np.uint64)
        for start in range(0, count, _CHUNK // 8):
            stop = min(start + _CHUNK // 8, count)
            nib = self.rounds(8 * (stop - start)).astype(np.uint64).reshape(-1, 8)
            shifts = np.arange(0, 32, 4, dtype=np.uint64)
            words[start:stop] = np.bitwise_or.reduce(nib << shifts, axis=1)
        return words


class NewCI(_RoundStream):
    """New CI generator: 32-cell state, g1(a) distinct negations per round.

    PRNG1 outputs are rescaled to 32 bits before decimation, so generators whose
    range is narrower than 2**32 still span every flip count.
    """

    draws_per_round = 32

    def __init__(self, prng1: Source, prng2: Source, x0: int = 0):
        if not 0 <= x0 <= WORD_MASK:
            raise ValueError("New CI state has 32 cells")
        super().__init__(prng1, prng2, x0)

    def _transform_a(self):
        rng = self.prng1.output_range
        return lambda values: _to_words(values, rng)

    def _kernel(self, out, out_pos):
        a_pos, b_pos, done = _new_ci_kernel(
            self._st, self._a.buf, self._a.pos, self._b.buf, self._b.pos,
            out, out_pos, _THRESHOLDS, MAX_DRAWS_PER_ROUND,
        )
        self._a.pos, self._b.pos = a_pos, b_pos
        return done

    def generate(self, count: int) -> np.ndarray:
        return self.rounds(count).astype(np.uint64)


class _XorStream:
    width = WORD_BITS
    output_range = 1 << WORD_BITS

    def __init__(self, x0: int = 0):
        if not 0 <= x0 <= WORD_MASK:
            raise ValueError("Xor CI state has 32 cells")
        self.x = x0

    def _strategy(self, count: int) -> np.ndarray:
        raise NotImplementedError

    def generate(self, count: int) -> np.ndarray:
        out = np.empty(count, dtype=np.uint64)
        for start in range(0, count, _CHUNK):
            stop = min(start + _CHUNK, count)
            chunk = np.bitwise_xor.accumulate(self._strategy(stop - start))
            chunk ^= np.uint64(self.x)
            out[start:stop] = chunk
            if chunk.size:
                self.x = int(chunk[-1])
        return out

    def next(self) -> int:
        return int(self.generate(1)[0])


class XorCI(_XorStream):
    """x^n = x^(n-1) xor S^n with S drawn from one generator."""

    def __init__(self, prng: Source, x0: int = 0):
        super().__init__(x0)
        self.prng = prng

    def _strategy(self, count):
        return _words(self.prng, count)


class MixedXorCI(_XorStream):
    """x^n = x^(n-1) xor PRNG1 xor PRNG2."""

    def __init__(self, prng1: Source, prng2: Source, x0: int = 0):
        super().__init__(x0)
        self.prng1 = prng1
        self.prng2 = prng2

    def _strategy(self, count):
        return _words(self.prng1, count) ^ _words(self.prng2, count)


class MultipleXorCI(_XorStream):
    """Xor CI absorbing ``power`` consecutive strategy words per output."""

    def __init__(self, prng: Source, power: int, x0: int = 0):
        if power < 1:
            raise ValueError("functional power must be at least 1")
        super().__init__(x0)
        self.prng = prng
        self.power = power

    def _strategy(self, count):
        if self.power == 1:
            return _words(self.prng, count)
        terms = _words(self.prng, count * self.power).reshape(count, self.power)
        return np.bitwise_xor.reduce(terms, axis=1)

    def generate(self, count: int) -> np.ndarray:
        # keep count * power bounded per chunk
        step = max(1, _CHUNK // self.power)
        parts = [super(MultipleXorCI, self).generate(min(step, count - i)) for i in range(0, count, step)]
        return np.concatenate(parts) if parts else np.empty(0, dtype=np.uint64)
