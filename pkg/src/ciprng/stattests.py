"""Statistical battery: three NIST SP 800-22 tests and two DieHARD tests.

NIST-style tests return one p-value per sequence and are judged on the set of
sequences by the uniformity of those p-values (``p_value_T >= 1e-4``). The
DieHARD-style tests report ``P = F(X)`` for the statistic's assumed
distribution ``F`` and fail when ``P`` falls outside ``[1e-4, 1 - 1e-4]``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numba import njit

from ciprng.bitstream import BitCorpus, InsufficientData, bits_to_words
from ciprng.special import erfc, igam, igamc, normal_cdf

ALPHA = 0.01
UNIFORMITY_THRESHOLD = 1e-4
DIEHARD_LOW, DIEHARD_HIGH = 1e-4, 1 - 1e-4

RANK_MATRICES = 40_000
RANK_SIZE = 32
COUNT_ONES_WORDS = 256_000
DIEHARD_WORDS = 1 << 23

NIST_TESTS = ("monobit", "block_frequency", "runs")
DIEHARD_TESTS = ("matrix_rank", "count_the_ones")
ALL_TESTS = NIST_TESTS + DIEHARD_TESTS


class SequenceTooShort(ValueError):
    pass


class BadBlockLength(ValueError):
    pass


class TooFewSequences(ValueError):
    pass


@dataclass
class TestOutcome:
    __test__ = False  # not a pytest class

    name: str
    statistic: float
    p_values: list[float]
    passed: bool
    p_value_T: float | None = None
    reason: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        d = {
            "statistic": None if math.isnan(self.statistic) else self.statistic,
            "p_values": self.p_values,
            "p_value_T": self.p_value_T,
            "verdict": self.verdict,
        }
        if self.reason:
            d["reason"] = self.reason
        if self.extra:
            d["extra"] = self.extra
        return d


@dataclass
class BatteryReport:
    outcomes: dict[str, TestOutcome]

    @property
    def passed_count(self) -> int:
        return sum(o.passed for o in self.outcomes.values())

    @property
    def score(self) -> str:
        return f"{self.passed_count}/{len(self.outcomes)}"

    @property
    def passed(self) -> bool:
        return self.passed_count == len(self.outcomes)

    def to_dict(self) -> dict:
        d = {name: o.to_dict() for name, o in self.outcomes.items()}
        d["score"] = self.score
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _as_bits(seq) -> np.ndarray:
    return np.asarray(seq, dtype=np.uint8)


# ---------------------------------------------------------------------------
# NIST-style tests
# ---------------------------------------------------------------------------


def monobit_p(bits: np.ndarray, min_length: int = 100) -> tuple[float, float]:
    n = bits.size
    if n < max(min_length, 1):
        raise SequenceTooShort(f"monobit needs n >= {min_length}, got {n}")
    s_n = 2 * int(np.count_nonzero(bits)) - n
    return float(s_n), erfc(abs(s_n) / math.sqrt(2 * n))


def block_frequency_p(bits: np.ndarray, block_len: int = 128) -> tuple[float, float]:
    n = bits.size
    if block_len < 20 or block_len > n:
        raise BadBlockLength(f"need n >= M >= 20, got n={n}, M={block_len}")
    blocks = n // block_len
    props = bits[: blocks * block_len].reshape(blocks, block_len).sum(axis=1, dtype=np.int64) / block_len
    chi2 = 4.0 * block_len * float(np.sum((props - 0.5) ** 2))
    return chi2, igamc(blocks / 2.0, chi2 / 2.0)


def runs_p(bits: np.ndarray) -> tuple[float, float]:
    n = bits.size
    if n < 2:
        raise SequenceTooShort("runs needs at least two bits")
    pi = np.count_nonzero(bits) / n
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        return float("nan"), 0.0
    v_n = 1 + int(np.count_nonzero(bits[1:] != bits[:-1]))
    num = abs(v_n - 2.0 * n * pi * (1 - pi))
    den = 2.0 * math.sqrt(2.0 * n) * pi * (1 - pi)
    return float(v_n), erfc(num / den)


def _single(name: str, statistic: float, p: float) -> TestOutcome:
    return TestOutcome(name, statistic, [p], p >= ALPHA)


def monobit_test(seq, min_length: int = 100) -> TestOutcome:
    """Frequency test; ``min_length`` relaxes the usual 100-bit floor for worked examples."""
    return _single("monobit", *monobit_p(_as_bits(seq), min_length))


def block_frequency_test(seq, block_len: int = 128) -> TestOutcome:
    return _single("block_frequency", *block_frequency_p(_as_bits(seq), block_len))


def runs_test(seq) -> TestOutcome:
    stat, p = runs_p(_as_bits(seq))
    out = _single("runs", stat, p)
    if math.isnan(stat):
        out.reason = "frequency pre-test failed"
    return out


def pvalue_uniformity(p_values: Sequence[float]) -> float:
    """Chi-square over ten equal bins of [0, 1]; returns ``igamc(9/2, chi2/2)``."""
    return _uniformity(p_values)[1]


def _uniformity(p_values: Sequence[float]) -> tuple[float, float]:
    s = len(p_values)
    if s < 10:
        raise TooFewSequences(f"uniformity check needs at least 10 p-values, got {s}")
    bins = np.minimum((np.asarray(p_values, dtype=float) * 10).astype(int), 9)
    counts = np.bincount(bins, minlength=10)
    expected = s / 10.0
    chi2 = float(np.sum((counts - expected) ** 2) / expected)
    return chi2, igamc(4.5, chi2 / 2.0)


def proportion_check(p_values: Sequence[float], alpha: float = ALPHA) -> tuple[float, float, bool]:
    """Share of sequences with p >= alpha against the 3-sigma binomial lower bound."""
    s = len(p_values)
    prop = sum(p >= alpha for p in p_values) / s
    lower = (1 - alpha) - 3 * math.sqrt(alpha * (1 - alpha) / s)
    return prop, lower, prop >= lower


# ---------------------------------------------------------------------------
# DieHARD-style tests
# ---------------------------------------------------------------------------


def gf2_rank(rows: Sequence[int], ncols: int = RANK_SIZE) -> int:
    """Rank over GF(2) of a matrix given as integer rows (bit j of a row = column j)."""
    rows = [int(r) for r in rows]
    rank = 0
    for col in range(ncols - 1, -1, -1):
        bit = 1 << col
        pivot = next((i for i in range(rank, len(rows)) if rows[i] & bit), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i] & bit:
                rows[i] ^= rows[rank]
        rank += 1
    return rank


@njit(cache=True)
def _gf2_ranks(words, size):
    count = words.size // size
    ranks = np.empty(count, dtype=np.int64)
    rows = np.empty(size, dtype=np.uint64)
    for mtx in range(count):
        for i in range(size):
            rows[i] = words[mtx * size + i]
        rank = 0
        for col in range(size - 1, -1, -1):
            bit = np.uint64(1) << np.uint64(col)
            pivot = -1
            for i in range(rank, size):
                if rows[i] & bit:
                    pivot = i
                    break
            if pivot < 0:
                continue
            tmp = rows[rank]
            rows[rank] = rows[pivot]
            rows[pivot] = tmp
            for i in range(rank + 1, size):
                if rows[i] & bit:
                    rows[i] ^= rows[rank]
            rank += 1
        ranks[mtx] = rank
    return ranks


def gf2_ranks(words: np.ndarray, size: int = RANK_SIZE) -> np.ndarray:
    """Ranks of consecutive ``size x size`` matrices, one word per row."""
    return _gf2_ranks(np.ascontiguousarray(words, dtype=np.uint64), size)


def rank_probability(rank: int, n: int = RANK_SIZE) -> float:
    """Probability that a uniform n x n matrix over GF(2) has the given rank."""
    if not 0 <= rank <= n:
        return 0.0
    log2 = rank * (2 * n - rank) - n * n
    prod = 1.0
    for i in range(rank):
        prod *= (1 - 2.0 ** (i - n)) ** 2 / (1 - 2.0 ** (i - rank))
    return 2.0**log2 * prod


def rank_category_probabilities(n: int = RANK_SIZE) -> np.ndarray:
    """Probabilities of ranks n, n-1, n-2 and <= n-3."""
    top = [rank_probability(n - d, n) for d in range(3)]
    return np.array(top + [1.0 - sum(top)])


def matrix_rank_test(words: np.ndarray, n_matrices: int = RANK_MATRICES) -> TestOutcome:
    words = np.asarray(words)
    need = n_matrices * RANK_SIZE
    if words.size < need:
        raise InsufficientData(f"matrix rank needs {need} words, got {words.size}")
    ranks = gf2_ranks(words[:need])
    counts = np.array(
        [np.sum(ranks == RANK_SIZE), np.sum(ranks == RANK_SIZE - 1),
         np.sum(ranks == RANK_SIZE - 2), np.sum(ranks <= RANK_SIZE - 3)],
        dtype=float,
    )
    expected = n_matrices * rank_category_probabilities()
    chi2 = float(np.sum((counts - expected) ** 2 / expected))
    p = igam(1.5, chi2 / 2.0)
    return TestOutcome(
        "matrix_rank", chi2, [p], DIEHARD_LOW <= p <= DIEHARD_HIGH,
        extra={"rank_counts": [int(c) for c in counts]},
    )


# popcount class of each byte value: 0-2 -> A, 3 -> B, 4 -> C, 5 -> D, 6-8 -> E
_POPCOUNT = np.array([bin(b).count("1") for b in range(256)])
BYTE_LETTER = np.clip(_POPCOUNT - 2, 0, 4).astype(np.int64)
LETTER_WEIGHTS = np.array([37, 56, 70, 56, 37])
LETTER_PROBS = LETTER_WEIGHTS / 256.0


def _word_probs(length: int) -> np.ndarray:
    probs = np.ones(1)
    for _ in range(length):
        probs = np.outer(probs, LETTER_PROBS).ravel()
    return probs


def _pearson(letters: np.ndarray, length: int, n_words: int) -> float:
    idx = np.zeros(n_words, dtype=np.int64)
    for j in range(length):
        idx = idx * 5 + letters[j : j + n_words]
    counts = np.bincount(idx, minlength=5**length)
    expected = n_words * _word_probs(length)
    return float(np.sum((counts - expected) ** 2 / expected))


def count_the_ones_test(data, n_words: int = COUNT_ONES_WORDS) -> TestOutcome:
    """Overlapping 5-letter words over byte popcount classes; statistic (Q5 - Q4 - 2500) / sqrt(5000)."""
    raw = np.frombuffer(bytes(data), dtype=np.uint8) if isinstance(data, (bytes, bytearray)) else np.asarray(data, dtype=np.uint8)
    if raw.size < n_words + 4:
        raise InsufficientData(f"count-the-1's needs {n_words + 4} bytes, got {raw.size}")
    letters = BYTE_LETTER[raw[: n_words + 4]]
    q5 = _pearson(letters, 5, n_words)
    q4 = _pearson(letters, 4, n_words)
    z = (q5 - q4 - 2500.0) / math.sqrt(5000.0)
    p = normal_cdf(z)
    return TestOutcome("count_the_ones", z, [p], DIEHARD_LOW <= p <= DIEHARD_HIGH, extra={"q5": q5, "q4": q4})


def words_to_bytes(words: np.ndarray) -> np.ndarray:
    """Little-endian byte image of 32-bit words, as they sit in a binary export."""
    return np.asarray(words, dtype=np.uint64).astype("<u4").view(np.uint8)


# ---------------------------------------------------------------------------
# battery
# ---------------------------------------------------------------------------


@dataclass
class BatteryConfig:
    tests: tuple[str, ...] = ALL_TESTS
    block_len: int = 128
    alpha: float = ALPHA
    threads: int = 1

    def __post_init__(self):
        unknown = [t for t in self.tests if t not in ALL_TESTS]
        if unknown:
            raise ValueError(f"unknown tests: {', '.join(unknown)}")
        if not self.tests:
            raise ValueError("no tests enabled")


def check_dimensions(s: int, n: int, n_words: int, config: BatteryConfig) -> None:
    """Raise :class:`InsufficientData` when a corpus of this shape cannot feed the enabled tests."""
    problems = []
    if s < 1 or n < 1:
        problems.append("corpus is empty")
    nist = [t for t in config.tests if t in NIST_TESTS]
    if nist and s < 10:
        problems.append(f"p-value uniformity needs s >= 10, got {s}")
    if "monobit" in nist and n < 100:
        problems.append(f"monobit needs n >= 100, got {n}")
    if "block_frequency" in nist and not 20 <= config.block_len <= n:
        problems.append(f"block frequency needs n >= M >= 20, got n={n}, M={config.block_len}")
    if "matrix_rank" in config.tests and n_words < RANK_MATRICES * RANK_SIZE:
        problems.append(f"matrix rank needs {RANK_MATRICES * RANK_SIZE} words, got {n_words}")
    if "count_the_ones" in config.tests and 4 * n_words < COUNT_ONES_WORDS + 4:
        problems.append(f"count-the-1's needs {COUNT_ONES_WORDS + 4} bytes, got {4 * n_words}")
    if problems:
        raise InsufficientData("; ".join(problems))


_NIST_FUNCS: dict[str, Callable] = {
    "monobit": lambda bits, cfg: monobit_p(bits),
    "block_frequency": lambda bits, cfg: block_frequency_p(bits, cfg.block_len),
    "runs": lambda bits, cfg: runs_p(bits),
}


def _nist_pvalues(corpus: BitCorpus, names: list[str], config: BatteryConfig) -> dict[str, list]:
    def one(i):
        bits = corpus.sequence(i)
        row = {}
        for name in names:
            try:
                row[name] = _NIST_FUNCS[name](bits, config)[1]
            except ValueError as exc:
                row[name] = exc
        return row

    with ThreadPoolExecutor(max_workers=max(1, config.threads)) as pool:
        rows = list(pool.map(one, range(corpus.s)))
    return {name: [r[name] for r in rows] for name in names}


def _nist_outcome(name: str, values: list, alpha: float) -> TestOutcome:
    errors = [v for v in values if isinstance(v, Exception)]
    if errors:
        return TestOutcome(name, float("nan"), [], False, reason=str(errors[0]))
    try:
        chi2, p_t = _uniformity(values)
    except TooFewSequences as exc:
        return TestOutcome(name, float("nan"), values, False, reason=str(exc))
    prop, lower, prop_ok = proportion_check(values, alpha)
    return TestOutcome(
        name, chi2, values, p_t >= UNIFORMITY_THRESHOLD, p_value_T=p_t,
        reason=None if p_t >= UNIFORMITY_THRESHOLD else "p-values not uniform",
        extra={"proportion": prop, "proportion_lower_bound": lower, "proportion_ok": prop_ok},
    )


def run_battery(corpus: BitCorpus | None, config: BatteryConfig = BatteryConfig(),
                words: np.ndarray | None = None) -> BatteryReport:
    """Apply every enabled test.

    NIST-style tests run on each corpus sequence. DieHARD-style tests run on
    ``words``, or on the corpus bits regrouped as 32-bit words when ``words``
    is None. A test that cannot run is recorded as a failure with its reason.
    """
    if corpus is None or corpus.s < 1:
        raise InsufficientData("empty corpus")
    nist = [t for t in config.tests if t in NIST_TESTS]
    pvals = _nist_pvalues(corpus, nist, config) if nist else {}

    if words is None and any(t in DIEHARD_TESTS for t in config.tests):
        bits = corpus.bits()
        words = bits_to_words(bits[: bits.size - bits.size % 32])

    outcomes: dict[str, TestOutcome] = {}
    for name in config.tests:
        if name in NIST_TESTS:
            outcomes[name] = _nist_outcome(name, pvals[name], config.alpha)
            continue
        try:
            if name == "matrix_rank":
                outcomes[name] = matrix_rank_test(words)
            else:
                outcomes[name] = count_the_ones_test(words_to_bytes(words))
        except InsufficientData as exc:
            outcomes[name] = TestOutcome(name, float("nan"), [], False, reason=str(exc))
    return BatteryReport(outcomes)
