"""Turning generator output into bit corpora and the on-disk formats of external suites.

ASCII files hold one ``'0'``/``'1'`` character per bit with no separators (the NIST
STS input convention). Binary files hold little-endian 32-bit words (the dieharder
raw-input convention).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np


class InsufficientData(ValueError):
    """Not enough bits or words for the requested operation."""


class MalformedFile(ValueError):
    def __init__(self, path, position: int, detail: str):
        super().__init__(f"{path}: byte {position}: {detail}")
        self.position = position


@dataclass(frozen=True)
class PackingSpec:
    """How each source output becomes bits.

    The low ``width`` bits of every output are emitted, most significant first
    when ``bit_order`` is ``"msb"``. Outputs narrower than ``width`` are
    zero-extended only when ``zero_extend`` is set.
    """

    width: int = 32
    bit_order: str = "msb"
    zero_extend: bool = True

    def __post_init__(self):
        if not 1 <= self.width <= 64:
            raise ValueError(f"packing width {self.width} outside [1, 64]")
        if self.bit_order not in ("msb", "lsb"):
            raise ValueError(f"bit order must be 'msb' or 'lsb', got {self.bit_order!r}")

    def check_source(self, source_width: int) -> None:
        if source_width < self.width and not self.zero_extend:
            raise ValueError(
                f"source emits {source_width}-bit words; packing width {self.width} needs zero_extend"
            )

    def to_dict(self) -> dict:
        return {"width": self.width, "bit_order": self.bit_order, "zero_extend": self.zero_extend}


#: drops the always-zero top bit of 31-bit generators.
TRUNCATE_31 = PackingSpec(width=31)


def words_to_bits(words: np.ndarray, packing: PackingSpec = PackingSpec()) -> np.ndarray:
    words = np.asarray(words, dtype=np.uint64)
    if packing.bit_order == "msb":
        shifts = np.arange(packing.width - 1, -1, -1, dtype=np.uint64)
    else:
        shifts = np.arange(packing.width, dtype=np.uint64)
    return ((words[:, None] >> shifts) & np.uint64(1)).astype(np.uint8).ravel()


def bits_to_words(bits: np.ndarray) -> np.ndarray:
    """Group bits (msb first) into 32-bit words; the length must be a multiple of 32."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size % 32:
        raise ValueError("bit count is not a multiple of 32")
    return np.packbits(bits).view(">u4").astype(np.uint32)


@dataclass(eq=False)
class BitCorpus:
    """``s`` equal-length bit sequences, stored packed (one row per sequence)."""

    packed: np.ndarray
    n: int
    word_width: int = 32
    bit_order: str = "msb"

    def __post_init__(self):
        self.packed = np.atleast_2d(np.asarray(self.packed, dtype=np.uint8))
        if self.packed.shape[0] < 1 or self.n < 1:
            raise InsufficientData("a corpus needs at least one non-empty sequence")
        if self.packed.shape[1] != (self.n + 7) // 8:
            raise ValueError("packed row length does not match n")

    @classmethod
    def from_sequences(cls, sequences: Iterable[Sequence[int]], word_width: int = 32, bit_order: str = "msb"):
        rows = [np.asarray(seq, dtype=np.uint8) for seq in sequences]
        if not rows:
            raise InsufficientData("a corpus needs at least one non-empty sequence")
        n = rows[0].size
        if any(r.size != n for r in rows):
            raise ValueError("all sequences must have the same length")
        if np.any(np.concatenate(rows) > 1):
            raise ValueError("sequences must contain only 0 and 1")
        return cls(np.stack([np.packbits(r) for r in rows]), n, word_width, bit_order)

    @property
    def s(self) -> int:
        return self.packed.shape[0]

    def sequence(self, i: int) -> np.ndarray:
        return np.unpackbits(self.packed[i], count=self.n)

    def __iter__(self):
        return (self.sequence(i) for i in range(self.s))

    def bits(self) -> np.ndarray:
        """All sequences concatenated."""
        return np.concatenate(list(self))

    def select(self, i: int) -> "BitCorpus":
        return BitCorpus(self.packed[i : i + 1].copy(), self.n, self.word_width, self.bit_order)

    def __eq__(self, other):
        if not isinstance(other, BitCorpus):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.packed, other.packed)


class BitStream:
    """Continuous bit view of a source under a packing; no bits are dropped between reads."""

    _CHUNK_WORDS = 1 << 18

    def __init__(self, source, packing: PackingSpec = PackingSpec()):
        packing.check_source(getattr(source, "width", packing.width))
        self.source = source
        self.packing = packing
        self._pending = np.empty(0, dtype=np.uint8)

    def take(self, nbits: int) -> np.ndarray:
        parts = [self._pending[:nbits]]
        have = parts[0].size
        self._pending = self._pending[have:]
        while have < nbits:
            need_words = min(-(-(nbits - have) // self.packing.width), self._CHUNK_WORDS)
            bits = words_to_bits(self.source.generate(need_words), self.packing)
            use = min(bits.size, nbits - have)
            parts.append(bits[:use])
            self._pending = bits[use:]
            have += use
        return np.concatenate(parts)

    def take_words(self, count: int) -> np.ndarray:
        """Next ``32 * count`` bits regrouped as 32-bit words."""
        p = self.packing
        if not self._pending.size and p.width == 32 and p.bit_order == "msb":
            return (self.source.generate(count) & np.uint64(0xFFFFFFFF)).astype(np.uint32)
        out = np.empty(count, dtype=np.uint32)
        for start in range(0, count, self._CHUNK_WORDS):
            stop = min(start + self._CHUNK_WORDS, count)
            out[start:stop] = bits_to_words(self.take(32 * (stop - start)))
        return out


def generate_corpus(source, s: int, n: int, packing: PackingSpec = PackingSpec()) -> BitCorpus:
    """``s`` sequences of ``n`` bits from consecutive outputs of one stream.

    ``source`` may be a generator/combinator handle or a :class:`BitStream`; in
    the latter case the stream continues past the corpus for further reads.
    """
    if s < 1 or n < 1:
        raise InsufficientData("need s >= 1 and n >= 1")
    stream = source if isinstance(source, BitStream) else BitStream(source, packing)
    rows = np.empty((s, (n + 7) // 8), dtype=np.uint8)
    for i in range(s):
        rows[i] = np.packbits(stream.take(n))
    return BitCorpus(rows, n, stream.packing.width, stream.packing.bit_order)


PathLike = Union[str, os.PathLike]


def write_ascii_bits(corpus: BitCorpus, path: PathLike) -> None:
    """Write every sequence back to back, one character per bit."""
    with open(path, "wb") as fh:
        for seq in corpus:
            fh.write((seq + ord("0")).tobytes())


def write_binary_words(words: Iterable[int] | np.ndarray, path: PathLike) -> None:
    arr = np.asarray(words, dtype=np.uint64)
    if arr.size and int(arr.max()) > 0xFFFFFFFF:
        raise ValueError("binary export holds 32-bit words only")
    with open(path, "wb") as fh:
        fh.write(arr.astype("<u4").tobytes())


def read_words(path: PathLike) -> np.ndarray:
    data = open(path, "rb").read()
    if len(data) % 4:
        raise MalformedFile(path, len(data) - len(data) % 4, "truncated 32-bit word")
    return np.frombuffer(data, dtype="<u4").astype(np.uint32)


def _sniff_format(path: PathLike) -> str:
    ext = os.path.splitext(os.fspath(path))[1].lower()
    return "binary" if ext in (".bin", ".dat", ".raw") else "ascii"


def read_corpus(path: PathLike, n: int | None = None, fmt: str | None = None) -> BitCorpus:
    """Load a corpus written by :func:`write_ascii_bits` or :func:`write_binary_words`.

    The file is split into sequences of ``n`` bits (a single sequence when
    ``n`` is None). Binary words are unpacked most significant bit first.
    """
    fmt = fmt or _sniff_format(path)
    if fmt == "ascii":
        raw = np.frombuffer(open(path, "rb").read(), dtype=np.uint8)
        bad = np.flatnonzero((raw != ord("0")) & (raw != ord("1")))
        if bad.size:
            raise MalformedFile(path, int(bad[0]), f"expected '0' or '1', found {bytes(raw[bad[0]:bad[0] + 1])!r}")
        bits = raw - np.uint8(ord("0"))
        width = 1
    elif fmt == "binary":
        bits = words_to_bits(read_words(path).astype(np.uint64))
        width = 32
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if bits.size == 0:
        raise InsufficientData(f"{path}: empty file")
    n = n or bits.size
    if bits.size % n:
        raise InsufficientData(f"{path}: {bits.size} bits is not a multiple of n={n}")
    rows = bits.reshape(-1, n)
    return BitCorpus(np.stack([np.packbits(r) for r in rows]), n, width, "msb")
