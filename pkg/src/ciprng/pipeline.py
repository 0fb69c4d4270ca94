"""End-to-end runs: generate files, run the battery, scan the functional power."""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass

from ciprng.bitstream import BitStream, generate_corpus, write_ascii_bits, write_binary_words
from ciprng.config import ConfigError, RunConfig, build_source
from ciprng.stattests import DIEHARD_TESTS, BatteryReport, check_dimensions, run_battery


def _words_needed(cfg: RunConfig) -> int:
    return cfg.words if any(t in DIEHARD_TESTS for t in cfg.tests) else 0


def run_test(cfg: RunConfig, threads: int = 1) -> BatteryReport:
    """Corpus of ``s x n`` bits, then ``words`` further 32-bit words from the same stream."""
    n_words = _words_needed(cfg)
    battery = cfg.battery_config(threads)
    check_dimensions(cfg.s, cfg.n, n_words, battery)
    stream = BitStream(build_source(cfg.source), cfg.packing)
    corpus = generate_corpus(stream, cfg.s, cfg.n)
    words = stream.take_words(n_words) if n_words else None
    return run_battery(corpus, battery, words)


def with_power(cfg: RunConfig, power: int) -> RunConfig:
    if cfg.source.get("ci") != "multiple_xor":
        raise ConfigError("source.ci: a power scan needs a multiple_xor combinator")
    scanned = copy.copy(cfg)
    scanned.source = dict(cfg.source, power=power)
    return scanned


@dataclass
class ScanResult:
    table: list[tuple[int, BatteryReport]]

    @property
    def threshold(self) -> int | None:
        """Smallest power whose battery passes completely."""
        return next((m for m, rep in self.table if rep.passed), None)

    def to_dict(self) -> dict:
        return {
            "table": [{"m": m, "score": rep.score, "passed": rep.passed} for m, rep in self.table],
            "threshold": self.threshold,
            "note": "threshold on the implemented test subset; a lower bound on full-battery thresholds",
        }


def scan_power(cfg: RunConfig, m_lo: int, m_hi: int, threads: int = 1) -> ScanResult:
    if m_lo < 1 or m_hi < m_lo:
        raise ConfigError(f"scan: empty power range {m_lo}..{m_hi}")
    with_power(cfg, m_lo)
    return ScanResult([(m, run_test(with_power(cfg, m), threads)) for m in range(m_lo, m_hi + 1)])


def generate_files(cfg: RunConfig, fmt: str, out_dir: str) -> list[str]:
    """Write the corpus (ASCII, one file per sequence) or the word stream (binary) plus a manifest."""
    os.makedirs(out_dir, exist_ok=True)
    stream = BitStream(build_source(cfg.source), cfg.packing)
    files = []
    if fmt == "ascii":
        corpus = generate_corpus(stream, cfg.s, cfg.n)
        for i in range(corpus.s):
            name = f"seq_{i:03d}.txt"
            write_ascii_bits(corpus.select(i), os.path.join(out_dir, name))
            files.append(name)
    elif fmt == "binary":
        name = "words.bin"
        write_binary_words(stream.take_words(cfg.words), os.path.join(out_dir, name))
        files.append(name)
    else:
        raise ConfigError(f"format: unknown format {fmt!r}")
    manifest = {
        "source": cfg.source,
        "packing": cfg.packing.to_dict(),
        "format": fmt,
        "s": cfg.s if fmt == "ascii" else None,
        "n": cfg.n if fmt == "ascii" else None,
        "words": cfg.words if fmt == "binary" else None,
        "files": files,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
    return files
