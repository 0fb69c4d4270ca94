"""JSON run configuration: validation and construction of sources.

A source node is either a generator::

    {"family": "lcg", "a": 16807, "c": 0, "m": 2147483647, "seed": [1]}

or a combinator::

    {"ci": "old", "prng1": {...}, "prng2": {...}}

Omitted generator parameters take the family defaults. Generator nodes without
a ``seed`` get ``[base + i]`` where ``i`` is their depth-first position in the
tree and ``base`` is 1 unless overridden.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

import jsonschema

from ciprng import combinators as ci
from ciprng.bitstream import PackingSpec
from ciprng.generators import DEFAULTS, Family, Generator, GeneratorSpec, GeneratorState, InvalidSpec, seed
from ciprng.stattests import ALL_TESTS, DIEHARD_WORDS, BatteryConfig


class ConfigError(ValueError):
    """The configuration is malformed; the message names the offending field."""


def load_schema(name: str) -> dict:
    return json.loads(resources.files("ciprng").joinpath(f"schemas/{name}.schema.json").read_text())


_SCHEMA = load_schema("config")


def _where(error: jsonschema.ValidationError) -> str:
    return ".".join(str(p) for p in error.absolute_path) or "<root>"


def validate(raw: dict) -> None:
    validator = jsonschema.Draft202012Validator(_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: (len(e.absolute_path), e.message))
    if not errors:
        return
    # oneOf failures hide the useful message one level down
    err = errors[-1]
    while err.context:
        err = max(err.context, key=lambda e: len(e.absolute_path))
    raise ConfigError(f"{_where(err)}: {err.message}")


@dataclass
class RunConfig:
    source: dict
    packing: PackingSpec = field(default_factory=PackingSpec)
    s: int = 100
    n: int = 1_000_000
    words: int = DIEHARD_WORDS
    tests: tuple[str, ...] = ALL_TESTS
    block_len: int = 128
    out_dir: str | None = None
    out_format: str = "ascii"
    scan: tuple[int, int] | None = None

    @classmethod
    def from_dict(cls, raw: dict, seed_override: int | None = None) -> "RunConfig":
        validate(raw)
        source = assign_seeds(raw["source"], 1 if seed_override is None else seed_override,
                              force=seed_override is not None)
        battery = raw.get("battery", {})
        output = raw.get("output", {})
        scan = raw.get("scan")
        try:
            packing = PackingSpec(**raw.get("packing", {}))
        except ValueError as exc:
            raise ConfigError(f"packing: {exc}") from None
        cfg = cls(
            source=source,
            packing=packing,
            s=battery.get("s", 100),
            n=battery.get("n", 1_000_000),
            words=battery.get("words", DIEHARD_WORDS),
            tests=tuple(battery.get("tests", ALL_TESTS)),
            block_len=battery.get("block_len", 128),
            out_dir=output.get("dir"),
            out_format=output.get("format", "ascii"),
            scan=(scan["m_lo"], scan["m_hi"]) if scan else None,
        )
        build_source(cfg.source)  # surface parameter errors before any generation
        return cfg

    @classmethod
    def from_file(cls, path, seed_override: int | None = None) -> "RunConfig":
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("<root>: configuration must be a JSON object")
        return cls.from_dict(raw, seed_override)

    def battery_config(self, threads: int = 1) -> BatteryConfig:
        return BatteryConfig(tests=self.tests, block_len=self.block_len, threads=threads)


def assign_seeds(node: dict, base: int, force: bool = False) -> dict:
    """Copy of ``node`` where every generator carries an explicit seed."""
    node = copy.deepcopy(node)
    counter = [0]

    def visit(nd):
        if "ci" in nd:
            for key in ("prng1", "prng2"):
                if key in nd:
                    visit(nd[key])
            return
        if force or "seed" not in nd:
            nd["seed"] = [base + counter[0]]
        counter[0] += 1
        for comp in nd.get("components", ()):
            visit(comp)

    visit(node)
    return node


def _as_tuple(value) -> tuple[int, ...]:
    return tuple(value) if isinstance(value, list) else (value,)


def generator_spec(node: dict, path: str = "source") -> GeneratorSpec:
    family = node["family"]
    if family in ("2lcg", "3lcg", "2mrg"):
        extra = set(node) - {"family", "seed"}
        if extra:
            raise ConfigError(f"{path}: preset {family!r} takes no parameters ({', '.join(sorted(extra))})")
        return DEFAULTS[family]
    if family == "combined":
        if "components" not in node:
            raise ConfigError(f"{path}.components: combined generator needs components")
        comps = tuple(generator_spec(c, f"{path}.components.{i}") for i, c in enumerate(node["components"]))
        return GeneratorSpec(Family.COMBINED, components=comps)
    if "components" in node:
        raise ConfigError(f"{path}.components: only combined generators have components")
    base = DEFAULTS[family]
    params = {key: node[key] for key in ("m", "c", "r", "s", "k", "w") if key in node}
    if "a" in node:
        params["a"] = _as_tuple(node["a"])
    try:
        return GeneratorSpec(
            family=base.family,
            m=params.get("m", base.m),
            a=params.get("a", base.a),
            c=params.get("c", base.c),
            r=params.get("r", base.r),
            s=params.get("s", base.s),
            k=params.get("k", base.k),
            w=params.get("w", base.w),
        )
    except InvalidSpec as exc:
        raise ConfigError(f"{path}: {exc}") from None


def build_generator(node: dict, path: str = "source") -> Generator:
    spec = generator_spec(node, path)
    try:
        if spec.family is Family.COMBINED and "components" in node:
            state = GeneratorState(components=tuple(
                seed(sub, _as_tuple(comp.get("seed", 1))) for sub, comp in zip(spec.components, node["components"])
            ))
        else:
            state = seed(spec, _as_tuple(node.get("seed", 1)))
    except ValueError as exc:
        raise ConfigError(f"{path}.seed: {exc}") from None
    return Generator(spec, state)


def build_source(node: dict, path: str = "source") -> Any:
    """Instantiate the generator or combinator tree described by ``node``."""
    if "ci" not in node:
        return build_generator(node, path)
    kind = node["ci"]
    x0 = node.get("x0", 0)
    p1 = build_source(node["prng1"], f"{path}.prng1")
    needs_two = kind in ("old", "new", "mixed_xor")
    if needs_two and "prng2" not in node:
        raise ConfigError(f"{path}.prng2: {kind!r} combinator needs two generators")
    if not needs_two and "prng2" in node:
        raise ConfigError(f"{path}.prng2: {kind!r} combinator takes a single generator")
    if "power" in node and kind != "multiple_xor":
        raise ConfigError(f"{path}.power: only multiple_xor has a functional power")
    p2 = build_source(node["prng2"], f"{path}.prng2") if needs_two else None
    try:
        if kind == "old":
            return ci.OldCI(p1, p2, x0)
        if kind == "new":
            return ci.NewCI(p1, p2, x0)
        if kind == "xor":
            return ci.XorCI(p1, x0)
        if kind == "mixed_xor":
            return ci.MixedXorCI(p1, p2, x0)
        return ci.MultipleXorCI(p1, node.get("power", 1), x0)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
