"""Classical generator recurrences: LCG, MRG, AWC, SWB, SWC, GFSR, INV and xor-combinations.

Every family is described by an immutable :class:`GeneratorSpec` and advanced by
:func:`step`, a pure-Python reference over an explicit :class:`GeneratorState`.
:class:`Generator` wraps the same recurrences in compiled kernels for bulk output;
the two paths produce identical streams.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1
MINSTD_MODULUS = (1 << 31) - 1


class AllZeroSeed(ValueError):
    """Seed material reduces to the absorbing all-zero state."""


class InvalidSpec(ValueError):
    """Generator parameters violate the family's constraints."""


class Family(str, enum.Enum):
    LCG = "lcg"
    MRG = "mrg"
    AWC = "awc"
    SWB = "swb"
    SWC = "swc"
    GFSR = "gfsr"
    INV = "inv"
    COMBINED = "combined"


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of one generator.

    ``a`` holds the multipliers in the order of the recurrence (``a[0]`` applies to
    the most recent term). Lags ``r``/``s`` are used by AWC and SWB, ``r``/``k`` by
    GFSR; SWC uses ``len(a)`` as its order and ``w`` as its word width.
    """

    family: Family
    m: int = 0
    a: tuple[int, ...] = ()
    c: int = 0
    r: int = 0
    s: int = 0
    k: int = 0
    w: int = 32
    components: tuple["GeneratorSpec", ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "a", tuple(int(v) for v in self.a))
        object.__setattr__(self, "components", tuple(self.components))
        self._validate()

    def _validate(self) -> None:
        fam = self.family
        if fam is Family.COMBINED:
            if len(self.components) not in (2, 3):
                raise InvalidSpec("combined generator needs 2 or 3 components")
            return
        if fam in (Family.SWC, Family.GFSR):
            if not 1 <= self.w <= 64:
                raise InvalidSpec(f"word width w={self.w} outside [1, 64]")
        elif self.m < 2:
            raise InvalidSpec(f"modulus m={self.m} must be at least 2")
        if self.m > 1 << 64:
            raise InvalidSpec("moduli beyond 64 bits are not supported")

        if fam is Family.LCG:
            if len(self.a) != 1 or not 0 < self.a[0] < self.m:
                raise InvalidSpec("LCG needs one multiplier 0 < a < m")
            if not 0 <= self.c < self.m:
                raise InvalidSpec("LCG increment must satisfy 0 <= c < m")
        elif fam is Family.MRG:
            if not self.a or any(not 0 <= v < self.m for v in self.a) or self.a[-1] == 0:
                raise InvalidSpec("MRG needs 0 <= a^i < m with a^k != 0")
        elif fam in (Family.AWC, Family.SWB):
            if not self.r > self.s >= 1:
                raise InvalidSpec(f"lags must satisfy r > s >= 1, got r={self.r}, s={self.s}")
        elif fam is Family.SWC:
            if not self.a or any(v <= 0 for v in self.a):
                raise InvalidSpec("SWC needs positive multipliers")
        elif fam is Family.GFSR:
            if not self.r > self.k >= 1:
                raise InvalidSpec(f"lags must satisfy r > k >= 1, got r={self.r}, k={self.k}")
        elif fam is Family.INV:
            if len(self.a) != 2 or any(not 0 < v < self.m for v in self.a):
                raise InvalidSpec("INV needs two multipliers 0 < a < m")
            if not _is_prime(self.m):
                raise InvalidSpec(f"INV modulus {self.m} is not prime")

    @property
    def lag(self) -> int:
        """Length of the history buffer the recurrence reads."""
        fam = self.family
        if fam in (Family.LCG, Family.INV):
            return 1
        if fam in (Family.MRG, Family.SWC):
            return len(self.a)
        if fam is Family.COMBINED:
            return 0
        return self.r

    @property
    def output_range(self) -> int:
        """Outputs lie in ``[0, output_range)``."""
        if self.family in (Family.SWC, Family.GFSR):
            return 1 << self.w
        if self.family is Family.COMBINED:
            return 1 << self.width
        return self.m

    @property
    def width(self) -> int:
        """Bits needed to hold any output."""
        if self.family is Family.COMBINED:
            return max(c.width for c in self.components)
        return (self.output_range - 1).bit_length()

    @property
    def absorbing_zero(self) -> bool:
        if self.family is Family.LCG:
            return self.c == 0
        return self.family in (Family.MRG, Family.AWC, Family.SWB, Family.SWC, Family.GFSR)


@dataclass(frozen=True)
class GeneratorState:
    """History buffer (oldest first), carry, and component states for COMBINED.

    For INV the single buffered value is the inverse-chain term ``z``.
    """

    buffer: tuple[int, ...] = ()
    carry: int = 0
    components: tuple["GeneratorState", ...] = field(default=())


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
    for p in small:
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    # deterministic for n < 3.3e24
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def _expand(material: Sequence[int], count: int) -> list[int]:
    """Use the material directly when long enough, else extend it with splitmix64."""
    values = [int(v) for v in material[:count]]
    if len(values) == count:
        return values
    state = len(material)
    for v in material:
        state, _ = _splitmix64(state ^ (int(v) & MASK64))
    while len(values) < count:
        state, z = _splitmix64(state)
        values.append(z)
    return values


def seed(spec: GeneratorSpec, seed_material: Sequence[int]) -> GeneratorState:
    """Build the initial state from integer seed material.

    Values are reduced element-wise modulo the output range to fill the history
    buffer; short material is extended deterministically. The carry starts at 0.
    COMBINED component ``i`` is seeded with every material value plus ``i``.
    """
    material = [int(v) for v in seed_material]
    if not material:
        raise ValueError("seed material must be non-empty")
    if spec.family is Family.COMBINED:
        return GeneratorState(
            components=tuple(seed(sub, [v + i for v in material]) for i, sub in enumerate(spec.components))
        )
    modulus = spec.output_range
    if spec.absorbing_zero and all(v % modulus == 0 for v in material):
        raise AllZeroSeed(f"{spec.family.value}: all-zero seed is a fixed point")
    buffer = tuple(v % modulus for v in _expand(material, spec.lag))
    if spec.absorbing_zero and not any(buffer):
        raise AllZeroSeed(f"{spec.family.value}: all-zero seed is a fixed point")
    return GeneratorState(buffer=buffer)


def _inverse(z: int, m: int) -> int:
    return pow(z, m - 2, m)


def step(spec: GeneratorSpec, state: GeneratorState) -> tuple[GeneratorState, int]:
    """Apply the recurrence once; return the advanced state and the new output."""
    fam = spec.family
    if fam is Family.COMBINED:
        subs = []
        out = 0
        for sub_spec, sub_state in zip(spec.components, state.components):
            sub_state, y = step(sub_spec, sub_state)
            subs.append(sub_state)
            out ^= y
        return replace(state, components=tuple(subs)), out

    buf = state.buffer
    carry = state.carry
    if fam is Family.LCG:
        x = (spec.a[0] * buf[-1] + spec.c) % spec.m
    elif fam is Family.MRG:
        x = sum(a * buf[-1 - i] for i, a in enumerate(spec.a)) % spec.m
    elif fam is Family.AWC:
        t = buf[-spec.r] + buf[-spec.s] + carry
        x, carry = t % spec.m, t // spec.m
    elif fam is Family.SWB:
        t = buf[-spec.r] - buf[-spec.s] - carry
        x, carry = t % spec.m, int(t < 0)
    elif fam is Family.SWC:
        t = carry
        for i, a in enumerate(spec.a):
            t ^= a * buf[-1 - i]
        x, carry = t & ((1 << spec.w) - 1), t >> spec.w
    elif fam is Family.GFSR:
        x = buf[-spec.r] ^ buf[-spec.k]
    elif fam is Family.INV:
        z = buf[-1]
        a1, a2 = spec.a
        x = a1 % spec.m if z == 0 else (a1 + a2 * _inverse(z, spec.m)) % spec.m
    else:  # pragma: no cover
        raise InvalidSpec(f"unknown family {fam}")
    return GeneratorState(buffer=buf[1:] + (x,), carry=carry), x


# ---------------------------------------------------------------------------
# compiled bulk kernels; ring[pos] is always the oldest buffered term
# ---------------------------------------------------------------------------


@njit(cache=True)
def _lcg_fill(ring, a, c, m, out):
    x = ring[0]
    for i in range(out.size):
        x = (a * x + c) % m
        out[i] = x
    ring[0] = x


@njit(cache=True)
def _mrg_fill(ring, pos_box, coeffs, m, out):
    n = ring.size
    pos = pos_box[0]
    for i in range(out.size):
        acc = np.uint64(0)
        for j in range(coeffs.size):
            acc = (acc + (coeffs[j] * ring[(pos + n - 1 - j) % n]) % m) % m
        ring[pos] = acc
        pos = (pos + 1) % n
        out[i] = acc
    pos_box[0] = pos


@njit(cache=True)
def _awc_fill(ring, pos_box, carry_box, s, m, out):
    n = ring.size
    pos = pos_box[0]
    carry = carry_box[0]
    for i in range(out.size):
        t = ring[pos] + ring[(pos + n - s) % n] + carry
        x = t % m
        carry = t // m
        ring[pos] = x
        pos = (pos + 1) % n
        out[i] = x
    pos_box[0] = pos
    carry_box[0] = carry


@njit(cache=True)
def _swb_fill(ring, pos_box, carry_box, s, m, out):
    n = ring.size
    pos = pos_box[0]
    carry = np.int64(carry_box[0])
    mm = np.int64(m)
    for i in range(out.size):
        t = np.int64(ring[pos]) - np.int64(ring[(pos + n - s) % n]) - carry
        if t < 0:
            t += mm
            carry = 1
        else:
            carry = 0
        x = np.uint64(t)
        ring[pos] = x
        pos = (pos + 1) % n
        out[i] = x
    pos_box[0] = pos
    carry_box[0] = np.uint64(carry)


@njit(cache=True)
def _swc_fill(ring, pos_box, carry_box, coeffs, w, out):
    n = ring.size
    pos = pos_box[0]
    carry = carry_box[0]
    mask = (np.uint64(1) << w) - np.uint64(1)
    for i in range(out.size):
        t = carry
        for j in range(coeffs.size):
            t ^= coeffs[j] * ring[(pos + n - 1 - j) % n]
        x = t & mask
        carry = t >> w
        ring[pos] = x
        pos = (pos + 1) % n
        out[i] = x
    pos_box[0] = pos
    carry_box[0] = carry


@njit(cache=True)
def _gfsr_fill(ring, pos_box, k, out):
    n = ring.size
    pos = pos_box[0]
    for i in range(out.size):
        x = ring[pos] ^ ring[(pos + n - k) % n]
        ring[pos] = x
        pos = (pos + 1) % n
        out[i] = x
    pos_box[0] = pos


@njit(cache=True)
def _powmod(base, exp, m):
    result = np.uint64(1)
    base = base % m
    while exp > 0:
        if exp & np.uint64(1):
            result = (result * base) % m
        base = (base * base) % m
        exp >>= np.uint64(1)
    return result


@njit(cache=True)
def _inv_fill(ring, a1, a2, m, out):
    z = ring[0]
    e = m - np.uint64(2)
    for i in range(out.size):
        if z == 0:
            z = a1 % m
        else:
            z = (a1 + (a2 * _powmod(z, e, m)) % m) % m
        out[i] = z
    ring[0] = z


_FAST_LIMIT = 1 << 32


def _fast_path_ok(spec: GeneratorSpec) -> bool:
    """uint64 kernels are exact when every product of two operands fits in 64 bits."""
    if spec.family is Family.GFSR:
        return True
    if spec.family is Family.SWC:
        return spec.w <= 32 and all(v < _FAST_LIMIT for v in spec.a)
    return spec.m <= _FAST_LIMIT and all(v < _FAST_LIMIT for v in spec.a) and spec.c < _FAST_LIMIT


class Generator:
    """Stateful handle producing a generator's output stream.

    ``next()`` returns one output, ``generate(count)`` a ``uint64`` array; both
    continue the same stream.
    """

    def __init__(self, spec: GeneratorSpec, state: GeneratorState):
        self.spec = spec
        if spec.family is Family.COMBINED:
            self._subs = [Generator(s, st) for s, st in zip(spec.components, state.components)]
            return
        self._fast = _fast_path_ok(spec)
        if not self._fast:
            self._state = state
            return
        self._ring = np.array(state.buffer, dtype=np.uint64)
        self._pos = np.zeros(1, dtype=np.int64)
        self._carry = np.array([state.carry], dtype=np.uint64)

    @classmethod
    def from_seed(cls, spec: GeneratorSpec, seed_material: Sequence[int]) -> "Generator":
        return cls(spec, seed(spec, seed_material))

    @property
    def width(self) -> int:
        return self.spec.width

    @property
    def output_range(self) -> int:
        return self.spec.output_range

    def state(self) -> GeneratorState:
        """Snapshot of the current state in reference (oldest-first) form."""
        if self.spec.family is Family.COMBINED:
            return GeneratorState(components=tuple(g.state() for g in self._subs))
        if not self._fast:
            return self._state
        pos = int(self._pos[0])
        ring = [int(v) for v in self._ring]
        return GeneratorState(buffer=tuple(ring[pos:] + ring[:pos]), carry=int(self._carry[0]))

    def next(self) -> int:
        return int(self.generate(1)[0])

    def generate(self, count: int) -> np.ndarray:
        out = np.empty(count, dtype=np.uint64)
        if count == 0:
            return out
        spec = self.spec
        fam = spec.family
        if fam is Family.COMBINED:
            out[:] = self._subs[0].generate(count)
            for sub in self._subs[1:]:
                out ^= sub.generate(count)
            return out
        if not self._fast:
            state = self._state
            for i in range(count):
                state, out[i] = step(spec, state)
            self._state = state
            return out

        u = np.uint64
        if fam is Family.LCG:
            _lcg_fill(self._ring, u(spec.a[0]), u(spec.c), u(spec.m), out)
        elif fam is Family.MRG:
            _mrg_fill(self._ring, self._pos, np.array(spec.a, dtype=np.uint64), u(spec.m), out)
        elif fam is Family.AWC:
            _awc_fill(self._ring, self._pos, self._carry, spec.s, u(spec.m), out)
        elif fam is Family.SWB:
            _swb_fill(self._ring, self._pos, self._carry, spec.s, u(spec.m), out)
        elif fam is Family.SWC:
            _swc_fill(self._ring, self._pos, self._carry, np.array(spec.a, dtype=np.uint64), u(spec.w), out)
        elif fam is Family.GFSR:
            _gfsr_fill(self._ring, self._pos, spec.k, out)
        elif fam is Family.INV:
            _inv_fill(self._ring, u(spec.a[0]), u(spec.a[1]), u(spec.m), out)
        return out


# ---------------------------------------------------------------------------
# default parameter sets
# ---------------------------------------------------------------------------

#: MINSTD; outputs are 31-bit.
LCG_MINSTD = GeneratorSpec(Family.LCG, m=MINSTD_MODULUS, a=(16807,), c=0)
LCG_48271 = GeneratorSpec(Family.LCG, m=MINSTD_MODULUS, a=(48271,), c=0)
LCG_69621 = GeneratorSpec(Family.LCG, m=MINSTD_MODULUS, a=(69621,), c=0)
#: order-5 MRG of L'Ecuyer, Blouin and Couture (1993).
MRG_ORDER5 = GeneratorSpec(Family.MRG, m=MINSTD_MODULUS, a=(107374182, 0, 0, 0, 104480))
#: first component of MRG31k3p.
MRG_31K3P_1 = GeneratorSpec(Family.MRG, m=MINSTD_MODULUS, a=(0, 1 << 22, (1 << 7) + 1))
AWC_24_10 = GeneratorSpec(Family.AWC, m=1 << 32, r=24, s=10)
SWB_24_10 = GeneratorSpec(Family.SWB, m=1 << 32, r=24, s=10)
SWC_W32 = GeneratorSpec(Family.SWC, a=(1664525, 22695477), w=32)
#: R250.
GFSR_R250 = GeneratorSpec(Family.GFSR, r=250, k=103, w=32)
INV_DEFAULT = GeneratorSpec(Family.INV, m=MINSTD_MODULUS, a=(1, 1))

DEFAULTS: dict[str, GeneratorSpec] = {
    "lcg": LCG_MINSTD,
    "mrg": MRG_ORDER5,
    "awc": AWC_24_10,
    "swb": SWB_24_10,
    "swc": SWC_W32,
    "gfsr": GFSR_R250,
    "inv": INV_DEFAULT,
    "2lcg": GeneratorSpec(Family.COMBINED, components=(LCG_MINSTD, LCG_48271)),
    "3lcg": GeneratorSpec(Family.COMBINED, components=(LCG_MINSTD, LCG_48271, LCG_69621)),
    "2mrg": GeneratorSpec(Family.COMBINED, components=(MRG_ORDER5, MRG_31K3P_1)),
}


def default_spec(name: str) -> GeneratorSpec:
    """Default parameters for a family name or one of ``2lcg``, ``3lcg``, ``2mrg``."""
    try:
        return DEFAULTS[name.lower()]
    except KeyError:
        raise InvalidSpec(f"unknown generator {name!r}") from None
