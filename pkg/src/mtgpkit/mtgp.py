"""The MTGP generator: parameters, seeding, recursion, tempering and output modes.

Words are plain Python ints (bit vectors of width ``w``).  The scalar functions
here are the readable reference; :func:`generate` runs the same recursion in a
compiled loop for bulk output.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from mtgpkit.f2core import F2Matrix

MERSENNE_EXPONENTS = (
    2, 3, 5, 7, 13, 17, 19, 31, 61, 89, 107, 127, 521, 607, 1279, 2203, 2281,
    3217, 4253, 4423, 9689, 9941, 11213, 19937, 21701, 23209, 44497,
)
WORD_SIZES = (4, 8, 16, 32)
SEED_MULTIPLIER = 1812433253
FLOAT_EXPONENT = 0x3F800000


class OutputMode(enum.Enum):
    UINT = "uint"
    FLOAT12 = "float12"
    FLOAT01 = "float01"


def derive_sizes(p: int, w: int) -> tuple[int, int]:
    """N = ceil(p/w) words and r = wN - p unused low bits of x_0."""
    if w not in WORD_SIZES:
        raise ValueError(f"unsupported word size {w}")
    if p not in MERSENNE_EXPONENTS:
        raise ValueError(f"{p} is not a supported Mersenne exponent")
    if p <= 2 * w:
        raise ValueError("degenerate layout: no valid middle position")
    n = -(-p // w)
    return n, w * n - p


def bitmask(w: int, r: int) -> int:
    """w-bit word with the w - r most significant bits set."""
    if not 0 <= r <= w:
        raise ValueError("need 0 <= r <= w")
    return ((1 << w) - 1) ^ ((1 << r) - 1)


def build_table(m: F2Matrix) -> tuple[int, ...]:
    """Linear lookup table: entry i XORs row k whenever bit 3-k of i is set."""
    if m.nrows != 4:
        raise ValueError("table matrix must have 4 rows")
    table = []
    for i in range(16):
        acc = 0
        for k in range(4):
            if i >> (3 - k) & 1:
                acc ^= m.rows[k]
        table.append(acc)
    return tuple(table)


def sngl_table(tmptbl) -> tuple[int, ...]:
    """Float-formatted table: exponent bits 001111111 over the 23 MSBs of each entry."""
    return tuple(FLOAT_EXPONENT | (t >> 9) for t in tmptbl)


@dataclass(frozen=True)
class RecursionParams:
    mexp: int
    wordsize: int
    n: int
    m: int
    r: int
    sh1: int
    sh2: int
    rmat: F2Matrix
    rectbl: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n, r = derive_sizes(self.mexp, self.wordsize)
        if (self.n, self.r) != (n, r):
            raise ValueError(f"N, r must be {n}, {r} for p={self.mexp}, w={self.wordsize}")
        if not 1 < self.m < self.n:
            raise ValueError("middle position must satisfy 1 < M < N")
        if not 0 < self.sh1 < self.wordsize or not 0 <= self.sh2 < self.wordsize:
            raise ValueError("shift amounts out of range")
        if self.rmat.nrows != 4 or self.rmat.ncols != self.wordsize:
            raise ValueError("R must be a 4 x w matrix")
        object.__setattr__(self, "rectbl", build_table(self.rmat))

    @classmethod
    def create(cls, mexp, wordsize, m, sh1, sh2, rows) -> RecursionParams:
        n, r = derive_sizes(mexp, wordsize)
        return cls(mexp, wordsize, n, m, r, sh1, sh2, F2Matrix(tuple(rows), wordsize))

    @property
    def mask(self) -> int:
        return (1 << self.wordsize) - 1

    @property
    def upper_mask(self) -> int:
        return bitmask(self.wordsize, self.r)


@dataclass(frozen=True)
class TemperingParams:
    tmat: F2Matrix
    tmptbl: tuple[int, ...] = field(init=False, repr=False, compare=False)
    sngltbl: tuple[int, ...] | None = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.tmat.nrows != 4:
            raise ValueError("T must have 4 rows")
        tbl = build_table(self.tmat)
        object.__setattr__(self, "tmptbl", tbl)
        object.__setattr__(self, "sngltbl", sngl_table(tbl) if self.tmat.ncols == 32 else None)

    @classmethod
    def from_rows(cls, rows, wordsize: int) -> TemperingParams:
        return cls(F2Matrix(tuple(rows), wordsize))

    @classmethod
    def identity(cls, wordsize: int) -> TemperingParams:
        """Zero T, so tempering leaves x unchanged."""
        return cls(F2Matrix.zeros(4, wordsize))


def recursion_step(rp: RecursionParams, x_i: int, x_1i: int, x_mi: int) -> int:
    """x_{N+i} from x_i, x_{i+1} and x_{M+i}."""
    mask = rp.mask
    t = x_1i ^ (x_i & rp.upper_mask)
    t ^= (t << rp.sh1) & mask
    u = t ^ (x_mi >> rp.sh2)
    return u ^ rp.rectbl[u & 0xF]


def _tempering_index(x_m1i: int, w: int) -> int:
    t = x_m1i ^ (x_m1i >> (w // 2))
    t ^= t >> (w // 4)
    return t & 0xF


def temper(x_ni: int, x_m1i: int, tmptbl, w: int) -> int:
    return x_ni ^ tmptbl[_tempering_index(x_m1i, w)]


def temper_float(x: int, x_m1i: int, sngltbl, w: int = 32) -> int:
    """IEEE-754 single bit pattern in [1, 2)."""
    if w != 32 or sngltbl is None:
        raise ValueError("float mode requires 32-bit words")
    return (x >> 9) ^ sngltbl[_tempering_index(x_m1i, w)]


def bits_to_float(bits: int) -> float:
    return float(np.array(bits, dtype=np.uint32).view(np.float32))


class GeneratorState:
    """Ring buffer of N words and a cursor; single owner, not thread-safe."""

    __slots__ = ("params", "buf", "idx")

    def __init__(self, params: RecursionParams, buf, idx: int = 0):
        if len(buf) != params.n:
            raise ValueError(f"state needs exactly {params.n} words")
        self.params = params
        self.buf = [int(x) & params.mask for x in buf]
        self.idx = idx % params.n

    def words(self) -> list[int]:
        """x_i .. x_{i+N-1} starting at the cursor."""
        return self.buf[self.idx:] + self.buf[: self.idx]

    def significant_is_zero(self) -> bool:
        words = self.words()
        return not (words[0] & self.params.upper_mask) and not any(words[1:])

    def copy(self) -> GeneratorState:
        return GeneratorState(self.params, list(self.buf), self.idx)

    def same_state(self, other: GeneratorState) -> bool:
        a, b = self.words(), other.words()
        um = self.params.upper_mask
        return (a[0] & um) == (b[0] & um) and a[1:] == b[1:]


def seed(rp: RecursionParams, tp: TemperingParams | None, s: int) -> GeneratorState:
    """MT-style initialiser; guarantees a nonzero significant state."""
    w, mask = rp.wordsize, rp.mask
    buf = [s & mask]
    for i in range(1, rp.n):
        prev = buf[-1]
        buf.append((SEED_MULTIPLIER * (prev ^ (prev >> (w - 2))) + i) & mask)
    state = GeneratorState(rp, buf)
    if state.significant_is_zero():
        state.buf[0] |= 1 << (w - 1)
    return state


def step_raw(state: GeneratorState) -> tuple[int, int]:
    """Advance one step; return (x_{N+i}, x_{M-1+i})."""
    rp, buf, i, n = state.params, state.buf, state.idx, state.params.n
    x_m1 = buf[(i + rp.m - 1) % n]
    new = recursion_step(rp, buf[i], buf[(i + 1) % n], buf[(i + rp.m) % n])
    buf[i] = new
    state.idx = (i + 1) % n
    return new, x_m1


def next_output(state: GeneratorState, tp: TemperingParams, mode: OutputMode = OutputMode.UINT):
    x, x_m1 = step_raw(state)
    w = state.params.wordsize
    if mode is OutputMode.UINT:
        return temper(x, x_m1, tp.tmptbl, w)
    bits = temper_float(x, x_m1, tp.sngltbl, w)
    if mode is OutputMode.FLOAT12:
        return bits
    return float(np.float32(bits_to_float(bits)) - np.float32(1.0))


@njit(cache=True)
def _generate(buf, idx, n, m, w, upper, sh1, sh2, rectbl, table, float_shift, count, out):
    mask = (np.uint64(1) << np.uint64(w)) - np.uint64(1)
    hw2 = np.uint64(w // 2)
    hw4 = np.uint64(w // 4)
    s1 = np.uint64(sh1)
    s2 = np.uint64(sh2)
    fs = np.uint64(float_shift)
    nib = np.uint64(0xF)
    for k in range(count):
        i1 = idx + 1
        if i1 >= n:
            i1 -= n
        im = idx + m
        if im >= n:
            im -= n
        im1 = im - 1
        if im1 < 0:
            im1 += n
        t = buf[i1] ^ (buf[idx] & upper)
        t ^= (t << s1) & mask
        u = t ^ (buf[im] >> s2)
        x = u ^ rectbl[u & nib]
        y = buf[im1]
        buf[idx] = x
        h = y ^ (y >> hw2)
        h ^= h >> hw4
        out[k] = (x >> fs) ^ table[h & nib]
        idx = i1
    return idx


def generate(state: GeneratorState, tp: TemperingParams, count: int,
             mode: OutputMode = OutputMode.UINT) -> np.ndarray:
    """Next ``count`` outputs as uint32 (UINT, FLOAT12 bit patterns) or float32 (FLOAT01)."""
    rp = state.params
    if mode is OutputMode.UINT:
        table, shift = tp.tmptbl, 0
    else:
        if rp.wordsize != 32 or tp.sngltbl is None:
            raise ValueError("float mode requires 32-bit words")
        table, shift = tp.sngltbl, 9
    buf = np.array(state.buf, dtype=np.uint64)
    out = np.empty(count, dtype=np.uint64)
    state.idx = int(_generate(
        buf, state.idx, rp.n, rp.m, rp.wordsize, np.uint64(rp.upper_mask), rp.sh1, rp.sh2,
        np.array(rp.rectbl, dtype=np.uint64), np.array(table, dtype=np.uint64), shift, count, out,
    ))
    state.buf = [int(x) for x in buf]
    words = out.astype(np.uint32)
    if mode is OutputMode.FLOAT01:
        return words.view(np.float32) - np.float32(1.0)
    return words


def raw_bits(rp: RecursionParams, state: GeneratorState, count: int, bit: int = 0) -> np.ndarray:
    """Bit ``bit`` of the next ``count`` untempered words (state is advanced)."""
    tp = TemperingParams.identity(rp.wordsize)
    words = generate(state, tp, count)
    return ((words >> np.uint32(bit)) & np.uint32(1)).astype(np.uint8)
