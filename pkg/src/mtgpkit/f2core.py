"""Linear algebra over GF(2): polynomials, bit matrices, Berlekamp-Massey.

Polynomials are stored as Python ints with bit ``d`` holding the coefficient
of ``x**d``.  Small inputs run on plain ints; large-degree Frobenius powers and
long Berlekamp-Massey runs are delegated to the packed kernels in
:mod:`mtgpkit._kernels`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from mtgpkit import _kernels

NEG_INF = float("-inf")

# Above these sizes the packed kernels are used.
_FAST_DEGREE = 192
_FAST_BM_LENGTH = 1024
_SIEVE_MAX_DEGREE = 16
_FROBENIUS_GCD_LIMIT = 96


@dataclass(frozen=True)
class F2Poly:
    """Polynomial over GF(2); ``bits`` holds coefficient ``d`` at bit ``d``."""

    bits: int = 0

    def __post_init__(self):
        if self.bits < 0:
            raise ValueError("coefficient bit-vector must be non-negative")

    @classmethod
    def from_exponents(cls, exponents: Iterable[int]) -> F2Poly:
        bits = 0
        for e in exponents:
            bits ^= 1 << e
        return cls(bits)

    @classmethod
    def from_hex(cls, text: str) -> F2Poly:
        return cls(int(text, 16))

    @property
    def degree(self):
        """Degree, or ``NEG_INF`` for the zero polynomial."""
        return self.bits.bit_length() - 1 if self.bits else NEG_INF

    def is_zero(self) -> bool:
        return self.bits == 0

    def nonzero_terms(self) -> int:
        return bin(self.bits).count("1")

    def exponents(self) -> list[int]:
        return [d for d in range(self.bits.bit_length()) if self.bits >> d & 1]

    def to_hex(self) -> str:
        """Lowercase hex, least significant digit = coefficients of x^0..x^3."""
        if not self.bits:
            return "0"
        ndigits = -(-(self.degree + 1) // 4)
        return format(self.bits, f"0{ndigits}x")

    def to_bytes(self) -> bytes:
        """Little-endian packing: bit 0 of byte 0 is the constant term."""
        nbytes = max(1, -(-(self.bits.bit_length()) // 8))
        return self.bits.to_bytes(nbytes, "little")

    def __add__(self, other: F2Poly) -> F2Poly:
        return F2Poly(self.bits ^ other.bits)

    __sub__ = __add__

    def __mul__(self, other: F2Poly) -> F2Poly:
        return F2Poly(clmul(self.bits, other.bits))

    def __mod__(self, other: F2Poly) -> F2Poly:
        if not other.bits:
            raise ZeroDivisionError("zero modulus")
        return F2Poly(_mod(self.bits, other.bits))

    def __divmod__(self, other: F2Poly) -> tuple[F2Poly, F2Poly]:
        if not other.bits:
            raise ZeroDivisionError("zero modulus")
        q, r = _divmod(self.bits, other.bits)
        return F2Poly(q), F2Poly(r)

    def __call__(self, x: int) -> int:
        """Evaluate at x in GF(2)."""
        if x & 1:
            return self.nonzero_terms() & 1
        return self.bits & 1

    def __str__(self) -> str:
        if not self.bits:
            return "0"
        terms = []
        for d in reversed(self.exponents()):
            terms.append("1" if d == 0 else "x" if d == 1 else f"x^{d}")
        return "+".join(terms)


def clmul(a: int, b: int) -> int:
    """Carry-less product of two coefficient bit-vectors."""
    if a.bit_length() > b.bit_length():
        a, b = b, a
    out = 0
    while a:
        low = a & -a
        out ^= b << (low.bit_length() - 1)
        a ^= low
    return out


def _mod(a: int, f: int) -> int:
    df = f.bit_length() - 1
    da = a.bit_length() - 1
    while da >= df:
        a ^= f << (da - df)
        da = a.bit_length() - 1
    return a


def _divmod(a: int, f: int) -> tuple[int, int]:
    df = f.bit_length() - 1
    q = 0
    da = a.bit_length() - 1
    while da >= df:
        q ^= 1 << (da - df)
        a ^= f << (da - df)
        da = a.bit_length() - 1
    return q, a


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, _mod(a, b)
    return a


def poly_gcd(a: F2Poly, b: F2Poly) -> F2Poly:
    return F2Poly(_gcd(a.bits, b.bits))


def poly_mulmod(a: F2Poly, b: F2Poly, f: F2Poly) -> F2Poly:
    """a*b mod f."""
    if not f.bits:
        raise ValueError("zero modulus")
    return F2Poly(_mod(clmul(_mod(a.bits, f.bits), _mod(b.bits, f.bits)), f.bits))


def _square(a: int) -> int:
    # Interleave zeros between the bits: squaring is linear over GF(2).
    s = format(a, "b")
    return int("0".join(s), 2) if a else 0


def frobenius_power(f: F2Poly, k: int) -> F2Poly:
    """x**(2**k) mod f."""
    if f.degree is NEG_INF or f.degree < 1:
        raise ValueError("degree must be >= 1")
    fb = f.bits
    a = _mod(2, fb)
    for _ in range(k):
        a = _mod(_square(a), fb)
    return F2Poly(a)


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def is_irreducible(f: F2Poly) -> bool:
    """Rabin's test: x^(2^n) = x mod f and gcd(x^(2^(n/q)) - x, f) = 1 for primes q | n."""
    if f.degree is NEG_INF or f.degree < 1:
        raise ValueError("degree must be >= 1")
    n = f.degree
    if n == 1:
        return True
    if not f.bits & 1 or not f.nonzero_terms() & 1:
        return False
    if n >= _FAST_DEGREE:
        return _is_irreducible_packed(f.bits, n)
    fb = f.bits
    checkpoints = {n // q for q in _prime_factors(n)}
    a = 2
    for k in range(1, n + 1):
        a = _mod(_square(a), fb)
        if k in checkpoints and _gcd(fb, a ^ 2) != 1:
            return False
    return a == 2


@lru_cache(maxsize=None)
def _sieve_moduli(max_degree: int):
    """Products of the irreducibles of degree 1..max_degree, each of degree <= 56."""
    products, degrees = [], []
    cur, dcur = 1, 0
    for g in _kernels.small_irreducibles(max_degree).tolist():
        dg = g.bit_length() - 1
        if dcur + dg > 56:
            products.append(cur)
            degrees.append(dcur)
            cur, dcur = 1, 0
        cur = clmul(cur, g)
        dcur += dg
    if dcur:
        products.append(cur)
        degrees.append(dcur)
    mods = np.array(products, dtype=np.uint64)
    degs = np.array(degrees, dtype=np.int64)
    return mods, degs, _kernels.byte_tables(mods, degs)


def has_small_factor(f: F2Poly, max_degree: int = _SIEVE_MAX_DEGREE) -> bool:
    """True if f has an irreducible factor of degree <= max_degree."""
    nbytes = max(1, -(-f.bits.bit_length() // 8))
    fbytes = np.frombuffer(f.bits.to_bytes(nbytes, "big"), dtype=np.uint8)
    return bool(_kernels.has_small_factor(fbytes, *_sieve_moduli(max_degree)))


def _is_irreducible_packed(fb: int, n: int) -> bool:
    nw = n // 64 + 1
    fw = _kernels.to_words(fb, nw)
    if n > 2 * _SIEVE_MAX_DEGREE and has_small_factor(F2Poly(fb)):
        return False
    table = _kernels.reduction_table(fw, n)
    checkpoints = {n // q for q in _prime_factors(n)}
    x = np.zeros(nw, np.uint64)
    x[0] = 2
    a = x.copy()
    for k in range(1, n + 1):
        a = _kernels.sqr_mod(a, table, n)
        check = k in checkpoints or (_SIEVE_MAX_DEGREE < k <= _FROBENIUS_GCD_LIMIT and k < n)
        if check:
            diff = a ^ x
            if _kernels.gcd_degree(fw, diff) != 0:
                return False
    return bool(np.array_equal(a, x))


def minimal_polynomial(s: Sequence[int]) -> F2Poly:
    """Minimal polynomial (monic, degree = linear complexity) of a bit sequence.

    Uses Berlekamp-Massey; the result m satisfies
    sum_i m_i * s[n + i] = 0 for every window that fits in ``s``.
    """
    seq = np.asarray(s, dtype=np.uint8)
    if seq.size == 0:
        return F2Poly(1)
    if seq.size >= _FAST_BM_LENGTH:
        cw, L = _kernels.berlekamp_massey(seq)
        conn = _kernels.from_words(cw)
    else:
        conn, L = _berlekamp_massey(seq.tolist())
    return F2Poly(_reverse_bits(conn, L + 1))


def _berlekamp_massey(seq: list[int]) -> tuple[int, int]:
    c, b = 1, 1
    L, m = 0, 1
    window = 0  # bit k = seq[i - k]
    for i, bit in enumerate(seq):
        window = (window << 1) | bit
        if bin(c & window).count("1") & 1:
            if 2 * L <= i:
                c, b = c ^ (b << m), c
                L, m = i + 1 - L, 1
            else:
                c ^= b << m
                m += 1
        else:
            m += 1
    return c, L


def _reverse_bits(value: int, width: int) -> int:
    s = format(value, f"0{width}b")
    return int(s[::-1], 2)


@dataclass(frozen=True)
class F2Matrix:
    """Dense bit matrix; row ``i`` is an int whose bit ``j`` is entry (i, j)."""

    rows: tuple[int, ...]
    ncols: int

    def __post_init__(self):
        if self.ncols < 0:
            raise ValueError("column count must be non-negative")
        limit = 1 << self.ncols
        for row in self.rows:
            if row < 0 or row >= limit:
                raise ValueError("row has bits outside the column range")

    @classmethod
    def from_lists(cls, entries: Sequence[Sequence[int]]) -> F2Matrix:
        ncols = len(entries[0]) if entries else 0
        rows = tuple(sum((bit & 1) << j for j, bit in enumerate(r)) for r in entries)
        return cls(rows, ncols)

    @classmethod
    def identity(cls, n: int) -> F2Matrix:
        return cls(tuple(1 << i for i in range(n)), n)

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> F2Matrix:
        return cls((0,) * nrows, ncols)

    @property
    def nrows(self) -> int:
        return len(self.rows)

    def entry(self, i: int, j: int) -> int:
        return self.rows[i] >> j & 1

    def __add__(self, other: F2Matrix) -> F2Matrix:
        if (self.nrows, self.ncols) != (other.nrows, other.ncols):
            raise ValueError("shape mismatch")
        return F2Matrix(tuple(a ^ b for a, b in zip(self.rows, other.rows)), self.ncols)

    def apply(self, vector: int) -> int:
        """Row vector times matrix: XOR of the rows selected by ``vector``'s bits."""
        out = 0
        for i, row in enumerate(self.rows):
            if vector >> i & 1:
                out ^= row
        return out

    def rank(self) -> int:
        return rank(self)


def rank(m: F2Matrix) -> int:
    """Rank over GF(2) by elimination on the row ints."""
    pivots: dict[int, int] = {}
    for row in m.rows:
        while row:
            top = row.bit_length() - 1
            basis = pivots.get(top)
            if basis is None:
                pivots[top] = row
                break
            row ^= basis
    return len(pivots)


class EchelonBasis:
    """Incrementally maintained row-echelon basis keyed by leading bit."""

    __slots__ = ("pivots",)

    def __init__(self):
        self.pivots: dict[int, int] = {}

    def __len__(self) -> int:
        return len(self.pivots)

    def insert(self, row: int) -> bool:
        """Add ``row``; return False if it was already in the span."""
        pivots = self.pivots
        while row:
            top = row.bit_length() - 1
            basis = pivots.get(top)
            if basis is None:
                pivots[top] = row
                return True
            row ^= basis
        return False


def annihilates(f: F2Poly, s: Sequence[int]) -> bool:
    """True if the recurrence with characteristic polynomial f holds along s."""
    if f.is_zero():
        return False
    d = f.degree
    exps = f.exponents()
    return all(
        not sum(s[n + e] for e in exps) & 1 for n in range(len(s) - d)
    )


def trial_division_irreducible(f: F2Poly) -> bool:
    """Exhaustive reference test: no divisor of degree 1..deg/2."""
    n = f.degree
    if n is NEG_INF or n < 1:
        raise ValueError("degree must be >= 1")
    for g in range(2, 1 << (n // 2 + 1)):
        if _mod(f.bits, g) == 0:
            return False
    return True


def gf2_det_nonzero(m: F2Matrix) -> bool:
    return m.nrows == m.ncols and rank(m) == m.nrows


def log2_floor_pow2(n: int) -> int:
    """Largest power of two not exceeding n (n >= 1)."""
    if n < 1:
        raise ValueError("n must be positive")
    return 1 << (n.bit_length() - 1)


__all__ = [
    "NEG_INF",
    "F2Poly",
    "F2Matrix",
    "EchelonBasis",
    "annihilates",
    "clmul",
    "frobenius_power",
    "has_small_factor",
    "is_irreducible",
    "log2_floor_pow2",
    "minimal_polynomial",
    "poly_gcd",
    "poly_mulmod",
    "rank",
    "trial_division_irreducible",
]
