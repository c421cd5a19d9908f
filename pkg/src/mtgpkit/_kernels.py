"""Compiled GF(2) kernels on packed polynomials.

A packed polynomial is a ``uint64`` array, little-endian by word: bit ``j`` of
word ``k`` is the coefficient of ``x**(64*k + j)``.  These routines back the
large-degree paths of :mod:`mtgpkit.f2core`; the pure-Python versions there
remain the reference and are cross-checked in the tests.
"""

import numpy as np
from numba import njit

_U0 = np.uint64(0)
_U1 = np.uint64(1)
_M32 = np.uint64(0xFFFFFFFF)
_FF = np.uint64(0xFF)
_S16 = np.uint64(0x0000FFFF0000FFFF)
_S8 = np.uint64(0x00FF00FF00FF00FF)
_S4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_S2 = np.uint64(0x3333333333333333)
_S1 = np.uint64(0x5555555555555555)


def to_words(value, nwords):
    """Pack a non-negative Python int into ``nwords`` little-endian uint64."""
    return np.frombuffer(value.to_bytes(8 * nwords, "little"), dtype="<u8").copy()


def from_words(words):
    return int.from_bytes(np.ascontiguousarray(words, dtype="<u8").tobytes(), "little")


@njit(cache=True)
def _spread32(x):
    x = x & _M32
    x = (x | (x << np.uint64(16))) & _S16
    x = (x | (x << np.uint64(8))) & _S8
    x = (x | (x << np.uint64(4))) & _S4
    x = (x | (x << np.uint64(2))) & _S2
    x = (x | (x << np.uint64(1))) & _S1
    return x


@njit(cache=True)
def _parity(x):
    x ^= x >> np.uint64(32)
    x ^= x >> np.uint64(16)
    x ^= x >> np.uint64(8)
    x ^= x >> np.uint64(4)
    x ^= x >> np.uint64(2)
    x ^= x >> np.uint64(1)
    return x & _U1


@njit(cache=True)
def _degree(a, hint):
    i = min(hint, a.shape[0] - 1)
    while i >= 0 and a[i] == _U0:
        i -= 1
    if i < 0:
        return -1
    x = a[i]
    b = 63
    while (x >> np.uint64(b)) & _U1 == _U0:
        b -= 1
    return 64 * i + b


@njit(cache=True)
def _xor_shifted(dst, src, nsrc, shift):
    """dst ^= src[:nsrc] << shift (dst must be long enough)."""
    wo = shift >> 6
    bs = shift & 63
    if bs == 0:
        for j in range(nsrc):
            dst[j + wo] ^= src[j]
    else:
        ubs = np.uint64(bs)
        ibs = np.uint64(64 - bs)
        for j in range(nsrc):
            s = src[j]
            dst[j + wo] ^= s << ubs
            dst[j + wo + 1] ^= s >> ibs


@njit(cache=True)
def reduction_table(f, deg):
    """Rows b = 0..255 hold (b(x) * x**deg) mod f, for monic f of degree deg."""
    nw = deg // 64 + 1
    table = np.zeros((256, nw + 1), np.uint64)
    row = np.zeros(nw + 1, np.uint64)
    for j in range(nw):
        row[j] = f[j]
    row[deg >> 6] ^= _U1 << np.uint64(deg & 63)
    table[1, :] = row
    for k in range(1, 8):
        prev = table[1 << (k - 1)]
        cur = np.zeros(nw + 1, np.uint64)
        carry = _U0
        for j in range(nw + 1):
            cur[j] = (prev[j] << _U1) | carry
            carry = prev[j] >> np.uint64(63)
        if (cur[deg >> 6] >> np.uint64(deg & 63)) & _U1:
            cur[deg >> 6] ^= _U1 << np.uint64(deg & 63)
            for j in range(nw + 1):
                cur[j] ^= table[1, j]
        table[1 << k, :] = cur
    for b in range(3, 256):
        low = b & (-b)
        if low != b:
            for j in range(nw + 1):
                table[b, j] = table[b ^ low, j] ^ table[low, j]
    return table


@njit(cache=True)
def _reduce(sq, table, deg, top):
    """Reduce sq (degree <= top) modulo the polynomial behind ``table``."""
    nw = deg // 64 + 1
    if top < deg:
        return
    k = (top - deg) // 8
    while k >= 0:
        q = deg + 8 * k
        wi = q >> 6
        sh = q & 63
        b = sq[wi] >> np.uint64(sh)
        if sh > 56:
            b |= sq[wi + 1] << np.uint64(64 - sh)
        b &= _FF
        if b != _U0:
            sq[wi] &= ~(_FF << np.uint64(sh))
            if sh > 56:
                sq[wi + 1] &= ~(_FF >> np.uint64(64 - sh))
            _xor_shifted(sq, table[b], nw + 1, q - deg)
        k -= 1


@njit(cache=True)
def sqr_mod(a, table, deg):
    nw = deg // 64 + 1
    sq = np.zeros(2 * nw + 4, np.uint64)
    for i in range(nw):
        sq[2 * i] = _spread32(a[i])
        sq[2 * i + 1] = _spread32(a[i] >> np.uint64(32))
    _reduce(sq, table, deg, 2 * deg)
    return sq[:nw].copy()


@njit(cache=True)
def mul_mod(a, b, table, deg):
    """Schoolbook product a*b mod f; adequate for occasional use."""
    nw = deg // 64 + 1
    prod = np.zeros(2 * nw + 4, np.uint64)
    for i in range(nw):
        x = a[i]
        for bit in range(64):
            if (x >> np.uint64(bit)) & _U1:
                _xor_shifted(prod, b, nw, 64 * i + bit)
    _reduce(prod, table, deg, 2 * deg)
    return prod[:nw].copy()


@njit(cache=True)
def gcd_degree(a, b):
    """Degree of gcd(a, b); the inputs are left untouched."""
    size = max(a.shape[0], b.shape[0]) + 1
    a0 = a
    b0 = b
    a = np.zeros(size, np.uint64)
    b = np.zeros(size, np.uint64)
    a[: a0.shape[0]] = a0
    b[: b0.shape[0]] = b0
    da = _degree(a, size - 1)
    db = _degree(b, size - 1)
    if da < db:
        a, b = b, a
        da, db = db, da
    while db >= 0:
        while da >= db:
            _xor_shifted(a, b, (db >> 6) + 1, da - db)
            da = _degree(a, da >> 6)
        a, b = b, a
        da, db = db, da
    return da


@njit(cache=True)
def _clmul_small(a, b):
    out = 0
    while a:
        if a & 1:
            out ^= b
        a >>= 1
        b <<= 1
    return out


@njit(cache=True)
def small_irreducibles(maxdeg):
    """All irreducible polynomials of degree 1..maxdeg (maxdeg <= 24), ascending."""
    size = 1 << (maxdeg + 1)
    reducible = np.zeros(size, np.bool_)
    for a in range(2, 1 << (maxdeg // 2 + 1)):
        if reducible[a]:
            continue
        da = 0
        while (a >> (da + 1)) > 0:
            da += 1
        for b in range(a, 1 << (maxdeg - da + 1)):
            reducible[_clmul_small(a, b)] = True
    count = 0
    for g in range(2, size):
        if not reducible[g]:
            count += 1
    out = np.zeros(count, np.int64)
    k = 0
    for g in range(2, size):
        if not reducible[g]:
            out[k] = g
            k += 1
    return out


@njit(cache=True)
def byte_tables(mods, degs):
    """tables[t, b] = (b(x) * x**degs[t]) mod mods[t], for degs[t] <= 56."""
    tables = np.zeros((mods.shape[0], 256), np.uint64)
    for t in range(mods.shape[0]):
        g = mods[t]
        dg = np.uint64(degs[t])
        top = _U1 << dg
        for b in range(256):
            r = _U0
            for bit in range(7, -1, -1):
                r <<= _U1
                if (b >> bit) & 1:
                    r ^= top
                if (r >> dg) & _U1:
                    r ^= g
            tables[t, b] = r
    return tables


@njit(cache=True)
def _gcd64(a, b):
    while b != _U0:
        db = 63
        while (b >> np.uint64(db)) & _U1 == _U0:
            db -= 1
        while True:
            if a == _U0:
                break
            da = 63
            while (a >> np.uint64(da)) & _U1 == _U0:
                da -= 1
            if da < db:
                break
            a ^= b << np.uint64(da - db)
        a, b = b, a
    return a


@njit(cache=True)
def has_small_factor(fbytes, mods, degs, tables):
    """True if some mods[t] shares a factor with f (bytes most significant first)."""
    for t in range(mods.shape[0]):
        dg = np.uint64(degs[t])
        low = (_U1 << dg) - _U1
        tab = tables[t]
        r = _U0
        for j in range(fbytes.shape[0]):
            r = (r << np.uint64(8)) | np.uint64(fbytes[j])
            r = (r & low) ^ tab[r >> dg]
        if _gcd64(mods[t], r) != _U1:
            return True
    return False


@njit(cache=True)
def berlekamp_massey(seq):
    """Connection polynomial C (packed, C[0] bit 0 = 1) and linear complexity."""
    n = seq.shape[0]
    nw = n // 64 + 3
    rev = np.zeros(nw, np.uint64)
    for j in range(n):
        if seq[j]:
            pos = n - 1 - j
            rev[pos >> 6] |= _U1 << np.uint64(pos & 63)
    c = np.zeros(nw, np.uint64)
    b = np.zeros(nw, np.uint64)
    t = np.zeros(nw, np.uint64)
    c[0] = _U1
    b[0] = _U1
    L = 0
    m = 1
    degb = 0
    for i in range(n):
        off = n - 1 - i
        acc = _U0
        for k in range(L // 64 + 1):
            pos = off + 64 * k
            wi = pos >> 6
            sh = pos & 63
            seg = rev[wi] >> np.uint64(sh)
            if sh != 0 and wi + 1 < nw:
                seg |= rev[wi + 1] << np.uint64(64 - sh)
            acc ^= seg & c[k]
        if _parity(acc) == _U0:
            m += 1
            continue
        if 2 * L <= i:
            nl = L // 64 + 1
            for k in range(nl):
                t[k] = c[k]
            _xor_shifted(c, b, degb // 64 + 1, m)
            for k in range(nl, nw):
                t[k] = _U0
            for k in range(nw):
                b[k] = t[k]
            degb = L
            L = i + 1 - L
            m = 1
        else:
            _xor_shifted(c, b, degb // 64 + 1, m)
            m += 1
    return c[: L // 64 + 1].copy(), L
