"""Dimensions of equidistribution k(v), defects d(v) and the total defect.

Two routes compute k(v):

* ``rank`` (the reference): build the linear map from the p-bit state to the
  v chosen bits of the first k outputs and grow k until the map loses full
  rank.  Elimination is carried forward from one k to the next.
* ``lattice``: a reduction of the F2[x]-lattice spanned by the output series
  of one generic state, in the spirit of the SIS/PIS algorithms.  It needs an
  irreducible characteristic polynomial and is what makes the tempering search
  feasible at large p.  The tests pin it to the rank route and to brute force.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numba import njit

from mtgpkit.f2core import EchelonBasis, F2Matrix
from mtgpkit.mtgp import GeneratorState, RecursionParams, TemperingParams, generate, seed


class Side(enum.Enum):
    MSB = "msb"
    LSB = "lsb"


@dataclass(frozen=True)
class EquidistReport:
    p: int
    w: int
    kv: tuple[int, ...]
    dv: tuple[int, ...]
    delta: int

    @property
    def max_defect(self) -> int:
        return max(self.dv)

    def ratios(self) -> tuple[float, ...]:
        return tuple(defect_ratio(k, d) for k, d in zip(self.kv, self.dv))


def defects(kv, p: int) -> tuple[list[int], int]:
    """d(v) = floor(p/v) - k(v) and their sum."""
    dv = []
    for v, k in enumerate(kv, start=1):
        d = p // v - k
        if d < 0:
            raise ValueError("k(v) exceeds theoretical bound")
        dv.append(d)
    return dv, sum(dv)


def defect_ratio(k: int, d: int) -> float:
    """Percentage of the bound lost at this v."""
    return 100.0 * d / (k + d) if k + d else 0.0


def format_ratio(k: int, d: int) -> str:
    return f"{defect_ratio(k, d):.2f}"


def state_columns(rp: RecursionParams) -> int:
    return rp.mexp


def state_to_vector(rp: RecursionParams, words) -> int:
    """Pack the significant bits of x_0..x_{N-1} into a p-bit int (x_0's w-r MSBs first)."""
    w, r = rp.wordsize, rp.r
    vec = (words[0] >> r) & ((1 << (w - r)) - 1)
    for i in range(1, rp.n):
        vec |= (words[i] & rp.mask) << (w - r + (i - 1) * w)
    return vec


def vector_to_state(rp: RecursionParams, vec: int) -> GeneratorState:
    w, r = rp.wordsize, rp.r
    words = [(vec & ((1 << (w - r)) - 1)) << r]
    for i in range(1, rp.n):
        words.append((vec >> (w - r + (i - 1) * w)) & rp.mask)
    return GeneratorState(rp, words)


class _SymbolicStream:
    """Runs the generator on symbolic words.

    A word is a list of w functionals (bit b at index b); a functional is an
    int over the p state columns.  Outputs are cached so several v share one run.
    """

    def __init__(self, rp: RecursionParams, tp: TemperingParams):
        self.rp, self.tp = rp, tp
        w, r = rp.wordsize, rp.r
        first = [0] * r + [1 << (b - r) for b in range(r, w)]
        self.ring = [first] + [
            [1 << (w - r + (i - 1) * w + b) for b in range(w)] for i in range(1, rp.n)
        ]
        self.idx = 0
        self.outputs: list[list[int]] = []
        self._rcols = [[k for k in range(4) if rp.rmat.rows[k] >> b & 1] for b in range(w)]
        self._tcols = [[k for k in range(4) if tp.tmat.rows[k] >> b & 1] for b in range(w)]

    def output(self, j: int) -> list[int]:
        while len(self.outputs) <= j:
            self.outputs.append(self._step())
        return self.outputs[j]

    def _step(self) -> list[int]:
        rp, ring, n, i = self.rp, self.ring, self.rp.n, self.idx
        w, r, sh1, sh2 = rp.wordsize, rp.r, rp.sh1, rp.sh2
        x0, x1 = ring[i], ring[(i + 1) % n]
        xm, y = ring[(i + rp.m) % n], ring[(i + rp.m - 1) % n]
        t = [x1[b] ^ x0[b] if b >= r else x1[b] for b in range(w)]
        t = [t[b] ^ t[b - sh1] if b >= sh1 else t[b] for b in range(w)]
        u = [t[b] ^ xm[b + sh2] if b + sh2 < w else t[b] for b in range(w)]
        x = []
        for b in range(w):
            acc = u[b]
            for k in self._rcols[b]:
                acc ^= u[3 - k]
            x.append(acc)
        h = [y[b] ^ y[b + w // 2] if b + w // 2 < w else y[b] for b in range(w)]
        h = [h[b] ^ h[b + w // 4] if b + w // 4 < w else h[b] for b in range(w)]
        out = []
        for b in range(w):
            acc = x[b]
            for k in self._tcols[b]:
                acc ^= h[3 - k]
            out.append(acc)
        ring[i] = x
        self.idx = (i + 1) % n
        return out


def _bit_rows(word: list[int], v: int, w: int, side: Side) -> list[int]:
    # MSB side: row b is bit w-1-b; LSB side: row b is bit b.
    if side is Side.MSB:
        return [word[w - 1 - b] for b in range(v)]
    return [word[b] for b in range(v)]


def output_map(rp: RecursionParams, tp: TemperingParams, k: int, v: int,
               side: Side = Side.MSB) -> F2Matrix:
    """Matrix with k*v rows over the p state columns.

    Row j*v + b is bit b of output j, where bit 0 is the most significant bit
    on the MSB side and the least significant bit on the LSB side.
    """
    if not 1 <= v <= rp.wordsize:
        raise ValueError("need 1 <= v <= w")
    stream = _SymbolicStream(rp, tp)
    rows = []
    for j in range(k):
        rows.extend(_bit_rows(stream.output(j), v, rp.wordsize, side))
    return F2Matrix(tuple(rows), rp.mexp)


def apply_map(m: F2Matrix, vec: int) -> list[int]:
    """Matrix times state vector: one bit per row."""
    return [bin(row & vec).count("1") & 1 for row in m.rows]


def _kv_rank(stream: _SymbolicStream, v: int, side: Side) -> int:
    rp = stream.rp
    basis = EchelonBasis()
    bound = rp.mexp // v
    for k in range(1, bound + 1):
        for row in _bit_rows(stream.output(k - 1), v, rp.wordsize, side):
            if not basis.insert(row):
                return k - 1
    return bound


@njit(cache=True)
def _peek(z, o, n, m, upper, s1, s2, mask, rectbl, tmptbl, hw2, hw4, ext_shift, ext_mask):
    i1 = o + 1
    if i1 >= n:
        i1 -= n
    im = o + m
    if im >= n:
        im -= n
    im1 = im - 1
    if im1 < 0:
        im1 += n
    t = z[i1] ^ (z[o] & upper)
    t ^= (t << s1) & mask
    u = t ^ (z[im] >> s2)
    x = u ^ rectbl[u & np.uint64(15)]
    y = z[im1]
    h = y ^ (y >> hw2)
    h ^= h >> hw4
    out = x ^ tmptbl[h & np.uint64(15)]
    return x, (out >> ext_shift) & ext_mask


@njit(cache=True)
def _is_zero(z, o, n, upper):
    if z[o] & upper:
        return False
    for k in range(n):
        if k != o and z[k]:
            return False
    return True


@njit(cache=True)
def _xor_aligned(za, oa, zb, ob, n):
    for k in range(n):
        ia = oa + k
        if ia >= n:
            ia -= n
        ib = ob + k
        if ib >= n:
            ib -= n
        za[ia] ^= zb[ib]


@njit(cache=True)
def _lattice_kv(init, n, m, w, r, sh1, sh2, rectbl, tmptbl, v, lsb, limit):
    mask = (np.uint64(1) << np.uint64(w)) - np.uint64(1)
    upper = mask ^ ((np.uint64(1) << np.uint64(r)) - np.uint64(1))
    s1 = np.uint64(sh1)
    s2 = np.uint64(sh2)
    hw2 = np.uint64(w // 2)
    hw4 = np.uint64(w // 4)
    ext_mask = (np.uint64(1) << np.uint64(v)) - np.uint64(1)
    ext_shift = np.uint64(0) if lsb else np.uint64(w - v)

    nvec = v + 1
    z = np.zeros((nvec, n), np.uint64)
    off = np.zeros(nvec, np.int64)
    nu = np.zeros(nvec, np.int64)
    c = np.zeros(nvec, np.uint64)
    lw = np.zeros(nvec, np.uint64)
    owner = np.full(v, -1, np.int64)
    tmp = np.zeros(n, np.uint64)
    for b in range(v):
        c[b] = np.uint64(1) << np.uint64(b)
        owner[b] = b
    cur = v
    for k in range(n):
        z[cur, k] = init[k]
    need_scan = True
    dead = -1
    while dead < 0:
        if need_scan:
            # cur is fractional: find its leading time
            if _is_zero(z[cur], off[cur], n, upper):
                dead = cur
                break
            while True:
                x, ov = _peek(z[cur], off[cur], n, m, upper, s1, s2, mask,
                              rectbl, tmptbl, hw2, hw4, ext_shift, ext_mask)
                if ov != 0:
                    lw[cur] = ov
                    break
                z[cur, off[cur]] = x
                off[cur] += 1
                if off[cur] == n:
                    off[cur] = 0
                nu[cur] += 1
                if nu[cur] > limit:
                    return -1
            need_scan = False
        lead = c[cur] if c[cur] != 0 else lw[cur]
        pb = 0
        while (lead >> np.uint64(pb)) & np.uint64(1) == 0:
            pb += 1
        b = owner[pb]
        deg_a = 0 if c[cur] != 0 else -(nu[cur] + 1)
        deg_b = 0 if c[b] != 0 else -(nu[b] + 1)
        a = cur
        if deg_b > deg_a:
            owner[pb] = a
            a, b = b, a
        cur = a
        if c[a] != 0:
            if c[b] != 0:
                c[a] ^= c[b]
                _xor_aligned(z[a], off[a], z[b], off[b], n)
            else:
                c[a] ^= lw[b]
                for k in range(n):
                    tmp[k] = z[b, k]
                x, ov = _peek(tmp, off[b], n, m, upper, s1, s2, mask,
                              rectbl, tmptbl, hw2, hw4, ext_shift, ext_mask)
                tmp[off[b]] = x
                ob = off[b] + 1
                if ob == n:
                    ob = 0
                _xor_aligned(z[a], off[a], tmp, ob, n)
            if c[a] == 0:
                nu[a] = 0
                need_scan = True
        else:
            _xor_aligned(z[a], off[a], z[b], off[b], n)
            lw[a] ^= lw[b]
            if lw[a] == 0:
                if _is_zero(z[a], off[a], n, upper):
                    dead = a
                    break
                x, ov = _peek(z[a], off[a], n, m, upper, s1, s2, mask,
                              rectbl, tmptbl, hw2, hw4, ext_shift, ext_mask)
                z[a, off[a]] = x
                off[a] += 1
                if off[a] == n:
                    off[a] = 0
                nu[a] += 1
                need_scan = True
    best = -1
    for k in range(nvec):
        if k == dead:
            continue
        if c[k] != 0:
            return 0
        if best < 0 or nu[k] + 1 < best:
            best = nu[k] + 1
    return best


def _lattice_state(rp: RecursionParams) -> np.ndarray:
    return np.array(seed(rp, None, 1).words(), dtype=np.uint64)


def kv_lattice(rp: RecursionParams, tmptbl, v: int, side: Side = Side.MSB,
               init: np.ndarray | None = None) -> int:
    """k(v) by lattice reduction; assumes an irreducible characteristic polynomial."""
    if not 1 <= v <= rp.wordsize:
        raise ValueError("need 1 <= v <= w")
    if init is None:
        init = _lattice_state(rp)
    k = _lattice_kv(
        init, rp.n, rp.m, rp.wordsize, rp.r, rp.sh1, rp.sh2,
        np.array(rp.rectbl, dtype=np.uint64), np.asarray(tmptbl, dtype=np.uint64),
        v, side is Side.LSB, 4 * rp.mexp + 4 * rp.n,
    )
    if k < 0:
        raise RuntimeError("lattice reduction did not converge; is the characteristic polynomial irreducible?")
    return int(k)


def k_of_v(rp: RecursionParams, tp: TemperingParams, v: int, side: Side = Side.MSB,
           method: str = "rank") -> int:
    """Largest k such that the v chosen bits of k consecutive outputs are equidistributed."""
    if not 1 <= v <= rp.wordsize:
        raise ValueError("need 1 <= v <= w")
    if method == "rank":
        return _kv_rank(_SymbolicStream(rp, tp), v, side)
    if method == "lattice":
        return kv_lattice(rp, tp.tmptbl, v, side)
    raise ValueError(f"unknown method {method!r}")


def kv_table(rp: RecursionParams, tp: TemperingParams, side: Side = Side.MSB,
             method: str = "rank") -> EquidistReport:
    """k(v) for v = 1..w with defects and total defect."""
    w = rp.wordsize
    if method == "rank":
        stream = _SymbolicStream(rp, tp)
        kv = [_kv_rank(stream, v, side) for v in range(1, w + 1)]
    elif method == "lattice":
        init = _lattice_state(rp)
        kv = [kv_lattice(rp, tp.tmptbl, v, side, init) for v in range(1, w + 1)]
    else:
        raise ValueError(f"unknown method {method!r}")
    dv, delta = defects(kv, rp.mexp)
    return EquidistReport(rp.mexp, w, tuple(kv), tuple(dv), delta)


@njit(cache=True)
def _pattern_counts_ok(vals, v, k, p):
    period = vals.shape[0]
    nbits = k * v
    counts = np.zeros(1 << nbits, np.int64)
    code = 0
    full = (1 << nbits) - 1
    for j in range(k - 1):
        code = ((code << v) | vals[j]) & full
    for j in range(period):
        code = ((code << v) | vals[(j + k - 1) % period]) & full
        counts[code] += 1
    expect = 1 << (p - nbits)
    if counts[0] != expect - 1:
        return False
    for t in range(1, full + 1):
        if counts[t] != expect:
            return False
    return True


def brute_force_kv(rp: RecursionParams, tp: TemperingParams, v: int,
                   side: Side = Side.MSB, state: GeneratorState | None = None) -> int:
    """k(v) by counting every cyclic k-tuple of v-bit outputs over the full period."""
    p, w = rp.mexp, rp.wordsize
    if p > 21:
        raise ValueError("brute force limited to p <= 21")
    if not 1 <= v <= w:
        raise ValueError("need 1 <= v <= w")
    state = seed(rp, tp, 1) if state is None else state.copy()
    words = generate(state, tp, (1 << p) - 1).astype(np.int64)
    vals = words >> (w - v) if side is Side.MSB else words & ((1 << v) - 1)
    best = 0
    for k in range(1, p // v + 1):
        if not _pattern_counts_ok(vals, v, k, p):
            break
        best = k
    return best
