"""Parameter-set creation: ID embedding, maximal-period search, tempering search.

A candidate recursion is certified by the minimal polynomial of the LSB of
its untempered output: degree p plus irreducibility.  With p a Mersenne
exponent that polynomial is primitive, so the period is 2^p - 1.
"""

from __future__ import annotations

import csv
import hashlib
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from mtgpkit.equidist import Side, defects, kv_lattice, kv_table
from mtgpkit.f2core import F2Matrix, F2Poly, is_irreducible, minimal_polynomial, rank
from mtgpkit.mtgp import (
    RecursionParams,
    TemperingParams,
    build_table,
    derive_sizes,
    raw_bits,
    seed,
)

log = logging.getLogger(__name__)

STANDARD_EXPONENTS = (3217, 4423, 11213, 23209, 44497)
DEFAULT_MAX_CANDIDATES = 10**6
CHARPOLY_SEED = 1
CHUNK = 5


class SearchExhausted(RuntimeError):
    pass


class SearchRng:
    """PCG64 stream keyed by (seed, id, mexp); independent of MTGP itself."""

    def __init__(self, seed: int, id_: int = 0, mexp: int = 0):
        ss = np.random.SeedSequence([seed & (2**64 - 1), id_ & 0xFFFFFFFF, mexp])
        self._bitgen = np.random.PCG64(ss)

    def bits(self, n: int) -> int:
        return int(self._bitgen.random_raw()) & ((1 << n) - 1)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        nbits = max(1, (bound - 1).bit_length())
        while True:
            x = self.bits(nbits)
            if x < bound:
                return x


def shifts(w: int) -> tuple[int, int]:
    """sh1, sh2: 13 and 4 at w = 32, scaled (round half up) for smaller words."""
    return max(1, (13 * w + 16) // 32), max(1, (4 * w + 16) // 32)


def low_phase_bits(w: int) -> int:
    """Width of the LSB tempering phase: 9 at w = 32."""
    return max(1, (9 * w + 16) // 32)


def n_threads(n: int) -> int:
    """Largest power of two not exceeding N - 2."""
    return 1 << ((n - 2).bit_length() - 1)


def middle_range(n: int) -> tuple[int, int]:
    """Inclusive bounds for M: 2 < M < N - n_threads, widened to 2 <= M if that is empty."""
    hi = n - n_threads(n) - 1
    lo = 3
    if lo > hi:
        lo, hi = 2, n - n_threads(n)
    if lo > hi:
        raise ValueError(f"no valid middle position for N={n}")
    return lo, hi


def nibble_matrix(rows, w: int) -> F2Matrix:
    """S: row k holds the 4 LSBs of R_k, column j = bit 3 - j of the word."""
    s_rows = []
    for row in rows:
        nib = row & 0xF
        s_rows.append(sum(((nib >> (3 - j)) & 1) << j for j in range(4)))
    return F2Matrix(tuple(s_rows), 4)


def check_r_condition(rmat: F2Matrix) -> bool:
    """S + I invertible, so the final table XOR in the recursion is a bijection."""
    s = nibble_matrix(rmat.rows, rmat.ncols)
    return rank(s + F2Matrix.identity(4)) == 4


def _draw_nibbles(rows, rng: SearchRng, w: int) -> tuple[int, ...]:
    while True:
        cand = tuple((row & ~0xF) | rng.bits(4) for row in rows)
        if check_r_condition(F2Matrix(cand, w)):
            return cand


def embed_id(id_: int, rng: SearchRng, w: int = 32) -> F2Matrix:
    """Random R carrying the ID: id >> 16 in row 0 bits 31..16, id & 0xFFFF in row 1 bits 19..4."""
    if w != 32:
        raise ValueError("ID embedding requires 32-bit words")
    rows = [rng.bits(32) for _ in range(4)]
    rows[0] = (rows[0] & 0x0000FFFF) | ((id_ >> 16) & 0xFFFF) << 16
    rows[1] = (rows[1] & ~0x000FFFF0 & 0xFFFFFFFF) | (id_ & 0xFFFF) << 4
    return F2Matrix(_draw_nibbles(rows, rng, w), w)


def recover_id(rmat: F2Matrix) -> int:
    return ((rmat.rows[0] >> 16) << 16) | ((rmat.rows[1] >> 4) & 0xFFFF)


def random_r(rng: SearchRng, w: int) -> F2Matrix:
    """Condition-checked random R for small word sizes (no ID embedded)."""
    rows = [rng.bits(w) for _ in range(4)]
    return F2Matrix(_draw_nibbles(rows, rng, w), w)


def char_poly(rp: RecursionParams) -> F2Poly:
    """Minimal polynomial of the LSB of 2p new words from a fixed seeded state."""
    state = seed(rp, None, CHARPOLY_SEED)
    return minimal_polynomial(raw_bits(rp, state, 2 * rp.mexp, bit=0))


def certify(rp: RecursionParams) -> F2Poly | None:
    """The characteristic polynomial if it has degree p and is irreducible."""
    f = char_poly(rp)
    if f.degree != rp.mexp or not is_irreducible(f):
        return None
    return f


@dataclass
class SearchStats:
    candidates: int = 0
    wrong_degree: int = 0


def search_recursion_params(p: int, w: int, id_: int, rng: SearchRng,
                            max_candidates: int = DEFAULT_MAX_CANDIDATES,
                            stats: SearchStats | None = None) -> tuple[RecursionParams, F2Poly]:
    """Draw (M, R) until the characteristic polynomial is irreducible of degree p."""
    n, _ = derive_sizes(p, w)
    sh1, sh2 = shifts(w)
    lo, hi = middle_range(n)
    stats = SearchStats() if stats is None else stats
    for _ in range(max_candidates):
        stats.candidates += 1
        m = lo + rng.below(hi - lo + 1)
        rmat = embed_id(id_, rng, w) if w == 32 else random_r(rng, w)
        rp = RecursionParams(p, w, n, m, w * n - p, sh1, sh2, rmat)
        f = char_poly(rp)
        if f.degree != p:
            stats.wrong_degree += 1
            continue
        if is_irreducible(f):
            log.info("p=%d id=%d: found after %d candidates", p, id_, stats.candidates)
            return rp, f
    raise SearchExhausted("search exhausted")


@dataclass(frozen=True)
class ChunkStep:
    """One greedy choice: row, bit range, chosen pattern and partial defects."""

    phase: int
    row: int
    start: int
    end: int
    pattern: int
    defect: int
    zero_defect: int


@dataclass
class TemperingTrace:
    steps: list[ChunkStep] = field(default_factory=list)

    def dominance_holds(self) -> bool:
        return all(s.defect <= s.zero_defect for s in self.steps)


def _rows_to_table(rows, w: int) -> np.ndarray:
    return np.array(build_table(F2Matrix(tuple(rows), w)), dtype=np.uint64)


def _kv_lattice_fn(rp: RecursionParams):
    init = np.array(seed(rp, None, 1).words(), dtype=np.uint64)

    def kv(rows, v, side):
        return kv_lattice(rp, _rows_to_table(rows, rp.wordsize), v, side, init)

    return kv


def _kv_rank_fn(rp: RecursionParams):
    from mtgpkit.equidist import k_of_v

    def kv(rows, v, side):
        return k_of_v(rp, TemperingParams.from_rows(rows, rp.wordsize), v, side, "rank")

    return kv


def search_tempering(rp: RecursionParams, method: str = "lattice",
                     trace: TemperingTrace | None = None,
                     check_dominance: bool = True) -> TemperingParams:
    """Greedy two-phase tempering search.

    Phase 1 fills the high bits of each row from the MSB down in chunks of
    five, minimising d(1)+...+d(e) on the MSB side.  Phase 2 fills the low bits
    from the LSB up, minimising the LSB-side defects.  Ties go to the smallest
    pattern.
    """
    w, p = rp.wordsize, rp.mexp
    kv = _kv_lattice_fn(rp) if method == "lattice" else _kv_rank_fn(rp)
    low = low_phase_bits(w)
    high = w - low
    rows = [0, 0, 0, 0]
    trace = TemperingTrace() if trace is None else trace

    def level_defects(side, first, last):
        return sum(p // v - kv(rows, v, side) for v in range(first, last + 1))

    for phase, side, width in ((1, Side.MSB, high), (2, Side.LSB, low)):
        for i in range(4):
            for j in range(0, width, CHUNK):
                e = min(j + CHUNK, width)
                size = e - j
                # bits j..e-1 counted from the MSB (phase 1) or from the LSB (phase 2)
                shift = w - e if phase == 1 else j
                keep = rows[i] & ~(((1 << size) - 1) << shift)
                fixed = level_defects(side, 1, j) if j else 0
                best_pat, best_val, zero_val = 0, None, None
                for pat in range(1 << size):
                    rows[i] = keep | (pat << shift)
                    val = fixed + level_defects(side, j + 1, e)
                    if pat == 0:
                        zero_val = val
                    if best_val is None or val < best_val:
                        best_pat, best_val = pat, val
                rows[i] = keep | (best_pat << shift)
                step = ChunkStep(phase, i, j, e, best_pat, best_val, zero_val)
                trace.steps.append(step)
                if check_dominance:
                    assert step.defect <= step.zero_defect, step
                log.debug("tempering %s", step)
    return TemperingParams.from_rows(rows, w)


def sha1_digest(f: F2Poly) -> str:
    return hashlib.sha1(f.to_bytes()).hexdigest()


@dataclass(frozen=True)
class ParamRecord:
    id: int
    rp: RecursionParams
    tp: TemperingParams
    charpoly_sha1: str
    nonzero_terms: int
    delta: int


def create_record(p: int, w: int, id_: int, search_seed: int,
                  max_candidates: int = DEFAULT_MAX_CANDIDATES,
                  trace: TemperingTrace | None = None) -> ParamRecord:
    """Full pipeline for one ID: recursion search, tempering search, total defect."""
    rng = SearchRng(search_seed, id_, p)
    rp, f = search_recursion_params(p, w, id_, rng, max_candidates)
    tp = search_tempering(rp, trace=trace)
    report = kv_table(rp, tp, Side.MSB, method="lattice")
    return ParamRecord(id_, rp, tp, sha1_digest(f), f.nonzero_terms(), report.delta)


FIELDS = (
    "id", "p", "w", "N", "M", "r", "sh1", "sh2",
    "R0", "R1", "R2", "R3", "T0", "T1", "T2", "T3",
    "charpoly_sha1", "nonzero_terms", "delta",
)


def record_row(rec: ParamRecord) -> list[str]:
    rp = rec.rp
    return [
        str(rec.id), str(rp.mexp), str(rp.wordsize), str(rp.n), str(rp.m), str(rp.r),
        str(rp.sh1), str(rp.sh2),
        *(f"{x:08x}" for x in rp.rmat.rows),
        *(f"{x:08x}" for x in rec.tp.tmat.rows),
        rec.charpoly_sha1, str(rec.nonzero_terms), str(rec.delta),
    ]


def emit_record(rec: ParamRecord) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(record_row(rec))
    return buf.getvalue()


def emit_records(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FIELDS)
    for rec in records:
        writer.writerow(record_row(rec))
    return buf.getvalue()


class RecordFormatError(ValueError):
    pass


def _parse_row(row: list[str], lineno: int) -> ParamRecord:
    if len(row) != len(FIELDS):
        raise RecordFormatError(f"line {lineno}: expected {len(FIELDS)} fields, got {len(row)}")
    vals = dict(zip(FIELDS, (s.strip() for s in row)))
    try:
        ints = {k: int(vals[k]) for k in ("id", "p", "w", "N", "M", "r", "sh1", "sh2",
                                          "nonzero_terms", "delta")}
        rrows = [int(vals[f"R{k}"], 16) for k in range(4)]
        trows = [int(vals[f"T{k}"], 16) for k in range(4)]
    except ValueError as exc:
        raise RecordFormatError(f"line {lineno}: {exc}") from None
    digest = vals["charpoly_sha1"].lower()
    if len(digest) != 40 or any(ch not in "0123456789abcdef" for ch in digest):
        raise RecordFormatError(f"line {lineno}: charpoly_sha1 is not a 40-digit hex digest")
    try:
        w = ints["w"]
        rp = RecursionParams(ints["p"], w, ints["N"], ints["M"], ints["r"], ints["sh1"],
                             ints["sh2"], F2Matrix(tuple(rrows), w))
        tp = TemperingParams.from_rows(trows, w)
    except ValueError as exc:
        raise RecordFormatError(f"line {lineno}: {exc}") from None
    return ParamRecord(ints["id"], rp, tp, digest, ints["nonzero_terms"], ints["delta"])


def parse_records(text: str) -> list[ParamRecord]:
    """Parse a header plus record lines; errors name the 1-based line."""
    records = []
    reader = csv.reader(io.StringIO(text))
    header_seen = False
    for row in reader:
        lineno = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if not header_seen:
            if tuple(c.strip() for c in row) != FIELDS:
                raise RecordFormatError(f"line {lineno}: missing or malformed header")
            header_seen = True
            continue
        records.append(_parse_row(row, lineno))
    if not header_seen:
        raise RecordFormatError("line 1: missing header")
    return records


@dataclass(frozen=True)
class Certification:
    ok: bool
    failed_field: str | None = None
    detail: str = ""


def recertify(rec: ParamRecord, recompute_delta_up_to: int = 4423) -> Certification:
    """Re-derive the characteristic polynomial, digest, term count and (small p) the defect."""
    f = char_poly(rec.rp)
    if f.degree != rec.rp.mexp:
        return Certification(False, "charpoly_sha1", f"degree {f.degree} != {rec.rp.mexp}")
    if not is_irreducible(f):
        return Certification(False, "charpoly_sha1", "characteristic polynomial is reducible")
    if sha1_digest(f) != rec.charpoly_sha1:
        return Certification(False, "charpoly_sha1", "digest mismatch")
    if f.nonzero_terms() != rec.nonzero_terms:
        return Certification(False, "nonzero_terms", "term count mismatch")
    if rec.rp.mexp <= recompute_delta_up_to:
        report = kv_table(rec.rp, rec.tp, Side.MSB, method="rank")
        if report.delta != rec.delta:
            return Certification(False, "delta", f"recomputed {report.delta}")
    return Certification(True)


__all__ = [
    "Certification",
    "ChunkStep",
    "FIELDS",
    "STANDARD_EXPONENTS",
    "ParamRecord",
    "RecordFormatError",
    "SearchExhausted",
    "SearchRng",
    "TemperingTrace",
    "char_poly",
    "check_r_condition",
    "create_record",
    "defects",
    "embed_id",
    "emit_record",
    "emit_records",
    "middle_range",
    "parse_records",
    "recertify",
    "recover_id",
    "search_recursion_params",
    "search_tempering",
    "sha1_digest",
    "shifts",
]
