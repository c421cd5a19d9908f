"""Lockstep simulation of one block of lanes advancing a single MTGP recursion.

Each batch, lane i (1-based) computes x_{N+j} with j = base + i - 1 in four
barrier-separated memory steps: read X[j], read X[j+1], read X[j+M], write
X[j+N].  The tempering word X[j+M-1] is read alongside step 3 and recorded
as an auxiliary access.  The buffer has L slots, the smallest power of two
not below 2N - M, and all indices are taken mod L.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mtgpkit.mtgp import OutputMode, RecursionParams, TemperingParams, generate, seed

READ_X0, READ_X1, READ_XM, WRITE_XN = range(4)


def default_lanes(rp: RecursionParams) -> int:
    """Largest power of two not exceeding N - 2."""
    return 1 << ((rp.n - 2).bit_length() - 1)


def buffer_length(rp: RecursionParams) -> int:
    need = 2 * rp.n - rp.m
    return 1 << (need - 1).bit_length()


@dataclass(frozen=True)
class LaneConfig:
    n_lanes: int
    block_count: int = 1
    warp_size: int = 32
    banks: int = 16

    def __post_init__(self):
        if self.n_lanes < 1 or self.block_count < 1:
            raise ValueError("lane and block counts must be positive")
        if self.warp_size < 2 or self.banks < 1:
            raise ValueError("bad warp size or bank count")


@dataclass
class AccessTrace:
    """Per batch: a (4, n_lanes) array of buffer indices for the four steps."""

    steps: list[np.ndarray] = field(default_factory=list)
    aux: list[np.ndarray] = field(default_factory=list)
    table: list[np.ndarray] = field(default_factory=list)

    def __len__(self) -> int:
        return 4 * len(self.steps)

    def memory_steps(self, include_aux: bool = True, include_tables: bool = False):
        for k, batch in enumerate(self.steps):
            yield from batch
            if include_aux:
                yield self.aux[k]
            if include_tables:
                yield from self.table[k]


@dataclass(frozen=True)
class BankReport:
    total_accesses: int
    conflict_events: int
    max_conflict_degree: int
    half_warp_steps: int

    def as_text(self) -> str:
        return (f"accesses={self.total_accesses} conflict_events={self.conflict_events} "
                f"max_degree={self.max_conflict_degree}")


def _check_bound(rp: RecursionParams, cfg: LaneConfig):
    if cfg.n_lanes > rp.n - rp.m:
        raise ValueError(
            f"{cfg.n_lanes} lanes exceeds parallelism bound N-M = {rp.n - rp.m}")


class _Block:
    """Shared buffer plus the pending writes of the current batch."""

    def __init__(self, rp: RecursionParams, tp: TemperingParams, s: int, n_lanes: int,
                 mode: OutputMode):
        self.rp, self.tp, self.mode, self.n_lanes = rp, tp, mode, n_lanes
        self.size = buffer_length(rp)
        self.buf = np.zeros(self.size, dtype=np.uint64)
        self.buf[: rp.n] = np.array(seed(rp, tp, s).words(), dtype=np.uint64)
        self.base = 0
        self.rectbl = np.array(rp.rectbl, dtype=np.uint64)
        if mode is OutputMode.UINT:
            self.otbl, self.oshift = np.array(tp.tmptbl, dtype=np.uint64), 0
        else:
            if tp.sngltbl is None:
                raise ValueError("float mode requires 32-bit words")
            self.otbl, self.oshift = np.array(tp.sngltbl, dtype=np.uint64), 9
        self.pending: tuple[np.ndarray, np.ndarray] | None = None

    def commit(self):
        if self.pending is not None:
            idx, vals = self.pending
            self.buf[idx] = vals
            self.pending = None

    def batch(self, trace: AccessTrace | None, barrier: bool = True) -> np.ndarray:
        rp, size = self.rp, self.size
        w = rp.wordsize
        mask = np.uint64((1 << w) - 1)
        j = self.base + np.arange(self.n_lanes)
        i0, i1, im = j % size, (j + 1) % size, (j + rp.m) % size
        im1, iw = (j + rp.m - 1) % size, (j + rp.n) % size
        # steps 1-3: reads, each followed by a barrier
        x0 = self.buf[i0]
        x1 = self.buf[i1]
        xm = self.buf[im]
        y = self.buf[im1]
        t = x1 ^ (x0 & np.uint64(rp.upper_mask))
        t ^= (t << np.uint64(rp.sh1)) & mask
        u = t ^ (xm >> np.uint64(rp.sh2))
        nib = (u & np.uint64(0xF)).astype(np.intp)
        x = u ^ self.rectbl[nib]
        h = y ^ (y >> np.uint64(w // 2))
        h ^= h >> np.uint64(w // 4)
        hnib = (h & np.uint64(0xF)).astype(np.intp)
        out = (x >> np.uint64(self.oshift)) ^ self.otbl[hnib]
        # a previous batch whose barrier was skipped lands only now
        self.commit()
        # step 4: write, then the end-of-batch barrier commits it
        self.pending = (iw, x)
        if barrier:
            self.commit()
        if trace is not None:
            trace.steps.append(np.stack([i0, i1, im, iw]))
            trace.aux.append(im1)
            trace.table.append(np.stack([nib, hnib]))
        self.base += self.n_lanes
        return out


def _finish(words: np.ndarray, mode: OutputMode) -> np.ndarray:
    words = words.astype(np.uint32)
    if mode is OutputMode.FLOAT01:
        return words.view(np.float32) - np.float32(1.0)
    return words


def run_block(rp: RecursionParams, tp: TemperingParams, seed_value: int, cfg: LaneConfig,
              count: int, mode: OutputMode = OutputMode.UINT, record_trace: bool = True,
              skip_barrier_at: int | None = None) -> tuple[np.ndarray, AccessTrace | None]:
    """Outputs o_N, o_{N+1}, ... produced batch by batch, plus the access trace.

    ``skip_barrier_at`` is a test hook: that batch's writes are committed only
    after the next batch has done its reads.
    """
    _check_bound(rp, cfg)
    if count % cfg.n_lanes:
        raise ValueError("count must be a multiple of the lane count")
    block = _Block(rp, tp, seed_value, cfg.n_lanes, mode)
    trace = AccessTrace() if record_trace else None
    outs = [block.batch(trace, barrier=(k != skip_barrier_at))
            for k in range(count // cfg.n_lanes)]
    block.commit()
    words = np.concatenate(outs) if outs else np.zeros(0, np.uint64)
    return _finish(words, mode), trace


def run_blocks(blocks, cfg: LaneConfig, count: int,
               mode: OutputMode = OutputMode.UINT) -> list[np.ndarray]:
    """Advance several independent blocks round-robin, one batch at a time.

    ``blocks`` holds (RecursionParams, TemperingParams, seed) triples.
    """
    states = []
    for rp, tp, s in blocks:
        _check_bound(rp, cfg)
        states.append(_Block(rp, tp, s, cfg.n_lanes, mode))
    if count % cfg.n_lanes:
        raise ValueError("count must be a multiple of the lane count")
    outs = [[] for _ in states]
    for _ in range(count // cfg.n_lanes):
        for k, block in enumerate(states):
            outs[k].append(block.batch(None))
    return [_finish(np.concatenate(o), mode) for o in outs]


def count_bank_conflicts(trace: AccessTrace, cfg: LaneConfig, include_aux: bool = True,
                         include_tables: bool = False) -> BankReport:
    """Count half-warp memory steps in which two lanes hit the same bank."""
    half = cfg.warp_size // 2
    steps = list(trace.memory_steps(include_aux, include_tables))
    if not steps:
        return BankReport(0, 0, 0, 0)
    total = sum(int(np.asarray(st).size) for st in steps)
    events = max_deg = hw_steps = 0
    for st in steps:
        banks = np.asarray(st, dtype=np.int64) % cfg.banks
        pad = -len(banks) % half
        # padding slots get a bank id of their own so they never collide
        groups = np.concatenate([banks, np.full(pad, cfg.banks)]).reshape(-1, half)
        counts = np.zeros((groups.shape[0], cfg.banks + 1), np.int64)
        np.add.at(counts, (np.arange(groups.shape[0])[:, None], groups), 1)
        deg = counts[:, : cfg.banks].max(axis=1)
        hw_steps += groups.shape[0]
        events += int((deg >= 2).sum())
        max_deg = max(max_deg, int(deg.max()))
    return BankReport(total, events, max_deg, hw_steps)


def verify_equivalence(rp: RecursionParams, tp: TemperingParams, seed_value: int,
                       cfg: LaneConfig, count: int, mode: OutputMode = OutputMode.UINT,
                       skip_barrier_at: int | None = None) -> bool:
    """Parallel outputs equal the sequential generator's, bit for bit."""
    par, _ = run_block(rp, tp, seed_value, cfg, count, mode, record_trace=False,
                       skip_barrier_at=skip_barrier_at)
    seq = generate(seed(rp, tp, seed_value), tp, count, mode)
    return bool(np.array_equal(par.view(np.uint32), seq.view(np.uint32)))
