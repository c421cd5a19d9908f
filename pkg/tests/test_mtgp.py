import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mtgpkit.f2core import F2Matrix
from mtgpkit.mtgp import (
    GeneratorState,
    OutputMode,
    RecursionParams,
    TemperingParams,
    bitmask,
    bits_to_float,
    build_table,
    derive_sizes,
    generate,
    next_output,
    recursion_step,
    seed,
    step_raw,
    temper,
    temper_float,
)

from conftest import searched, searched_tempered


def naive_step(p, w, r, sh1, sh2, rows, x0, x1, xm):
    # second, deliberately plain implementation of the recursion
    full = (1 << w) - 1
    low = (1 << r) - 1
    t = x1 ^ (x0 & (full - low))
    t = (t ^ (t << sh1)) & full
    u = t ^ (xm >> sh2)
    out = u
    for k in range(4):
        if (u >> (3 - k)) & 1:
            out ^= rows[k]
    return out


class TestSizes:
    @pytest.mark.parametrize("p,w,expected", [
        (11213, 32, (351, 19)), (23209, 32, (726, 23)), (13, 4, (4, 3)),
    ])
    def test_derive_sizes(self, p, w, expected):
        assert derive_sizes(p, w) == expected

    def test_degenerate_layout(self):
        with pytest.raises(ValueError, match="degenerate layout"):
            derive_sizes(13, 8)

    def test_non_mersenne_rejected(self):
        with pytest.raises(ValueError):
            derive_sizes(100, 32)

    @pytest.mark.parametrize("w,r,mask", [(32, 19, 0xFFF80000), (32, 0, 0xFFFFFFFF), (4, 3, 0b1000)])
    def test_bitmask(self, w, r, mask):
        assert bitmask(w, r) == mask
        assert bin(mask).count("1") == w - r


class TestTables:
    def test_row_order(self):
        m = F2Matrix((0x1, 0x2, 0x4, 0x8), 4)
        tbl = build_table(m)
        assert tbl[0] == 0
        assert tbl[0b1000] == 0x1  # nibble MSB selects row 0
        assert tbl[0b0001] == 0x8

    @given(st.lists(st.integers(0, 2**32 - 1), min_size=4, max_size=4))
    def test_linear(self, rows):
        tbl = build_table(F2Matrix(tuple(rows), 32))
        assert tbl[0] == 0
        for i in range(16):
            for j in range(16):
                assert tbl[i ^ j] == tbl[i] ^ tbl[j]

    @given(st.lists(st.integers(0, 2**32 - 1), min_size=4, max_size=4))
    def test_float_table(self, rows):
        tp = TemperingParams.from_rows(rows, 32)
        for t, s in zip(tp.tmptbl, tp.sngltbl):
            assert s >> 23 == 0b001111111
            assert s & 0x7FFFFF == t >> 9

    def test_no_float_table_below_32_bits(self):
        assert TemperingParams.identity(8).sngltbl is None


class TestRecursion:
    def test_zero_inputs(self):
        rp = RecursionParams.create(11213, 32, 5, 13, 4, [0x12345678, 1, 2, 3])
        assert recursion_step(rp, 0, 0, 0) == 0

    def test_single_bit_case(self):
        rp = RecursionParams.create(11213, 32, 5, 13, 4, [0, 0, 0, 0])
        assert rp.r == 19
        assert recursion_step(rp, 0, 1, 0) == 0x2001

    def test_against_naive_oracle(self):
        rng = random.Random(4)
        rows = [rng.getrandbits(32) for _ in range(4)]
        rp = RecursionParams.create(11213, 32, 5, 13, 4, rows)
        for _ in range(10**4):
            x0, x1, xm = (rng.getrandbits(32) for _ in range(3))
            assert recursion_step(rp, x0, x1, xm) == naive_step(11213, 32, 19, 13, 4, rows, x0, x1, xm)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            RecursionParams.create(13, 4, 4, 2, 1, [0] * 4)  # M must be < N
        with pytest.raises(ValueError):
            RecursionParams.create(13, 4, 2, 0, 1, [0] * 4)  # sh1 > 0
        with pytest.raises(ValueError):
            RecursionParams(13, 4, 5, 2, 3, 2, 1, F2Matrix((0,) * 4, 4))  # wrong N


class TestTempering:
    def test_zero_table_is_identity(self):
        tp = TemperingParams.identity(32)
        assert temper(0xDEADBEEF, 0x12345678, tp.tmptbl, 32) == 0xDEADBEEF

    def test_zero_aux_word(self):
        tp = TemperingParams.from_rows([1, 2, 3, 4], 32)
        assert temper(0xABC, 0, tp.tmptbl, 32) == 0xABC

    def test_hand_traced_index(self):
        tbl = list(range(100, 116))
        # t = 0x00010101 ^ 0x1 = 0x00010100; t ^= t >> 8 -> 0x00010001; nibble 1
        assert temper(0, 0x00010101, tbl, 32) == tbl[1]

    def test_float_examples(self):
        tbl = [0x3F800000] * 16
        assert temper_float(0, 0, tbl) == 0x3F800000
        assert bits_to_float(0x3F800000) == 1.0
        assert temper_float(0xFFFFFFFF, 0, tbl) == 0x3FFFFFFF
        assert bits_to_float(0x3FFFFFFF) == pytest.approx(1.99999988)

    def test_float_requires_32_bits(self):
        with pytest.raises(ValueError, match="float mode requires 32-bit words"):
            temper_float(0, 0, [0] * 16, 16)

    @given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1),
           st.lists(st.integers(0, 2**32 - 1), min_size=4, max_size=4))
    def test_float_top_bits(self, x, y, rows):
        tp = TemperingParams.from_rows(rows, 32)
        assert temper_float(x, y, tp.sngltbl) >> 23 == 0b001111111

    @given(st.integers(0, 2**32 - 1), st.lists(st.integers(0, 2**32 - 1), min_size=4, max_size=4))
    def test_bijective_for_fixed_aux(self, y, rows):
        tbl = TemperingParams.from_rows(rows, 32).tmptbl
        a, b = 0x1234, 0x4321
        assert temper(a, y, tbl, 32) ^ temper(b, y, tbl, 32) == a ^ b


class TestSeed:
    rp = RecursionParams.create(11213, 32, 5, 13, 4, [0, 0, 0, 0])

    def test_first_words(self):
        s = seed(self.rp, None, 1)
        assert s.buf[:2] == [1, 0x6C078966]
        assert s.buf[2] == (1812433253 * (0x6C078966 ^ (0x6C078966 >> 30)) + 2) & 0xFFFFFFFF

    def test_seed_zero_is_valid(self):
        s = seed(self.rp, None, 0)
        assert s.buf[1] == 1
        assert not s.significant_is_zero()

    def test_deterministic(self):
        assert seed(self.rp, None, 99).buf == seed(self.rp, None, 99).buf

    def test_all_zero_significant_state_gets_msb(self):
        rp = RecursionParams.create(13, 4, 2, 2, 1, [0, 0, 0, 0])
        for s in range(16):
            state = seed(rp, None, s)
            assert not state.significant_is_zero()


class TestStream:
    def test_first_output_is_o_n(self, p13):
        rp, tp, _, _ = p13
        state = seed(rp, tp, 5)
        words = list(state.buf)
        x = recursion_step(rp, words[0], words[1], words[rp.m])
        expected = temper(x, words[rp.m - 1], tp.tmptbl, rp.wordsize)
        assert next_output(state, tp) == expected

    def test_recursion_identity_holds(self):
        rp, _ = searched(89, 8)
        state = seed(rp, None, 3)
        hist = list(state.words())
        for _ in range(10**4):
            x, _ = step_raw(state)
            hist.append(x)
        n, m = rp.n, rp.m
        for i in range(len(hist) - n):
            assert hist[i + n] == recursion_step(rp, hist[i], hist[i + 1], hist[i + m])

    def test_compiled_matches_scalar(self):
        rp, tp, _, _ = searched_tempered(89, 8)
        a, b = seed(rp, tp, 11), seed(rp, tp, 11)
        scalar = [next_output(a, tp) for _ in range(3000)]
        assert generate(b, tp, 3000).tolist() == scalar
        assert a.buf == b.buf and a.idx == b.idx

    def test_float_modes_match_scalar(self):
        rp, _ = searched(521, 32)
        tp = TemperingParams.from_rows([0x9ABCDEF0, 0x12345678, 0x0F0F0F0F, 0xCAFEBABE], 32)
        a, b = seed(rp, tp, 2), seed(rp, tp, 2)
        f12 = generate(a, tp, 500, OutputMode.FLOAT12)
        assert f12.tolist() == [next_output(b, tp, OutputMode.FLOAT12) for _ in range(500)]
        c = seed(rp, tp, 2)
        f01 = generate(c, tp, 500, OutputMode.FLOAT01)
        assert np.array_equal(f01, f12.view(np.float32) - np.float32(1.0))
        assert ((f12.view(np.float32) >= 1.0) & (f12.view(np.float32) < 2.0)).all()
        assert (f01 * np.float32(2**23) == np.floor(f01 * np.float32(2**23))).all()

    def test_linearity(self):
        rp, _ = searched(89, 8)
        tp = TemperingParams.identity(8)
        rng = random.Random(8)
        a = [rng.getrandbits(8) for _ in range(rp.n)]
        b = [rng.getrandbits(8) for _ in range(rp.n)]
        ab = [x ^ y for x, y in zip(a, b)]
        out = [generate(GeneratorState(rp, s), tp, 1000) for s in (a, b, ab)]
        assert np.array_equal(out[0] ^ out[1], out[2])

    def test_zero_state_is_fixed(self):
        rp, _ = searched(89, 8)
        words = [0] * rp.n
        words[0] = (1 << rp.r) - 1  # only don't-care bits set
        out = generate(GeneratorState(rp, words), TemperingParams.identity(8), 500)
        assert not out.any()

    def test_float_mode_rejected_for_small_words(self):
        rp, _ = searched(89, 8)
        with pytest.raises(ValueError, match="32-bit"):
            generate(seed(rp, None, 1), TemperingParams.identity(8), 4, OutputMode.FLOAT12)


@pytest.mark.parametrize("p,w", [(13, 4), (17, 8), (19, 8)])
def test_full_period_small(p, w):
    rp, _ = searched(p, w)
    tp = TemperingParams.identity(w)
    start = seed(rp, tp, 1)
    state = start.copy()
    generate(state, tp, 1)
    assert not state.same_state(start)
    generate(state, tp, (1 << p) - 2)
    assert state.same_state(start)
