import numpy as np
from scipy import stats

from mtgpkit.mtgp import TemperingParams, generate, seed
from mtgpkit.smoke import SmokeResult, battery, chi_square_msb, monobit

from conftest import searched_tempered


def test_uniform_counts_give_zero_statistic():
    words = np.repeat(np.arange(256, dtype=np.uint64) << np.uint64(24), 10)
    res = chi_square_msb(words, 32)
    assert res.statistic == 0.0
    assert res.p_value == 1.0 and not res.passed  # too good to be true


def test_chi_square_matches_scipy():
    rng = np.random.default_rng(1)
    words = rng.integers(0, 2**32, size=50000, dtype=np.uint64)
    res = chi_square_msb(words, 32)
    counts = np.bincount((words >> np.uint64(24)).astype(np.int64), minlength=256)
    ref = stats.chisquare(counts)
    assert np.isclose(res.statistic, ref.statistic)
    assert np.isclose(res.p_value, ref.pvalue)


def test_monobit_flags_constant_stream():
    res = monobit(np.zeros(1000, dtype=np.uint64), 32)
    assert res.p_value < 1e-6 and not res.passed


def test_monobit_balanced():
    words = np.array([0x0F0F0F0F, 0xF0F0F0F0] * 100, dtype=np.uint64)
    assert monobit(words, 32).statistic == 0.0


def test_pass_interval():
    assert SmokeResult("x", 0, 0.5).passed
    assert not SmokeResult("x", 0, 1e-7).passed


def test_searched_generator_passes():
    rp, tp, _, _ = searched_tempered(521, 32)
    words = generate(seed(rp, tp, 1), tp, 10**6)
    assert all(r.passed for r in battery(words, 32))


def test_small_word_generator_passes():
    rp, tp, _, _ = searched_tempered(89, 8)
    words = generate(seed(rp, tp, 2), tp, 10**5)
    assert all(r.passed for r in battery(words, 8))


def test_untempered_also_runs():
    rp, _, _, _ = searched_tempered(521, 32)
    tp = TemperingParams.identity(32)
    assert len(battery(generate(seed(rp, tp, 3), tp, 1000), 32)) == 2
