"""A deliberately small statistical smoke battery for generated streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special, stats

P_LOW = 1e-6
P_HIGH = 1 - 1e-6
# Below this exponent the period is too short: 10^6 outputs wrap many times and
# the counts become exactly uniform, which the upper p-value bound rejects.
MIN_EXPONENT = 64


@dataclass(frozen=True)
class SmokeResult:
    name: str
    statistic: float
    p_value: float

    @property
    def passed(self) -> bool:
        return P_LOW <= self.p_value <= P_HIGH


def chi_square_msb(words: np.ndarray, w: int, bits: int = 8) -> SmokeResult:
    """Chi-square uniformity of the ``bits`` most significant bits of each word."""
    bits = min(bits, w)
    vals = (np.asarray(words, dtype=np.uint64) >> np.uint64(w - bits)).astype(np.int64)
    counts = np.bincount(vals, minlength=1 << bits)
    expected = len(vals) / (1 << bits)
    stat = float(((counts - expected) ** 2 / expected).sum())
    return SmokeResult(f"chi2_msb{bits}", stat, float(stats.chi2.sf(stat, (1 << bits) - 1)))


def monobit(words: np.ndarray, w: int) -> SmokeResult:
    """Balance of ones over all bits, two-sided normal approximation."""
    words = np.asarray(words, dtype=np.uint64)
    ones = 0
    for b in range(w):
        ones += int(((words >> np.uint64(b)) & np.uint64(1)).sum())
    n = len(words) * w
    z = (2 * ones - n) / np.sqrt(n)
    return SmokeResult("monobit", float(z), float(special.erfc(abs(z) / np.sqrt(2))))


def battery(words: np.ndarray, w: int) -> list[SmokeResult]:
    return [chi_square_msb(words, w), monobit(words, w)]
