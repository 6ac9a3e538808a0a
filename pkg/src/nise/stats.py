"""Scalar statistics: medians, the Qn robust scale, tail probabilities, correlation."""

from __future__ import annotations

import numpy as np
from scipy import special

from nise.errors import EmptyInput, InvalidDf, TooFewPoints, ZeroVariance

#: asymptotic consistency constant of Qn at the normal
QN_CONSTANT = 2.2219
# small-sample correction factors d_n for n = 2..9 (Croux & Rousseeuw 1992)
_QN_SMALL = {2: 0.399, 3: 0.994, 4: 0.512, 5: 0.844, 6: 0.611, 7: 0.857, 8: 0.669, 9: 0.872}
# largest band of pairwise gaps enumerated explicitly during selection
_BAND_LIMIT = 200_000


def _sample(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64).ravel()
    if a.size == 0:
        raise EmptyInput("empty sample")
    if not np.all(np.isfinite(a)):
        raise ValueError("sample contains non-finite values")
    return a


def median(x) -> float:
    return float(np.median(_sample(x)))


def qn_correction(n: int) -> float:
    """Finite-sample factor ``d_n`` that makes Qn unbiased at the normal."""
    if n in _QN_SMALL:
        return _QN_SMALL[n]
    if n % 2:
        return n / (n + 1.4)
    return n / (n + 3.8)


def _gaps_at_most(xs: np.ndarray, t: float) -> np.ndarray:
    """Per row ``i``, the number of ``j > i`` with ``xs[j] - xs[i] <= t`` (``xs`` sorted).

    Differences are evaluated exactly as a direct enumeration would compute
    them; floating subtraction of a fixed ``xs[i]`` is monotone in ``xs[j]``.
    """
    n = xs.size
    first = np.arange(1, n + 1)
    lo = first.copy()
    hi = np.full(n, n)
    active = lo < hi
    while np.any(active):
        mid = (lo + hi) // 2
        gt = xs[np.minimum(mid, n - 1)] - xs > t
        hi = np.where(active & gt, mid, hi)
        lo = np.where(active & ~gt, mid + 1, lo)
        active = lo < hi
    return lo - first


def _kth_gap(xs: np.ndarray, k: int) -> float:
    """k-th smallest (1-based) of ``xs[j] - xs[i]`` over ``i < j``, for sorted ``xs``."""
    n = xs.size
    if _gaps_at_most(xs, 0.0).sum() >= k:
        return 0.0
    lo_t, hi_t = 0.0, float(xs[-1] - xs[0])
    c_lo, c_hi = _gaps_at_most(xs, lo_t), _gaps_at_most(xs, hi_t)
    while c_hi.sum() - c_lo.sum() > _BAND_LIMIT:
        mid = 0.5 * (lo_t + hi_t)
        if not lo_t < mid < hi_t:
            # adjacent floats: every gap in the band equals hi_t
            return hi_t
        c_mid = _gaps_at_most(xs, mid)
        if c_mid.sum() >= k:
            hi_t, c_hi = mid, c_mid
        else:
            lo_t, c_lo = mid, c_mid

    lengths = c_hi - c_lo
    rows = np.repeat(np.arange(n), lengths)
    offsets = np.arange(lengths.sum()) - np.repeat(np.cumsum(lengths) - lengths, lengths)
    cols = rows + 1 + c_lo[rows] + offsets
    gaps = xs[cols] - xs[rows]
    r = k - int(c_lo.sum())
    return float(np.partition(gaps, r - 1)[r - 1])


def qn_scale(x) -> float:
    """Rousseeuw-Croux Qn scale.

    ``Qn = 2.2219 * d_n * {|x_i - x_j|; i < j}_(k)`` with ``k = C(h, 2)``
    and ``h = n // 2 + 1``.  Selection of the order statistic runs in
    ``O(n log^2 n)`` time and bounded memory.
    """
    a = _sample(x)
    n = a.size
    if n < 2:
        raise TooFewPoints(f"Qn needs at least 2 points, got {n}")
    h = n // 2 + 1
    k = h * (h - 1) // 2
    return QN_CONSTANT * qn_correction(n) * _kth_gap(np.sort(a), k)


def _check_df(df, name: str = "df") -> int:
    if isinstance(df, bool) or int(df) != df or df < 1:
        raise InvalidDf(f"{name} must be a positive integer, got {df!r}")
    return int(df)


def chi_square_sf(x: float, df: int) -> float:
    """Upper-tail chi-square probability, ``Q(df/2, x/2)``."""
    df = _check_df(df)
    if not x >= 0:
        raise ValueError(f"statistic must be >= 0, got {x}")
    return float(min(1.0, max(0.0, special.gammaincc(0.5 * df, 0.5 * x))))


def f_sf(x: float, df1: int, df2: int) -> float:
    """Upper-tail F probability, ``I_{df2/(df2 + df1 x)}(df2/2, df1/2)``."""
    df1 = _check_df(df1, "df1")
    df2 = _check_df(df2, "df2")
    if not x >= 0:
        raise ValueError(f"statistic must be >= 0, got {x}")
    if x == 0:
        return 1.0
    z = df2 / (df2 + df1 * x)
    return float(min(1.0, max(0.0, special.betainc(0.5 * df2, 0.5 * df1, z))))


def pearson_corr(x, y) -> float:
    a, b = _sample(x), _sample(y)
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size < 2:
        raise TooFewPoints("correlation needs at least 2 points")
    da, db = a - a.mean(), b - b.mean()
    sa, sb = np.sqrt(da @ da), np.sqrt(db @ db)
    if sa == 0.0 or sb == 0.0:
        raise ZeroVariance("correlation undefined for a constant sample")
    return float(np.clip((da @ db) / (sa * sb), -1.0, 1.0))
