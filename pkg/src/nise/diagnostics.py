"""Specification tests: Bartlett's Z for NISE, first-stage F and Sargan J for TSLS."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from nise import stats
from nise.dataset import Dataset
from nise.errors import InvalidCorrelation, JustIdentified, NoInstruments, PreconditionFailed
from nise.linalg import residual_maker

if TYPE_CHECKING:
    from nise.estimators import TslsFit

_CLAMP = 1e-12


@dataclass(frozen=True)
class TestRecord:
    """A test statistic with its degrees of freedom and upper-tail p-value."""

    __test__ = False  # keep pytest from collecting this class

    test_name: str
    statistic: float
    df: tuple[int, ...]
    p_value: float

    def to_dict(self) -> dict:
        return {
            "test": self.test_name,
            "statistic": self.statistic,
            "df": list(self.df),
            "p_value": self.p_value,
        }


def bartlett_z(r_squared, n: int, G: int, H: int) -> TestRecord:
    """Bartlett's chi-square approximation for "exactly one relation between Y and X".

    Parameters
    ----------
    r_squared : sequence of float
        Squared canonical correlations in descending order; at least
        ``min(G, H)`` entries.
    n, G, H : int
        Sample size, number of endogenous and of non-constant exogenous
        variables.
    """
    if G < 2 or H < 2:
        raise PreconditionFailed(f"Z test needs G >= 2 and H >= 2, got G = {G}, H = {H}")
    m = min(G, H)
    r2 = np.asarray(r_squared, dtype=np.float64).ravel()
    if r2.size < m:
        raise ValueError(f"need {m} squared canonical correlations, got {r2.size}")
    r2 = np.where((r2 < 0) & (r2 > -_CLAMP), 0.0, r2)
    if np.any(r2 < 0) or np.any(r2 > 1) or np.any(r2[1:m] >= 1):
        raise InvalidCorrelation(f"squared canonical correlations out of range: {r2[:m]}")
    factor = n - 1 - (G + H + 1) / 2
    z = max(0.0, float(-factor * np.sum(np.log1p(-r2[1:m]))))
    df = (G - 1) * (H - 1)
    return TestRecord("Z", z, (df,), stats.chi_square_sf(z, df))


def first_stage_f(data: Dataset, endog_rhs: int) -> TestRecord:
    """Joint exclusion F test of the instruments in the first-stage regression of ``endog_rhs``."""
    if data.L < 1:
        raise NoInstruments("first-stage F test needs at least one instrument")
    y = data.endog[:, endog_rhs]
    rss_u = float(np.sum(residual_maker(data.instrument_design(), y) ** 2))
    rss_r = float(np.sum(residual_maker(data.exog_design(), y) ** 2))
    df1 = data.L
    df2 = data.n - data.H - data.L - int(data.intercept)
    gain = max(0.0, rss_r - rss_u)
    if gain == 0.0:
        f = 0.0
    elif rss_u == 0.0:
        return TestRecord("F", float("inf"), (df1, df2), 0.0)
    else:
        f = (gain / df1) / (rss_u / df2)
    return TestRecord("F", f, (df1, df2), stats.f_sf(f, df1, df2))


def sargan_j(tsls: TslsFit, data: Dataset) -> TestRecord:
    """Sargan's ``n R^2`` from regressing TSLS structural residuals on ``[X, W, 1]``."""
    df = data.L - (data.G - 1)
    if df <= 0:
        raise JustIdentified(f"J test needs overidentification, df = {df}")
    e = np.asarray(tsls.residuals, dtype=np.float64)
    rss = float(np.sum(residual_maker(data.instrument_design(), e) ** 2))
    centered = e - e.mean() if data.intercept else e
    tss = float(centered @ centered)
    r2 = 0.0 if tss == 0.0 else min(1.0, max(0.0, 1.0 - rss / tss))
    j = data.n * r2
    return TestRecord("J", j, (df,), stats.chi_square_sf(j, df))
