"""Pairs (cases) bootstrap with classical and Qn-based standard errors."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from nise import stats
from nise.dataset import Dataset
from nise.errors import InvalidB, NiseError, TooManyFailures

DEFAULT_B = 1000
#: fresh index draws attempted for one resample before it counts as a failure
MAX_REDRAWS = 20


@dataclass(frozen=True)
class BootstrapResult:
    draws: np.ndarray  # (B - failures) x K
    se_sd: np.ndarray
    se_qn: np.ndarray
    failures: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "se_sd": self.se_sd.tolist(),
            "se_qn": self.se_qn.tolist(),
            "failures": self.failures,
            "seed": self.seed,
            "draws": int(self.draws.shape[0]),
        }


def substream(seed: int, index: int) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, index)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def _params(result) -> np.ndarray:
    return np.asarray(getattr(result, "params", result), dtype=np.float64).ravel()


def _one_resample(data: Dataset, estimator, seed: int, b: int) -> np.ndarray | None:
    rng = substream(seed, b)
    for _ in range(MAX_REDRAWS):
        rows = rng.integers(0, data.n, size=data.n)
        try:
            return _params(estimator(data.take(rows)))
        except (NiseError, ValueError):
            continue
    return None


def pairs_bootstrap(
    data: Dataset,
    estimator: Callable[[Dataset], object],
    B: int = DEFAULT_B,
    seed: int = 0,
    workers: int = 1,
) -> BootstrapResult:
    """Re-estimate on ``B`` row resamples drawn with replacement.

    Parameters
    ----------
    data : Dataset
    estimator : callable
        Maps a :class:`Dataset` to a fit exposing ``params`` (or to a
        coefficient vector directly).
    B : int
        Number of resamples.
    seed : int
        Resample ``b`` draws its rows from the substream ``(seed, b)``, so
        the result does not depend on ``workers``.
    workers : int
        Thread count for concurrent resamples.

    Raises
    ------
    TooManyFailures
        When more than ``B / 10`` resamples fail even after redrawing.
    """
    if isinstance(B, bool) or int(B) != B or B < 1:
        raise InvalidB(f"B must be a positive integer, got {B!r}")
    B = int(B)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(lambda b: _one_resample(data, estimator, seed, b), range(B)))
    else:
        out = [_one_resample(data, estimator, seed, b) for b in range(B)]

    kept = [p for p in out if p is not None]
    failures = B - len(kept)
    if failures > B / 10:
        raise TooManyFailures(f"{failures} of {B} resamples failed")
    draws = np.vstack(kept)
    if draws.shape[0] >= 2:
        se_sd = draws.std(axis=0, ddof=1)
        se_qn = np.array([stats.qn_scale(col) for col in draws.T])
    else:
        se_sd = se_qn = np.zeros(draws.shape[1])
    return BootstrapResult(draws, se_sd, se_qn, failures, seed)
