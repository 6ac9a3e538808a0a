"""Immutable container for the endogenous, exogenous and instrument blocks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _block(a, n: int | None, name: str) -> np.ndarray:
    if a is None:
        if n is None:
            raise ValueError(f"cannot infer row count for empty {name} block")
        return np.zeros((n, 0))
    m = np.array(a, dtype=np.float64)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite values")
    m.setflags(write=False)
    return m


def _names(given, k: int, prefix: str) -> tuple[str, ...]:
    if given is None:
        return tuple(f"{prefix}{i + 1}" for i in range(k))
    names = tuple(str(s) for s in given)
    if len(names) != k:
        raise ValueError(f"expected {k} {prefix} names, got {len(names)}")
    return names


@dataclass(frozen=True)
class Dataset:
    """n observations of ``Y`` (n x G), ``X`` (n x H) and optional instruments ``W`` (n x L).

    ``exog`` holds only non-constant columns; with ``intercept=True`` a
    column of ones is appended inside every regression and projection.
    The first endogenous column is the normalized left-hand variable.
    """

    endog: np.ndarray
    exog: np.ndarray | None = None
    instruments: np.ndarray | None = None
    endog_names: tuple[str, ...] | None = None
    exog_names: tuple[str, ...] | None = None
    instrument_names: tuple[str, ...] | None = None
    intercept: bool = True
    _ones: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        endog = _block(self.endog, None, "endog")
        n = endog.shape[0]
        exog = _block(self.exog, n, "exog")
        inst = _block(self.instruments, n, "instruments")
        for name, blk in (("exog", exog), ("instruments", inst)):
            if blk.shape[0] != n:
                raise ValueError(f"{name} has {blk.shape[0]} rows, endog has {n}")
        if endog.shape[1] < 1:
            raise ValueError("need at least one endogenous variable")
        if n <= endog.shape[1] + exog.shape[1] + 1:
            raise ValueError(
                f"n = {n} too small for G = {endog.shape[1]}, H = {exog.shape[1]}"
            )
        set_ = object.__setattr__
        set_(self, "endog", endog)
        set_(self, "exog", exog)
        set_(self, "instruments", inst)
        set_(self, "endog_names", _names(self.endog_names, endog.shape[1], "y"))
        set_(self, "exog_names", _names(self.exog_names, exog.shape[1], "x"))
        set_(self, "instrument_names", _names(self.instrument_names, inst.shape[1], "w"))
        set_(self, "_ones", np.ones((n, 1 if self.intercept else 0)))

    @property
    def n(self) -> int:
        return self.endog.shape[0]

    @property
    def G(self) -> int:
        return self.endog.shape[1]

    @property
    def H(self) -> int:
        return self.exog.shape[1]

    @property
    def L(self) -> int:
        return self.instruments.shape[1]

    def exog_design(self) -> np.ndarray:
        """``[X, 1]`` (or ``X`` alone without intercept)."""
        return np.hstack([self.exog, self._ones])

    def instrument_design(self) -> np.ndarray:
        """``[X, W, 1]``, the full first-stage design."""
        return np.hstack([self.exog, self.instruments, self._ones])

    def take(self, rows) -> Dataset:
        """Row subset (with repetition allowed) keeping all blocks aligned."""
        rows = np.asarray(rows)
        return Dataset(
            self.endog[rows],
            self.exog[rows],
            self.instruments[rows],
            self.endog_names,
            self.exog_names,
            self.instrument_names,
            self.intercept,
        )
