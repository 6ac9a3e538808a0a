"""OLS, two-stage least squares and the non-instrumental (NISE) estimator.

NISE takes the characteristic vector ``c`` at the smallest root of
``|Y'MY - lambda Y'Y| = 0``, where ``M`` partials ``[X, 1]`` out of ``Y``.
With ``y_1`` normalized on the left-hand side the endogenous coefficients
are ``-c_g / c_1``; the exogenous coefficients come from regressing the
composite ``y_1 + sum_g (c_g / c_1) y_g`` on ``[X, 1]``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from nise import linalg
from nise.dataset import Dataset
from nise.diagnostics import TestRecord, bartlett_z, first_stage_f, sargan_j
from nise.errors import (
    EmptyExogenous,
    NoConvergence,
    NormalizationFailure,
    NotPositiveDefinite,
    OrderConditionFailed,
    RankDeficient,
    SingularA,
)

__all__ = [
    "Dataset",
    "OlsFit",
    "TslsFit",
    "NiseFit",
    "CanonicalResult",
    "ols_fit",
    "ols_equation",
    "tsls_fit",
    "canonical_correlations",
    "nise_fit",
    "nise_cov",
]

#: smallest eigenvalues in (-LAMBDA_CLAMP, 0] are reported as exactly 0
LAMBDA_CLAMP = 1e-12
#: |c_1| below this fraction of max|c| means y_1 is absent from the relation
NORMALIZATION_TOL = 1e-8


@dataclass(frozen=True)
class OlsFit:
    names: tuple[str, ...]
    coefficients: np.ndarray
    residuals: np.ndarray
    sigma2: float
    cov: np.ndarray
    r_squared: float

    @property
    def params(self) -> np.ndarray:
        return self.coefficients

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))


@dataclass(frozen=True)
class TslsFit:
    """Coefficients are ordered as RHS endogenous, exogenous, intercept."""

    names: tuple[str, ...]
    coefficients: np.ndarray
    residuals: np.ndarray
    sigma2: float
    cov: np.ndarray
    first_stage: tuple[TestRecord, ...]
    j: TestRecord | None

    @property
    def params(self) -> np.ndarray:
        return self.coefficients

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))


@dataclass(frozen=True)
class NiseFit:
    """Result of :func:`nise_fit`.

    ``params`` and ``cov`` share the order: endogenous coefficients
    ``-c_g/c_1`` for ``g = 2..G``, exogenous slopes, intercept.
    """

    names: tuple[str, ...]
    c: np.ndarray
    lambda_min: float
    endog_coefficients: np.ndarray
    coefficients: np.ndarray
    r_squared: np.ndarray
    sigma2: float
    residuals: np.ndarray
    fitted: np.ndarray
    cov: np.ndarray | None = None
    z: TestRecord | None = None
    warnings: tuple[str, ...] = ()

    @property
    def params(self) -> np.ndarray:
        return np.concatenate([self.endog_coefficients, self.coefficients])

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))


@dataclass(frozen=True)
class CanonicalResult:
    r_squared: np.ndarray  # descending
    coefficients: np.ndarray  # column i pairs with r_squared[i]
    eigenvalues: np.ndarray  # ascending, 1 - r_squared reversed


def _design(x: np.ndarray, intercept: bool) -> np.ndarray:
    return np.hstack([x, np.ones((x.shape[0], 1))]) if intercept else x


def ols_fit(y, x, intercept: bool = True, names=None) -> OlsFit:
    """Least-squares regression of ``y`` on ``x`` (plus a trailing intercept)."""
    y = np.asarray(y, dtype=np.float64).ravel()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    design = _design(x, intercept)
    n, k = design.shape
    if n <= k:
        raise RankDeficient(f"{n} observations for {k} coefficients")
    coef = linalg.least_squares(design, y)
    resid = y - design @ coef
    rss = float(resid @ resid)
    sigma2 = rss / (n - k)
    cov = sigma2 * linalg.gram_inverse(design)
    centered = y - y.mean() if intercept else y
    tss = float(centered @ centered)
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    if names is None:
        names = tuple(f"x{i + 1}" for i in range(x.shape[1]))
    names = tuple(names) + (("const",) if intercept else ())
    return OlsFit(names, coef, resid, sigma2, cov, r2)


def ols_equation(data: Dataset) -> OlsFit:
    """OLS of ``y_1`` on the other endogenous variables and ``X``."""
    x = np.hstack([data.endog[:, 1:], data.exog])
    return ols_fit(
        data.endog[:, 0], x, data.intercept, data.endog_names[1:] + data.exog_names
    )


def tsls_fit(data: Dataset, lhs: int = 0) -> TslsFit:
    """Two-stage least squares for the equation with ``endog[:, lhs]`` on the left.

    Residuals and ``sigma2`` use the original (not fitted) endogenous
    regressors; the covariance is ``sigma2 (Xhat'Xhat)^{-1}``.
    """
    rhs = [g for g in range(data.G) if g != lhs]
    if data.L < len(rhs):
        raise OrderConditionFailed(
            f"{data.L} instruments for {len(rhs)} right-hand endogenous variables"
        )
    y = data.endog[:, lhs]
    y_rhs = data.endog[:, rhs]
    if rhs:
        z = data.instrument_design()
        fitted = z @ linalg.least_squares(z, y_rhs)
    else:
        fitted = y_rhs
    ones = data.exog_design()[:, data.H :]
    x_hat = np.hstack([fitted, data.exog, ones])
    x_orig = np.hstack([y_rhs, data.exog, ones])
    n, k = x_hat.shape
    coef = linalg.least_squares(x_hat, y)
    resid = y - x_orig @ coef
    sigma2 = float(resid @ resid) / (n - k)
    cov = sigma2 * linalg.gram_inverse(x_hat)
    names = (
        tuple(data.endog_names[g] for g in rhs)
        + data.exog_names
        + (("const",) if data.intercept else ())
    )
    fs = tuple(first_stage_f(data, g) for g in rhs) if data.L else ()
    fit = TslsFit(names, coef, resid, sigma2, cov, fs, None)
    if data.L > len(rhs):
        fit = dataclasses.replace(fit, j=sargan_j(fit, data))
    return fit


def _moment_blocks(y: np.ndarray, x: np.ndarray, demean: bool):
    """``(Y'MY, Y'Y)`` with both blocks centered when ``demean``."""
    if demean:
        y = y - y.mean(axis=0)
        x = x - x.mean(axis=0)
    my = linalg.residual_maker(x, y) if x.shape[1] else y
    return my.T @ my, y.T @ y


def _eigen_core(y: np.ndarray, x: np.ndarray, demean: bool) -> linalg.EigenSolution:
    a, b = _moment_blocks(y, x, demean)
    try:
        return linalg.gen_sym_eig(0.5 * (a + a.T), b)
    except NotPositiveDefinite as exc:
        raise RankDeficient(f"endogenous block is rank deficient: {exc}") from exc


def canonical_correlations(y, x, demean: bool = True) -> CanonicalResult:
    """Squared canonical correlations between the columns of ``y`` and ``x``.

    Solved as the generalized symmetric problem ``Y'MY v = lambda Y'Y v``,
    with ``r_i^2 = 1 - lambda_i``.
    """
    y = linalg.as_matrix(y, "Y")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[1] < 1:
        raise EmptyExogenous("canonical correlations need at least one X column")
    w, v = _eigen_core(y, x, demean)
    # ascending roots give descending correlations, already paired with v
    return CanonicalResult(np.clip(1.0 - w, 0.0, 1.0), v, w)


def nise_fit(data: Dataset) -> NiseFit:
    """Fit the first equation of ``data`` by NISE, with Z test and covariance attached."""
    if data.H == 0:
        raise EmptyExogenous(
            "equation has no exogenous variables: Y'MY equals Y'Y, every root "
            "of the determinantal equation is 1 and the relation is not identified"
        )
    w, v = _eigen_core(data.endog, data.exog, data.intercept)
    warnings: list[str] = []
    lam = float(w[0])
    if lam < 0.0:
        if lam <= -LAMBDA_CLAMP:
            raise NoConvergence(f"smallest eigenvalue {lam:.3g} is negative")
        warnings.append(f"lambda_min {lam:.3g} clamped to 0")
        lam = 0.0
    w = np.clip(w, 0.0, 1.0)
    w[0] = lam

    c = v[:, 0].copy()
    if abs(c[0]) < NORMALIZATION_TOL * np.max(np.abs(c)):
        raise NormalizationFailure(
            f"coefficient of {data.endog_names[0]} in the detected relation is "
            f"{c[0]:.3g}; it cannot be normalized to 1"
        )
    if c[0] < 0:
        c = -c
    endog_coef = -c[1:] / c[0]
    composite = data.endog @ (c / c[0])
    ols = ols_fit(composite, data.exog, data.intercept, data.exog_names)

    r2 = 1.0 - w
    z = None
    if data.G >= 2 and data.H >= 2:
        z = bartlett_z(r2, data.n, data.G, data.H)
    names = data.endog_names[1:] + ols.names
    fit = NiseFit(
        names=names,
        c=c,
        lambda_min=lam,
        endog_coefficients=endog_coef,
        coefficients=ols.coefficients,
        r_squared=r2,
        sigma2=ols.sigma2,
        residuals=ols.residuals,
        fitted=composite - ols.residuals,
        z=z,
        warnings=tuple(warnings),
    )
    return dataclasses.replace(fit, cov=nise_cov(fit, data))


def nise_cov(fit: NiseFit, data: Dataset) -> np.ndarray:
    """Asymptotic covariance of ``(-c_2/c_1, ..., -c_G/c_1, b)``.

    The slope block is ``sigma2 / n * A^{-1}`` with ``A`` the covariance
    matrix (divisor ``n``) of ``(lambda_min y_g - e_g, X)``, ``e_g`` being
    ``y_g`` with ``[X, 1]`` partialled out.  The intercept is
    ``mean(composite) - means' theta``, so its row follows by the delta
    method plus the ``sigma2 / n`` sampling variance of the mean; for
    ``G = 1`` this is the textbook OLS intercept variance.
    """
    n = data.n
    y_rest = data.endog[:, 1:]
    e = linalg.residual_maker(data.exog_design(), y_rest) if y_rest.shape[1] else y_rest
    block = np.hstack([fit.lambda_min * y_rest - e, data.exog])
    centered = block - block.mean(axis=0) if data.intercept else block
    a = centered.T @ centered / n
    try:
        L = linalg.cholesky(0.5 * (a + a.T))
    except NotPositiveDefinite as exc:
        raise SingularA(f"covariance matrix A is singular: {exc}") from exc
    linv = sla.solve_triangular(L, np.eye(L.shape[0]), lower=True)
    v = fit.sigma2 / n * (linv.T @ linv)
    if not data.intercept:
        return v
    d = np.concatenate([y_rest.mean(axis=0), data.exog.mean(axis=0)])
    vd = v @ d
    k = v.shape[0]
    out = np.empty((k + 1, k + 1))
    out[:k, :k] = v
    out[:k, k] = out[k, :k] = -vd
    out[k, k] = fit.sigma2 / n + d @ vd
    return out
