"""Spectral analysis of the detrended correlation matrix.

Builds the N x N coefficient matrix for a window of aligned return series,
decomposes it, measures eigenvector localization through the Shannon
entropy of squared components, and removes the leading mode's fitted
contribution from every series to produce residual returns.

Eigenvalue/eigenvector conventions: eigenvalues are sorted descending and
each eigenvector is oriented so that its largest-magnitude component is
positive.  For q != 2 the matrix need not be positive semidefinite;
negative eigenvalues are reported as-is.  Eigenvalue gaps below 1e-8 mark
the summary as degenerate: entropies inside a degenerate eigenspace are
solver-dependent and excluded from cross-run determinism guarantees.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data import ReturnMatrix
from .dfa import DetrendConfig, _check_scale, fluctuation_matrices
from .errors import (
    CorrelationBoundWarning,
    EigensolverError,
    ShapeMismatchError,
    ZeroVarianceError,
)

_DEGENERATE_GAP = 1e-8


@dataclass(frozen=True)
class DetrendedCorrelationMatrix:
    """Symmetric unit-diagonal matrix of pairwise coefficients."""

    values: np.ndarray
    labels: tuple[str, ...]
    q: float
    scale: int
    window: int | None = None
    bound_exceeded: bool = False

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class SpectralSummary:
    """Eigenstructure of one correlation matrix."""

    eigenvalues: np.ndarray    # descending, length N
    eigenvectors: np.ndarray   # column i pairs with eigenvalues[i]
    entropies: np.ndarray      # Shannon entropy of squared components
    max_components: np.ndarray # largest squared component per vector
    degenerate: bool = False


@dataclass(frozen=True)
class ResidualReturns:
    """Per-asset least-squares removal of the leading eigensignal."""

    residuals: np.ndarray   # (N, T)
    alpha: np.ndarray       # slope per asset
    beta: np.ndarray        # intercept per asset
    eigensignal: np.ndarray # (T,)


def _unpack(returns) -> tuple[np.ndarray, tuple[str, ...]]:
    if isinstance(returns, ReturnMatrix):
        return returns.values, returns.tickers
    values = np.ascontiguousarray(returns, dtype=np.float64)
    if values.ndim != 2:
        raise ShapeMismatchError(f"expected (N, T) returns, got shape {values.shape}")
    return values, tuple(str(i) for i in range(values.shape[0]))


def correlation_matrices(
    returns,
    scale: int,
    poly_order: int,
    q_values,
    window: int | None = None,
) -> dict[float, DetrendedCorrelationMatrix]:
    """Coefficient matrices for several q values sharing one detrending pass."""
    values, labels = _unpack(returns)
    if values.shape[0] < 2:
        raise ShapeMismatchError("need at least 2 series")
    _check_scale(values.shape[1], DetrendConfig(scale=scale, poly_order=poly_order))
    fmats = fluctuation_matrices(values, scale, poly_order, q_values, labels=labels)
    out = {}
    for q, fmat in fmats.items():
        diag = np.diag(fmat).copy()
        if np.any(diag <= 0):
            bad = labels[int(np.argmax(diag <= 0))]
            raise ZeroVarianceError(
                f"{bad} has zero detrended variance at scale {scale}", label=bad
            )
        rho = fmat / np.sqrt(np.outer(diag, diag))
        np.fill_diagonal(rho, 1.0)
        exceeded = bool(np.any(np.abs(rho) > 1.0))
        if exceeded and q != 2.0:
            warnings.warn(
                f"correlation matrix at q={q}, s={scale} has entries outside [-1, 1]",
                CorrelationBoundWarning,
                stacklevel=2,
            )
        out[q] = DetrendedCorrelationMatrix(
            values=rho, labels=labels, q=q, scale=scale,
            window=window, bound_exceeded=exceeded,
        )
    return out


def correlation_matrix(returns, cfg: DetrendConfig, window: int | None = None) -> DetrendedCorrelationMatrix:
    """Coefficient matrix for all unordered pairs of a return window."""
    return correlation_matrices(
        returns, cfg.scale, cfg.poly_order, [cfg.q], window=window
    )[cfg.q]


def eigendecompose(c: DetrendedCorrelationMatrix) -> SpectralSummary:
    """Full symmetric eigendecomposition, eigenvalues descending.

    Each eigenvector is sign-fixed so its largest-magnitude component is
    positive, which makes summaries comparable across windows.
    """
    mat = c.values
    if not np.all(np.isfinite(mat)):
        raise EigensolverError("matrix contains non-finite entries")
    try:
        eigvals, eigvecs = np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(
            f"eigensolver failed: {exc}; dim={mat.shape[0]}, "
            f"max|entry|={np.abs(mat).max():.3g}, "
            f"asym={np.abs(mat - mat.T).max():.3g}"
        ) from exc
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    for i in range(eigvecs.shape[1]):
        col = eigvecs[:, i]
        if col[int(np.argmax(np.abs(col)))] < 0:
            eigvecs[:, i] = -col
    squared = eigvecs**2
    max_components = squared.max(axis=0)
    entropies = np.array([_entropy_of_squares(squared[:, i]) for i in range(squared.shape[1])])
    gaps = -np.diff(eigvals)
    return SpectralSummary(
        eigenvalues=eigvals,
        eigenvectors=eigvecs,
        entropies=entropies,
        max_components=max_components,
        degenerate=bool(gaps.size and gaps.min() < _DEGENERATE_GAP),
    )


def _entropy_of_squares(p: np.ndarray) -> float:
    nz = p > 0.0
    return float(-(p[nz] * np.log(p[nz])).sum())


def shannon_entropy(v) -> float:
    """Localization entropy of a unit vector: 0 = single component,
    ln N = uniform."""
    vec = np.asarray(v, dtype=np.float64)
    norm = np.sqrt(vec @ vec)
    if abs(norm - 1.0) > 1e-9:
        raise ShapeMismatchError(f"vector is not unit length: |v| = {norm!r}")
    return _entropy_of_squares(vec**2)


def eigensignal(returns, v1) -> np.ndarray:
    """Leading-mode portfolio signal: component-weighted sum of the series."""
    values, _ = _unpack(returns)
    vec = np.asarray(v1, dtype=np.float64)
    if vec.ndim != 1 or vec.size != values.shape[0]:
        raise ShapeMismatchError(
            f"eigenvector length {vec.size} does not match {values.shape[0]} series"
        )
    return vec @ values


def residual_returns(returns, z1) -> ResidualReturns:
    """Ordinary least squares of every series on the eigensignal; returns
    the de-trended residual series along with the fit parameters."""
    values, _ = _unpack(returns)
    z = np.asarray(z1, dtype=np.float64)
    if z.ndim != 1 or z.size != values.shape[1]:
        raise ShapeMismatchError(
            f"eigensignal length {z.size} does not match {values.shape[1]} samples"
        )
    z_mean = z.mean()
    zc = z - z_mean
    var = zc @ zc
    if var == 0.0:
        raise ZeroVarianceError("eigensignal is constant; fit undefined")
    row_means = values.mean(axis=1)
    alpha = (values - row_means[:, None]) @ zc / var
    beta = row_means - alpha * z_mean
    residuals = values - alpha[:, None] * z[None, :] - beta[:, None]
    return ResidualReturns(residuals=residuals, alpha=alpha, beta=beta, eigensignal=z)
