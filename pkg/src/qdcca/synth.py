"""Synthetic return generators for pipeline tests and benchmarks.

Every generator is a pure function of (descriptor, seed): same inputs,
bit-identical output.  Supported kinds:

  gaussian    i.i.d. standard normal returns
  correlated  joint Gaussian with a target correlation matrix (Cholesky)
  ar1         order-1 autoregression with coefficient phi, stationary start
  factor      r_i = beta_i * f + sigma * eps_i; ``response_spread`` > 0
              smears each asset's factor response over a random-length
              trailing window, which dilutes short-scale co-movement and
              lets it build up with the analysis scale
  blocks      planted block-correlation structure (within/across levels)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import QuoteSeries, ReturnMatrix
from .errors import ConfigError

# 2020-01-01 00:00 UTC, in epoch minutes: synthetic quote grids start here.
_EPOCH_MINUTE = 1_577_836_800 // 60


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    n_series: int
    n_samples: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("gaussian", "correlated", "ar1", "factor", "blocks"):
            raise ConfigError(f"unknown generator kind {self.kind!r}")
        if self.n_series < 1 or self.n_samples < 2:
            raise ConfigError("need n_series >= 1 and n_samples >= 2")


def _gaussian(spec: GeneratorSpec, rng) -> np.ndarray:
    return rng.standard_normal((spec.n_series, spec.n_samples))


def _correlated(spec: GeneratorSpec, rng) -> np.ndarray:
    target = np.asarray(spec.params.get("target"), dtype=np.float64)
    if target.shape != (spec.n_series, spec.n_series):
        raise ConfigError(
            f"target matrix shape {target.shape} does not match n_series {spec.n_series}"
        )
    try:
        chol = np.linalg.cholesky(target)
    except np.linalg.LinAlgError as exc:
        raise ConfigError(f"target matrix is not positive definite: {exc}") from exc
    return chol @ rng.standard_normal((spec.n_series, spec.n_samples))


def _ar1(spec: GeneratorSpec, rng) -> np.ndarray:
    phi = float(spec.params.get("phi", 0.9))
    if not (-1.0 < phi < 1.0):
        raise ConfigError(f"ar1 needs |phi| < 1, got {phi}")
    eps = rng.standard_normal((spec.n_series, spec.n_samples))
    out = np.empty_like(eps)
    out[:, 0] = eps[:, 0] / np.sqrt(1.0 - phi**2)
    for t in range(1, spec.n_samples):
        out[:, t] = phi * out[:, t - 1] + eps[:, t]
    return out


def _factor(spec: GeneratorSpec, rng) -> np.ndarray:
    beta = np.broadcast_to(
        np.asarray(spec.params.get("beta", 1.0), dtype=np.float64), (spec.n_series,)
    )
    sigma = float(spec.params.get("sigma", 1.0))
    spread = int(spec.params.get("response_spread", 0))
    if spread < 0:
        raise ConfigError("response_spread must be >= 0")
    factor = rng.standard_normal(spec.n_samples + spread)
    if spread == 0:
        loading = np.tile(factor, (spec.n_series, 1))
    else:
        # Each asset responds with the mean of the factor over its own
        # trailing window of random length; longer windows desynchronize
        # the short-scale response.
        lengths = rng.integers(0, spread + 1, size=spec.n_series)
        csum = np.concatenate([[0.0], np.cumsum(factor)])
        loading = np.empty((spec.n_series, spec.n_samples))
        for i, d in enumerate(lengths):
            hi = np.arange(spread, spread + spec.n_samples)
            loading[i] = (csum[hi + 1] - csum[hi - d]) / (d + 1)
    noise = rng.standard_normal((spec.n_series, spec.n_samples))
    return beta[:, None] * loading + sigma * noise


def _blocks(spec: GeneratorSpec, rng) -> np.ndarray:
    sizes = [int(s) for s in spec.params.get("sizes", ())]
    if sum(sizes) != spec.n_series:
        raise ConfigError(f"block sizes {sizes} must sum to n_series {spec.n_series}")
    within = float(spec.params.get("within", 0.8))
    across = float(spec.params.get("across", 0.0))
    target = np.full((spec.n_series, spec.n_series), across)
    start = 0
    for s in sizes:
        target[start : start + s, start : start + s] = within
        start += s
    np.fill_diagonal(target, 1.0)
    return _correlated(
        GeneratorSpec(
            kind="correlated",
            n_series=spec.n_series,
            n_samples=spec.n_samples,
            params={"target": target},
        ),
        rng,
    )


_GENERATORS = {
    "gaussian": _gaussian,
    "correlated": _correlated,
    "ar1": _ar1,
    "factor": _factor,
    "blocks": _blocks,
}


def synth_returns(spec: GeneratorSpec, seed: int) -> ReturnMatrix:
    """Generate a return matrix on a contiguous minute grid."""
    rng = np.random.default_rng(seed)
    values = _GENERATORS[spec.kind](spec, rng)
    tickers = tuple(f"SYN{i:02d}" for i in range(spec.n_series))
    timestamps = _EPOCH_MINUTE + 1 + np.arange(spec.n_samples, dtype=np.int64)
    return ReturnMatrix(tickers=tickers, timestamps=timestamps, values=values)


def synth_quotes(spec: GeneratorSpec, seed: int, vol: float = 1e-3) -> list[QuoteSeries]:
    """Generate price series whose log-returns follow the chosen model.

    Returns are scaled by ``vol`` and integrated from a price of 100, so
    the quote files round-trip through the normal ingestion path.
    """
    returns = synth_returns(spec, seed)
    quotes = []
    t0 = _EPOCH_MINUTE + np.arange(spec.n_samples + 1, dtype=np.int64)
    for k, ticker in enumerate(returns.tickers):
        log_price = np.concatenate([[0.0], np.cumsum(returns.values[k] * vol)])
        quotes.append(
            QuoteSeries(ticker=ticker, timestamps=t0, prices=100.0 * np.exp(log_price))
        )
    return quotes
