"""Rank-based estimator of the dependency measure.

The estimate is ``gamma(C_n, Pi_n) / gamma(M_n, Pi_n)``.  Both squared
distances are assembled from five sums over the rank grid,

    s1 = E k(S, S')   for S, S' ~ C_n        v1 = same with M_n
    s2 = E k(S, T)    for S ~ C_n, T ~ Pi_n  v2 = same with M_n
    v3 = E k(T, T')   for T, T' ~ Pi_n

so that ``gamma^2(C_n, Pi_n) = s1 - 2 s2 + v3``.  Because every coordinate
lives on the grid ``{1/n, ..., 1}``, the Gaussian kernel only needs the lag
table ``exp(-(m/n)^2 / 2 sigma^2)`` for ``m = 0..n-1`` and a pass over the
``n(n-1)/2`` pairs, which is the ``O(d n^2)`` part (see ``_backend``).  All
sums are carried as excesses over 1 so that wide bandwidths, where the
kernel is nearly flat, keep their precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _backend
from .copula import PseudoSample
from .errors import DimNot2, InvalidInput
from .kernels import as_sigma, gauss_gram


@dataclass(frozen=True)
class EstimatorTerms:
    """The five sums, each stored as its excess over 1.

    The kernel is at most 1 and close to it for wide bandwidths, where the
    sums themselves would lose the small distances to cancellation.
    """

    s1_x: float
    s2_x: float
    v1_x: float
    v2_x: float
    v3_x: float

    s1 = property(lambda self: 1.0 + self.s1_x)
    s2 = property(lambda self: 1.0 + self.s2_x)
    v1 = property(lambda self: 1.0 + self.v1_x)
    v2 = property(lambda self: 1.0 + self.v2_x)
    v3 = property(lambda self: 1.0 + self.v3_x)

    @property
    def numerator(self) -> float:
        """``gamma^2(C_n, Pi_n)``, clamped at zero."""
        return max(self.s1_x - 2.0 * self.s2_x + self.v3_x, 0.0)

    @property
    def denominator(self) -> float:
        """``gamma^2(M_n, Pi_n)``."""
        return self.v1_x - 2.0 * self.v2_x + self.v3_x


@dataclass(frozen=True)
class CenteredGram:
    v: np.ndarray
    w: np.ndarray


def lag_table(n: int, sigma: float) -> np.ndarray:
    """``exp(-(m/n)^2 / 2 sigma^2) - 1`` for ``m = 0..n-1``, accurate near zero."""
    m = np.arange(n, dtype=float)
    return np.expm1(-0.5 * (m / (n * sigma)) ** 2)


def _pow_excess(x: np.ndarray, d: int) -> np.ndarray:
    # (1 + x)^d - 1 without forming 1 + x; x = -1 (an underflowed kernel) gives -1
    with np.errstate(divide="ignore"):
        return np.expm1(d * np.log1p(x))


@dataclass(frozen=True)
class GridConstants:
    """Data-independent pieces for a given ``(n, d, sigma)``, as excesses over 1."""

    n: int
    d: int
    sigma: float
    table: np.ndarray  # lag_table(n, sigma)
    row_means: np.ndarray  # row_means[r-1] = mean_l table[|r - l|]
    v1_x: float
    v2_x: float
    v3_x: float

    v1 = property(lambda self: 1.0 + self.v1_x)
    v2 = property(lambda self: 1.0 + self.v2_x)
    v3 = property(lambda self: 1.0 + self.v3_x)

    @property
    def denominator(self) -> float:
        return self.v1_x - 2.0 * self.v2_x + self.v3_x


@lru_cache(maxsize=64)
def grid_constants(n: int, d: int, sigma: float) -> GridConstants:
    table = lag_table(n, sigma)
    table.setflags(write=False)
    counts = n - np.arange(1, n, dtype=float)
    # row means of the Toeplitz matrix table[|r - l|]; table[0] = 0
    cums = np.cumsum(table)
    r = np.arange(n)
    row_means = (cums[r] + cums[n - 1 - r]) / n
    row_means.setflags(write=False)
    v1_x = 2.0 / n**2 * float(counts @ _pow_excess(table[1:], d))
    v2_x = float(np.mean(_pow_excess(row_means, d)))
    v3_x = float(_pow_excess(np.array([np.mean(row_means)]), d)[0])
    return GridConstants(n, d, sigma, table, row_means, v1_x, v2_x, v3_x)


def _check(p: PseudoSample) -> None:
    if not isinstance(p, PseudoSample):
        raise InvalidInput("expected a PseudoSample; use rank_transform first")


def _canonical_columns(ranks: np.ndarray) -> np.ndarray:
    # Floating-point sums depend on the order of the factors; fixing a column
    # order that only depends on the column contents makes the estimate
    # bit-for-bit invariant under column permutations.
    order = sorted(range(ranks.shape[1]), key=lambda j: ranks[:, j].tobytes())
    return ranks[:, order]


def estimator_terms(p: PseudoSample, b) -> EstimatorTerms:
    """The five sums behind the estimate, in ``O(d n^2)`` time."""
    _check(p)
    sigma = as_sigma(b)
    n, d = p.n, p.d
    g = grid_constants(n, d, sigma)
    ranks = _canonical_columns(p.ranks)
    s1_x = 2.0 / n**2 * _backend.pair_excess_sum(ranks, g.table)
    s2_x = float(np.mean(np.expm1(np.log1p(g.row_means[ranks - 1]).sum(axis=1))))
    return EstimatorTerms(s1_x, s2_x, g.v1_x, g.v2_x, g.v3_x)


def estimate_squared(p: PseudoSample, b) -> float:
    t = estimator_terms(p, b)
    return t.numerator / t.denominator


def estimate(p: PseudoSample, b) -> float:
    """Sample dependency measure ``gamma(C_n, Pi_n) / gamma(M_n, Pi_n)``.

    Examples
    --------
    >>> from cgkdm.copula import PseudoSample
    >>> import numpy as np
    >>> ranks = np.column_stack([np.arange(1, 11), np.arange(10, 0, -1)])
    >>> round(estimate(PseudoSample(ranks), 1.0), 12)
    1.0
    """
    return math.sqrt(estimate_squared(p, b))


def centered_gram(p: PseudoSample, b) -> CenteredGram:
    """Double-centred one-dimensional kernel matrices of both coordinates."""
    _check(p)
    if p.d != 2:
        raise DimNot2(f"centred Gram form needs d = 2, got d = {p.d}")
    sigma = as_sigma(b)
    mats = []
    for j in range(2):
        y = p.y[:, j : j + 1]
        k = gauss_gram(y, y, sigma)
        k = k - k.mean(axis=0, keepdims=True) - k.mean(axis=1, keepdims=True) + k.mean()
        mats.append(k)
    return CenteredGram(*mats)


def estimate_dim2_centered(p: PseudoSample, b) -> float:
    """Squared estimate in dimension 2 as a correlation of centred Gram matrices.

    Independent of :func:`estimator_terms`; the two agree to rounding.
    """
    g = centered_gram(p, b)
    num = float(np.sum(g.v * g.w))
    return num / math.sqrt(float(np.sum(g.v**2)) * float(np.sum(g.w**2)))


def _uniform_stream(seed: int):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def estimate_type_u(p: PseudoSample, b, seed: int) -> float:
    """U-type estimator paired with ``n`` uniform reference draws.

    Not clamped: negative values are expected near independence.
    """
    _check(p)
    sigma = as_sigma(b)
    n, d = p.n, p.d
    u = _uniform_stream(seed).random((n, d))
    y = p.y
    h = gauss_gram(y, y, sigma) - gauss_gram(y, u, sigma) - gauss_gram(u, y, sigma) + gauss_gram(u, u, sigma)
    return float((h.sum() - np.trace(h)) / (n * (n - 1)))


def estimate_type_b(p: PseudoSample, b, m: int = 1000, seed: int = 0, u=None) -> float:
    """V-type squared distance between ``C_n`` and ``m`` uniform draws.

    ``u`` may supply the reference points directly instead of drawing them.
    """
    _check(p)
    sigma = as_sigma(b)
    if u is None:
        if m < 1:
            raise InvalidInput("m must be at least 1")
        u = _uniform_stream(seed).random((m, p.d))
    else:
        u = np.asarray(u, dtype=float)
    y = p.y
    n, m = y.shape[0], u.shape[0]
    val = (
        gauss_gram(y, y, sigma).sum() / n**2
        - 2.0 * gauss_gram(y, u, sigma).sum() / (m * n)
        + gauss_gram(u, u, sigma).sum() / m**2
    )
    return max(float(val), 0.0)
