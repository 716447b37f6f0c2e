"""Population values of the measure.

Two routes are provided:

* :func:`cgkdm_population_mc` estimates ``C_{s,d} [E k(S,S') - 2 E k(S,T) +
  E k(T,T')]`` by simulation for any copula sampler;
* :func:`cgkdm_bvn` evaluates the bivariate normal case from the Hermite
  (Mehler) expansion of the Gaussian copula density.

With ``h_i = He_i / sqrt(i!)`` the orthonormal probabilists' Hermite
polynomials, the expansion coefficients are

    a_ij = ( int int k(Phi(x), Phi(y)) h_i(x) h_j(y) phi(x) phi(y) dx dy )^2

and ``I^2(rho) = C_{s,2} sum_{i,j >= 1, i+j even} a_ij rho^(i+j)``.  Parseval
gives ``sum_ij a_ij = kappa(s / sqrt 2)`` exactly, which bounds the
truncation tail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import InvalidInput, QuadratureFailure, SamplerRangeViolation, TruncationInsufficient
from .kernels import as_sigma, gauss_gram, kappa, lambda_fn, normalizer

DEFAULT_K = 30
MAX_K = 240
PLANE_HALF_WIDTH = 12.0


@dataclass(frozen=True)
class PopulationEstimate:
    """Monte Carlo estimate of the measure.

    ``value_sq`` and ``std_error_sq`` refer to the squared measure, which is
    what the simulation averages.  ``value`` is its clamped square root and
    ``std_error`` the matching half-width ``sqrt(value_sq + se) - value``,
    which reduces to the delta-method error away from zero.
    """

    value: float
    std_error: float
    value_sq: float
    std_error_sq: float
    replicates: int
    seed: int


# -- samplers ---------------------------------------------------------------
#
# A sampler is a callable ``(rng, size) -> array (size, d)`` with values in
# [0, 1]^d and an integer attribute ``d``.


class IndependentSampler:
    def __init__(self, d):
        self.d = d

    def __call__(self, rng, size):
        return rng.random((size, self.d))


class ComonotoneSampler:
    def __init__(self, d):
        self.d = d

    def __call__(self, rng, size):
        return np.repeat(rng.random((size, 1)), self.d, axis=1)


class GaussianCopulaSampler:
    """Normal draws through a Cholesky factor, mapped by ``Phi`` per column."""

    def __init__(self, corr):
        corr = np.atleast_2d(np.asarray(corr, dtype=float))
        self.d = corr.shape[0]
        try:
            self._chol = np.linalg.cholesky(corr)
        except np.linalg.LinAlgError:
            # singular but PSD, e.g. rho = 1
            self._chol = _psd_factor(corr)

    @classmethod
    def bivariate(cls, rho):
        return cls([[1.0, rho], [rho, 1.0]])

    def __call__(self, rng, size):
        z = rng.standard_normal((size, self.d)) @ self._chol.T
        return special.ndtr(z)


def _psd_factor(corr):
    vals, vecs = np.linalg.eigh(corr)
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


class SignPatternSampler:
    """Copula with density ``2 * 1[prod_j (u_j - 1/2) >= 0]``.

    Every proper sub-vector is independent uniform while the whole vector is
    not.  Drawn by reflecting the first coordinate whenever the sign product
    is negative.
    """

    def __init__(self, d):
        self.d = d

    def __call__(self, rng, size):
        u = rng.random((size, self.d))
        neg = np.prod(np.sign(u - 0.5), axis=1) < 0
        u[neg, 0] = 1.0 - u[neg, 0]
        return u


class MarginalSampler:
    """Sub-vector ``cols`` of another sampler."""

    def __init__(self, base, cols):
        self.base = base
        self.cols = list(cols)
        self.d = len(self.cols)

    def __call__(self, rng, size):
        return self.base(rng, size)[:, self.cols]


class MixtureSampler:
    """``alpha * first + (1 - alpha) * second`` by a per-draw coin flip."""

    def __init__(self, alpha, first, second):
        if first.d != second.d:
            raise InvalidInput("mixture components must share the dimension")
        self.alpha = float(alpha)
        self.first = first
        self.second = second
        self.d = first.d

    def __call__(self, rng, size):
        coin = rng.random(size) < self.alpha
        out = self.second(rng, size)
        out[coin] = self.first(rng, size)[coin]
        return out


# -- Monte Carlo ------------------------------------------------------------


def _stream(seed, index):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def _rowwise_kernel(a, b, sigma):
    return np.exp(-np.sum((a - b) ** 2, axis=1) / (2.0 * sigma * sigma))


def _draw(sampler, rng, size, d):
    x = np.asarray(sampler(rng, size), dtype=float)
    if x.shape != (size, d):
        raise SamplerRangeViolation(f"sampler returned shape {x.shape}, expected {(size, d)}")
    if (x < 0).any() or (x > 1).any():
        raise SamplerRangeViolation("sampler produced points outside [0, 1]^d")
    return x


def kernel_distance_mc(
    first,
    second,
    b,
    d: int,
    reps: int = 10**6,
    seed: int = 0,
    batches: int = 50,
    chunk: int = 100_000,
) -> tuple[float, float]:
    """Plain simulation of the squared kernel distance between two samplers.

    Each replicate draws ``S, S'`` from ``first`` and ``T, T'`` from
    ``second`` and scores ``k(S,S') - 2 k(S,T) + k(T,T')``.  Returns the mean
    and its batch-means standard error.  Uses no closed-form integral.
    """
    sigma = as_sigma(b)
    if reps < 1000:
        raise InvalidInput("reps must be at least 1000")
    if batches < 2 or reps % batches:
        raise InvalidInput("reps must be a multiple of batches >= 2")
    per = reps // batches
    means = np.empty(batches)
    for bi in range(batches):
        rng = _stream(seed, bi)
        acc = 0.0
        done = 0
        while done < per:
            m = min(chunk, per - done)
            s = _draw(first, rng, m, d)
            s2 = _draw(first, rng, m, d)
            t = _draw(second, rng, m, d)
            t2 = _draw(second, rng, m, d)
            z = _rowwise_kernel(s, s2, sigma) - 2.0 * _rowwise_kernel(s, t, sigma) + _rowwise_kernel(t, t2, sigma)
            acc += float(z.sum())
            done += m
        means[bi] = acc / per
    return float(means.mean()), float(means.std(ddof=1)) / math.sqrt(batches)


def cgkdm_population_mc(
    sampler,
    b,
    d: int,
    reps: int = 10**6,
    seed: int = 0,
    batches: int = 50,
    method: str = "paired",
    chunk: int = 100_000,
) -> PopulationEstimate:
    """Simulate the population measure for a copula sampler.

    Parameters
    ----------
    sampler : callable
        ``sampler(rng, size)`` returning points in ``[0, 1]^d``.
    b : Bandwidth or float
    d : int
    reps : int
        Number of simulated replicates (``>= 1000``).
    seed : int
    batches : int
        Number of batch means used for the standard error.
    method : {"paired", "pairwise"}
        ``"paired"`` draws ``(S, S', T, T')`` independently per replicate and
        averages ``k(S,S') - 2 k(S,T) + k(T,T')``, touching no closed form.
        ``"pairwise"`` spends ``reps`` draws of ``S`` per batch on the
        U-statistic over all pairs and uses the exact conditional means
        ``E[k(S,T) | S] = prod_j lambda(S_j)`` and ``E k(T,T') = kappa^d``;
        it is still unbiased with far smaller variance.
    """
    sigma = as_sigma(b)
    if reps < 1000:
        raise InvalidInput("reps must be at least 1000")
    if batches < 2 or reps % batches:
        raise InvalidInput("reps must be a multiple of batches >= 2")
    if method == "paired":
        mean, se = kernel_distance_mc(sampler, IndependentSampler(d), sigma, d, reps, seed, batches, chunk)
    elif method == "pairwise":
        per = reps // batches
        means = np.empty(batches)
        for bi in range(batches):
            rng = _stream(seed, bi)
            s = _draw(sampler, rng, per, d)
            pair = 0.0
            for i in range(0, per, 2048):
                pair += float(gauss_gram(s[i : i + 2048], s, sigma).sum())
            ss = (pair - per) / (per * (per - 1))
            st = float(np.prod(lambda_fn(s, sigma), axis=1).mean())
            means[bi] = ss - 2.0 * st + kappa(sigma) ** d
        mean, se = float(means.mean()), float(means.std(ddof=1)) / math.sqrt(batches)
    else:
        raise InvalidInput(f"unknown method {method!r}")
    c = normalizer(sigma, d).c_sigma_d
    val_sq = c * mean
    se_sq = c * se
    value = math.sqrt(max(val_sq, 0.0))
    std_error = math.sqrt(max(val_sq, 0.0) + se_sq) - value
    return PopulationEstimate(value, std_error, val_sq, se_sq, reps, seed)


# -- Hermite series ---------------------------------------------------------


@dataclass(frozen=True)
class HermiteSeries:
    """Coefficients ``a[i, j]`` for ``0 <= i, j <= K``."""

    sigma: float
    K: int
    coeffs: np.ndarray
    residual: float  # kappa(s/sqrt2) - sum(coeffs) >= 0, the mass beyond K

    def scaled(self) -> np.ndarray:
        """``a_ij * i! * j!``, the squared integral against unnormalized ``He``."""
        f = np.array([math.lgamma(i + 1) for i in range(self.K + 1)])
        return np.exp(np.log(np.maximum(self.coeffs, 1e-300)) + f[:, None] + f[None, :])


def hermite_table(x: np.ndarray, K: int) -> np.ndarray:
    """Orthonormal probabilists' Hermite ``h_0..h_K`` at ``x``, shape (K+1, len(x))."""
    x = np.asarray(x, dtype=float)
    h = np.zeros((K + 1,) + x.shape)
    h[0] = 1.0
    if K >= 1:
        h[1] = x
    for i in range(1, K):
        h[i + 1] = (x * h[i] - math.sqrt(i) * h[i - 1]) / math.sqrt(i + 1)
    return h


@lru_cache(maxsize=32)
def _plane_rule(nodes: int, half_width: float):
    x, w = np.polynomial.legendre.leggauss(nodes)
    x = half_width * x
    w = half_width * w * np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    return x, w


def hermite_coeffs(b, K: int = DEFAULT_K, nodes: int | None = None) -> HermiteSeries:
    """Expansion coefficients by tensor Gauss-Legendre quadrature on a square plane."""
    sigma = as_sigma(b)
    if K < 1:
        raise InvalidInput("K must be at least 1")
    return _hermite_coeffs(sigma, int(K), int(nodes or max(600, 8 * K)))


@lru_cache(maxsize=64)
def _hermite_coeffs(sigma, K, nodes):
    x, w = _plane_rule(nodes, PLANE_HALF_WIDTH)
    h = hermite_table(x, K) * w
    u = special.ndtr(x)
    kern = np.exp(-((u[:, None] - u[None, :]) ** 2) / (2.0 * sigma * sigma))
    c = h @ kern @ h.T
    # exact parity zeros; quadrature leaves ~1e-17 there
    parity = (np.add.outer(np.arange(K + 1), np.arange(K + 1)) % 2) == 1
    c[parity] = 0.0
    a = c * c
    a = 0.5 * (a + a.T)
    residual = kappa(sigma / math.sqrt(2.0)) - float(a.sum())
    if residual < -1e-10:
        raise QuadratureFailure(f"coefficient mass exceeds its exact total by {-residual:.3g}")
    a.setflags(write=False)
    return HermiteSeries(sigma, K, a, max(residual, 0.0))


def _series_value(series: HermiteSeries, rho: float) -> tuple[float, float]:
    a = series.coeffs[1:, 1:]
    idx = np.arange(1, series.K + 1)
    powers = float(abs(rho)) ** np.add.outer(idx, idx)
    c = normalizer(series.sigma, 2).c_sigma_d
    val = c * float(np.sum(a * powers))
    tail = c * series.residual * abs(rho) ** (series.K + 1)
    return val, tail


def cgkdm_bvn(rho: float, b, K: int | None = None, tol: float = 1e-8) -> float:
    """Measure for a bivariate normal with correlation ``rho``.

    With ``K=None`` the truncation order starts at 30 and doubles until the
    tail bound drops below ``tol``; an explicit ``K`` raises instead.

    Raises
    ------
    TruncationInsufficient
        When the tail bound at the chosen ``K`` exceeds ``tol``.
    """
    rho = float(rho)
    if not abs(rho) <= 1.0:
        raise InvalidInput(f"|rho| must be at most 1, got {rho}")
    if rho == 0.0:
        return 0.0
    if abs(rho) == 1.0:
        return 1.0
    sigma = as_sigma(b)
    ks = [int(K)] if K is not None else _auto_orders()
    for k in ks:
        val, tail = _series_value(hermite_coeffs(sigma, k), rho)
        if tail <= tol:
            return min(math.sqrt(max(val, 0.0)), 1.0)
    raise TruncationInsufficient(
        f"tail bound {tail:.3g} above {tol:.3g} at K={ks[-1]} for rho={rho}, sigma={sigma}"
    )


def _auto_orders():
    k, out = DEFAULT_K, []
    while k <= MAX_K:
        out.append(k)
        k *= 2
    return out
