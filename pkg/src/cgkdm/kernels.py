"""Gaussian kernel, its closed-form integrals over the unit square, and the
kernel distance between discrete distributions.

Notation follows the usual one for the measure:

* ``kappa(s)``  is the double integral of ``exp(-(u-v)^2 / 2 s^2)`` over
  ``[0, 1]^2``;
* ``lambda_fn(x, s)`` is the single integral over ``v`` in ``[0, 1]``;
* ``normalizer(s, d)`` returns ``C_{s,d} = 1 / gamma^2(M, Pi)``, the squared
  kernel distance between the maximum and product copulas.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .copula import DiscreteDistribution
from .errors import DimMismatch, InvalidDims, InvalidInput, NonPositiveNormalizer, QuadratureFailure

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)
DEFAULT_QUAD_TOL = 1e-10


@dataclass(frozen=True)
class Bandwidth:
    sigma: float

    def __post_init__(self):
        s = float(self.sigma)
        if not (math.isfinite(s) and s > 0):
            raise InvalidInput(f"bandwidth must be positive and finite, got {self.sigma!r}")
        object.__setattr__(self, "sigma", s)

    def __float__(self):
        return self.sigma


def as_sigma(b) -> float:
    """Accept a :class:`Bandwidth` or a plain number."""
    if isinstance(b, Bandwidth):
        return b.sigma
    return Bandwidth(b).sigma


@dataclass(frozen=True)
class NormalizerTable:
    sigma: float
    d: int
    c_sigma_d: float
    quadrature_tol: float
    kappa_scaled: float
    kappa_pow: float
    lambda_pow_integral: float

    @property
    def inverse(self) -> float:
        """``gamma^2(M, Pi)``."""
        return 1.0 / self.c_sigma_d


def norm_cdf(x):
    """Standard normal CDF through ``erfc``, accurate in both tails."""
    return 0.5 * special.erfc(-np.asarray(x, dtype=float) / SQRT2)


def gauss_kernel(x, y, b) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise DimMismatch(f"points have shapes {x.shape} and {y.shape}")
    s = as_sigma(b)
    return float(np.exp(-np.sum((x - y) ** 2) / (2.0 * s * s)))


def gauss_gram(a: np.ndarray, c: np.ndarray, sigma: float) -> np.ndarray:
    """Kernel matrix ``k(a_i, c_j)`` for row-point arrays."""
    sq = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(c * c, axis=1)[None, :]
        - 2.0 * a @ c.T
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-sq / (2.0 * sigma * sigma))


def kappa(b) -> float:
    """``kappa(s) = sqrt(2 pi) s [2 Phi(1/s) - 1] - 2 s^2 [1 - exp(-1/(2 s^2))]``.

    Written with ``erf`` and ``expm1`` so that neither bracket loses digits
    at large ``s``.
    """
    s = as_sigma(b)
    return SQRT2PI * s * math.erf(1.0 / (s * SQRT2)) + 2.0 * s * s * math.expm1(-0.5 / (s * s))


def lambda_fn(x, b):
    """``lambda(x, s) = sqrt(2 pi) s [Phi(x/s) + Phi((1-x)/s) - 1]``; vectorized in ``x``."""
    s = as_sigma(b)
    x = np.asarray(x, dtype=float)
    if (x < 0).any() or (x > 1).any():
        raise InvalidInput("lambda_fn is defined on [0, 1]")
    # Phi(a) + Phi(b) - 1 == (erf(a/sqrt2) + erf(b/sqrt2)) / 2
    val = SQRT2PI * s * 0.5 * (special.erf(x / (s * SQRT2)) + special.erf((1.0 - x) / (s * SQRT2)))
    return float(val) if val.ndim == 0 else val


@lru_cache(maxsize=512)
def lambda_power_integral(sigma: float, power: int, tol: float = DEFAULT_QUAD_TOL) -> float:
    """``int_0^1 lambda(u, s)^power du``, folded onto ``[0, 1/2]`` by symmetry."""
    sigma = as_sigma(sigma)

    def f(u):
        return lambda_fn(u, sigma) ** power

    # the kink-free integrand is steepest near u = 0 when sigma is small
    points = [min(0.5, 4 * sigma)] if 4 * sigma < 0.5 else None
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, 0.0, 0.5, epsabs=tol / 4, epsrel=tol, limit=200, points=points)
        except integrate.IntegrationWarning as exc:
            raise QuadratureFailure(str(exc)) from exc
    if err > max(tol, tol * abs(val)):
        raise QuadratureFailure(f"quadrature error estimate {err:.3g} above tolerance {tol:.3g}")
    return 2.0 * val


@lru_cache(maxsize=512)
def _normalizer(sigma: float, d: int, tol: float) -> NormalizerTable:
    ks = kappa(sigma / math.sqrt(d))
    kp = kappa(sigma) ** d
    li = lambda_power_integral(sigma, d, tol)
    inv = ks + kp - 2.0 * li
    # the three terms are O(1); anything below a few quadrature tolerances is noise
    if not inv > 4 * tol:
        raise NonPositiveNormalizer(
            f"gamma^2(M, Pi) = {inv:.3g} for sigma={sigma}, d={d}; tighten the quadrature tolerance"
        )
    return NormalizerTable(sigma, d, 1.0 / inv, tol, ks, kp, li)


def normalizer(b, d: int, tol: float = DEFAULT_QUAD_TOL) -> NormalizerTable:
    """Population normalizer ``C_{s,d}`` and its ingredients.

    Raises
    ------
    InvalidDims
        For ``d < 2``, where the maximum and product copulas coincide.
    """
    if int(d) != d or d < 2:
        raise InvalidDims(f"normalizer needs d >= 2, got {d}")
    return _normalizer(as_sigma(b), int(d), float(tol))


def gamma_sq(p: DiscreteDistribution, q: DiscreteDistribution, b, chunk: int = 2048) -> float:
    """Squared kernel distance between two discrete distributions.

    Direct double sum over atoms; costs ``O(len(p) * len(q))``.  Used as the
    brute-force reference for the closed forms elsewhere.
    """
    if p.dim != q.dim:
        raise DimMismatch(f"dimensions differ: {p.dim} vs {q.dim}")
    s = as_sigma(b)

    def cross(a: DiscreteDistribution, c: DiscreteDistribution) -> float:
        total = 0.0
        for i in range(0, len(a), chunk):
            g = gauss_gram(a.atoms[i : i + chunk], c.atoms, s)
            total += float(a.weights[i : i + chunk] @ g @ c.weights)
        return total

    val = cross(p, p) - 2.0 * cross(p, q) + cross(q, q)
    return max(val, 0.0)


def gamma_quantile(prob: float, shape: float, scale: float) -> float:
    """Quantile of the gamma distribution with the given shape and scale."""
    if not (0.0 < prob < 1.0):
        raise InvalidInput("probability must lie in (0, 1)")
    return float(special.gammaincinv(shape, prob)) * scale


def gamma_sf(x: float, shape: float, scale: float) -> float:
    """Upper tail ``P(G > x)`` of the gamma distribution."""
    if x <= 0:
        return 1.0
    return float(special.gammaincc(shape, x / scale))
