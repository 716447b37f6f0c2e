"""Reference dependency measures used for comparison tables."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .copula import PseudoSample, Sample, rank_transform
from .errors import DegenerateSample, DimNot2, InvalidInput, ZeroVariance
from .estimator import estimate, estimate_dim2_centered
from .kernels import as_sigma


@dataclass(frozen=True)
class MeasureValue:
    name: str
    value: float


def _pair(s: Sample) -> tuple[np.ndarray, np.ndarray]:
    if not isinstance(s, Sample):
        s = Sample(s)
    if s.d != 2:
        raise DimNot2(f"bivariate measure needs d = 2, got d = {s.d}")
    return s.data[:, 0], s.data[:, 1]


def _corr(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("a column has zero variance")
    r = float(xc @ yc) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def pearson(s: Sample) -> float:
    x, y = _pair(s)
    return _corr(x, y)


def spearman(s: Sample) -> float:
    """Pearson correlation of the pseudo-observations."""
    if not isinstance(s, Sample):
        s = Sample(s)
    p = rank_transform(s)
    if p.d != 2:
        raise DimNot2(f"bivariate measure needs d = 2, got d = {p.d}")
    return _corr(p.y[:, 0], p.y[:, 1])


def kendall(s: Sample) -> float:
    """Proportion of concordant minus discordant pairs, by direct pair count."""
    if not isinstance(s, Sample):
        s = Sample(s)
    r = rank_transform(s).ranks  # refuses ties under the default policy
    if r.shape[1] != 2:
        raise DimNot2(f"bivariate measure needs d = 2, got d = {r.shape[1]}")
    n = r.shape[0]
    total = 0
    for start in range(0, n, 1024):
        a = np.sign(r[start : start + 1024, None, 0] - r[None, :, 0])
        b = np.sign(r[start : start + 1024, None, 1] - r[None, :, 1])
        total += int(np.sum(a * b))
    return total / (n * (n - 1))


def _double_centered(x: np.ndarray) -> np.ndarray:
    a = np.abs(x[:, None] - x[None, :])
    return a - a.mean(axis=0, keepdims=True) - a.mean(axis=1, keepdims=True) + a.mean()


def dcor(s: Sample) -> float:
    """Sample distance correlation (V-statistic form) of two scalar columns."""
    x, y = _pair(s)
    a = _double_centered(x)
    b = _double_centered(y)
    vxy = float(np.mean(a * b))
    vxx = float(np.mean(a * a))
    vyy = float(np.mean(b * b))
    if vxx <= 0.0 or vyy <= 0.0:
        raise DegenerateSample("a column is constant")
    r2 = max(vxy, 0.0) / math.sqrt(vxx * vyy)
    return min(math.sqrt(r2), 1.0)


def mv_spearman_rho2(p: PseudoSample) -> float:
    """Multivariate Spearman's rho of type 2 from pseudo-observations.

    ``(d+1) / (2^d - d - 1) * (2^d / n * sum_i prod_j Y_ij - 1)``
    """
    if not isinstance(p, PseudoSample):
        raise InvalidInput("expected a PseudoSample")
    d = p.d
    h = (d + 1) / (2**d - d - 1)
    return h * (2**d * float(np.prod(p.y, axis=1).mean()) - 1.0)


def _hermegauss(nodes: int):
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    return x, w / math.sqrt(2.0 * math.pi)


def weighted_dcov_sq(u: np.ndarray, v: np.ndarray, sigma: float, nodes: int = 160) -> float:
    """Weighted distance covariance with weight ``sigma^2 exp(-sigma^2 (t^2 + s^2) / 2)``.

    Evaluates ``int |phi_uv(t,s) - phi_u(t) phi_v(s)|^2 w(t,s) dt ds`` from the
    empirical characteristic functions by Gauss-Hermite quadrature.  The
    weight turns into the standard normal density after ``t = x / sigma``;
    the integrand is entire, so the rule converges fast once ``nodes`` covers
    the oscillation ``max|u| / sigma``.
    """
    x, w = _hermegauss(nodes)
    t = x / sigma
    n = u.shape[0]
    eu = np.exp(1j * np.outer(u, t))  # n x nodes
    ev = np.exp(1j * np.outer(v, t))
    joint = eu.T @ ev / n
    diff = joint - np.outer(eu.mean(axis=0), ev.mean(axis=0))
    # dt ds = dx dy / sigma^2 cancels the sigma^2 in the weight; the 2 pi
    # turns the normal density back into exp(-(x^2 + y^2) / 2)
    return 2.0 * math.pi * float(w @ (np.abs(diff) ** 2) @ w)


def weighted_dcor(p: PseudoSample, b, nodes: int = 160) -> float:
    """Empirical weighted distance correlation of the two pseudo-observation columns."""
    if not isinstance(p, PseudoSample):
        raise InvalidInput("expected a PseudoSample")
    if p.d != 2:
        raise DimNot2(f"weighted dCor needs d = 2, got d = {p.d}")
    sigma = as_sigma(b)
    u, v = p.y[:, 0], p.y[:, 1]
    vuv = weighted_dcov_sq(u, v, sigma, nodes)
    vuu = weighted_dcov_sq(u, u, sigma, nodes)
    vvv = weighted_dcov_sq(v, v, sigma, nodes)
    if vuu * vvv <= 0.0:
        return 0.0
    return math.sqrt(max(vuv, 0.0) / math.sqrt(vuu * vvv))


def cgkdm_weighted_dcor_check(p: PseudoSample, b) -> tuple[float, float]:
    """``(estimate, weighted dCor)`` for a bivariate pseudo-sample; the two coincide.

    The second value uses the centred Gram identity.  :func:`weighted_dcor`
    evaluates the same quantity from characteristic functions instead.
    """
    if not isinstance(p, PseudoSample):
        raise InvalidInput("expected a PseudoSample")
    if p.d != 2:
        raise DimNot2(f"weighted dCor needs d = 2, got d = {p.d}")
    r2 = estimate_dim2_centered(p, b)
    return estimate(p, b), math.sqrt(max(r2, 0.0))
