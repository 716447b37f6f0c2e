import math

import numpy as np
import pytest

from cgkdm.errors import InvalidInput, SamplerRangeViolation, TruncationInsufficient
from cgkdm.kernels import kappa
from cgkdm.theory import (
    ComonotoneSampler,
    GaussianCopulaSampler,
    IndependentSampler,
    MarginalSampler,
    MixtureSampler,
    SignPatternSampler,
    cgkdm_bvn,
    cgkdm_population_mc,
    hermite_coeffs,
    hermite_table,
)

RHO_GRID = np.round(np.linspace(-1, 1, 21), 10)


def within(est, target, k=3.0):
    return abs(est.value_sq - target) <= k * est.std_error_sq


def test_hermite_table_is_orthonormal():
    x, w = np.polynomial.hermite_e.hermegauss(80)
    w = w / math.sqrt(2 * math.pi)
    h = hermite_table(x, 30)
    np.testing.assert_allclose((h * w) @ h.T, np.eye(31), atol=1e-10)


@pytest.mark.parametrize("s", [0.2, 1.0])
def test_hermite_coefficient_structure(s):
    a = hermite_coeffs(s, 30).coeffs
    assert (a >= 0).all()
    np.testing.assert_array_equal(a, a.T)
    odd = np.add.outer(np.arange(31), np.arange(31)) % 2 == 1
    assert np.abs(a[odd]).max() <= 1e-10
    assert a[1, 2] == 0.0
    # |c_ij| <= sqrt(E k^2) <= 1 for orthonormal h_i
    assert a.max() <= 1 + 1e-9


def test_hermite_coefficients_exhaust_parseval_total():
    s = 1.0
    series = hermite_coeffs(s, 30)
    assert series.coeffs.sum() + series.residual == pytest.approx(kappa(s / math.sqrt(2)), abs=1e-12)
    assert series.residual < 1e-8


def test_hermite_coefficients_independent_of_grid():
    a = hermite_coeffs(0.5, 12, nodes=600).coeffs
    b = hermite_coeffs(0.5, 12, nodes=900).coeffs
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_bvn_endpoints():
    assert cgkdm_bvn(0.0, 0.2) == 0.0
    assert cgkdm_bvn(1.0, 0.2) == 1.0
    assert cgkdm_bvn(-1.0, 1.0) == 1.0
    with pytest.raises(InvalidInput):
        cgkdm_bvn(1.2, 1.0)


@pytest.mark.parametrize("s", [0.2, 1.0])
def test_bvn_even_monotone_and_bounded(s):
    vals = np.array([cgkdm_bvn(r, s) for r in RHO_GRID])
    np.testing.assert_allclose(vals, vals[::-1], atol=1e-14)
    half = vals[10:]
    assert (np.diff(half) > 0).all()
    assert (vals <= np.abs(RHO_GRID) + 1e-6).all()


@pytest.mark.parametrize("s", [0.2, 1.0])
def test_bvn_stable_in_truncation(s):
    for rho in (0.3, 0.6, 0.9):
        k = 30 if rho < 0.9 else 120
        assert cgkdm_bvn(rho, s, K=k + 4) == pytest.approx(cgkdm_bvn(rho, s, K=k), abs=1e-8)


def test_explicit_truncation_checked():
    with pytest.raises(TruncationInsufficient):
        cgkdm_bvn(0.999, 0.2, K=4)


def test_bvn_matches_population_mc():
    est = cgkdm_population_mc(GaussianCopulaSampler.bivariate(0.5), 0.2, 2, reps=100_000, seed=3, method="pairwise")
    target = cgkdm_bvn(0.5, 0.2)
    assert target <= 0.5
    assert within(est, target**2)


def test_mc_independence_and_comonotone():
    ind = cgkdm_population_mc(IndependentSampler(3), 0.5, 3, reps=200_000, seed=1)
    assert within(ind, 0.0)
    assert ind.value >= 0
    com = cgkdm_population_mc(ComonotoneSampler(3), 0.5, 3, reps=200_000, seed=1)
    assert within(com, 1.0)


def test_mc_is_seed_deterministic():
    a = cgkdm_population_mc(GaussianCopulaSampler.bivariate(0.3), 1.0, 2, reps=10_000, seed=5)
    b = cgkdm_population_mc(GaussianCopulaSampler.bivariate(0.3), 1.0, 2, reps=10_000, seed=5)
    assert a == b


def test_sign_pattern_copula_is_irreducible():
    base = SignPatternSampler(3)
    full = cgkdm_population_mc(base, 0.3, 3, reps=100_000, seed=2, method="pairwise")
    assert full.value_sq > 5 * full.std_error_sq
    for cols in ((0, 1), (0, 2), (1, 2)):
        sub = cgkdm_population_mc(MarginalSampler(base, cols), 0.3, 2, reps=100_000, seed=2, method="pairwise")
        assert within(sub, 0.0)


def test_mixture_convexity_spot_check():
    s = 1.0
    y, z = GaussianCopulaSampler.bivariate(0.8), GaussianCopulaSampler.bivariate(-0.2)
    alpha = 0.4
    mix = cgkdm_population_mc(MixtureSampler(alpha, y, z), s, 2, reps=100_000, seed=4, method="pairwise")
    bound = alpha * cgkdm_bvn(0.8, s) + (1 - alpha) * cgkdm_bvn(-0.2, s)
    assert mix.value <= bound + 3 * mix.std_error


def test_sampler_range_enforced():
    bad = lambda rng, size: rng.random((size, 2)) * 2.0
    with pytest.raises(SamplerRangeViolation):
        cgkdm_population_mc(bad, 1.0, 2, reps=1000, batches=10)


def test_mc_argument_checks():
    with pytest.raises(InvalidInput):
        cgkdm_population_mc(IndependentSampler(2), 1.0, 2, reps=999)
    with pytest.raises(InvalidInput):
        cgkdm_population_mc(IndependentSampler(2), 1.0, 2, reps=1000, batches=7)
