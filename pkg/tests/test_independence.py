import json
import math

import numpy as np
import pytest
from scipy import stats

from cgkdm.copula import Sample, empirical_copula, product_copula_grid, rank_transform
from cgkdm.errors import InvalidDims, InvalidInput, NonPositiveMoment
from cgkdm.estimator import estimate, estimator_terms
from cgkdm.independence import (
    GammaFit,
    NullMomentCache,
    NullMoments,
    TestMethod,
    asymptotic_moments,
    choose_method,
    exact_null_moments,
    run_test,
    simulate_null,
    test_statistic as statistic,
)
from cgkdm.kernels import gamma_sq, kappa

from conftest import comonotone, random_pseudo


def test_statistic_identities():
    p = random_pseudo(np.random.default_rng(0), 40, 3)
    t = statistic(p, 0.7)
    terms = estimator_terms(p, 0.7)
    assert t.t == pytest.approx(p.n * terms.denominator * estimate(p, 0.7) ** 2, abs=1e-10)
    c = comonotone(30)
    assert statistic(c, 1.0).t == pytest.approx(30 * estimator_terms(c, 1.0).denominator, abs=1e-12)


def test_statistic_matches_grid_oracle():
    p = random_pseudo(np.random.default_rng(6), 6, 2)
    oracle = 6 * gamma_sq(empirical_copula(p), product_copula_grid(6, 2), 0.5)
    assert statistic(p, 0.5).t == pytest.approx(oracle, abs=1e-10)


def test_statistic_rejects_raw_input():
    with pytest.raises(InvalidInput):
        statistic(np.ones((3, 2)), 1.0)


def test_simulate_null_is_seeded_and_worker_independent():
    a = simulate_null(30, 2, 1.0, 200, seed=4)
    b = simulate_null(30, 2, 1.0, 200, seed=4)
    np.testing.assert_array_equal(a, b)
    c = simulate_null(30, 2, 1.0, 200, seed=4, workers=2)
    np.testing.assert_array_equal(a, c)
    with pytest.raises(InvalidDims):
        simulate_null(30, 1, 1.0, 10)


def _t_from(x, s):
    return x.shape[0] * estimator_terms(rank_transform(Sample(x)), s).numerator


def test_null_is_distribution_free():
    rng = np.random.default_rng(12)
    n, s, reps = 40, 0.5, 5000
    uni = [_t_from(rng.random((n, 2)), s) for _ in range(reps)]
    nor = [_t_from(np.exp(rng.standard_normal((n, 2))), s) for _ in range(reps)]
    assert stats.ks_2samp(uni, nor).pvalue > 0.01


def test_same_ranks_same_statistic_across_marginals():
    u = np.random.default_rng(3).random((50, 2))
    a = _t_from(u, 1.0)
    b = _t_from(np.column_stack([stats.norm.ppf(u[:, 0]), stats.expon.ppf(u[:, 1])]), 1.0)
    assert a == b


def test_asymptotic_mean_in_two_dimensions():
    for s in (0.2, 1.0, 3.0):
        m = asymptotic_moments(2, s)
        assert m.mean == pytest.approx((1 - kappa(s)) ** 2, rel=1e-12)
        assert m.variance > 0


def test_simulated_mean_near_asymptotic_at_large_n():
    t = simulate_null(1000, 2, 1.0, 400, seed=2)
    assert t.mean() == pytest.approx(asymptotic_moments(2, 1.0).mean, rel=0.05)


def test_exact_moments_gap_shrinks_with_n():
    asym = asymptotic_moments(2, 0.5)
    gaps = []
    for n in (10, 100):
        m = exact_null_moments(n, 2, 0.5, reps=4000, seed=0, cache=False)
        gaps.append(abs(m.mean - asym.mean) / asym.mean)
    assert gaps[1] < gaps[0]


def test_null_moment_cache_roundtrip(tmp_path):
    store = NullMomentCache(tmp_path / "m.jsonl")
    first = exact_null_moments(25, 2, 1.0, reps=300, seed=3, cache=store)
    again = exact_null_moments(25, 2, 1.0, reps=300, seed=3, cache=store)
    assert first == again
    lines = (tmp_path / "m.jsonl").read_text().splitlines()
    assert len(lines) == 1
    rec = json.loads(lines[0])
    assert rec["key"] == {"n": 25, "d": 2, "sigma": "1.0", "reps": 300, "seed": 3}
    assert {"mean", "variance", "created_at", "version"} <= rec.keys()
    # a different key is a miss
    assert store.get(25, 2, 1.0, 300, 4) is None


def test_cache_follows_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("CGKDM_CACHE_DIR", str(tmp_path))
    exact_null_moments(12, 2, 1.0, reps=100, seed=0)
    assert (tmp_path / "null_moments.jsonl").exists()


def test_null_moments_must_be_positive():
    with pytest.raises(NonPositiveMoment):
        NullMoments(0.0, 1.0, "asymptotic", None, 2, 1.0)


def test_gamma_fit_reconstruction():
    m = asymptotic_moments(5, 1.58)
    g = GammaFit.from_moments(m)
    assert g.alpha * g.beta == pytest.approx(m.mean, rel=1e-12)
    assert g.alpha * g.beta**2 == pytest.approx(m.variance, rel=1e-12)


def test_method_thresholds():
    assert choose_method(19) is TestMethod.SIMULATED_NULL
    assert choose_method(20) is TestMethod.GAMMA_EXACT
    assert choose_method(1000) is TestMethod.GAMMA_EXACT
    assert choose_method(1001) is TestMethod.GAMMA_ASYMPTOTIC


def test_auto_uses_asymptotic_for_large_n():
    rep = run_test(random_pseudo(np.random.default_rng(1), 2000, 2), 1.0)
    assert rep.method is TestMethod.GAMMA_ASYMPTOTIC
    assert rep.metadata["requested_method"] == "auto"


@pytest.mark.parametrize("method", ["sim", "gamma-exact", "gamma-asym"])
def test_comonotone_rejected_by_every_method(method):
    rep = run_test(comonotone(100), 1.0, method, level=0.2, reps=2000, seed=1)
    assert rep.reject
    assert rep.p_value < 1e-3
    assert rep.statistic.t > rep.cutoff


@pytest.mark.parametrize("method", ["sim", "gamma-exact", "gamma-asym"])
def test_report_consistency(method):
    rng = np.random.default_rng(21)
    for _ in range(5):
        rep = run_test(random_pseudo(rng, 40, 2), 0.5, method, level=0.1, reps=1000, seed=2)
        assert rep.reject == (rep.statistic.t > rep.cutoff)
        assert 0.0 <= rep.p_value <= 1.0
        if abs(rep.statistic.t - rep.cutoff) > 1e-3 * rep.cutoff:
            assert (rep.p_value < rep.level) == rep.reject
        d = rep.to_dict()
        assert d["method"] == method
        json.dumps(d)


def test_simulated_p_value_never_zero():
    rep = run_test(comonotone(30), 1.0, "sim", reps=99, seed=0)
    assert rep.p_value == pytest.approx(1 / 100)


def test_level_validated():
    with pytest.raises(InvalidInput):
        run_test(comonotone(30), 1.0, "gamma-asym", level=1.0)
