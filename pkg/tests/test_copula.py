import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cgkdm.copula import (
    DiscreteDistribution,
    PseudoSample,
    Sample,
    TiePolicy,
    empirical_copula,
    max_copula_grid,
    product_copula_grid,
    rank_transform,
    read_csv,
    write_csv,
)
from cgkdm.errors import BudgetExceeded, DataError, InvalidDims, InvalidInput, TiesPresent


def test_rank_transform_small_fixture():
    s = Sample(np.array([[3.1, 9.0], [1.0, 2.0], [2.5, 5.0]]))
    np.testing.assert_array_equal(rank_transform(s).y, [[1, 1], [1 / 3, 1 / 3], [2 / 3, 2 / 3]])


def test_negated_column_reflects_ranks():
    x = np.array([[0.3, 4.0], [1.7, -2.0], [-0.4, 0.5], [2.2, 1.5]])
    y = rank_transform(Sample(x)).y
    flipped = x.copy()
    flipped[:, 1] *= -1
    yf = rank_transform(Sample(flipped)).y
    n = x.shape[0]
    np.testing.assert_allclose(yf[:, 1], (n + 1) / n - y[:, 1])
    np.testing.assert_array_equal(yf[:, 0], y[:, 0])


def test_ties_rejected_by_default():
    with pytest.raises(TiesPresent):
        rank_transform(Sample(np.array([[1.0, 2.0], [1.0, 3.0], [2.0, 4.0]])))


def test_jitter_breaks_ties_deterministically():
    x = np.array([[1.0, 2.0], [1.0, 3.0], [2.0, 4.0], [1.0, 1.0]])
    a = rank_transform(Sample(x, TiePolicy.JITTER, 7))
    b = rank_transform(Sample(x, TiePolicy.JITTER, 7))
    np.testing.assert_array_equal(a.ranks, b.ranks)
    # the distinct value keeps the top rank
    assert a.ranks[2, 0] == 4


@pytest.mark.parametrize(
    "data, exc",
    [
        (np.ones((1, 2)), InvalidDims),
        (np.arange(5.0)[:, None], InvalidDims),
        (np.array([[0.0, np.nan], [1.0, 2.0]]), InvalidInput),
        (np.array([[0.0, np.inf], [1.0, 2.0]]), InvalidInput),
    ],
)
def test_sample_validation(data, exc):
    with pytest.raises(exc):
        Sample(data)


def test_pseudo_sample_requires_permutations():
    with pytest.raises(InvalidInput):
        PseudoSample(np.array([[1, 1], [1, 2]]))


def test_empirical_copula_atoms_are_rows():
    p = rank_transform(Sample(np.array([[3.1, 9.0], [1.0, 2.0], [2.5, 5.0]])))
    c = empirical_copula(p)
    np.testing.assert_array_equal(c.atoms, p.y)
    assert c.weights.sum() == pytest.approx(1.0, abs=1e-12)


def test_empirical_copula_comonotone_n2():
    p = PseudoSample(np.array([[1, 1], [2, 2]]))
    c = empirical_copula(p)
    np.testing.assert_array_equal(c.atoms, [[0.5, 0.5], [1.0, 1.0]])
    np.testing.assert_array_equal(c.weights, [0.5, 0.5])


def test_max_copula_grid():
    np.testing.assert_array_equal(max_copula_grid(2, 2).atoms, [[0.5, 0.5], [1, 1]])
    np.testing.assert_array_equal(max_copula_grid(1, 3).atoms, [[1, 1, 1]])
    g = max_copula_grid(3, 2)
    np.testing.assert_allclose(g.atoms[:, 0], [1 / 3, 2 / 3, 1])
    with pytest.raises(InvalidDims):
        max_copula_grid(3, 1)


def test_product_copula_grid():
    g = product_copula_grid(2, 2)
    assert len(g) == 4
    np.testing.assert_allclose(g.weights, 0.25)
    assert len(product_copula_grid(3, 2)) == 9
    with pytest.raises(BudgetExceeded):
        product_copula_grid(100, 5, budget=10**6)


def test_discrete_distribution_validation():
    with pytest.raises(InvalidInput):
        DiscreteDistribution(np.array([[0.5, 0.5]]), np.array([0.9]))
    with pytest.raises(InvalidInput):
        DiscreteDistribution(np.array([[1.5, 0.5]]), np.array([1.0]))


samples = arrays(
    np.float64,
    st.tuples(st.integers(2, 30), st.integers(2, 4)),
    elements=st.integers(-10**6, 10**6).map(float),
    unique=True,
)

# strictly increasing maps that stay injective on integer-valued floats
MONOTONE_MAPS = [lambda v: v**3, lambda v: np.exp(v / 1e5), np.arctan, lambda v: 2.0 * v - 7.0]


@settings(max_examples=60, deadline=None)
@given(samples)
def test_rank_transform_invariant_under_increasing_maps(x):
    y = rank_transform(Sample(x)).y
    t = np.column_stack([MONOTONE_MAPS[j % 4](x[:, j]) for j in range(x.shape[1])])
    np.testing.assert_array_equal(rank_transform(Sample(t)).y, y)


@settings(max_examples=60, deadline=None)
@given(samples, st.randoms(use_true_random=False))
def test_rank_transform_commutes_with_column_permutation(x, rnd):
    perm = list(range(x.shape[1]))
    rnd.shuffle(perm)
    a = rank_transform(Sample(x[:, perm])).ranks
    b = rank_transform(Sample(x)).permute_columns(perm).ranks
    np.testing.assert_array_equal(a, b)


@settings(max_examples=60, deadline=None)
@given(samples)
def test_empirical_copula_one_atom_per_rank(x):
    c = empirical_copula(rank_transform(Sample(x)))
    n = x.shape[0]
    for j in range(x.shape[1]):
        np.testing.assert_array_equal(np.sort(np.rint(c.atoms[:, j] * n)), np.arange(1, n + 1))


def test_csv_roundtrip_with_header(tmp_path):
    data = np.array([[0.1, 2.0], [0.3, -1.0], [0.2, 5.5]])
    path = tmp_path / "x.csv"
    write_csv(path, data, ["a", "b"])
    s = read_csv(path)
    np.testing.assert_array_equal(s.data, data)


def test_csv_rejects_nan_with_line_number(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\nnan,3\n")
    with pytest.raises(DataError, match="line 3"):
        read_csv(path)


def test_csv_rejects_ragged_rows(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,2\n3\n")
    with pytest.raises(DataError, match="line 2"):
        read_csv(path)
