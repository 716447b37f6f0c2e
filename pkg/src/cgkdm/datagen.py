"""Seeded generators for the synthetic data used in the experiments.

Every generator takes an explicit integer seed and draws from a Philox
stream, so batches with different seeds never share random numbers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .copula import Sample
from .errors import InvalidInput, NotPSD, UnknownScenario

PSD_TOL = 1e-10


def rng_for(seed, *keys) -> np.random.Generator:
    """Philox generator keyed by ``(seed, *keys)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, keys)])))


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """Symmetric, unit-diagonal, positive semidefinite matrix."""

    sigma_matrix: np.ndarray
    factor: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m = np.array(self.sigma_matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise InvalidInput(f"correlation matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidInput("correlation matrix has non-finite entries")
        if not np.allclose(m, m.T, atol=1e-12, rtol=0):
            raise NotPSD("correlation matrix is not symmetric")
        if not np.allclose(np.diag(m), 1.0, atol=1e-12, rtol=0):
            raise NotPSD("correlation matrix must have a unit diagonal")
        m = 0.5 * (m + m.T)
        try:
            f = np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            w, v = np.linalg.eigh(m)
            if w.min() < -PSD_TOL:
                raise NotPSD(f"smallest eigenvalue {w.min():.3g} is negative") from None
            f = v * np.sqrt(np.clip(w, 0.0, None))
        m.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "sigma_matrix", m)
        object.__setattr__(self, "factor", f)

    @property
    def d(self) -> int:
        return self.sigma_matrix.shape[0]

    @classmethod
    def equicorrelated(cls, d: int, rho: float) -> "CorrelationMatrix":
        """All off-diagonal entries equal to ``rho``; needs ``rho >= -1/(d-1)``."""
        if d < 1:
            raise InvalidInput("d must be positive")
        m = np.full((d, d), float(rho))
        np.fill_diagonal(m, 1.0)
        return cls(m)

    @classmethod
    def autoregressive(cls, d: int, rho: float) -> "CorrelationMatrix":
        """Entries ``rho^|i-j|``."""
        if not -1.0 <= rho <= 1.0:
            raise NotPSD(f"AR correlation needs |rho| <= 1, got {rho}")
        idx = np.arange(d)
        lag = np.abs(idx[:, None] - idx[None, :])
        return cls(np.where(lag == 0, 1.0, float(rho) ** lag))

    @classmethod
    def bivariate(cls, rho: float) -> "CorrelationMatrix":
        return cls.equicorrelated(2, rho)


def _normal_rows(corr: CorrelationMatrix, n: int, rng) -> np.ndarray:
    z = rng.standard_normal((n, corr.d))
    return z @ corr.factor.T


def sample_mvn(corr: CorrelationMatrix, n: int, seed: int) -> Sample:
    if n < 2:
        raise InvalidInput("n must be at least 2")
    return Sample(_normal_rows(corr, n, rng_for(seed)))


def sample_mvt(corr: CorrelationMatrix, dof: int, n: int, seed: int) -> Sample:
    """Multivariate t: a normal row divided by ``sqrt(chi2_dof / dof)`` shared across the row."""
    if dof < 1:
        raise InvalidInput(f"dof must be at least 1, got {dof}")
    if n < 2:
        raise InvalidInput("n must be at least 2")
    rng = rng_for(seed)
    z = _normal_rows(corr, n, rng)
    w = np.sqrt(rng.chisquare(dof, size=n) / dof)
    return Sample(z / w[:, None])


# -- scenarios ------------------------------------------------------------------------


def _uniform(rng, lo, hi, shape):
    return rng.uniform(lo, hi, size=shape)


def _gen_bvn(sc, n, rng):
    return _normal_rows(CorrelationMatrix.bivariate(sc.rho), n, rng)


def _gen_mvn_equi(sc, n, rng):
    return _normal_rows(CorrelationMatrix.equicorrelated(sc.d, sc.rho), n, rng)


def _gen_mvn_ar(sc, n, rng):
    return _normal_rows(CorrelationMatrix.autoregressive(sc.d, sc.rho), n, rng)


def _gen_mvt(sc, n, rng):
    z = _normal_rows(CorrelationMatrix.equicorrelated(sc.d, sc.rho), n, rng)
    w = np.sqrt(rng.chisquare(sc.dof, size=n) / sc.dof)
    return z / w[:, None]


def _gen_independent(sc, n, rng):
    return rng.random((n, sc.d))


def _gen_linear_noise(sc, n, rng):
    x = rng.standard_normal(n)
    y = x + sc.noise * rng.standard_normal(n)
    return np.column_stack([x, y])


def _gen_cosine(sc, n, rng):
    x = _uniform(rng, -1.0, 1.0, n)
    y = np.cos(2.0 * math.pi * x) + _uniform(rng, -0.5, 0.5, n)
    return np.column_stack([x, y])


def _gen_additive(sc, n, rng):
    x = _uniform(rng, -10.0, 10.0, (n, sc.d - 1))
    last = x.sum(axis=1) + _uniform(rng, -1.0, 1.0, n)
    return np.column_stack([x, last])


def _gen_multiplicative(sc, n, rng):
    x = _uniform(rng, 0.0, 10.0, (n, sc.d - 1))
    last = x.prod(axis=1) + _uniform(rng, -1.0, 1.0, n)
    return np.column_stack([x, last])


def _gen_quadratic(sc, n, rng):
    x = _uniform(rng, -10.0, 10.0, (n, sc.d - 1))
    last = (x**2).sum(axis=1) + _uniform(rng, -1.0, 1.0, n)
    return np.column_stack([x, last])


def _gen_orientation(sc, n, rng):
    i = np.arange(1, n + 1, dtype=float)
    return np.column_stack([s * i for s in sc.signs])


# Stand-ins for the pictorial-only cases of the bivariate comparison table.
# Shapes are chosen to match the printed qualitative behaviour (three
# symmetric non-monotone clouds, then four monotone ones); they are not the
# original recipes.


def _gen_circle(sc, n, rng):
    t = _uniform(rng, 0.0, 2.0 * math.pi, n)
    r = 1.0 + 0.05 * rng.standard_normal(n)
    return np.column_stack([r * np.cos(t), r * np.sin(t)])


def _gen_sine(sc, n, rng):
    x = _uniform(rng, -1.0, 1.0, n)
    y = np.cos(3.0 * math.pi * x) + 0.2 * rng.standard_normal(n)
    return np.column_stack([x, y])


def _gen_cross(sc, n, rng):
    x = _uniform(rng, -1.0, 1.0, n)
    sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    y = sign * x + 0.05 * rng.standard_normal(n)
    return np.column_stack([x, y])


def _gen_exp_curve(sc, n, rng):
    x = _uniform(rng, 0.0, 3.0, n)
    return np.column_stack([x, np.exp(x)])


def _gen_noisy_increasing(sc, n, rng):
    x = _uniform(rng, 0.0, 1.0, n)
    return np.column_stack([x, x**2 + 0.05 * rng.standard_normal(n)])


def _gen_noisy_decreasing(sc, n, rng):
    x = _uniform(rng, 0.0, 1.0, n)
    return np.column_stack([x, np.exp(-3.0 * x) + 0.05 * rng.standard_normal(n)])


def _gen_step_decreasing(sc, n, rng):
    x = _uniform(rng, 0.0, 3.0, n)
    return np.column_stack([x, -np.exp(x)])


_GENERATORS = {
    "bvn": _gen_bvn,
    "mvn-equi": _gen_mvn_equi,
    "mvn-ar": _gen_mvn_ar,
    "mvt": _gen_mvt,
    "independent": _gen_independent,
    "linear-noise": _gen_linear_noise,
    "cosine": _gen_cosine,
    "additive": _gen_additive,
    "multiplicative": _gen_multiplicative,
    "quadratic": _gen_quadratic,
    "orientation": _gen_orientation,
    "table1-h": _gen_circle,
    "table1-i": _gen_sine,
    "table1-j": _gen_cross,
    "table1-k": _gen_exp_curve,
    "table1-l": _gen_noisy_increasing,
    "table1-m": _gen_noisy_decreasing,
    "table1-n": _gen_step_decreasing,
}

#: scenarios whose recipe is a guess rather than a printed formula
NON_REPRODUCIBLE = frozenset(f"table1-{c}" for c in "hijklmn")

_FIXED_D2 = {"bvn", "linear-noise", "cosine"} | NON_REPRODUCIBLE


@dataclass(frozen=True)
class Scenario:
    """A named generative recipe and its parameters.

    Parameters not used by a recipe are ignored.  ``d`` is forced to 2 for
    bivariate recipes and to ``len(signs)`` for orientation patterns.
    """

    name: str
    d: int = 2
    rho: float = 0.0
    dof: int = 3
    noise: float = 2.3
    signs: tuple = ()

    def __post_init__(self):
        if self.name not in _GENERATORS:
            raise UnknownScenario(f"unknown scenario {self.name!r}; known: {', '.join(sorted(_GENERATORS))}")
        if self.name in _FIXED_D2:
            object.__setattr__(self, "d", 2)
        if self.name == "orientation":
            signs = tuple(int(s) for s in self.signs)
            if len(signs) < 2 or any(s not in (-1, 1) for s in signs):
                raise InvalidInput("orientation needs at least two signs, each +1 or -1")
            object.__setattr__(self, "signs", signs)
            object.__setattr__(self, "d", len(signs))
        if self.d < 2:
            raise InvalidInput(f"scenario dimension must be at least 2, got {self.d}")
        if self.name in ("bvn", "mvn-ar") and not -1.0 <= self.rho <= 1.0:
            raise NotPSD(f"rho must lie in [-1, 1], got {self.rho}")
        if self.name in ("mvn-equi", "mvt"):
            lo = -1.0 / (self.d - 1)
            if not lo - PSD_TOL <= self.rho <= 1.0:
                raise NotPSD(f"equicorrelated rho must lie in [{lo:.4g}, 1] for d={self.d}, got {self.rho}")
        if self.name == "mvt" and self.dof < 1:
            raise InvalidInput("dof must be at least 1")
        if self.name == "linear-noise" and self.noise < 0:
            raise InvalidInput("noise scale must be non-negative")

    @property
    def reproducible(self) -> bool:
        return self.name not in NON_REPRODUCIBLE

    def label(self) -> str:
        if self.name == "orientation":
            return "orientation(" + ",".join("+" if s > 0 else "-" for s in self.signs) + ")"
        if self.name == "bvn":
            return f"bvn(rho={self.rho:g})"
        if self.name in ("mvn-equi", "mvn-ar"):
            return f"{self.name}(d={self.d},rho={self.rho:g})"
        if self.name == "mvt":
            return f"mvt{self.dof}(d={self.d},rho={self.rho:g})"
        if self.name in ("additive", "multiplicative", "quadratic", "independent"):
            return f"{self.name}(d={self.d})"
        return self.name


def sample_scenario(sc: Scenario, n: int, seed: int) -> Sample:
    if not isinstance(sc, Scenario):
        raise InvalidInput("expected a Scenario")
    if n < 2:
        raise InvalidInput("n must be at least 2")
    data = _GENERATORS[sc.name](sc, n, rng_for(seed))
    return Sample(np.ascontiguousarray(data, dtype=float))


def scenario_names() -> list[str]:
    return sorted(_GENERATORS)


#: correlation of the bivariate normal cases (a)-(g) of the comparison table
TABLE1_BVN_RHO = {"a": -1.0, "b": -0.8, "c": -0.4, "d": 0.0, "e": 0.4, "f": 0.8, "g": 1.0}


def table1_scenario(case: str) -> Scenario:
    case = case.lower()
    if case in TABLE1_BVN_RHO:
        return Scenario("bvn", rho=TABLE1_BVN_RHO[case])
    if case in "hijklmn" and len(case) == 1:
        return Scenario(f"table1-{case}")
    raise UnknownScenario(f"no comparison-table case {case!r}")
