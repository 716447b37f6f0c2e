"""Test of mutual independence based on ``T = n * gamma^2(C_n, Pi_n)``.

Under independence the ranks are uniformly random permutations, so the null
law of ``T`` depends only on ``(n, d, sigma)``.  Three ways to get a cutoff:

``sim``
    quantile of a simulated null sample;
``gamma-exact``
    gamma law matched to the finite-``n`` null mean and variance, which are
    obtained by simulation and cached on disk;
``gamma-asym``
    gamma law matched to the closed-form large-``n`` moments.
"""
from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .copula import PseudoSample
from .errors import InvalidDims, InvalidInput, NonPositiveMoment
from .estimator import estimator_terms
from .kernels import as_sigma, kappa, gamma_quantile, gamma_sf, lambda_power_integral

CACHE_ENV = "CGKDM_CACHE_DIR"
CACHE_FILE = "null_moments.jsonl"
CACHE_VERSION = 1
DEFAULT_NULL_REPS = 20000


class TestMethod(str, Enum):
    __test__ = False

    SIMULATED_NULL = "sim"
    GAMMA_EXACT = "gamma-exact"
    GAMMA_ASYMPTOTIC = "gamma-asym"


@dataclass(frozen=True)
class TestStatistic:
    __test__ = False
    t: float
    n: int
    d: int
    sigma: float


@dataclass(frozen=True)
class NullMoments:
    mean: float
    variance: float
    source: str  # "monte-carlo" or "asymptotic"
    n: int | None
    d: int
    sigma: float
    reps: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if not (self.mean > 0 and self.variance > 0):
            raise NonPositiveMoment(
                f"null moments must be positive, got mean={self.mean!r}, variance={self.variance!r}"
            )


@dataclass(frozen=True)
class GammaFit:
    """Gamma law with the given mean and variance (shape ``alpha``, scale ``beta``)."""

    alpha: float
    beta: float

    @classmethod
    def from_moments(cls, m: NullMoments) -> "GammaFit":
        return cls(m.mean**2 / m.variance, m.variance / m.mean)

    def quantile(self, prob: float) -> float:
        return gamma_quantile(prob, self.alpha, self.beta)

    def sf(self, x: float) -> float:
        return gamma_sf(x, self.alpha, self.beta)


@dataclass(frozen=True)
class TestReport:
    __test__ = False
    statistic: TestStatistic
    method: TestMethod
    cutoff: float
    p_value: float
    reject: bool
    level: float
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["method"] = self.method.value
        return out


def test_statistic(p: PseudoSample, b) -> TestStatistic:
    """``T = n (s1 - 2 s2 + v3)``, the unnormalized squared estimate times ``n``."""
    if not isinstance(p, PseudoSample):
        raise InvalidInput("expected a PseudoSample")
    sigma = as_sigma(b)
    terms = estimator_terms(p, sigma)
    return TestStatistic(p.n * terms.numerator, p.n, p.d, sigma)


test_statistic.__test__ = False  # not a pytest test


# -- null simulation ----------------------------------------------------------


def _replicate_stream(seed: int, index: int):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def null_ranks(n: int, d: int, rng) -> PseudoSample:
    """Ranks of ``n`` independent uniform vectors in dimension ``d``."""
    u = rng.random((n, d))
    ranks = np.empty((n, d), dtype=np.int32)
    for j in range(d):
        ranks[np.argsort(u[:, j]), j] = np.arange(1, n + 1, dtype=np.int32)
    return PseudoSample(ranks)


def _simulate_block(args):
    n, d, sigma, seed, start, stop = args
    out = np.empty(stop - start)
    for r in range(start, stop):
        p = null_ranks(n, d, _replicate_stream(seed, r))
        out[r - start] = n * estimator_terms(p, sigma).numerator
    return out


def simulate_null(n: int, d: int, b, reps: int, seed: int = 0, workers: int = 1) -> np.ndarray:
    """Draw ``reps`` values of ``T`` under independence.

    Replicate ``r`` always uses the random stream keyed by ``(seed, r)``, so
    the output does not depend on ``workers``.
    """
    if n < 2 or d < 2:
        raise InvalidDims(f"need n >= 2 and d >= 2, got n={n}, d={d}")
    if reps < 1:
        raise InvalidInput("reps must be positive")
    sigma = as_sigma(b)
    if workers <= 1:
        return _simulate_block((n, d, sigma, seed, 0, reps))
    edges = np.linspace(0, reps, workers * 4 + 1).astype(int)
    jobs = [(n, d, sigma, seed, int(a), int(z)) for a, z in zip(edges[:-1], edges[1:]) if z > a]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(_simulate_block, jobs))
    return np.concatenate(parts)


# -- moment cache ---------------------------------------------------------------


def default_cache_path() -> Path:
    root = os.environ.get(CACHE_ENV)
    base = Path(root) if root else Path.home() / ".cache" / "cgkdm"
    return base / CACHE_FILE


def _sigma_key(sigma: float) -> str:
    return repr(float(sigma))


class NullMomentCache:
    """Append-only JSON-lines store of simulated null moments.

    One record per line with the full key ``(n, d, sigma, reps, seed)``.
    Writes go through a file lock so concurrent processes never interleave.
    """

    def __init__(self, path=None):
        self.path = Path(path) if path is not None else default_cache_path()

    def _key(self, n, d, sigma, reps, seed):
        return {"n": int(n), "d": int(d), "sigma": _sigma_key(sigma), "reps": int(reps), "seed": int(seed)}

    def get(self, n, d, sigma, reps, seed) -> NullMoments | None:
        if not self.path.exists():
            return None
        key = self._key(n, d, sigma, reps, seed)
        found = None
        with open(self.path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    continue
                if rec.get("version") == CACHE_VERSION and rec.get("key") == key:
                    found = rec
        if found is None:
            return None
        return NullMoments(found["mean"], found["variance"], "monte-carlo", n, d, float(sigma), reps, seed)

    def put(self, m: NullMoments) -> None:
        from filelock import FileLock

        self.path.parent.mkdir(parents=True, exist_ok=True)
        rec = {
            "version": CACHE_VERSION,
            "key": self._key(m.n, m.d, m.sigma, m.reps, m.seed),
            "mean": m.mean,
            "variance": m.variance,
            "created_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        }
        with FileLock(str(self.path) + ".lock"):
            with open(self.path, "a") as fh:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def exact_null_moments(
    n: int,
    d: int,
    b,
    reps: int = DEFAULT_NULL_REPS,
    seed: int = 0,
    cache: NullMomentCache | bool | None = None,
    workers: int = 1,
) -> NullMoments:
    """Finite-``n`` null mean and variance of ``T`` estimated by simulation.

    ``cache=None`` uses the default store, ``False`` disables caching.
    """
    if reps < 2:
        raise InvalidInput("need at least 2 null replicates to estimate a variance")
    sigma = as_sigma(b)
    store = None
    if cache is None or cache is True:
        store = NullMomentCache()
    elif cache is not False:
        store = cache
    if store is not None:
        hit = store.get(n, d, sigma, reps, seed)
        if hit is not None:
            return hit
    t = simulate_null(n, d, sigma, reps, seed, workers=workers)
    m = NullMoments(float(t.mean()), float(t.var(ddof=1)), "monte-carlo", n, d, sigma, reps, seed)
    if store is not None:
        store.put(m)
    return m


def asymptotic_moments(d: int, b) -> NullMoments:
    """Large-``n`` null mean and variance of ``T`` from their closed forms.

    With ``w1 = kappa(s/sqrt2)``, ``w2 = int lambda^2`` and ``w3 = kappa(s)``::

        mean = 1 + (d-1) w3^d - d w3^(d-1)
        var  = 2 [w1^d + 2(d-1) w2^d - 2d w2^(d-1) w1 + d w3^(2d-2) w1
                  - (d-1) w3^(2d) + d(d-1) w3^(2d-4) (w3^2 - w2)^2]
    """
    if int(d) != d or d < 2:
        raise InvalidDims(f"need d >= 2, got {d}")
    d = int(d)
    sigma = as_sigma(b)
    w1 = kappa(sigma / math.sqrt(2.0))
    w2 = lambda_power_integral(sigma, 2)
    w3 = kappa(sigma)
    mean = 1.0 + (d - 1) * w3**d - d * w3 ** (d - 1)
    var = 2.0 * (
        w1**d
        + 2 * (d - 1) * w2**d
        - 2 * d * w2 ** (d - 1) * w1
        + d * w3 ** (2 * d - 2) * w1
        - (d - 1) * w3 ** (2 * d)
        + d * (d - 1) * w3 ** (2 * d - 4) * (w3**2 - w2) ** 2
    )
    return NullMoments(mean, var, "asymptotic", None, d, sigma)


# -- the test ---------------------------------------------------------------------


def choose_method(n: int) -> TestMethod:
    """Simulation below 20 observations, asymptotic gamma above 1000, else exact gamma."""
    if n < 20:
        return TestMethod.SIMULATED_NULL
    if n > 1000:
        return TestMethod.GAMMA_ASYMPTOTIC
    return TestMethod.GAMMA_EXACT


def run_test(
    p: PseudoSample,
    b,
    method="auto",
    level: float = 0.05,
    reps: int | None = None,
    seed: int = 0,
    cache: NullMomentCache | bool | None = None,
    workers: int = 1,
) -> TestReport:
    """Test mutual independence of the columns behind ``p``.

    Parameters
    ----------
    method : {"auto", "sim", "gamma-exact", "gamma-asym"} or TestMethod
    level : float
        Nominal size, in ``(0, 1)``.
    reps : int, optional
        Null replicates for ``sim`` (default 2000) or ``gamma-exact``
        (default 20000).
    """
    if not 0.0 < level < 1.0:
        raise InvalidInput(f"level must lie in (0, 1), got {level}")
    stat = test_statistic(p, b)
    requested = method.value if isinstance(method, TestMethod) else str(method)
    m = choose_method(stat.n) if requested == "auto" else TestMethod(requested)
    meta = {"requested_method": requested, "seed": seed}
    if m is TestMethod.SIMULATED_NULL:
        reps = 2000 if reps is None else reps
        sample = simulate_null(stat.n, stat.d, stat.sigma, reps, seed, workers=workers)
        cutoff = float(np.quantile(sample, 1.0 - level))
        exceed = int(np.sum(sample >= stat.t))
        p_value = (exceed + 1) / (reps + 1)
        meta["reps"] = reps
    else:
        if m is TestMethod.GAMMA_EXACT:
            reps = DEFAULT_NULL_REPS if reps is None else reps
            moments = exact_null_moments(stat.n, stat.d, stat.sigma, reps, seed, cache=cache, workers=workers)
            meta["reps"] = reps
        else:
            moments = asymptotic_moments(stat.d, stat.sigma)
        fit = GammaFit.from_moments(moments)
        cutoff = fit.quantile(1.0 - level)
        p_value = fit.sf(stat.t)
        meta.update(null_mean=moments.mean, null_variance=moments.variance, alpha=fit.alpha, beta=fit.beta)
    return TestReport(stat, m, cutoff, float(p_value), bool(stat.t > cutoff), level, meta)
