"""Scripted experiments behind the command-line ``experiment`` command.

Each experiment returns a list of :class:`ResultRow`.  Replicate ``r`` of a
cell always draws from a stream keyed by ``(seed, cell tag, r)``, so output
is identical for any worker count and reruns are byte-identical.
"""
from __future__ import annotations

import csv
import io
import json
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from functools import partial

import numpy as np
from scipy import stats

from . import baselines
from .copula import rank_transform
from .datagen import Scenario, TABLE1_BVN_RHO, sample_scenario, table1_scenario
from .errors import CGKDMError, InvalidInput
from .estimator import estimate, estimate_squared, estimate_type_b, estimate_type_u, estimator_terms
from .independence import (
    GammaFit,
    NullMomentCache,
    TestMethod,
    asymptotic_moments,
    exact_null_moments,
    simulate_null,
)
from .theory import cgkdm_bvn

SCHEMA_VERSION = 1
EXPERIMENTS = ("table1", "table2", "table4", "fig1", "fig2", "size-sweep", "power-sweep", "variability")

# desk-scale and original replicate counts
DESK_REPS = {"table1": 2000, "table4": 20000, "fig2": 5000, "size-sweep": 20000, "power-sweep": 2000, "variability": 2000}
FULL_REPS = {"table1": 10000, "table4": 100000, "fig2": 5000, "size-sweep": 100000, "power-sweep": 10000, "variability": 10000}

# printed reference values
TABLE1_REFERENCE = {
    "a": (1.000, 1.000, -1.000, -1.000, -1.000, 1.000),
    "b": (0.778, 0.649, -0.799, -0.590, -0.783, 0.758),
    "c": (0.379, 0.294, -0.399, -0.262, -0.383, 0.374),
    "d": (0.063, 0.112, 0.000, 0.001, 0.001, 0.122),
    "e": (0.379, 0.294, 0.399, 0.262, 0.383, 0.374),
    "f": (0.778, 0.649, 0.799, 0.590, 0.783, 0.758),
    "g": (1.000, 1.000, 1.000, 1.000, 1.000, 1.000),
    "h": (0.078, 0.221, -0.001, -0.000, -0.001, 0.218),
    "i": (0.086, 0.340, 0.001, 0.001, 0.001, 0.186),
    "j": (0.061, 0.400, -0.001, -0.000, -0.001, 0.187),
    "k": (1.000, 1.000, 0.991, 1.000, 1.000, 0.995),
    "l": (0.969, 0.944, 0.969, 0.834, 0.964, 0.972),
    "m": (0.952, 0.895, -0.941, -0.809, -0.949, 0.947),
    "n": (1.000, 1.000, -0.991, -1.000, -1.000, 0.986),
}
TABLE1_METRICS = ("I_1", "I_0.2", "pearson", "kendall", "spearman", "dcor")

# orientation -> printed multivariate Spearman rho (type 2)
TABLE2_REFERENCE = {
    (1, 1, 1): 1.0004,
    (1, 1, -1): -0.3330,
    (1, 1, 1, 1): 1.0003,
    (1, 1, 1, -1): -0.0907,
    (1, 1, -1, -1): -0.2120,
    (1, 1, 1, 1, 1): 1.0003,
    (1, 1, 1, 1, -1): 0.0155,
    (1, 1, 1, -1, -1): -0.1076,
}

# (d, sigma) -> {n: printed size of the gamma test with simulated moments}
TABLE4_REFERENCE = {
    (2, 0.2): {20: 0.0529, 30: 0.0520, 60: 0.0523, 100: 0.0521, 500: 0.0518},
    (2, 1.0): {20: 0.0531, 30: 0.0520, 60: 0.0502, 100: 0.0497, 500: 0.0500},
    (5, 0.32): {20: 0.0564, 30: 0.0550, 60: 0.0552, 100: 0.0541, 500: 0.0542},
    (5, 1.58): {20: 0.0499, 30: 0.0499, 60: 0.0506, 100: 0.0500, 500: 0.0503},
    (10, 0.45): {20: 0.0598, 30: 0.0567, 60: 0.0557, 100: 0.0544, 500: 0.0539},
    (10, 2.24): {20: 0.0513, 30: 0.0513, 60: 0.0504, 100: 0.0507, 500: 0.0506},
}

# power-curve scenarios by figure panel
POWER_SCENARIOS = {
    "bvn": Scenario("bvn", rho=0.2),
    "bvt3": Scenario("mvt", d=2, rho=0.2, dof=3),
    "linear-noise": Scenario("linear-noise"),
    "cosine": Scenario("cosine"),
    "mvn5": Scenario("mvn-equi", d=5, rho=0.2),
    "mvn10": Scenario("mvn-equi", d=10, rho=0.2),
    "mvt5": Scenario("mvt", d=5, rho=0.2, dof=3),
    "mvt10": Scenario("mvt", d=10, rho=0.2, dof=3),
    "additive5": Scenario("additive", d=5),
    "additive10": Scenario("additive", d=10),
    "multiplicative5": Scenario("multiplicative", d=5),
    "multiplicative10": Scenario("multiplicative", d=10),
    "quadratic5": Scenario("quadratic", d=5),
    "quadratic10": Scenario("quadratic", d=10),
}
DEFAULT_POWER_SCENARIOS = ("bvn", "bvt3", "linear-noise", "cosine")
DEFAULT_POWER_N = (20, 30, 60, 100, 200)


@dataclass
class ExperimentConfig:
    experiment: str
    reps: int | None = None
    n: list | None = None
    d: list | None = None
    sigmas: list | None = None
    level: float = 0.05
    seed: int = 0
    full: bool = False
    scenarios: list | None = None
    method: str = "gamma-exact"
    null_reps: int | None = None
    workers: int = 1
    cache: NullMomentCache | bool | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InvalidInput(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.reps is not None and self.reps < 1:
            raise InvalidInput("replicate count must be at least 1")
        if not 0.0 < self.level < 1.0:
            raise InvalidInput("level must lie in (0, 1)")

    def replicates(self) -> int:
        if self.reps is not None:
            return self.reps
        table = FULL_REPS if self.full else DESK_REPS
        return table.get(self.experiment, 1)


@dataclass
class ResultRow:
    experiment: str
    scenario: str
    params: dict
    metric: str
    value: float
    std_error: float | None = None
    replicates: int = 1
    reference: float | None = None
    note: str = ""

    def __post_init__(self):
        if self.replicates > 1 and self.std_error is None and math.isfinite(self.value):
            raise InvalidInput("std_error is required when replicates > 1")


# -- replicate plumbing ---------------------------------------------------------------


def cell_tag(*parts) -> int:
    return zlib.crc32(repr(parts).encode())


def replicate_seed(seed: int, tag: int, r: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(tag), int(r)]).generate_state(1)[0])


def _run(fn, reps: int, workers: int) -> np.ndarray:
    """Evaluate ``fn(start, stop)`` over replicate blocks and stack the rows."""
    if workers <= 1 or reps < 64:
        return np.asarray(fn(0, reps))
    edges = np.linspace(0, reps, workers * 4 + 1).astype(int)
    spans = [(int(a), int(z)) for a, z in zip(edges[:-1], edges[1:]) if z > a]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(_apply_span, [(fn, a, z) for a, z in spans]))
    return np.concatenate([np.asarray(p) for p in parts])


def _apply_span(args):
    fn, a, z = args
    return fn(a, z)


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float(x.mean()), float("nan")
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def _proportion_se(p: float, reps: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / reps)


def bootstrap_se(x: np.ndarray, stat, resamples: int = 200, seed: int = 0) -> float:
    """Bootstrap standard error of ``stat(x)`` with a fixed resampling stream."""
    x = np.asarray(x, dtype=float)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), x.size])))
    vals = [stat(x[rng.integers(0, x.size, x.size)]) for _ in range(resamples)]
    return float(np.std(vals, ddof=1))


# -- comparison table in dimension 2 ---------------------------------------------------------


def _table1_block(sc: Scenario, n: int, seed: int, tag: int, start: int, stop: int):
    out = np.empty((stop - start, len(TABLE1_METRICS)))
    for r in range(start, stop):
        s = sample_scenario(sc, n, replicate_seed(seed, tag, r))
        p = rank_transform(s)
        out[r - start] = (
            estimate(p, 1.0),
            estimate(p, 0.2),
            baselines.pearson(s),
            baselines.kendall(s),
            baselines.spearman(s),
            baselines.dcor(s),
        )
    return out


def table1_case(case: str, reps: int, n: int = 200, seed: int = 0, workers: int = 1) -> list[ResultRow]:
    """Average of every implemented measure over ``reps`` samples of one case."""
    sc = table1_scenario(case)
    tag = cell_tag("table1", case, n)
    vals = _run(partial(_table1_block, sc, n, seed, tag), reps, workers)
    note = "" if sc.reproducible else "stand-in recipe; not reproducible"
    rows = []
    for j, metric in enumerate(TABLE1_METRICS):
        m, se = _mean_se(vals[:, j])
        params = {"case": case, "n": n, "seed": seed}
        if case in TABLE1_BVN_RHO:
            params["rho"] = TABLE1_BVN_RHO[case]
        rows.append(ResultRow("table1", sc.label(), params, metric, m, se, reps, TABLE1_REFERENCE[case][j], note))
    return rows


def run_table1(cfg: ExperimentConfig) -> list[ResultRow]:
    n = (cfg.n or [200])[0]
    rows = []
    for case in "abcdefghijklmn":
        rows += _guard(lambda: table1_case(case, cfg.replicates(), n, cfg.seed, cfg.workers), "table1", case)
    return rows


# -- monotone orientation table -----------------------------------------------------------------


def table2_rows(n: int = 10000, sigma: float = 1.0) -> list[ResultRow]:
    rows = []
    for signs, ref in TABLE2_REFERENCE.items():
        sc = Scenario("orientation", signs=signs)
        p = rank_transform(sample_scenario(sc, n, 0))
        params = {"d": sc.d, "n": n, "sigma": sigma}
        rows.append(ResultRow("table2", sc.label(), params, "I", estimate(p, sigma), None, 1, 1.0))
        rows.append(ResultRow("table2", sc.label(), params, "spearman_rho2", baselines.mv_spearman_rho2(p), None, 1, ref))
    return rows


def run_table2(cfg: ExperimentConfig) -> list[ResultRow]:
    n = (cfg.n or [10000])[0]
    sigma = (cfg.sigmas or [1.0])[0]
    return table2_rows(n, sigma)


# -- sizes --------------------------------------------------------------------------------------------


def cutoff_for(n, d, sigma, level, method, null_reps=None, seed=0, cache=None, workers=1) -> tuple[float, dict]:
    """Rejection threshold for ``T`` and the metadata behind it."""
    m = TestMethod(method)
    if m is TestMethod.SIMULATED_NULL:
        reps = null_reps or 2000
        t = simulate_null(n, d, sigma, reps, seed, workers=workers)
        return float(np.quantile(t, 1.0 - level)), {"null_reps": reps}
    if m is TestMethod.GAMMA_EXACT:
        reps = null_reps or 20000
        mom = exact_null_moments(n, d, sigma, reps, seed, cache=cache, workers=workers)
        meta = {"null_reps": reps}
    else:
        mom = asymptotic_moments(d, sigma)
        meta = {}
    meta.update(null_mean=mom.mean, null_variance=mom.variance)
    return GammaFit.from_moments(mom).quantile(1.0 - level), meta


def empirical_size(
    n: int,
    d: int,
    sigma: float,
    reps: int,
    level: float = 0.05,
    method: str = "gamma-exact",
    seed: int = 0,
    null_reps: int | None = None,
    cache=None,
    workers: int = 1,
) -> ResultRow:
    """Rejection rate under independence.

    Cutoff moments and the test replicates come from disjoint streams, the
    former keyed by ``seed`` and the latter by ``seed + 1``.
    """
    cutoff, meta = cutoff_for(n, d, sigma, level, method, null_reps, seed, cache, workers)
    t = simulate_null(n, d, sigma, reps, seed + 1, workers=workers)
    size = float(np.mean(t > cutoff))
    ref = TABLE4_REFERENCE.get((d, round(sigma, 2)), {}).get(n) if method == "gamma-exact" else None
    params = {"n": n, "d": d, "sigma": sigma, "level": level, "method": method, "seed": seed, "cutoff": cutoff, **meta}
    return ResultRow("size", f"independent(d={d})", params, "size", size, _proportion_se(size, reps), reps, ref)


def run_table4(cfg: ExperimentConfig) -> list[ResultRow]:
    rows = []
    for (d, sigma), cells in TABLE4_REFERENCE.items():
        if cfg.d and d not in cfg.d:
            continue
        if cfg.sigmas and not any(abs(sigma - s) < 1e-9 for s in cfg.sigmas):
            continue
        for n in cells:
            if cfg.n and n not in cfg.n:
                continue

            def one():
                r = empirical_size(n, d, sigma, cfg.replicates(), cfg.level, "gamma-exact", cfg.seed, cfg.null_reps, cfg.cache, cfg.workers)
                r.experiment = "table4"
                return [r]

            rows += _guard(one, "table4", f"d={d},sigma={sigma},n={n}")
    return rows


def run_size_sweep(cfg: ExperimentConfig) -> list[ResultRow]:
    rows = []
    for d in cfg.d or [2]:
        for sigma in cfg.sigmas or [0.2 * math.sqrt(d / 2), math.sqrt(d / 2)]:
            for n in cfg.n or [20, 30, 60, 100]:
                for method in ("sim", "gamma-exact", "gamma-asym"):

                    def one():
                        r = empirical_size(n, d, sigma, cfg.replicates(), cfg.level, method, cfg.seed, cfg.null_reps, cfg.cache, cfg.workers)
                        r.experiment = "size-sweep"
                        return [r]

                    rows += _guard(one, "size-sweep", f"d={d},sigma={sigma},n={n},{method}")
    return rows


# -- power ---------------------------------------------------------------------------------------------


def _stat_block(sc: Scenario, n: int, sigma: float, seed: int, tag: int, start: int, stop: int):
    out = np.empty(stop - start)
    for r in range(start, stop):
        p = rank_transform(sample_scenario(sc, n, replicate_seed(seed, tag, r)))
        out[r - start] = n * estimator_terms(p, sigma).numerator
    return out


def power(
    sc: Scenario,
    n: int,
    sigma: float,
    reps: int,
    level: float = 0.05,
    method: str = "gamma-exact",
    seed: int = 0,
    null_reps: int | None = None,
    cache=None,
    workers: int = 1,
) -> ResultRow:
    """Rejection rate of the independence test on samples from ``sc``."""
    cutoff, meta = cutoff_for(n, sc.d, sigma, level, method, null_reps, seed, cache, workers)
    tag = cell_tag("power", sc.label(), n)
    t = _run(partial(_stat_block, sc, n, sigma, seed, tag), reps, workers)
    pw = float(np.mean(t > cutoff))
    params = {"n": n, "d": sc.d, "sigma": sigma, "level": level, "method": method, "seed": seed, **meta}
    note = "" if sc.reproducible else "stand-in recipe; not reproducible"
    return ResultRow("power-sweep", sc.label(), params, "power", pw, _proportion_se(pw, reps), reps, None, note)


def run_power_sweep(cfg: ExperimentConfig) -> list[ResultRow]:
    rows = []
    for key in cfg.scenarios or DEFAULT_POWER_SCENARIOS:
        if key not in POWER_SCENARIOS:
            raise InvalidInput(f"unknown power scenario {key!r}; choose from {', '.join(POWER_SCENARIOS)}")
        sc = POWER_SCENARIOS[key]
        sigmas = cfg.sigmas or [0.2 * math.sqrt(sc.d / 2), math.sqrt(sc.d / 2)]
        for sigma in sigmas:
            for n in cfg.n or DEFAULT_POWER_N:
                rows += _guard(
                    lambda: [power(sc, n, sigma, cfg.replicates(), cfg.level, cfg.method, cfg.seed, cfg.null_reps, cfg.cache, cfg.workers)],
                    "power-sweep",
                    f"{key},sigma={sigma},n={n}",
                )
    return rows


# -- population curve on the bivariate normal ------------------------------------------------------


def run_fig1(cfg: ExperimentConfig) -> list[ResultRow]:
    rows = []
    grid = np.round(np.linspace(0.0, 1.0, 21), 10)
    for sigma in cfg.sigmas or [0.2, 1.0]:
        for rho in grid:
            rows += _guard(
                lambda: [ResultRow("fig1", "bvn", {"rho": float(rho), "sigma": sigma}, "I", cgkdm_bvn(float(rho), sigma))],
                "fig1",
                f"rho={rho},sigma={sigma}",
            )
    return rows


# -- sampling distributions -------------------------------------------------------------------------


def _estimate_block(sc: Scenario, n: int, sigma: float, squared: bool, seed: int, tag: int, start: int, stop: int):
    out = np.empty(stop - start)
    f = estimate_squared if squared else estimate
    for r in range(start, stop):
        p = rank_transform(sample_scenario(sc, n, replicate_seed(seed, tag, r)))
        out[r - start] = f(p, sigma)
    return out


def sampling_distribution(sc: Scenario, n: int, sigma: float, reps: int, squared: bool = False, seed: int = 0, workers: int = 1) -> np.ndarray:
    tag = cell_tag("sampling", sc.label(), n, sigma, squared)
    return _run(partial(_estimate_block, sc, n, sigma, squared, seed, tag), reps, workers)


def gamma_ks_distance(t: np.ndarray) -> float:
    """KS distance between a sample and the gamma law with the same mean and variance."""
    t = np.asarray(t, dtype=float)
    mean, var = float(t.mean()), float(t.var(ddof=1))
    return float(stats.kstest(t, stats.gamma(a=mean**2 / var, scale=var / mean).cdf).statistic)


def run_fig2(cfg: ExperimentConfig) -> list[ResultRow]:
    n = (cfg.n or [200])[0]
    sigma = (cfg.sigmas or [0.2])[0]
    reps = cfg.replicates()
    rows = []
    params = {"n": n, "sigma": sigma, "seed": cfg.seed}

    # left panel: squared estimate under independence
    null = sampling_distribution(Scenario("bvn", rho=0.0), n, sigma, reps, True, cfg.seed, cfg.workers)
    m, se = _mean_se(null)
    rows.append(ResultRow("fig2", "bvn(rho=0)", params, "I2_mean", m, se, reps))
    rows.append(ResultRow("fig2", "bvn(rho=0)", params, "I2_skewness", float(stats.skew(null)), math.sqrt(6.0 / reps), reps))
    ks = gamma_ks_distance(null)
    rows.append(ResultRow("fig2", "bvn(rho=0)", params, "gamma_ks", ks, bootstrap_se(null, gamma_ks_distance, 100, cfg.seed), reps))

    # right panel: root-n centred estimate under rho = 0.5
    alt = sampling_distribution(Scenario("bvn", rho=0.5), n, sigma, reps, False, cfg.seed, cfg.workers)
    pop = cgkdm_bvn(0.5, sigma)
    z = math.sqrt(n) * (alt - pop)
    m, se = _mean_se(alt)
    rows.append(ResultRow("fig2", "bvn(rho=0.5)", params, "I_mean", m, se, reps, pop))
    sd = float(z.std(ddof=1))
    rows.append(ResultRow("fig2", "bvn(rho=0.5)", params, "rootn_sd", sd, sd / math.sqrt(2.0 * (reps - 1)), reps))
    rows.append(ResultRow("fig2", "bvn(rho=0.5)", params, "rootn_skewness", float(stats.skew(z)), math.sqrt(6.0 / reps), reps))
    return rows


# -- estimator variability ---------------------------------------------------------------------------


def _variability_block(rho: float, n: int, m: int, sigma: float, seed: int, tag: int, start: int, stop: int):
    sc = Scenario("bvn", rho=rho)
    out = np.empty((stop - start, 3))
    for r in range(start, stop):
        rs = replicate_seed(seed, tag, r)
        p = rank_transform(sample_scenario(sc, n, rs))
        out[r - start] = (
            estimate_type_u(p, sigma, rs + 1),
            estimate_type_b(p, sigma, m, rs + 2),
            estimate_squared(p, sigma),
        )
    return out


def _iqr(x):
    q1, q3 = np.quantile(x, [0.25, 0.75])
    return float(q3 - q1)


_SPREAD = {"median": lambda x: float(np.median(x)), "iqr": _iqr, "sd": lambda x: float(np.std(x, ddof=1))}


def run_variability(cfg: ExperimentConfig) -> list[ResultRow]:
    n = (cfg.n or [100])[0]
    sigma = (cfg.sigmas or [1.0])[0]
    m = 1000
    reps = cfg.replicates()
    rows = []
    for rho in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
        tag = cell_tag("variability", rho, n)
        vals = _run(partial(_variability_block, rho, n, m, sigma, cfg.seed, tag), reps, cfg.workers)
        params = {"rho": rho, "n": n, "m": m, "sigma": sigma, "seed": cfg.seed}
        for j, name in enumerate(("type_u", "type_b", "I2")):
            x = vals[:, j]
            for metric, f in _SPREAD.items():
                se = bootstrap_se(x, f, 200, cfg.seed) if reps > 1 else None
                rows.append(ResultRow("variability", f"bvn(rho={rho:g})", params, f"{name}_{metric}", float(f(x)), se, reps))
    return rows


# -- dispatch and output ---------------------------------------------------------------------------------


def _guard(fn, experiment: str, label: str) -> list[ResultRow]:
    """Run one cell; a library error becomes a NaN row instead of aborting the run."""
    try:
        return fn()
    except CGKDMError as exc:
        return [ResultRow(experiment, label, {}, "error", float("nan"), None, 0, None, f"{type(exc).__name__}: {exc}")]


_RUNNERS = {
    "table1": run_table1,
    "table2": run_table2,
    "table4": run_table4,
    "fig1": run_fig1,
    "fig2": run_fig2,
    "size-sweep": run_size_sweep,
    "power-sweep": run_power_sweep,
    "variability": run_variability,
}


def run_experiment(cfg: ExperimentConfig) -> list[ResultRow]:
    return _RUNNERS[cfg.experiment](cfg)


CSV_COLUMNS = ("schema_version", "experiment", "scenario", "params", "metric", "value", "std_error", "replicates", "reference", "note")


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def rows_to_json(rows: list[ResultRow], cfg: ExperimentConfig | None = None) -> str:
    doc = {"schema_version": SCHEMA_VERSION}
    if cfg is not None:
        conf = asdict(cfg)
        conf.pop("cache", None)
        doc["config"] = conf
        doc["replicates"] = cfg.replicates()
    doc["rows"] = [{k: _clean(v) for k, v in asdict(r).items()} for r in rows]
    return json.dumps(doc, indent=2, sort_keys=True, default=_clean) + "\n"


def rows_to_csv(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(
            [
                SCHEMA_VERSION,
                r.experiment,
                r.scenario,
                json.dumps({k: _clean(v) for k, v in r.params.items()}, sort_keys=True),
                r.metric,
                repr(float(r.value)),
                "" if r.std_error is None else repr(float(r.std_error)),
                r.replicates,
                "" if r.reference is None else repr(float(r.reference)),
                r.note,
            ]
        )
    return buf.getvalue()
