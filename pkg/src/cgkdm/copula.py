"""Pseudo-observations and the discrete reference copulas.

A raw ``n x d`` sample is mapped to normalized ranks ``rank / n``, which take
values on the grid ``{1/n, ..., 1}``.  The empirical copula ``C_n`` puts mass
``1/n`` on every pseudo-observation, the discrete maximum copula ``M_n`` on
the diagonal grid points and the discrete product copula ``Pi_n`` on the whole
``n^d`` lattice.  Only the first is needed for estimation; the grids exist so
that the closed-form estimator can be checked against brute force.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import BudgetExceeded, DataError, InvalidDims, InvalidInput, TiesPresent

DEFAULT_ATOM_BUDGET = 10**6


class TiePolicy(Enum):
    ERROR = "error"
    JITTER = "jitter"


@dataclass(frozen=True, eq=False)
class Sample:
    """Raw observations, one row per draw.

    Parameters
    ----------
    data : array_like, shape (n, d)
        Finite real observations with ``n >= 2`` and ``d >= 2``.
    tie_policy : TiePolicy
        ``ERROR`` refuses tied columns; ``JITTER`` breaks ties with a tiny
        perturbation drawn from ``jitter_seed``.
    jitter_seed : int
        Seed for the jitter stream.
    """

    data: np.ndarray
    tie_policy: TiePolicy = TiePolicy.ERROR
    jitter_seed: int = 0

    def __post_init__(self):
        arr = np.array(self.data, dtype=float, copy=True)
        if arr.ndim != 2:
            raise InvalidInput(f"sample must be a 2-D array, got ndim={arr.ndim}")
        n, d = arr.shape
        if n < 2 or d < 2:
            raise InvalidDims(f"need n >= 2 and d >= 2, got n={n}, d={d}")
        bad = ~np.isfinite(arr).all(axis=1)
        if bad.any():
            raise InvalidInput(f"non-finite value in row {int(np.flatnonzero(bad)[0])}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "tie_policy", TiePolicy(self.tie_policy))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class PseudoSample:
    """Normalized ranks; every column is a permutation of ``(1/n, ..., 1)``.

    The integer ranks (1-based) are kept alongside because the estimator
    works on grid indices rather than on floats.
    """

    ranks: np.ndarray

    def __post_init__(self):
        r = np.array(self.ranks, dtype=np.int32, copy=True)
        if r.ndim != 2:
            raise InvalidInput("ranks must be a 2-D array")
        n, d = r.shape
        if n < 2 or d < 2:
            raise InvalidDims(f"need n >= 2 and d >= 2, got n={n}, d={d}")
        expected = np.arange(1, n + 1)
        if not (np.sort(r, axis=0) == expected[:, None]).all():
            raise InvalidInput("each column must be a permutation of 1..n")
        r.setflags(write=False)
        object.__setattr__(self, "ranks", r)

    @classmethod
    def from_y(cls, y) -> "PseudoSample":
        """Build from a matrix of values ``rank / n``."""
        y = np.asarray(y, dtype=float)
        r = np.rint(y * y.shape[0])
        if np.abs(r - y * y.shape[0]).max(initial=0.0) > 1e-9:
            raise InvalidInput("entries are not on the grid {1/n, ..., 1}")
        return cls(r.astype(np.int32))

    @property
    def n(self) -> int:
        return self.ranks.shape[0]

    @property
    def d(self) -> int:
        return self.ranks.shape[1]

    @property
    def y(self) -> np.ndarray:
        return self.ranks / self.n

    def permute_columns(self, perm) -> "PseudoSample":
        return PseudoSample(self.ranks[:, list(perm)])


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Finitely supported probability measure on ``[0, 1]^d``."""

    atoms: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=float, copy=True)
        if atoms.ndim != 2:
            raise InvalidInput("atoms must be a 2-D array")
        if self.weights is None:
            weights = np.full(atoms.shape[0], 1.0 / atoms.shape[0])
        else:
            weights = np.array(self.weights, dtype=float, copy=True)
        if weights.shape != (atoms.shape[0],):
            raise InvalidInput("one weight per atom is required")
        if (weights < 0).any() or abs(weights.sum() - 1.0) > 1e-12:
            raise InvalidInput("weights must be nonnegative and sum to 1")
        if (atoms < 0).any() or (atoms > 1).any():
            raise InvalidInput("atoms must lie in the unit cube")
        atoms.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def __len__(self):
        return self.atoms.shape[0]


def _ordinal_ranks(col: np.ndarray) -> np.ndarray:
    order = np.argsort(col, kind="stable")
    ranks = np.empty(col.shape[0], dtype=np.int32)
    ranks[order] = np.arange(1, col.shape[0] + 1, dtype=np.int32)
    return ranks


def rank_transform(s: Sample) -> PseudoSample:
    """Map a sample to its pseudo-observations ``rank / n`` per column.

    Raises
    ------
    TiesPresent
        If a column contains repeated values and the tie policy is ``ERROR``.
    """
    x = s.data
    n, d = x.shape
    srt = np.sort(x, axis=0)
    tied = (np.diff(srt, axis=0) == 0).any(axis=0)
    if tied.any():
        if s.tie_policy is TiePolicy.ERROR:
            cols = ", ".join(str(j) for j in np.flatnonzero(tied))
            raise TiesPresent(f"tied values in column(s) {cols}")
        # Uniform jitter below the smallest gap keeps the order of distinct
        # values and only reorders tied ones.
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(s.jitter_seed)))
        x = x.copy()
        for j in np.flatnonzero(tied):
            gaps = np.diff(np.unique(x[:, j]))
            scale = gaps.min() if gaps.size else 1.0
            x[:, j] = x[:, j] + rng.uniform(-0.25, 0.25, size=n) * scale
            if (np.diff(np.sort(x[:, j])) == 0).any():
                raise TiesPresent(f"jitter could not break ties in column {j}")
    ranks = np.empty((n, d), dtype=np.int32)
    for j in range(d):
        ranks[:, j] = _ordinal_ranks(x[:, j])
    return PseudoSample(ranks)


def empirical_copula(p: PseudoSample) -> DiscreteDistribution:
    """Uniform measure on the pseudo-observations."""
    return DiscreteDistribution(p.y, np.full(p.n, 1.0 / p.n))


def max_copula_grid(n: int, d: int) -> DiscreteDistribution:
    """Uniform measure on the diagonal points ``(i/n, ..., i/n)``."""
    if n < 1 or d < 2:
        raise InvalidDims(f"need n >= 1 and d >= 2, got n={n}, d={d}")
    diag = np.arange(1, n + 1) / n
    return DiscreteDistribution(np.repeat(diag[:, None], d, axis=1), np.full(n, 1.0 / n))


def product_copula_grid(n: int, d: int, budget: int = DEFAULT_ATOM_BUDGET) -> DiscreteDistribution:
    """Uniform measure on the full lattice ``{1/n, ..., 1}^d``.

    Only meant for small brute-force checks; refuses to allocate more than
    ``budget`` atoms.
    """
    if n < 1 or d < 2:
        raise InvalidDims(f"need n >= 1 and d >= 2, got n={n}, d={d}")
    if n**d > budget:
        raise BudgetExceeded(f"{n}^{d} atoms exceed the budget of {budget}")
    axis = np.arange(1, n + 1) / n
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    atoms = np.stack([m.ravel() for m in mesh], axis=1)
    return DiscreteDistribution(atoms, np.full(atoms.shape[0], float(n) ** -d))


def read_csv(path, tie_policy: TiePolicy = TiePolicy.ERROR, jitter_seed: int = 0) -> Sample:
    """Load a numeric CSV file into a :class:`Sample`.

    A header row is detected when its first field does not parse as a float.
    Decimal points are always ``.`` regardless of locale.
    """
    rows = []
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        width = None
        for lineno, rec in enumerate(reader, start=1):
            if not rec or all(not f.strip() for f in rec):
                continue
            try:
                vals = [float(f) for f in rec]
            except ValueError:
                if not rows and width is None:
                    width = len(rec)
                    continue
                raise DataError(f"line {lineno}: non-numeric field")
            if any(not math.isfinite(v) for v in vals):
                raise DataError(f"line {lineno}: NaN or infinite value")
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise DataError(f"line {lineno}: expected {width} columns, got {len(vals)}")
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no numeric rows")
    return Sample(np.array(rows), tie_policy=tie_policy, jitter_seed=jitter_seed)


def write_csv(path, data: np.ndarray, header=None) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        if header is not None:
            w.writerow(header)
        for row in np.asarray(data):
            w.writerow([repr(float(v)) for v in row])
