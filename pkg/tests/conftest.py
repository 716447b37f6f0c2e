import os

import numpy as np
import pytest

from cgkdm.copula import PseudoSample, Sample, rank_transform


@pytest.fixture(autouse=True, scope="session")
def _isolated_cache(tmp_path_factory):
    # keep simulated null moments out of the user's home directory
    old = os.environ.get("CGKDM_CACHE_DIR")
    os.environ["CGKDM_CACHE_DIR"] = str(tmp_path_factory.mktemp("null-cache"))
    yield
    if old is None:
        os.environ.pop("CGKDM_CACHE_DIR", None)
    else:
        os.environ["CGKDM_CACHE_DIR"] = old


def random_pseudo(rng, n, d) -> PseudoSample:
    return rank_transform(Sample(rng.standard_normal((n, d))))


def correlated_pseudo(rng, n, rho) -> PseudoSample:
    z = rng.standard_normal((n, 2))
    z[:, 1] = rho * z[:, 0] + np.sqrt(1 - rho**2) * z[:, 1]
    return rank_transform(Sample(z))


def comonotone(n, d=2, signs=None) -> PseudoSample:
    signs = signs or [1] * d
    i = np.arange(1, n + 1, dtype=float)
    return rank_transform(Sample(np.column_stack([s * i for s in signs])))
