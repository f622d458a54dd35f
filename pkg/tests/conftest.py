"""Shared fixtures: canonical models and reusable expensive artifacts."""

import numpy as np
import pytest

from metapop import ModelSpec


@pytest.fixture(scope="session")
def default_model() -> ModelSpec:
    """Endemic logistic parameter set (the package defaults)."""
    return ModelSpec()


@pytest.fixture(scope="session")
def subcritical_model() -> ModelSpec:
    """Constant-law parameters whose only equilibrium is extinction.

    Per-patch decline (b < d) plus catastrophes: every patch empties, and
    colonization is too weak to compensate.
    """
    return ModelSpec(law="constant", b=0.5, d=1.0, c=0.0,
                     gamma=0.5, rho=0.5, kappa=0.3)


@pytest.fixture(scope="session")
def frozen_model() -> ModelSpec:
    """All rates zero: the state never moves.  Useful as an exact oracle."""
    return ModelSpec(law="constant", b=0.0, d=0.0, c=0.0,
                     gamma=0.0, rho=0.0, kappa=0.0)


@pytest.fixture(scope="session")
def pure_death_model() -> ModelSpec:
    """Custom law with births off and unit per-capita death rate.

    From a start where every patch holds one individual this is a pure
    death chain on the number of occupied patches, with fully known law.
    """
    return ModelSpec(law="custom", b_table=(0.0,), d_table=(1.0,),
                     gamma=0.0, rho=0.0, kappa=0.0)


def random_simplex(rng: np.random.Generator, width: int,
                   support: int | None = None) -> np.ndarray:
    """Random density on the simplex with the given width."""
    x = np.zeros(width)
    k = support if support is not None else width
    idx = rng.choice(width, size=min(k, width), replace=False)
    x[idx] = rng.random(idx.size)
    return x / x.sum()
