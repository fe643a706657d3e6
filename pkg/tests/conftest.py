import numpy as np
import pytest

import polarlab as pl

SUITE_PRESETS = ("iid:0.5", "iid:0.11", "hmm2", "ge", "bb00")


@pytest.fixture(scope="session")
def kernels():
    """The five named processes exercised throughout the suite."""
    return {name: pl.resolve_process(name) for name in SUITE_PRESETS}


@pytest.fixture(scope="session")
def bb00():
    return pl.get_preset("bb00")


@pytest.fixture(scope="session")
def hmm2():
    return pl.get_preset("hmm2")


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260819)
