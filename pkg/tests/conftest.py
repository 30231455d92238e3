import numpy as np
import pytest

from dm2l.dataset_io import apply_mask, generate_mask, generate_synthetic
from dm2l.objective import ObjectiveSpec, build_label_groups

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_spec(rng, n=12, p=5, c=4, rho=0.7, lam=0.3, form="dm2l"):
    ds = generate_synthetic(n, p, c, min(2, p, c), noise=0.5, seed=int(rng.integers(1 << 30)))
    observed = apply_mask(ds.labels, generate_mask(n, c, rho, int(rng.integers(1 << 30))))
    return ObjectiveSpec(ds.features, observed, build_label_groups(observed), lam, form=form)


@pytest.fixture
def small_spec(rng):
    return random_spec(rng)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
