import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from exdomains.dispersion import find_lambda_star
from exdomains.profile import PeriodicProfile

# HYP_EXAMPLES raises the example count for a stress run
settings.register_profile(
    "default",
    deadline=None,
    max_examples=int(os.environ.get("HYP_EXAMPLES", 40)),
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def lambda_star():
    return find_lambda_star().lambda_star


def random_profile(rng, n_max=8, a0_range=(0.6, 2.0), rel_amp=0.2):
    """Positive profile with modes <= n_max and perturbation <= rel_amp * a0."""
    nb = int(rng.integers(1, n_max + 1))
    a = np.zeros(nb + 1)
    a[0] = rng.uniform(*a0_range)
    c = rng.normal(size=nb) / np.arange(1, nb + 1) ** 1.5
    a[1:] = rel_amp * a[0] * c / np.sum(np.abs(c))
    return PeriodicProfile(a)


@pytest.fixture(scope="session")
def profile_corpus():
    rng = np.random.default_rng(20240611)
    return [random_profile(rng) for _ in range(20)]


_ACCEPTANCE = pytest.StashKey[dict]()


class _Criterion:
    def __init__(self, table, number, title):
        self.table, self.number, self.title = table, number, title
        self.details = {}

    def __enter__(self):
        return self.details

    def __exit__(self, exc_type, exc, tb):
        passed = exc_type is None
        prev = self.table.get(self.number)
        if prev is not None:
            passed = passed and prev[1]
            self.details = {**prev[2], **self.details}
        self.table[self.number] = (self.title, passed, self.details)
        return False


@pytest.fixture
def criterion(request):
    """Context manager factory recording the outcome of one acceptance criterion."""
    table = request.config.stash.setdefault(_ACCEPTANCE, {})
    return lambda number, title: _Criterion(table, number, title)


def pytest_terminal_summary(terminalreporter, config):
    table = config.stash.get(_ACCEPTANCE, None)
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(table):
        title, passed, details = table[n]
        extra = ", ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}"
                          for k, v in details.items())
        terminalreporter.write_line(
            f"criterion {n} [{title}]: {'PASS' if passed else 'FAIL'}" + (f" ({extra})" if extra else ""))
