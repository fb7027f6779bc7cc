import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gerbecoh.gmod import cyclic_group
from gerbecoh.samples import coset_site, coset_tower
from gerbecoh.tn import sign_datum, sl2_datum

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# filled in by test_acceptance.py and echoed at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def c2():
    return cyclic_group(2)


@pytest.fixture
def c2_site(c2):
    """v1 split, v2 and v3 inert."""
    return coset_site(c2, [[0], [0, 1], [0, 1]])


@pytest.fixture
def sign(c2):
    return sign_datum(c2, (1, -1))


@pytest.fixture
def sl2(c2):
    return sl2_datum(c2)


@pytest.fixture
def c4_tower():
    """C4 over C2 = C4/{0,2}; v1 split everywhere, v2 and v3 inert all the way."""
    return coset_tower(cyclic_group(4), [0, 2], [[0], [0, 1, 2, 3], [0, 1, 2, 3]])
