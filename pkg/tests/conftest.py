import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from permdp.bench import gen_nav3


@pytest.fixture(scope="session")
def nav3_01():
    return gen_nav3(0.1)


@pytest.fixture(scope="session")
def nav3_005():
    return gen_nav3(0.05)


@pytest.fixture(scope="session")
def nav3_00():
    return gen_nav3(0.0)
