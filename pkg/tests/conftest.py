import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fdrepair import order_example  # noqa: E402
from fdrepair.relation import FunctionalDependency  # noqa: E402

# Tuple ids 0..5 stand for t1..t6.
T1, T2, T3, T4, T5, T6 = range(6)


@pytest.fixture
def running():
    return order_example()


@pytest.fixture
def fd2():
    return [FunctionalDependency(("zip",), ("CT", "ST"))]
