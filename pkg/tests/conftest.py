import sys

import numpy as np
import pytest

from cpapprox.complex import BranchAssignment, DomainSpec, build_subcomplex, hex_patch
from cpapprox.solver import pack


@pytest.fixture(scope="session")
def unit_disk():
    return DomainSpec.disk()


@pytest.fixture(scope="session")
def disk8(unit_disk):
    return build_subcomplex(unit_disk, 8)


@pytest.fixture(scope="session")
def disk32(unit_disk):
    return build_subcomplex(unit_disk, 32)


@pytest.fixture(scope="session")
def patches():
    return {g: hex_patch(g) for g in (1, 2, 3)}


@pytest.fixture(scope="session")
def branched8(disk8):
    br = BranchAssignment.simple([disk8.vertex_at(0, 0)])
    return pack(disk8, np.full(len(disk8.boundary_vertices), 1 / 8), br)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    verdicts = getattr(mod, "VERDICTS", None)
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for num in sorted(verdicts):
            terminalreporter.write_line(verdicts[num])
