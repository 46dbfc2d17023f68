import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sliceplace.resource import DcType, Psn  # noqa: E402
from sliceplace.slices import Nspr  # noqa: E402


def make_d4() -> Psn:
    """Four servers n1..n4 (ids 1..4), unit cost weights; n1 doubles as the
    access anchor."""
    psn = Psn()
    psn.add_dc(0, DcType.EDC)
    for sid, cap in [(1, 4), (2, 4), (3, 2), (4, 8)]:
        psn.add_server(sid, 0, cap, cap)
    psn.add_link(1, 2, bw_cap=10, latency=10)
    psn.add_link(1, 3, bw_cap=5, latency=5)
    psn.add_link(3, 2, bw_cap=5, latency=5)
    psn.add_link(2, 4, bw_cap=20, latency=20)
    return psn


def make_nspr_x(nspr_id=0) -> Nspr:
    return Nspr.chain(nspr_id, [(2, 2), (2, 2)], [(1, 10), (4, 15)], e2e_latency=20, access_node=1)


@pytest.fixture
def d4():
    return make_d4()


@pytest.fixture
def nspr_x():
    return make_nspr_x()


_CRITERIA = []


@pytest.fixture
def criterion():
    """``criterion(n, ok, detail)`` records one acceptance verdict, prints it
    and fails the test when ``ok`` is false."""
    def report(n, ok, detail):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
        _CRITERIA.append(line)
        print(line)
        assert ok, line
    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
