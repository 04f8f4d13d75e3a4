import pytest
from hypothesis import settings

from wsnsim.config import SimConfig
from wsnsim.engine import Simulation

settings.register_profile("default", deadline=None)
settings.load_profile("default")

# acceptance lines collected by tests/test_acceptance.py, echoed at the end
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda ln: int(ln.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


def check_run_invariants(rep):
    """Self-check counters every simulation run must keep at zero."""
    assert rep.eq1_violations == 0
    assert rep.cap_violations == 0
    assert rep.capacity_violations == 0
    assert rep.size_violations == 0
    assert rep.conservation_ok
    assert rep.clock_ok


@pytest.fixture
def small_config():
    """A quick 40-node field that still has multi-hop routes."""
    return SimConfig(node_count=40, field_side=30.0, duration_ms=5000)


# Every simulation finished during the session, reduced to its self-check
# counters, so the acceptance suite can assert over all of them.
RUN_LOG: list[dict] = []
_finish = Simulation._finish


def _logged_finish(self):
    rep = _finish(self)
    RUN_LOG.append({
        "eq1": rep.eq1_violations, "cap": rep.cap_violations,
        "overfull": rep.capacity_violations, "max_occupancy": rep.max_occupancy,
        "capacity": self.cfg.queue_capacity, "min_fraction": rep.min_rate_fraction,
        "floor": round(1.0 - self.cfg.max_rate_adjustment, 12),
        "per_step": self.cfg.adjustment_mode == "per_step",
    })
    return rep


Simulation._finish = _logged_finish


def pytest_collection_modifyitems(items):
    # acceptance last, so its whole-suite checks see every other run
    items.sort(key=lambda item: item.fspath.basename == "test_acceptance.py")
