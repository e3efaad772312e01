from __future__ import annotations

import pytest

from sizesig.dataset import bundled_traces, load_manifest, reference_signatures
from sizesig.ingest import DeviceProfile
from sizesig.mining import transactions_for
from sizesig.model import EventClass

DEVICE_IP = "192.168.1.50"
AP_IP = "192.168.1.1"
CLOUD_IP = "52.1.2.3"

_acceptance_lines: list[str] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    criterion = item.get_closest_marker("criterion")
    if criterion is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        status = "PASS" if rep.passed else "FAIL"
        _acceptance_lines.append(f"[{status}] criterion {criterion.args[0]}: {criterion.args[1]}")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def profile():
    return DeviceProfile(frozenset({DEVICE_IP}), frozenset({AP_IP}))


@pytest.fixture(scope="session")
def oslo():
    return bundled_traces("oslo")


@pytest.fixture(scope="session")
def drammen():
    return bundled_traces("drammen")


@pytest.fixture(scope="session")
def reference():
    return reference_signatures()


@pytest.fixture(scope="session")
def oslo_tx(oslo):
    """Oslo transactions per event, first 20 tokens."""
    return {
        e: transactions_for([(t.id, t.tokens) for t in oslo if t.event == e], 20)
        for e in EventClass
    }


@pytest.fixture(scope="session")
def oslo_manifest():
    return load_manifest("bundled:oslo")
