import math
import time

import numpy as np
import pytest

from hybrid_relay.config import parse_config
from hybrid_relay.experiment import run_sweep

# criterion number -> (passed, detail)
ACCEPTANCE = {}


def full_sweep_config(seed=0):
    kappas = np.logspace(-4, math.log10(0.15), 20)
    text = ("[sim]\nseed = %d\n[sweep]\ndistances_m = [1000.0, 2000.0]\nkappa_db_per_m = [%s]\n"
            % (seed, ", ".join(repr(float(k)) for k in kappas)))
    return parse_config(text)


@pytest.fixture(scope="session")
def full_sweep():
    """Full 20-attenuation, 2-distance sweep at B = 10^5; (pairs, seconds)."""
    start = time.perf_counter()
    pairs = run_sweep(full_sweep_config(), workers=2, with_results=True)
    return pairs, time.perf_counter() - start


@pytest.fixture
def report(request):
    def record(number, passed, detail):
        ACCEPTANCE[number] = (bool(passed), detail)
        reporter = request.config.pluginmanager.getplugin("terminalreporter")
        if reporter is not None:
            reporter.write_line(f"\n[criterion {number:2d}] {'PASS' if passed else 'FAIL'}: {detail}")
    return record


def pytest_runtest_makereport(item, call):
    number = getattr(item.function, "criterion", None)
    if number is not None and call.when == "call" and call.excinfo is not None \
            and number not in ACCEPTANCE:
        ACCEPTANCE[number] = (False, f"error: {call.excinfo.typename}: {call.excinfo.value}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
