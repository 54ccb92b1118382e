from __future__ import annotations

import math
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def same_float(a, b) -> bool:
    return a == b or (math.isnan(a) and math.isnan(b))


def records_equal(r1, r2) -> bool:
    """Dataclass equality that treats NaN fields as equal."""
    d1, d2 = vars(r1), vars(r2)
    if d1.keys() != d2.keys():
        return False
    for k in d1:
        a, b = d1[k], d2[k]
        if isinstance(a, float):
            if not same_float(a, b):
                return False
        elif isinstance(a, dict):
            if a.keys() != b.keys():
                return False
            for kk in a:
                x, y = a[kk], b[kk]
                if hasattr(x, "__dict__"):
                    if not records_equal(x, y):
                        return False
                elif not same_float(x, y):
                    return False
        elif isinstance(a, np.ndarray):
            if not np.array_equal(a, b, equal_nan=True):
                return False
        elif a != b:
            return False
    return True


def bundles_equal(b1, b2) -> bool:
    if b1.meta != b2.meta or b1.glucose != b2.glucose or b1.hr != b2.hr:
        return False
    for attr in ("daily", "exercises", "sleeps", "stress"):
        l1, l2 = getattr(b1, attr), getattr(b2, attr)
        if len(l1) != len(l2) or not all(records_equal(x, y) for x, y in zip(l1, l2)):
            return False
    return b1.eda == b2.eda and b1.ecg == b2.ecg


@pytest.fixture(scope="session")
def small_cohort():
    from wearlab.synthcohort import CohortSpec, generate_cohort
    return generate_cohort(CohortSpec(n_positive=12, n_negative=10, days=7, effect_scale=3.0, seed=3))


# acceptance reporting: one pass/fail line per criterion in the terminal summary


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")
    config._acceptance = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or not (rep.when == "call" or rep.failed):
        return
    number, title = mark.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    item.config._acceptance[number] = (rep.passed, title, detail, rep.duration)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_acceptance", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        passed, title, detail, secs = results[number]
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title} ({secs:.1f}s)"
        terminalreporter.write_line(line + (f": {detail}" if detail else ""))
