import numpy as np
import pytest

from ffoneclass.data import make_splits, synthetic_banknote_like
from ffoneclass.experiments import PreparedData


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def small_dataset():
    return synthetic_banknote_like(n_genuine=120, n_counterfeit=90, seed=5)


@pytest.fixture(scope="session")
def small_splits(small_dataset):
    return make_splits(small_dataset, split_seed=0)


@pytest.fixture(scope="session")
def small_data(small_dataset, small_splits):
    return PreparedData.from_splits(small_dataset, small_splits)


def sort_quantile(values, q):
    """Linear interpolation between closest order statistics, by hand."""
    v = sorted(float(x) for x in values)
    pos = (len(v) - 1) * q
    lo = int(pos)
    hi = min(lo + 1, len(v) - 1)
    return v[lo] + (pos - lo) * (v[hi] - v[lo])


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    num, title = mark.args
    entry = item.config._criteria.setdefault(num, {"title": title, "ok": True, "ran": False, "why": ""})
    if rep.when == "call" or rep.failed:
        entry["ran"] = True
        if rep.failed:
            entry["ok"] = False
            entry["why"] = str(rep.longrepr.reprcrash.message if hasattr(rep.longrepr, "reprcrash") else rep.longrepr)
    for name, text in rep.user_properties:
        if name == "note":
            entry["note"] = text


def pytest_terminal_summary(terminalreporter, config):
    crit = config._criteria
    if not crit:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(crit):
        e = crit[num]
        status = "PASS" if e["ok"] and e["ran"] else "FAIL" if e["ran"] else "SKIP"
        line = f"{status} criterion {num}: {e['title']}"
        if e.get("note"):
            line += f" [{e['note']}]"
        if not e["ok"]:
            line += f" -- {e['why'].splitlines()[0][:200]}"
        terminalreporter.write_line(line)
