import numpy as np
import pytest
from PIL import Image

from ssmatte.imageio import Label

F, B, U = Label.FOREGROUND, Label.BACKGROUND, Label.UNKNOWN


@pytest.fixture
def write_png(tmp_path):
    def _write(name, array, mode=None):
        path = tmp_path / name
        img = Image.fromarray(np.asarray(array)) if mode is None else Image.fromarray(np.asarray(array)).convert(mode)
        img.save(path, format="PNG")
        return str(path)
    return _write


def random_trimap(rng, h, w, p_unknown=0.4):
    """Random trimap guaranteed to hold at least one F, one B and one U pixel."""
    labels = rng.choice([F, B, U], size=(h, w), p=[(1 - p_unknown) / 2, (1 - p_unknown) / 2, p_unknown])
    flat = labels.ravel()
    slots = rng.choice(flat.size, size=3, replace=False)
    flat[slots] = [F, B, U]
    return flat.reshape(h, w).astype(np.uint8)


# -- acceptance summary: one line per criterion ---------------------------

_acceptance = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    criterion = item.get_closest_marker("criterion")
    if criterion is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.skipped):
        status = "SKIP" if rep.skipped else ("PASS" if rep.passed else "FAIL")
        detail = getattr(item, "_detail", "")
        _acceptance.append(f"[{status}] {criterion.args[0]}" + (f"  ({detail})" if detail else ""))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion reported in the summary")


def pytest_terminal_summary(terminalreporter):
    if _acceptance:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance:
            terminalreporter.write_line(line)


@pytest.fixture
def detail(request):
    """Attach a measured-value string to the acceptance summary line."""
    def _set(text):
        request.node._detail = text
    return _set
