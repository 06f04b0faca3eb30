import os
import sys

import numpy as np
import pandas as pd
import pytest

from hypothesis import settings

from salix.dataset import ColumnSpec, from_frame

settings.register_profile("salix", max_examples=40, deadline=None)
settings.load_profile("salix")

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def make_ds(data: dict, kinds: dict, weights=None):
    """Dataset from a column dict; ``kinds`` maps name -> kind."""
    cols = [ColumnSpec(n, kinds.get(n, "numeric")) for n in data]
    return from_frame(pd.DataFrame(data), cols, weights)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def hydro_small():
    from salix.synth import SynthSpec, gen_hydro
    spec = SynthSpec(n_drills=40, years_per_drill=8, basin_sizes=(15, 10, 8, 5, 2), seed=3)
    return gen_hydro(spec)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        parts = results[n]
        status = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        terminalreporter.write_line(f"CRITERION {n}: {status}  " + "; ".join(d for _, d in parts))
