import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wageimpute.domain import EstablishmentRecord, OccupationPanel
from wageimpute.errors import EmptyInput, NoEmployees
from wageimpute.preprocess import (
    COVARIATE_NAMES, DESIGN_COLUMNS, CovariateVector, build_covariates, design_columns,
    identify_bmsa, winsor_cuts, winsorize_avewage,
)


def test_winsorize_one_to_hundred():
    w = winsorize_avewage(np.arange(1.0, 101.0))
    assert w[0] == pytest.approx(1.99)
    assert w[-1] == pytest.approx(99.01)
    assert np.all(w[1:-1] == np.arange(2.0, 100.0))


def test_winsorize_empty():
    with pytest.raises(EmptyInput):
        winsorize_avewage([])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=80))
def test_winsorize_is_monotone_and_bounded(values):
    w = winsorize_avewage(values)
    lo, hi = winsor_cuts(values)
    assert np.all((w >= lo - 1e-9) & (w <= hi + 1e-9))
    order = np.argsort(values, kind="stable")
    assert np.all(np.diff(w[order]) >= -1e-9)


def test_bmsa_threshold():
    panels = [OccupationPanel(f"E{i}", "s", 1, (1,) + (0,) * 11) for i in range(6)]
    panels.append(OccupationPanel("E0", "other", 1, (1,) + (0,) * 11))
    msa = {f"E{i}": ("A" if i < 4 else "B") for i in range(6)}
    assert identify_bmsa(panels, msa, "s", threshold=4) == frozenset({"A"})
    assert identify_bmsa(panels, msa, "s", threshold=2) == frozenset({"A", "B"})
    assert identify_bmsa(panels, msa, "nobody", threshold=1) == frozenset()


def _estab(**kw):
    base = dict(estab_id="E", empl=20, wage=300000.0, naics=541110, msa="M1",
                msacatt6=True, multi=False)
    base.update(kw)
    return EstablishmentRecord(**base)


def test_covariate_layout():
    e = _estab()
    x = build_covariates(e, OccupationPanel("E", "s", 1, (1,) + (0,) * 11), {"M1"}, 15000.0)
    assert x["const"] == 1.0
    assert x["avewage"] == 15000.0 and x["avewage_sq"] == 15000.0 ** 2
    assert x["log_empl"] == pytest.approx(math.log(20))
    assert x["single"] == 1.0 and x["avewage_x_single"] == 15000.0
    assert (x["msacatt6"], x["bmsa"], x["multi"]) == (1.0, 1.0, 0.0)
    assert x.is_consistent()
    assert len(x.values) == len(COVARIATE_NAMES) == 10


def test_single_only_for_one_employee():
    x = build_covariates(_estab(), OccupationPanel("E", "s", 2), set(), 100.0)
    assert x["single"] == 0.0 and x["avewage_x_single"] == 0.0 and x["bmsa"] == 0.0


def test_no_employees():
    with pytest.raises(NoEmployees):
        build_covariates(_estab(), OccupationPanel("E", "s", 0, (0,) * 12), set(), 1.0)


def test_panel_must_match_establishment():
    with pytest.raises(ValueError):
        build_covariates(_estab(), OccupationPanel("X", "s", 1), set(), 1.0)


def test_inconsistent_vector_detected():
    vals = list(build_covariates(_estab(), OccupationPanel("E", "s", 3), set(), 10.0).values)
    vals[2] += 1.0
    assert not CovariateVector(tuple(vals)).is_consistent()


def test_model_specs():
    assert design_columns("FULL") == DESIGN_COLUMNS
    no_ave = design_columns("NO-AVEWAGE")
    assert not any("avewage" in c for c in no_ave)
    assert set(no_ave) < set(DESIGN_COLUMNS)
    with pytest.raises(ValueError):
        design_columns("PARTIAL")
