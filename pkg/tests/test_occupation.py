from dataclasses import replace

import numpy as np
import pytest

from conftest import SOC
from wageimpute.domain import Dataset, EstablishmentRecord, OccupationPanel, WageGrid
from wageimpute.errors import EmptyInput, SingularDesign
from wageimpute.occupation import OccupationModel, fit_occupation_model, fit_sample
from wageimpute.preprocess import AVEWAGE_COLUMNS


def test_full_model_report(fitted_partial):
    rep = fitted_partial.report()
    assert rep["converged"] and rep["model_spec"] == "FULL"
    lo, hi = rep["winsor_cuts"]
    assert lo < hi
    assert rep["n_industry_classes"] >= 1


def test_predictions_are_distributions(partial_population, fitted_partial):
    ds, _ = partial_population
    for p in ds.panels[:50]:
        if p.total < 1:
            continue
        probs = fitted_partial.predict(ds.establishment(p.estab_id), p)
        assert probs.shape == (12,) and np.all(probs >= 0)
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_no_avewage_has_no_avewage_terms(partial_population):
    ds, _ = partial_population
    m = fit_occupation_model(ds, SOC, "NO-AVEWAGE", min_leaf=40)
    assert not set(m.columns) & set(AVEWAGE_COLUMNS)


def test_higher_avewage_raises_predicted_wages(partial_population, fitted_partial):
    ds, _ = partial_population
    e = next(x for x in ds.establishments if x.responded)
    p = next(q for q in ds.panels if q.estab_id == e.estab_id)
    lo, hi = fitted_partial.winsor_cuts
    low = fitted_partial.predict(replace(e, wage=lo * e.empl), p)
    high = fitted_partial.predict(replace(e, wage=hi * e.empl), p)
    v = ds.grid.interval_values()
    assert high @ v > low @ v


def test_round_trip(partial_population, fitted_partial):
    ds, _ = partial_population
    back = OccupationModel.from_dict(fitted_partial.to_dict())
    for p in ds.panels[:20]:
        e = ds.establishment(p.estab_id)
        np.testing.assert_array_equal(back.predict(e, p), fitted_partial.predict(e, p))


def test_fit_uses_only_responders(partial_population):
    ds, _ = partial_population
    sample = fit_sample(ds, SOC)
    assert all(e.responded and not p.absent for e, p in sample)


def test_fixed_tree_is_reused(partial_population, fitted_partial):
    ds, _ = partial_population
    m = fit_occupation_model(ds, SOC, "FULL", tree=fitted_partial.tree)
    assert m.tree is fitted_partial.tree
    assert m.settings["tree_fixed"] is True


def test_unknown_occupation():
    ds = Dataset(WageGrid(), (), ())
    with pytest.raises(EmptyInput):
        fit_occupation_model(ds, "none")


def _flat_dataset(n=60, **varying):
    rng = np.random.default_rng(0)
    ests, panels = [], []
    for i in range(n):
        empl = 20.0 if "empl" not in varying else float(rng.integers(5, 50))
        ave = 500.0 if "avewage" not in varying else float(rng.uniform(300, 900))
        e = EstablishmentRecord(f"E{i}", empl, ave * empl, 541110, "M1")
        c = np.bincount(rng.integers(0, 12, 4), minlength=12)
        ests.append(e)
        panels.append(OccupationPanel(e.estab_id, "s", 4, c))
    return Dataset(WageGrid(), tuple(ests), tuple(panels))


def test_constant_indicators_are_pruned():
    m = fit_occupation_model(_flat_dataset(empl=True, avewage=True), "s", min_leaf=10)
    assert {"single", "msacatt6", "bmsa", "multi"} <= set(m.dropped_columns)
    assert "avewage" in m.columns


def test_constant_continuous_column_is_singular():
    with pytest.raises(SingularDesign):
        fit_occupation_model(_flat_dataset(empl=True), "s", min_leaf=10)
