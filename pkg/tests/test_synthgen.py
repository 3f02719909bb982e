import numpy as np
import pytest
from scipy.stats import chi2_contingency

from wageimpute.domain import validate_dataset
from wageimpute.estimators import ecdf_by_avewage_tertile
from wageimpute.synthgen import (
    IndustryBlock, OccupationSpec, PopulationConfig, generate_from_hazard_model,
    generate_population,
)


def test_same_seed_same_population():
    cfg = PopulationConfig(n_establishments=200)
    a, pa = generate_population(cfg, seed=4)
    b, pb = generate_population(cfg, seed=4)
    assert a == b and pa == pb
    c, _ = generate_population(cfg, seed=5)
    assert c.panels != a.panels


def test_populations_validate(partial_population, small_population):
    for ds, _ in (partial_population, small_population):
        assert validate_dataset(ds) == []


def test_nonrespondents_have_absent_panels(partial_population):
    ds, _ = partial_population
    for p in ds.panels:
        assert p.absent == (not ds.establishment(p.estab_id).responded)


def test_params_record_the_oracle(small_population):
    _, params = small_population
    assert params["seed"] == 7
    assert params["config"]["n_establishments"] == 600
    assert params["hazard_coef_std_avewage"] < 0


def _tertile_table(ds):
    soc = ds.socs()[0]
    panels = [p for p in ds.panels_for(soc) if p.total > 0]
    ave = np.array([ds.establishment(p.estab_id).avewage for p in panels])
    t = np.searchsorted(np.quantile(ave, [1 / 3, 2 / 3]), ave, side="right")
    table = np.array([np.sum([p.counts for p, k in zip(panels, t) if k == j], axis=0) for j in range(3)])
    return table[:, table.sum(axis=0) > 0]


def test_null_construction_is_independent_of_avewage():
    cfg = PopulationConfig(n_establishments=1500, gamma_avewage=0.0, msa_effect=0.0,
                           industry_blocks=(IndustryBlock(520000, 529999, 0.0, 1.0),))
    pvals = []
    for seed in (1, 2, 3):
        ds, _ = generate_population(cfg, seed=seed)
        pvals.append(chi2_contingency(_tertile_table(ds))[1])
    assert min(pvals) > 0.001
    assert np.median(pvals) > 0.05


def test_positive_gamma_orders_tertile_ecdfs():
    ds, _ = generate_population(PopulationConfig(n_establishments=2000), seed=1)
    F = ecdf_by_avewage_tertile(ds, ds.socs()[0])
    assert np.all(F[0] >= F[1] - 1e-12)
    assert np.all(F[1] >= F[2] - 1e-12)
    assert np.sum(F[0] - F[2]) > 0.5


def test_multiple_occupations():
    occs = (OccupationSpec("a", np.log(30.0), prevalence=0.5), OccupationSpec("b", np.log(60.0)))
    ds, _ = generate_population(PopulationConfig(n_establishments=300, occupations=occs), seed=0)
    assert ds.socs() == ["a", "b"]
    assert len(ds.panels_for("a")) < len(ds.panels_for("b")) == 300


def test_config_round_trip_and_checks():
    cfg = PopulationConfig(n_establishments=50)
    assert PopulationConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        PopulationConfig.from_dict({"n_establishments": 0})
    with pytest.raises(ValueError):
        PopulationConfig.from_dict({"surprise": 1})
    with pytest.raises(ValueError):
        PopulationConfig.from_dict({"grid": [1, 2, 3]})


class TestHazardGenerator:
    def test_uniform_baseline_gives_uniform_intervals(self):
        lam = np.array([1 / (13 - l) for l in range(1, 12)])
        rows = generate_from_hazard_model([0.0], lam, lambda rng, n: rng.normal(size=(n, 1)), 12000, seed=0)
        freq = np.bincount([r.event_interval for r in rows], minlength=13)[1:] / 12000
        sd = np.sqrt((1 / 12) * (11 / 12) / 12000)
        assert np.all(np.abs(freq - 1 / 12) < 3 * sd)

    def test_degenerate_baseline(self):
        lam = np.zeros(11)
        lam[0] = 1.0
        rows = generate_from_hazard_model([0.0], lam, lambda rng, n: np.zeros((n, 1)), 200, seed=0)
        assert {r.event_interval for r in rows} == {1}

    def test_stratified_baselines(self):
        rows = generate_from_hazard_model(
            [0.0], {"a": np.zeros(11), "b": np.ones(11)}, lambda rng, n: np.zeros((n, 1)), 100,
            seed=0, stratum_sampler=lambda rng, n: rng.choice(["a", "b"], n))
        for r in rows:
            assert r.event_interval == (12 if r.stratum == "a" else 1)

    def test_stratified_needs_sampler(self):
        with pytest.raises(ValueError):
            generate_from_hazard_model([0.0], {0: np.zeros(11)}, lambda rng, n: np.zeros((n, 1)), 5)
