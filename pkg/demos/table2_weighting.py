"""Why reweighting responders cannot recover high earners.

Five establishments employ the same occupation. Two of them (2 and 4) did
not respond, and they happen to pay the most. Any neighbor average or
reweighting of the three responders can only mix the responders' wage
vectors, none of which reaches intervals 11 or 12. A hazard model that
uses the establishment average wage can.

Run with:  python3 demos/table2_weighting.py
"""

from wageimpute import (
    Dataset, EstablishmentRecord, OccupationPanel, PopulationConfig, WageGrid,
    fit_occupation_model, generate_population, impute_dataset, neighbor_impute_dataset,
)

SOC = "11-3021"
EMPL = 40.0
ROWS = (  # id, employees in occupation, interval counts, quarterly AVEWAGE, responded
    ("1", 8, (0, 0, 0, 0, 0, 1, 3, 1, 2, 1, 0, 0), 15981, True),
    ("2", 10, (0, 0, 0, 0, 0, 0, 0, 1, 2, 2, 1, 4), 23364, False),
    ("3", 4, (0, 0, 0, 0, 1, 2, 0, 0, 0, 1, 0, 0), 8420, True),
    ("4", 7, (0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 3, 2), 27343, False),
    ("5", 8, (0, 0, 0, 0, 0, 0, 2, 0, 4, 2, 0, 0), 15058, True),
)


def example() -> Dataset:
    ests = tuple(EstablishmentRecord(i, EMPL, a * EMPL, 524114, "M01", responded=r) for i, _, _, a, r in ROWS)
    panels = tuple(OccupationPanel(i, SOC, t, c if r else None) for i, t, c, _, r in ROWS)
    return Dataset(WageGrid(), ests, panels)


def show(title, ds):
    print(title)
    for p in ds.panels:
        print(f"  estab {p.estab_id}  {' '.join(f'{c:2d}' for c in p.counts)}   top two: {sum(p.counts[10:])}")


def main():
    ds = example()
    show("truth", Dataset(ds.grid, ds.establishments,
                          tuple(OccupationPanel(i, SOC, t, c) for i, t, c, _, _ in ROWS)))
    show("neighbor average", neighbor_impute_dataset(ds))

    # Train the model on a synthetic population where pay rises with AVEWAGE.
    pop, _ = generate_population(PopulationConfig(n_establishments=2000), seed=0)
    model = fit_occupation_model(pop, SOC, "FULL")
    print(f"\nfitted avewage coefficient: {model.hazard.coef()['avewage']:.2e}"
          " (negative: higher AVEWAGE delays 'landing', so wages are higher)")
    show("model draw", impute_dataset(ds, {SOC: model}, master_seed=1))

    p2 = model.predict(ds.establishment("2"), ds.panels[1])
    print(f"\nmodel P(interval 11 or 12) for establishment 2: {p2[10:].sum():.3f}")
    print("responder employees in intervals 11-12 (so any mixture has zero there): "
          f"{sum(sum(c[10:]) for _, _, c, _, r in ROWS if r)}")


if __name__ == "__main__":
    main()
