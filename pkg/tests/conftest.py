import numpy as np
import pytest

from wageimpute.domain import Dataset, EstablishmentRecord, OccupationPanel, WageGrid
from wageimpute.synthgen import PopulationConfig, generate_population

SOC = "11-3021"

# Hypothetical five-establishment example: counts over the 12 intervals,
# quarterly AVEWAGE, response flag. Establishments 2 and 4 did not respond.
TABLE2 = (
    ("1", 8, (0, 0, 0, 0, 0, 1, 3, 1, 2, 1, 0, 0), 15981, True),
    ("2", 10, (0, 0, 0, 0, 0, 0, 0, 1, 2, 2, 1, 4), 23364, False),
    ("3", 4, (0, 0, 0, 0, 1, 2, 0, 0, 0, 1, 0, 0), 8420, True),
    ("4", 7, (0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 3, 2), 27343, False),
    ("5", 8, (0, 0, 0, 0, 0, 0, 2, 0, 4, 2, 0, 0), 15058, True),
)


def table2_dataset(empl: float = 40.0) -> Dataset:
    """The example as a Dataset; nonrespondents' counts are withheld."""
    ests, panels = [], []
    for eid, total, counts, ave, r in TABLE2:
        ests.append(EstablishmentRecord(eid, empl, ave * empl, 524114, "M01", responded=r))
        panels.append(OccupationPanel(eid, SOC, total, counts if r else None))
    return Dataset(WageGrid(), tuple(ests), tuple(panels))


def table2_truth() -> dict:
    return {eid: np.array(c) for eid, _, c, _, _ in TABLE2}


@pytest.fixture(scope="session")
def small_population():
    """A complete 600-establishment population (fast to fit)."""
    ds, params = generate_population(PopulationConfig(n_establishments=600), seed=7)
    return ds, params


@pytest.fixture(scope="session")
def partial_population():
    """A 600-establishment population with about 20% nonrespondents."""
    cfg = PopulationConfig(n_establishments=600, response_rate=0.8)
    return generate_population(cfg, seed=8)


@pytest.fixture(scope="session")
def fitted_partial(partial_population):
    from wageimpute.occupation import fit_occupation_model

    ds, _ = partial_population
    return fit_occupation_model(ds, SOC, "FULL", min_leaf=40)


# One PASS/FAIL line per acceptance criterion, printed at the end of the run.
ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str = "") -> bool:
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}"
    if detail:
        line += f"  ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
