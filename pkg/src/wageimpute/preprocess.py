"""Covariate construction for the interval hazard model.

Each establishment-occupation pair gets the vector

    (1, X1, X1**2, X2, X2**2, X3, X1*X3, X4, X5, X6)

with X1 = winsorized AVEWAGE, X2 = log(EMPL), X3 = SINGLE, X4 = MSACATT6,
X5 = BMSA and X6 = MULTI.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

from .domain import EstablishmentRecord, OccupationPanel
from .errors import EmptyInput, NoEmployees

COVARIATE_NAMES = (
    "const", "avewage", "avewage_sq", "log_empl", "log_empl_sq",
    "single", "avewage_x_single", "msacatt6", "bmsa", "multi",
)
# The intercept is absorbed into the baseline hazard.
DESIGN_COLUMNS = COVARIATE_NAMES[1:]
AVEWAGE_COLUMNS = ("avewage", "avewage_sq", "avewage_x_single")
INDICATOR_COLUMNS = ("single", "avewage_x_single", "msacatt6", "bmsa", "multi")

MODEL_SPECS = ("FULL", "NO-AVEWAGE")


def design_columns(model_spec: str = "FULL") -> tuple[str, ...]:
    if model_spec == "FULL":
        return DESIGN_COLUMNS
    if model_spec == "NO-AVEWAGE":
        return tuple(c for c in DESIGN_COLUMNS if c not in AVEWAGE_COLUMNS)
    raise ValueError(f"unknown model spec {model_spec!r}; expected one of {MODEL_SPECS}")


@dataclass(frozen=True)
class CovariateVector:
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != len(COVARIATE_NAMES):
            raise ValueError(f"expected {len(COVARIATE_NAMES)} covariates, got {len(self.values)}")

    def __getitem__(self, name: str) -> float:
        return self.values[COVARIATE_NAMES.index(name)]

    def as_array(self, columns: Iterable[str] = DESIGN_COLUMNS) -> np.ndarray:
        return np.array([self[c] for c in columns], dtype=float)

    def is_consistent(self) -> bool:
        v = dict(zip(COVARIATE_NAMES, self.values))
        flags_ok = all(v[k] in (0.0, 1.0) for k in ("single", "msacatt6", "bmsa", "multi"))
        return (
            v["const"] == 1.0
            and flags_ok
            and math.isclose(v["avewage_sq"], v["avewage"] ** 2, rel_tol=1e-12, abs_tol=0.0)
            and math.isclose(v["log_empl_sq"], v["log_empl"] ** 2, rel_tol=1e-12, abs_tol=1e-300)
            and v["avewage_x_single"] == v["avewage"] * v["single"]
        )


def quantile(values, p: float) -> float:
    """Linear interpolation between order statistics at position (k-1)/(n-1)."""
    return float(np.quantile(np.asarray(values, dtype=float), p, method="linear"))


def winsor_cuts(values, lower_pct: float = 0.01, upper_pct: float = 0.99) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise EmptyInput("cannot winsorize an empty sample")
    return quantile(values, lower_pct), quantile(values, upper_pct)


def winsorize_avewage(values, lower_pct: float = 0.01, upper_pct: float = 0.99) -> np.ndarray:
    """Clip values to the ``lower_pct`` and ``upper_pct`` sample quantiles.

    Examples
    --------
    >>> winsorize_avewage(np.arange(1.0, 101.0))[[0, 1, 98, 99]]
    array([ 1.99,  2.  , 99.  , 99.01])
    """
    lo, hi = winsor_cuts(values, lower_pct, upper_pct)
    return np.clip(np.asarray(values, dtype=float), lo, hi)


def identify_bmsa(
    panels: Iterable[OccupationPanel],
    msa_of: Mapping[str, str] | Callable[[str], str],
    soc: str,
    threshold: int = 250,
) -> frozenset[str]:
    """MSAs with at least ``threshold`` distinct establishments employing ``soc``.

    ``msa_of`` maps an estab_id to its MSA label.
    """
    lookup = msa_of if callable(msa_of) else msa_of.__getitem__
    estabs = defaultdict(set)
    for p in panels:
        if p.soc == soc:
            estabs[lookup(p.estab_id)].add(p.estab_id)
    return frozenset(m for m, ids in estabs.items() if len(ids) >= threshold)


def build_covariates(
    estab: EstablishmentRecord,
    panel: OccupationPanel,
    bmsa_set,
    winsorized_avewage: float,
) -> CovariateVector:
    if panel.estab_id != estab.estab_id:
        raise ValueError(f"panel {panel.estab_id}/{panel.soc} does not belong to {estab.estab_id}")
    if panel.total < 1:
        raise NoEmployees(f"panel {panel.estab_id}/{panel.soc} has no employees")
    x1 = float(winsorized_avewage)
    x2 = math.log(estab.empl)
    x3 = 1.0 if panel.total == 1 else 0.0
    x4 = 1.0 if estab.msacatt6 else 0.0
    x5 = 1.0 if estab.msa in bmsa_set else 0.0
    x6 = 1.0 if estab.multi else 0.0
    return CovariateVector((1.0, x1, x1 * x1, x2, x2 * x2, x3, x1 * x3, x4, x5, x6))
