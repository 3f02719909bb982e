"""OES-style wage estimates from interval counts, plus an inverse-propensity
weighted comparator.

Interval counts are valued at the interval midpoint, and the open top
interval at ``a_12 * top_rule``. Percentiles interpolate uniformly within
the interval holding the target mass. All outputs are hourly dollars.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .domain import (
    MODEL_IMPUTED, N_INTERVALS, NEIGHBOR_IMPUTED, OBSERVED, Dataset, WageGrid,
)
from .errors import EmptyDomain, InvalidFraction, InvalidPropensity, ZeroEmployees

HOURS_PER_YEAR = 2080
PERCENTILES = (0.10, 0.25, 0.50, 0.75, 0.90)


def _mass(counts, weights=None) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    if counts.ndim == 1:
        counts = counts[None, :]
    if weights is None:
        return counts.sum(axis=0)
    w = np.asarray(weights, dtype=float)
    return w @ counts


def establishment_occ_mean(counts, grid: WageGrid, top_rule: float = 1.25) -> float:
    """Mean hourly wage of one panel's employees."""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total < 1:
        raise ZeroEmployees("panel has no employees")
    return float(counts @ grid.interval_values(top_rule) / total)


def occupation_mean(counts, grid: WageGrid, weights=None, top_rule: float = 1.25) -> float:
    """Weighted mean wage: sum_i w_i sum_l e_il v_l / sum_i w_i sum_l e_il.

    ``counts`` is a (panels, 12) array; ``weights`` one weight per panel.
    """
    mass = _mass(counts, weights)
    total = mass.sum()
    if not total > 0:
        raise ZeroEmployees("no weighted employment")
    return float(mass @ grid.interval_values(top_rule) / total)


def occupation_percentile(counts, grid: WageGrid, p: float, weights=None,
                          top_rule: float = 1.25) -> float:
    if not 0.0 < p < 1.0:
        raise InvalidFraction(f"percentile fraction must lie in (0, 1), got {p}")
    mass = _mass(counts, weights)
    total = mass.sum()
    if not total > 0:
        raise ZeroEmployees("no weighted employment")
    cum = np.cumsum(mass)
    target = p * total
    l = int(np.searchsorted(cum, target, side="left"))
    l = min(l, N_INTERVALS - 1)
    if l == N_INTERVALS - 1:
        return float(grid.a[-1] * top_rule)
    below = cum[l - 1] if l > 0 else 0.0
    f = (target - below) / mass[l]
    a = grid.a
    return float(a[l] + f * (a[l + 1] - a[l]))


def ipw_estimate(counts, grid: WageGrid, weights, propensities, top_rule: float = 1.25) -> float:
    """Mean wage over responders with weights ``w_i / p(x_i)``."""
    p = np.asarray(propensities, dtype=float)
    if np.any(~(p > 0)) or np.any(p > 1):
        raise InvalidPropensity("response propensities must lie in (0, 1]")
    w = np.ones(len(p)) if weights is None else np.asarray(weights, dtype=float)
    return occupation_mean(counts, grid, w / p, top_rule)


@dataclass(frozen=True)
class DomainEstimate:
    domain: str
    n: int
    prop_observed: float
    employment: float
    mean: float
    p10: float
    p25: float
    p50: float
    p75: float
    p90: float

    def as_row(self, annual: bool = False) -> dict:
        row = asdict(self)
        if annual:
            for k in ("mean", "p10", "p25", "p50", "p75", "p90"):
                row[k] = row[k] * HOURS_PER_YEAR
        return row


def select_panels(ds: Dataset, soc: str, naics_prefixes: Iterable[str] | None = None,
                  msas: Iterable[str] | None = None, industry_classes: Iterable | None = None,
                  classify: Callable[[int], object] | None = None):
    """Panels for ``soc`` whose establishment passes every given filter."""
    prefixes = tuple(str(x) for x in naics_prefixes) if naics_prefixes else None
    msas = set(msas) if msas else None
    classes = set(industry_classes) if industry_classes is not None else None
    if classes is not None and classify is None:
        raise ValueError("industry_classes filter needs a classify function (e.g. a fitted tree)")
    out = []
    for p in ds.panels_for(soc):
        e = ds.establishment(p.estab_id)
        if prefixes and not str(e.naics).startswith(prefixes):
            continue
        if msas is not None and e.msa not in msas:
            continue
        if classes is not None and classify(e.naics) not in classes:
            continue
        out.append(p)
    return out


def domain_estimates(ds: Dataset, soc: str, naics_prefixes=None, msas=None,
                     industry_classes=None, classify=None, top_rule: float = 1.25,
                     domain: str = "overall") -> DomainEstimate:
    """Table-style estimates (n, share observed, mean, percentiles) for one domain."""
    panels = select_panels(ds, soc, naics_prefixes, msas, industry_classes, classify)
    if not panels:
        raise EmptyDomain(f"no {soc} panels in domain {domain!r}")
    absent = sum(p.absent for p in panels)
    if absent:
        raise ValueError(f"{absent} panels in domain {domain!r} still lack counts; impute first")
    counts = np.array([p.counts for p in panels], dtype=float)
    w = np.array([ds.establishment(p.estab_id).weight for p in panels])
    pct = [occupation_percentile(counts, ds.grid, q, w, top_rule) for q in PERCENTILES]
    n_obs = sum(p.provenance == OBSERVED for p in panels)
    return DomainEstimate(
        domain=domain,
        n=len(panels),
        prop_observed=n_obs / len(panels),
        employment=float(w @ counts.sum(axis=1)),
        mean=occupation_mean(counts, ds.grid, w, top_rule),
        p10=pct[0], p25=pct[1], p50=pct[2], p75=pct[3], p90=pct[4],
    )


def ecdf_by_avewage_tertile(ds: Dataset, soc: str) -> np.ndarray:
    """Employee-level ECDF over the 12 intervals within each AVEWAGE tertile.

    Returns a (3, 12) array, lowest tertile first.
    """
    panels = [p for p in ds.panels_for(soc) if not p.absent and p.total > 0]
    if not panels:
        raise EmptyDomain(f"no observed {soc} panels")
    ave = np.array([ds.establishment(p.estab_id).avewage for p in panels])
    counts = np.array([p.counts for p in panels], dtype=float)
    cuts = np.quantile(ave, [1 / 3, 2 / 3])
    tert = np.searchsorted(cuts, ave, side="right")
    out = np.zeros((3, N_INTERVALS))
    for t in range(3):
        mass = counts[tert == t].sum(axis=0)
        out[t] = np.cumsum(mass) / mass.sum() if mass.sum() > 0 else np.nan
    return out


def avewage_curve(completed: Mapping[str, Dataset], soc: str, n_bins: int = 10,
                  top_rule: float = 1.25) -> list[dict]:
    """Binned establishment mean wage versus AVEWAGE, by panel provenance.

    ``completed`` maps a label (e.g. "model", "neighbor") to a completed
    dataset. Observed panels come from the first dataset. Bins are AVEWAGE
    deciles (or ``n_bins`` quantile bins) of all establishments employing
    ``soc``. Empty cells are NaN.
    """
    labels = list(completed)
    first = completed[labels[0]]
    allp = first.panels_for(soc)
    ave_all = np.array([first.establishment(p.estab_id).avewage for p in allp])
    edges = np.quantile(ave_all, np.linspace(0, 1, n_bins + 1))
    rows = []
    for b in range(n_bins):
        lo, hi = edges[b], edges[b + 1]
        row = {"bin": b, "avewage_lo": float(lo), "avewage_hi": float(hi)}

        def cell(ds, provenance):
            vals = []
            for p in ds.panels_for(soc):
                a = ds.establishment(p.estab_id).avewage
                inside = lo <= a <= hi if b == n_bins - 1 else lo <= a < hi
                if inside and p.provenance == provenance and p.total > 0:
                    vals.append(establishment_occ_mean(p.counts, ds.grid, top_rule))
            return float(np.mean(vals)) if vals else float("nan")

        row["observed_mean"] = cell(first, OBSERVED)
        for lab in labels:
            ds = completed[lab]
            prov = MODEL_IMPUTED if any(p.provenance == MODEL_IMPUTED for p in ds.panels) else NEIGHBOR_IMPUTED
            row[f"{lab}_imputed_mean"] = cell(ds, prov)
        rows.append(row)
    return rows
