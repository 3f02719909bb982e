"""Fill absent occupation panels.

Two methods:

* model: one multinomial draw of the panel's employees over the 12
  intervals, with probabilities from the occupation's hazard model;
* neighbor: pooled interval shares of nearby responders scaled to the
  panel total (a stand-in for the current weighting-style method).

Every panel gets its own RNG stream keyed on (seed, estab_id, soc), so
results do not depend on panel order or on which other panels exist.
"""

from __future__ import annotations

import hashlib
from typing import Callable, Mapping

import numpy as np

from .domain import (
    MODEL_IMPUTED, N_INTERVALS, NEIGHBOR_IMPUTED, Dataset, OccupationPanel,
)
from .errors import ModelUnavailable, NoDonors
from .hazard import FittedHazardModel, predict_interval_probs
from .industry_tree import IndustryTree, assign_class
from .occupation import OccupationModel


def stream(master_seed: int, *keys) -> np.random.Generator:
    """Generator seeded from ``master_seed`` and string keys, stable across runs."""
    words = [int(master_seed) & 0xFFFFFFFFFFFFFFFF]
    for k in keys:
        digest = hashlib.sha256(str(k).encode("utf-8")).digest()
        words.extend(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))
    return np.random.default_rng(np.random.SeedSequence(words))


def impute_panel(model: FittedHazardModel, covariates, stratum, n_employees: int,
                 rng: np.random.Generator) -> np.ndarray:
    if n_employees < 0:
        raise ValueError("n_employees must be >= 0")
    if n_employees == 0:
        return np.zeros(N_INTERVALS, dtype=np.int64)
    p = predict_interval_probs(model, covariates, stratum)
    return rng.multinomial(n_employees, p / p.sum())


def impute_dataset(ds: Dataset, models: Mapping[str, OccupationModel], master_seed: int,
                   trees: Mapping[str, IndustryTree] | None = None) -> Dataset:
    """Replace every absent panel by a model draw; observed panels are untouched.

    ``trees`` optionally overrides the industry classing stored in a model.
    """
    out = []
    for p in ds.panels:
        if not p.absent:
            out.append(p)
            continue
        if p.soc not in models:
            raise ModelUnavailable(p.soc)
        m = models[p.soc]
        e = ds.establishment(p.estab_id)
        rng = stream(master_seed, e.estab_id, p.soc)
        if p.total == 0:
            counts = np.zeros(N_INTERVALS, dtype=np.int64)
        else:
            tree = trees[p.soc] if trees and p.soc in trees else m.tree
            counts = impute_panel(m.hazard, m.covariates(e, p), assign_class(tree, e.naics), p.total, rng)
        out.append(p.with_counts(counts, MODEL_IMPUTED))
    return ds.replace_panels(out)


def largest_remainder(shares, total: int) -> np.ndarray:
    """Integer allocation of ``total`` proportional to ``shares``.

    Leftover units go to the largest fractional parts; ties go to the
    lower interval.
    """
    shares = np.asarray(shares, dtype=float)
    if total == 0:
        return np.zeros(len(shares), dtype=np.int64)
    quota = shares / shares.sum() * total
    base = np.floor(quota).astype(np.int64)
    left = int(total - base.sum())
    if left:
        frac = quota - base
        order = np.argsort(-frac, kind="stable")
        base[order[:left]] += 1
    return base


ROUNDING_RULES = {"largest_remainder": largest_remainder}


def _classifier(industry_class):
    if industry_class is None:
        return lambda naics: int(naics) // 100
    if isinstance(industry_class, IndustryTree):
        return lambda naics: assign_class(industry_class, naics)
    if isinstance(industry_class, OccupationModel):
        return lambda naics: assign_class(industry_class.tree, naics)
    return industry_class


def neighbor_average_impute(ds: Dataset, panel: OccupationPanel, rounding: str = "largest_remainder",
                            industry_class: IndustryTree | Callable | None = None) -> np.ndarray:
    """Pooled donor shares scaled to the panel total.

    Donors are responding panels of the same occupation in the same
    industry class and MSA; if none exist, the same industry class
    anywhere; failing that, the occupation anywhere. Without a tree the
    industry class is the 4-digit NAICS prefix.
    """
    classify = _classifier(industry_class)
    e = ds.establishment(panel.estab_id)
    cls = classify(e.naics)
    donors = []
    for q in ds.panels_for(panel.soc):
        if q.absent or q.estab_id == panel.estab_id:
            continue
        d = ds.establishment(q.estab_id)
        if d.responded:
            donors.append((d, q))
    if not donors:
        raise NoDonors(f"no responding panels for occupation {panel.soc!r}")

    tiers = (
        lambda d: d.msa == e.msa and classify(d.naics) == cls,
        lambda d: classify(d.naics) == cls,
        lambda d: True,
    )
    for keep in tiers:
        pool = [q.counts for d, q in donors if keep(d)]
        if pool and np.sum(pool) > 0:
            break
    shares = np.sum(pool, axis=0)
    if shares.sum() == 0:
        raise NoDonors(f"donor panels for {panel.soc!r} have no employees")
    return ROUNDING_RULES[rounding](shares, panel.total)


def neighbor_impute_dataset(ds: Dataset, industry_classes: Mapping[str, object] | None = None,
                            rounding: str = "largest_remainder") -> Dataset:
    """Neighbor-average counterpart of :func:`impute_dataset`."""
    out = []
    for p in ds.panels:
        if not p.absent:
            out.append(p)
            continue
        ic = industry_classes.get(p.soc) if industry_classes else None
        counts = neighbor_average_impute(ds, p, rounding, ic)
        out.append(p.with_counts(counts, NEIGHBOR_IMPUTED))
    return ds.replace_panels(out)
