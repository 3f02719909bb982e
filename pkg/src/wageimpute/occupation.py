"""Per-occupation model fitting: winsorization, industry classing, subject
rows and the hazard fit, bundled so that nonrespondents can be scored with
exactly the preprocessing used at fit time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import hazard
from .domain import N_INTERVALS, Dataset, EstablishmentRecord, OccupationPanel
from .errors import EmptyInput, SingularDesign
from .estimators import establishment_occ_mean
from .industry_tree import IndustryTree, assign_class, fit_industry_tree
from .preprocess import (
    INDICATOR_COLUMNS, CovariateVector, build_covariates, design_columns,
    identify_bmsa, winsor_cuts,
)


@dataclass(frozen=True)
class OccupationModel:
    soc: str
    model_spec: str
    hazard: hazard.FittedHazardModel
    tree: IndustryTree
    winsor_cuts: tuple[float, float]
    bmsa: frozenset = frozenset()
    dropped_columns: tuple[str, ...] = ()
    settings: dict = field(default_factory=dict)

    @property
    def columns(self) -> tuple[str, ...]:
        return self.hazard.columns

    def covariates(self, estab: EstablishmentRecord, panel: OccupationPanel) -> CovariateVector:
        lo, hi = self.winsor_cuts
        return build_covariates(estab, panel, self.bmsa, min(max(estab.avewage, lo), hi))

    def stratum(self, estab: EstablishmentRecord) -> int:
        return assign_class(self.tree, estab.naics)

    def predict(self, estab: EstablishmentRecord, panel: OccupationPanel) -> np.ndarray:
        return hazard.predict_interval_probs(
            self.hazard, self.covariates(estab, panel), self.stratum(estab))

    def report(self) -> dict:
        return {
            "soc": self.soc,
            "model_spec": self.model_spec,
            "winsor_cuts": list(self.winsor_cuts),
            "bmsa": sorted(self.bmsa),
            "dropped_columns": list(self.dropped_columns),
            "n_industry_classes": self.tree.n_leaves,
            "settings": self.settings,
            **{k: v for k, v in self.hazard.fit_report.items() if k != "loglik_trace"},
        }

    def to_dict(self) -> dict:
        return {
            "soc": self.soc,
            "model_spec": self.model_spec,
            "winsor_cuts": list(self.winsor_cuts),
            "bmsa": sorted(self.bmsa),
            "dropped_columns": list(self.dropped_columns),
            "settings": self.settings,
            "tree": self.tree.to_dict(),
            "hazard": self.hazard.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OccupationModel":
        return cls(
            soc=d["soc"],
            model_spec=d["model_spec"],
            hazard=hazard.FittedHazardModel.from_dict(d["hazard"]),
            tree=IndustryTree.from_dict(d["tree"]),
            winsor_cuts=tuple(d["winsor_cuts"]),
            bmsa=frozenset(d.get("bmsa", ())),
            dropped_columns=tuple(d.get("dropped_columns", ())),
            settings=d.get("settings", {}),
        )


def fit_sample(ds: Dataset, soc: str):
    """(establishment, panel) pairs of responders with observed, nonempty panels."""
    out = []
    for p in ds.panels_for(soc):
        if p.absent or p.total < 1:
            continue
        e = ds.establishment(p.estab_id)
        if e.responded:
            out.append((e, p))
    return out


def fit_tree(ds: Dataset, soc: str, min_leaf: int = 80, top_rule: float = 1.25) -> IndustryTree:
    pairs = [(e.naics, establishment_occ_mean(p.counts, ds.grid, top_rule))
             for e, p in fit_sample(ds, soc)]
    return fit_industry_tree(pairs, min_leaf=min_leaf)


def subject_rows(model_columns, sample, bmsa, cuts, tree) -> hazard.SurvivalData:
    """One row per (establishment, occupation, interval) cell with a nonzero count."""
    lo, hi = cuts
    events, X, strata, clusters, mult = [], [], [], [], []
    for e, p in sample:
        x = build_covariates(e, p, bmsa, min(max(e.avewage, lo), hi)).as_array(model_columns)
        s = assign_class(tree, e.naics)
        for l, c in enumerate(p.counts, start=1):
            if c > 0:
                events.append(l)
                X.append(x)
                strata.append(s)
                clusters.append(e.estab_id)
                mult.append(c)
    return hazard.SurvivalData(events, np.array(X), strata, np.array(clusters, dtype=object), mult)


def _prune_indicators(X: np.ndarray, w: np.ndarray, columns):
    """Drop indicator-type columns that are constant or add no rank.

    Continuous columns are never dropped here; a degenerate continuous
    column surfaces as SingularDesign from the fit.
    """
    keep = []
    mean = np.average(X, axis=0, weights=w)
    sd = np.sqrt(np.average((X - mean) ** 2, axis=0, weights=w))
    Z = np.where(sd > 0, (X - mean) / np.where(sd > 0, sd, 1.0), 0.0)
    # continuous columns first so indicators are the ones that yield
    order = [i for i, c in enumerate(columns) if c not in INDICATOR_COLUMNS] + \
            [i for i, c in enumerate(columns) if c in INDICATOR_COLUMNS]
    for i in order:
        c = columns[i]
        if c in INDICATOR_COLUMNS:
            if sd[i] <= 1e-12:
                continue
            trial = keep + [i]
            if np.linalg.matrix_rank(Z[:, trial]) < len(trial):
                continue
        keep.append(i)
    keep.sort()
    dropped = tuple(c for i, c in enumerate(columns) if i not in keep)
    return keep, dropped


def fit_occupation_model(
    ds: Dataset,
    soc: str,
    model_spec: str = "FULL",
    min_leaf: int = 80,
    bmsa_threshold: int = 250,
    winsor_pcts: tuple[float, float] = (0.01, 0.99),
    top_rule: float = 1.25,
    tree: IndustryTree | None = None,
    max_iter: int = 50,
    tol: float = 1e-8,
    prune_indicators: bool = True,
) -> OccupationModel:
    """Fit the interval hazard model for one occupation on its responders.

    Winsorization cuts and the industry tree come from the responders;
    BMSA membership counts every establishment listing the occupation.
    Pass ``tree`` to reuse a fixed industry classing.
    """
    sample = fit_sample(ds, soc)
    if not sample:
        raise EmptyInput(f"no responding establishments report occupation {soc!r}")
    columns = design_columns(model_spec)
    cuts = winsor_cuts([e.avewage for e, _ in sample], *winsor_pcts)
    msa_of = {e.estab_id: e.msa for e in ds.establishments}
    bmsa = identify_bmsa(ds.panels, msa_of, soc, bmsa_threshold)
    fixed = tree is not None
    if tree is None:
        pairs = [(e.naics, establishment_occ_mean(p.counts, ds.grid, top_rule)) for e, p in sample]
        tree = fit_industry_tree(pairs, min_leaf=min_leaf)

    data = subject_rows(columns, sample, bmsa, cuts, tree)
    dropped = ()
    if prune_indicators:
        keep, dropped = _prune_indicators(data.X, data.weight.astype(float), columns)
        if dropped:
            columns = tuple(columns[i] for i in keep)
            data = data.with_X(data.X[:, keep])
    if not columns:
        raise SingularDesign("no usable design columns")
    fitted = hazard.fit(data, max_iter=max_iter, tol=tol, columns=columns)
    fitted.fit_report["winsor_cuts"] = list(cuts)
    return OccupationModel(
        soc=soc,
        model_spec=model_spec,
        hazard=fitted,
        tree=tree,
        winsor_cuts=cuts,
        bmsa=bmsa,
        dropped_columns=dropped,
        settings={
            "min_leaf": min_leaf,
            "bmsa_threshold": bmsa_threshold,
            "winsor_pcts": list(winsor_pcts),
            "top_rule": top_rule,
            "tree_rel_tol": tree.rel_tol,
            "tree_fixed": fixed,
            "neighbor_key": "soc, industry class, MSA (size and ownership not used)",
        },
    )


__all__ = ["OccupationModel", "fit_occupation_model", "fit_tree", "subject_rows", "N_INTERVALS"]
