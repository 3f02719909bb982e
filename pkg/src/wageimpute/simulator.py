"""Missingness simulation: impose a logistic nonresponse mechanism on a
complete population, refit the imputation model on the responders,
impute the nonresponders and measure bias against their true counts.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from .domain import MISSING, Dataset, OccupationPanel
from .errors import NoResults, WageImputeError
from .estimators import establishment_occ_mean, occupation_mean, occupation_percentile
from .imputer import impute_dataset, stream
from .occupation import fit_occupation_model, fit_tree


@dataclass(frozen=True)
class MissingnessScenario:
    """logit P(R = 0) = a0 + a1 log(EMPL) + a2 MSACATT6 + a3 AVEWAGE + a4 OCCWAGE."""

    alpha0: float = 0.0
    alpha1: float = 0.0
    alpha2: float = 0.0
    alpha3: float = 0.0
    alpha4: float = 0.0
    target_rate: float | None = None

    def __post_init__(self):
        for k in ("alpha0", "alpha1", "alpha2", "alpha3", "alpha4"):
            if not math.isfinite(getattr(self, k)):
                raise ValueError(f"{k} must be finite")
        if self.target_rate is not None and not 0 <= self.target_rate <= 1:
            raise ValueError("target_rate must lie in [0, 1]")

    @property
    def slopes(self) -> np.ndarray:
        return np.array([self.alpha1, self.alpha2, self.alpha3, self.alpha4])


def builtin_scenarios() -> dict[str, MissingnessScenario]:
    return {
        "MAR1": MissingnessScenario(-2.89, 0.105, 2.42, 0.0, 0.0),
        "MAR2": MissingnessScenario(-3.39, 0.105, 2.42, 0.0000262, 0.0),
        "NINR": MissingnessScenario(-2.39, 0.0, 0.0, 0.0, 0.02),
    }


def missingness_predictors(population: Dataset, soc: str):
    """Per-establishment (log EMPL, MSACATT6, AVEWAGE, OCCWAGE) for ``soc``.

    OCCWAGE is the establishment's true mean hourly wage for ``soc``,
    computed from its complete counts.
    """
    panels = [p for p in population.panels_for(soc) if not p.absent and p.total > 0]
    rows = []
    for p in panels:
        e = population.establishment(p.estab_id)
        rows.append((math.log(e.empl), float(e.msacatt6), e.avewage,
                     establishment_occ_mean(p.counts, population.grid)))
    return panels, np.array(rows, dtype=float).reshape(-1, 4)


def calibrate_intercept(Z: np.ndarray, slopes: np.ndarray, target: float, tol: float = 1e-10) -> float:
    """Intercept giving mean nonresponse probability ``target``."""
    if target <= 0:
        return -math.inf
    if target >= 1:
        return math.inf
    lin = Z @ slopes
    return float(brentq(lambda a: expit(a + lin).mean() - target,
                        -50.0 - lin.max(), 50.0 - lin.min(), xtol=tol))


def nonresponse_probabilities(population: Dataset, soc: str, scenario: MissingnessScenario):
    panels, Z = missingness_predictors(population, soc)
    a0 = scenario.alpha0
    if scenario.target_rate is not None:
        a0 = calibrate_intercept(Z, scenario.slopes, scenario.target_rate)
    with np.errstate(over="ignore"):
        prob = expit(a0 + Z @ scenario.slopes) if math.isfinite(a0) else np.full(len(Z), float(a0 > 0))
    return panels, prob, a0


def impose_missingness(population: Dataset, soc: str, scenario: MissingnessScenario,
                       rng: np.random.Generator) -> dict[str, bool]:
    """Draw response flags: ``{estab_id: responded}`` for establishments with a ``soc`` panel."""
    panels, prob, _ = nonresponse_probabilities(population, soc, scenario)
    missing = rng.random(len(prob)) < prob
    return {p.estab_id: not bool(m) for p, m in zip(panels, missing)}


def mask_population(population: Dataset, soc: str, responded: dict[str, bool]) -> Dataset:
    """Population restricted to ``soc`` with nonresponders' counts removed."""
    ests, panels = [], []
    for p in population.panels_for(soc):
        if p.absent or p.estab_id not in responded:
            continue
        e = population.establishment(p.estab_id)
        r = responded[p.estab_id]
        ests.append(replace(e, responded=r))
        panels.append(p if r else OccupationPanel(p.estab_id, soc, p.total, None, MISSING))
    return Dataset(population.grid, tuple(ests), tuple(panels))


@dataclass(frozen=True)
class ReplicateResult:
    replicate: int
    scenario: str
    model_spec: str
    n_missing: int
    nonresponse_rate: float
    mean_bias: float
    p75_bias: float
    failed: bool = False
    error: str = ""


def _estimates(counts, w, grid, top_rule):
    return (occupation_mean(counts, grid, w, top_rule),
            occupation_percentile(counts, grid, 0.75, w, top_rule))


def run_replicate(population: Dataset, soc: str, scenario: MissingnessScenario, model_spec: str,
                  master_seed: int, index: int, scenario_name: str = "custom",
                  fit_options: dict | None = None, fixed_tree=None) -> ReplicateResult:
    opts = dict(fit_options or {})
    top_rule = opts.get("top_rule", 1.25)
    rng = stream(master_seed, "replicate", index)
    responded = impose_missingness(population, soc, scenario, rng)
    masked = mask_population(population, soc, responded)
    missing_ids = [k for k, r in responded.items() if not r]
    rate = len(missing_ids) / max(len(responded), 1)
    base = dict(replicate=index, scenario=scenario_name, model_spec=model_spec,
                n_missing=len(missing_ids), nonresponse_rate=rate)
    if not missing_ids:
        return ReplicateResult(mean_bias=0.0, p75_bias=0.0, **base)
    try:
        model = fit_occupation_model(masked, soc, model_spec, tree=fixed_tree, **opts)
        completed = impute_dataset(masked, {soc: model}, master_seed=int(rng.integers(2 ** 63)))
    except (WageImputeError, np.linalg.LinAlgError, ValueError) as exc:
        return ReplicateResult(mean_bias=math.nan, p75_bias=math.nan, failed=True,
                               error=f"{type(exc).__name__}: {exc}", **base)
    missing = set(missing_ids)
    truth = {p.estab_id: p for p in population.panels_for(soc) if p.estab_id in missing}
    imputed = [p for p in completed.panels if p.estab_id in missing]
    w = np.array([population.establishment(p.estab_id).weight for p in imputed])
    imp_counts = np.array([p.counts for p in imputed], dtype=float)
    true_counts = np.array([truth[p.estab_id].counts for p in imputed], dtype=float)
    m_imp, q_imp = _estimates(imp_counts, w, population.grid, top_rule)
    m_true, q_true = _estimates(true_counts, w, population.grid, top_rule)
    return ReplicateResult(mean_bias=m_imp - m_true, p75_bias=q_imp - q_true, **base)


def _run_chunk(args):
    population, soc, scenario, spec, seed, indices, name, opts, tree = args
    return [run_replicate(population, soc, scenario, spec, seed, i, name, opts, tree) for i in indices]


def max_workers() -> int:
    try:
        return max(1, int(os.environ.get("IMPUTE_THREADS", "1")))
    except ValueError:
        return 1


def run_replications(population: Dataset, soc: str, scenario: MissingnessScenario,
                     model_spec: str = "FULL", replications: int = 250, master_seed: int = 0,
                     scenario_name: str = "custom", fit_options: dict | None = None,
                     fix_tree: bool = False, workers: int | None = None) -> list[ReplicateResult]:
    """Independent replicates, each with its own RNG stream.

    Results are ordered by replicate index whatever ``workers`` is. With
    ``fix_tree`` the industry classing is fitted once on the complete
    population rather than per replicate on the responders.
    """
    population = population.restrict_to(soc)
    opts = dict(fit_options or {})
    tree = None
    if fix_tree:
        tree = fit_tree(population, soc, opts.get("min_leaf", 80), opts.get("top_rule", 1.25))
    workers = max_workers() if workers is None else workers
    idx = list(range(replications))
    if workers <= 1 or replications < 2:
        return _run_chunk((population, soc, scenario, model_spec, master_seed, idx,
                           scenario_name, opts, tree))
    chunks = [idx[k::workers] for k in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_run_chunk, [(population, soc, scenario, model_spec, master_seed, c,
                                       scenario_name, opts, tree) for c in chunks if c])
        results = [r for part in parts for r in part]
    return sorted(results, key=lambda r: r.replicate)


SUMMARY_STATS = ("mean", "median", "sd", "q1", "q3", "min", "max")


def summarize_bias(results) -> list[dict]:
    """Per (scenario, model, statistic) cell: mean, median, sd, quartiles of replicate biases."""
    results = list(results)
    ok = [r for r in results if not r.failed]
    if not ok:
        raise NoResults("every replicate failed")
    cells = {}
    for r in results:
        cells.setdefault((r.scenario, r.model_spec), []).append(r)
    rows = []
    for (scen, spec), rs in cells.items():
        good = [r for r in rs if not r.failed]
        for stat in ("mean_bias", "p75_bias"):
            v = np.array([getattr(r, stat) for r in good], dtype=float)
            row = {"scenario": scen, "model_spec": spec, "statistic": stat,
                   "replicates": len(good), "failed": len(rs) - len(good)}
            if len(v):
                q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75])
                row.update(mean=float(v.mean()), median=float(med),
                           sd=float(v.std(ddof=1)) if len(v) > 1 else 0.0,
                           q1=float(q1), q3=float(q3), min=float(v.min()), max=float(v.max()))
            else:
                row.update({k: math.nan for k in SUMMARY_STATS})
            rows.append(row)
    return rows
