"""Synthetic establishment populations with known generating parameters.

Employee hourly wages follow

    log W = mu_occ + gamma * z_avewage + industry_effect + msa_effect * MSACATT6
            + noise_scale * (log E + euler_gamma),   E ~ Exp(1)

so that log-wage has mean ``mu_occ + ...`` and, because the noise is
log-Weibull, wages satisfy proportional hazards exactly in the continuous
limit. Wages are then binned into the grid.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .domain import (
    N_INTERVALS, Dataset, EstablishmentRecord, OccupationPanel, WageGrid,
)
from .hazard import EPS, SubjectRow

EULER_GAMMA = 0.5772156649015329


@dataclass(frozen=True)
class OccupationSpec:
    soc: str
    log_wage_mean: float
    prevalence: float = 1.0
    mean_total: float = 5.0


@dataclass(frozen=True)
class IndustryBlock:
    lo: int
    hi: int
    effect: float = 0.0
    share: float = 1.0


DEFAULT_BLOCKS = (
    IndustryBlock(522100, 522199, 0.10, 0.20),
    IndustryBlock(524100, 524299, 0.05, 0.15),
    IndustryBlock(541100, 541999, 0.20, 0.30),
    IndustryBlock(561100, 561999, -0.10, 0.20),
    IndustryBlock(999100, 999399, -0.15, 0.15),
)


@dataclass(frozen=True)
class PopulationConfig:
    n_establishments: int = 4600
    occupations: tuple[OccupationSpec, ...] = (OccupationSpec("11-3021", np.log(45.0)),)
    industry_blocks: tuple[IndustryBlock, ...] = DEFAULT_BLOCKS
    n_msa: int = 12
    n_large_msa: int = 3
    msa_effect: float = 0.10
    avewage_median: float = 15000.0
    avewage_log_sd: float = 0.40
    gamma_avewage: float = 0.10
    noise_scale: float = 0.50
    empl_log_mean: float = 3.0
    empl_log_sd: float = 1.0
    multi_rate: float = 0.30
    response_rate: float = 1.0
    grid: tuple[float, ...] = WageGrid().lower_bounds

    @classmethod
    def from_dict(cls, d: Mapping) -> "PopulationConfig":
        d = dict(d)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "occupations" in d:
            d["occupations"] = tuple(OccupationSpec(**o) for o in d["occupations"])
        if "industry_blocks" in d:
            d["industry_blocks"] = tuple(IndustryBlock(**b) for b in d["industry_blocks"])
        if "grid" in d:
            d["grid"] = tuple(float(a) for a in d["grid"])
        cfg = cls(**d)
        cfg.check()
        return cfg

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["occupations"] = [dict(o) for o in d["occupations"]]
        d["industry_blocks"] = [dict(b) for b in d["industry_blocks"]]
        d["grid"] = list(self.grid)
        return d

    def check(self):
        if self.n_establishments < 1:
            raise ValueError("n_establishments must be >= 1")
        if not self.occupations:
            raise ValueError("at least one occupation is required")
        if not self.industry_blocks:
            raise ValueError("at least one industry block is required")
        if self.n_msa < 1 or not 0 <= self.n_large_msa <= self.n_msa:
            raise ValueError("need n_msa >= 1 and 0 <= n_large_msa <= n_msa")
        if not 0 < self.response_rate <= 1:
            raise ValueError("response_rate must lie in (0, 1]")
        problems = WageGrid(self.grid).problems()
        if problems:
            raise ValueError("; ".join(problems))


def generate_population(config: PopulationConfig | None = None, seed: int = 0):
    """Draw a population; return ``(dataset, params)``.

    With ``response_rate == 1`` the dataset is complete (every panel
    observed). Otherwise a uniform random subset of establishments is
    flagged as nonresponding and their panels lose their counts.
    """
    cfg = config or PopulationConfig()
    cfg.check()
    rng = np.random.default_rng(seed)
    n = cfg.n_establishments
    grid = WageGrid(cfg.grid)

    blocks = cfg.industry_blocks
    shares = np.array([b.share for b in blocks], dtype=float)
    block = rng.choice(len(blocks), size=n, p=shares / shares.sum())
    naics = np.array([rng.integers(blocks[k].lo, blocks[k].hi + 1) for k in block])
    ind_effect = np.array([blocks[k].effect for k in block])

    msa_p = 1.0 / np.arange(1, cfg.n_msa + 1)
    msa = rng.choice(cfg.n_msa, size=n, p=msa_p / msa_p.sum())
    msacatt6 = msa < cfg.n_large_msa

    empl = np.maximum(1.0, np.round(np.exp(rng.normal(cfg.empl_log_mean, cfg.empl_log_sd, n))))
    avewage = np.round(np.exp(np.log(cfg.avewage_median) + cfg.avewage_log_sd * rng.standard_normal(n)), 2)
    wage = np.round(avewage * empl, 2)
    avewage = wage / empl
    multi = rng.random(n) < cfg.multi_rate
    weight = np.round(1.0 + 20.0 / np.sqrt(empl), 4)
    responded = rng.random(n) < cfg.response_rate if cfg.response_rate < 1 else np.ones(n, bool)

    ave_mean, ave_sd = float(avewage.mean()), float(avewage.std())
    z = (avewage - ave_mean) / ave_sd if ave_sd > 0 else np.zeros(n)

    ids = [f"E{i:06d}" for i in range(n)]
    estabs = tuple(
        EstablishmentRecord(
            estab_id=ids[i], empl=float(empl[i]), wage=float(wage[i]), naics=int(naics[i]),
            msa=f"M{msa[i]:02d}", msacatt6=bool(msacatt6[i]), multi=bool(multi[i]),
            weight=float(weight[i]), responded=bool(responded[i]),
        )
        for i in range(n)
    )

    panels = []
    for occ in cfg.occupations:
        has = rng.random(n) < occ.prevalence
        extra = rng.poisson(max(occ.mean_total - 1.0, 0.0), n)
        total = np.minimum(1 + extra, empl.astype(np.int64))
        loc = occ.log_wage_mean + cfg.gamma_avewage * z + ind_effect + cfg.msa_effect * msacatt6
        for i in np.flatnonzero(has):
            noise = cfg.noise_scale * (np.log(rng.exponential(size=total[i])) + EULER_GAMMA)
            levels = grid.locate(np.exp(loc[i] + noise))
            counts = np.bincount(levels - 1, minlength=N_INTERVALS)
            if responded[i]:
                panels.append(OccupationPanel(ids[i], occ.soc, int(total[i]), tuple(counts)))
            else:
                panels.append(OccupationPanel(ids[i], occ.soc, int(total[i]), None))

    params = {
        "seed": seed,
        "config": cfg.to_dict(),
        "avewage_mean": ave_mean,
        "avewage_sd": ave_sd,
        "true_log_wage_model": "mu_occ + gamma_avewage*(AVEWAGE-avewage_mean)/avewage_sd"
                               " + block effect + msa_effect*MSACATT6 + log-Weibull noise",
        # continuous-limit proportional-hazards coefficient on standardized AVEWAGE
        "hazard_coef_std_avewage": -cfg.gamma_avewage / cfg.noise_scale,
    }
    return Dataset(grid, estabs, tuple(panels)), params


def generate_from_hazard_model(
    beta,
    baselines,
    covariate_sampler: Callable[[np.random.Generator, int], np.ndarray],
    n: int,
    seed: int = 0,
    stratum_sampler: Callable[[np.random.Generator, int], np.ndarray] | None = None,
) -> list[SubjectRow]:
    """Subjects drawn from h(l) = min(lambda0(l) exp(beta.x), 1 - EPS), absorbed at 12.

    ``baselines`` is an 11-vector, or a mapping stratum -> 11-vector used
    together with ``stratum_sampler``.
    """
    rng = np.random.default_rng(seed)
    beta = np.asarray(beta, dtype=float)
    X = np.asarray(covariate_sampler(rng, n), dtype=float).reshape(n, -1)
    if isinstance(baselines, Mapping):
        if stratum_sampler is None:
            raise ValueError("stratified baselines need a stratum_sampler")
        strata = np.asarray(stratum_sampler(rng, n))
        lam = np.array([np.asarray(baselines[s], dtype=float) for s in strata])
    else:
        strata = np.zeros(n, dtype=np.int64)
        lam = np.broadcast_to(np.asarray(baselines, dtype=float), (n, N_INTERVALS - 1))
    h = np.minimum(lam * np.exp(X @ beta)[:, None], 1.0 - EPS)
    u = rng.random((n, N_INTERVALS - 1))
    hit = u < h
    event = np.where(hit.any(axis=1), hit.argmax(axis=1) + 1, N_INTERVALS)
    return [
        SubjectRow(int(event[i]), tuple(X[i]), strata[i].item(), i, 1)
        for i in range(n)
    ]
