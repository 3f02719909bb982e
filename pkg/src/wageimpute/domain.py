"""Core data types: the wage grid, establishment frame records, occupation
panels, and the dataset container tying them together.

All types are frozen; "modifying" a dataset means building a new one
(see :meth:`Dataset.replace_panels`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

N_INTERVALS = 12

OBSERVED = "observed"
MISSING = "missing"
MODEL_IMPUTED = "model_imputed"
NEIGHBOR_IMPUTED = "neighbor_imputed"
PROVENANCES = (OBSERVED, MISSING, MODEL_IMPUTED, NEIGHBOR_IMPUTED)

# Illustrative national hourly grid; real OES bounds vary by state and year.
DEFAULT_LOWER_BOUNDS = (
    7.50, 9.50, 12.00, 15.25, 19.25, 24.50,
    31.00, 39.25, 49.75, 63.25, 80.25, 101.75,
)


@dataclass(frozen=True)
class WageGrid:
    """Twelve contiguous hourly wage intervals, the last open above.

    Interval ``l`` (1-based) is ``[lower_bounds[l-1], lower_bounds[l])``;
    upper bounds are therefore implied by the next lower bound.
    """

    lower_bounds: tuple[float, ...] = DEFAULT_LOWER_BOUNDS

    def __post_init__(self):
        object.__setattr__(self, "lower_bounds", tuple(float(a) for a in self.lower_bounds))

    @property
    def upper_bounds(self) -> tuple[float, ...]:
        return self.lower_bounds[1:]

    @property
    def a(self) -> np.ndarray:
        return np.asarray(self.lower_bounds)

    def problems(self) -> list[str]:
        a = self.lower_bounds
        out = []
        if len(a) != N_INTERVALS:
            out.append(f"grid has {len(a)} intervals, expected {N_INTERVALS}")
            return out
        if not all(math.isfinite(v) for v in a):
            out.append("grid bounds must be finite")
        if a[0] <= 0:
            out.append("grid lower bound a_1 must be positive")
        if any(a[i + 1] <= a[i] for i in range(len(a) - 1)):
            out.append("grid lower bounds must be strictly increasing")
        return out

    def interval_values(self, top_rule: float = 1.25) -> np.ndarray:
        """Representative hourly value per interval: midpoints, and
        ``a_12 * top_rule`` for the open top interval."""
        a = self.a
        v = np.empty(N_INTERVALS)
        v[:-1] = 0.5 * (a[:-1] + a[1:])
        v[-1] = a[-1] * top_rule
        return v

    def locate(self, hourly_wages) -> np.ndarray:
        """1-based interval index for each wage (values below a_1 go to 1)."""
        idx = np.searchsorted(self.a, np.asarray(hourly_wages, dtype=float), side="right")
        return np.clip(idx, 1, N_INTERVALS)


@dataclass(frozen=True)
class EstablishmentRecord:
    estab_id: str
    empl: float
    wage: float
    naics: int
    msa: str
    msacatt6: bool = False
    multi: bool = False
    weight: float = 1.0
    responded: bool = True

    @property
    def avewage(self) -> float:
        """Quarterly wage per employee, WAGE / EMPL."""
        return self.wage / self.empl if self.empl > 0 else math.nan


@dataclass(frozen=True)
class OccupationPanel:
    """Interval counts for one occupation at one establishment.

    ``counts`` is ``None`` when the establishment did not report; zero
    counts are real data and are never used as a stand-in for "absent".
    """

    estab_id: str
    soc: str
    total: int
    counts: tuple[int, ...] | None = None
    provenance: str = OBSERVED

    def __post_init__(self):
        if self.counts is not None:
            object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        object.__setattr__(self, "total", int(self.total))
        if self.counts is None and self.provenance == OBSERVED:
            object.__setattr__(self, "provenance", MISSING)

    @property
    def absent(self) -> bool:
        return self.counts is None

    def with_counts(self, counts: Sequence[int], provenance: str) -> "OccupationPanel":
        return replace(self, counts=tuple(int(c) for c in counts), provenance=provenance)


@dataclass(frozen=True)
class Violation:
    record: str
    rule: str

    def __str__(self):
        return f"{self.record}: {self.rule}"


@dataclass(frozen=True)
class Dataset:
    grid: WageGrid
    establishments: tuple[EstablishmentRecord, ...]
    panels: tuple[OccupationPanel, ...]
    _index: Mapping[str, EstablishmentRecord] = field(
        default=None, init=False, repr=False, compare=False
    )

    def __post_init__(self):
        object.__setattr__(self, "establishments", tuple(self.establishments))
        object.__setattr__(self, "panels", tuple(self.panels))
        index = {}
        for e in self.establishments:
            index.setdefault(e.estab_id, e)
        object.__setattr__(self, "_index", index)

    def establishment(self, estab_id: str) -> EstablishmentRecord:
        return self._index[estab_id]

    def has_establishment(self, estab_id: str) -> bool:
        return estab_id in self._index

    @property
    def respondents(self) -> tuple[EstablishmentRecord, ...]:
        return tuple(e for e in self.establishments if e.responded)

    def socs(self) -> list[str]:
        return sorted({p.soc for p in self.panels})

    def panels_for(self, soc: str) -> list[OccupationPanel]:
        return [p for p in self.panels if p.soc == soc]

    def replace_panels(self, panels: Iterable[OccupationPanel]) -> "Dataset":
        return Dataset(self.grid, self.establishments, tuple(panels))

    def restrict_to(self, soc: str) -> "Dataset":
        """Dataset holding only ``soc`` panels and the establishments that have one."""
        panels = self.panels_for(soc)
        ids = {p.estab_id for p in panels}
        return Dataset(self.grid, tuple(e for e in self.establishments if e.estab_id in ids), panels)


def validate_dataset(ds: Dataset) -> list[Violation]:
    """Check every type invariant; return the violations found (empty if none)."""
    out = [Violation("grid", rule) for rule in ds.grid.problems()]

    seen = set()
    for e in ds.establishments:
        rid = f"establishment {e.estab_id}"
        if e.estab_id in seen:
            out.append(Violation(rid, "duplicate estab_id"))
        seen.add(e.estab_id)
        if not (e.empl > 0):
            out.append(Violation(rid, "empl must be > 0"))
        if not (e.wage >= 0):
            out.append(Violation(rid, "wage must be >= 0"))
        if not (e.weight > 0) or not math.isfinite(e.weight):
            out.append(Violation(rid, "weight must be > 0"))

    pairs = set()
    for p in ds.panels:
        rid = f"panel {p.estab_id}/{p.soc}"
        if (p.estab_id, p.soc) in pairs:
            out.append(Violation(rid, "duplicate (estab_id, soc) panel"))
        pairs.add((p.estab_id, p.soc))
        if p.total < 0:
            out.append(Violation(rid, "total must be >= 0"))
        if p.provenance not in PROVENANCES:
            out.append(Violation(rid, f"unknown provenance {p.provenance!r}"))
        if p.counts is not None:
            if len(p.counts) != N_INTERVALS:
                out.append(Violation(rid, f"counts must have {N_INTERVALS} entries"))
            if any(c < 0 for c in p.counts):
                out.append(Violation(rid, "counts must be >= 0"))
            if sum(p.counts) != p.total:
                out.append(Violation(rid, "counts must sum to total"))
        if not ds.has_establishment(p.estab_id):
            out.append(Violation(rid, "estab_id does not resolve to an establishment"))
            continue
        responded = ds.establishment(p.estab_id).responded
        if responded and p.counts is None:
            out.append(Violation(rid, "respondent panel has absent counts"))
        if not responded and p.provenance == OBSERVED:
            out.append(Violation(rid, "nonrespondent panel marked observed"))
        if responded and p.provenance in (MODEL_IMPUTED, NEIGHBOR_IMPUTED):
            out.append(Violation(rid, "respondent panel marked imputed"))
    return out
