"""CSV/JSON persistence for datasets, models and reports.

Files are written to a temporary sibling and renamed into place, so a
rerun either fully replaces an output or leaves the old one intact.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

from .domain import (
    N_INTERVALS, OBSERVED, Dataset, EstablishmentRecord, OccupationPanel, WageGrid,
)
from .errors import ConfigError

COUNT_COLUMNS = tuple(f"c{l}" for l in range(1, N_INTERVALS + 1))
ESTAB_COLUMNS = ("estab_id", "empl", "wage", "naics", "msa", "msacatt6", "multi", "weight", "responded")
PANEL_COLUMNS = ("estab_id", "soc", "total") + COUNT_COLUMNS
GRID_COLUMNS = tuple(f"a{l}" for l in range(1, N_INTERVALS + 1))


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return repr(v)
    return "" if v is None else str(v)


def csv_text(rows: Iterable[dict], fieldnames: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(fieldnames), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r.get(k)) for k in fieldnames})
    return buf.getvalue()


def write_csv(path, rows: Iterable[dict], fieldnames: Sequence[str]) -> None:
    atomic_write(path, csv_text(rows, fieldnames))


def write_json(path, obj) -> None:
    atomic_write(path, json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _flag(s: str) -> bool:
    s = s.strip().lower()
    if s in ("1", "true", "t", "yes"):
        return True
    if s in ("0", "false", "f", "no", ""):
        return False
    raise ValueError(f"not a 0/1 flag: {s!r}")


def read_dataset(directory) -> Dataset:
    """Load ``grid.csv``, ``establishments.csv`` and ``panels.csv`` from a directory."""
    d = Path(directory)
    try:
        grid_rows = _read_csv(d / "grid.csv")
        if len(grid_rows) != 1:
            raise ValueError("grid.csv must hold exactly one row")
        grid = WageGrid(tuple(float(grid_rows[0][c]) for c in GRID_COLUMNS))
        estabs = tuple(
            EstablishmentRecord(
                estab_id=r["estab_id"], empl=float(r["empl"]), wage=float(r["wage"]),
                naics=int(r["naics"]), msa=r["msa"], msacatt6=_flag(r["msacatt6"]),
                multi=_flag(r["multi"]), weight=float(r["weight"]), responded=_flag(r["responded"]),
            )
            for r in _read_csv(d / "establishments.csv")
        )
        panels = []
        for r in _read_csv(d / "panels.csv"):
            cells = [r.get(c, "") for c in COUNT_COLUMNS]
            counts = None if all(c.strip() == "" for c in cells) else tuple(int(c) for c in cells)
            prov = (r.get("provenance") or "").strip() or (OBSERVED if counts is not None else "missing")
            panels.append(OccupationPanel(r["estab_id"], r["soc"], int(r["total"]), counts, prov))
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read dataset from {d}: {exc}") from exc
    return Dataset(grid, estabs, tuple(panels))


def write_dataset(ds: Dataset, directory, provenance: bool = False) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_csv(d / "grid.csv", [dict(zip(GRID_COLUMNS, ds.grid.lower_bounds))], GRID_COLUMNS)
    write_csv(d / "establishments.csv",
              ({c: getattr(e, c) for c in ESTAB_COLUMNS} for e in ds.establishments), ESTAB_COLUMNS)
    write_panels(ds, d / "panels.csv", provenance)


def write_panels(ds: Dataset, path, provenance: bool = True) -> None:
    cols = PANEL_COLUMNS + (("provenance",) if provenance else ())
    rows = []
    for p in ds.panels:
        row = {"estab_id": p.estab_id, "soc": p.soc, "total": p.total, "provenance": p.provenance}
        if p.counts is not None:
            row.update(zip(COUNT_COLUMNS, p.counts))
        rows.append(row)
    write_csv(path, rows, cols)
