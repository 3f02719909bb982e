"""Command-line entry point: ``wageimpute synth|fit|impute|estimate|simulate``.

Exit codes: 0 success, 2 config error, 3 fit failure, 4 imputation input
error, 5 empty domain, 6 simulation failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, replace
from pathlib import Path

from . import io
from .domain import validate_dataset
from .errors import (
    ConfigError, EmptyDomain, EmptyInput, ModelUnavailable, NoDonors, Nonconvergence,
    NoResults, SingularDesign,
)
from .estimators import DomainEstimate, domain_estimates, ecdf_by_avewage_tertile
from .imputer import impute_dataset, neighbor_impute_dataset
from .industry_tree import assign_class
from .occupation import OccupationModel, fit_occupation_model
from .preprocess import MODEL_SPECS
from .simulator import (
    MissingnessScenario, ReplicateResult, builtin_scenarios, nonresponse_probabilities,
    run_replications, summarize_bias,
)
from .synthgen import PopulationConfig, generate_population

EXIT_OK, EXIT_CONFIG, EXIT_FIT, EXIT_IMPUTE, EXIT_DOMAIN, EXIT_SIMULATION = 0, 2, 3, 4, 5, 6


class CommandError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _pcts(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected two comma-separated fractions, e.g. 0.01,0.99")
    if not 0 <= lo < hi <= 1:
        raise argparse.ArgumentTypeError("need 0 <= lower < upper <= 1")
    return lo, hi


def _out_dir(path) -> Path:
    d = Path(path)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CommandError(EXIT_CONFIG, f"cannot create output directory {d}: {exc}")
    return d


def _load(path):
    ds = io.read_dataset(path)
    problems = validate_dataset(ds)
    if problems:
        shown = "; ".join(str(v) for v in problems[:5])
        more = f" (+{len(problems) - 5} more)" if len(problems) > 5 else ""
        raise ConfigError(f"invalid dataset in {path}: {shown}{more}")
    return ds


def _load_models(paths) -> dict[str, OccupationModel]:
    models = {}
    for p in paths or ():
        try:
            m = OccupationModel.from_dict(io.read_json(p))
        except (OSError, KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"cannot read model {p}: {exc}") from exc
        models[m.soc] = m
    return models


def _write(fn, *args):
    try:
        fn(*args)
    except OSError as exc:
        raise CommandError(EXIT_CONFIG, f"cannot write output: {exc}")


# --- commands ---------------------------------------------------------------

def cmd_synth(args) -> int:
    try:
        cfg = PopulationConfig.from_dict(io.read_json(args.config)) if args.config else PopulationConfig()
    except (OSError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad synth config: {exc}") from exc
    out = _out_dir(args.out)
    ds, params = generate_population(cfg, seed=args.seed)
    _write(io.write_dataset, ds, out)
    _write(io.write_json, out / "params.json", params)
    return EXIT_OK


def cmd_fit(args) -> int:
    ds = _load(args.data)
    soc = args.soc or _only_soc(ds)
    try:
        model = fit_occupation_model(
            ds, soc, args.model_spec, min_leaf=args.min_leaf, bmsa_threshold=args.bmsa_threshold,
            winsor_pcts=args.winsor_pcts, top_rule=args.top_rule,
        )
    except Nonconvergence as exc:
        raise CommandError(EXIT_FIT, f"fit did not converge: {exc}\n"
                                     + json.dumps(exc.diagnostics, sort_keys=True, default=str))
    except (SingularDesign, EmptyInput) as exc:
        raise CommandError(EXIT_FIT, f"fit failed: {type(exc).__name__}: {exc}")
    out = Path(args.out)
    if out.suffix != ".json":
        out = _out_dir(out) / f"model_{soc}_{args.model_spec}.json"
    elif out.parent != Path(""):
        _out_dir(out.parent)
    _write(io.write_json, out, model.to_dict())
    return EXIT_OK


def _only_soc(ds) -> str:
    socs = ds.socs()
    if len(socs) != 1:
        raise ConfigError(f"--soc is required when the data hold {len(socs)} occupations")
    return socs[0]


def cmd_impute(args) -> int:
    ds = _load(args.data)
    models = _load_models(args.models)
    try:
        if args.method == "model":
            done = impute_dataset(ds, models, master_seed=args.seed)
        else:
            done = neighbor_impute_dataset(ds, {s: m.tree for s, m in models.items()} or None)
    except (ModelUnavailable, NoDonors) as exc:
        raise CommandError(EXIT_IMPUTE, f"imputation failed: {type(exc).__name__}: {exc}")
    out = _out_dir(args.out)
    _write(io.write_dataset, done, out, True)
    return EXIT_OK


def _domains(ds, args, classify):
    """(label, filter kwargs) for each report row."""
    rows = [("overall", {})]
    filters = {}
    if args.naics_prefix:
        filters["naics_prefixes"] = args.naics_prefix
    if args.msa:
        filters["msas"] = args.msa
    if args.industry_class is not None:
        filters["industry_classes"] = args.industry_class
    if filters:
        rows.append(("filtered", filters))
    if args.by == "msa":
        rows += [(f"msa={m}", {"msas": [m]}) for m in sorted({e.msa for e in ds.establishments})]
    elif args.by == "naics2":
        codes = sorted({str(e.naics)[:2] for e in ds.establishments})
        rows += [(f"naics={c}", {"naics_prefixes": [c]}) for c in codes]
    elif args.by == "industry-class":
        classes = sorted({classify(e.naics) for e in ds.establishments})
        rows += [(f"class={c}", {"industry_classes": [c]}) for c in classes]
    return rows


def cmd_estimate(args) -> int:
    ds = _load(args.data)
    soc = args.soc or _only_soc(ds)
    models = _load_models(args.models)
    classify = None
    if soc in models:
        tree = models[soc].tree
        classify = lambda naics: assign_class(tree, naics)  # noqa: E731
    elif args.industry_class is not None or args.by == "industry-class":
        raise ConfigError("industry-class domains need --models with a fitted model for this occupation")
    rows = []
    for label, kw in _domains(ds, args, classify):
        try:
            est = domain_estimates(ds, soc, classify=classify, top_rule=args.top_rule, domain=label, **kw)
        except EmptyDomain as exc:
            if label in ("overall", "filtered"):
                raise CommandError(EXIT_DOMAIN, f"empty domain: {exc}")
            continue
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        rows.append(est.as_row(annual=args.annual))
    fields = list(DomainEstimate.__dataclass_fields__)
    out = Path(args.out)
    if out.parent != Path(""):
        _out_dir(out.parent)
    _write(io.write_csv, out, rows, fields)
    if args.curves:
        try:
            ecdf = ecdf_by_avewage_tertile(ds, soc)
        except EmptyDomain as exc:
            raise CommandError(EXIT_DOMAIN, f"empty domain: {exc}")
        cols = ("tertile",) + tuple(f"F{l}" for l in range(1, ecdf.shape[1] + 1))
        crow = [{"tertile": t + 1, **{f"F{l + 1}": float(v) for l, v in enumerate(r)}}
                for t, r in enumerate(ecdf)]
        _write(io.write_csv, args.curves, crow, cols)
    return EXIT_OK


def _scenarios(args) -> dict[str, MissingnessScenario]:
    if args.config:
        try:
            cfg = io.read_json(args.config)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"bad simulate config: {exc}") from exc
        for k in ("model_spec", "replications", "seed", "target_rate", "scenario", "soc"):
            if k in cfg and getattr(args, k) is None:
                setattr(args, k, cfg[k])
        if "alphas" in cfg:
            try:
                a = [float(x) for x in cfg["alphas"]]
                custom = MissingnessScenario(*a)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"alphas must be five numbers: {exc}") from exc
            return {cfg.get("scenario") or "custom": _with_rate(custom, args.target_rate)}
    known = builtin_scenarios()
    name = args.scenario or "MAR1"
    names = list(known) if name == "all" else [name]
    for n in names:
        if n not in known:
            raise ConfigError(f"unknown scenario {n!r}; choose from {sorted(known)} or 'all'")
    return {n: _with_rate(known[n], args.target_rate) for n in names}


def _with_rate(s: MissingnessScenario, rate) -> MissingnessScenario:
    if rate is None:
        return s
    try:
        return replace(s, target_rate=float(rate))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_simulate(args) -> int:
    scenarios = _scenarios(args)
    pop = _load(args.data)
    soc = args.soc or _only_soc(pop)
    if any(p.absent for p in pop.panels_for(soc)):
        raise ConfigError("simulate needs a complete population (no absent panels)")
    spec = args.model_spec or "both"
    specs = list(MODEL_SPECS) if spec == "both" else [spec]
    if any(s not in MODEL_SPECS for s in specs):
        raise ConfigError(f"unknown model spec {spec!r}")
    reps = 250 if args.replications is None else int(args.replications)
    seed = 0 if args.seed is None else int(args.seed)
    if reps < 1:
        raise ConfigError("--replications must be >= 1")
    opts = dict(min_leaf=args.min_leaf, bmsa_threshold=args.bmsa_threshold,
                winsor_pcts=args.winsor_pcts, top_rule=args.top_rule)
    results: list[ReplicateResult] = []
    meta = {"soc": soc, "seed": seed, "replications": reps, "fix_tree": args.fix_tree,
            "tree": "fixed on complete population" if args.fix_tree else "refit per replicate on responders",
            "scenarios": {}}
    for name, scen in scenarios.items():
        _, prob, a0 = nonresponse_probabilities(pop.restrict_to(soc), soc, scen)
        meta["scenarios"][name] = {**asdict(scen), "alpha0_used": a0,
                                   "expected_nonresponse": float(prob.mean()) if len(prob) else math.nan}
        for s in specs:
            results += run_replications(pop, soc, scen, s, reps, master_seed=seed,
                                        scenario_name=name, fit_options=opts, fix_tree=args.fix_tree)
    try:
        summary = summarize_bias(results)
    except NoResults as exc:
        raise CommandError(EXIT_SIMULATION, f"simulation failed: {exc}")
    out = _out_dir(args.out)
    fields = list(ReplicateResult.__dataclass_fields__)
    _write(io.write_csv, out / "replicates.csv", (asdict(r) for r in results), fields)
    sfields = ["scenario", "model_spec", "statistic", "replicates", "failed",
               "mean", "median", "sd", "q1", "q3", "min", "max"]
    _write(io.write_csv, out / "summary.csv", summary, sfields)
    _write(io.write_json, out / "simulation.json", meta)
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def _fit_flags(p):
    p.add_argument("--min-leaf", type=int, default=80)
    p.add_argument("--bmsa-threshold", type=int, default=250)
    p.add_argument("--winsor-pcts", type=_pcts, default=(0.01, 0.99))
    p.add_argument("--top-rule", type=float, default=1.25)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wageimpute", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic population")
    p.add_argument("--config", help="JSON population config (defaults if omitted)")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit one occupation's hazard model")
    p.add_argument("--data", required=True)
    p.add_argument("--soc")
    p.add_argument("--model-spec", choices=MODEL_SPECS, default="FULL")
    p.add_argument("--out", required=True, help="model .json path or a directory")
    _fit_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("impute", help="fill absent panels")
    p.add_argument("--data", required=True)
    p.add_argument("--models", nargs="*", default=[])
    p.add_argument("--method", choices=("model", "neighbor"), default="model")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_impute)

    p = sub.add_parser("estimate", help="domain estimates from completed data")
    p.add_argument("--data", required=True)
    p.add_argument("--soc")
    p.add_argument("--models", nargs="*", default=[], help="needed for industry-class domains")
    p.add_argument("--naics-prefix", action="append")
    p.add_argument("--msa", action="append")
    p.add_argument("--industry-class", type=int, action="append")
    p.add_argument("--by", choices=("none", "msa", "naics2", "industry-class"), default="none")
    p.add_argument("--top-rule", type=float, default=1.25)
    p.add_argument("--annual", action="store_true", help="report annual (x2080) wages")
    p.add_argument("--curves", help="also write AVEWAGE-tertile ECDFs to this CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="missingness simulation study")
    p.add_argument("--data", required=True, help="complete population directory")
    p.add_argument("--soc")
    p.add_argument("--scenario", help="MAR1, MAR2, NINR or all")
    p.add_argument("--model-spec", choices=MODEL_SPECS + ("both",))
    p.add_argument("--replications", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--target-rate", type=float)
    p.add_argument("--config", help="JSON with scenario or alphas, model_spec, replications, seed, target_rate")
    p.add_argument("--fix-tree", action="store_true")
    p.add_argument("--out", required=True)
    _fit_flags(p)
    p.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
