"""Stratified discrete proportional-hazards model over the 12 wage intervals.

The interval index plays the role of event time: an employee "fails" in
the interval holding their wage, and every employee fails somewhere, so
there is no censoring. Coefficients maximise the Cox partial likelihood
with Efron's correction for tied event times; per-stratum baseline
hazards use the Breslow-type estimator at the fitted coefficients.

The hazard of landing in interval ``l`` given not landing earlier is

    h(l) = min(lambda0(l) * exp(eta), 1 - EPS),  eta = beta . (x - center)

with the top interval absorbing. Higher ``eta`` moves mass toward lower
wage intervals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence

import numpy as np

from .domain import N_INTERVALS
from .errors import Nonconvergence, NumericOverflow, SingularDesign
from .preprocess import CovariateVector, DESIGN_COLUMNS

EPS = 1e-6
MAX_HALVINGS = 20
# |standardized coefficient| beyond this is treated as divergence
ESCAPE_BOUND = 30.0
# standardized size above which a converged fit is probed for a monotone likelihood
MONOTONE_CHECK = 5.0


@dataclass(frozen=True)
class SubjectRow:
    event_interval: int
    covariates: Sequence[float] | CovariateVector
    stratum: Hashable = 0
    cluster: Hashable = None
    multiplicity: int = 1


class SurvivalData:
    """Array form of a list of :class:`SubjectRow`, sorted by (stratum, event).

    Parameters
    ----------
    event : int array, values in 1..12
    X : (n, p) float array
    stratum, cluster : length-n label arrays
    weight : positive int array of multiplicities
    """

    def __init__(self, event, X, stratum=None, cluster=None, weight=None):
        event = np.asarray(event, dtype=np.int64)
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        n = len(event)
        if n == 0:
            raise ValueError("no subject rows")
        if X.shape[0] != n:
            raise ValueError("X and event have different lengths")
        if event.min() < 1 or event.max() > N_INTERVALS:
            raise ValueError(f"event intervals must lie in 1..{N_INTERVALS}")
        stratum = np.zeros(n, dtype=np.int64) if stratum is None else np.asarray(stratum)
        cluster = np.arange(n) if cluster is None else np.asarray(cluster)
        weight = np.ones(n, dtype=np.int64) if weight is None else np.asarray(weight)
        if np.any(weight < 1) or np.any(weight != np.round(weight)):
            raise ValueError("multiplicities must be positive integers")
        weight = weight.astype(np.int64)

        labels, scode = np.unique(stratum, return_inverse=True)
        order = np.lexsort((event, scode))
        self.order = order
        self.event = event[order]
        self.X = X[order]
        self.scode = scode[order]
        self.strata = labels
        self.cluster = cluster[order]
        self.weight = weight[order]
        self.n_strata = len(labels)
        self.group = self.scode * N_INTERVALS + (self.event - 1)

    @classmethod
    def from_rows(cls, rows: Sequence[SubjectRow], columns=DESIGN_COLUMNS) -> "SurvivalData":
        rows = list(rows)
        if not rows:
            raise ValueError("no subject rows")
        X = np.array([
            r.covariates.as_array(columns) if isinstance(r.covariates, CovariateVector)
            else np.asarray(r.covariates, dtype=float)
            for r in rows
        ])
        clusters = [r.cluster if r.cluster is not None else i for i, r in enumerate(rows)]
        return cls(
            [r.event_interval for r in rows], X,
            stratum=[r.stratum for r in rows],
            cluster=np.array(clusters, dtype=object),
            weight=[r.multiplicity for r in rows],
        )

    @property
    def n_rows(self) -> int:
        return len(self.event)

    @property
    def n_covariates(self) -> int:
        return self.X.shape[1]

    def with_X(self, X) -> "SurvivalData":
        """Same rows (already sorted) with a replacement covariate matrix."""
        new = object.__new__(SurvivalData)
        new.__dict__.update(self.__dict__)
        new.X = np.asarray(X, dtype=float)
        return new


def _as_data(rows) -> SurvivalData:
    return rows if isinstance(rows, SurvivalData) else SurvivalData.from_rows(rows)


def _linear_predictor(data: SurvivalData, beta) -> tuple[np.ndarray, np.ndarray]:
    """Linear predictor, shifted by its per-stratum max, and exp of it."""
    beta = np.asarray(beta, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        eta = data.X @ beta
    if not np.all(np.isfinite(eta)):
        raise NumericOverflow("non-finite linear predictor; rescale the covariates")
    shift = np.full(data.n_strata, -np.inf)
    np.maximum.at(shift, data.scode, eta)
    eta = eta - shift[data.scode]
    return eta, np.exp(eta)


def _group_sums(data: SurvivalData, values: np.ndarray) -> np.ndarray:
    """Sum ``values`` (leading axis = rows) into (n_strata, 12, ...) cells."""
    G = data.n_strata * N_INTERVALS
    out = np.zeros((G,) + values.shape[1:])
    starts = np.flatnonzero(np.r_[True, data.group[1:] != data.group[:-1]])
    out[data.group[starts]] = np.add.reduceat(values, starts, axis=0)
    return out.reshape((data.n_strata, N_INTERVALS) + values.shape[1:])


def _rev_cumsum(a: np.ndarray) -> np.ndarray:
    return np.flip(np.cumsum(np.flip(a, axis=1), axis=1), axis=1)


class _EfronTerms:
    """Risk-set sums and the scalar Efron sums over tied deaths.

    For a cell with ``d`` tied deaths (multiplicity-weighted), the k-th
    tied death (k = 0..d-1) sees the denominator c_k = S0 - (k/d) * S0f.
    Everything downstream needs only these sums per cell:
    log c, 1/c, t/c, 1/c^2, t/c^2, t^2/c^2 with t = k/d.
    """

    def __init__(self, data: SurvivalData, beta, second_order: bool = True):
        X, m = data.X, data.weight
        eta, r = _linear_predictor(data, beta)
        r = m * r
        self.eta, self.r = eta, r
        self.d = _group_sums(data, m.astype(float))
        self.seta = _group_sums(data, m * eta)
        self.sx = _group_sums(data, m[:, None] * X)
        self.s0f = _group_sums(data, r)
        self.s1f = _group_sums(data, r[:, None] * X)
        self.s0 = _rev_cumsum(self.s0f)
        self.s1 = _rev_cumsum(self.s1f)
        if second_order:
            self.s2f = _group_sums(data, r[:, None, None] * X[:, :, None] * X[:, None, :])
            self.s2 = _rev_cumsum(self.s2f)

        d = self.d.ravel().astype(np.int64)
        cells = np.flatnonzero(d)
        dk = d[cells]
        rep = np.repeat(np.arange(len(cells)), dk)
        offsets = np.repeat(np.cumsum(dk) - dk, dk)
        t = (np.arange(dk.sum()) - offsets) / dk[rep]
        c = self.s0.ravel()[cells][rep] - t * self.s0f.ravel()[cells][rep]
        if not np.all(c > 0) or not np.all(np.isfinite(c)):
            raise NumericOverflow("risk-set sum underflowed; rescale the covariates")

        def cellsum(v):
            out = np.zeros(len(d))
            out[cells] = np.bincount(rep, v, minlength=len(cells))
            return out.reshape(self.d.shape)

        inv = 1.0 / c
        inv2 = inv * inv
        self.logc = cellsum(np.log(c))
        self.B0 = cellsum(inv)
        self.B1 = cellsum(t * inv)
        self.C0 = cellsum(inv2)
        self.C1 = cellsum(t * inv2)
        self.C2 = cellsum(t * t * inv2)

    def loglik(self) -> float:
        return float(np.sum(self.seta - self.logc))

    def gradient(self) -> np.ndarray:
        mean_part = self.s1 * self.B0[..., None] - self.s1f * self.B1[..., None]
        return (self.sx - mean_part).sum(axis=(0, 1))

    def hessian(self) -> np.ndarray:
        B0, B1 = self.B0[..., None, None], self.B1[..., None, None]
        C0, C1, C2 = (v[..., None, None] for v in (self.C0, self.C1, self.C2))
        s1, s1f = self.s1, self.s1f
        o11 = s1[..., :, None] * s1[..., None, :]
        o1f = s1[..., :, None] * s1f[..., None, :]
        off = s1f[..., :, None] * s1f[..., None, :]
        outer = o11 * C0 - (o1f + np.swapaxes(o1f, -1, -2)) * C1 + off * C2
        second = self.s2 * B0 - self.s2f * B1
        return -(second - outer).sum(axis=(0, 1))


def efron_partial_loglik(rows, beta) -> tuple[float, np.ndarray, np.ndarray]:
    """Stratified Efron partial log-likelihood with exact gradient and Hessian.

    ``rows`` is a list of :class:`SubjectRow` or a :class:`SurvivalData`.
    A row with multiplicity ``m`` counts as ``m`` identical subjects.
    """
    data = _as_data(rows)
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if beta.shape[0] != data.n_covariates:
        raise ValueError(f"beta has {beta.shape[0]} entries, design has {data.n_covariates}")
    terms = _EfronTerms(data, beta)
    return terms.loglik(), terms.gradient(), terms.hessian()


def score_residuals(rows, beta) -> np.ndarray:
    """Per-row Efron score residuals (rows in the input order).

    Residuals sum to the gradient. A row's residual is its multiplicity
    times that of a single subject.
    """
    data = _as_data(rows)
    beta = np.asarray(beta, dtype=float).reshape(-1)
    T = _EfronTerms(data, beta, second_order=False)
    X, e = data.X, np.exp(T.eta)
    s, l = data.scode, data.event - 1

    with np.errstate(invalid="ignore", divide="ignore"):
        abar = (T.s1 * T.B0[..., None] - T.s1f * T.B1[..., None]) / T.d[..., None]
    abar = np.nan_to_num(abar)
    Q = T.s1 * T.C0[..., None] - T.s1f * T.C1[..., None]
    DB = T.B0 - T.B1
    DQ = T.s1 * (T.C0 - T.C1)[..., None] - T.s1f * (T.C1 - T.C2)[..., None]

    # exclusive cumulative sums: intervals strictly before the row's event
    cB0 = np.cumsum(T.B0, axis=1) - T.B0
    cQ = np.cumsum(Q, axis=1) - Q

    at_risk = -e[:, None] * (X * cB0[s, l][:, None] - cQ[s, l])
    death = X - abar[s, l] - e[:, None] * (X * DB[s, l][:, None] - DQ[s, l])
    resid = data.weight[:, None] * (at_risk + death)

    out = np.empty_like(resid)
    out[data.order] = resid
    return out


def estimate_baseline(rows, beta, center=None) -> np.ndarray:
    """Breslow-type discrete baseline hazards for intervals 1..11.

    ``lambda0(l) = d_l / sum_{at risk at l} m_j exp(eta_j)`` with
    ``eta = beta . (x - center)``. Rows are pooled into a single stratum.
    """
    data = _as_data(rows)
    X = data.X if center is None else data.X - np.asarray(center, dtype=float)
    eta = X @ np.asarray(beta, dtype=float)
    if not np.all(np.isfinite(eta)):
        raise NumericOverflow("non-finite linear predictor")
    idx = data.event - 1
    d = np.bincount(idx, data.weight.astype(float), N_INTERVALS)
    s0f = np.bincount(idx, data.weight * np.exp(eta), N_INTERVALS)
    s0 = np.cumsum(s0f[::-1])[::-1]
    with np.errstate(invalid="ignore", divide="ignore"):
        lam = np.where(d > 0, d / s0, 0.0)
    return lam[: N_INTERVALS - 1]


@dataclass(frozen=True)
class FittedHazardModel:
    """Fitted coefficients (original covariate scale) and baseline hazards.

    ``last_interval`` records, per stratum, the highest interval with any
    event; the fitted distribution is absorbed there, since no fit subject
    in that stratum survived past it.
    """

    columns: tuple[str, ...]
    beta: np.ndarray
    center: np.ndarray
    baselines: Mapping[Hashable, np.ndarray]
    pooled_baseline: np.ndarray
    last_interval: Mapping[Hashable, int] = field(default_factory=dict)
    pooled_last_interval: int = N_INTERVALS
    cov: np.ndarray | None = None
    fit_report: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return bool(self.fit_report.get("converged", True))

    @property
    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))

    def coef(self) -> dict[str, float]:
        return dict(zip(self.columns, map(float, self.beta)))

    def linear_predictor(self, x) -> float:
        if isinstance(x, CovariateVector):
            x = x.as_array(self.columns)
        return float(np.dot(self.beta, np.asarray(x, dtype=float) - self.center))

    def baseline_for(self, stratum) -> tuple[np.ndarray, int]:
        if stratum in self.baselines:
            return self.baselines[stratum], self.last_interval.get(stratum, N_INTERVALS)
        return self.pooled_baseline, self.pooled_last_interval

    def to_dict(self) -> dict:
        return {
            "columns": list(self.columns),
            "beta": {c: float(b) for c, b in zip(self.columns, self.beta)},
            "center": {c: float(v) for c, v in zip(self.columns, self.center)},
            "baselines": {str(k): [float(v) for v in lam] for k, lam in self.baselines.items()},
            "last_interval": {str(k): int(v) for k, v in self.last_interval.items()},
            "pooled_baseline": [float(v) for v in self.pooled_baseline],
            "pooled_last_interval": int(self.pooled_last_interval),
            "cov": None if self.cov is None else np.asarray(self.cov).tolist(),
            "fit_report": self.fit_report,
        }

    @classmethod
    def from_dict(cls, d: dict, stratum_type=int) -> "FittedHazardModel":
        cols = tuple(d["columns"])
        return cls(
            columns=cols,
            beta=np.array([d["beta"][c] for c in cols]),
            center=np.array([d["center"][c] for c in cols]),
            baselines={stratum_type(k): np.array(v) for k, v in d["baselines"].items()},
            pooled_baseline=np.array(d["pooled_baseline"]),
            last_interval={stratum_type(k): int(v) for k, v in d.get("last_interval", {}).items()},
            pooled_last_interval=int(d.get("pooled_last_interval", N_INTERVALS)),
            cov=None if d.get("cov") is None else np.array(d["cov"]),
            fit_report=d.get("fit_report", {}),
        )


def _standardize(data: SurvivalData, columns):
    w = data.weight.astype(float)
    mean = np.average(data.X, axis=0, weights=w)
    sd = np.sqrt(np.average((data.X - mean) ** 2, axis=0, weights=w))
    flat = sd <= 1e-12 * (1.0 + np.abs(mean))
    if flat.any():
        names = [columns[i] for i in np.flatnonzero(flat)]
        raise SingularDesign(f"constant design column(s): {', '.join(names)}")
    Z = (data.X - mean) / sd
    if np.linalg.matrix_rank(Z) < Z.shape[1]:
        raise SingularDesign("design matrix is rank deficient")
    return Z, mean, sd


def _monotone_ray(zdata: SurvivalData, beta, ll) -> bool:
    """True when a large coefficient sits on a ray where the loglik never falls.

    Under (quasi-)separation the gradient dies out at a finite point, so the
    gradient test passes; doubling the coefficients then costs nothing.
    """
    if np.max(np.abs(beta)) <= MONOTONE_CHECK:
        return False
    try:
        ll2 = efron_partial_loglik(zdata, 2 * beta)[0]
    except NumericOverflow:
        return True
    return ll2 >= ll - 1e-6 * (1.0 + abs(ll))


def _grad_ok(g, ll) -> bool:
    return float(np.max(np.abs(g))) <= 1e-8 * (1.0 + abs(ll))


def fit(rows, max_iter: int = 50, tol: float = 1e-8, columns=None) -> FittedHazardModel:
    """Maximise the Efron partial likelihood by Newton-Raphson with step halving.

    Covariates are centred and scaled internally; returned coefficients are
    on the original scale and the linear predictor is taken about the fit
    sample's (multiplicity-weighted) covariate means.

    Raises
    ------
    SingularDesign
        Constant or collinear design columns, or a singular information matrix.
    Nonconvergence
        Coefficients escape to infinity or ``max_iter`` is exhausted.
    """
    data = _as_data(rows)
    p = data.n_covariates
    if columns is None:
        columns = DESIGN_COLUMNS if p == len(DESIGN_COLUMNS) else tuple(f"x{i}" for i in range(p))
    columns = tuple(columns)
    Z, mean, sd = _standardize(data, columns)
    zdata = data.with_X(Z)

    beta = np.zeros(p)
    ll, g, H = efron_partial_loglik(zdata, beta)
    trace = [ll]
    converged = _grad_ok(g, ll)
    stalled = 0
    halvings_total = 0
    it = 0
    while not converged and it < max_iter:
        it += 1
        try:
            step = np.linalg.solve(-H, g)
        except np.linalg.LinAlgError as exc:
            raise SingularDesign("information matrix is singular") from exc
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            trial = beta + step
            if np.max(np.abs(trial)) > ESCAPE_BOUND:
                step = step / 2
                halvings_total += 1
                continue
            try:
                ll_new, g_new, H_new = efron_partial_loglik(zdata, trial)
            except NumericOverflow:
                step = step / 2
                halvings_total += 1
                continue
            if ll_new >= ll:
                accepted = True
                break
            step = step / 2
            halvings_total += 1
        if not accepted:
            if np.max(np.abs(beta + step * 2 ** MAX_HALVINGS)) > ESCAPE_BOUND:
                raise Nonconvergence("coefficients escaping to infinity",
                                     _diag(trace, g, beta, sd, columns))
            break
        rel = abs(ll_new - ll) / (abs(ll) + tol)
        beta, ll, g, H = trial, ll_new, g_new, H_new
        trace.append(ll)
        converged = _grad_ok(g, ll)
        stalled = stalled + 1 if rel < tol else 0
        if stalled >= 2:
            break

    if not converged:
        raise Nonconvergence(f"no convergence after {it} Newton iterations",
                             _diag(trace, g, beta, sd, columns))
    if np.max(np.abs(beta)) > 0.9 * ESCAPE_BOUND or _monotone_ray(zdata, beta, ll):
        raise Nonconvergence("coefficients escaping to infinity", _diag(trace, g, beta, sd, columns))

    try:
        cov_z = np.linalg.inv(-H)
    except np.linalg.LinAlgError as exc:
        raise SingularDesign("information matrix is singular at the optimum") from exc

    baselines, last = {}, {}
    for k, label in enumerate(data.strata):
        sel = zdata.scode == k
        sub = SurvivalData(zdata.event[sel], Z[sel], weight=zdata.weight[sel])
        baselines[_py(label)] = estimate_baseline(sub, beta)
        last[_py(label)] = int(sub.event.max())
    pooled = estimate_baseline(SurvivalData(zdata.event, Z, weight=zdata.weight), beta)

    report = {
        "converged": True,
        "iterations": it,
        "halvings": halvings_total,
        "loglik": float(ll),
        "loglik_trace": [float(v) for v in trace],
        "max_abs_gradient": float(np.max(np.abs(g))),
        "n_rows": int(data.n_rows),
        "n_subjects": int(data.weight.sum()),
        "n_strata": int(data.n_strata),
        "scale": {c: float(v) for c, v in zip(columns, sd)},
    }
    return FittedHazardModel(
        columns=columns,
        beta=beta / sd,
        center=mean,
        baselines=baselines,
        pooled_baseline=pooled,
        last_interval=last,
        pooled_last_interval=int(data.event.max()),
        cov=cov_z / np.outer(sd, sd),
        fit_report=report,
    )


def _py(label):
    return label.item() if isinstance(label, np.generic) else label


def _diag(trace, g, beta, sd, columns) -> dict:
    return {
        "loglik_trace": [float(v) for v in trace],
        "max_abs_gradient": float(np.max(np.abs(g))),
        "beta_standardized": {c: float(b) for c, b in zip(columns, beta)},
        "beta": {c: float(b / s) for c, b, s in zip(columns, beta, sd)},
    }


def hazards(model: FittedHazardModel, covariates, stratum) -> np.ndarray:
    """Discrete hazards h(1..12) for one covariate vector."""
    lam, last = model.baseline_for(stratum)
    eta = model.linear_predictor(covariates)
    with np.errstate(over="ignore"):
        h = np.minimum(lam * math.exp(min(eta, 700.0)), 1.0 - EPS)
    h = np.append(h, 1.0)
    h[last - 1:] = 1.0
    return h


def predict_interval_probs(model: FittedHazardModel, covariates, stratum) -> np.ndarray:
    """P(L = l), l = 1..12, for an employee with these covariates."""
    h = hazards(model, covariates, stratum)
    surv = np.cumprod(1.0 - h)
    before = np.r_[1.0, surv[:-1]]
    return h * before


def robust_cluster_variance(model: FittedHazardModel, rows) -> np.ndarray:
    """Cluster-robust (sandwich) covariance of ``model.beta``.

    Score residuals are summed within cluster before the outer product.
    """
    data = _as_data(rows)
    Xc = data.X - model.center
    cdata = data.with_X(Xc)
    _, _, H = efron_partial_loglik(cdata, model.beta)
    try:
        bread = np.linalg.inv(-H)
    except np.linalg.LinAlgError as exc:
        raise SingularDesign("information matrix is singular") from exc
    resid = score_residuals(cdata, model.beta)[data.order]  # back to sorted order
    _, cl = np.unique(data.cluster.astype(str), return_inverse=True)
    U = np.zeros((cl.max() + 1, resid.shape[1]))
    np.add.at(U, cl, resid)
    return bread @ (U.T @ U) @ bread
