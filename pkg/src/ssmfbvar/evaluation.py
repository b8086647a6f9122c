"""Forecast evaluation: LPDS, RMSE, Diebold-Mariano tests and the recursive driver.

The log predictive density score follows the printed convention
``n_s ln(2 pi) + ln|V| + (y - ybar)' V^{-1} (y - ybar)``: lower is better and
differences against a benchmark are negative when the model wins.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from .errors import ConfigurationError, DataError, NumericalError
from .forecast import PredictiveDraws, summarize
from .gibbs.config import SamplerConfig
from .models import FitResult, ModelSpec, PriorSettings, fit_forecast
from .tsdata import MixedPanel, PublicationPattern, as_month, format_month, format_quarter, truncate_to_vintage

log = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)
JOINT_QUARTERLY = "joint:quarterly"
JOINT_MONTHLY = "joint:monthly"


# --- metrics -----------------------------------------------------------------


def lpds(y: np.ndarray, ybar: np.ndarray, V: np.ndarray, *, textbook: bool = False) -> float:
    """Score of outcome ``y`` under ``N(ybar, V)``; ``textbook=True`` returns the log density (-0.5x)."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    ybar = np.atleast_1d(np.asarray(ybar, dtype=float))
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if V.shape != (y.size, y.size) or ybar.shape != y.shape:
        raise ConfigurationError("lpds: dimension mismatch")
    try:
        L = np.linalg.cholesky(V)
    except np.linalg.LinAlgError:
        cond = np.linalg.cond(V) if np.all(np.isfinite(V)) else float("inf")
        raise NumericalError(f"predictive covariance is not positive definite (condition number {cond:.3g})",
                             block="lpds") from None
    r = np.linalg.solve(L, y - ybar)
    score = y.size * LOG_2PI + 2.0 * float(np.log(np.diag(L)).sum()) + float(r @ r)
    return -0.5 * score if textbook else score


def rmse(errors: Sequence[float]) -> float:
    e = np.asarray(errors, dtype=float)
    if e.size == 0:
        raise DataError("rmse of an empty evaluation window")
    return float(np.sqrt(np.mean(e ** 2)))


def relative_rmse(model_errors: Sequence[float], bench_errors: Sequence[float]) -> float:
    m, b = np.asarray(model_errors, dtype=float), np.asarray(bench_errors, dtype=float)
    if m.shape != b.shape:
        raise DataError("model and benchmark must be scored on the same window")
    denom = rmse(b)
    if denom == 0.0:
        raise DataError("benchmark RMSE is zero; relative RMSE undefined")
    return rmse(m) / denom


def harvey_factor(T_e: int, h: int) -> float:
    """Small-sample correction ``sqrt((T_e + 1 - 2h + h(h-1)/T_e) / T_e)``."""
    return math.sqrt((T_e + 1 - 2 * h + h * (h - 1) / T_e) / T_e)


@dataclass(frozen=True)
class DMResult:
    statistic: float
    pvalue: float
    defined: bool

    @property
    def reject10(self) -> bool:
        return self.defined and self.pvalue < 0.10

    @property
    def reject1(self) -> bool:
        return self.defined and self.pvalue < 0.01

    @property
    def stars(self) -> str:
        return "**" if self.reject1 else ("*" if self.reject10 else "")


def dm_test(d: Sequence[float], h: int) -> DMResult:
    """Diebold-Mariano test on loss differentials with the Harvey et al. modification.

    Long-run variance: Bartlett kernel with ``h - 1`` lags. Reference
    distribution: Student t with ``T_e - 1`` degrees of freedom, two-sided.
    """
    d = np.asarray(d, dtype=float)
    T_e = d.size
    if h < 1:
        raise ConfigurationError("dm_test horizon must be at least 1")
    if T_e <= h:
        raise DataError(f"evaluation window of {T_e} is too short for horizon {h}")
    dc = d - d.mean()
    lrv = float(dc @ dc) / T_e
    for k in range(1, h):
        lrv += 2.0 * (1.0 - k / h) * float(dc[k:] @ dc[:-k]) / T_e
    if not lrv > 1e-300:
        return DMResult(float("nan"), 1.0, False)
    stat = d.mean() / math.sqrt(lrv / T_e) * harvey_factor(T_e, h)
    return DMResult(float(stat), float(2.0 * stats.t.sf(abs(stat), T_e - 1)), True)


# --- report ------------------------------------------------------------------


@dataclass
class EvalReport:
    """Aggregated scores per (model, variable set, horizon) plus the per-origin records."""

    table: pd.DataFrame
    records: pd.DataFrame
    notes: list[str] = field(default_factory=list)
    textbook_lpds: bool = False

    def cell(self, model: str, set_: str, horizon: int) -> pd.Series:
        t = self.table
        rows = t[(t.model == model) & (t.set == set_) & (t.horizon == horizon)]
        if rows.empty:
            raise KeyError((model, set_, horizon))
        return rows.iloc[0]

    def render(self, digits: int = 2) -> str:
        """Text tables in the layout: one block per set, model rows, horizon columns, DM stars."""
        out = []
        t = self.table
        for set_ in _ordered_sets(t.set.unique()):
            sub = t[t.set == set_]
            horizons = sorted(sub.horizon.unique())
            models = list(dict.fromkeys(sub.model))
            title = {JOINT_QUARTERLY: "Joint, quarterly", JOINT_MONTHLY: "Joint, monthly"}.get(set_, set_)
            header = f"{'Model':<14}" + "".join(f"{'h = ' + str(h):>12}" for h in horizons)
            out.append(f"== {title} ==")
            panels = [("Relative LPDS (model - benchmark)", "rel_lpds", "lpds_stars")]
            if not set_.startswith("joint:"):
                panels.append(("Relative RMSE (model / benchmark)", "rel_rmse", "rmse_stars"))
            for label, col, star in panels:
                out.append(label)
                out.append(header)
                for m in models:
                    cells = []
                    for h in horizons:
                        row = sub[(sub.model == m) & (sub.horizon == h)]
                        if row.empty or not np.isfinite(row[col].iloc[0]):
                            cells.append(f"{'':>12}")
                        else:
                            cells.append(f"{row[col].iloc[0]:.{digits}f}{row[star].iloc[0]:<2}".rjust(12))
                    out.append(f"{m:<14}" + "".join(cells))
            out.append("")
        if self.notes:
            out.append("Notes:")
            out += [f"  {n}" for n in self.notes]
        return "\n".join(out).rstrip() + "\n"

    def write(self, outdir: str | Path) -> None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        self.table.to_csv(outdir / "report.csv", index=False, float_format="%.10g")
        self.records.to_csv(outdir / "records.csv", index=False, float_format="%.10g")
        (outdir / "report.txt").write_text(self.render())


def _ordered_sets(sets) -> list[str]:
    sets = list(sets)
    joint = [s for s in (JOINT_QUARTERLY, JOINT_MONTHLY) if s in sets]
    return joint + [s for s in sets if s not in joint]


# --- scoring -----------------------------------------------------------------


@dataclass(frozen=True)
class Target:
    set: str
    horizon: int
    ids: tuple[str, ...]
    date: int
    quarterly: bool


def evaluation_targets(vintage: MixedPanel, H: int, joint: bool = True) -> list[Target]:
    """Targets reachable within ``H`` months of the vintage's last month that the vintage has not observed."""
    T = vintage.last_date
    q_end = T + (2 - T % 3)
    out: list[Target] = []

    def unobserved(sid: str, date: int) -> bool:
        return vintage.value(sid, date) is None

    monthly = {}
    for h in range(0, H + 1):
        date = T + h
        ids = tuple(s for s in vintage.monthly_ids if unobserved(s, date))
        for sid in ids:
            out.append(Target(sid, h, (sid,), date, False))
        if joint and len(vintage.monthly_ids) > 1 and len(ids) == len(vintage.monthly_ids):
            monthly[h] = Target(JOINT_MONTHLY, h, vintage.monthly_ids, date, False)
    hq = 0
    while q_end + 3 * hq <= T + H:
        date = q_end + 3 * hq
        ids = tuple(s for s in vintage.quarterly_ids if unobserved(s, date))
        for sid in ids:
            out.append(Target(sid, hq, (sid,), date, True))
        if joint and len(vintage.quarterly_ids) > 1 and len(ids) == len(vintage.quarterly_ids):
            out.append(Target(JOINT_QUARTERLY, hq, vintage.quarterly_ids, date, True))
        hq += 1
    out += list(monthly.values())
    return out


def score_target(pred: PredictiveDraws, target: Target, actual: np.ndarray, textbook: bool = False) -> dict:
    x = pred.draws_for(target.ids, target.date)
    summ = summarize(x)
    err = actual - summ.mean
    try:
        score = lpds(actual, summ.mean, summ.cov, textbook=textbook)
    except NumericalError:
        score = float("nan")
    return {"lpds": score, "sqerr": float(err @ err) if len(target.ids) == 1 else float("nan"),
            "mean": float(summ.mean[0]) if len(target.ids) == 1 else float("nan")}


def _actual(panel: MixedPanel, target: Target) -> np.ndarray | None:
    vals = [panel.value(sid, target.date) for sid in target.ids]
    if any(v is None for v in vals):
        return None
    return np.asarray(vals, dtype=float)


# --- recursive driver --------------------------------------------------------


@dataclass(frozen=True)
class _OriginJob:
    index: int
    origin: int
    vintage: MixedPanel
    truth: MixedPanel
    models: tuple[ModelSpec, ...]
    settings: PriorSettings
    sampler: SamplerConfig
    H: int
    textbook: bool


def _run_origin(job: _OriginJob) -> tuple[list[dict], list[str]]:
    records, notes = [], []
    targets = evaluation_targets(job.vintage, job.H)
    for k, spec in enumerate(job.models):
        cfg = SamplerConfig(**{**job.sampler.to_dict(), "stream": job.sampler.stream + 1000 * job.index + k})
        try:
            fit: FitResult = fit_forecast(spec, job.vintage, job.settings, cfg, job.H)
        except (NumericalError, DataError) as exc:
            msg = f"{spec.name} at origin {format_month(job.origin)} skipped: {exc}"
            log.warning(msg)
            notes.append(msg)
            continue
        for tg in targets:
            if any(sid not in fit.predictive.ids for sid in tg.ids):
                continue
            if fit.predictive.step == 3 and not tg.quarterly:
                # pre-aggregated models only speak to quarterly outcomes
                continue
            actual = _actual(job.truth, tg)
            if actual is None:
                continue
            try:
                sc = score_target(fit.predictive, tg, actual, job.textbook)
            except DataError:
                continue
            label = format_quarter(tg.date) if tg.quarterly else format_month(tg.date)
            records.append({"origin": format_month(job.origin), "model": spec.name, "set": tg.set,
                            "horizon": tg.horizon, "target": label, "quarterly": tg.quarterly,
                            "actual": float(actual[0]) if actual.size == 1 else float("nan"), **sc})
    return records, notes


def dm_steps(horizon: int, quarterly: bool) -> int:
    """Forecast steps behind a horizon: ``h + 1`` for quarterly sets (``h = 0`` is a one-step nowcast), ``max(h, 1)`` for monthly."""
    return horizon + 1 if quarterly else max(horizon, 1)


def build_report(
    records: pd.DataFrame,
    benchmark: str | Mapping[str, str],
    notes: Sequence[str] = (),
    textbook: bool = False,
) -> EvalReport:
    """Aggregate per-origin records into relative metrics against the benchmark.

    ``benchmark`` is a model name or a mapping ``{"quarterly": name, "monthly": name}``.
    Scores are compared on the origins both models have.
    """
    if isinstance(benchmark, str):
        bench_of = {True: benchmark, False: benchmark}
    else:
        bench_of = {True: benchmark["quarterly"], False: benchmark["monthly"]}
    rows = []
    if records.empty:
        cols = ["model", "set", "horizon", "n", "lpds", "rmse", "bench_lpds", "bench_rmse", "rel_lpds",
                "rel_rmse", "dm_lpds_stat", "dm_lpds_p", "dm_rmse_stat", "dm_rmse_p", "lpds_stars", "rmse_stars"]
        return EvalReport(pd.DataFrame(columns=cols), records, list(notes), textbook)
    keys = ["origin", "set", "horizon"]
    for (model, set_, h), grp in records.groupby(["model", "set", "horizon"], sort=False):
        quarterly = bool(grp.quarterly.iloc[0])
        bname = bench_of[quarterly]
        bench = records[(records.model == bname) & (records.set == set_) & (records.horizon == h)]
        merged = grp.merge(bench, on=keys, suffixes=("", "_b"))
        if merged.empty:
            continue
        ok = np.isfinite(merged.lpds) & np.isfinite(merged.lpds_b)
        steps = dm_steps(int(h), quarterly)
        row = {"model": model, "set": set_, "horizon": int(h), "n": len(merged),
               "lpds": float(merged.lpds[ok].mean()) if ok.any() else np.nan,
               "bench_lpds": float(merged.lpds_b[ok].mean()) if ok.any() else np.nan}
        row["rel_lpds"] = row["lpds"] - row["bench_lpds"]
        dm_l = _safe_dm((merged.lpds - merged.lpds_b)[ok].to_numpy(), steps)
        row.update(dm_lpds_stat=dm_l.statistic, dm_lpds_p=dm_l.pvalue if dm_l.defined else np.nan,
                   lpds_stars=dm_l.stars)
        if not set_.startswith("joint:"):
            e_m, e_b = np.sqrt(merged.sqerr.to_numpy()), np.sqrt(merged.sqerr_b.to_numpy())
            row["rmse"], row["bench_rmse"] = rmse(e_m), rmse(e_b)
            try:
                row["rel_rmse"] = relative_rmse(e_m, e_b)
            except DataError:
                row["rel_rmse"] = np.nan
            dm_r = _safe_dm((merged.sqerr - merged.sqerr_b).to_numpy(), steps)
            row.update(dm_rmse_stat=dm_r.statistic, dm_rmse_p=dm_r.pvalue if dm_r.defined else np.nan,
                       rmse_stars=dm_r.stars)
        else:
            row.update(rmse=np.nan, bench_rmse=np.nan, rel_rmse=np.nan, dm_rmse_stat=np.nan, dm_rmse_p=np.nan,
                       rmse_stars="")
        rows.append(row)
    table = pd.DataFrame(rows)
    order = ["model", "set", "horizon", "n", "lpds", "rmse", "bench_lpds", "bench_rmse", "rel_lpds", "rel_rmse",
             "dm_lpds_stat", "dm_lpds_p", "dm_rmse_stat", "dm_rmse_p", "lpds_stars", "rmse_stars"]
    return EvalReport(table[order], records, list(notes), textbook)


def _safe_dm(d: np.ndarray, steps: int) -> DMResult:
    try:
        return dm_test(d, steps)
    except DataError:
        return DMResult(float("nan"), 1.0, False)


def recursive_evaluate(
    panel: MixedPanel,
    models: Sequence[ModelSpec],
    start: int | str,
    end: int | str,
    H: int,
    *,
    settings: PriorSettings,
    sampler: SamplerConfig,
    benchmark: str | Mapping[str, str],
    pattern: PublicationPattern | None = None,
    vintages: Mapping[int, MixedPanel] | None = None,
    truth: MixedPanel | None = None,
    step: int = 1,
    jobs: int = 1,
    textbook_lpds: bool = False,
) -> EvalReport:
    """Estimate every model at each origin month in ``[start, end]`` and score ``H`` months ahead.

    The information set at an origin is ``vintages[origin]`` when given, else
    the final data cut by :func:`truncate_to_vintage` with ``pattern``.
    Outcomes come from ``truth`` (default: ``panel``, the latest vintage).
    Benchmark specs must be among ``models``.
    """
    start, end = as_month(start), as_month(end)
    if end < start:
        raise ConfigurationError("evaluation end precedes start")
    names = [m.name for m in models]
    if len(set(names)) != len(names):
        raise ConfigurationError("model names must be unique")
    bnames = [benchmark] if isinstance(benchmark, str) else list(benchmark.values())
    for b in bnames:
        if b not in names:
            raise ConfigurationError(f"benchmark {b!r} is not among the evaluated models")
    truth = truth or panel
    pattern = pattern or PublicationPattern()
    jobs_list = []
    for i, origin in enumerate(range(start, end + 1, step)):
        vintage = vintages[origin] if vintages is not None else truncate_to_vintage(panel, origin, pattern)
        jobs_list.append(_OriginJob(i, origin, vintage, truth, tuple(models), settings, sampler, H, textbook_lpds))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_origin, jobs_list))
    else:
        results = [_run_origin(j) for j in jobs_list]
    records = [r for recs, _ in results for r in recs]
    notes = [n for _, ns in results for n in ns]
    notes.append(f"{len(jobs_list)} origins from {format_month(start)} to {format_month(end)}")
    return build_report(pd.DataFrame(records), benchmark, notes, textbook_lpds)
