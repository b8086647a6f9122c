"""Command-line interface: ``ssmfbvar {simulate,estimate,forecast,evaluate}``.

All subcommands read one INI file (see README for the sections) and write
into ``--output``. Runs are reproducible under a fixed ``--seed``.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import stats as sps

from .errors import ConfigurationError, DataError, NumericalError
from .evaluation import recursive_evaluate
from .forecast import save_predictive, simulate_predictive, write_forecast_csv
from .gibbs.chain import ChainResult
from .gibbs.config import SamplerConfig
from .gibbs.output import load_draws, write_draws
from .models import ModelSpec, PriorSettings, benchmark_models, estimation_panel, mixed_models, spec_prior
from .priors import CSVPrior
from .simulate import DGPConfig, default_dgp, simulate_dgp
from .stats import rng_stream
from .tsdata import (
    MixedPanel,
    PublicationPattern,
    Series,
    as_month,
    format_month,
    load_panel_manifest,
    truncate_to_vintage,
    write_series_csv,
)
from .gibbs.chain import run_chain

log = logging.getLogger("ssmfbvar")

SUBCOMMANDS = ("simulate", "estimate", "forecast", "evaluate")


@dataclass
class RunConfig:
    subcommand: str
    config_path: Path | None
    output: Path
    seed: int
    jobs: int = 1
    parser: configparser.ConfigParser = field(default_factory=configparser.ConfigParser)

    def section(self, name: str) -> configparser.SectionProxy | dict:
        return self.parser[name] if self.parser.has_section(name) else {}

    def get(self, section: str, key: str, default=None):
        sec = self.section(section)
        return sec.get(key, default) if sec else default


def _parser() -> configparser.ConfigParser:
    p = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    p.optionxform = str
    return p


def load_config(subcommand: str, path: str | None, output: str, seed: int, jobs: int = 1) -> RunConfig:
    parser = _parser()
    cfg_path = None
    if path is not None:
        cfg_path = Path(path)
        if not cfg_path.is_file():
            raise ConfigurationError(f"config file {cfg_path} does not exist")
        parser.read(cfg_path)
    out = Path(output)
    out.mkdir(parents=True, exist_ok=True)
    if jobs < 1:
        raise ConfigurationError("--jobs must be at least 1")
    return RunConfig(subcommand, cfg_path, out, int(seed), int(jobs), parser)


def _floats(text: str) -> list[float]:
    return [float(x) for x in str(text).replace(";", ",").split(",") if x.strip()]


def _bool(text, default=False) -> bool:
    if text is None:
        return default
    return str(text).strip().lower() in ("1", "true", "yes", "on")


def sampler_config(rc: RunConfig, draws: int | None = None, stream: int = 0) -> SamplerConfig:
    sec = rc.section("sampler")
    kw = {}
    for key, conv in (("draws", int), ("burnin", int), ("batch_size", int), ("target_acceptance", float),
                      ("init_mh_scale", float), ("fixed_sigma2", float)):
        if key in sec:
            kw[key] = conv(sec[key])
    if draws is not None:
        kw["draws"] = draws
        if kw.get("burnin", 5000) >= draws:
            kw["burnin"] = draws // 2
    return SamplerConfig(seed=rc.seed, stream=stream, **kw)


def _manifest_path(rc: RunConfig) -> Path | None:
    manifest = rc.get("data", "manifest")
    if manifest is None:
        return rc.config_path
    path = Path(manifest)
    if not path.is_absolute() and rc.config_path is not None:
        path = rc.config_path.parent / path
    return path


def prior_settings(rc: RunConfig, ids) -> PriorSettings:
    sec = dict(rc.section("steady_state"))
    # entries in the data manifest fill gaps left by the run config
    path = _manifest_path(rc)
    if path is not None and path != rc.config_path and path.is_file():
        mp = _parser()
        mp.read(path)
        if mp.has_section("steady_state"):
            sec = {**dict(mp["steady_state"]), **sec}
    mu, sd = {}, {}
    for sid in ids:
        if sid in sec:
            vals = _floats(sec[sid])
            mu[sid] = vals[0]
            if len(vals) > 1:
                sd[sid] = vals[1]
    m = rc.section("model")
    v = rc.section("volatility")
    csv_prior = CSVPrior(
        mu_phi=float(v.get("mu_phi", 0.9)),
        omega_phi=float(v.get("sd_phi", 0.1)) ** 2,
        sigma2_mean=float(v.get("sigma2", 0.01)),
        d=float(v.get("d", 4)),
    )
    return PriorSettings(mu, sd, lambda1=float(m.get("lambda1", 0.2)), lambda2=float(m.get("lambda2", 1.0)),
                         c0=float(m.get("c0", 0.01)), c1=float(m.get("c1", 0.01)), csv_prior=csv_prior)


def model_spec(rc: RunConfig) -> ModelSpec:
    m = rc.section("model")
    p = int(m.get("p", 12))
    name = m.get("name", "SS-CSV")
    known = {s.name: s for s in mixed_models(p) + benchmark_models(p, p)}
    if name not in known:
        raise ConfigurationError(f"unknown model {name!r}; choose from {', '.join(known)}")
    return replace(known[name], p=p)


def load_panel(rc: RunConfig) -> tuple[MixedPanel, PublicationPattern]:
    path = _manifest_path(rc)
    if path is None:
        raise ConfigurationError("no panel: give [data] manifest or [series.*] sections")
    return load_panel_manifest(path)


def information_set(rc: RunConfig, panel: MixedPanel, pattern: PublicationPattern) -> MixedPanel:
    """Panel as seen on ``[data] asof`` (default: the month after the last data month)."""
    asof = rc.get("data", "asof")
    asof = as_month(asof) if asof else panel.last_date + 1
    return truncate_to_vintage(panel, asof, pattern)


# --- simulate ----------------------------------------------------------------


def dgp_from_config(rc: RunConfig) -> DGPConfig:
    sec = rc.section("simulate")
    T = int(sec.get("T", 200))
    p = int(sec.get("p", 4))
    csv_on = _bool(sec.get("csv"), True)
    kw = {}
    if "phi" in sec:
        kw["phi"] = float(sec["phi"])
    if "sigma2" in sec:
        kw["sigma2"] = float(sec["sigma2"])
    if "start" in sec:
        kw["start"] = sec["start"]
    kw["allow_explosive"] = _bool(sec.get("allow_explosive"))
    if "Pi" in sec or "Sigma" in sec or "psi" in sec:
        n_m = int(sec["n_m"])
        psi = np.array(_floats(sec["psi"]))
        n = psi.size
        Pi = np.array(_floats(sec["Pi"])).reshape(n, n * p) if "Pi" in sec else np.zeros((n, n * p))
        Sigma = np.array(_floats(sec["Sigma"])).reshape(n, n) if "Sigma" in sec else np.eye(n)
        return DGPConfig(Pi, Sigma, psi, n_m, p, T, **{"phi": 0.0, "sigma2": 0.0, **kw})
    return default_dgp(T=T, p=p, csv=csv_on, **kw)


def cmd_simulate(rc: RunConfig) -> dict:
    dgp = dgp_from_config(rc)
    sim = simulate_dgp(dgp, rng_stream(rc.seed, 0))
    panel = sim.panel
    delays = {}
    sec = rc.section("simulate")
    if "delays" in sec:
        for item in str(sec["delays"]).split(","):
            if item.strip():
                k, v = item.split(":")
                delays[k.strip()] = int(v)
    out = rc.output
    lines = ["[data]", "", "[steady_state]"]
    for i, sid in enumerate(panel.ids):
        lines.append(f"{sid} = {float(dgp.psi[i])!r}, 1.0")
    for sid in panel.monthly_ids:
        write_series_csv(out / f"{sid}.csv", panel.series(sid))
        lines += ["", f"[series.{sid}]", f"path = {sid}.csv", "frequency = monthly", f"delay_months = {delays.get(sid, 0)}"]
    for sid in panel.quarterly_ids:
        write_series_csv(out / f"{sid}.csv", panel.series(sid))
        lines += ["", f"[series.{sid}]", f"path = {sid}.csv", "frequency = quarterly",
                  f"delay_months = {delays.get(sid, 0)}"]
    (out / "panel.ini").write_text("\n".join(lines) + "\n")
    with open(out / "truth_monthly.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date"] + list(panel.ids) + ["h"])
        for t in range(panel.T):
            w.writerow([format_month(int(panel.dates[t]))] + [repr(float(v)) for v in sim.z[t]] + [repr(float(sim.h[t]))])
    params = {"Pi": dgp.Pi.tolist(), "Sigma": dgp.Sigma.tolist(), "psi": dgp.psi.tolist(), "phi": dgp.phi,
              "sigma2": dgp.sigma2, "p": dgp.p, "T": dgp.T, "n_m": dgp.n_m, "ids": list(panel.ids),
              "delays": delays, "seed": rc.seed, "start": format_month(int(dgp.start))}
    (out / "truth_params.json").write_text(json.dumps(params, indent=2, sort_keys=True) + "\n")
    return params


# --- estimate ----------------------------------------------------------------


def _chain_job(args):
    est, prior, cfg = args
    return run_chain(est, prior, cfg)


def merge_chains(results: list[ChainResult]) -> ChainResult:
    if len(results) == 1:
        return results[0]
    base = results[0]
    rates = [r.acceptance_rate for r in results if r.acceptance_rate is not None]
    return replace(base, states=[s for r in results for s in r.states],
                   acceptance_rate=float(np.mean(rates)) if rates else None,
                   explosive_draws=sum(r.explosive_draws for r in results),
                   elapsed=sum(r.elapsed for r in results))


def steady_state_summary(result: ChainResult, settings: PriorSettings, path: Path, density_path: Path) -> None:
    psi = result.stack("psi")
    n = result.n
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["variable", "prior_mean", "prior_sd", "post_mean", "post_sd", "q05", "q50", "q95"])
        for i, sid in enumerate(result.ids):
            x = psi[:, i]
            q = np.quantile(x, [0.05, 0.5, 0.95])
            w.writerow([sid, settings.mu_psi.get(sid, ""), settings.sd_psi.get(sid, ""), repr(float(x.mean())),
                        repr(float(x.std(ddof=1))) if x.size > 1 else "0.0", *[repr(float(v)) for v in q]])
    with open(density_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["variable", "x", "prior_density", "posterior_density"])
        for i, sid in enumerate(result.ids[:n]):
            x = psi[:, i]
            mu, sd = settings.mu_psi.get(sid), settings.sd_psi.get(sid)
            lo, hi = np.quantile(x, [0.001, 0.999])
            if mu is not None and sd is not None:
                lo, hi = min(lo, mu - 3 * sd), max(hi, mu + 3 * sd)
            grid = np.linspace(lo, hi, 200)
            post = sps.gaussian_kde(x)(grid) if x.size > 2 and np.ptp(x) > 0 else np.full(grid.size, np.nan)
            prior = sps.norm.pdf(grid, mu, sd) if (mu is not None and sd is not None) else np.full(grid.size, np.nan)
            for g, a, b in zip(grid, prior, post):
                w.writerow([sid, repr(float(g)), repr(float(a)), repr(float(b))])


def volatility_summary(result: ChainResult, dates: np.ndarray, path: Path) -> None:
    sf = np.sqrt(np.exp(result.stack("h")))
    months = dates[result.p:]
    q = np.quantile(sf, [0.05, 0.5, 0.95], axis=0)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "sqrt_f_mean", "q05", "q50", "q95"])
        for t, d in enumerate(months):
            w.writerow([format_month(int(d)), repr(float(sf[:, t].mean())), repr(float(q[0, t])),
                        repr(float(q[1, t])), repr(float(q[2, t]))])


def cmd_estimate(rc: RunConfig, draws: int | None = None) -> dict:
    panel, pattern = load_panel(rc)
    vintage = information_set(rc, panel, pattern)
    spec = model_spec(rc)
    est = estimation_panel(spec, vintage)
    settings = prior_settings(rc, est.ids)
    prior = spec_prior(spec, est, settings)
    chains = int(rc.get("sampler", "chains", 1))
    cfgs = [sampler_config(rc, draws, stream=i) for i in range(chains)]
    if rc.jobs > 1 and chains > 1:
        with ProcessPoolExecutor(max_workers=min(rc.jobs, chains)) as ex:
            results = list(ex.map(_chain_job, [(est, prior, c) for c in cfgs]))
    else:
        results = [run_chain(est, prior, c) for c in cfgs]
    result = merge_chains(results)
    extra = {"model": spec.name, "frequency": spec.frequency, "lambda1": settings.lambda1,
             "lambda2": settings.lambda2, "chains": chains, "sample_start": format_month(int(est.dates[0])),
             "step": 3 if est.freq == "Q" else 1}
    man = write_draws(result, rc.output, extra)
    steady_state_summary(result, settings, rc.output / "steady_state_summary.csv",
                         rc.output / "steady_state_density.csv")
    volatility_summary(result, est.dates, rc.output / "volatility_summary.csv")
    return man


# --- forecast ----------------------------------------------------------------


def cmd_forecast(rc: RunConfig, draws_dir: str | None, horizon: int | None) -> None:
    src = Path(draws_dir) if draws_dir else Path(rc.get("forecast", "draws", rc.output))
    H = horizon if horizon is not None else int(rc.get("forecast", "horizon", 24))
    result = load_draws(src)
    man = json.loads((src / "manifest.json").read_text())
    pred = simulate_predictive(result, H, rng_stream(rc.seed, 1), step=int(man.get("step", 1)))
    write_forecast_csv(pred, rc.output / "forecast.csv")
    save_predictive(pred, rc.output / "predictive.npz")


# --- evaluate ----------------------------------------------------------------


def cmd_evaluate(rc: RunConfig, draws: int | None = None) -> None:
    panel, pattern = load_panel(rc)
    sec = rc.section("evaluate")
    p = int(rc.get("model", "p", 12))
    pm, pq = int(sec.get("p_monthly", p)), int(sec.get("p_quarterly", 4))
    available = {s.name: s for s in mixed_models(p) + benchmark_models(pm, pq)}
    names = [x.strip() for x in str(sec.get("models", ",".join(available))).split(",") if x.strip()]
    bq = sec.get("benchmark_quarterly", "Benchmark-Q")
    bm = sec.get("benchmark_monthly", "Benchmark-M")
    for b in (bq, bm):
        if b not in names:
            names.append(b)
    unknown = [n for n in names if n not in available]
    if unknown:
        raise ConfigurationError(f"unknown models: {', '.join(unknown)}")
    models = [available[n] for n in names]
    if "start" not in sec or "end" not in sec:
        raise ConfigurationError("[evaluate] needs start and end origin months")
    settings = prior_settings(rc, panel.ids)
    report = recursive_evaluate(
        panel, models, sec["start"], sec["end"], int(sec.get("horizon", 12)),
        settings=settings, sampler=sampler_config(rc, draws), benchmark={"quarterly": bq, "monthly": bm},
        pattern=pattern, step=int(sec.get("step", 1)), jobs=rc.jobs,
        textbook_lpds=_bool(sec.get("textbook_lpds")),
    )
    report.write(rc.output)


# --- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ssmfbvar", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="INI configuration file")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--output", required=True, help="output directory")
        if name in ("estimate", "evaluate"):
            sp.add_argument("--draws", type=int, help="override [sampler] draws (burn-in capped at half)")
        if name == "forecast":
            sp.add_argument("--draws-dir", help="directory written by estimate")
            sp.add_argument("--horizon", type=int, help="forecast horizon in periods")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        rc = load_config(args.command, args.config, args.output, args.seed, args.jobs)
        if args.command == "simulate":
            cmd_simulate(rc)
        elif args.command == "estimate":
            cmd_estimate(rc, args.draws)
        elif args.command == "forecast":
            cmd_forecast(rc, args.draws_dir, args.horizon)
        else:
            cmd_evaluate(rc, args.draws)
    except (ConfigurationError, DataError, NumericalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
