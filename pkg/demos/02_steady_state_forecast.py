"""Estimating the steady state and forecasting towards it.

Fit the normal-gamma steady-state model with common stochastic volatility
to simulated data, then look at where the long-horizon forecast settles.
About half a minute on one core.
"""
import numpy as np

from ssmfbvar.forecast import simulate_predictive, summarize
from ssmfbvar.gibbs import SamplerConfig, run_chain
from ssmfbvar.priors import build_prior
from ssmfbvar.simulate import default_dgp, simulate_dgp
from ssmfbvar.stats import rng_stream

sim = simulate_dgp(default_dgp(T=200, delays={"m2": 1, "q1": 1}), rng_stream(7))
panel = sim.panel

# deliberately vague prior means: 0 for every series
prior = build_prior(panel, 4, ss="normal_gamma", csv=True, mu_psi=[0.0, 0.0, 0.0])
res = run_chain(panel, prior, SamplerConfig(draws=3000, burnin=1500, seed=1))
print(f"{len(res.states)} kept draws in {res.elapsed:.1f}s, MH acceptance {res.acceptance_rate:.2f}")

psi = res.stack("psi")
print("\nsteady state  truth  posterior mean  90% interval")
for i, sid in enumerate(panel.ids):
    lo, hi = np.quantile(psi[:, i], [0.05, 0.95])
    print(f"{sid:>12}  {sim.dgp.psi[i]:5.2f}  {psi[:, i].mean():14.2f}  [{lo:.2f}, {hi:.2f}]")

lam = res.stack("lambda_psi")
print(f"\nglobal shrinkage lambda: median {np.median(lam):.3g}")

phi = res.stack("phi")
print(f"volatility persistence phi: truth {sim.dgp.phi}, posterior mean {phi.mean():.2f}")

# predictive draws, five years out
pred = simulate_predictive(res, 60, rng_stream(1, 1))
for h in (1, 12, 60):
    s = summarize(pred.draws_for(list(panel.monthly_ids), pred.horizon_date("m1", h)))
    print(f"h={h:2d}  mean {np.round(s.mean, 2)}  sd {np.round(np.sqrt(np.diag(s.cov)), 2)}")
print("the mean forecast approaches the steady state as h grows")
