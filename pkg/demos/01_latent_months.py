"""Filling in the months behind a quarterly series.

Simulate a small system, hide the monthly path of the quarterly variable,
and let the simulation smoother draw it back under the exact aggregation
constraint. Run with ``python3 demos/01_latent_months.py``.
"""
import numpy as np

from ssmfbvar.aggregation import aggregate_path, triangular_weights
from ssmfbvar.simulate import default_dgp, simulate_dgp
from ssmfbvar.ssm import CompactStateSpace, mean_adjust, simulation_smoother
from ssmfbvar.stats import rng_stream
from ssmfbvar.tsdata import format_month

sim = simulate_dgp(default_dgp(T=120, delays={"m2": 1, "q1": 2}), rng_stream(0))
panel = sim.panel
print(panel.ids, panel.T, "months,", int(panel.obs_quarterly.sum()), "quarterly observations")

# quarterly values are weighted sums of five months
print("weights:", triangular_weights().array)

# the DGP parameters stand in for one Gibbs draw
dgp = sim.dgp
css = CompactStateSpace(panel, dgp.p)
y = mean_adjust(panel, dgp.psi)
draws = np.array([simulation_smoother(css, y, dgp.Pi, dgp.Sigma, np.exp(sim.h[dgp.p:]), rng_stream(1, k)).z
                  for k in range(200)])
z = draws + dgp.psi

t = np.flatnonzero(panel.obs_quarterly[:, 0])
t = t[t >= 4]
gap = max(np.abs(aggregate_path(d[:, 2])[t - 4] - panel.y_quarterly[t, 0]).max() for d in z)
print(f"largest violation of the quarterly constraint over 200 draws: {gap:.1e}")

print("\nlast six months of q1: truth, posterior mean, 90% band")
lo, mid, hi = np.quantile(z[:, -6:, 2], [0.05, 0.5, 0.95], axis=0)
for k in range(6):
    i = panel.T - 6 + k
    print(f"{format_month(int(panel.dates[i]))}  {sim.z[i, 2]:6.2f}  {z[:, i, 2].mean():6.2f}  [{lo[k]:5.2f}, {hi[k]:5.2f}]")

# the ragged edge: m2 is one month late, so its final month is drawn too
print("\nm2 in the last month: truth", round(float(sim.z[-1, 1]), 2), "draw sd", round(float(z[:, -1, 1].std()), 2))
