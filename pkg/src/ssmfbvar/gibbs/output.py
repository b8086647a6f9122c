"""Draw files and run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError
from ..tsdata import as_month, format_month
from .config import SamplerConfig
from .chain import ChainResult
from .state import ChainState

DRAWS_NPZ = "draws.npz"
DRAWS_CSV = "draws.csv"
MANIFEST = "manifest.json"

_ARRAYS = ("Pi", "Sigma", "psi", "h", "z_tail")
_SCALARS = ("lambda_psi", "phi_psi", "phi", "sigma2")


def result_arrays(result: ChainResult) -> dict[str, np.ndarray]:
    out = {name: result.stack(name) for name in _ARRAYS}
    for name in _SCALARS:
        out[name] = np.array([float(getattr(s, name)) for s in result.states])
    out["explosive"] = np.array([bool(s.explosive) for s in result.states])
    if result.states and result.states[0].omega_psi is not None:
        out["omega_psi"] = result.stack("omega_psi")
    return out


def digest(arrays: dict[str, np.ndarray]) -> str:
    h = hashlib.sha256()
    for key in sorted(arrays):
        a = np.ascontiguousarray(arrays[key])
        h.update(key.encode())
        h.update(str(a.dtype).encode())
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def draw_table(result: ChainResult) -> tuple[list[str], np.ndarray]:
    """One row per kept draw: flattened Pi, vech(Sigma), psi, hyperparameters, h summary."""
    ids = result.ids
    n = len(ids)
    cols: list[str] = []
    blocks: list[np.ndarray] = []
    Pi = result.stack("Pi")
    k = Pi.shape[2]
    for i in range(n):
        for j in range(k):
            lag, var = divmod(j, n)
            cols.append(f"Pi[{ids[i]},L{lag + 1}.{ids[var]}]" if lag < result.p else f"Phi[{ids[i]},{j - n * result.p}]")
    blocks.append(Pi.reshape(len(Pi), -1))
    Sigma = result.stack("Sigma")
    rows, colsi = np.tril_indices(n)
    cols += [f"Sigma[{ids[a]},{ids[b]}]" for a, b in zip(rows, colsi)]
    blocks.append(Sigma[:, rows, colsi])
    psi = result.stack("psi")
    cols += [f"psi[{ids[i % n]},{i // n}]" for i in range(psi.shape[1])]
    blocks.append(psi)
    if result.states[0].omega_psi is not None:
        om = result.stack("omega_psi")
        cols += [f"omega_psi[{ids[i % n]}]" for i in range(om.shape[1])]
        blocks.append(om)
    for name in _SCALARS:
        cols.append(name)
        blocks.append(np.array([[float(getattr(s, name))] for s in result.states]))
    h = result.stack("h")
    cols += ["h_mean", "h_last"]
    blocks.append(np.column_stack([h.mean(axis=1), h[:, -1]]))
    return cols, np.concatenate(blocks, axis=1)


def manifest(result: ChainResult, arrays: dict[str, np.ndarray], extra: dict | None = None) -> dict:
    out = {
        "variant": result.variant,
        "ids": list(result.ids),
        "n_m": result.n_m,
        "p": result.p,
        "m": result.m,
        "T": result.T,
        "last_date": format_month(result.last_date),
        "sampler": result.config.to_dict(),
        "kept_draws": len(result.states),
        "mh_acceptance_rate": result.acceptance_rate,
        "mh_scale": result.mh_scale,
        "mh_batch_acceptance": result.batch_acceptance,
        "explosive_draws": result.explosive_draws,
        "draws_sha256": digest(arrays),
    }
    if extra:
        out.update(extra)
    return out


def write_draws(result: ChainResult, outdir: str | Path, extra: dict | None = None) -> dict:
    """Write ``draws.npz``, ``draws.csv`` and ``manifest.json``; returns the manifest."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    arrays = result_arrays(result)
    np.savez(outdir / DRAWS_NPZ, **arrays)
    cols, table = draw_table(result)
    with open(outdir / DRAWS_CSV, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in table:
            w.writerow([repr(float(v)) for v in row])
    man = manifest(result, arrays, extra)
    with open(outdir / MANIFEST, "w") as fh:
        json.dump(man, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return man


def load_draws(outdir: str | Path) -> ChainResult:
    """Rebuild a :class:`ChainResult` (kept states only) from a directory written by :func:`write_draws`."""
    outdir = Path(outdir)
    if not (outdir / MANIFEST).is_file() or not (outdir / DRAWS_NPZ).is_file():
        raise ConfigurationError(f"no draws in {outdir}: expected {MANIFEST} and {DRAWS_NPZ}")
    with open(outdir / MANIFEST) as fh:
        man = json.load(fh)
    with np.load(outdir / DRAWS_NPZ) as data:
        arrays = {k: data[k] for k in data.files}
    p, m = int(man["p"]), int(man["m"])
    n = len(man["ids"])
    intercept = arrays["Pi"].shape[2] > n * p
    states = []
    for i in range(arrays["Pi"].shape[0]):
        states.append(ChainState(
            Pi=arrays["Pi"][i], Sigma=arrays["Sigma"][i], psi=arrays["psi"][i], h=arrays["h"][i],
            z_tail=arrays["z_tail"][i],
            omega_psi=arrays["omega_psi"][i] if "omega_psi" in arrays else None,
            lambda_psi=float(arrays["lambda_psi"][i]), phi_psi=float(arrays["phi_psi"][i]),
            phi=float(arrays["phi"][i]), sigma2=float(arrays["sigma2"][i]),
            explosive=bool(arrays["explosive"][i]), p=p, m=m, intercept_form=intercept,
        ))
    return ChainResult(
        states=states, config=SamplerConfig(**man["sampler"]), variant=man["variant"], ids=tuple(man["ids"]),
        n_m=int(man["n_m"]), p=p, m=m, last_date=as_month(man["last_date"]), T=int(man["T"]),
        batch_acceptance=list(man["mh_batch_acceptance"]), acceptance_rate=man["mh_acceptance_rate"],
        mh_scale=man["mh_scale"], explosive_draws=int(man["explosive_draws"]),
    )
