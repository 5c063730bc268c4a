"""End-to-end discovery: snapshot -> Q-DEIM points -> SIREN fit -> sparse equation.

By default this runs a shortened Burgers experiment (a few thousand
iterations, small network) so it finishes in about a minute. Pass a preset
name and ``--full`` to run the complete preset instead, which is what the
acceptance tests do.

Read the printed equation next to the loss trace. A tiny data misfit does
not guarantee correct derivatives. With a few dozen points, the surrogate
can match every sample and still be wrong in between, and the sparse
regression then settles on a wrong but self-consistent equation. The README
records how the full presets currently fare.

    python demos/03_discover.py                 # quick Burgers
    python demos/03_discover.py kdv --full      # full KdV preset
"""
from __future__ import annotations

import argparse
import dataclasses
import time

import numpy as np

from gnsindy.config import PRESETS
from gnsindy.dictionary import build_dictionary
from gnsindy.sampling import qdeim_sample, subsample
from gnsindy.snapshot import spectral_solve
from gnsindy.trainer import discover, random_baseline_samples

ap = argparse.ArgumentParser()
ap.add_argument("preset", nargs="?", default="burgers", choices=sorted(PRESETS))
ap.add_argument("--full", action="store_true", help="use the preset's full training budget")
args = ap.parse_args()

cfg = PRESETS[args.preset]
train = cfg.train
if not args.full:
    train = dataclasses.replace(train, max_iter=3000, patience=1000, periodicity=200, log_every=500, widths=(2, 32, 32, 1))

snap = spectral_solve(cfg.pde)
pool = qdeim_sample(snap, cfg.qdeim)
size = min(cfg.qdeim.subsample_size or len(pool), len(pool))
samples = subsample(pool, size, cfg.qdeim.subsample_seed)
print(f"{args.preset}: {len(pool)} Q-DEIM points, training on {len(samples)}")

d = build_dictionary(cfg.poly_order, cfg.deriv_order)
domain = ((snap.t_grid[0], snap.t_grid[-1]), (snap.x_grid[0], snap.x_grid[-1]))


def progress(it, total, mse, residual, state):
    print(f"  iter {it:6d}  mse {mse:.2e}  residual {residual:.2e}  active {int(state.mask.sum())}")


for label, pts in (("qdeim", samples), ("random", random_baseline_samples(snap, len(samples), cfg.train.seed_data))):
    start = time.perf_counter()
    res = discover(pts, train, d, domain=domain, progress=progress)
    print(f"{label:7s} {res.equation}   ({time.perf_counter() - start:.0f}s)")
    if label == "qdeim":
        residual = np.abs(res.network(snap.t_grid[[0]].repeat(snap.n), snap.x_grid) - snap.values[:, 0])
        print(f"        surrogate error at t0: max {residual.max():.2e}")
