"""Simulate the three benchmark equations and see where Q-DEIM puts its points.

Each snapshot matrix is split into time blocks. Every block is compressed to
the rank that keeps all but a fraction epsilon_thr of its energy, and pivoted
QR then picks the most informative rows and columns of the leading singular
vectors. Tightening epsilon_thr raises the ranks, and the point count grows
as the sum of squared ranks.

    python demos/01_snapshots_and_sampling.py [outdir]
"""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from gnsindy import plots
from gnsindy.sampling import QdeimConfig, qdeim_block_ranks, qdeim_sample
from gnsindy.snapshot import PdeSpec, allen_cahn_energy, burgers_mass, kdv_invariants, spectral_solve

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(parents=True, exist_ok=True)

sweeps = {
    "burgers": (PdeSpec.burgers(), 2, (1e-3, 1e-4, 1e-5, 1e-6)),
    "allen-cahn": (PdeSpec.allen_cahn(), 3, (1e-5, 1e-6, 1e-7, 1e-8)),
    "kdv": (PdeSpec.kdv(), 2, (5e-5, 1e-5, 1e-6, 1e-7)),
}

for name, (spec, t_div, eps_values) in sweeps.items():
    snap = spectral_solve(spec)
    print(f"\n{name}: {snap.n} x {snap.m} grid, max |u| = {np.abs(snap.values).max():.3f}")

    # conserved or dissipated quantities double as a sanity check on the solver
    if name == "burgers":
        mass = burgers_mass(snap)
        print(f"  mass drift           {np.max(np.abs(mass - mass[0])):.2e}")
    elif name == "allen-cahn":
        energy = allen_cahn_energy(snap, 1e-4, 5.0)
        print(f"  energy {energy[0]:.4f} -> {energy[-1]:.4f}, largest step {np.max(np.diff(energy)):.2e}")
    else:
        mass, momentum = kdv_invariants(snap)
        print(f"  mass drift {np.ptp(mass):.2e}, momentum drift {np.ptp(momentum):.2e}")

    for eps in eps_values:
        cfg = QdeimConfig(eps, t_div)
        ranks = qdeim_block_ranks(snap, cfg)
        print(f"  eps {eps:.0e}: block ranks {ranks} -> {sum(r * r for r in ranks)} points")

    samples = qdeim_sample(snap, QdeimConfig(eps_values[1], t_div))
    svg = plots.heatmap_svg(snap.values, snap.x_grid, snap.t_grid, f"{name}: Q-DEIM points", points=(samples.t, samples.x))
    plots.write_svg(out / f"{name}_qdeim.svg", svg)

print(f"\nheatmaps written to {out}/")
