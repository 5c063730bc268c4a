"""Sparse regression on its own: STRidge and LASSO against a known answer.

The dictionary holds candidate terms evaluated on exact derivatives of a
known field, and the target u_t is built from two of them. Both solvers
should recover the planted pair, and the full mask-update loop should reach
it after a few updates with no network involved.

    python demos/02_sparse_regression.py
"""
from __future__ import annotations

import numpy as np

from gnsindy.dictionary import build_dictionary, evaluate_dictionary
from gnsindy.network import Jet
from gnsindy.sparse import RegressionProblem, SparseSolverConfig, solve
from gnsindy.trainer import TrainConfig, discover_with_jets, format_equation

rng = np.random.default_rng(0)
n = 400
t, x = rng.uniform(0, 1, n), rng.uniform(-3, 3, n)

# u = sin(x) + 0.5 cos(2x + 0.3t) and its exact spatial derivatives
ph = 2 * x + 0.3 * t
jets = Jet(
    u=np.sin(x) + 0.5 * np.cos(ph),
    u_x=np.cos(x) - np.sin(ph),
    u_xx=-np.sin(x) - 2 * np.cos(ph),
    u_xxx=-np.cos(x) + 4 * np.sin(ph),
    u_t=np.zeros(n),
)

d = build_dictionary(2, 3)
xi_star = np.zeros(d.size)
xi_star[d.index("u u_x")], xi_star[d.index("u_xxx")] = 6.0, 1.0
jets.u_t = evaluate_dictionary(jets, d).theta @ xi_star
print("planted: ", format_equation(d.labels, xi_star, xi_star != 0))

ev = evaluate_dictionary(jets, d)
noisy = ev.u_t + 1e-3 * np.std(ev.u_t) * rng.normal(size=n)
for cfg in (SparseSolverConfig("stridge", tol=0.1), SparseSolverConfig("lasso", lam=1e-3, max_iter=5000)):
    res = solve(RegressionProblem(ev.theta, noisy, labels=tuple(d.labels)), cfg)
    support = np.abs(res.xi) > 1e-3 * np.abs(res.xi).max()
    print(f"{cfg.kind.value:8s}", format_equation(d.labels, res.xi, support))

cfg = TrainConfig(
    max_iter=100, patience=0, periodicity=1, delta_spr=0.1,
    estimator=SparseSolverConfig("stridge", tol=0.1), constraint=SparseSolverConfig("stridge", tol=0.1),
)
state, updates = discover_with_jets(jets, cfg, d, max_updates=3)
print(f"mask loop after {updates} updates:", format_equation(d.labels, state.xi, state.mask))
print(f"largest coefficient error {np.max(np.abs(state.xi - xi_star)):.1e}")
