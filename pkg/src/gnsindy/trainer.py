"""Training loop: surrogate network constrained by a masked sparse regression.

Every iteration runs the network on all samples (full batch), builds the
dictionary from its jets, solves the constraint for ``xi`` on the active
columns, and takes one Adam step on

    mse + residual = mean((u - u_hat)^2) + mean((u_hat_t - theta @ (xi * g))^2)

with ``xi`` held fixed. From iteration ``patience`` on, every ``periodicity``
iterations the sparsity estimator is run on the complete dictionary and its
thresholded, scale-free coefficients become the new mask ``g``.
"""
from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dictionary import Dictionary, DictionaryEvaluation, evaluate_dictionary
from .network import AdamState, Jet, SirenNetwork, adam_step, backprop, forward_jet, init_siren
from .rng import partial_shuffle
from .sampling import SampleSet, SamplingError
from .snapshot import SnapshotMatrix
from .sparse import (
    RegressionProblem,
    SparseError,
    SparseResult,
    SparseSolverConfig,
    SolverKind,
    normalized_coefficients,
    solve,
)

__all__ = [
    "TrainConfig",
    "SparsityState",
    "DiscoveryResult",
    "TrainingDivergedError",
    "compute_loss",
    "loss_jet_gradient",
    "update_mask",
    "solve_constraint",
    "mask_update_due",
    "discover",
    "discover_with_jets",
    "random_baseline_samples",
    "format_equation",
]

log = logging.getLogger(__name__)


class TrainingDivergedError(FloatingPointError):
    def __init__(self, iteration: int, state: "SparsityState", params: list):
        super().__init__(f"non-finite loss at iteration {iteration}")
        self.iteration = iteration
        self.state = state
        self.params = params


@dataclass(frozen=True)
class TrainConfig:
    max_iter: int = 25000
    patience: int = 500
    periodicity: int = 100
    delta_spr: float = 0.05
    estimator: SparseSolverConfig = field(default_factory=lambda: SparseSolverConfig(SolverKind.STRIDGE, tol=0.05))
    constraint: SparseSolverConfig = field(default_factory=lambda: SparseSolverConfig(SolverKind.STRIDGE, tol=0.05))
    widths: tuple = (2, 64, 64, 64, 64, 1)
    omega0: float = 30.0
    hidden_omega0: float = 1.0
    seed_data: int = 42
    seed_train: int = 50
    log_every: int = 100
    learning_rate: float = 1e-3
    beta1: float = 0.99
    beta2: float = 0.99
    residual_weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if not 0 <= self.patience < self.max_iter:
            raise ValueError("patience must satisfy 0 <= patience < max_iter")
        if self.periodicity < 1:
            raise ValueError("periodicity must be >= 1")
        if self.delta_spr < 0:
            raise ValueError("delta_spr must be non-negative")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("estimator", "constraint"):
            d[key]["kind"] = getattr(self, key).kind.value
        d["widths"] = list(self.widths)
        return d


@dataclass
class SparsityState:
    mask: np.ndarray
    xi: np.ndarray
    xi_est: np.ndarray
    last_update_iter: int = -1

    @classmethod
    def initial(cls, n_terms: int) -> "SparsityState":
        return cls(np.ones(n_terms, dtype=bool), np.zeros(n_terms), np.zeros(n_terms))


@dataclass
class DiscoveryResult:
    labels: list
    mask: np.ndarray
    xi: np.ndarray
    equation: str
    loss_history: list  # (iter, mse, residual, total, active labels)
    xi_history: list  # (iter, xi) after each mask update
    coefficient_trace: list  # (iter, xi) at every logged iteration
    wall_seconds: float
    config: dict = field(default_factory=dict)
    network: SirenNetwork | None = None

    @property
    def active_terms(self) -> list:
        return [l for l, g in zip(self.labels, self.mask) if g]

    def coefficient(self, label: str) -> float:
        return float(self.xi[self.labels.index(label)])

    def to_dict(self) -> dict:
        return {
            "equation": self.equation,
            "terms": list(self.labels),
            "coefficients": [float(v) for v in self.xi],
            "mask": [bool(g) for g in self.mask],
            "active_terms": self.active_terms,
            "config": self.config,
            "timings": {"wall_seconds": self.wall_seconds},
            "final_loss": dict(zip(("iter", "mse", "residual", "total"), self.loss_history[-1][:4]))
            if self.loss_history
            else None,
        }

    def write_report(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n")

    def write_training_log(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", "mse", "residual", "total", "active_terms"])
            for it, mse, res, tot, active in self.loss_history:
                w.writerow([it, repr(mse), repr(res), repr(tot), ";".join(active)])

    def write_coefficient_history(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter"] + list(self.labels))
            for it, xi in self.xi_history:
                w.writerow([it] + [repr(float(v)) for v in xi])


def format_equation(labels, xi, mask) -> str:
    parts = []
    for label, c, g in zip(labels, xi, mask):
        if not g:
            continue
        term = "" if label == "1" else f" {label}"
        if not parts:
            parts.append(f"{c:.4f}{term}")
        else:
            sign = "-" if c < 0 else "+"
            parts.append(f"{sign} {abs(c):.4f}{term}")
    return "u_t = " + (" ".join(parts) if parts else "0")


# ----------------------------------------------------------------------------
# Loss pieces


def compute_loss(u_obs, jets: Jet, dict_eval: DictionaryEvaluation, state: SparsityState, residual_weight: float = 1.0):
    """Return ``(total, mse, residual)`` for the masked coefficients ``xi * g``."""
    u_obs = np.asarray(u_obs, dtype=np.float64).reshape(-1)
    n = u_obs.size
    coef = np.where(state.mask, state.xi, 0.0)
    mse = float(np.sum((u_obs - jets.u) ** 2) / n)
    r = dict_eval.u_t - dict_eval.theta @ coef
    residual = float(np.sum(r**2) / n)
    return mse + residual_weight * residual, mse, residual


def loss_jet_gradient(u_obs, jets: Jet, dict_eval: DictionaryEvaluation, dictionary: Dictionary, coef, residual_weight: float = 1.0) -> Jet:
    """dL/d(u, u_x, u_xx, u_xxx, u_t) per sample with ``coef`` held fixed."""
    u_obs = np.asarray(u_obs, dtype=np.float64).reshape(-1)
    n = u_obs.size
    u = jets.u
    r = dict_eval.u_t - dict_eval.theta @ coef
    wr = 2.0 * residual_weight * r / n
    derivs = [np.ones_like(u), jets.u_x, jets.u_xx, jets.u_xxx]
    g_u = 2.0 * (u - u_obs) / n
    g_d = [np.zeros_like(u) for _ in range(4)]
    for c, term in zip(coef, dictionary.terms):
        if c == 0.0:
            continue
        i, j = term.poly_power, term.deriv_order
        if i > 0:
            g_u = g_u - wr * c * i * u ** (i - 1) * derivs[j]
        if j > 0:
            g_d[j] = g_d[j] - wr * c * u**i
    return Jet(g_u, g_d[1], g_d[2], g_d[3], wr)


def _problem(dict_eval: DictionaryEvaluation, mask=None) -> RegressionProblem:
    return RegressionProblem(dict_eval.theta, dict_eval.u_t, mask, dict_eval.labels)


def solve_constraint(dict_eval: DictionaryEvaluation, mask, config: TrainConfig) -> SparseResult:
    """Constraint solve on the active columns; physical-unit ``xi``, zeros outside the mask."""
    mask = np.asarray(mask, dtype=bool)
    res = solve(_problem(dict_eval, mask), config.constraint)
    res.xi[~mask] = 0.0
    return res


def update_mask(dict_eval: DictionaryEvaluation, config: TrainConfig, previous=None):
    """Run the estimator on the full dictionary and threshold its scale-free coefficients.

    Returns ``(mask, xi_est)`` where ``xi_est`` is in normalized space. If the
    estimator fails, the previous mask is kept (a warning is logged).
    """
    try:
        res = solve(_problem(dict_eval), config.estimator)
    except SparseError as exc:
        log.warning("sparsity estimator failed (%s); mask unchanged", exc)
        if previous is None:
            previous = np.ones(dict_eval.theta.shape[1], dtype=bool)
        return np.asarray(previous, dtype=bool).copy(), None
    xi_est = normalized_coefficients(dict_eval.theta, dict_eval.u_t, res.xi)
    return np.abs(xi_est) >= config.delta_spr, xi_est


def mask_update_due(iteration: int, config: TrainConfig) -> bool:
    return iteration >= config.patience and (iteration - config.patience) % config.periodicity == 0


# ----------------------------------------------------------------------------
# Driver


def _run_constraint(ev, state, config, iteration):
    try:
        res = solve_constraint(ev, state.mask, config)
    except SparseError as exc:
        log.warning("constraint solve failed at iteration %d (%s); keeping previous xi", iteration, exc)
        return state.xi
    return res.xi


def discover(
    samples: SampleSet,
    train_cfg: TrainConfig,
    dictionary: Dictionary,
    domain=None,
    network: SirenNetwork | None = None,
    progress=None,
) -> DiscoveryResult:
    """Fit the surrogate to ``samples`` and return the discovered equation.

    ``domain`` is ``((t_min, t_max), (x_min, x_max))`` for the input
    normalisation; by default the sample extents are used.
    """
    n = len(samples)
    if n == 0:
        raise SamplingError("no samples to train on")
    if n < dictionary.size:
        log.warning("only %d samples for %d dictionary terms", n, dictionary.size)
    t, x, u_obs = samples.t, samples.x, samples.u
    if domain is None:
        domain = ((t.min(), t.max()), (x.min(), x.max()))
    net = network.copy() if network is not None else init_siren(train_cfg.widths, train_cfg.omega0, train_cfg.seed_train, train_cfg.hidden_omega0)
    if network is None:
        net.set_domain(*domain)
    opt = AdamState(train_cfg.learning_rate, train_cfg.beta1, train_cfg.beta2)
    state = SparsityState.initial(dictionary.size)
    labels = dictionary.labels
    loss_history, xi_history, trace = [], [], []
    params = net.params
    w_res = train_cfg.residual_weight
    start = time.perf_counter()

    for it in range(train_cfg.max_iter):
        jets, cache = forward_jet(net, t, x, return_cache=True)
        try:
            ev = evaluate_dictionary(jets, dictionary)
        except FloatingPointError:
            raise TrainingDivergedError(it, state, [p.copy() for p in params]) from None
        state.xi = _run_constraint(ev, state, train_cfg, it)
        total, mse, residual = compute_loss(u_obs, jets, ev, state, w_res)
        if not np.isfinite(total):
            raise TrainingDivergedError(it, state, [p.copy() for p in params])
        if it % train_cfg.log_every == 0 or it == train_cfg.max_iter - 1:
            active = [l for l, g in zip(labels, state.mask) if g]
            loss_history.append((it, mse, residual, total, active))
            trace.append((it, state.xi.copy()))
            if progress is not None:
                progress(it, total, mse, residual, state)
        coef = np.where(state.mask, state.xi, 0.0)
        grads = backprop(net, cache, loss_jet_gradient(u_obs, jets, ev, dictionary, coef, w_res))
        params, opt = adam_step(opt, params, grads)
        net.set_params(params)
        if mask_update_due(it, train_cfg):
            mask, xi_est = update_mask(ev, train_cfg, state.mask)
            state.mask = mask
            if xi_est is not None:
                state.xi_est = xi_est
            state.last_update_iter = it
            state.xi = _run_constraint(ev, state, train_cfg, it)
            xi_history.append((it, state.xi.copy()))

    jets = forward_jet(net, t, x)
    ev = evaluate_dictionary(jets, dictionary)
    state.xi = _run_constraint(ev, state, train_cfg, train_cfg.max_iter)
    elapsed = time.perf_counter() - start
    return DiscoveryResult(
        labels=labels,
        mask=state.mask.copy(),
        xi=state.xi.copy(),
        equation=format_equation(labels, state.xi, state.mask),
        loss_history=loss_history,
        xi_history=xi_history,
        coefficient_trace=trace,
        wall_seconds=elapsed,
        config={"train": train_cfg.to_dict(), "dictionary": {"p": dictionary.poly_order, "d": dictionary.deriv_order}},
        network=net,
    )


def discover_with_jets(jets: Jet, train_cfg: TrainConfig, dictionary: Dictionary, max_updates: int | None = None):
    """Mask/constraint machinery driven by fixed jets (no network).

    Runs the scheduler for ``train_cfg.max_iter`` iterations, or until
    ``max_updates`` mask updates have happened. Returns ``(state, n_updates)``.
    """
    ev = evaluate_dictionary(jets, dictionary)
    state = SparsityState.initial(dictionary.size)
    updates = 0
    for it in range(train_cfg.max_iter):
        state.xi = solve_constraint(ev, state.mask, train_cfg).xi
        if mask_update_due(it, train_cfg):
            mask, xi_est = update_mask(ev, train_cfg, state.mask)
            state.mask, state.last_update_iter = mask, it
            if xi_est is not None:
                state.xi_est = xi_est
            state.xi = solve_constraint(ev, state.mask, train_cfg).xi
            updates += 1
            if max_updates is not None and updates >= max_updates:
                break
    return state, updates


def random_baseline_samples(snap: SnapshotMatrix, size: int, seed: int) -> SampleSet:
    """Uniform draw without replacement over every grid entry."""
    total = snap.n * snap.m
    if not 0 <= size <= total:
        raise SamplingError(f"cannot draw {size} samples from a {snap.n}x{snap.m} grid")
    flat = partial_shuffle(total, size, seed)
    return SampleSet.from_indices(snap, flat // snap.m, flat % snap.m)
