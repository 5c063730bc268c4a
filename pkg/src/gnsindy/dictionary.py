"""Candidate-term library: every product ``u^i * d^j u / dx^j`` with i <= p, j <= d."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import Jet

__all__ = ["TermSpec", "Dictionary", "DictionaryEvaluation", "build_dictionary", "evaluate_dictionary", "term_label", "stack_jets"]

MAX_DERIV_ORDER = 3


def _deriv_label(j: int) -> str:
    return "u_" + "x" * j


def term_label(poly_power: int, deriv_order: int) -> str:
    """Canonical label, e.g. (0,0)->"1", (1,1)->"u u_x", (2,3)->"u^2 u_xxx"."""
    parts = []
    if poly_power == 1:
        parts.append("u")
    elif poly_power > 1:
        parts.append(f"u^{poly_power}")
    if deriv_order > 0:
        parts.append(_deriv_label(deriv_order))
    return " ".join(parts) if parts else "1"


@dataclass(frozen=True)
class TermSpec:
    poly_power: int
    deriv_order: int

    @property
    def label(self) -> str:
        return term_label(self.poly_power, self.deriv_order)


@dataclass(frozen=True)
class Dictionary:
    poly_order: int
    deriv_order: int
    terms: tuple

    @property
    def size(self) -> int:
        return len(self.terms)

    @property
    def labels(self) -> list[str]:
        return [t.label for t in self.terms]

    def index(self, label: str) -> int:
        return self.labels.index(label)


@dataclass(frozen=True)
class DictionaryEvaluation:
    theta: np.ndarray
    u_t: np.ndarray
    labels: tuple

    def __post_init__(self):
        if not (np.all(np.isfinite(self.theta)) and np.all(np.isfinite(self.u_t))):
            raise FloatingPointError("non-finite entries in the dictionary evaluation")


def build_dictionary(p: int, d: int) -> Dictionary:
    """Polynomial-major ordering: i outer ascending, j inner ascending."""
    if p < 0 or d < 0:
        raise ValueError("orders must be non-negative")
    if p == 0 and d == 0:
        raise ValueError("degenerate library: p = 0 and d = 0")
    if d > MAX_DERIV_ORDER:
        raise ValueError(f"derivative order {d} exceeds {MAX_DERIV_ORDER}")
    terms = tuple(TermSpec(i, j) for i in range(p + 1) for j in range(d + 1))
    return Dictionary(p, d, terms)


def evaluate_dictionary(jets, dictionary: Dictionary) -> DictionaryEvaluation:
    """Build theta (N x D) and u_t (N,) from network jets.

    ``jets`` is either one :class:`Jet` holding arrays over the samples or a
    sequence of per-sample jets.
    """
    u, derivs, u_t = _jet_arrays(jets, dictionary.deriv_order)
    cols = []
    for term in dictionary.terms:
        dj = np.ones_like(u) if term.deriv_order == 0 else derivs[term.deriv_order - 1]
        cols.append(u**term.poly_power * dj)
    theta = np.stack(cols, axis=1) if cols else np.empty((u.size, 0))
    return DictionaryEvaluation(theta, u_t, tuple(dictionary.labels))


def stack_jets(jets) -> Jet:
    """Merge per-sample jets into one array-valued :class:`Jet`."""
    jets = list(jets)
    merged = {}
    for name in ("u", "u_x", "u_xx", "u_xxx", "u_t"):
        vals = [getattr(j, name) for j in jets]
        merged[name] = None if any(v is None for v in vals) else np.asarray(vals, dtype=np.float64).reshape(-1)
    return Jet(**merged)


def _jet_arrays(jets, d: int):
    if not isinstance(jets, Jet):
        jets = stack_jets(jets)
    derivs = []
    for j, name in enumerate(("u_x", "u_xx", "u_xxx")[:d], start=1):
        val = getattr(jets, name)
        if val is None:
            raise ValueError(f"jets do not carry derivative order {j}")
        derivs.append(np.asarray(val, dtype=np.float64).reshape(-1))
    if jets.u_t is None:
        raise ValueError("jets do not carry the time derivative")
    u = np.asarray(jets.u, dtype=np.float64).reshape(-1)
    u_t = np.asarray(jets.u_t, dtype=np.float64).reshape(-1)
    return u, derivs, u_t
