"""Sine-activation MLP surrogate u(t, x) with exact derivative jets.

Derivatives are propagated forward layer by layer: every hidden layer carries
the activation together with its first three x-derivatives and its first
t-derivative. The five channels are stacked along a leading axis so each layer
costs one matrix product. :func:`backprop` reverses exactly that computation.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "SirenNetwork",
    "Jet",
    "JetCache",
    "AdamState",
    "init_siren",
    "forward_jet",
    "backprop",
    "adam_step",
    "save_network",
    "load_network",
]

# channel order inside the stacked arrays
U, UX, UXX, UXXX, UT = range(5)
WEIGHTS_MAGIC = b"GNSW"
WEIGHTS_VERSION = 1


@dataclass
class SirenNetwork:
    widths: tuple
    weights: list
    biases: list
    omega0: float = 30.0
    input_scale: np.ndarray = field(default_factory=lambda: np.ones(2))
    input_shift: np.ndarray = field(default_factory=lambda: np.zeros(2))
    hidden_omega0: float = 1.0

    def __post_init__(self):
        self.widths = tuple(int(w) for w in self.widths)
        self.input_scale = np.asarray(self.input_scale, dtype=np.float64)
        self.input_shift = np.asarray(self.input_shift, dtype=np.float64)
        if len(self.widths) < 2 or self.widths[0] != 2 or self.widths[-1] != 1:
            raise ValueError(f"widths must start with 2 and end with 1, got {list(self.widths)}")
        if len(self.weights) != len(self.widths) - 1 or len(self.biases) != len(self.weights):
            raise ValueError("one weight matrix and bias vector per layer required")
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.shape != (self.widths[l + 1], self.widths[l]) or b.shape != (self.widths[l + 1],):
                raise ValueError(f"layer {l} has shapes {W.shape}, {b.shape} inconsistent with widths")
        if not (self.omega0 > 0 and self.hidden_omega0 > 0):
            raise ValueError("omega0 and hidden_omega0 must be positive")

    def layer_frequency(self, l: int) -> float:
        """Factor in front of ``W h + b`` for layer ``l`` (the output layer has none)."""
        if l == len(self.weights) - 1:
            return 1.0
        return self.omega0 if l == 0 else self.hidden_omega0

    @property
    def params(self) -> list:
        """Flat parameter list ``[W0, b0, W1, b1, ...]`` (views, not copies)."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    def set_params(self, params) -> None:
        self.weights = [np.asarray(p, dtype=np.float64) for p in params[0::2]]
        self.biases = [np.asarray(p, dtype=np.float64) for p in params[1::2]]

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params)

    def set_domain(self, t_range, x_range) -> None:
        """Map the physical box ``t_range x x_range`` onto ``[-1, 1]^2``."""
        lo = np.array([t_range[0], x_range[0]], dtype=np.float64)
        hi = np.array([t_range[1], x_range[1]], dtype=np.float64)
        if np.any(hi <= lo):
            raise ValueError("degenerate input domain")
        self.input_scale = 2.0 / (hi - lo)
        self.input_shift = -(hi + lo) / (hi - lo)

    def copy(self) -> "SirenNetwork":
        return SirenNetwork(
            self.widths,
            [W.copy() for W in self.weights],
            [b.copy() for b in self.biases],
            self.omega0,
            self.input_scale.copy(),
            self.input_shift.copy(),
            self.hidden_omega0,
        )

    def __call__(self, t, x) -> np.ndarray:
        return forward_jet(self, t, x).u


@dataclass
class Jet:
    """Network value and derivatives in physical units, one entry per sample."""

    u: np.ndarray
    u_x: np.ndarray | None = None
    u_xx: np.ndarray | None = None
    u_xxx: np.ndarray | None = None
    u_t: np.ndarray | None = None

    def __len__(self) -> int:
        return np.size(self.u)


@dataclass
class JetCache:
    inputs: list  # stacked (5, N, w_in) channel arrays entering each layer
    pre: list  # stacked pre-activations of each hidden layer
    sin: list
    cos: list


def init_siren(widths, omega0: float = 30.0, seed: int = 50, hidden_omega0: float = 1.0) -> SirenNetwork:
    """SIREN initialisation, deterministic for a given seed.

    First layer weights ~ U(-1/fan_in, 1/fan_in), applied as ``sin(omega0 * (W z + b))``.
    Later layers ~ U(-sqrt(6/fan_in)/w, sqrt(6/fan_in)/w) applied as
    ``sin(w * (W h + b))`` with ``w = hidden_omega0``; the output layer is affine
    with the same weight bound. Biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    """
    widths = list(widths)
    if not widths:
        raise ValueError("empty widths")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for l in range(len(widths) - 1):
        fan_in, fan_out = widths[l], widths[l + 1]
        bound = 1.0 / fan_in if l == 0 else np.sqrt(6.0 / fan_in) / hidden_omega0
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-1.0, 1.0, size=fan_out) / np.sqrt(fan_in))
    return SirenNetwork(tuple(widths), weights, biases, omega0, hidden_omega0=hidden_omega0)


def _input_channels(net: SirenNetwork, t, x) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64).reshape(-1)
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if t.shape != x.shape:
        raise ValueError("t and x must have the same length")
    H = np.zeros((5, t.size, 2))
    H[U, :, 0] = net.input_scale[0] * t + net.input_shift[0]
    H[U, :, 1] = net.input_scale[1] * x + net.input_shift[1]
    H[UX, :, 1] = 1.0
    H[UT, :, 0] = 1.0
    return H


def forward_jet(net: SirenNetwork, t, x, return_cache: bool = False):
    """Evaluate u, u_x, u_xx, u_xxx and u_t at the points ``(t[i], x[i])``."""
    H = _input_channels(net, t, x)
    n_layers = len(net.weights)
    cache = JetCache([], [], [], [])
    for l, (W, b) in enumerate(zip(net.weights, net.biases)):
        A = H @ W.T
        A[U] += b
        w = net.layer_frequency(l)
        if w != 1.0:
            A *= w
        if return_cache:
            cache.inputs.append(H)
        if l == n_layers - 1:
            H = A
            break
        s, c = np.sin(A[U]), np.cos(A[U])
        a1, a2, a3, at = A[UX], A[UXX], A[UXXX], A[UT]
        H = np.empty_like(A)
        H[U] = s
        H[UX] = c * a1
        H[UXX] = c * a2 - s * a1**2
        H[UXXX] = c * a3 - 3.0 * s * a1 * a2 - c * a1**3
        H[UT] = c * at
        if return_cache:
            cache.pre.append(A)
            cache.sin.append(s)
            cache.cos.append(c)
    sx, st = net.input_scale[1], net.input_scale[0]
    out = H[:, :, 0]
    jet = Jet(out[U].copy(), out[UX] * sx, out[UXX] * sx**2, out[UXXX] * sx**3, out[UT] * st)
    return (jet, cache) if return_cache else jet


def backprop(net: SirenNetwork, cache: JetCache, grad: Jet) -> list:
    """Parameter gradient given dL/d(u, u_x, u_xx, u_xxx, u_t) per sample.

    ``grad`` holds the loss sensitivities with respect to the physical-unit jet
    produced by the forward pass that filled ``cache``. Returns a list shaped
    like :attr:`SirenNetwork.params`.
    """
    sx, st = net.input_scale[1], net.input_scale[0]
    N = cache.inputs[0].shape[1]
    G = np.zeros((5, N, 1))
    zero = np.zeros(N)

    def _g(v):
        return zero if v is None else np.asarray(v, dtype=np.float64).reshape(-1)

    G[U, :, 0] = _g(grad.u)
    G[UX, :, 0] = _g(grad.u_x) * sx
    G[UXX, :, 0] = _g(grad.u_xx) * sx**2
    G[UXXX, :, 0] = _g(grad.u_xxx) * sx**3
    G[UT, :, 0] = _g(grad.u_t) * st

    n_layers = len(net.weights)
    grads: list = [None] * (2 * n_layers)
    GA = G
    for l in range(n_layers - 1, -1, -1):
        if l < n_layers - 1:
            # G holds dL/dH for the activation output of layer l; map to dL/dA
            A = cache.pre[l]
            s, c = cache.sin[l], cache.cos[l]
            a1, a2, a3, at = A[UX], A[UXX], A[UXXX], A[UT]
            g0, g1, g2, g3, gt = G[U], G[UX], G[UXX], G[UXXX], G[UT]
            GA = np.empty_like(G)
            GA[U] = (
                g0 * c
                - g1 * s * a1
                - g2 * (s * a2 + c * a1**2)
                + g3 * (s * a1**3 - s * a3 - 3.0 * c * a1 * a2)
                - gt * s * at
            )
            GA[UX] = g1 * c - 2.0 * g2 * s * a1 - 3.0 * g3 * (s * a2 + c * a1**2)
            GA[UXX] = g2 * c - 3.0 * g3 * s * a1
            GA[UXXX] = g3 * c
            GA[UT] = gt * c
        w = net.layer_frequency(l)
        if w != 1.0:
            GA = GA * w
        Hin = cache.inputs[l]
        W = net.weights[l]
        w_in = Hin.shape[-1]
        grads[2 * l] = GA.reshape(-1, GA.shape[-1]).T @ Hin.reshape(-1, w_in)
        grads[2 * l + 1] = GA[U].sum(axis=0)
        if l > 0:
            G = GA @ W
    return grads


# ----------------------------------------------------------------------------
# Optimiser


@dataclass
class AdamState:
    learning_rate: float = 1e-3
    beta1: float = 0.99
    beta2: float = 0.99
    epsilon_num: float = 1e-8
    amsgrad: bool = True
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    v_max: list = field(default_factory=list)


def adam_step(state: AdamState, params, grads):
    """One Adam update (bias-corrected, AMSGrad when enabled).

    Returns ``(new_params, state)``; ``state`` is updated in place.
    """
    if len(params) != len(grads):
        raise ValueError("params and grads differ in length")
    for p, g in zip(params, grads):
        if np.shape(p) != np.shape(g):
            raise ValueError(f"shape mismatch: param {np.shape(p)} vs grad {np.shape(g)}")
    if not state.m:
        state.m = [np.zeros_like(p, dtype=np.float64) for p in params]
        state.v = [np.zeros_like(p, dtype=np.float64) for p in params]
        state.v_max = [np.zeros_like(p, dtype=np.float64) for p in params]
    elif any(np.shape(mk) != np.shape(p) for mk, p in zip(state.m, params)) or len(state.m) != len(params):
        raise ValueError("optimiser state does not match parameter shapes")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**state.step
    bc2 = 1.0 - b2**state.step
    new_params = []
    for k, (p, g) in enumerate(zip(params, grads)):
        state.m[k] = b1 * state.m[k] + (1.0 - b1) * g
        state.v[k] = b2 * state.v[k] + (1.0 - b2) * g * g
        if state.amsgrad:
            state.v_max[k] = np.maximum(state.v_max[k], state.v[k])
            second = state.v_max[k]
        else:
            second = state.v[k]
        denom = np.sqrt(second) / np.sqrt(bc2) + state.epsilon_num
        new_params.append(p - (state.learning_rate / bc1) * state.m[k] / denom)
    return new_params, state


# ----------------------------------------------------------------------------
# Serialisation


def save_network(net: SirenNetwork, path) -> None:
    """Little-endian container: magic, version, layer count, widths, omega0, affine, params.

    Networks with a hidden-layer frequency other than 1 are written as version 2,
    which stores ``hidden_omega0`` right after ``omega0``.
    """
    version = WEIGHTS_VERSION if net.hidden_omega0 == 1.0 else 2
    with open(Path(path), "wb") as fh:
        fh.write(WEIGHTS_MAGIC)
        fh.write(struct.pack("<II", version, len(net.widths)))
        fh.write(struct.pack(f"<{len(net.widths)}Q", *net.widths))
        fh.write(struct.pack("<d", net.omega0))
        if version == 2:
            fh.write(struct.pack("<d", net.hidden_omega0))
        fh.write(net.input_scale.astype("<f8").tobytes())
        fh.write(net.input_shift.astype("<f8").tobytes())
        for p in net.params:
            fh.write(np.ascontiguousarray(p).astype("<f8").tobytes())


def load_network(path) -> SirenNetwork:
    data = Path(path).read_bytes()
    if data[:4] != WEIGHTS_MAGIC:
        raise ValueError("not a network parameter file (bad magic)")
    version, n_w = struct.unpack_from("<II", data, 4)
    if version not in (1, 2):
        raise ValueError(f"unsupported network file version {version}")
    off = 12
    widths = struct.unpack_from(f"<{n_w}Q", data, off)
    off += 8 * n_w
    (omega0,) = struct.unpack_from("<d", data, off)
    off += 8
    hidden = 1.0
    if version == 2:
        (hidden,) = struct.unpack_from("<d", data, off)
        off += 8
    scale = np.frombuffer(data, "<f8", 2, off).astype(np.float64)
    shift = np.frombuffer(data, "<f8", 2, off + 16).astype(np.float64)
    off += 32
    weights, biases = [], []
    for l in range(n_w - 1):
        shape = (widths[l + 1], widths[l])
        weights.append(np.frombuffer(data, "<f8", shape[0] * shape[1], off).astype(np.float64).reshape(shape))
        off += 8 * shape[0] * shape[1]
        biases.append(np.frombuffer(data, "<f8", shape[0], off).astype(np.float64))
        off += 8 * shape[0]
    if off != len(data):
        raise ValueError(f"network file has {len(data) - off} trailing bytes")
    return SirenNetwork(widths, weights, biases, omega0, scale, shift, hidden)
