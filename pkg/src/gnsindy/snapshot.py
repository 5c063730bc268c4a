"""Snapshot matrices: synthetic PDE data on periodic domains and file I/O.

Fields are stored space-major: ``values[i, j]`` is ``u(x_grid[i], t_grid[j])``.

Sign conventions of the generators::

    Burgers     u_t = -a u u_x + nu u_xx
    Allen-Cahn  u_t = gamma1 u_xx + gamma2 (u - u^3)
    KdV         u_t = -c u u_x - alpha u_xxx      (c=-6, alpha=-1 gives u_t = 6 u u_x + u_xxx)
"""
from __future__ import annotations

import csv
import enum
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "SnapshotMatrix",
    "PdeKind",
    "PdeSpec",
    "GaussianBump",
    "TanhKink",
    "CosineSquared",
    "SolitonSum",
    "Constant",
    "spectral_solve",
    "kdv_soliton",
    "pde_rhs",
    "pde_residual",
    "spectral_derivative",
    "burgers_mass",
    "kdv_invariants",
    "allen_cahn_energy",
    "load_snapshot",
    "save_snapshot",
    "SnapshotError",
    "SolverInstabilityError",
    "SnapshotFormatError",
    "MalformedHeaderError",
    "GridOrderError",
    "ShapeMismatchError",
    "NonFiniteValueError",
]

GRID_RTOL = 1e-9
BLOWUP_LIMIT = 1e6
SUBSTEPS = 50
# step-size collapse beyond this many internal steps per output is treated as instability
MAX_SUBSTEPS = 2**18
MAX_STEP_RATE = 0.25
CSV_CORNER = "x\\t"
BINARY_MAGIC = b"GNSD"
BINARY_VERSION = 1


class SnapshotError(ValueError):
    pass


class SolverInstabilityError(ArithmeticError):
    def __init__(self, time: float, max_abs: float):
        super().__init__(f"solution blow-up at t={time:.6g} (max |u| = {max_abs:.3g})")
        self.time = time
        self.max_abs = max_abs


class SnapshotFormatError(SnapshotError):
    """Base class for file-parsing errors; ``line`` is 1-based (CSV), ``offset`` in bytes (binary)."""

    def __init__(self, message: str, line: int | None = None, offset: int | None = None):
        where = ""
        if line is not None:
            where = f"line {line}: "
        elif offset is not None:
            where = f"byte offset {offset}: "
        super().__init__(where + message)
        self.line = line
        self.offset = offset


class MalformedHeaderError(SnapshotFormatError):
    pass


class GridOrderError(SnapshotFormatError):
    pass


class ShapeMismatchError(SnapshotFormatError):
    pass


class NonFiniteValueError(SnapshotFormatError):
    pass


def _check_grid(grid: np.ndarray, name: str) -> None:
    if grid.ndim != 1 or grid.size < 2:
        raise SnapshotError(f"{name} grid needs at least 2 points")
    if not np.all(np.isfinite(grid)):
        raise SnapshotError(f"{name} grid has non-finite entries")
    d = np.diff(grid)
    if np.any(d <= 0):
        raise SnapshotError(f"non-monotone {name} grid")
    h = (grid[-1] - grid[0]) / (grid.size - 1)
    if np.max(np.abs(d - h)) > GRID_RTOL * abs(h):
        raise SnapshotError(f"{name} grid is not uniformly spaced")


@dataclass(frozen=True)
class SnapshotMatrix:
    values: np.ndarray
    x_grid: np.ndarray
    t_grid: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        x = np.asarray(self.x_grid, dtype=np.float64)
        t = np.asarray(self.t_grid, dtype=np.float64)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "x_grid", x)
        object.__setattr__(self, "t_grid", t)
        _check_grid(x, "space")
        _check_grid(t, "time")
        if values.shape != (x.size, t.size):
            raise SnapshotError(f"values shape {values.shape} does not match grids ({x.size}, {t.size})")
        if not np.all(np.isfinite(values)):
            raise SnapshotError("snapshot values must be finite")

    @property
    def n(self) -> int:
        return self.x_grid.size

    @property
    def m(self) -> int:
        return self.t_grid.size

    @property
    def dx(self) -> float:
        return float(self.x_grid[1] - self.x_grid[0])

    @property
    def dt(self) -> float:
        return float(self.t_grid[1] - self.t_grid[0])


# ----------------------------------------------------------------------------
# PDE specifications


class PdeKind(str, enum.Enum):
    BURGERS = "burgers"
    ALLEN_CAHN = "allen-cahn"
    KDV = "kdv"


@dataclass(frozen=True)
class GaussianBump:
    center: float = 0.0
    width: float = 1.0
    amplitude: float = 1.0

    def __call__(self, x):
        return self.amplitude * np.exp(-(((x - self.center) / self.width) ** 2))


@dataclass(frozen=True)
class TanhKink:
    center: float = 0.0
    width: float = 0.1

    def __call__(self, x):
        return np.tanh((x - self.center) / self.width)


@dataclass(frozen=True)
class CosineSquared:
    """``u0 = x^2 cos(pi x)``, the usual Allen-Cahn benchmark start on [-1, 1]."""

    def __call__(self, x):
        return x**2 * np.cos(np.pi * x)


@dataclass(frozen=True)
class SolitonSum:
    """Superposed KdV solitons, each given as ``(speed, offset)`` at the initial time."""

    solitons: tuple = ((4.0, -12.0), (1.0, 4.0))

    def __call__(self, x):
        u = np.zeros_like(np.asarray(x, dtype=np.float64))
        for speed, offset in self.solitons:
            u = u + _soliton_profile(speed, np.asarray(x) - offset)
        return u


@dataclass(frozen=True)
class Constant:
    value: float = 1.0

    def __call__(self, x):
        return np.full_like(np.asarray(x, dtype=np.float64), self.value)


InitialCondition = GaussianBump | TanhKink | CosineSquared | SolitonSum | Constant

_DEFAULT_COEFFS = {
    PdeKind.BURGERS: {"nu": 0.1, "advection": 1.0},
    PdeKind.ALLEN_CAHN: {"gamma1": 1e-4, "gamma2": 5.0},
    PdeKind.KDV: {"c": -6.0, "alpha": -1.0},
}


@dataclass(frozen=True)
class PdeSpec:
    kind: PdeKind
    coefficients: dict = field(default_factory=dict)
    x_domain: tuple = (-1.0, 1.0)
    t_domain: tuple = (0.0, 1.0)
    n: int = 256
    m: int = 101
    initial_condition: InitialCondition = field(default_factory=GaussianBump)

    def __post_init__(self):
        kind = PdeKind(self.kind)
        object.__setattr__(self, "kind", kind)
        coeffs = dict(_DEFAULT_COEFFS[kind])
        coeffs.update(self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        self.validate()

    def validate(self) -> None:
        c = self.coefficients
        if self.n < 2 or self.n & (self.n - 1):
            raise SnapshotError(f"spatial resolution n={self.n} must be a power of two")
        if self.m < 2:
            raise SnapshotError("need at least 2 time instances")
        if not self.x_domain[1] > self.x_domain[0] or not self.t_domain[1] > self.t_domain[0]:
            raise SnapshotError("empty space or time interval")
        if self.kind is PdeKind.BURGERS and not c["nu"] > 0:
            raise SnapshotError("Burgers needs nu > 0")
        if self.kind is PdeKind.ALLEN_CAHN and not (c["gamma1"] > 0 and c["gamma2"] > 0):
            raise SnapshotError("Allen-Cahn needs gamma1 > 0 and gamma2 > 0")
        ic = self.initial_condition
        if isinstance(ic, SolitonSum) and any(s <= 0 for s, _ in ic.solitons):
            raise SnapshotError("soliton speeds must be positive")

    @property
    def x_grid(self) -> np.ndarray:
        a, b = self.x_domain
        return a + (b - a) * np.arange(self.n) / self.n

    @property
    def t_grid(self) -> np.ndarray:
        return np.linspace(self.t_domain[0], self.t_domain[1], self.m)

    @classmethod
    def burgers(cls, **kw) -> "PdeSpec":
        kw.setdefault("x_domain", (-8.0, 8.0))
        kw.setdefault("t_domain", (0.5, 10.0))
        kw.setdefault("n", 128)
        kw.setdefault("m", 100)
        kw.setdefault("initial_condition", GaussianBump(center=-2.0, width=1.0, amplitude=1.0))
        return cls(PdeKind.BURGERS, **kw)

    @classmethod
    def allen_cahn(cls, **kw) -> "PdeSpec":
        kw.setdefault("x_domain", (-1.0, 1.0))
        kw.setdefault("t_domain", (0.0, 1.0))
        kw.setdefault("n", 512)
        kw.setdefault("m", 201)
        kw.setdefault("initial_condition", CosineSquared())
        return cls(PdeKind.ALLEN_CAHN, **kw)

    @classmethod
    def kdv(cls, **kw) -> "PdeSpec":
        kw.setdefault("x_domain", (-30.0, 30.0))
        kw.setdefault("t_domain", (0.0, 20.0))
        kw.setdefault("n", 512)
        kw.setdefault("m", 201)
        kw.setdefault("initial_condition", SolitonSum())
        return cls(PdeKind.KDV, **kw)


# ----------------------------------------------------------------------------
# Spectral machinery


def _wavenumbers(n: int, length: float) -> np.ndarray:
    k = 2.0 * np.pi * np.fft.rfftfreq(n, d=length / n)
    return k


def spectral_derivative(u: np.ndarray, length: float, order: int = 1, axis: int = 0) -> np.ndarray:
    """Periodic derivative of ``u`` along ``axis`` via FFT (Nyquist mode dropped for odd orders)."""
    u = np.asarray(u, dtype=np.float64)
    n = u.shape[axis]
    k = _wavenumbers(n, length)
    mult = (1j * k) ** order
    if order % 2 == 1 and n % 2 == 0:
        mult[-1] = 0.0
    shape = [1] * u.ndim
    shape[axis] = -1
    uh = np.fft.rfft(u, axis=axis)
    return np.fft.irfft(uh * mult.reshape(shape), n=n, axis=axis)


def _padded_power(uh: np.ndarray, n: int, power: int) -> np.ndarray:
    """Spectrum of ``u**power`` computed on a zero-padded grid (de-aliased)."""
    pad = (n * (power + 1)) // 2
    pad += pad % 2
    buf = np.zeros(pad // 2 + 1, dtype=np.complex128)
    buf[: n // 2] = uh[: n // 2]
    u_fine = np.fft.irfft(buf, n=pad) * (pad / n)
    wh = np.fft.rfft(u_fine**power)[: n // 2 + 1] * (n / pad)
    wh[-1] = 0.0
    return wh


class _SpectralModel:
    """Linear symbol and de-aliased nonlinear term of a semilinear PDE in rfft space."""

    def __init__(self, spec: PdeSpec):
        self.spec = spec
        self.n = spec.n
        self.length = spec.x_domain[1] - spec.x_domain[0]
        k = _wavenumbers(self.n, self.length)
        self.k = k
        self.ik = 1j * k
        self.ik[-1] = 0.0
        c = spec.coefficients
        if spec.kind is PdeKind.BURGERS:
            self.linear = -c["nu"] * k**2
        elif spec.kind is PdeKind.ALLEN_CAHN:
            self.linear = -c["gamma1"] * k**2 + c["gamma2"]
        else:
            ik3 = (1j * k) ** 3
            ik3[-1] = 0.0
            self.linear = -c["alpha"] * ik3
        self.linear = self.linear.astype(np.complex128)

    def nonlinear(self, uh: np.ndarray) -> np.ndarray:
        c = self.spec.coefficients
        kind = self.spec.kind
        if kind is PdeKind.BURGERS:
            return -0.5 * c["advection"] * self.ik * _padded_power(uh, self.n, 2)
        if kind is PdeKind.ALLEN_CAHN:
            return -c["gamma2"] * _padded_power(uh, self.n, 3)
        return -0.5 * c["c"] * self.ik * _padded_power(uh, self.n, 2)

    def nonlinear_rate(self, u: np.ndarray) -> float:
        """Rough bound on the Jacobian norm of the nonlinear term (for the step-size check)."""
        c = self.spec.coefficients
        umax = float(np.max(np.abs(u))) + 1e-12
        kmax = float(np.max(self.k))
        if self.spec.kind is PdeKind.BURGERS:
            return abs(c["advection"]) * umax * kmax
        if self.spec.kind is PdeKind.ALLEN_CAHN:
            return 3.0 * c["gamma2"] * umax**2
        return abs(c["c"]) * umax * kmax


def _if_rk4_step(model: _SpectralModel, uh: np.ndarray, h: float, e_half: np.ndarray, e_full: np.ndarray):
    a = h * model.nonlinear(uh)
    b = h * model.nonlinear(e_half * (uh + a / 2))
    c = h * model.nonlinear(e_half * uh + b / 2)
    d = h * model.nonlinear(e_full * uh + e_half * c)
    return e_full * uh + (e_full * a + 2 * e_half * (b + c) + d) / 6


def spectral_solve(spec: PdeSpec) -> SnapshotMatrix:
    """Integrate ``spec`` with integrating-factor RK4 in Fourier space.

    Each output interval is split into ``SUBSTEPS`` equal internal steps; the
    count is doubled until the explicit nonlinear part satisfies
    ``h * rate <= MAX_STEP_RATE``; the bound is re-checked at every output.
    Blow-up past ``BLOWUP_LIMIT`` or a step count above ``MAX_SUBSTEPS`` raises
    :class:`SolverInstabilityError`.
    """
    spec.validate()
    model = _SpectralModel(spec)
    x = spec.x_grid
    t = spec.t_grid
    u0 = np.asarray(spec.initial_condition(x), dtype=np.float64)
    out = np.empty((spec.n, spec.m))
    out[:, 0] = u0
    uh = np.fft.rfft(u0)
    span = t[1] - t[0]

    substeps = SUBSTEPS
    while span / substeps * model.nonlinear_rate(u0) > MAX_STEP_RATE:
        substeps *= 2
        if substeps > MAX_SUBSTEPS:
            raise SolverInstabilityError(float(t[0]), float(np.max(np.abs(u0))))
    h = span / substeps
    e_half = np.exp(model.linear * h / 2)
    e_full = np.exp(model.linear * h)

    for j in range(1, spec.m):
        u_prev = np.fft.irfft(uh, n=spec.n)
        while h * model.nonlinear_rate(u_prev) > MAX_STEP_RATE:
            substeps *= 2
            if substeps > MAX_SUBSTEPS:
                raise SolverInstabilityError(float(t[j - 1]), float(np.max(np.abs(u_prev))))
            h = span / substeps
            e_half = np.exp(model.linear * h / 2)
            e_full = np.exp(model.linear * h)
        for _ in range(substeps):
            uh = _if_rk4_step(model, uh, h, e_half, e_full)
        u = np.fft.irfft(uh, n=spec.n)
        peak = float(np.max(np.abs(u))) if np.all(np.isfinite(u)) else math.inf
        if peak > BLOWUP_LIMIT:
            raise SolverInstabilityError(float(t[j]), peak)
        out[:, j] = u
    return SnapshotMatrix(out, x, t)


def pde_rhs(spec: PdeSpec, u: np.ndarray) -> np.ndarray:
    """Right-hand side of the governing PDE evaluated column-wise by spectral differentiation."""
    u = np.asarray(u, dtype=np.float64)
    length = spec.x_domain[1] - spec.x_domain[0]
    c = spec.coefficients
    ux = spectral_derivative(u, length, 1)
    if spec.kind is PdeKind.BURGERS:
        return -c["advection"] * u * ux + c["nu"] * spectral_derivative(u, length, 2)
    if spec.kind is PdeKind.ALLEN_CAHN:
        return c["gamma1"] * spectral_derivative(u, length, 2) + c["gamma2"] * (u - u**3)
    return -c["c"] * u * ux - c["alpha"] * spectral_derivative(u, length, 3)


# sixth-order central difference stencil for the first derivative
_FD6 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0


def pde_residual(snap: SnapshotMatrix, spec: PdeSpec) -> float:
    """Relative L2 residual ``||u_t - f(u)|| / ||u_t||`` at interior times.

    ``u_t`` comes from a sixth-order central difference across columns, so the
    time grid must be fine enough for that stencil to be accurate.
    """
    u = snap.values
    if snap.m < 7:
        raise SnapshotError("pde_residual needs at least 7 time instances")
    ut = sum(w * u[:, i : snap.m - 6 + i] for i, w in enumerate(_FD6)) / snap.dt
    rhs = pde_rhs(spec, u[:, 3 : snap.m - 3])
    denom = np.linalg.norm(ut)
    if denom == 0:
        return float(np.linalg.norm(rhs))
    return float(np.linalg.norm(ut - rhs) / denom)


# ----------------------------------------------------------------------------
# Analytic KdV soliton and conserved quantities


def _soliton_profile(speed: float, xi) -> np.ndarray:
    return 0.5 * speed / np.cosh(0.5 * math.sqrt(speed) * xi) ** 2


def kdv_soliton(speed: float, offset: float, x_grid, t_grid) -> SnapshotMatrix:
    """Single soliton of ``u_t = 6 u u_x + u_xxx``; it moves left with velocity ``-speed``."""
    if not speed > 0:
        raise SnapshotError("soliton speed must be positive")
    x = np.asarray(x_grid, dtype=np.float64)
    t = np.asarray(t_grid, dtype=np.float64)
    u = _soliton_profile(speed, x[:, None] + speed * t[None, :] - offset)
    return SnapshotMatrix(u, x, t)


def burgers_mass(snap: SnapshotMatrix) -> np.ndarray:
    """Trapezoid-rule integral of u over one period, per time column."""
    return snap.values.sum(axis=0) * snap.dx


def kdv_invariants(snap: SnapshotMatrix) -> tuple[np.ndarray, np.ndarray]:
    """(mass, momentum) = (int u dx, int u^2 dx) per time column."""
    return snap.values.sum(axis=0) * snap.dx, (snap.values**2).sum(axis=0) * snap.dx


def allen_cahn_energy(snap: SnapshotMatrix, gamma1: float, gamma2: float) -> np.ndarray:
    length = snap.dx * snap.n
    ux = spectral_derivative(snap.values, length, 1)
    dens = 0.5 * gamma1 * ux**2 + 0.25 * gamma2 * (1 - snap.values**2) ** 2
    return dens.sum(axis=0) * snap.dx


# ----------------------------------------------------------------------------
# File I/O


def save_snapshot(snap: SnapshotMatrix, path, format: str = "binary") -> None:
    path = Path(path)
    if format == "binary":
        with open(path, "wb") as fh:
            fh.write(BINARY_MAGIC)
            fh.write(struct.pack("<IQQ", BINARY_VERSION, snap.n, snap.m))
            fh.write(snap.x_grid.astype("<f8").tobytes())
            fh.write(snap.t_grid.astype("<f8").tobytes())
            fh.write(np.ascontiguousarray(snap.values).astype("<f8").tobytes())
    elif format == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, quoting=csv.QUOTE_NONE, escapechar=None, lineterminator="\n")
            w.writerow([CSV_CORNER] + [repr(float(v)) for v in snap.t_grid])
            for xi, row in zip(snap.x_grid, snap.values):
                w.writerow([repr(float(xi))] + [repr(float(v)) for v in row])
    else:
        raise ValueError(f"unknown snapshot format {format!r}")


def load_snapshot(path, format: str | None = None) -> SnapshotMatrix:
    path = Path(path)
    if format is None:
        with open(path, "rb") as fh:
            format = "binary" if fh.read(4) == BINARY_MAGIC else "csv"
    if format == "binary":
        return _load_binary(path)
    if format == "csv":
        return _load_csv(path)
    raise ValueError(f"unknown snapshot format {format!r}")


def _monotone_or_raise(grid: np.ndarray, name: str, line=None, offset=None) -> None:
    bad = np.nonzero(np.diff(grid) <= 0)[0]
    if bad.size:
        raise GridOrderError(f"non-monotone {name} grid at index {bad[0] + 1}", line=line, offset=offset)
    try:
        _check_grid(grid, name)
    except SnapshotError as exc:
        raise GridOrderError(str(exc), line=line, offset=offset) from None


def _load_binary(path: Path) -> SnapshotMatrix:
    data = path.read_bytes()
    if data[:4] != BINARY_MAGIC:
        raise MalformedHeaderError("bad magic bytes", offset=0)
    if len(data) < 24:
        raise MalformedHeaderError("truncated header", offset=len(data))
    version, n, m = struct.unpack_from("<IQQ", data, 4)
    if version != BINARY_VERSION:
        raise MalformedHeaderError(f"unsupported version {version}", offset=4)
    if n < 2 or m < 2:
        raise MalformedHeaderError(f"invalid dimensions n={n}, m={m}", offset=8)
    expected = 24 + 8 * (n + m + n * m)
    if len(data) != expected:
        raise ShapeMismatchError(f"expected {expected} bytes for n={n}, m={m}, found {len(data)}", offset=min(len(data), expected))
    body = np.frombuffer(data, dtype="<f8", offset=24).astype(np.float64)
    x, t, u = body[:n], body[n : n + m], body[n + m :].reshape(n, m)
    for arr, start, name in ((x, 24, "space"), (t, 24 + 8 * n, "time"), (u, 24 + 8 * (n + m), "value")):
        bad = np.nonzero(~np.isfinite(arr.ravel()))[0]
        if bad.size:
            raise NonFiniteValueError(f"non-finite {name} entry", offset=start + 8 * int(bad[0]))
    _monotone_or_raise(x, "space", offset=24)
    _monotone_or_raise(t, "time", offset=24 + 8 * n)
    return SnapshotMatrix(u, x, t)


def _parse_floats(fields: Sequence[str], line: int) -> np.ndarray:
    try:
        vals = np.array([float(f) for f in fields])
    except ValueError as exc:
        raise SnapshotFormatError(f"unparseable number ({exc})", line=line) from None
    if not np.all(np.isfinite(vals)):
        raise NonFiniteValueError("non-finite value", line=line)
    return vals


def _load_csv(path: Path) -> SnapshotMatrix:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh, quoting=csv.QUOTE_NONE))
    if not rows or not rows[0] or rows[0][0].strip() != CSV_CORNER:
        raise MalformedHeaderError(f"first cell must be {CSV_CORNER!r}", line=1)
    t = _parse_floats(rows[0][1:], 1)
    m = t.size
    if m < 2:
        raise MalformedHeaderError("time row needs at least 2 entries", line=1)
    _monotone_or_raise(t, "time", line=1)
    body = [r for r in rows[1:]]
    while body and not any(f.strip() for f in body[-1]):
        body.pop()
    x = np.empty(len(body))
    u = np.empty((len(body), m))
    for i, row in enumerate(body):
        line = i + 2
        if len(row) != m + 1:
            raise ShapeMismatchError(f"expected {m + 1} fields, found {len(row)}", line=line)
        vals = _parse_floats(row, line)
        x[i] = vals[0]
        u[i] = vals[1:]
    if x.size < 2:
        raise ShapeMismatchError("need at least 2 spatial rows", line=len(rows))
    _monotone_or_raise(x, "space", line=2)
    return SnapshotMatrix(u, x, t)
