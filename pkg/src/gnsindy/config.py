"""Experiment configuration: flat ``section.key = value`` files and compiled-in presets.

A config file is plain text, one assignment per line, ``#`` starts a comment::

    preset = burgers
    train.max_iter = 5000
    pde.ic = gaussian
    pde.ic.center = -2

A ``preset`` line (or ``--preset``) supplies every value first; the remaining
keys override it. See ``docs/config.md`` for the full key reference.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .sampling import QdeimConfig
from .snapshot import Constant, CosineSquared, GaussianBump, PdeKind, PdeSpec, SnapshotError, SolitonSum, TanhKink
from .sparse import SparseSolverConfig, SparseError, SolverKind
from .trainer import TrainConfig

__all__ = ["ConfigError", "ExperimentConfig", "PRESETS", "parse_config_text", "load_config", "resolve_config"]

PRESET_NAMES = ("burgers", "allen-cahn", "kdv")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    pde: PdeSpec
    qdeim: QdeimConfig = field(default_factory=QdeimConfig)
    poly_order: int = 2
    deriv_order: int = 2
    train: TrainConfig = field(default_factory=TrainConfig)
    output_dir: str = "out"
    preset: str | None = None

    def flat(self) -> dict:
        """Fully resolved config as ``{dotted key: value}``; round-trips through :func:`resolve_config`."""
        return _flatten(self)


def _stridge(tol: float) -> SparseSolverConfig:
    return SparseSolverConfig(SolverKind.STRIDGE, lam=0.0, tol=tol, max_iter=100)


def _presets() -> dict:
    return {
        "burgers": ExperimentConfig(
            pde=PdeSpec.burgers(),
            qdeim=QdeimConfig(epsilon_thr=1e-5, t_div=2, subsample_size=50, subsample_seed=42),
            poly_order=2,
            deriv_order=2,
            train=TrainConfig(
                max_iter=25000, patience=500, periodicity=100, delta_spr=0.05,
                estimator=_stridge(0.05), constraint=_stridge(0.05), widths=(2, 64, 64, 64, 64, 1),
            ),
            preset="burgers",
        ),
        "allen-cahn": ExperimentConfig(
            pde=PdeSpec.allen_cahn(),
            qdeim=QdeimConfig(epsilon_thr=1e-7, t_div=3, subsample_size=120, subsample_seed=42),
            poly_order=3,
            deriv_order=3,
            train=TrainConfig(
                max_iter=25000, patience=1000, periodicity=100, delta_spr=0.1,
                estimator=_stridge(0.1), constraint=_stridge(0.1), widths=(2, 64, 64, 64, 64, 1),
            ),
            preset="allen-cahn",
        ),
        "kdv": ExperimentConfig(
            pde=PdeSpec.kdv(),
            qdeim=QdeimConfig(epsilon_thr=1e-5, t_div=2, subsample_size=900, subsample_seed=42),
            poly_order=2,
            deriv_order=3,
            train=TrainConfig(
                max_iter=25000, patience=1000, periodicity=50, delta_spr=0.1,
                estimator=_stridge(0.1), constraint=_stridge(0.1), widths=(2, 32, 32, 32, 32, 1),
            ),
            preset="kdv",
        ),
    }


PRESETS = _presets()


# ----------------------------------------------------------------------------
# Flat representation

_IC_NAMES = {GaussianBump: "gaussian", TanhKink: "tanh", CosineSquared: "cosine-squared", SolitonSum: "solitons", Constant: "constant"}
_IC_CLASSES = {v: k for k, v in _IC_NAMES.items()}


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ",".join(_fmt(x) for x in v)
    return str(v)


def _flatten(cfg: ExperimentConfig) -> dict:
    out = {}
    if cfg.preset is not None:
        out["preset"] = cfg.preset
    pde = cfg.pde
    out["pde.kind"] = pde.kind.value
    for k, v in pde.coefficients.items():
        out[f"pde.{k}"] = float(v)
    out["pde.x_min"], out["pde.x_max"] = map(float, pde.x_domain)
    out["pde.t_min"], out["pde.t_max"] = map(float, pde.t_domain)
    out["pde.n"], out["pde.m"] = pde.n, pde.m
    ic = pde.initial_condition
    out["pde.ic"] = _IC_NAMES[type(ic)]
    if isinstance(ic, SolitonSum):
        out["pde.ic.solitons"] = ";".join(f"{float(s)!r}:{float(o)!r}" for s, o in ic.solitons)
    else:
        for f in dataclasses.fields(ic):
            out[f"pde.ic.{f.name}"] = float(getattr(ic, f.name))
    q = cfg.qdeim
    out["qdeim.epsilon_thr"] = float(q.epsilon_thr)
    out["qdeim.t_div"] = q.t_div
    out["qdeim.subsample_size"] = "none" if q.subsample_size is None else q.subsample_size
    out["qdeim.subsample_seed"] = q.subsample_seed
    out["dictionary.p"] = cfg.poly_order
    out["dictionary.d"] = cfg.deriv_order
    t = cfg.train
    for f in dataclasses.fields(t):
        v = getattr(t, f.name)
        if isinstance(v, SparseSolverConfig):
            for g in dataclasses.fields(v):
                w = getattr(v, g.name)
                out[f"{f.name}.{g.name}"] = w.value if isinstance(w, SolverKind) else w
        else:
            out[f"train.{f.name}"] = v
    out["output.dir"] = cfg.output_dir
    return {k: _fmt(v) for k, v in out.items()}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines into an ordered dict of strings."""
    entries: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in entries:
            raise ConfigError(f"{source}:{lineno}: duplicate key '{key}'")
        entries[key] = value
    return entries


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text, str(path))


def _to_bool(s: str) -> bool:
    low = s.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _to_int_or_none(s: str):
    return None if s.lower() == "none" else int(s)


def _to_widths(s: str) -> tuple:
    return tuple(int(w) for w in s.split(","))


def _to_solitons(s: str) -> tuple:
    pairs = []
    for item in s.split(";"):
        speed, offset = item.split(":")
        pairs.append((float(speed), float(offset)))
    return tuple(pairs)


_PDE_COEFFS = {"nu", "advection", "gamma1", "gamma2", "c", "alpha"}
_TRAIN_TYPES = {f.name: f.type for f in dataclasses.fields(TrainConfig)}


def _convert(key: str, value: str, conv):
    try:
        return conv(value)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{key}: invalid value {value!r} ({exc})") from None


def resolve_config(entries: dict | None = None, preset: str | None = None) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from a preset plus flat overrides."""
    entries = dict(entries or {})
    name = preset or entries.pop("preset", None)
    entries.pop("preset", None)
    if name is not None:
        if name not in PRESETS:
            raise ConfigError(f"unknown preset '{name}' (choose from {', '.join(PRESET_NAMES)})")
        flat = PRESETS[name].flat()
    else:
        if "pde.kind" not in entries:
            raise ConfigError("config needs either 'preset' or 'pde.kind'")
        kind = _convert("pde.kind", entries["pde.kind"], PdeKind)
        base = {PdeKind.BURGERS: "burgers", PdeKind.ALLEN_CAHN: "allen-cahn", PdeKind.KDV: "kdv"}[kind]
        flat = PRESETS[base].flat()
        flat.pop("preset", None)
    unknown = set(entries) - set(flat) - {f"pde.{c}" for c in _PDE_COEFFS} - {
        "pde.ic.center", "pde.ic.width", "pde.ic.amplitude", "pde.ic.value", "pde.ic.solitons"
    }
    if unknown:
        raise ConfigError(f"unknown config key '{sorted(unknown)[0]}'")
    if "pde.ic" in entries and entries["pde.ic"] != flat.get("pde.ic"):
        # a different IC family: drop the preset's IC parameters
        flat = {k: v for k, v in flat.items() if not k.startswith("pde.ic.")}
    if "pde.kind" in entries and entries["pde.kind"] != flat["pde.kind"]:
        raise ConfigError("pde.kind conflicts with the preset")
    flat.update(entries)
    try:
        return _build(flat, name)
    except (SnapshotError, SparseError) as exc:
        raise ConfigError(str(exc)) from None
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def _build(flat: dict, preset: str | None) -> ExperimentConfig:
    kind = _convert("pde.kind", flat["pde.kind"], PdeKind)
    coeffs = {k[4:]: _convert(k, v, float) for k, v in flat.items() if k.startswith("pde.") and k[4:] in _PDE_COEFFS}
    ic_name = flat["pde.ic"]
    if ic_name not in _IC_CLASSES:
        raise ConfigError(f"pde.ic: unknown initial condition '{ic_name}'")
    ic_cls = _IC_CLASSES[ic_name]
    if ic_cls is SolitonSum:
        ic = SolitonSum(_convert("pde.ic.solitons", flat.get("pde.ic.solitons", "4:-12;1:4"), _to_solitons))
    else:
        kw = {}
        for f in dataclasses.fields(ic_cls):
            key = f"pde.ic.{f.name}"
            if key in flat:
                kw[f.name] = _convert(key, flat[key], float)
        ic = ic_cls(**kw)
    pde = PdeSpec(
        kind,
        coefficients=coeffs,
        x_domain=(_convert("pde.x_min", flat["pde.x_min"], float), _convert("pde.x_max", flat["pde.x_max"], float)),
        t_domain=(_convert("pde.t_min", flat["pde.t_min"], float), _convert("pde.t_max", flat["pde.t_max"], float)),
        n=_convert("pde.n", flat["pde.n"], int),
        m=_convert("pde.m", flat["pde.m"], int),
        initial_condition=ic,
    )
    qdeim = QdeimConfig(
        epsilon_thr=_convert("qdeim.epsilon_thr", flat["qdeim.epsilon_thr"], float),
        t_div=_convert("qdeim.t_div", flat["qdeim.t_div"], int),
        subsample_size=_convert("qdeim.subsample_size", flat["qdeim.subsample_size"], _to_int_or_none),
        subsample_seed=_convert("qdeim.subsample_seed", flat["qdeim.subsample_seed"], int),
    )
    qdeim.validate(pde.m)
    solvers = {}
    for section in ("estimator", "constraint"):
        solvers[section] = SparseSolverConfig(
            kind=_convert(f"{section}.kind", flat[f"{section}.kind"], SolverKind),
            lam=_convert(f"{section}.lam", flat[f"{section}.lam"], float),
            tol=_convert(f"{section}.tol", flat[f"{section}.tol"], float),
            max_iter=_convert(f"{section}.max_iter", flat[f"{section}.max_iter"], int),
            normalize=_convert(f"{section}.normalize", flat[f"{section}.normalize"], _to_bool),
        )
    train_kw = {}
    for name, typ in _TRAIN_TYPES.items():
        if name in solvers:
            continue
        key = f"train.{name}"
        conv = {"int": int, "float": float, "tuple": _to_widths}.get(str(typ), float)
        train_kw[name] = _convert(key, flat[key], conv)
    train = TrainConfig(**solvers, **train_kw)
    if train.widths[0] != 2 or train.widths[-1] != 1 or len(train.widths) < 3 or min(train.widths) < 1:
        raise ConfigError("train.widths must start with 2, end with 1 and have at least one hidden layer")
    p = _convert("dictionary.p", flat["dictionary.p"], int)
    d = _convert("dictionary.d", flat["dictionary.d"], int)
    if p < 0 or d < 0 or (p == 0 and d == 0) or d > 3:
        raise ConfigError("dictionary orders must satisfy 0 <= d <= 3, p >= 0 and not p = d = 0")
    return ExperimentConfig(pde, qdeim, p, d, train, flat["output.dir"], preset)
