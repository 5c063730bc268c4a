"""Command-line entry point: ``gnsindy {generate,sample,discover,report}``.

Exit codes: 0 success, 1 usage, 2 config validation, 3 data, 4 numerical
failure. Failures print one ``gnsindy: error[<kind>]: <reason>`` line on stderr.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import plots
from .config import ConfigError, ExperimentConfig, PRESET_NAMES, load_config, resolve_config
from .dictionary import build_dictionary
from .sampling import RankDeficiencyError, SampleSet, SamplingError, load_samples, qdeim_block_ranks, qdeim_sample, save_samples, subsample
from .snapshot import SnapshotError, SnapshotMatrix, SolverInstabilityError, load_snapshot, save_snapshot, spectral_solve
from .sparse import SparseError
from .trainer import DiscoveryResult, TrainingDivergedError, discover, random_baseline_samples

__all__ = ["main", "run_command", "EXIT_USAGE", "EXIT_CONFIG", "EXIT_DATA", "EXIT_NUMERICAL"]

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3, 4
_KIND = {EXIT_USAGE: "usage", EXIT_CONFIG: "config", EXIT_DATA: "data", EXIT_NUMERICAL: "numerical"}

log = logging.getLogger("gnsindy")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(EXIT_USAGE, message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gnsindy", description="Greedy-sampled sparse identification of PDEs with a neural surrogate.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def common(sp):
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("--preset", choices=PRESET_NAMES, help="compiled-in experiment settings")
        sp.add_argument("--out", help="output directory (overrides output.dir)")

    g = sub.add_parser("generate", help="solve the PDE and write the snapshot matrix")
    common(g)
    g.add_argument("--format", choices=("binary", "csv"), default="binary")

    s = sub.add_parser("sample", help="Q-DEIM sample selection on a snapshot")
    common(s)
    s.add_argument("--in", dest="input", help="snapshot file (generated from the config if omitted)")

    d = sub.add_parser("discover", help="train the surrogate and identify the PDE")
    common(d)
    d.add_argument("--in", dest="input", help="snapshot file (generated from the config if omitted)")
    d.add_argument("--samples", help="sample CSV written by 'sample' (Q-DEIM run if omitted)")
    d.add_argument("--baseline-random", action="store_true", help="uniform random samples instead of Q-DEIM")

    r = sub.add_parser("report", help="compare discovery reports side by side")
    r.add_argument("--in", dest="inputs", nargs="+", required=True, help="report.json files or their directories")
    r.add_argument("--out", help="directory for comparison.txt / comparison.csv")
    return p


# ----------------------------------------------------------------------------
# helpers


def _experiment(args) -> ExperimentConfig:
    entries = load_config(args.config) if args.config else {}
    if args.preset is None and not entries:
        raise ConfigError("no experiment given: pass --preset or --config")
    cfg = resolve_config(entries, preset=args.preset)
    if args.out:
        cfg = ExperimentConfig(cfg.pde, cfg.qdeim, cfg.poly_order, cfg.deriv_order, cfg.train, args.out, cfg.preset)
    return cfg


def _outdir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(EXIT_DATA, f"cannot create output directory {out}: {exc.strerror}") from None
    return out


def _snapshot(cfg: ExperimentConfig, path) -> SnapshotMatrix:
    if path is None:
        log.info("generating %s data (%d x %d)", cfg.pde.kind.value, cfg.pde.n, cfg.pde.m)
        return spectral_solve(cfg.pde)
    return load_snapshot(path)


def _threads() -> int | None:
    raw = os.environ.get("GNSINDY_THREADS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise ConfigError(f"GNSINDY_THREADS must be a positive integer, got {raw!r}")
    return n


def _thread_limit():
    n = _threads()
    if n is None:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


# ----------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> int:
    cfg = _experiment(args)
    out = _outdir(cfg)
    snap = spectral_solve(cfg.pde)
    name = "snapshot.bin" if args.format == "binary" else "snapshot.csv"
    save_snapshot(snap, out / name, format=args.format)
    plots.write_svg(out / "snapshot.svg", plots.heatmap_svg(snap.values, snap.x_grid, snap.t_grid, f"{cfg.pde.kind.value}: u(t, x)"))
    print(out / name)
    return EXIT_OK


def cmd_sample(args) -> int:
    cfg = _experiment(args)
    out = _outdir(cfg)
    snap = _snapshot(cfg, args.input)
    samples = qdeim_sample(snap, cfg.qdeim)
    ranks = qdeim_block_ranks(snap, cfg.qdeim)
    save_samples(samples, out / "samples.csv")
    plots.write_svg(
        out / "samples.svg",
        plots.heatmap_svg(snap.values, snap.x_grid, snap.t_grid, f"Q-DEIM samples ({len(samples)})", points=(samples.t, samples.x)),
    )
    print(f"{len(samples)} samples (block ranks {ranks}) -> {out / 'samples.csv'}")
    return EXIT_OK


def _training_samples(cfg: ExperimentConfig, snap: SnapshotMatrix, args) -> tuple[SampleSet, str]:
    q = cfg.qdeim
    if args.baseline_random:
        size = q.subsample_size if q.subsample_size is not None else len(qdeim_sample(snap, q))
        return random_baseline_samples(snap, size, cfg.train.seed_data), "random"
    if args.samples:
        pool = load_samples(args.samples)
        pool.check_against(snap)
    else:
        pool = qdeim_sample(snap, q)
    if q.subsample_size is not None and q.subsample_size < len(pool):
        return subsample(pool, q.subsample_size, q.subsample_seed), "qdeim"
    return pool, "qdeim"


def write_discovery_outputs(result: DiscoveryResult, out: Path, extra: dict) -> None:
    report = result.to_dict()
    report.update(extra)
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    result.write_training_log(out / "training_log.csv")
    result.write_coefficient_history(out / "coefficients.csv")
    (out / "equation.txt").write_text(result.equation + "\n")
    iters = [it for it, _ in result.coefficient_trace]
    series = {
        label: [xi[k] for _, xi in result.coefficient_trace]
        for k, label in enumerate(result.labels)
        if any(xi[k] != 0 for _, xi in result.coefficient_trace)
    }
    plots.write_svg(out / "coefficients.svg", plots.line_plot_svg(iters, series, "coefficient evolution", ylabel="coefficient"))
    losses = {
        "log10 mse": [np.log10(max(h[1], 1e-300)) for h in result.loss_history],
        "log10 residual": [np.log10(max(h[2], 1e-300)) for h in result.loss_history],
    }
    plots.write_svg(out / "loss.svg", plots.line_plot_svg([h[0] for h in result.loss_history], losses, "training loss"))


def cmd_discover(args) -> int:
    cfg = _experiment(args)
    out = _outdir(cfg)
    snap = _snapshot(cfg, args.input)
    samples, mode = _training_samples(cfg, snap, args)
    save_samples(samples, out / "training_samples.csv")
    dictionary = build_dictionary(cfg.poly_order, cfg.deriv_order)
    domain = ((snap.t_grid[0], snap.t_grid[-1]), (snap.x_grid[0], snap.x_grid[-1]))

    def progress(it, total, mse, residual, state):
        log.info("iter %6d  mse %.3e  residual %.3e  active %d", it, mse, residual, int(state.mask.sum()))

    result = discover(samples, cfg.train, dictionary, domain=domain, progress=progress)
    extra = {
        "sampling": mode,
        "n_samples": len(samples),
        "preset": cfg.preset,
        "resolved_config": cfg.flat(),
        "snapshot": {"n": snap.n, "m": snap.m, "source": str(args.input) if args.input else "generated"},
    }
    write_discovery_outputs(result, out, extra)
    print(result.equation)
    return EXIT_OK


def _load_report(path: str) -> dict:
    p = Path(path)
    if p.is_dir():
        p = p / "report.json"
    try:
        data = json.loads(p.read_text())
    except OSError as exc:
        raise CliError(EXIT_DATA, f"cannot read report {p}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_DATA, f"{p}: not a JSON report ({exc.msg} at line {exc.lineno})") from None
    for key in ("equation", "terms", "coefficients", "mask"):
        if key not in data:
            raise CliError(EXIT_DATA, f"{p}: report lacks '{key}'")
    data["_name"] = p.parent.name or str(p)
    return data


def cmd_report(args) -> int:
    reports = [_load_report(p) for p in args.inputs]
    terms: list = []
    for r in reports:
        for t in r["terms"]:
            if t not in terms:
                terms.append(t)
    header = ["run", "sampling", "n_samples", "active_terms"] + terms + ["final_mse", "wall_seconds"]
    rows = []
    for r in reports:
        coef = dict(zip(r["terms"], r["coefficients"]))
        mask = dict(zip(r["terms"], r["mask"]))
        final = r.get("final_loss") or {}
        rows.append(
            [r["_name"], r.get("sampling", "?"), r.get("n_samples", ""), len([t for t in r["terms"] if mask[t]])]
            + [f"{coef[t]:.4f}" if mask.get(t) else "" for t in terms]
            + [f"{final.get('mse', float('nan')):.3e}", f"{r.get('timings', {}).get('wall_seconds', float('nan')):.1f}"]
        )
    lines = [f"{r['_name']} ({r.get('sampling', '?')}): {r['equation']}" for r in reports]
    widths = [max(len(str(h)), *(len(str(row[i])) for row in rows)) for i, h in enumerate(header)]
    lines.append("")
    lines.append("  ".join(str(h).ljust(w) for h, w in zip(header, widths)))
    for row in rows:
        lines.append("  ".join(str(v).ljust(w) for v, w in zip(row, widths)))
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "comparison.txt").write_text(text)
        with open(out / "comparison.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    return EXIT_OK


_COMMANDS = {"generate": cmd_generate, "sample": cmd_sample, "discover": cmd_discover, "report": cmd_report}


def run_command(argv=None) -> int:
    """Run one CLI invocation and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.verbose:
            logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
        with _thread_limit():
            return _COMMANDS[args.command](args)
    except CliError as exc:
        code, msg = exc.code, str(exc)
    except ConfigError as exc:
        code, msg = EXIT_CONFIG, str(exc)
    except (SolverInstabilityError, TrainingDivergedError, RankDeficiencyError, SparseError, FloatingPointError) as exc:
        code, msg = EXIT_NUMERICAL, str(exc)
    except (SnapshotError, SamplingError) as exc:
        code, msg = EXIT_DATA, str(exc)
    except OSError as exc:
        code, msg = EXIT_DATA, f"{exc.filename}: {exc.strerror}" if exc.filename else str(exc)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    print(f"gnsindy: error[{_KIND[code]}]: {' '.join(msg.split())}", file=sys.stderr)
    return code


def main() -> None:
    sys.exit(run_command())
