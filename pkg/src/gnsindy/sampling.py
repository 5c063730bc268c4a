"""Greedy space-time sample selection on a snapshot matrix (two-way Q-DEIM)."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import partial_shuffle
from .snapshot import SnapshotMatrix

__all__ = [
    "QdeimConfig",
    "SampleSet",
    "TruncatedSvd",
    "SamplingError",
    "RankDeficiencyError",
    "truncated_svd",
    "pivoted_qr_indices",
    "time_blocks",
    "qdeim_sample",
    "qdeim_block_ranks",
    "subsample",
    "save_samples",
    "load_samples",
]

PIVOT_FLOOR = 1e-13
TIE_RTOL = 1e-12
SAMPLE_HEADER = ["t", "x", "u", "src_row", "src_col"]


class SamplingError(ValueError):
    pass


class RankDeficiencyError(SamplingError):
    pass


@dataclass(frozen=True)
class QdeimConfig:
    epsilon_thr: float = 1e-5
    t_div: int = 1
    subsample_size: int | None = None
    subsample_seed: int = 42

    def validate(self, m: int | None = None) -> None:
        if not 0.0 < self.epsilon_thr < 1.0:
            raise SamplingError(f"epsilon_thr={self.epsilon_thr} must lie in (0, 1)")
        if self.t_div < 1:
            raise SamplingError("t_div must be >= 1")
        if m is not None and self.t_div > m:
            raise SamplingError(f"t_div={self.t_div} exceeds the number of time instances {m}")
        if self.subsample_size is not None and self.subsample_size < 0:
            raise SamplingError("subsample_size must be non-negative")
        if self.subsample_seed < 0:
            raise SamplingError("subsample_seed must be unsigned")


@dataclass(frozen=True)
class SampleSet:
    """Selected grid entries; arrays share one ordering."""

    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    src_row: np.ndarray
    src_col: np.ndarray

    def __post_init__(self):
        for name in ("t", "x", "u"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64).reshape(-1))
        for name in ("src_row", "src_col"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64).reshape(-1))
        sizes = {a.size for a in (self.t, self.x, self.u, self.src_row, self.src_col)}
        if len(sizes) != 1:
            raise SamplingError("sample arrays have inconsistent lengths")
        pairs = set(zip(self.src_row.tolist(), self.src_col.tolist()))
        if len(pairs) != self.src_row.size:
            raise SamplingError("duplicate (src_row, src_col) pairs in sample set")

    def __len__(self) -> int:
        return self.u.size

    @classmethod
    def from_indices(cls, snap: SnapshotMatrix, rows, cols) -> "SampleSet":
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        return cls(snap.t_grid[cols], snap.x_grid[rows], snap.values[rows, cols], rows, cols)

    def take(self, idx) -> "SampleSet":
        idx = np.asarray(idx, dtype=np.int64)
        return SampleSet(self.t[idx], self.x[idx], self.u[idx], self.src_row[idx], self.src_col[idx])

    def check_against(self, snap: SnapshotMatrix) -> None:
        """Raise unless every record addresses ``snap`` and carries its exact value."""
        if len(self) == 0:
            return
        if self.src_row.min() < 0 or self.src_row.max() >= snap.n or self.src_col.min() < 0 or self.src_col.max() >= snap.m:
            raise SamplingError("sample index outside the snapshot grid")
        if not np.array_equal(snap.values[self.src_row, self.src_col], self.u):
            raise SamplingError("sample values do not match the snapshot entries")


@dataclass(frozen=True)
class TruncatedSvd:
    Z_r: np.ndarray
    sigma_r: np.ndarray
    Yt_r: np.ndarray

    @property
    def r(self) -> int:
        return self.sigma_r.size


def energy_rank(sigma: np.ndarray, epsilon_thr: float) -> int:
    """Smallest r with ``1 - sum(sigma[:r]) / sum(sigma) < epsilon_thr``."""
    sigma = np.asarray(sigma, dtype=np.float64)
    total = sigma.sum()
    if not total > 0:
        raise SamplingError("all singular values are zero; no rank satisfies the energy criterion")
    deficit = 1.0 - np.cumsum(sigma) / total
    hits = np.nonzero(deficit < epsilon_thr)[0]
    # cumsum can land a few ulps short of the total; the full rank always qualifies
    return int(hits[0]) + 1 if hits.size else sigma.size


def truncated_svd(block: np.ndarray, epsilon_thr: float) -> TruncatedSvd:
    block = np.asarray(block, dtype=np.float64)
    if block.size == 0:
        raise SamplingError("empty block")
    if not np.all(np.isfinite(block)):
        raise SamplingError("block contains non-finite values")
    Z, sigma, Yt = np.linalg.svd(block, full_matrices=False)
    r = energy_rank(sigma, epsilon_thr)
    return TruncatedSvd(Z[:, :r], sigma[:r], Yt[:r, :])


def pivoted_qr_indices(M: np.ndarray) -> np.ndarray:
    """Greedy column pivots of ``M`` (r x k): the first r columns of a pivoted QR.

    Each step picks the column with the largest norm after projecting out the
    columns already chosen. Norms within a relative ``TIE_RTOL`` of the maximum
    count as ties and go to the lowest index.
    """
    M = np.array(M, dtype=np.float64, ndmin=2)
    r, k = M.shape
    if r > k:
        raise SamplingError(f"need r <= k, got {r}x{k}")
    R = M.copy()
    chosen: list[int] = []
    available = np.ones(k, dtype=bool)
    for _ in range(r):
        norms = np.sqrt(np.einsum("ij,ij->j", R, R))
        norms[~available] = -1.0
        best = norms.max()
        if best < PIVOT_FLOOR:
            raise RankDeficiencyError(
                f"residual column norms fell below {PIVOT_FLOOR:g} after {len(chosen)} of {r} pivots"
            )
        j = int(np.nonzero(norms >= best * (1 - TIE_RTOL))[0][0])
        chosen.append(j)
        available[j] = False
        q = R[:, j] / norms[j]
        # two Gram-Schmidt passes keep the residual orthogonal to working precision
        for _ in range(2):
            R -= np.outer(q, q @ R)
        R[:, j] = 0.0
    return np.array(chosen, dtype=np.int64)


def time_blocks(m: int, t_div: int) -> list[tuple[int, int]]:
    """Column ranges ``[k*m//t_div, (k+1)*m//t_div)``; sizes differ by at most one."""
    bounds = [(k * m) // t_div for k in range(t_div + 1)]
    return [(bounds[k], bounds[k + 1]) for k in range(t_div)]


def qdeim_block_ranks(snap: SnapshotMatrix, cfg: QdeimConfig) -> list[int]:
    cfg.validate(snap.m)
    return [truncated_svd(snap.values[:, a:b], cfg.epsilon_thr).r for a, b in time_blocks(snap.m, cfg.t_div)]


def qdeim_sample(snap: SnapshotMatrix, cfg: QdeimConfig) -> SampleSet:
    """Per time block: SVD truncation, pivoted QR on both singular blocks, r x r product grid."""
    cfg.validate(snap.m)
    rows, cols = [], []
    for b, (start, stop) in enumerate(time_blocks(snap.m, cfg.t_div)):
        if stop - start < 2:
            raise SamplingError(f"time block {b} has fewer than 2 columns")
        try:
            svd = truncated_svd(snap.values[:, start:stop], cfg.epsilon_thr)
            ind_x = pivoted_qr_indices(svd.Z_r.T)
            ind_t = pivoted_qr_indices(svd.Yt_r) + start
        except SamplingError as exc:
            raise type(exc)(f"time block {b}: {exc}") from exc
        rr, cc = np.meshgrid(ind_x, ind_t, indexing="ij")
        rows.append(rr.ravel())
        cols.append(cc.ravel())
    return SampleSet.from_indices(snap, np.concatenate(rows), np.concatenate(cols))


def subsample(samples: SampleSet, size: int, seed: int) -> SampleSet:
    """Uniform draw without replacement (xoshiro256** partial Fisher-Yates)."""
    if size > len(samples):
        raise SamplingError(f"subsample size {size} exceeds the {len(samples)} available samples")
    if size < 0:
        raise SamplingError("subsample size must be non-negative")
    return samples.take(partial_shuffle(len(samples), size, seed))


def save_samples(samples: SampleSet, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SAMPLE_HEADER)
        for row in zip(samples.t, samples.x, samples.u, samples.src_row, samples.src_col):
            w.writerow([repr(float(row[0])), repr(float(row[1])), repr(float(row[2])), int(row[3]), int(row[4])])


def load_samples(path) -> SampleSet:
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [h.strip() for h in rows[0]] != SAMPLE_HEADER:
        raise SamplingError(f"line 1: sample file header must be {','.join(SAMPLE_HEADER)}")
    cols: list[list] = [[] for _ in SAMPLE_HEADER]
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(SAMPLE_HEADER):
            raise SamplingError(f"line {lineno}: expected {len(SAMPLE_HEADER)} fields, found {len(row)}")
        try:
            for c, v, conv in zip(cols, row, (float, float, float, int, int)):
                c.append(conv(v))
        except ValueError as exc:
            raise SamplingError(f"line {lineno}: {exc}") from None
    return SampleSet(*cols)
