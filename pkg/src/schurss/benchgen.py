"""Synthetic benchmark inputs.

* random stable systems with at least one complex-conjugate eigenvalue pair,
* generalized binary noise (GBN) excitation,
* train / validation / test datasets with output noise on the training part,
* the four matrix families used to benchmark the state-matrix projection.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, PreconditionError
from .sysid import StateSpaceModel, simulate

__all__ = [
    "SystemSpec", "DatasetSplit", "random_stable_system", "gbn_sequence", "make_dataset",
    "projection_case", "save_dataset", "load_dataset", "PRESETS",
]

# (n_x, n_u, n_y, samples per sequence, sequences per partition, sigma, eig bound)
PRESETS = {
    "smaller": (5, 3, 3, 64, 1, 0.01, 0.99),
    "small": (5, 3, 3, 128, 1, 0.01, 0.99),
    "original": (5, 3, 3, 300, 1, 0.25, 0.99),
    "extended": (5, 3, 3, 1024, 1, 0.01, 0.95),
    "large": (10, 6, 6, 512, 8, 0.01, 0.90),
}


@dataclass(frozen=True)
class SystemSpec:
    n_x: int
    n_u: int
    n_y: int
    eig_bound: float = 0.99
    seed: int = 0

    def __post_init__(self):
        if min(self.n_x, self.n_u, self.n_y) < 1:
            raise PreconditionError("system dimensions must be positive")
        if not 0.0 < self.eig_bound <= 1.0:
            raise PreconditionError(f"eig_bound must lie in (0, 1], got {self.eig_bound}")


@dataclass
class DatasetSplit:
    train: list = field(default_factory=list)       # [(u, y), ...]
    validation: list = field(default_factory=list)
    test: list = field(default_factory=list)
    noise_sigma: float = 0.0
    gbn_p: float = 0.1

    def partitions(self):
        return {"train": self.train, "val": self.validation, "test": self.test}


def _rng(seed):
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(seed))


def _random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def random_stable_system(spec):
    """Seeded stable system ``A = Q blockdiag(...) Q^T``.

    Blocks are ``r R(theta)`` rotations (eigenvalues ``r exp(+-i theta)``)
    and real scalars ``+-r``; radii are uniform in ``[0.1, eig_bound]`` and
    angles uniform in ``[0, pi]``.  For ``n_x >= 2`` at least one rotation
    block is present; the number of scalars is otherwise random.
    """
    rng = _rng(spec.seed)
    n = spec.n_x
    lo = min(0.1, spec.eig_bound)
    blocks = []
    remaining = n
    if n >= 2:
        blocks.append(2)
        remaining -= 2
    while remaining > 0:
        if remaining >= 2 and rng.random() < 0.5:
            blocks.append(2)
            remaining -= 2
        else:
            blocks.append(1)
            remaining -= 1
    core = np.zeros((n, n))
    i = 0
    for size in blocks:
        r = rng.uniform(lo, spec.eig_bound)
        if size == 2:
            th = rng.uniform(0.0, math.pi)
            core[i:i + 2, i:i + 2] = r * np.array([[math.cos(th), -math.sin(th)],
                                                   [math.sin(th), math.cos(th)]])
        else:
            core[i, i] = r if rng.random() < 0.5 else -r
        i += size
    q = _random_orthogonal(rng, n)
    scale = 1.0 / math.sqrt(n)
    b = rng.standard_normal((n, spec.n_u)) * scale
    c = rng.standard_normal((spec.n_y, n)) * scale
    d = rng.standard_normal((spec.n_y, spec.n_u)) * scale
    return StateSpaceModel(a=q @ core @ q.T, b=b, c=c, d=d)


def gbn_sequence(length, channels, p, seed):
    """``(length, channels)`` array of +-1 values switching with probability ``p`` per step."""
    if not 0.0 <= p <= 1.0:
        raise PreconditionError(f"switching probability must lie in [0, 1], got {p}")
    rng = _rng(seed)
    start = np.where(rng.random(channels) < 0.5, -1.0, 1.0)
    if length == 0:
        return np.zeros((0, channels))
    flips = rng.random((length - 1, channels)) < p
    # sign at step k = start * (-1)^(number of flips so far)
    parity = np.vstack([np.zeros((1, channels), dtype=int), np.cumsum(flips, axis=0) % 2])
    return start * np.where(parity == 1, -1.0, 1.0)


def make_dataset(m, samples_per_seq, seqs_per_partition=1, noise_sigma=0.0, gbn_p=0.1,
                 seed=0):
    """Simulate train / validation / test partitions from ``x0 = 0``.

    Zero-mean Gaussian noise of scale ``noise_sigma`` is added to the
    training outputs only.
    """
    if samples_per_seq < 1 or seqs_per_partition < 1:
        raise PreconditionError("sample and sequence counts must be positive")
    seeds = np.random.SeedSequence(seed).spawn(3 * seqs_per_partition + 1)
    noise_rng = np.random.default_rng(seeds[-1])
    parts = []
    for p_idx in range(3):
        seqs = []
        for s_idx in range(seqs_per_partition):
            ss = seeds[p_idx * seqs_per_partition + s_idx]
            u = gbn_sequence(samples_per_seq, m.n_u, gbn_p, ss)
            y, _ = simulate(m, u)
            if p_idx == 0 and noise_sigma > 0:
                y = y + noise_sigma * noise_rng.standard_normal(y.shape)
            seqs.append((u, y))
        parts.append(seqs)
    return DatasetSplit(train=parts[0], validation=parts[1], test=parts[2],
                        noise_sigma=noise_sigma, gbn_p=gbn_p)


def projection_case(case, n, seed=0):
    """Projection benchmark matrices.

    1. all entries equal to 2;
    2. banded: -1 where ``i - j == -1`` or ``j - i`` in ``{0, 1, 2, 3}``, else 0;
    3. independent standard normal entries;
    4. independent uniform [0, 1] entries.
    """
    if n < 2:
        raise PreconditionError("n must be at least 2")
    if case == 1:
        return np.full((n, n), 2.0)
    if case == 2:
        i, j = np.indices((n, n))
        return np.where((i - j == -1) | ((j - i >= 0) & (j - i <= 3)), -1.0, 0.0)
    if case == 3:
        return _rng(seed).standard_normal((n, n))
    if case == 4:
        return _rng(seed).uniform(0.0, 1.0, (n, n))
    raise DomainError(f"unknown benchmark case {case!r}; expected 1, 2, 3 or 4")



# ---------------------------------------------------------------------------
# Dataset directory I/O
# ---------------------------------------------------------------------------

_FILES = {"train": "train.csv", "val": "val.csv", "test": "test.csv"}


def _write_partition(path, seqs, n_u, n_y):
    header = [f"u_{i + 1}" for i in range(n_u)] + [f"y_{i + 1}" for i in range(n_y)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if len(seqs) > 1:
            w.writerow(["seq"] + header)
        else:
            w.writerow(header)
        for s_idx, (u, y) in enumerate(seqs):
            for row_u, row_y in zip(u, y):
                vals = [repr(float(v)) for v in row_u] + [repr(float(v)) for v in row_y]
                w.writerow(([s_idx] if len(seqs) > 1 else []) + vals)


def _read_partition(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    has_seq = header[0] == "seq"
    cols = header[1:] if has_seq else header
    u_idx = [k for k, h in enumerate(cols) if h.startswith("u_")]
    y_idx = [k for k, h in enumerate(cols) if h.startswith("y_")]
    if not u_idx or not y_idx or len(u_idx) + len(y_idx) != len(cols):
        raise ValueError(f"{path}: expected columns u_1..u_nu, y_1..y_ny, got {header}")
    groups = {}
    for r in body:
        key = int(r[0]) if has_seq else 0
        vals = [float(v) for v in (r[1:] if has_seq else r)]
        groups.setdefault(key, []).append(vals)
    seqs = []
    for key in sorted(groups):
        arr = np.array(groups[key], dtype=float)
        seqs.append((arr[:, u_idx], arr[:, y_idx]))
    return seqs


def save_dataset(split, directory, system=None, meta=None):
    """Write ``train.csv``, ``val.csv``, ``test.csv`` and optionally ``system.json``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    u0, y0 = split.train[0]
    n_u, n_y = np.asarray(u0).shape[1], np.asarray(y0).shape[1]
    paths = []
    for key, seqs in split.partitions().items():
        p = d / _FILES[key]
        _write_partition(p, seqs, n_u, n_y)
        paths.append(str(p))
    if system is not None:
        p = d / "system.json"
        p.write_text(json.dumps(system.to_dict()))
        paths.append(str(p))
    if meta is not None:
        p = d / "dataset.json"
        p.write_text(json.dumps(meta, sort_keys=True))
        paths.append(str(p))
    return paths


def load_dataset(directory):
    """Read a dataset directory; returns ``(split, system_or_None)``."""
    d = Path(directory)
    parts = {key: _read_partition(d / name) for key, name in _FILES.items()}
    meta_path = d / "dataset.json"
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    split = DatasetSplit(train=parts["train"], validation=parts["val"], test=parts["test"],
                         noise_sigma=meta.get("sigma", 0.0), gbn_p=meta.get("gbn_p", 0.1))
    sys_path = d / "system.json"
    system = StateSpaceModel.load(sys_path) if sys_path.exists() else None
    return split, system
